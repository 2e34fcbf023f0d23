//! JSON wire forms (schema v1) shared by states, measurements and configs.

use serde::{Deserialize, Serialize};

use crate::linalg::{c, CMatrix};

pub const SCHEMA_VERSION: &str = "v1";

/// Row-major matrix of `[re, im]` pairs.
pub type MatrixRows = Vec<Vec<[f64; 2]>>;

pub fn to_rows(m: &CMatrix) -> MatrixRows {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn from_rows(rows: &MatrixRows) -> Result<CMatrix, String> {
    let n = rows.len();
    if n == 0 {
        return Err("matrix has no rows".into());
    }
    if let Some(bad) = rows.iter().position(|r| r.len() != n) {
        return Err(format!("row {bad} has {} entries, expected {n}", rows[bad].len()));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| c(rows[i][j][0], rows[i][j][1])))
}

pub fn check_version(v: &Option<String>) -> Result<(), String> {
    match v.as_deref() {
        None | Some(SCHEMA_VERSION) => Ok(()),
        Some(other) => Err(format!("unsupported schema version {other:?}, expected {SCHEMA_VERSION:?}")),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateWire {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub entries: MatrixRows,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PovmWire {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub outcomes: Vec<String>,
    pub effects: Vec<MatrixRows>,
}
