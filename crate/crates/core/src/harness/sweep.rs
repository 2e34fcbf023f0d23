use std::io::Write;

use serde::Serialize;

use super::{estimate_alpha_is, worst_case_beta, ErrorEstimates, Estimate, McOptions, RateEstimate};
use crate::alt_set::{AltSet, ParticlePrior};
use crate::error::{Error, Result};
use crate::mre::{mre_from_set, mre_to_set, SetMreResult, SolverOptions};
use crate::quantum::DensityMatrix;
use crate::sqprt::{thresholds_for, TestConfig};

pub const CSV_HEADER: [&str; 11] = [
    "n",
    "A",
    "B",
    "alpha_hat",
    "alpha_se",
    "beta_worst",
    "e_t_null",
    "e_t_alt_max",
    "truncation_rate",
    "realized_R0",
    "realized_R1",
];

#[derive(Clone, Debug)]
pub struct SweepSettings {
    pub n_grid: Vec<usize>,
    pub tau: f64,
    pub k_max: usize,
    /// States over which the worst type-II error is taken.
    pub probes: Vec<DensityMatrix>,
    pub mc: McOptions,
    pub solver: SolverOptions,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub estimates: ErrorEstimates,
    /// Type-I error through the mixture change of measure, for comparison.
    pub alpha_is: RateEstimate,
    /// log(1/alpha)/n with a delta-method standard error.
    pub realized_r0: Estimate,
    /// log(1/beta_worst)/n with a delta-method standard error.
    pub realized_r1: Estimate,
    pub e_t_null_over_n: f64,
    pub e_t_alt_over_n: f64,
    /// log(1/alpha)/E_alt[T] and log(1/beta_worst)/E_null[T].
    pub per_sample_r0: f64,
    pub per_sample_r1: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExponentReport {
    pub n_grid: Vec<usize>,
    pub tau: f64,
    /// D_M(rho || D)
    pub d_rho_to_set: f64,
    /// D_M(D || rho)
    pub d_set_to_rho: f64,
    pub trials: usize,
    pub seed: u64,
    pub k_max: usize,
    pub probes: Vec<DensityMatrix>,
    pub rows: Vec<SweepRow>,
    /// alpha non-increasing along n_grid within 3 SE.
    pub alpha_monotone: bool,
    /// Per-sample exponents stay below the reference values within 3 SE plus solver tolerance.
    pub converse_consistent: bool,
}

fn log_rate(p: &Estimate, n: f64) -> Estimate {
    Estimate { value: (1.0 / p.value).ln() / n, se: p.se / (p.value * n) }
}

/// Error probabilities and realized exponents along a grid of threshold scales.
pub fn exponent_sweep(
    rho: &DensityMatrix,
    set: &AltSet,
    prior: &ParticlePrior,
    settings: &SweepSettings,
) -> Result<ExponentReport> {
    if settings.n_grid.is_empty() {
        return Err(Error::Config("n_grid is empty".into()));
    }
    if settings.n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("n_grid must be strictly increasing".into()));
    }
    let (to, from) = reference_values(rho, set, &settings.solver, settings.mc.seed)?;
    // validates tau before any simulation
    thresholds_for(settings.n_grid[0], settings.tau, to.value, from.value)?;

    let base = TestConfig::new(rho.clone(), set.clone(), prior.clone(), 1.0, 1.0, settings.k_max)?
        .with_solver(settings.solver);
    let mut rows = Vec::with_capacity(settings.n_grid.len());
    for (r, &n) in settings.n_grid.iter().enumerate() {
        let (a, b) = thresholds_for(n, settings.tau, to.value, from.value)?;
        log::info!("sweep n={n}: A={a:.4} B={b:.4}");
        let config = base.clone().with_thresholds(a, b)?;
        let mc = settings.mc.derive(r as u64);
        let estimates = worst_case_beta(&config, &settings.probes, &mc)?;
        let alpha_is = estimate_alpha_is(&config, &mc.derive(u64::MAX))?;
        let nf = n as f64;
        let alpha = estimates.alpha.estimate;
        let beta = estimates.beta_worst;
        rows.push(SweepRow {
            n,
            a,
            b,
            alpha_is,
            realized_r0: log_rate(&alpha, nf),
            realized_r1: log_rate(&beta, nf),
            e_t_null_over_n: estimates.e_t_null.value / nf,
            e_t_alt_over_n: estimates.e_t_alt_max.value / nf,
            per_sample_r0: (1.0 / alpha.value).ln() / estimates.e_t_alt_max.value,
            per_sample_r1: (1.0 / beta.value).ln() / estimates.e_t_null.value,
            estimates,
        });
    }
    let alpha_monotone = rows.windows(2).all(|w| {
        let (x, y) = (w[0].estimates.alpha.estimate, w[1].estimates.alpha.estimate);
        y.value <= x.value + 3.0 * (x.se * x.se + y.se * y.se).sqrt()
    });
    let tol = settings.solver.tol;
    let converse_consistent = rows.iter().all(|row| {
        let r0 = row.per_sample_r0;
        let r1 = row.per_sample_r1;
        let se0 = row.realized_r0.se * row.n as f64 / row.estimates.e_t_alt_max.value;
        let se1 = row.realized_r1.se * row.n as f64 / row.estimates.e_t_null.value;
        !(r0 > from.value + 3.0 * se0 + tol) && !(r1 > to.value + 3.0 * se1 + tol)
    });
    Ok(ExponentReport {
        n_grid: settings.n_grid.clone(),
        tau: settings.tau,
        d_rho_to_set: to.value,
        d_set_to_rho: from.value,
        trials: settings.mc.trials,
        seed: settings.mc.seed,
        k_max: settings.k_max,
        probes: settings.probes.clone(),
        rows,
        alpha_monotone,
        converse_consistent,
    })
}

/// (D_M(rho || D), D_M(D || rho)).
pub(crate) fn reference_values(
    rho: &DensityMatrix,
    set: &AltSet,
    solver: &SolverOptions,
    seed: u64,
) -> Result<(SetMreResult, SetMreResult)> {
    Ok((mre_to_set(rho, set, solver, seed)?, mre_from_set(set, rho, solver, seed)?))
}

impl SweepRow {
    fn csv_record(&self) -> [String; 11] {
        let e = &self.estimates;
        [
            self.n.to_string(),
            self.a.to_string(),
            self.b.to_string(),
            e.alpha.estimate.value.to_string(),
            e.alpha.estimate.se.to_string(),
            e.beta_worst.value.to_string(),
            e.e_t_null.value.to_string(),
            e.e_t_alt_max.value.to_string(),
            e.truncation_rate.to_string(),
            self.realized_r0.value.to_string(),
            self.realized_r1.value.to_string(),
        ]
    }
}

impl ExponentReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for row in &self.rows {
            w.write_record(row.csv_record())?;
        }
        w.flush()?;
        Ok(())
    }

    /// Realized versus reference exponents, one line per n.
    pub fn table(&self) -> String {
        let mut s = format!(
            "reference: D(rho||D) = {:.5}, D(D||rho) = {:.5}, tau = {:.5}\n",
            self.d_rho_to_set, self.d_set_to_rho, self.tau
        );
        s.push_str("    n   alpha_hat   beta_worst   R0 (ref)          R1 (ref)          E0[T]/n  E1[T]/n\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{:>5}  {:>10.3e}  {:>10.3e}   {:.4} ({:.4})   {:.4} ({:.4})   {:.3}    {:.3}\n",
                r.n,
                r.estimates.alpha.estimate.value,
                r.estimates.beta_worst.value,
                r.realized_r0.value,
                self.d_set_to_rho - self.tau,
                r.realized_r1.value,
                self.d_rho_to_set - self.tau,
                r.e_t_null_over_n,
                r.e_t_alt_over_n,
            ));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alt_set::{sample_prior, PriorMode};

    fn r1() -> (DensityMatrix, AltSet, ParticlePrior) {
        let set = AltSet::new(vec![
            DensityMatrix::diagonal(&[0.3, 0.7]).unwrap(),
            DensityMatrix::from_real(2, &[0.5, 0.2, 0.2, 0.5]).unwrap(),
        ])
        .unwrap();
        let prior = sample_prior(&set, 9, 0, PriorMode::VertexGrid).unwrap();
        (DensityMatrix::diagonal(&[0.8, 0.2]).unwrap(), set, prior)
    }

    fn settings(n_grid: Vec<usize>, tau: f64, probes: Vec<DensityMatrix>) -> SweepSettings {
        SweepSettings { n_grid, tau, k_max: 2000, probes, mc: McOptions::new(300, 4), solver: SolverOptions::default() }
    }

    #[test]
    fn single_n_gives_one_row() {
        let (rho, set, prior) = r1();
        let report = exponent_sweep(&rho, &set, &prior, &settings(vec![5], 0.05, set.vertices().to_vec())).unwrap();
        assert_eq!(report.rows.len(), 1);
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
        assert_eq!(text.lines().count(), 2);
    }

    #[test]
    fn tau_checked_before_simulation() {
        let (rho, set, prior) = r1();
        let err = exponent_sweep(&rho, &set, &prior, &settings(vec![4], 0.5, set.vertices().to_vec()));
        assert!(matches!(err, Err(Error::TauOutOfRange { .. })));
        let err = exponent_sweep(&rho, &set, &prior, &settings(vec![8, 4], 0.05, set.vertices().to_vec()));
        assert!(matches!(err, Err(Error::Config(_))));
    }
}
