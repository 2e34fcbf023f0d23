//! Realized error exponents against the reference values over a small grid
//! of threshold scales.

use sqht::alt_set::{sample_prior, AltSet, PriorMode};
use sqht::harness::{exponent_sweep, McOptions, SweepSettings};
use sqht::mre::SolverOptions;
use sqht::quantum::DensityMatrix;

fn main() -> sqht::Result<()> {
    let rho = DensityMatrix::diagonal(&[0.8, 0.2])?;
    let set = AltSet::with_null(
        vec![DensityMatrix::diagonal(&[0.3, 0.7])?, DensityMatrix::from_real(2, &[0.5, 0.2, 0.2, 0.5])?],
        &rho,
    )?;
    let prior = sample_prior(&set, 9, 0, PriorMode::VertexGrid)?;
    let settings = SweepSettings {
        n_grid: vec![4, 8, 16],
        tau: 0.05,
        k_max: 100_000,
        probes: sample_prior(&set, 5, 0, PriorMode::VertexGrid)?.atoms().to_vec(),
        mc: McOptions::new(2_000, 3),
        solver: SolverOptions::default(),
    };
    let report = exponent_sweep(&rho, &set, &prior, &settings)?;
    print!("{}", report.table());
    report.write_csv(std::io::stdout())?;
    Ok(())
}
