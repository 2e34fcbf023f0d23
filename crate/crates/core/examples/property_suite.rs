//! The statistical property checks on a small run, then again with the
//! posterior renormalization deliberately skipped.

use sqht::alt_set::{sample_prior, AltSet, PriorMode};
use sqht::harness::{property_suite, PropertyOptions};
use sqht::quantum::DensityMatrix;
use sqht::sqprt::{Mutation, TestConfig};

fn main() -> sqht::Result<()> {
    let rho = DensityMatrix::diagonal(&[0.8, 0.2])?;
    let set = AltSet::with_null(
        vec![DensityMatrix::diagonal(&[0.3, 0.7])?, DensityMatrix::from_real(2, &[0.5, 0.2, 0.2, 0.5])?],
        &rho,
    )?;
    let prior = sample_prior(&set, 9, 0, PriorMode::VertexGrid)?;
    let config = TestConfig::new(rho, set, prior, 1.0, 1.0, 100_000)?;
    let opts = PropertyOptions { trials: 2_000, drift_samples: 100, ..PropertyOptions::default() };

    for (label, c) in [
        ("correct", config.clone()),
        ("no renormalization", config.with_mutation(Some(Mutation::SkipRenormalization))),
    ] {
        let report = property_suite(&c, &opts)?;
        println!("{label}: passed = {}, failed = {:?}", report.passed, report.failed_checks());
        for check in report.checks.iter().filter(|c| !c.passed) {
            println!("  ({}) {} k={:?} stat={:.4e} tol={:.3e}", check.check, check.name, check.k, check.statistic, check.tolerance);
        }
    }
    Ok(())
}
