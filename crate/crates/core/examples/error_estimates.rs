//! Type-I and worst-case type-II errors at fixed thresholds, with direct and
//! importance-sampling estimates side by side.

use sqht::alt_set::{sample_prior, AltSet, PriorMode};
use sqht::harness::{estimate_alpha, estimate_alpha_is, worst_case_beta, McOptions};
use sqht::quantum::DensityMatrix;
use sqht::sqprt::TestConfig;

fn main() -> sqht::Result<()> {
    let rho = DensityMatrix::diagonal(&[0.8, 0.2])?;
    let set = AltSet::with_null(
        vec![DensityMatrix::diagonal(&[0.3, 0.7])?, DensityMatrix::from_real(2, &[0.5, 0.2, 0.2, 0.5])?],
        &rho,
    )?;
    let prior = sample_prior(&set, 9, 0, PriorMode::VertexGrid)?;
    let probes = set.vertices().to_vec();
    let config = TestConfig::new(rho, set, prior, 3.0, 3.0, 100_000)?;
    let mc = McOptions::new(5_000, 11);

    let alpha = estimate_alpha(&config, &mc)?;
    let alpha_is = estimate_alpha_is(&config, &mc.derive(99))?;
    println!("alpha direct = {:.5} +- {:.5} (bound {:.5})", alpha.estimate.value, alpha.estimate.se, (-3.0f64).exp());
    println!("alpha mixture IS = {:.5} +- {:.5}", alpha_is.estimate.value, alpha_is.estimate.se);

    let e = worst_case_beta(&config, &probes, &mc)?;
    for p in &e.probes {
        println!(
            "probe {}: IS {:.5} +- {:.5}, direct {:.5} +- {:.5}, used {:?}",
            p.probe, p.beta_is.estimate.value, p.beta_is.estimate.se, p.beta_direct.estimate.value,
            p.beta_direct.estimate.se, p.method
        );
    }
    println!("beta_worst = {:.5} at probe {}", e.beta_worst.value, e.worst_probe);
    println!("E_rho[T] = {:.2}, max E_sigma[T] = {:.2}", e.e_t_null.value, e.e_t_alt_max.value);
    Ok(())
}
