//! Outcome distributions of a qubit state under a few measurements.

use sqht::quantum::{born_distribution, kl_divergence, DensityMatrix, Povm};

fn main() -> sqht::Result<()> {
    let rho = DensityMatrix::diagonal(&[0.8, 0.2])?;
    let sigma = DensityMatrix::from_real(2, &[0.5, 0.2, 0.2, 0.5])?;

    for (name, povm) in [
        ("z basis", Povm::computational(2)),
        ("x basis", Povm::qubit_axis([1.0, 0.0, 0.0])),
        ("tilted", Povm::qubit_axis([0.6, 0.0, 0.8])),
    ] {
        let p = born_distribution(&rho, &povm)?;
        let q = born_distribution(&sigma, &povm)?;
        println!(
            "{name:<8} P_rho = {:?}  P_sigma = {:?}  KL = {:.6}",
            p.probs(),
            q.probs(),
            kl_divergence(&p, &q)
        );
    }
    Ok(())
}
