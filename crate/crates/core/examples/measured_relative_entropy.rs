//! Best single-copy measurement between two states, checked against the
//! qubit grid search.

use sqht::mre::{mre_pair, oracle_mre_qubit, SolverOptions};
use sqht::quantum::DensityMatrix;

fn main() -> sqht::Result<()> {
    let rho = DensityMatrix::diagonal(&[0.8, 0.2])?;
    let sigma = DensityMatrix::from_bloch([0.4, 0.1, -0.3])?;
    let opts = SolverOptions::default();

    let forward = mre_pair(&rho, &sigma, &opts, 0)?;
    let backward = mre_pair(&sigma, &rho, &opts, 0)?;
    println!("D_M(rho || sigma) = {:.10} ({} iterations)", forward.value, forward.iterations);
    println!("D_M(sigma || rho) = {:.10}", backward.value);
    println!("grid oracle        = {:.10}", oracle_mre_qubit(&rho, &sigma, 2000)?);
    for (x, effect) in forward.povm.effects().iter().enumerate() {
        println!("effect {x}:\n{effect:.4}");
    }
    Ok(())
}
