//! An alternative set given by its vertices: floor, membership, set-level
//! relative entropies and a grid prior.

use sqht::alt_set::{sample_prior, AltSet, PriorMode, MEMBERSHIP_TOL};
use sqht::mre::{mre_from_set, mre_to_set, SolverOptions};
use sqht::quantum::DensityMatrix;

fn main() -> sqht::Result<()> {
    let rho = DensityMatrix::diagonal(&[0.8, 0.2])?;
    let set = AltSet::with_null(
        vec![DensityMatrix::diagonal(&[0.3, 0.7])?, DensityMatrix::from_real(2, &[0.5, 0.2, 0.2, 0.5])?],
        &rho,
    )?;
    println!("delta = {}", set.delta());
    let mid = set.point(&[0.5, 0.5]);
    println!("midpoint inside: {}", set.contains(&mid, MEMBERSHIP_TOL)?);
    println!("maximally mixed inside: {}", set.contains(&DensityMatrix::maximally_mixed(2), MEMBERSHIP_TOL)?);

    let opts = SolverOptions::default();
    let to = mre_to_set(&rho, &set, &opts, 0)?;
    let from = mre_from_set(&set, &rho, &opts, 0)?;
    println!("D_M(rho || D) = {:.8} at weights {:?}", to.value, to.minimizer_weights);
    println!("D_M(D || rho) = {:.8} at weights {:?}", from.value, from.minimizer_weights);

    let prior = sample_prior(&set, 9, 0, PriorMode::VertexGrid)?;
    for (w, v) in prior.weights().iter().zip(prior.vertex_weights()) {
        println!("atom {v:.3?}  weight {w:.4}");
    }
    Ok(())
}
