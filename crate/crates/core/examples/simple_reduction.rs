//! A one-atom composite test and the plain pointwise test take identical
//! paths under the same seed.

use sqht::alt_set::{AltSet, ParticlePrior};
use sqht::mre::SolverOptions;
use sqht::quantum::DensityMatrix;
use sqht::sqprt::{run_simple_trial, run_trial, TestConfig, Truth};

fn main() -> sqht::Result<()> {
    let rho = DensityMatrix::diagonal(&[0.8, 0.2])?;
    let sigma = DensityMatrix::from_real(2, &[0.5, 0.2, 0.2, 0.5])?;
    let set = AltSet::new(vec![sigma.clone()])?;
    let config = TestConfig::new(rho.clone(), set, ParticlePrior::singleton(sigma.clone()), 3.0, 3.0, 10_000)?
        .with_seed(5);
    let mut same = 0;
    for i in 0..100 {
        let composite = run_trial(&config, Truth::Null, i)?;
        let simple = run_simple_trial(&rho, &sigma, &rho, 3.0, 3.0, 10_000, &SolverOptions::default(), 5, i)?;
        if composite.final_s_tilde.to_bits() == simple.final_s_tilde.to_bits()
            && composite.stopping_time == simple.stopping_time
        {
            same += 1;
        }
    }
    println!("{same}/100 trials bit-identical");
    Ok(())
}
