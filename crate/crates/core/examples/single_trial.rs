//! One trial of the mixture test, stepped by hand, then the same trial run
//! to its decision with a trace.

use sqht::alt_set::{sample_prior, AltSet, PriorMode};
use sqht::quantum::DensityMatrix;
use sqht::sqprt::{TestConfig, Trajectory, Truth};

fn main() -> sqht::Result<()> {
    let rho = DensityMatrix::diagonal(&[0.8, 0.2])?;
    let set = AltSet::with_null(
        vec![DensityMatrix::diagonal(&[0.3, 0.7])?, DensityMatrix::from_real(2, &[0.5, 0.2, 0.2, 0.5])?],
        &rho,
    )?;
    let prior = sample_prior(&set, 9, 0, PriorMode::VertexGrid)?;
    let config = TestConfig::new(rho, set, prior, 4.0, 4.0, 10_000)?.with_seed(7);

    let mut t = Trajectory::new(&config, Truth::Null, 0)?;
    for _ in 0..5 {
        let r = t.step()?;
        println!(
            "k={} {:?} outcome={} z={:+.4} S~={:+.4}",
            r.k, r.branch, r.outcome, r.z_tilde, r.s_tilde
        );
    }

    let outcome = Trajectory::new(&config, Truth::Null, 0)?.with_trace().run()?;
    println!("{:?} after {} steps, S~ = {:.4}", outcome.decision, outcome.stopping_time, outcome.final_s_tilde);
    for line in outcome.trace.unwrap_or_default().iter().take(3) {
        println!("{}", serde_json::to_string(line).unwrap());
    }
    Ok(())
}
