use std::collections::VecDeque;

use super::pair::mre_pair_warm;
use super::{mre_pair, Direction, MreResult, SolverOptions, SOLVER_RANK_FLOOR};
use crate::error::{Error, Result};
use crate::quantum::{trace_norm, DensityMatrix, Povm};

const CAPACITY: usize = 16;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub exact_hits: usize,
    pub warm_solves: usize,
    pub cold_solves: usize,
}

struct Entry {
    sigma: DensityMatrix,
    direction: Direction,
    result: MreResult,
}

/// Optimal-measurement cache for one trajectory.
///
/// Queries are answered from the nearest previous query (in trace distance)
/// of the same direction: identical states reuse the stored measurement,
/// states within `cache_radius` re-solve from it, anything else is solved
/// cold. Not shared between trajectories.
pub struct PovmCache {
    rho: DensityMatrix,
    opts: SolverOptions,
    seed: u64,
    entries: VecDeque<Entry>,
    stats: CacheStats,
}

impl PovmCache {
    pub fn new(rho: DensityMatrix, opts: SolverOptions, seed: u64) -> Self {
        PovmCache { rho, opts, seed, entries: VecDeque::with_capacity(CAPACITY), stats: CacheStats::default() }
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn stats(&self) -> CacheStats {
        self.stats
    }

    /// Optimal measurement for `sigma` in the given direction.
    pub fn m_star(&mut self, sigma: &DensityMatrix, direction: Direction) -> Result<Povm> {
        Ok(self.query(sigma, direction)?.povm)
    }

    /// Like [`PovmCache::m_star`] but also returns the attained value.
    pub fn query(&mut self, sigma: &DensityMatrix, direction: Direction) -> Result<MreResult> {
        if sigma.dim() != self.rho.dim() {
            return Err(Error::DimensionMismatch { expected: self.rho.dim(), found: sigma.dim() });
        }
        let floor = sigma.min_eigenvalue();
        if floor <= SOLVER_RANK_FLOOR {
            return Err(Error::NotFullRank { min_eigenvalue: floor });
        }
        let mut nearest: Option<(usize, f64)> = None;
        for (i, e) in self.entries.iter().enumerate().rev() {
            if e.direction != direction {
                continue;
            }
            let dist = trace_norm(&(e.sigma.matrix() - sigma.matrix()));
            if nearest.is_none_or(|(_, d)| dist < d) {
                nearest = Some((i, dist));
                if dist == 0.0 {
                    break;
                }
            }
        }
        let (first, second) = match direction {
            Direction::NullDrift => (&self.rho, sigma),
            Direction::AltDrift => (sigma, &self.rho),
        };
        let result = match nearest {
            Some((i, dist)) if dist == 0.0 => {
                self.stats.exact_hits += 1;
                let mut hit = self.entries[i].result.clone();
                hit.iterations = 0;
                return Ok(hit);
            }
            Some((i, dist)) if dist <= self.opts.cache_radius => {
                self.stats.warm_solves += 1;
                mre_pair_warm(first, second, &self.entries[i].result.povm, &self.opts, self.seed)?
            }
            _ => {
                self.stats.cold_solves += 1;
                mre_pair(first, second, &self.opts, self.seed)?
            }
        };
        if self.entries.len() == CAPACITY {
            self.entries.pop_front();
        }
        self.entries.push_back(Entry { sigma: sigma.clone(), direction, result: result.clone() });
        Ok(result)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rho() -> DensityMatrix {
        DensityMatrix::diagonal(&[0.8, 0.2]).unwrap()
    }

    #[test]
    fn commuting_query_returns_eigenbasis_of_rho() {
        let mut cache = PovmCache::new(rho(), SolverOptions::default(), 0);
        let povm = cache.m_star(&DensityMatrix::diagonal(&[0.3, 0.7]).unwrap(), Direction::NullDrift).unwrap();
        let e = povm.effect(0);
        assert!(e[(0, 1)].norm() < 1e-9);
        assert!((e[(0, 0)].re - 1.0).abs() < 1e-9 || e[(0, 0)].re.abs() < 1e-9);
    }

    #[test]
    fn repeated_query_is_an_exact_hit() {
        let mut cache = PovmCache::new(rho(), SolverOptions::default(), 0);
        let sigma = DensityMatrix::from_bloch([0.3, 0.2, -0.1]).unwrap();
        let first = cache.query(&sigma, Direction::AltDrift).unwrap();
        let second = cache.query(&sigma, Direction::AltDrift).unwrap();
        assert_eq!(second.iterations, 0);
        assert_eq!(first.value, second.value);
        assert_eq!(cache.stats(), CacheStats { exact_hits: 1, warm_solves: 0, cold_solves: 1 });
        // the other direction is a separate entry
        cache.query(&sigma, Direction::NullDrift).unwrap();
        assert_eq!(cache.stats().cold_solves, 2);
    }

    #[test]
    fn warm_solve_matches_cold_solve() {
        let opts = SolverOptions { cache_radius: 0.5, ..SolverOptions::default() };
        let mut cache = PovmCache::new(rho(), opts, 0);
        let a = DensityMatrix::from_bloch([0.2, 0.0, -0.3]).unwrap();
        let b = DensityMatrix::from_bloch([0.4, 0.2, -0.4]).unwrap();
        let dist = crate::quantum::trace_distance(&a, &b).unwrap();
        assert!((dist - 0.3).abs() < 1e-12);
        cache.query(&a, Direction::NullDrift).unwrap();
        let warm = cache.query(&b, Direction::NullDrift).unwrap();
        assert_eq!(cache.stats().warm_solves, 1);
        let cold = mre_pair(&rho(), &b, &opts, 0).unwrap();
        assert!((warm.value - cold.value).abs() <= opts.tol);
    }
}
