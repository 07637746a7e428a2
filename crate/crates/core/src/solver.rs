//! Shared solver configuration and small numeric helpers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SrdError};

/// Knobs shared by the non-convex inner-bound searches and the outer-bound
/// fixed-point iterations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Random starts per search, in addition to the deterministic ones.
    pub restarts: usize,
    /// Iteration cap of inner fixed-point loops.
    pub max_iters: usize,
    /// Convergence tolerance of inner fixed-point loops.
    pub tol: f64,
    /// Quadratic-penalty weights of the Markov-kernel search, applied in order.
    pub penalty_schedule: Vec<f64>,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            restarts: 4,
            max_iters: 5000,
            tol: 1e-10,
            penalty_schedule: vec![1e1, 1e2, 1e3, 1e4, 1e5, 1e6],
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts < 1 {
            return Err(SrdError::InvalidArgument("solver.restarts must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(SrdError::InvalidArgument("solver.tol must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(SrdError::InvalidArgument("solver.max_iters must be positive".into()));
        }
        if self.penalty_schedule.is_empty() || self.penalty_schedule.iter().any(|m| !(*m > 0.0)) {
            return Err(SrdError::InvalidArgument(
                "solver.penalty_schedule must be a non-empty list of positive weights".into(),
            ));
        }
        Ok(())
    }

    /// Independent generator for one `(purpose, index)` pair, so results do
    /// not depend on evaluation order.
    pub(crate) fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// Uniform draw from the probability simplex (flat Dirichlet).
pub(crate) fn random_simplex<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// Maps `f` over `items`, in parallel when the `parallel` feature is on. The
/// output order always follows the input order.
pub(crate) fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(usize, &T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
    }
}

/// Stream id derived from a purpose tag, a real parameter and an index, so
/// that a single-point call and the same point inside a curve share a stream.
pub(crate) fn stream_id(tag: u64, value: f64, index: u64) -> u64 {
    let mut z = value.to_bits() ^ tag.rotate_left(48) ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sum with Neumaier compensation; result independent of partitioning up to
/// rounding of the compensation itself.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
