//! Stationary analysis of the chain driven by a Markov test channel.
//!
//! The source emits `X_i` i.i.d. and the reconstruction follows
//! `Y_i ~ K(· | X_i, Y_{i-1})`. The pair process is a Markov chain whose
//! transition depends on the past only through `Y_{i-1}`, so the output chain
//! `T(y | ŷ) = Σ_x p(x) K(y | x, ŷ)` and its stationary law `π` determine
//! everything: the achievable rate is
//!
//! ```text
//! H(X) + H(Y₂|Y₁) − H(X₂,Y₂|X₁,Y₁) = Σ_ŷ π(ŷ) I(X; Y | Ŷ = ŷ)
//! ```
//!
//! and the expected distortion is `Σ π(ŷ) p(x) K(y|x,ŷ) d(x,y,ŷ)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SrdError};
use crate::info::entropy_bits;
use crate::problem::{DistortionTensor, MarkovKernel, SourcePmf};

/// Fixed-point tolerance in total variation (`‖πT − π‖₁`).
pub const STATIONARY_TOL: f64 = 1e-10;
/// Cap on squarings of the lazy chain, i.e. on `log₂` of the step count.
pub const MAX_SQUARINGS: u32 = 64;
/// Batches used for the Monte Carlo standard error.
pub const MC_BATCHES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryDistribution {
    pub pi: Vec<f64>,
    pub converged: bool,
    /// Number of chain steps the returned iterate corresponds to.
    pub iterations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryAnalysis {
    pub pi_y: Vec<f64>,
    pub rate_bits: f64,
    pub distortion: f64,
    pub converged: bool,
    pub iterations: u64,
}

/// A stationary quantity together with the convergence flag of the
/// underlying fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainValue {
    pub value: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    /// Time average of `d(X_i, Y_i, Y_{i-1})`.
    pub mean: f64,
    /// Batch-means standard error of `mean`.
    pub std_error: f64,
    pub samples: usize,
    /// The output chain has more than one closed class, so the time average
    /// depends on which class the trajectory enters.
    pub multiple_recurrent_classes: bool,
}

/// `T(y | ŷ) = Σ_x p(x) K(y | x, ŷ)`, returned as `t[ŷ][y]`.
pub fn induced_output_chain(k: &MarkovKernel, p: &SourcePmf) -> Result<Vec<Vec<f64>>> {
    k.check_source(p)?;
    let ny = k.y_size();
    let flat = output_chain_flat(p.probs(), k.flat(), ny);
    Ok(flat.chunks(ny).map(<[f64]>::to_vec).collect())
}

fn output_chain_flat(p: &[f64], k: &[f64], ny: usize) -> Vec<f64> {
    let mut t = vec![0.0; ny * ny];
    for (x, &px) in p.iter().enumerate() {
        let plane = &k[x * ny * ny..(x + 1) * ny * ny];
        for (acc, v) in t.iter_mut().zip(plane) {
            *acc += px * v;
        }
    }
    t
}

/// Stationary law of a row-stochastic matrix `t[ŷ][y]`.
///
/// Runs power iteration from the uniform start on the lazy chain
/// `½(I + T)`, whose iterates converge to the Cesàro limit of the plain
/// iterates even when `T` is periodic. The iteration advances by repeated
/// squaring, so `k` squarings cover `2^k` steps.
pub fn stationary_distribution(t: &[Vec<f64>]) -> Result<StationaryDistribution> {
    let n = t.len();
    if n == 0 {
        return Err(SrdError::InvalidKernel("transition matrix is empty".into()));
    }
    let mut flat = Vec::with_capacity(n * n);
    for (i, row) in t.iter().enumerate() {
        if row.len() != n {
            return Err(SrdError::DimensionMismatch(format!("transition row {i} has length {}", row.len())));
        }
        let s: f64 = row.iter().sum();
        if row.iter().any(|v| !v.is_finite() || *v < 0.0) || (s - 1.0).abs() > 1e-9 {
            return Err(SrdError::InvalidKernel(format!("transition row {i} is not a distribution")));
        }
        flat.extend_from_slice(row);
    }
    Ok(stationary_flat(&flat, n))
}

pub(crate) fn stationary_flat(t: &[f64], n: usize) -> StationaryDistribution {
    let mut m: Vec<f64> = t.iter().map(|v| 0.5 * v).collect();
    for i in 0..n {
        m[i * n + i] += 0.5;
    }
    let mut pi = vec![0.0; n];
    let mut prev = vec![f64::NAN; n];
    let mut next = vec![0.0; n * n];
    let mut steps: u64 = 1;
    for k in 0..=MAX_SQUARINGS {
        // π = u M with u uniform is the column mean of M.
        pi.iter_mut().for_each(|v| *v = 0.0);
        for row in m.chunks(n) {
            for (acc, v) in pi.iter_mut().zip(row) {
                *acc += v;
            }
        }
        let s: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|v| *v /= s);
        // A slowly mixing chain can have a tiny residual long before the
        // iterate settles, so also require two successive squarings to agree.
        let change: f64 = pi.iter().zip(&prev).map(|(a, b)| (a - b).abs()).sum();
        if change <= 1e-13 && residual(&pi, t, n) <= STATIONARY_TOL {
            return StationaryDistribution {
                pi,
                converged: true,
                iterations: steps,
            };
        }
        if k == MAX_SQUARINGS {
            break;
        }
        prev.copy_from_slice(&pi);
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for l in 0..n {
                    acc += m[i * n + l] * m[l * n + j];
                }
                next[i * n + j] = acc;
            }
            let row = &mut next[i * n..(i + 1) * n];
            let rs: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= rs);
        }
        std::mem::swap(&mut m, &mut next);
        steps = steps.saturating_mul(2);
    }
    StationaryDistribution {
        pi,
        converged: false,
        iterations: steps,
    }
}

fn residual(pi: &[f64], t: &[f64], n: usize) -> f64 {
    (0..n)
        .map(|j| {
            let v: f64 = (0..n).map(|i| pi[i] * t[i * n + j]).sum();
            (v - pi[j]).abs()
        })
        .sum()
}

/// Rate, distortion and `π` in one pass over the kernel.
pub fn analyze_stationary(k: &MarkovKernel, p: &SourcePmf, d: &DistortionTensor) -> Result<StationaryAnalysis> {
    k.check_problem(p, d)?;
    Ok(analyze_raw(p.probs(), k.flat(), k.y_size(), Some(d)))
}

pub(crate) fn analyze_raw(p: &[f64], k: &[f64], ny: usize, d: Option<&DistortionTensor>) -> StationaryAnalysis {
    let t = output_chain_flat(p, k, ny);
    let st = stationary_flat(&t, ny);
    let mut rate = 0.0;
    let mut dist = 0.0;
    for (yh, &w) in st.pi.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        let mut cond = 0.0;
        for (x, &px) in p.iter().enumerate() {
            let start = (x * ny + yh) * ny;
            let slice = &k[start..start + ny];
            cond += px * entropy_bits(slice);
            if let Some(d) = d {
                let e: f64 = slice.iter().enumerate().map(|(y, kv)| kv * d.get(x, y, yh)).sum();
                dist += w * px * e;
            }
        }
        rate += w * (entropy_bits(&t[yh * ny..(yh + 1) * ny]) - cond);
    }
    StationaryAnalysis {
        pi_y: st.pi,
        rate_bits: rate.max(0.0),
        distortion: dist,
        converged: st.converged,
        iterations: st.iterations,
    }
}

/// `H(X) + H(Y₂|Y₁) − H(X₂,Y₂|X₁,Y₁)` under the stationary law, in bits.
pub fn stationary_rate(k: &MarkovKernel, p: &SourcePmf) -> Result<ChainValue> {
    k.check_source(p)?;
    let a = analyze_raw(p.probs(), k.flat(), k.y_size(), None);
    Ok(ChainValue {
        value: a.rate_bits,
        converged: a.converged,
    })
}

/// `E[d(X, Y, Ŷ)]` under `π(ŷ) p(x) K(y | x, ŷ)`.
pub fn stationary_distortion(k: &MarkovKernel, p: &SourcePmf, d: &DistortionTensor) -> Result<ChainValue> {
    let a = analyze_stationary(k, p, d)?;
    Ok(ChainValue {
        value: a.distortion,
        converged: a.converged,
    })
}

/// Number of closed communicating classes of the support graph of `t`.
pub(crate) fn recurrent_class_count(t: &[f64], n: usize) -> usize {
    let mut reach = vec![false; n * n];
    for i in 0..n {
        reach[i * n + i] = true;
        for j in 0..n {
            if t[i * n + j] > 0.0 {
                reach[i * n + j] = true;
            }
        }
    }
    for l in 0..n {
        for i in 0..n {
            if reach[i * n + l] {
                for j in 0..n {
                    if reach[l * n + j] {
                        reach[i * n + j] = true;
                    }
                }
            }
        }
    }
    let recurrent: Vec<usize> = (0..n)
        .filter(|&i| (0..n).all(|j| !reach[i * n + j] || reach[j * n + i]))
        .collect();
    // Each class is counted once, through its smallest member.
    recurrent
        .iter()
        .filter(|&&i| recurrent.iter().all(|&j| j >= i || !(reach[i * n + j] && reach[j * n + i])))
        .count()
}

fn sample(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    // Rounding left `u` past the last cumulative sum: take the last symbol
    // with positive weight.
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

/// Runs the source and the test channel for `n` steps from `Y_0 = y0` and
/// returns the time-averaged distortion with a batch-means standard error.
pub fn simulate_chain(
    k: &MarkovKernel,
    p: &SourcePmf,
    d: &DistortionTensor,
    n: usize,
    seed: u64,
    y0: usize,
) -> Result<SimulationResult> {
    k.check_problem(p, d)?;
    if n == 0 {
        return Err(SrdError::InvalidArgument("simulation length must be at least 1".into()));
    }
    if y0 >= k.y_size() {
        return Err(SrdError::InvalidArgument(format!(
            "initial symbol {y0} outside reconstruction alphabet of size {}",
            k.y_size()
        )));
    }
    let ny = k.y_size();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let batches = MC_BATCHES.min(n);
    let base = n / batches;
    let extra = n % batches;
    let mut batch_means = Vec::with_capacity(batches);
    let mut total = 0.0;
    let mut prev = y0;
    for b in 0..batches {
        let len = base + usize::from(b < extra);
        let mut acc = 0.0;
        for _ in 0..len {
            let x = sample(p.probs(), rng.gen());
            let y = sample(k.slice(x, prev), rng.gen());
            acc += d.get(x, y, prev);
            prev = y;
        }
        total += acc;
        batch_means.push(acc / len as f64);
    }
    let mean = total / n as f64;
    let std_error = if batches > 1 {
        let bm = batch_means.iter().sum::<f64>() / batches as f64;
        let var = batch_means.iter().map(|v| (v - bm).powi(2)).sum::<f64>() / (batches - 1) as f64;
        (var / batches as f64).sqrt()
    } else {
        0.0
    };
    let t = output_chain_flat(p.probs(), k.flat(), ny);
    Ok(SimulationResult {
        mean,
        std_error,
        samples: n,
        multiple_recurrent_classes: recurrent_class_count(&t, ny) > 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::mutual_information;
    use crate::problem::MemorylessKernel;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn uniform2() -> SourcePmf {
        SourcePmf::uniform(2).unwrap()
    }

    fn constant_one() -> MarkovKernel {
        MarkovKernel::from_fn(2, 2, |y, _, _| f64::from(u8::from(y == 1))).unwrap()
    }

    #[test]
    fn output_chain_examples() {
        let p = uniform2();
        let id = MarkovKernel::from_memoryless(&MemorylessKernel::identity(2));
        assert_eq!(induced_output_chain(&id, &p).unwrap(), vec![vec![0.5, 0.5]; 2]);
        let frozen = MarkovKernel::from_fn(2, 2, |y, _, yh| f64::from(u8::from(y == yh))).unwrap();
        assert_eq!(induced_output_chain(&frozen, &p).unwrap(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let bsc = MarkovKernel::from_memoryless(&MemorylessKernel::bsc(0.2).unwrap());
        for row in induced_output_chain(&bsc, &p).unwrap() {
            assert_abs_diff_eq!(row[0], 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(row[1], 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn stationary_examples() {
        let s = stationary_distribution(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert!(s.converged);
        assert_abs_diff_eq!(s.pi[0], 0.5, epsilon = 1e-15);
        let s = stationary_distribution(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(s.pi, vec![0.5, 0.5]);
        let s = stationary_distribution(&[vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert!(s.converged);
        assert_abs_diff_eq!(s.pi[1], 1.0, epsilon = 1e-12);
        // Periodic chain: the lazy iteration still settles.
        let s = stationary_distribution(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(s.converged);
        assert_abs_diff_eq!(s.pi[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn stationary_slow_mixing_chain() {
        // Mixing time ~1e9 steps; π = (b, a)/(a+b).
        let (a, b) = (1e-9, 3e-9);
        let s = stationary_distribution(&[vec![1.0 - a, a], vec![b, 1.0 - b]]).unwrap();
        assert!(s.converged);
        assert_abs_diff_eq!(s.pi[0], 0.75, epsilon = 1e-6);
    }

    #[test]
    fn stationary_rejects_bad_matrix() {
        assert!(stationary_distribution(&[vec![0.5, 0.4], vec![0.5, 0.5]]).is_err());
        assert!(stationary_distribution(&vec![vec![1.0]; 2]).is_err());
        assert!(stationary_distribution(&[]).is_err());
    }

    #[test]
    fn rate_examples() {
        let p = uniform2();
        let id = MarkovKernel::from_memoryless(&MemorylessKernel::identity(2));
        assert_abs_diff_eq!(stationary_rate(&id, &p).unwrap().value, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(stationary_rate(&constant_one(), &p).unwrap().value, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn distortion_examples() {
        let p = uniform2();
        let d = DistortionTensor::fig2(1.0).unwrap();
        let id = MarkovKernel::from_memoryless(&MemorylessKernel::identity(2));
        assert_abs_diff_eq!(stationary_distortion(&id, &p, &d).unwrap().value, 0.25, epsilon = 1e-12);
        for c in [0.0, 0.5, 3.0] {
            let d = DistortionTensor::fig2(c).unwrap();
            assert_abs_diff_eq!(stationary_distortion(&constant_one(), &p, &d).unwrap().value, 0.5, epsilon = 1e-12);
        }
        let k = DistortionTensor::constant(2, 2, 1.7).unwrap();
        let any = MarkovKernel::new(&[vec![vec![0.3, 0.7], vec![0.9, 0.1]], vec![vec![0.5, 0.5], vec![0.2, 0.8]]]).unwrap();
        assert_abs_diff_eq!(stationary_distortion(&any, &p, &k).unwrap().value, 1.7, epsilon = 1e-12);
    }

    /// Brute-force the rate from its defining entropies over the stationary
    /// pair chain on 𝒳×𝒴, without the conditional-information shortcut.
    fn rate_from_pair_chain(k: &MarkovKernel, p: &SourcePmf) -> f64 {
        let nx = p.len();
        let ny = k.y_size();
        let t = induced_output_chain(k, p).unwrap();
        let pi = stationary_distribution(&t).unwrap().pi;
        // Stationary pair law π(x̂, ŷ) = p(x̂) π(ŷ) is not true in general; the
        // pair chain's stationary law is Σ_{ŷ'} π(ŷ') p(x̂) K(ŷ|x̂,ŷ').
        let pair = |xh: usize, yh: usize| (0..ny).map(|yp| pi[yp] * p.probs()[xh] * k.prob(yh, xh, yp)).sum::<f64>();
        let mut h_y2_given_y1 = 0.0;
        let mut h_xy2_given_xy1 = 0.0;
        for yh in 0..ny {
            h_y2_given_y1 += pi[yh] * entropy_bits(&t[yh]);
            for xh in 0..nx {
                let w = pair(xh, yh);
                let next: Vec<f64> = (0..nx)
                    .flat_map(|x| (0..ny).map(move |y| (x, y)))
                    .map(|(x, y)| p.probs()[x] * k.prob(y, x, yh))
                    .collect();
                h_xy2_given_xy1 += w * entropy_bits(&next);
            }
        }
        entropy_bits(p.probs()) + h_y2_given_y1 - h_xy2_given_xy1
    }

    #[test]
    fn rate_matches_pair_chain_entropies() {
        let p = SourcePmf::new(vec![0.3, 0.7]).unwrap();
        let k = MarkovKernel::new(&[
            vec![vec![0.1, 0.6, 0.3], vec![0.5, 0.5, 0.0], vec![0.2, 0.2, 0.6]],
            vec![vec![0.7, 0.1, 0.2], vec![0.3, 0.3, 0.4], vec![0.0, 0.9, 0.1]],
        ])
        .unwrap();
        assert_abs_diff_eq!(stationary_rate(&k, &p).unwrap().value, rate_from_pair_chain(&k, &p), epsilon = 1e-12);
    }

    #[test]
    fn simulation_examples() {
        let p = uniform2();
        let d = DistortionTensor::fig2(1.0).unwrap();
        let a = simulate_chain(&constant_one(), &p, &d, 10_000, 7, 1).unwrap();
        let b = simulate_chain(&constant_one(), &p, &d, 10_000, 7, 1).unwrap();
        assert_eq!(a, b);
        // Y is frozen at 1 but X is random: the cost is the fraction of X = 0.
        assert!((a.mean - 0.5).abs() <= 4.0 * a.std_error + 1e-12);
        assert!(simulate_chain(&constant_one(), &p, &d, 0, 7, 1).is_err());
        assert!(simulate_chain(&constant_one(), &p, &d, 10, 7, 2).is_err());
    }

    #[test]
    fn simulation_flags_multiple_closed_classes() {
        let p = uniform2();
        let d = DistortionTensor::fig2(1.0).unwrap();
        let frozen = MarkovKernel::from_fn(2, 2, |y, _, yh| f64::from(u8::from(y == yh))).unwrap();
        assert!(simulate_chain(&frozen, &p, &d, 100, 1, 0).unwrap().multiple_recurrent_classes);
        let id = MarkovKernel::from_memoryless(&MemorylessKernel::identity(2));
        assert!(!simulate_chain(&id, &p, &d, 100, 1, 0).unwrap().multiple_recurrent_classes);
    }

    #[test]
    fn class_count() {
        assert_eq!(recurrent_class_count(&[1.0, 0.0, 0.0, 1.0], 2), 2);
        assert_eq!(recurrent_class_count(&[0.0, 1.0, 0.0, 1.0], 2), 1);
        assert_eq!(recurrent_class_count(&[0.0, 1.0, 1.0, 0.0], 2), 1);
        assert_eq!(recurrent_class_count(&[0.5, 0.5, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0], 3), 2);
    }

    fn simplex(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.01f64..1.0, n).prop_map(|v| {
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect()
        })
    }

    proptest! {
        #[test]
        fn memoryless_rate_is_mutual_information(
            p in simplex(3),
            rows in prop::collection::vec(simplex(4), 3),
        ) {
            let p = SourcePmf::from_normalized(p);
            let w = MemorylessKernel::from_flat_normalized(3, 4, rows.concat());
            let k = MarkovKernel::from_memoryless(&w);
            let rate = stationary_rate(&k, &p).unwrap();
            prop_assert!(rate.converged);
            let mi = mutual_information(&w.joint(&p)).unwrap();
            prop_assert!((rate.value - mi).abs() <= 1e-9);
        }

        #[test]
        fn rate_within_entropy_bounds(table in prop::collection::vec(simplex(3), 6), p in simplex(2)) {
            let k = MarkovKernel::from_flat_normalized(2, 3, table.concat());
            let p = SourcePmf::from_normalized(p);
            let r = stationary_rate(&k, &p).unwrap();
            prop_assert!(r.value >= -1e-9);
            prop_assert!(r.value <= entropy_bits(p.probs()) + 3f64.log2() + 1e-9);
            let t = induced_output_chain(&k, &p).unwrap();
            let s = stationary_distribution(&t).unwrap();
            if s.converged {
                let flat: Vec<f64> = t.concat();
                prop_assert!(residual(&s.pi, &flat, 3) <= STATIONARY_TOL);
            }
        }
    }
}
