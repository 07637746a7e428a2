//! Exact finite-blocklength distortion by exhaustive codebook search.
//!
//! For a fixed codebook the best encoder maps each source block to its
//! cheapest codeword, so minimizing over unordered codebooks gives the
//! operational optimum exactly.

use serde::{Deserialize, Serialize};

use crate::curve::BoundCurve;
use crate::error::{Result, SrdError};
use crate::inner::feasibility_range;
use crate::problem::{DistortionTensor, SourcePmf};
use crate::solver::{compensated_sum, par_map, SolverConfig};

/// Largest number of codebooks enumerated.
pub const CODEBOOK_LIMIT: f64 = 1e7;
/// Largest number of source blocks summed over.
pub const SOURCE_BLOCK_LIMIT: f64 = 1e5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub n: usize,
    pub num_messages: usize,
    /// Reconstruction symbol preceding each block.
    pub y0: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub n: usize,
    pub num_messages: usize,
    pub y0: usize,
    /// `log₂(num_messages) / n`, bits.
    pub rate: f64,
    pub d_star: f64,
    /// Codewords of the first optimal codebook in enumeration order.
    pub codebook: Vec<Vec<usize>>,
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn digits(mut v: usize, base: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for slot in out.iter_mut() {
        *slot = v % base;
        v /= base;
    }
    out
}

pub fn operational_distortion(p: &SourcePmf, d: &DistortionTensor, cfg: &OracleConfig) -> Result<OracleResult> {
    d.check_source(p)?;
    let (nx, ny) = (d.x_size(), d.y_size());
    if cfg.n == 0 {
        return Err(SrdError::InvalidArgument("blocklength must be at least 1".into()));
    }
    if cfg.y0 >= ny {
        return Err(SrdError::InvalidArgument(format!("y0 = {} is outside the reconstruction alphabet", cfg.y0)));
    }
    let words_f = (ny as f64).powi(cfg.n as i32);
    let blocks_f = (nx as f64).powi(cfg.n as i32);
    if cfg.num_messages == 0 || cfg.num_messages as f64 > words_f {
        return Err(SrdError::InvalidArgument(format!(
            "num_messages must lie in 1..={words_f}, got {}",
            cfg.num_messages
        )));
    }
    if blocks_f > SOURCE_BLOCK_LIMIT {
        return Err(SrdError::SizeGuard(format!(
            "{blocks_f} source blocks exceed the limit {SOURCE_BLOCK_LIMIT}; use a smaller n"
        )));
    }
    let words = words_f as usize;
    let count = binomial(words, cfg.num_messages);
    if count > CODEBOOK_LIMIT {
        return Err(SrdError::SizeGuard(format!(
            "{count} codebooks exceed the limit {CODEBOOK_LIMIT}; use a smaller n or fewer messages"
        )));
    }
    let blocks = blocks_f as usize;
    let pr = p.probs();

    // cost[b * words + w] = n·d̄(x^n(b), y^n(w)); weight[b] = Π p(x_i).
    let mut cost = vec![0.0; blocks * words];
    let mut weight = vec![0.0; blocks];
    let word_digits: Vec<Vec<usize>> = (0..words).map(|w| digits(w, ny, cfg.n)).collect();
    for b in 0..blocks {
        let xs = digits(b, nx, cfg.n);
        weight[b] = xs.iter().map(|&x| pr[x]).product();
        for (w, ys) in word_digits.iter().enumerate() {
            let mut prev = cfg.y0;
            let mut acc = 0.0;
            for (&x, &y) in xs.iter().zip(ys) {
                acc += d.get(x, y, prev);
                prev = y;
            }
            cost[b * words + w] = acc / cfg.n as f64;
        }
    }
    let eval = |combo: &[usize]| -> f64 {
        compensated_sum((0..blocks).filter(|&b| weight[b] > 0.0).map(|b| {
            let row = &cost[b * words..(b + 1) * words];
            weight[b] * combo.iter().map(|&w| row[w]).fold(f64::INFINITY, f64::min)
        }))
    };

    let m = cfg.num_messages;
    let firsts: Vec<usize> = (0..=words - m).collect();
    let per_first = par_map(&firsts, |_, &first| {
        let mut combo: Vec<usize> = (first..first + m).collect();
        let mut best = (eval(&combo), combo.clone());
        // Enumerate the remaining m − 1 indices in lexicographic order.
        loop {
            let mut i = m;
            let mut found = false;
            while i > 1 {
                i -= 1;
                if combo[i] < words - (m - i) {
                    found = true;
                    break;
                }
            }
            if !found {
                break;
            }
            combo[i] += 1;
            for j in i + 1..m {
                combo[j] = combo[j - 1] + 1;
            }
            let v = eval(&combo);
            if v < best.0 {
                best = (v, combo.clone());
            }
        }
        best
    });
    let (d_star, combo) = per_first
        .into_iter()
        .reduce(|a, b| if b.0 < a.0 { b } else { a })
        .expect("at least one codebook");
    Ok(OracleResult {
        n: cfg.n,
        num_messages: m,
        y0: cfg.y0,
        rate: (m as f64).log2() / cfg.n as f64,
        d_star,
        codebook: combo.iter().map(|&w| word_digits[w].clone()).collect(),
    })
}

/// Position of an operational point relative to the asymptotic curves.
/// Finite blocklengths can legitimately sit below the outer curve, so the
/// comparison is recorded as flags rather than failures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub oracle: OracleResult,
    /// `R_1(D*)`, when `D*` lies on the outer curve's grid range.
    pub outer_at_d_star: Option<f64>,
    /// `R_2(D*)`, when available.
    pub inner_at_d_star: Option<f64>,
    /// Zero-rate distortion of memoryless kernels.
    pub d_max: f64,
    /// True when the operational rate lies below `R_1(D*)`.
    pub below_outer: bool,
    pub flags: Vec<String>,
}

pub fn sandwich_check(
    p: &SourcePmf,
    d: &DistortionTensor,
    cfg: &OracleConfig,
    inner: &BoundCurve,
    outer: &BoundCurve,
) -> Result<SandwichReport> {
    let oracle = operational_distortion(p, d, cfg)?;
    let range = feasibility_range(p, d, &SolverConfig::default())?;
    let outer_at = outer.value_at(oracle.d_star);
    let inner_at = inner.value_at(oracle.d_star);
    let mut flags = Vec::new();
    let below_outer = outer_at.is_some_and(|r| oracle.rate < r - 1e-12);
    if below_outer {
        flags.push(format!(
            "operational rate {} is below the outer bound {} at D*={}",
            oracle.rate,
            outer_at.unwrap(),
            oracle.d_star
        ));
    }
    if outer_at.is_none() {
        flags.push(format!("D*={} is not covered by the outer curve", oracle.d_star));
    }
    if oracle.num_messages == 1 && oracle.d_star < range.d_max - 1e-12 {
        flags.push(format!(
            "single-codeword distortion {} is below the memoryless zero-rate distortion {}",
            oracle.d_star, range.d_max
        ));
    }
    Ok(SandwichReport {
        oracle,
        outer_at_d_star: outer_at,
        inner_at_d_star: inner_at,
        d_max: range.d_max,
        below_outer,
        flags,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichTrend {
    pub reports: Vec<SandwichReport>,
    pub d_star_non_increasing: bool,
}

/// Runs [`sandwich_check`] for each blocklength in `ns` with the same number
/// of messages and records how `D*` moves.
pub fn sandwich_trend(
    p: &SourcePmf,
    d: &DistortionTensor,
    ns: &[usize],
    num_messages: usize,
    y0: usize,
    inner: &BoundCurve,
    outer: &BoundCurve,
) -> Result<SandwichTrend> {
    let reports = ns
        .iter()
        .map(|&n| sandwich_check(p, d, &OracleConfig { n, num_messages, y0 }, inner, outer))
        .collect::<Result<Vec<_>>>()?;
    let d_star_non_increasing = reports.windows(2).all(|w| w[1].oracle.d_star <= w[0].oracle.d_star);
    Ok(SandwichTrend {
        reports,
        d_star_non_increasing,
    })
}
