//! Achievability bounds: the distortion range reachable by memoryless
//! kernels, the memoryless bound `R_I2`, the Markov-kernel bound `R_I1`, and
//! their sampled curves.
//!
//! Every returned point carries a witness kernel whose exactly re-evaluated
//! distortion meets the target, so the bounds stay valid however far the
//! non-convex searches are from a global optimum.

use std::f64::consts::LN_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::curve::{carry_forward_min, BoundCurve, BoundId, CurvePoint, Witness};
use crate::error::Result;
use crate::functional::{lambda_linearization, lambda_raw};
use crate::info::kernel_information;
use crate::markov::analyze_raw;
use crate::problem::{DistortionTensor, MarkovKernel, MemorylessKernel, SourcePmf};
use crate::solver::{par_map, random_simplex, stream_id, SolverConfig};

/// Slack on the distortion constraint of a returned witness.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Slack used while searching, well inside `FEASIBILITY_TOL` so that
/// renormalizing a witness cannot push it out.
const ACCEPT_TOL: f64 = 1e-11;
/// Largest number of deterministic kernels enumerated for `d_min`.
const DETERMINISTIC_LIMIT: f64 = 262_144.0;
const BETA_MIN: f64 = 1e-6;
const BETA_MAX: f64 = 1e7;
const BISECTION_STEPS: usize = 48;
const COMPASS_START: f64 = 0.25;
const COMPASS_MIN: f64 = 1e-7;
/// Largest memoryless kernel (entries) refined by compass search.
const POLISH_LIMIT: usize = 64;
/// Largest number of deterministic kernels used as memoryless starts.
const DETERMINISTIC_STARTS: usize = 16;

const TAG_RANGE: u64 = 1;
const TAG_MEMORYLESS: u64 = 2;
const TAG_MARKOV: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityRange {
    /// Smallest distortion of a memoryless kernel.
    pub d_min: f64,
    /// Distortion above which a constant reconstruction law suffices.
    pub d_max: f64,
    pub witness_min: MemorylessKernel,
    pub witness_max: Vec<f64>,
}

impl FeasibilityRange {
    /// Constant kernel `W(y|x) = witness_max(y)`.
    pub fn zero_rate_kernel(&self) -> MemorylessKernel {
        let nx = self.witness_min.x_size();
        let rows = self.witness_max.repeat(nx);
        MemorylessKernel::from_flat_normalized(nx, self.witness_max.len(), rows)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerPoint<K> {
    /// Distortion target.
    pub target: f64,
    /// Rate of the witness, in bits.
    pub rate: f64,
    /// Distortion of the witness.
    pub distortion: f64,
    pub witness: K,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Achievable<K> {
    Feasible(InnerPoint<K>),
    /// No kernel met the target. Carries the kernel with the smallest
    /// distortion seen, when the search produced one.
    Infeasible { closest: Option<(f64, K)> },
}

impl<K> Achievable<K> {
    pub fn rate(&self) -> Option<f64> {
        match self {
            Achievable::Feasible(p) => Some(p.rate),
            Achievable::Infeasible { .. } => None,
        }
    }

    pub fn point(&self) -> Option<&InnerPoint<K>> {
        match self {
            Achievable::Feasible(p) => Some(p),
            Achievable::Infeasible { .. } => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, Achievable::Feasible(_))
    }
}

/// Smallest rate found so far among feasible candidates; ties go to the
/// smaller distortion.
struct Best {
    rate: f64,
    distortion: f64,
    table: Option<Vec<f64>>,
    closest: Option<(f64, Vec<f64>)>,
}

impl Best {
    fn new() -> Self {
        Self {
            rate: f64::INFINITY,
            distortion: f64::INFINITY,
            table: None,
            closest: None,
        }
    }

    fn beats(&self, rate: f64, distortion: f64) -> bool {
        rate < self.rate - 1e-13 || (rate <= self.rate + 1e-13 && distortion < self.distortion)
    }

    fn offer(&mut self, rate: f64, distortion: f64, target: f64, table: &[f64]) {
        if distortion <= target + ACCEPT_TOL {
            if self.beats(rate, distortion) {
                self.rate = rate;
                self.distortion = distortion;
                self.table = Some(table.to_vec());
            }
        } else if self.closest.as_ref().is_none_or(|c| distortion < c.0) {
            self.closest = Some((distortion, table.to_vec()));
        }
    }

    fn merge(&mut self, other: Best) {
        if let Some(t) = other.table {
            if self.beats(other.rate, other.distortion) {
                self.rate = other.rate;
                self.distortion = other.distortion;
                self.table = Some(t);
            }
        }
        if let Some(c) = other.closest {
            if self.closest.as_ref().is_none_or(|s| c.0 < s.0) {
                self.closest = Some(c);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Feasibility range
// ---------------------------------------------------------------------------

pub fn feasibility_range(p: &SourcePmf, d: &DistortionTensor, cfg: &SolverConfig) -> Result<FeasibilityRange> {
    d.check_source(p)?;
    cfg.validate()?;
    Ok(range_raw(p.probs(), d, cfg))
}

fn range_raw(p: &[f64], d: &DistortionTensor, cfg: &SolverConfig) -> FeasibilityRange {
    let (nx, ny) = (d.x_size(), d.y_size());

    let mut best_val = f64::INFINITY;
    let mut best_w = Vec::new();
    let consider = |w: Vec<f64>, best_val: &mut f64, best_w: &mut Vec<f64>| {
        let v = lambda_raw(p, &w, d);
        if v < *best_val {
            *best_val = v;
            *best_w = w;
        }
    };

    if (ny as f64).powi(nx as i32) <= DETERMINISTIC_LIMIT {
        let mut digits = vec![0usize; nx];
        loop {
            let mut w = vec![0.0; nx * ny];
            for (x, &y) in digits.iter().enumerate() {
                w[x * ny + y] = 1.0;
            }
            consider(w, &mut best_val, &mut best_w);
            let mut i = 0;
            while i < nx {
                digits[i] += 1;
                if digits[i] < ny {
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
            if i == nx {
                break;
            }
        }
    }

    let mut starts = vec![vec![1.0 / ny as f64; nx * ny]];
    for r in 0..cfg.restarts {
        let mut rng = cfg.rng(stream_id(TAG_RANGE, 0.0, r as u64));
        starts.push((0..nx).flat_map(|_| random_simplex(&mut rng, ny)).collect());
    }
    let descended = par_map(&starts, |_, w| descend_lambda(p, d, w.clone(), cfg.max_iters));
    for w in descended {
        consider(w, &mut best_val, &mut best_w);
    }
    let witness_min = MemorylessKernel::from_flat_normalized(nx, ny, best_w);
    let d_min = lambda_raw(p, witness_min.flat(), d);

    // E_{p r r}[d] = rᵀ M r with M(y, ŷ) = Σ_x p(x) d(x, y, ŷ).
    let mut m = vec![0.0; ny * ny];
    for (x, &px) in p.iter().enumerate() {
        for (acc, v) in m.iter_mut().zip(d.slice(x)) {
            *acc += px * v;
        }
    }
    let mut best_r = vec![0.0; ny];
    let mut d_max = f64::INFINITY;
    for y in 0..ny {
        if m[y * ny + y] < d_max {
            d_max = m[y * ny + y];
            best_r = vec![0.0; ny];
            best_r[y] = 1.0;
        }
    }
    let mut r_starts = vec![vec![1.0 / ny as f64; ny]];
    for r in 0..cfg.restarts {
        let mut rng = cfg.rng(stream_id(TAG_RANGE, 1.0, r as u64));
        r_starts.push(random_simplex(&mut rng, ny));
    }
    for r in r_starts {
        let r = descend_quadratic(&m, ny, r, cfg.max_iters);
        let v = quadratic_form(&m, &r, ny);
        if v < d_max {
            d_max = v;
            best_r = r;
        }
    }
    let zero = FeasibilityRange {
        d_min,
        d_max,
        witness_min,
        witness_max: best_r,
    };
    // Report the exact value of the normalized witness.
    let d_max = lambda_raw(p, zero.zero_rate_kernel().flat(), d);
    FeasibilityRange { d_max, ..zero }
}

/// Frank–Wolfe descent of `Λ` over the kernel polytope with exact line
/// search along each segment (`Λ` is quadratic).
fn descend_lambda(p: &[f64], d: &DistortionTensor, mut w: Vec<f64>, iters: usize) -> Vec<f64> {
    let ny = d.y_size();
    for _ in 0..iters {
        let lin = lambda_linearization(p, &w, d);
        let mut s = vec![0.0; w.len()];
        let mut slope = 0.0;
        for (x, (row, g)) in w.chunks(ny).zip(lin.grad.chunks(ny)).enumerate() {
            let j = argmin(g);
            s[x * ny + j] = 1.0;
            let cur: f64 = row.iter().zip(g).map(|(a, b)| a * b).sum();
            slope += p[x] * (g[j] - cur);
        }
        if slope > -1e-15 {
            break;
        }
        let curv = lambda_raw(p, &s, d) - lin.value - slope;
        let t = if curv > 0.0 { (-slope / (2.0 * curv)).min(1.0) } else { 1.0 };
        for (wv, sv) in w.iter_mut().zip(&s) {
            *wv += t * (sv - *wv);
        }
    }
    w
}

fn quadratic_form(m: &[f64], r: &[f64], n: usize) -> f64 {
    let mut v = 0.0;
    for i in 0..n {
        for j in 0..n {
            v += r[i] * m[i * n + j] * r[j];
        }
    }
    v
}

fn descend_quadratic(m: &[f64], n: usize, mut r: Vec<f64>, iters: usize) -> Vec<f64> {
    for _ in 0..iters {
        let g: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| (m[i * n + j] + m[j * n + i]) * r[j]).sum())
            .collect();
        let j = argmin(&g);
        let slope = g[j] - r.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>();
        if slope > -1e-15 {
            break;
        }
        let mut s = vec![0.0; n];
        s[j] = 1.0;
        let f0 = quadratic_form(m, &r, n);
        let curv = quadratic_form(m, &s, n) - f0 - slope;
        let t = if curv > 0.0 { (-slope / (2.0 * curv)).min(1.0) } else { 1.0 };
        for (rv, sv) in r.iter_mut().zip(&s) {
            *rv += t * (sv - *rv);
        }
    }
    r
}

fn argmin(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold(0, |b, (i, x)| if *x < v[b] { i } else { b })
}

// ---------------------------------------------------------------------------
// Memoryless bound
// ---------------------------------------------------------------------------

pub fn rate_inner_memoryless(
    p: &SourcePmf,
    d: &DistortionTensor,
    target: f64,
    cfg: &SolverConfig,
) -> Result<Achievable<MemorylessKernel>> {
    d.check_source(p)?;
    cfg.validate()?;
    let range = range_raw(p.probs(), d, cfg);
    Ok(memoryless_point(p.probs(), d, target, cfg, &range))
}

fn memoryless_point(
    p: &[f64],
    d: &DistortionTensor,
    target: f64,
    cfg: &SolverConfig,
    range: &FeasibilityRange,
) -> Achievable<MemorylessKernel> {
    let (nx, ny) = (d.x_size(), d.y_size());
    if target < range.d_min - FEASIBILITY_TOL {
        return Achievable::Infeasible {
            closest: Some((range.d_min, range.witness_min.clone())),
        };
    }
    let finish = |table: Vec<f64>, converged: bool| {
        let witness = MemorylessKernel::from_flat_normalized(nx, ny, table);
        Achievable::Feasible(InnerPoint {
            target,
            rate: kernel_information(p, witness.flat(), ny),
            distortion: lambda_raw(p, witness.flat(), d),
            witness,
            converged,
        })
    };
    let w_max = range.zero_rate_kernel();
    if target >= range.d_max {
        return finish(w_max.flat().to_vec(), true);
    }
    let w_min = range.witness_min.flat();
    if target <= range.d_min {
        return finish(w_min.to_vec(), true);
    }

    let mut starts: Vec<Vec<f64>> = vec![
        w_min.iter().map(|v| 0.9 * v + 0.1 / ny as f64).collect(),
        vec![1.0 / ny as f64; nx * ny],
    ];
    // On small alphabets every deterministic kernel, softened towards
    // uniform, seeds its own descent.
    if (ny as f64).powi(nx as i32) <= DETERMINISTIC_STARTS as f64 {
        for code in 0..ny.pow(nx as u32) {
            let mut w = vec![0.25 / ny as f64; nx * ny];
            let mut c = code;
            for x in 0..nx {
                w[x * ny + c % ny] += 0.75;
                c /= ny;
            }
            starts.push(w);
        }
    }
    for r in 0..cfg.restarts {
        let mut rng = cfg.rng(stream_id(TAG_MEMORYLESS, target, r as u64));
        starts.push((0..nx).flat_map(|_| random_simplex(&mut rng, ny)).collect());
    }
    let results = par_map(&starts, |_, w0| {
        let mut best = Best::new();
        lagrangian_path(p, d, target, w0.clone(), w_min, cfg, &mut best);
        if nx * ny <= POLISH_LIMIT {
            polish_memoryless(p, d, target, w_min, cfg, &mut best);
        }
        best
    });
    let mut best = Best::new();
    // Time-sharing between the two ends of the range is always feasible.
    if let Some(mix) = mix_to_feasible(p, d, target, w_max.flat(), w_min) {
        offer_memoryless(p, d, target, &mix, &mut best);
    }
    for b in results {
        best.merge(b);
    }
    match best.table {
        Some(t) => finish(t, true),
        None => Achievable::Infeasible {
            closest: Some((range.d_min, range.witness_min.clone())),
        },
    }
}

/// Refines the best kernel found so far by compass search on the penalized
/// objective. The Lagrangian path only reaches points where the constraint
/// is supported by a multiplier, which non-convex `Λ` need not provide.
fn polish_memoryless(p: &[f64], d: &DistortionTensor, target: f64, anchor: &[f64], cfg: &SolverConfig, best: &mut Best) {
    let Some(mut w) = best.table.clone() else { return };
    let ny = d.y_size();
    let eval = |w: &[f64]| ChainEval {
        rate: kernel_information(p, w, ny),
        dist: lambda_raw(p, w, d),
        converged: true,
    };
    for &mu in &cfg.penalty_schedule {
        compass_search(&eval, ny, target, mu, &mut w, cfg.max_iters, best);
    }
    if let Some(m) = mix_to_feasible(p, d, target, &w, anchor) {
        offer_memoryless(p, d, target, &m, best);
    }
}

fn offer_memoryless(p: &[f64], d: &DistortionTensor, target: f64, w: &[f64], best: &mut Best) {
    let ny = d.y_size();
    let dist = lambda_raw(p, w, d);
    best.offer(kernel_information(p, w, ny), dist, target, w);
}

fn info_nats(p: &[f64], w: &[f64], ny: usize) -> f64 {
    kernel_information(p, w, ny) * LN_2
}

/// Minimizes `I(X;Y) + β Λ(W)` (nats) by Blahut–Arimoto steps on the
/// linearized distortion, each followed by a backtracking line search.
/// Every feasible iterate is offered to `best`.
fn lagrangian_descent(
    p: &[f64],
    d: &DistortionTensor,
    beta: f64,
    mut w: Vec<f64>,
    cfg: &SolverConfig,
    target: f64,
    best: &mut Best,
) -> (Vec<f64>, f64) {
    let ny = d.y_size();
    let mut lin = lambda_linearization(p, &w, d);
    let mut info = info_nats(p, &w, ny);
    let mut f = info + beta * lin.value;
    let mut cand = vec![0.0; w.len()];
    let mut trial = vec![0.0; w.len()];
    for _ in 0..cfg.max_iters {
        let q = crate::problem::output_marginal(p, &w, ny);
        for ((crow, g), _) in cand.chunks_mut(ny).zip(lin.grad.chunks(ny)).zip(p) {
            let gmin = g
                .iter()
                .zip(&q)
                .filter(|(_, qv)| **qv > 0.0)
                .fold(f64::INFINITY, |m, (gv, _)| m.min(*gv));
            let mut s = 0.0;
            for ((c, gv), qv) in crow.iter_mut().zip(g).zip(&q) {
                *c = if *qv > 0.0 { qv * (-beta * (gv - gmin)).exp() } else { 0.0 };
                s += *c;
            }
            crow.iter_mut().for_each(|c| *c /= s);
        }
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-9 {
            for ((tv, wv), cv) in trial.iter_mut().zip(&w).zip(&cand) {
                *tv = wv + t * (cv - wv);
            }
            let lin_t = lambda_linearization(p, &trial, d);
            let info_t = info_nats(p, &trial, ny);
            let f_t = info_t + beta * lin_t.value;
            if f_t <= f {
                accepted = Some((lin_t, info_t, f_t));
                break;
            }
            t *= 0.5;
        }
        let Some((lin_t, info_t, f_t)) = accepted else { break };
        std::mem::swap(&mut w, &mut trial);
        let decrease = f - f_t;
        lin = lin_t;
        info = info_t;
        f = f_t;
        if lin.value <= target + ACCEPT_TOL && best.beats(info / LN_2, lin.value) {
            offer_memoryless(p, d, target, &w, best);
        }
        if decrease <= cfg.tol * (1.0 + f.abs()) {
            break;
        }
    }
    let dist = lin.value;
    (w, dist)
}

/// Brackets and bisects the multiplier `β` so that the minimizer of the
/// Lagrangian meets the target with equality, then repairs the last
/// infeasible iterate by mixing it with the `d_min` witness.
fn lagrangian_path(
    p: &[f64],
    d: &DistortionTensor,
    target: f64,
    w0: Vec<f64>,
    anchor: &[f64],
    cfg: &SolverConfig,
    best: &mut Best,
) {
    let mut beta = 1.0;
    let (mut w, mut dist) = lagrangian_descent(p, d, beta, w0, cfg, target, best);
    let (mut lo, mut hi);
    let mut w_lo;
    if dist <= target {
        hi = beta;
        lo = beta;
        w_lo = w.clone();
        while dist <= target && lo > BETA_MIN {
            hi = lo;
            lo /= 4.0;
            (w, dist) = lagrangian_descent(p, d, lo, w, cfg, target, best);
            w_lo = w.clone();
        }
        if dist <= target {
            return;
        }
    } else {
        lo = beta;
        hi = beta;
        w_lo = w.clone();
        while dist > target && hi < BETA_MAX {
            lo = hi;
            w_lo = w.clone();
            hi *= 4.0;
            (w, dist) = lagrangian_descent(p, d, hi, w, cfg, target, best);
        }
        if dist > target {
            if let Some(mix) = mix_to_feasible(p, d, target, &w, anchor) {
                offer_memoryless(p, d, target, &mix, best);
            }
            return;
        }
    }
    for _ in 0..BISECTION_STEPS {
        if hi / lo < 1.0 + 1e-7 {
            break;
        }
        beta = (lo * hi).sqrt();
        (w, dist) = lagrangian_descent(p, d, beta, w, cfg, target, best);
        if dist <= target {
            hi = beta;
        } else {
            lo = beta;
            w_lo = w.clone();
        }
    }
    if let Some(mix) = mix_to_feasible(p, d, target, &w_lo, anchor) {
        offer_memoryless(p, d, target, &mix, best);
    }
}

/// Smallest `t ∈ [0, 1]` with `Λ((1−t)W + t A) ≤ target`, given a feasible
/// anchor `A`. `Λ` is quadratic along the segment, so the crossing is a root
/// of a quadratic.
fn mix_to_feasible(p: &[f64], d: &DistortionTensor, target: f64, w: &[f64], anchor: &[f64]) -> Option<Vec<f64>> {
    let mix = |t: f64| -> Vec<f64> { w.iter().zip(anchor).map(|(a, b)| a + t * (b - a)).collect() };
    let f0 = lambda_raw(p, w, d) - target;
    if f0 <= 0.0 {
        return Some(w.to_vec());
    }
    let f1 = lambda_raw(p, anchor, d) - target;
    if f1 > 0.0 {
        return None;
    }
    let fh = lambda_raw(p, &mix(0.5), d) - target;
    // f(t) = a t² + b t + c through (0, f0), (½, fh), (1, f1).
    let a = 2.0 * (f1 - 2.0 * fh + f0);
    let b = f1 - f0 - a;
    let c = f0;
    let mut roots: Vec<f64> = if a.abs() < 1e-15 {
        vec![-c / b]
    } else {
        let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
        vec![(-b - disc) / (2.0 * a), (-b + disc) / (2.0 * a)]
    };
    roots.retain(|t| t.is_finite() && *t >= 0.0 && *t <= 1.0);
    roots.sort_by(f64::total_cmp);
    let mut t = roots.first().copied().unwrap_or(1.0);
    for _ in 0..60 {
        let m = mix(t);
        if lambda_raw(p, &m, d) <= target {
            return Some(m);
        }
        t = (t + 1e-12).max(t * (1.0 + 1e-9)).min(1.0);
        if t == 1.0 {
            return Some(anchor.to_vec());
        }
    }
    Some(anchor.to_vec())
}

// ---------------------------------------------------------------------------
// Markov-kernel bound
// ---------------------------------------------------------------------------

pub fn rate_inner_markov(
    p: &SourcePmf,
    d: &DistortionTensor,
    target: f64,
    cfg: &SolverConfig,
) -> Result<Achievable<MarkovKernel>> {
    d.check_source(p)?;
    cfg.validate()?;
    let range = range_raw(p.probs(), d, cfg);
    let memoryless = memoryless_point(p.probs(), d, target, cfg, &range);
    Ok(markov_point(p.probs(), d, target, cfg, &range, memoryless.point()))
}

struct ChainEval {
    rate: f64,
    dist: f64,
    converged: bool,
}

fn eval_chain(p: &[f64], k: &[f64], d: &DistortionTensor) -> ChainEval {
    let a = analyze_raw(p, k, d.y_size(), Some(d));
    ChainEval {
        rate: a.rate_bits,
        dist: a.distortion,
        converged: a.converged,
    }
}

fn penalized(e: &ChainEval, target: f64, mu: f64) -> f64 {
    let v = (e.dist - target).max(0.0);
    e.rate + mu * v * v
}

fn offer_chain(e: &ChainEval, target: f64, k: &[f64], best: &mut Best) {
    if e.converged {
        best.offer(e.rate, e.dist, target, k);
    }
}

fn lift(w: &[f64], nx: usize, ny: usize) -> Vec<f64> {
    let mut k = Vec::with_capacity(nx * ny * ny);
    for x in 0..nx {
        for _ in 0..ny {
            k.extend_from_slice(&w[x * ny..(x + 1) * ny]);
        }
    }
    k
}

fn markov_point(
    p: &[f64],
    d: &DistortionTensor,
    target: f64,
    cfg: &SolverConfig,
    range: &FeasibilityRange,
    memoryless: Option<&InnerPoint<MemorylessKernel>>,
) -> Achievable<MarkovKernel> {
    let (nx, ny) = (d.x_size(), d.y_size());
    let mut best = Best::new();
    let mut anchors: Vec<Vec<f64>> = Vec::new();
    if let Some(m) = memoryless {
        let k = lift(m.witness.flat(), nx, ny);
        offer_chain(&eval_chain(p, &k, d), target, &k, &mut best);
        anchors.push(k);
        if m.rate == 0.0 {
            return finish_markov(p, d, target, best);
        }
    }
    let k_min = lift(range.witness_min.flat(), nx, ny);
    offer_chain(&eval_chain(p, &k_min, d), target, &k_min, &mut best);

    let mut starts = anchors.clone();
    starts.push(k_min);
    for r in 0..cfg.restarts {
        let mut rng = cfg.rng(stream_id(TAG_MARKOV, target, r as u64));
        let mut k: Vec<f64> = (0..nx * ny).flat_map(|_| random_simplex(&mut rng, ny)).collect();
        // Bias half of the random starts towards deterministic kernels.
        if r % 2 == 1 {
            for slice in k.chunks_mut(ny) {
                let j = rng.gen_range(0..ny);
                slice.iter_mut().for_each(|v| *v *= 0.2);
                slice[j] += 0.8;
            }
        }
        starts.push(k);
    }
    let anchor = anchors.first().cloned().or_else(|| best.table.clone());
    let results = par_map(&starts, |_, k0| {
        let mut local = Best::new();
        let mut k = k0.clone();
        let eval = |k: &[f64]| eval_chain(p, k, d);
        for &mu in &cfg.penalty_schedule {
            compass_search(&eval, ny, target, mu, &mut k, cfg.max_iters, &mut local);
        }
        let e = eval_chain(p, &k, d);
        offer_chain(&e, target, &k, &mut local);
        if e.dist > target {
            let repair_anchor = local.table.clone().or_else(|| anchor.clone());
            if let Some(a) = repair_anchor {
                if let Some(m) = chain_mix_to_feasible(p, d, target, &k, &a) {
                    offer_chain(&eval_chain(p, &m, d), target, &m, &mut local);
                }
            }
        }
        local
    });
    for r in results {
        best.merge(r);
    }
    finish_markov(p, d, target, best)
}

fn finish_markov(p: &[f64], d: &DistortionTensor, target: f64, best: Best) -> Achievable<MarkovKernel> {
    let (nx, ny) = (d.x_size(), d.y_size());
    match best.table {
        Some(t) => {
            let witness = MarkovKernel::from_flat_normalized(nx, ny, t);
            let e = eval_chain(p, witness.flat(), d);
            Achievable::Feasible(InnerPoint {
                target,
                rate: e.rate,
                distortion: e.dist,
                witness,
                converged: e.converged,
            })
        }
        None => Achievable::Infeasible {
            closest: best
                .closest
                .map(|(dist, t)| (dist, MarkovKernel::from_flat_normalized(nx, ny, t))),
        },
    }
}

/// Pattern search over pairwise mass moves inside each length-`ny` slice of
/// `k` on the penalized objective `rate + μ·max(0, distortion − D)²`.
fn compass_search(
    eval: &dyn Fn(&[f64]) -> ChainEval,
    ny: usize,
    target: f64,
    mu: f64,
    k: &mut [f64],
    max_sweeps: usize,
    best: &mut Best,
) {
    let slices = k.len() / ny;
    let mut cur = eval(k);
    let mut cur_phi = penalized(&cur, target, mu);
    let mut step = COMPASS_START;
    let mut sweeps = 0;
    while step >= COMPASS_MIN && sweeps < max_sweeps {
        sweeps += 1;
        let mut improved = false;
        for s in 0..slices {
            for i in 0..ny {
                for j in 0..ny {
                    if i == j {
                        continue;
                    }
                    let (a, b) = (s * ny + i, s * ny + j);
                    let amount = step.min(k[a]);
                    if amount <= 0.0 {
                        continue;
                    }
                    let (old_a, old_b) = (k[a], k[b]);
                    k[a] -= amount;
                    k[b] += amount;
                    let e = eval(k);
                    let phi = penalized(&e, target, mu);
                    if phi < cur_phi - 1e-15 {
                        offer_chain(&e, target, k, best);
                        cur = e;
                        cur_phi = phi;
                        improved = true;
                    } else {
                        k[a] = old_a;
                        k[b] = old_b;
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    offer_chain(&cur, target, k, best);
}

/// Bisection on the mixing weight towards a feasible anchor kernel. The
/// stationary distortion is not quadratic along the segment, so the result
/// is the first feasible point found from the anchor side.
fn chain_mix_to_feasible(p: &[f64], d: &DistortionTensor, target: f64, k: &[f64], anchor: &[f64]) -> Option<Vec<f64>> {
    let mix = |t: f64| -> Vec<f64> { k.iter().zip(anchor).map(|(a, b)| a + t * (b - a)).collect() };
    if eval_chain(p, anchor, d).dist > target + ACCEPT_TOL {
        return None;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if eval_chain(p, &mix(mid), d).dist <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(mix(hi))
}

// ---------------------------------------------------------------------------
// Curves
// ---------------------------------------------------------------------------

fn memoryless_witness_point(target: f64, a: &Achievable<MemorylessKernel>) -> CurvePoint {
    match a {
        Achievable::Feasible(pt) => CurvePoint {
            d: target,
            rate: Some(pt.rate),
            term: None,
            witness: Some(Witness::Memoryless(pt.witness.clone())),
            converged: pt.converged,
        },
        Achievable::Infeasible { .. } => CurvePoint::new(target, None),
    }
}

fn markov_witness_point(target: f64, a: &Achievable<MarkovKernel>) -> CurvePoint {
    match a {
        Achievable::Feasible(pt) => CurvePoint {
            d: target,
            rate: Some(pt.rate),
            term: None,
            witness: Some(Witness::Markov(pt.witness.clone())),
            converged: pt.converged,
        },
        Achievable::Infeasible { .. } => CurvePoint::new(target, None),
    }
}

/// `R_I2` sampled on `grid`, made non-increasing by carrying witnesses to
/// larger targets.
pub fn memoryless_curve(p: &SourcePmf, d: &DistortionTensor, grid: &[f64], cfg: &SolverConfig) -> Result<BoundCurve> {
    d.check_source(p)?;
    cfg.validate()?;
    BoundCurve::new(BoundId::RI2, grid.iter().map(|&t| CurvePoint::new(t, None)).collect())?;
    let range = range_raw(p.probs(), d, cfg);
    Ok(memoryless_curve_raw(p.probs(), d, grid, cfg, &range).0)
}

fn memoryless_curve_raw(
    p: &[f64],
    d: &DistortionTensor,
    grid: &[f64],
    cfg: &SolverConfig,
    range: &FeasibilityRange,
) -> (BoundCurve, Vec<Achievable<MemorylessKernel>>) {
    let raw = par_map(grid, |_, &t| memoryless_point(p, d, t, cfg, range));
    let mut points: Vec<CurvePoint> = grid.iter().zip(&raw).map(|(&t, a)| memoryless_witness_point(t, a)).collect();
    carry_forward_min(&mut points);
    let mut curve = BoundCurve::new(BoundId::RI2, points).expect("grid checked by caller");
    curve.solver = Some(cfg.clone());
    (curve, raw)
}

/// `R_I2` and `R_I1` on the same grid. The Markov search at each point starts
/// from the memoryless witness, so `R_I1 ≤ R_I2` holds pointwise.
pub fn inner_curves(
    p: &SourcePmf,
    d: &DistortionTensor,
    grid: &[f64],
    cfg: &SolverConfig,
) -> Result<(BoundCurve, BoundCurve)> {
    d.check_source(p)?;
    cfg.validate()?;
    BoundCurve::new(BoundId::RI1, grid.iter().map(|&t| CurvePoint::new(t, None)).collect())?;
    let pr = p.probs();
    let range = range_raw(pr, d, cfg);
    let (ri2, raw) = memoryless_curve_raw(pr, d, grid, cfg, &range);
    let pairs: Vec<(f64, Option<&InnerPoint<MemorylessKernel>>)> =
        grid.iter().zip(&raw).map(|(&t, a)| (t, a.point())).collect();
    let markov = par_map(&pairs, |_, (t, m)| markov_point(pr, d, *t, cfg, &range, *m));
    let mut points: Vec<CurvePoint> = grid.iter().zip(&markov).map(|(&t, a)| markov_witness_point(t, a)).collect();
    carry_forward_min(&mut points);
    let mut ri1 = BoundCurve::new(BoundId::RI1, points)?;
    ri1.solver = Some(cfg.clone());
    Ok((ri2, ri1))
}

/// `R_2 = R_I1` sampled on `grid`.
pub fn inner_curve(p: &SourcePmf, d: &DistortionTensor, grid: &[f64], cfg: &SolverConfig) -> Result<BoundCurve> {
    let (_, mut ri1) = inner_curves(p, d, grid, cfg)?;
    ri1.bound = BoundId::R2;
    Ok(ri1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::binary_entropy;
    use crate::markov::analyze_stationary;
    use approx::assert_abs_diff_eq;

    fn uniform2() -> SourcePmf {
        SourcePmf::uniform(2).unwrap()
    }

    #[test]
    fn gamma_example_range() {
        for gamma in [0.1, 0.5, 0.9] {
            let d = DistortionTensor::gamma_hamming(gamma).unwrap();
            let r = feasibility_range(&uniform2(), &d, &SolverConfig::default()).unwrap();
            assert_abs_diff_eq!(r.d_min, gamma / 2.0, epsilon = 1e-9);
            assert_abs_diff_eq!(r.d_max, (gamma + 1.0) / 2.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn fig2_range_against_grid_search() {
        let c = 1.0;
        let d = DistortionTensor::fig2(c).unwrap();
        let r = feasibility_range(&uniform2(), &d, &SolverConfig::default()).unwrap();
        // E = ½((1−α) + β + 2c q(1−q)), q = (α+β)/2, on a 1e-3 grid.
        let mut grid_min = f64::INFINITY;
        for i in 0..=1000 {
            for j in 0..=1000 {
                let (a, b) = (i as f64 / 1000.0, j as f64 / 1000.0);
                let q = (a + b) / 2.0;
                grid_min = grid_min.min(0.5 * ((1.0 - a) + b + 2.0 * c * q * (1.0 - q)));
            }
        }
        assert_abs_diff_eq!(r.d_min, grid_min, epsilon = 1e-12);
        assert_abs_diff_eq!(r.d_min, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(r.witness_min.get(0, 0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.witness_min.get(1, 0), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.d_max, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn constant_tensor_range() {
        let d = DistortionTensor::constant(3, 2, 0.7).unwrap();
        let p = SourcePmf::new(vec![0.2, 0.3, 0.5]).unwrap();
        let r = feasibility_range(&p, &d, &SolverConfig::default()).unwrap();
        assert_abs_diff_eq!(r.d_min, 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(r.d_max, 0.7, epsilon = 1e-12);
    }

    #[test]
    fn gamma_example_memoryless_rate() {
        let gamma = 0.5;
        let d = DistortionTensor::gamma_hamming(gamma).unwrap();
        let cfg = SolverConfig::default();
        let a = rate_inner_memoryless(&uniform2(), &d, 0.61, &cfg).unwrap();
        let pt = a.point().unwrap();
        assert!((pt.rate - (1.0 - binary_entropy(0.36))).abs() < 5e-3, "{}", pt.rate);
        assert!(pt.distortion <= 0.61 + FEASIBILITY_TOL);

        let at_min = rate_inner_memoryless(&uniform2(), &d, gamma / 2.0, &cfg).unwrap();
        assert_abs_diff_eq!(at_min.rate().unwrap(), 1.0, epsilon = 1e-9);

        let above = rate_inner_memoryless(&uniform2(), &d, 0.8, &cfg).unwrap();
        assert_eq!(above.rate(), Some(0.0));

        let below = rate_inner_memoryless(&uniform2(), &d, 0.2, &cfg).unwrap();
        assert!(!below.is_feasible());
    }

    #[test]
    fn markov_bound_at_fig2_corner() {
        let d = DistortionTensor::fig2(1.0).unwrap();
        let cfg = SolverConfig::default();
        let a = rate_inner_markov(&uniform2(), &d, 0.25, &cfg).unwrap();
        let pt = a.point().unwrap();
        assert!(pt.rate <= 1.0 + 1e-9);
        let check = analyze_stationary(&pt.witness, &uniform2(), &d).unwrap();
        assert!(check.distortion <= 0.25 + FEASIBILITY_TOL);
        assert_abs_diff_eq!(check.rate_bits, pt.rate, epsilon = 1e-9);

        let zero = rate_inner_markov(&uniform2(), &d, 0.6, &cfg).unwrap();
        assert_eq!(zero.rate(), Some(0.0));
    }

    #[test]
    fn hamming_curve_matches_closed_form() {
        let d = DistortionTensor::fig2(0.0).unwrap();
        let grid: Vec<f64> = (1..=9).map(|i| 0.05 * i as f64).collect();
        let curve = inner_curve(&uniform2(), &d, &grid, &SolverConfig::default()).unwrap();
        for pt in &curve.points {
            let expect = 1.0 - binary_entropy(pt.d);
            assert!((pt.rate.unwrap() - expect).abs() < 2e-2, "D={} R={}", pt.d, pt.rate.unwrap());
        }
    }

    #[test]
    fn mixing_reaches_target() {
        let d = DistortionTensor::fig2(1.0).unwrap();
        let p = [0.5, 0.5];
        let anchor = [1.0, 0.0, 0.0, 1.0];
        let w = [0.5, 0.5, 0.5, 0.5];
        let m = mix_to_feasible(&p, &d, 0.3, &w, &anchor).unwrap();
        let v = lambda_raw(&p, &m, &d);
        assert!(v <= 0.3 && v > 0.3 - 1e-9, "{v}");
    }
}
