//! Infeasibility bounds: a Blahut–Arimoto engine with certified dual lower
//! bounds, the relaxations `R_O1` and `R_O2`, the memoryless envelope shifted
//! by the memory span, and the composite outer curve `R_1`.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::curve::{carry_backward_max, BoundCurve, BoundId, ConvexEnvelope, CurvePoint};
use crate::error::{Result, SrdError};
use crate::functional::memory_span;
use crate::inner::{feasibility_range, memoryless_curve, FeasibilityRange, FEASIBILITY_TOL};
use crate::problem::{DistortionTensor, SourcePmf};
use crate::solver::{par_map, SolverConfig};

/// Largest `|𝒳|²·|𝒴|³` table accepted by the two-letter relaxation.
pub const TWO_LETTER_LIMIT: usize = 1_000_000;
/// Iteration cap of a single Blahut–Arimoto run.
pub const BA_MAX_ITERS: usize = 100_000;
/// Output symbols with less mass are dropped from the support.
const SUPPORT_FLOOR: f64 = 1e-14;
/// Range of `ln(−s)` searched when matching a distortion target.
const LOG_SLOPE_MIN: f64 = -12.0;
const LOG_SLOPE_MAX: f64 = 13.9;
const SLOPE_BISECTION_STEPS: usize = 56;

/// A classical rate-distortion problem `min I(S; R)` subject to
/// `E[d̃(S, R)] ≤ D / distortion_scale`, with the rate multiplied by
/// `rate_scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleLetterProblem {
    pub source: Vec<f64>,
    pub repro_size: usize,
    /// Row-major `d̃(s, r)`.
    pub dist: Vec<f64>,
    pub rate_scale: f64,
    pub distortion_scale: f64,
}

impl SingleLetterProblem {
    pub fn new(
        source: Vec<f64>,
        repro_size: usize,
        dist: Vec<f64>,
        rate_scale: f64,
        distortion_scale: f64,
    ) -> Result<Self> {
        let sp = SourcePmf::new(source)?;
        if repro_size == 0 || dist.len() != sp.len() * repro_size {
            return Err(SrdError::DimensionMismatch(format!(
                "distortion matrix has {} entries, expected {}×{}",
                dist.len(),
                sp.len(),
                repro_size
            )));
        }
        if dist.iter().any(|v| !v.is_finite()) {
            return Err(SrdError::InvalidTensor("distortion matrix must be finite".into()));
        }
        if !(rate_scale > 0.0 && distortion_scale > 0.0) {
            return Err(SrdError::InvalidArgument("scales must be positive".into()));
        }
        Ok(Self {
            source: sp.probs().to_vec(),
            repro_size,
            dist,
            rate_scale,
            distortion_scale,
        })
    }

    /// Memoryless problem with a `|𝒳| × |𝒴|` distortion matrix.
    pub fn classical(p: &SourcePmf, matrix: &[Vec<f64>]) -> Result<Self> {
        let ny = matrix.first().map_or(0, Vec::len);
        if matrix.len() != p.len() || matrix.iter().any(|r| r.len() != ny) {
            return Err(SrdError::DimensionMismatch("distortion matrix shape does not match the source".into()));
        }
        Self::new(p.probs().to_vec(), ny, matrix.concat(), 1.0, 1.0)
    }

    /// Reproduction alphabet `𝒴×𝒴` with `d̃(x, (y, ŷ)) = d(x, y, ŷ)`: the
    /// memory symbol becomes a free choice of the encoder.
    pub fn product(p: &SourcePmf, d: &DistortionTensor) -> Result<Self> {
        d.check_source(p)?;
        let ny = d.y_size();
        Self::new(p.probs().to_vec(), ny * ny, d.values().to_vec(), 1.0, 1.0)
    }

    /// Source `p⊗p`, reproduction `(y₁, y₂, ŷ₁)` and
    /// `d̃ = d(x₁, y₁, ŷ₁) + d(x₂, y₂, y₁)`, with both scales `½`.
    pub fn two_letter(p: &SourcePmf, d: &DistortionTensor) -> Result<Self> {
        d.check_source(p)?;
        let (nx, ny) = (d.x_size(), d.y_size());
        let entries = nx
            .checked_pow(2)
            .and_then(|a| ny.checked_pow(3).and_then(|b| a.checked_mul(b)))
            .unwrap_or(usize::MAX);
        if entries > TWO_LETTER_LIMIT {
            return Err(SrdError::SizeGuard(format!(
                "two-letter table has {entries} entries, limit is {TWO_LETTER_LIMIT}"
            )));
        }
        let pr = p.probs();
        let mut source = Vec::with_capacity(nx * nx);
        let mut dist = Vec::with_capacity(entries);
        for x1 in 0..nx {
            for x2 in 0..nx {
                source.push(pr[x1] * pr[x2]);
                for y1 in 0..ny {
                    for y2 in 0..ny {
                        for yh in 0..ny {
                            dist.push(d.get(x1, y1, yh) + d.get(x2, y2, y1));
                        }
                    }
                }
            }
        }
        let s: f64 = source.iter().sum();
        source.iter_mut().for_each(|v| *v /= s);
        Self::new(source, ny * ny * ny, dist, 0.5, 0.5)
    }

    pub fn source_size(&self) -> usize {
        self.source.len()
    }

    fn row(&self, s: usize) -> &[f64] {
        &self.dist[s * self.repro_size..(s + 1) * self.repro_size]
    }

    /// `Σ p(s) min_r d̃(s, r)`, unscaled.
    fn raw_min_distortion(&self) -> f64 {
        self.source
            .iter()
            .enumerate()
            .map(|(s, &ps)| ps * self.row(s).iter().copied().fold(f64::INFINITY, f64::min))
            .sum()
    }

    /// `min_r Σ p(s) d̃(s, r)`, unscaled.
    fn raw_zero_rate_distortion(&self) -> f64 {
        (0..self.repro_size)
            .map(|r| self.source.iter().enumerate().map(|(s, &ps)| ps * self.dist[s * self.repro_size + r]).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    /// Smallest achievable distortion, in the problem's own scale.
    pub fn min_distortion(&self) -> f64 {
        self.distortion_scale * self.raw_min_distortion()
    }

    /// Distortion from which zero rate suffices, in the problem's own scale.
    pub fn zero_rate_distortion(&self) -> f64 {
        self.distortion_scale * self.raw_zero_rate_distortion()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdPoint {
    /// Lagrange parameter `s ≤ 0` of the parametric form `Q ∝ q·e^{s·d̃}`.
    pub slope: f64,
    /// Scaled distortion.
    pub d: f64,
    /// Scaled rate, bits.
    pub rate: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Output distribution `q` at the fixed point.
    pub output: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum OuterValue {
    /// Certified lower bound on `R(D)`, bits.
    Bound(f64),
    /// No scheme reaches the distortion target.
    Infeasible,
    /// The bound is not defined at this distortion.
    OutOfDomain,
}

impl OuterValue {
    pub fn value(self) -> Option<f64> {
        match self {
            OuterValue::Bound(v) => Some(v),
            _ => None,
        }
    }
}

fn check_slope(slope: f64) -> Result<()> {
    if slope.is_nan() || slope > 0.0 {
        return Err(SrdError::InvalidArgument(format!("slope must be ≤ 0, got {slope}")));
    }
    Ok(())
}

/// One Blahut–Arimoto run at parameter `slope` from a uniform output law.
pub fn blahut_arimoto(prob: &SingleLetterProblem, slope: f64, cfg: &SolverConfig) -> Result<RdPoint> {
    check_slope(slope)?;
    cfg.validate()?;
    Ok(ba_core(prob, slope, None, cfg.tol, None))
}

/// As [`blahut_arimoto`], also returning the Lagrangian `I − s·E[d̃]` (nats)
/// after every iteration.
pub fn blahut_arimoto_trace(prob: &SingleLetterProblem, slope: f64, cfg: &SolverConfig) -> Result<(RdPoint, Vec<f64>)> {
    check_slope(slope)?;
    cfg.validate()?;
    let mut trace = Vec::new();
    let pt = ba_core(prob, slope, None, cfg.tol, Some(&mut trace));
    Ok((pt, trace))
}

/// 64 slopes log-spaced in `[−2⁸, −2⁻⁸]` plus the two ends of the search
/// range, sorted by distortion.
pub fn blahut_arimoto_sweep(prob: &SingleLetterProblem, cfg: &SolverConfig) -> Result<Vec<RdPoint>> {
    cfg.validate()?;
    let mut slopes: Vec<f64> = (0..64).map(|i| -(2f64).powf(8.0 - 16.0 * i as f64 / 63.0)).collect();
    slopes.push(-LOG_SLOPE_MAX.exp());
    slopes.push(-LOG_SLOPE_MIN.exp());
    let mut pts = par_map(&slopes, |_, &s| ba_core(prob, s, None, cfg.tol, None));
    pts.sort_by(|a, b| a.d.total_cmp(&b.d));
    Ok(pts)
}

struct Tilted {
    /// `ln Σ_r q(r) e^{s d̃(x,r)}` per source symbol.
    log_z: Vec<f64>,
}

fn tilt(prob: &SingleLetterProblem, s: f64, q: &[f64]) -> Tilted {
    let log_z = (0..prob.source_size())
        .map(|x| {
            let row = prob.row(x);
            let m = row
                .iter()
                .zip(q)
                .filter(|(_, qv)| **qv > 0.0)
                .fold(f64::INFINITY, |m, (d, _)| m.min(*d));
            let z: f64 = row.iter().zip(q).filter(|(_, qv)| **qv > 0.0).map(|(d, qv)| qv * (s * (d - m)).exp()).sum();
            s * m + z.ln()
        })
        .collect();
    Tilted { log_z }
}

fn ba_core(prob: &SingleLetterProblem, s: f64, q0: Option<&[f64]>, tol: f64, mut trace: Option<&mut Vec<f64>>) -> RdPoint {
    let nr = prob.repro_size;
    let mut q: Vec<f64> = match q0 {
        Some(q) => q.iter().map(|v| (1.0 - 1e-3) * v + 1e-3 / nr as f64).collect(),
        None => vec![1.0 / nr as f64; nr],
    };
    let mut rate = f64::NAN;
    let mut dist = f64::NAN;
    let mut converged = false;
    let mut iterations = 0;
    let mut next = vec![0.0; nr];
    while iterations < BA_MAX_ITERS {
        iterations += 1;
        let t = tilt(prob, s, &q);
        next.iter_mut().for_each(|v| *v = 0.0);
        let mut d_acc = 0.0;
        let mut i_acc = 0.0;
        for (x, &px) in prob.source.iter().enumerate() {
            if px == 0.0 {
                continue;
            }
            for (r, (&dv, &qv)) in prob.row(x).iter().zip(&q).enumerate() {
                if qv == 0.0 {
                    continue;
                }
                // ln Q(r|x) = ln q(r) + s d̃ − ln Z(x)
                let log_ratio = s * dv - t.log_z[x];
                let w = px * qv * log_ratio.exp();
                next[r] += w;
                d_acc += w * dv;
                i_acc += w * log_ratio;
            }
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| {
            *v /= total;
            if *v < SUPPORT_FLOOR {
                *v = 0.0;
            }
        });
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        // i_acc is Σ p Q ln(Q/q_old); the rate of Q against its own output
        // law q_new is smaller by D(q_new ‖ q_old).
        let kl: f64 = next
            .iter()
            .zip(&q)
            .filter(|(a, _)| **a > 0.0)
            .map(|(a, b)| a * (a / b).ln())
            .sum();
        let new_rate = (i_acc - kl).max(0.0);
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(new_rate - s * d_acc);
        }
        let done = (new_rate - rate).abs() < tol && (d_acc - dist).abs() < tol;
        rate = new_rate;
        dist = d_acc;
        std::mem::swap(&mut q, &mut next);
        if done {
            converged = true;
            break;
        }
    }
    RdPoint {
        slope: s,
        d: prob.distortion_scale * dist,
        rate: prob.rate_scale * rate / LN_2,
        iterations,
        converged,
        output: q,
    }
}

/// Dual lower bound on the scaled rate at scaled distortion `d`, valid for
/// any `s ≤ 0` and any output law `q`:
/// `R(D) ≥ s·D − Σ p(x) ln Z(x) − ln max_r c(r)` with
/// `c(r) = Σ p(x) e^{s d̃(x,r)} / Z(x)`.
pub fn dual_lower_bound(prob: &SingleLetterProblem, slope: f64, output: &[f64], d: f64) -> f64 {
    let t = d / prob.distortion_scale;
    let tl = tilt(prob, slope, output);
    let mut max_log_c = f64::NEG_INFINITY;
    for r in 0..prob.repro_size {
        let terms: Vec<f64> = prob
            .source
            .iter()
            .enumerate()
            .filter(|(_, px)| **px > 0.0)
            .map(|(x, px)| px.ln() + slope * prob.dist[x * prob.repro_size + r] - tl.log_z[x])
            .collect();
        let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lc = m + terms.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        max_log_c = max_log_c.max(lc);
    }
    let avg_log_z: f64 = prob.source.iter().zip(&tl.log_z).filter(|(p, _)| **p > 0.0).map(|(p, z)| p * z).sum();
    prob.rate_scale * (slope * t - avg_log_z - max_log_c) / LN_2
}

/// Certified lower bound on the scaled rate-distortion function at `d`. The
/// slope is bisected so that the Blahut–Arimoto fixed point meets `d`; every
/// slope visited yields a valid bound and the largest is returned.
pub fn rate_outer_single(prob: &SingleLetterProblem, d: f64, cfg: &SolverConfig) -> Result<OuterValue> {
    cfg.validate()?;
    Ok(single_raw(prob, d, cfg))
}

fn single_raw(prob: &SingleLetterProblem, d: f64, cfg: &SolverConfig) -> OuterValue {
    let dmin = prob.min_distortion();
    if d < dmin - 1e-12 * (1.0 + dmin.abs()) {
        return OuterValue::Infeasible;
    }
    if d >= prob.zero_rate_distortion() {
        return OuterValue::Bound(0.0);
    }
    let mut best = 0.0_f64;
    let mut visit = |u: f64, q: Option<&[f64]>| -> RdPoint {
        let s = -u.exp();
        let pt = ba_core(prob, s, q, cfg.tol, None);
        best = best.max(dual_lower_bound(prob, s, &pt.output, d));
        pt
    };
    let steep = visit(LOG_SLOPE_MAX, None);
    if steep.d < d {
        let (mut lo, mut hi) = (LOG_SLOPE_MIN, LOG_SLOPE_MAX);
        let mut q = steep.output;
        for _ in 0..SLOPE_BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            let pt = visit(mid, Some(&q));
            if pt.d > d {
                lo = mid;
            } else {
                hi = mid;
            }
            q = pt.output;
            if hi - lo < 1e-12 {
                break;
            }
        }
    }
    OuterValue::Bound(best.max(0.0))
}

/// `R_O1(D)`: lower bound with the memory symbol chosen freely by the encoder.
pub fn rate_outer_product(p: &SourcePmf, d: &DistortionTensor, target: f64, cfg: &SolverConfig) -> Result<OuterValue> {
    let prob = SingleLetterProblem::product(p, d)?;
    rate_outer_single(&prob, target, cfg)
}

/// `R_O2(D)`: two-letter relaxation in which only the first memory symbol is
/// free.
pub fn rate_outer_two_letter(p: &SourcePmf, d: &DistortionTensor, target: f64, cfg: &SolverConfig) -> Result<OuterValue> {
    let prob = SingleLetterProblem::two_letter(p, d)?;
    rate_outer_single(&prob, target, cfg)
}

/// Lower convex envelope of sampled `R_I2`, read at `D + 𝚍`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftedEnvelope {
    pub span: f64,
    pub d_min: f64,
    pub d_max: f64,
    pub envelope: Option<ConvexEnvelope>,
}

impl ShiftedEnvelope {
    pub fn from_curve(r_i2: &BoundCurve, span: f64, range: &FeasibilityRange) -> Self {
        let finite: Vec<(f64, f64)> = r_i2.points.iter().filter_map(|p| p.rate.map(|r| (p.d, r))).collect();
        Self {
            span,
            d_min: range.d_min,
            d_max: range.d_max,
            envelope: ConvexEnvelope::from_points(&finite),
        }
    }

    /// Samples `R_I2` at `g + 𝚍` for every grid value inside the memoryless
    /// range, plus both ends of the range.
    pub fn build(p: &SourcePmf, d: &DistortionTensor, grid: &[f64], cfg: &SolverConfig) -> Result<Self> {
        let range = feasibility_range(p, d, cfg)?;
        let span = memory_span(d);
        let mut pts: Vec<f64> = grid
            .iter()
            .map(|g| g + span)
            .filter(|s| *s > range.d_min && *s < range.d_max)
            .collect();
        pts.push(range.d_min);
        pts.push(range.d_max);
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
        let curve = memoryless_curve(p, d, &pts, cfg)?;
        Ok(Self::from_curve(&curve, span, &range))
    }

    pub fn eval(&self, d: f64) -> OuterValue {
        let s = d + self.span;
        if s < self.d_min - FEASIBILITY_TOL {
            return OuterValue::OutOfDomain;
        }
        if s >= self.d_max {
            return OuterValue::Bound(0.0);
        }
        match self.envelope.as_ref().and_then(|e| e.eval(s.max(self.d_min))) {
            Some(v) => OuterValue::Bound(v.max(0.0)),
            None => OuterValue::OutOfDomain,
        }
    }
}

/// Shifted-envelope bound at a single distortion, from `R_I2` sampled on 33
/// evenly spaced points of the memoryless range plus `D + 𝚍`.
pub fn rate_outer_envelope_shift(p: &SourcePmf, d: &DistortionTensor, target: f64, cfg: &SolverConfig) -> Result<OuterValue> {
    let range = feasibility_range(p, d, cfg)?;
    let span = memory_span(d);
    let mut grid: Vec<f64> = (0..33)
        .map(|i| range.d_min + (range.d_max - range.d_min) * i as f64 / 32.0 - span)
        .collect();
    grid.push(target);
    let env = ShiftedEnvelope::build(p, d, &grid, cfg)?;
    Ok(env.eval(target))
}

fn check_grid(bound: BoundId, grid: &[f64]) -> Result<()> {
    BoundCurve::new(bound, grid.iter().map(|&t| CurvePoint::new(t, None)).collect()).map(|_| ())
}

fn single_letter_curve(prob: &SingleLetterProblem, bound: BoundId, grid: &[f64], cfg: &SolverConfig) -> Result<BoundCurve> {
    check_grid(bound, grid)?;
    cfg.validate()?;
    let vals = par_map(grid, |_, &t| single_raw(prob, t, cfg));
    let mut points: Vec<CurvePoint> = grid
        .iter()
        .zip(vals)
        .map(|(&t, v)| CurvePoint {
            term: Some(bound.label().to_string()),
            ..CurvePoint::new(t, v.value())
        })
        .collect();
    carry_backward_max(&mut points);
    let mut curve = BoundCurve::new(bound, points)?;
    curve.solver = Some(cfg.clone());
    Ok(curve)
}

pub fn product_curve(p: &SourcePmf, d: &DistortionTensor, grid: &[f64], cfg: &SolverConfig) -> Result<BoundCurve> {
    single_letter_curve(&SingleLetterProblem::product(p, d)?, BoundId::RO1, grid, cfg)
}

pub fn two_letter_curve(p: &SourcePmf, d: &DistortionTensor, grid: &[f64], cfg: &SolverConfig) -> Result<BoundCurve> {
    single_letter_curve(&SingleLetterProblem::two_letter(p, d)?, BoundId::RO2, grid, cfg)
}

/// Shifted-envelope bound on `grid`; points where it is undefined carry no
/// value and the term `out_of_domain`.
pub fn shift_curve(p: &SourcePmf, d: &DistortionTensor, grid: &[f64], cfg: &SolverConfig) -> Result<BoundCurve> {
    check_grid(BoundId::Thm3, grid)?;
    let env = ShiftedEnvelope::build(p, d, grid, cfg)?;
    let points = grid
        .iter()
        .map(|&t| {
            let v = env.eval(t);
            CurvePoint {
                term: Some(if v == OuterValue::OutOfDomain { "out_of_domain" } else { "THM3" }.to_string()),
                ..CurvePoint::new(t, v.value())
            }
        })
        .collect();
    let mut curve = BoundCurve::new(BoundId::Thm3, points)?;
    curve.solver = Some(cfg.clone());
    curve.notes.push(format!("memory span {}", env.span));
    Ok(curve)
}

/// `R_1 = max{R_O1, shifted envelope, 0}`. Each point records the winning
/// term; points below the smallest achievable distortion are infeasible.
pub fn outer_curve(p: &SourcePmf, d: &DistortionTensor, grid: &[f64], cfg: &SolverConfig) -> Result<BoundCurve> {
    check_grid(BoundId::R1, grid)?;
    cfg.validate()?;
    let prob = SingleLetterProblem::product(p, d)?;
    let ro1 = par_map(grid, |_, &t| single_raw(&prob, t, cfg));
    let env = ShiftedEnvelope::build(p, d, grid, cfg)?;
    let points: Vec<CurvePoint> = grid
        .iter()
        .zip(ro1)
        .map(|(&t, o1)| {
            let Some(o1) = o1.value() else {
                return CurvePoint {
                    term: Some("infeasible".into()),
                    ..CurvePoint::new(t, None)
                };
            };
            let mut best = (0.0, "zero");
            if o1 > best.0 {
                best = (o1, "R_O1");
            }
            if let Some(s) = env.eval(t).value() {
                if s > best.0 {
                    best = (s, "THM3");
                }
            }
            CurvePoint {
                term: Some(best.1.to_string()),
                ..CurvePoint::new(t, Some(best.0))
            }
        })
        .collect();
    let mut points = points;
    carry_backward_max(&mut points);
    let mut curve = BoundCurve::new(BoundId::R1, points)?;
    curve.solver = Some(cfg.clone());
    curve.notes.push(format!(
        "shifted term reads the lower convex envelope of R_I2 at D + {}",
        env.span
    ));
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::binary_entropy;
    use approx::assert_abs_diff_eq;

    fn hamming() -> SingleLetterProblem {
        SingleLetterProblem::classical(&SourcePmf::uniform(2).unwrap(), &[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    #[test]
    fn sweep_follows_binary_closed_form() {
        let pts = blahut_arimoto_sweep(&hamming(), &SolverConfig::default()).unwrap();
        for pt in pts.iter().filter(|p| p.d < 0.5 - 1e-6) {
            assert!((pt.rate - (1.0 - binary_entropy(pt.d))).abs() < 1e-4, "{pt:?}");
        }
    }

    #[test]
    fn sweep_endpoints() {
        let cfg = SolverConfig::default();
        let flat = blahut_arimoto(&hamming(), -1e-4, &cfg).unwrap();
        assert!(flat.rate < 1e-6 && (flat.d - 0.5).abs() < 1e-3, "{flat:?}");
        let steep = blahut_arimoto(&hamming(), -1e5, &cfg).unwrap();
        assert!(steep.d < 1e-9);
        assert!(blahut_arimoto(&hamming(), 0.5, &cfg).is_err());
    }

    #[test]
    fn lagrangian_is_non_increasing() {
        let prob = SingleLetterProblem::classical(
            &SourcePmf::new(vec![0.2, 0.5, 0.3]).unwrap(),
            &[vec![0.0, 1.0, 2.0, 0.4], vec![1.0, 0.0, 1.5, 0.6], vec![2.0, 0.3, 0.0, 0.9]],
        )
        .unwrap();
        let (_, trace) = blahut_arimoto_trace(&prob, -3.0, &SolverConfig::default()).unwrap();
        for w in trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn dual_bound_is_tight_and_valid() {
        let cfg = SolverConfig::default();
        for &d in &[0.0, 0.01, 0.1, 0.25, 0.4, 0.499] {
            let v = rate_outer_single(&hamming(), d, &cfg).unwrap().value().unwrap();
            let exact = 1.0 - binary_entropy(d);
            assert!(v <= exact + 1e-9, "D={d} {v} > {exact}");
            assert!(v >= exact - 1e-4, "D={d} {v} ≪ {exact}");
        }
        assert_eq!(rate_outer_single(&hamming(), 0.6, &cfg).unwrap(), OuterValue::Bound(0.0));
        assert_eq!(rate_outer_single(&hamming(), -0.1, &cfg).unwrap(), OuterValue::Infeasible);
    }

    #[test]
    fn product_relaxation_on_fig2() {
        let p = SourcePmf::uniform(2).unwrap();
        let cfg = SolverConfig::default();
        for c in [0.0, 0.25, 1.0] {
            let d = DistortionTensor::fig2(c).unwrap();
            let v = rate_outer_product(&p, &d, 0.25, &cfg).unwrap().value().unwrap();
            assert_abs_diff_eq!(v, 1.0 - binary_entropy(0.25), epsilon = 1e-3);
            assert_eq!(rate_outer_product(&p, &d, 0.5, &cfg).unwrap(), OuterValue::Bound(0.0));
        }
    }

    #[test]
    fn two_letter_guard() {
        let p = SourcePmf::uniform(10).unwrap();
        let d = DistortionTensor::constant(10, 30, 1.0).unwrap();
        assert!(matches!(
            rate_outer_two_letter(&p, &d, 0.5, &SolverConfig::default()),
            Err(SrdError::SizeGuard(_))
        ));
    }

    #[test]
    fn two_letter_memoryless_hamming() {
        let p = SourcePmf::uniform(2).unwrap();
        let d = DistortionTensor::hamming(2).unwrap();
        let cfg = SolverConfig::default();
        for &t in &[0.1, 0.2, 0.3] {
            let v = rate_outer_two_letter(&p, &d, t, &cfg).unwrap().value().unwrap();
            assert_abs_diff_eq!(v, 1.0 - binary_entropy(t), epsilon = 2e-3);
        }
    }

    #[test]
    fn shift_examples() {
        let p = SourcePmf::uniform(2).unwrap();
        let cfg = SolverConfig::default();
        let fig2 = DistortionTensor::fig2(1.0).unwrap();
        assert_eq!(rate_outer_envelope_shift(&p, &fig2, 0.3, &cfg).unwrap(), OuterValue::Bound(0.0));
        let gamma = DistortionTensor::gamma_hamming(0.5).unwrap();
        let v = rate_outer_envelope_shift(&p, &gamma, 0.11, &cfg).unwrap().value().unwrap();
        assert!((v - (1.0 - binary_entropy(0.36))).abs() < 5e-3, "{v}");
        assert_eq!(rate_outer_envelope_shift(&p, &gamma, -0.5, &cfg).unwrap(), OuterValue::OutOfDomain);
    }
}
