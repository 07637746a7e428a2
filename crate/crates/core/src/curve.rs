//! Sampled rate-distortion curves and their lower convex envelopes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SrdError};
use crate::problem::{MarkovKernel, MemorylessKernel};
use crate::solver::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BoundId {
    /// Markov-kernel inner bound.
    #[serde(rename = "R_I1")]
    RI1,
    /// Memoryless-kernel inner bound.
    #[serde(rename = "R_I2")]
    RI2,
    #[serde(rename = "ENV_I1")]
    EnvI1,
    #[serde(rename = "ENV_I2")]
    EnvI2,
    /// Relaxation with a free memory symbol.
    #[serde(rename = "R_O1")]
    RO1,
    /// Relaxation that keeps the memory on every other step.
    #[serde(rename = "R_O2")]
    RO2,
    /// Memoryless envelope shifted by the memory span.
    #[serde(rename = "THM3")]
    Thm3,
    /// Best outer bound: `max{R_O1, shifted envelope, 0}`.
    R1,
    /// Best inner bound: the Markov-kernel bound.
    R2,
}

impl BoundId {
    pub const ALL: [BoundId; 9] = [
        BoundId::RI1,
        BoundId::RI2,
        BoundId::EnvI1,
        BoundId::EnvI2,
        BoundId::RO1,
        BoundId::RO2,
        BoundId::Thm3,
        BoundId::R1,
        BoundId::R2,
    ];

    pub fn label(self) -> &'static str {
        match self {
            BoundId::RI1 => "R_I1",
            BoundId::RI2 => "R_I2",
            BoundId::EnvI1 => "ENV_I1",
            BoundId::EnvI2 => "ENV_I2",
            BoundId::RO1 => "R_O1",
            BoundId::RO2 => "R_O2",
            BoundId::Thm3 => "THM3",
            BoundId::R1 => "R1",
            BoundId::R2 => "R2",
        }
    }

    /// Inner bounds are upper bounds on the rate-distortion function.
    pub fn is_inner(self) -> bool {
        matches!(self, BoundId::RI1 | BoundId::RI2 | BoundId::EnvI1 | BoundId::EnvI2 | BoundId::R2)
    }

    fn envelope_id(self) -> Self {
        match self {
            BoundId::RI1 | BoundId::R2 => BoundId::EnvI1,
            BoundId::RI2 => BoundId::EnvI2,
            other => other,
        }
    }
}

impl fmt::Display for BoundId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for BoundId {
    type Err = SrdError;

    /// Accepts labels case-insensitively, with or without underscores
    /// (`R_I2`, `ri2`, `env_i1`).
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| *c != '_').flat_map(char::to_uppercase).collect();
        BoundId::ALL
            .into_iter()
            .find(|b| b.label().replace('_', "") == key)
            .ok_or_else(|| SrdError::InvalidArgument(format!("unknown bound '{s}'")))
    }
}

/// Kernel certifying an inner-bound point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "table", rename_all = "snake_case")]
pub enum Witness {
    Memoryless(MemorylessKernel),
    Markov(MarkovKernel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub d: f64,
    /// `None` marks an infeasible point.
    pub rate: Option<f64>,
    /// Which component produced the value, for composite curves.
    pub term: Option<String>,
    pub witness: Option<Witness>,
    pub converged: bool,
}

impl CurvePoint {
    pub fn new(d: f64, rate: Option<f64>) -> Self {
        Self {
            d,
            rate,
            term: None,
            witness: None,
            converged: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCurve {
    pub bound: BoundId,
    pub points: Vec<CurvePoint>,
    pub solver: Option<SolverConfig>,
    pub notes: Vec<String>,
}

impl BoundCurve {
    pub fn new(bound: BoundId, points: Vec<CurvePoint>) -> Result<Self> {
        if points.windows(2).any(|w| !(w[1].d > w[0].d)) {
            return Err(SrdError::InvalidArgument(format!(
                "{bound} curve distortions must be strictly increasing"
            )));
        }
        Ok(Self {
            bound,
            points,
            solver: None,
            notes: Vec::new(),
        })
    }

    pub fn from_values(bound: BoundId, values: &[(f64, Option<f64>)]) -> Result<Self> {
        Self::new(bound, values.iter().map(|&(d, r)| CurvePoint::new(d, r)).collect())
    }

    pub fn distortions(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.d).collect()
    }

    pub fn rates(&self) -> Vec<Option<f64>> {
        self.points.iter().map(|p| p.rate).collect()
    }

    /// Linear interpolation between the neighbouring samples. `None` outside
    /// the sampled range or when a neighbour is infeasible.
    pub fn value_at(&self, d: f64) -> Option<f64> {
        let pts = &self.points;
        let first = pts.first()?;
        if d < first.d || d > pts.last()?.d {
            return None;
        }
        let i = pts.partition_point(|p| p.d <= d);
        if i == 0 {
            return first.rate;
        }
        let lo = &pts[i - 1];
        if lo.d == d || i == pts.len() {
            return lo.rate;
        }
        let hi = &pts[i];
        let (rl, rh) = (lo.rate?, hi.rate?);
        let t = (d - lo.d) / (hi.d - lo.d);
        Some(rl + t * (rh - rl))
    }
}

/// Largest convex non-increasing function below a finite point set,
/// represented by its vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexEnvelope {
    vertices: Vec<(f64, f64)>,
}

impl ConvexEnvelope {
    /// `points` must be sorted by distortion. Returns `None` when empty.
    pub fn from_points(points: &[(f64, f64)]) -> Option<Self> {
        if points.is_empty() {
            return None;
        }
        // Monotone-chain lower hull.
        let mut hull: Vec<(f64, f64)> = Vec::with_capacity(points.len());
        for &p in points {
            while hull.len() >= 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
                if cross <= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        // Flatten the rising tail, if any: past its minimum a rate bound can
        // only stay level.
        let argmin = hull
            .iter()
            .enumerate()
            .fold(0, |best, (i, v)| if v.1 < hull[best].1 { i } else { best });
        hull.truncate(argmin + 1);
        Some(Self { vertices: hull })
    }

    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.vertices
    }

    /// `None` left of the first sample; level to the right of the last.
    pub fn eval(&self, d: f64) -> Option<f64> {
        let v = &self.vertices;
        if d < v[0].0 {
            return None;
        }
        let i = v.partition_point(|p| p.0 <= d);
        if i == v.len() {
            return Some(v[v.len() - 1].1);
        }
        let (a, b) = (v[i - 1], v[i]);
        let t = (d - a.0) / (b.0 - a.0);
        Some(a.1 + t * (b.1 - a.1))
    }
}

/// Lower convex envelope of the feasible samples, evaluated back on the same
/// distortion grid. Points left of the first feasible sample stay infeasible.
/// With fewer than two feasible samples the input is returned unchanged.
pub fn lower_convex_envelope(curve: &BoundCurve) -> BoundCurve {
    let finite: Vec<(f64, f64)> = curve.points.iter().filter_map(|p| p.rate.map(|r| (p.d, r))).collect();
    let mut out = curve.clone();
    out.bound = curve.bound.envelope_id();
    if finite.len() < 2 {
        return out;
    }
    let env = ConvexEnvelope::from_points(&finite).expect("non-empty");
    for p in &mut out.points {
        p.rate = env.eval(p.d);
        p.witness = None;
    }
    out.notes.push(format!("lower convex envelope of {}", curve.bound));
    out
}

/// Running minimum from left to right. A point above an earlier one inherits
/// that point's value and witness, since a kernel meeting a smaller
/// distortion target meets every larger one too.
pub(crate) fn carry_forward_min(points: &mut [CurvePoint]) {
    let mut best: Option<usize> = None;
    for i in 0..points.len() {
        match (best, points[i].rate) {
            (Some(b), r) if r.is_none_or(|r| r > points[b].rate.unwrap()) => {
                let src = points[b].clone();
                let p = &mut points[i];
                p.rate = src.rate;
                p.witness = src.witness;
                p.converged = src.converged;
                p.term = Some(format!("carried from D={}", src.d));
            }
            (_, Some(_)) => best = Some(i),
            _ => {}
        }
    }
}

/// Running maximum from right to left over the finite values. A lower bound
/// at a larger distortion also bounds every smaller one.
pub(crate) fn carry_backward_max(points: &mut [CurvePoint]) {
    let mut best: Option<(f64, Option<String>)> = None;
    for p in points.iter_mut().rev() {
        let Some(r) = p.rate else { continue };
        match &best {
            Some((b, term)) if *b > r => {
                p.rate = Some(*b);
                p.term = term.clone();
            }
            _ => best = Some((r, p.term.clone())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn chord_example() {
        let c = BoundCurve::from_values(BoundId::RI2, &[(0.0, Some(1.0)), (0.5, Some(0.6)), (1.0, Some(0.0))]).unwrap();
        let e = lower_convex_envelope(&c);
        assert_eq!(e.bound, BoundId::EnvI2);
        assert!((e.points[1].rate.unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn convex_input_is_unchanged() {
        let vals: Vec<(f64, Option<f64>)> = (0..20)
            .map(|i| {
                let d = 0.02 + i as f64 * 0.02;
                (d, Some(1.0 - crate::info::binary_entropy(d)))
            })
            .collect();
        let c = BoundCurve::from_values(BoundId::RI1, &vals).unwrap();
        let e = lower_convex_envelope(&c);
        for (a, b) in c.points.iter().zip(&e.points) {
            assert!((a.rate.unwrap() - b.rate.unwrap()).abs() <= 1e-12);
        }
    }

    #[test]
    fn infeasible_prefix_is_preserved() {
        let c = BoundCurve::from_values(
            BoundId::RI1,
            &[(0.0, None), (0.1, None), (0.2, Some(1.0)), (0.3, Some(0.2)), (0.4, Some(0.1))],
        )
        .unwrap();
        let e = lower_convex_envelope(&c);
        assert_eq!(e.points[0].rate, None);
        assert_eq!(e.points[1].rate, None);
        assert_eq!(e.points[2].rate, Some(1.0));
    }

    #[test]
    fn short_input_returned_unchanged() {
        let c = BoundCurve::from_values(BoundId::RI2, &[(0.0, None), (0.5, Some(0.3))]).unwrap();
        assert_eq!(lower_convex_envelope(&c).rates(), c.rates());
    }

    #[test]
    fn rising_tail_is_flattened() {
        let env = ConvexEnvelope::from_points(&[(0.0, 1.0), (1.0, 0.0), (2.0, 0.5)]).unwrap();
        assert_eq!(env.eval(1.5), Some(0.0));
        assert_eq!(env.eval(5.0), Some(0.0));
        assert_eq!(env.eval(-0.1), None);
    }

    #[test]
    fn curve_requires_increasing_grid() {
        assert!(BoundCurve::from_values(BoundId::R1, &[(0.1, Some(1.0)), (0.1, Some(0.5))]).is_err());
    }

    #[test]
    fn value_at_interpolates() {
        let c = BoundCurve::from_values(BoundId::R1, &[(0.0, Some(1.0)), (1.0, Some(0.0)), (2.0, None)]).unwrap();
        assert_eq!(c.value_at(0.25), Some(0.75));
        assert_eq!(c.value_at(1.0), Some(0.0));
        assert_eq!(c.value_at(1.5), None);
        assert_eq!(c.value_at(-1.0), None);
    }

    #[test]
    fn carry_helpers_make_curves_monotone() {
        let mut pts: Vec<CurvePoint> = [Some(1.0), Some(1.2), None, Some(0.5)]
            .iter()
            .enumerate()
            .map(|(i, r)| CurvePoint::new(i as f64, *r))
            .collect();
        carry_forward_min(&mut pts);
        assert_eq!(pts.iter().map(|p| p.rate).collect::<Vec<_>>(), vec![Some(1.0), Some(1.0), Some(1.0), Some(0.5)]);
        let mut pts: Vec<CurvePoint> = [None, Some(0.4), Some(0.1), Some(0.3), Some(0.0)]
            .iter()
            .enumerate()
            .map(|(i, r)| CurvePoint::new(i as f64, *r))
            .collect();
        carry_backward_max(&mut pts);
        assert_eq!(
            pts.iter().map(|p| p.rate).collect::<Vec<_>>(),
            vec![None, Some(0.4), Some(0.3), Some(0.3), Some(0.0)]
        );
    }

    #[test]
    fn bound_labels_parse() {
        for b in BoundId::ALL {
            assert_eq!(b.label().parse::<BoundId>().unwrap(), b);
        }
        assert_eq!("ri2".parse::<BoundId>().unwrap(), BoundId::RI2);
        assert!("R9".parse::<BoundId>().is_err());
    }

    proptest! {
        #[test]
        fn envelope_is_below_convex_and_non_increasing(
            raw in prop::collection::vec((0.0f64..1.0, 0.0f64..2.0), 2..30)
        ) {
            let mut pts = raw.clone();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            pts.dedup_by(|a, b| a.0 == b.0);
            prop_assume!(pts.len() >= 2);
            let vals: Vec<(f64, Option<f64>)> = pts.iter().map(|&(d, r)| (d, Some(r))).collect();
            let c = BoundCurve::from_values(BoundId::RI2, &vals).unwrap();
            let e = lower_convex_envelope(&c);
            let r: Vec<f64> = e.rates().into_iter().map(Option::unwrap).collect();
            for (a, b) in r.iter().zip(&pts) {
                prop_assert!(*a <= b.1 + 1e-12);
            }
            for w in r.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-12);
            }
            // Convexity: every interior value lies below the chord of its neighbours.
            for i in 1..r.len() - 1 {
                let (d0, d1, d2) = (pts[i - 1].0, pts[i].0, pts[i + 1].0);
                let t = (d1 - d0) / (d2 - d0);
                prop_assert!(r[i] <= r[i - 1] + t * (r[i + 1] - r[i - 1]) + 1e-9);
            }
        }
    }
}
