//! WebAssembly bindings for the static demo page in `www/`. Every export
//! returns a JSON document; the plain `*_json` functions hold the logic so it
//! can be tested natively.

use serde::Serialize;
use srd_core::{
    convexity_report, feasibility_range, gaussian_feasibility, gaussian_rate_inner, inner_curves, memory_span,
    outer_curve, DistortionTensor, GaussianSpec, SolverConfig, SourcePmf, SrdError,
};
use wasm_bindgen::prelude::*;

/// Upper end of the distortion axis of the switching-cost demo.
const FIG2_D_MAX: f64 = 0.6;
const MAX_POINTS: usize = 121;

#[derive(Serialize)]
struct Curves {
    d: Vec<f64>,
    /// Outer bound; `null` where infeasible.
    r1: Vec<Option<f64>>,
    /// Markov-kernel inner bound.
    r2: Vec<Option<f64>>,
    /// Memoryless inner bound.
    ri2: Vec<Option<f64>>,
}

#[derive(Serialize)]
struct GaussianCurve {
    d: Vec<f64>,
    r: Vec<Option<f64>>,
    d_min: f64,
    d_zero_rate: f64,
}

#[derive(Serialize)]
struct Analysis {
    c: f64,
    memory_span: f64,
    d_min: f64,
    d_max: f64,
    e1: Option<f64>,
    e2: Option<f64>,
    convex: bool,
    affine: bool,
    witness_min: Vec<Vec<f64>>,
}

fn grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, SrdError> {
    if !(2..=MAX_POINTS).contains(&points) {
        return Err(SrdError::InvalidArgument(format!("points must lie in 2..={MAX_POINTS}, got {points}")));
    }
    Ok((0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect())
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("document serializes")
}

/// Lighter solver settings so a page interaction stays interactive.
fn demo_solver() -> SolverConfig {
    SolverConfig {
        restarts: 1,
        ..SolverConfig::default()
    }
}

pub fn fig2_curves_json(c: f64, points: usize) -> Result<String, SrdError> {
    let p = SourcePmf::uniform(2)?;
    let d = DistortionTensor::fig2(c)?;
    let g = grid(0.0, FIG2_D_MAX, points)?;
    let cfg = demo_solver();
    let (ri2, ri1) = inner_curves(&p, &d, &g, &cfg)?;
    let r1 = outer_curve(&p, &d, &g, &cfg)?;
    Ok(to_json(&Curves {
        d: g,
        r1: r1.rates(),
        r2: ri1.rates(),
        ri2: ri2.rates(),
    }))
}

pub fn gaussian_curve_json(sigma2: f64, gamma: f64, points: usize) -> Result<String, SrdError> {
    let spec = GaussianSpec::new(sigma2, gamma)?;
    let f = gaussian_feasibility(&spec);
    let g = grid(0.0, 1.25 * f.d_zero_rate, points)?;
    let r = g.iter().map(|&d| gaussian_rate_inner(&spec, d)).collect();
    Ok(to_json(&GaussianCurve {
        d: g,
        r,
        d_min: f.d_min,
        d_zero_rate: f.d_zero_rate,
    }))
}

pub fn analyze_fig2_json(c: f64) -> Result<String, SrdError> {
    let p = SourcePmf::uniform(2)?;
    let d = DistortionTensor::fig2(c)?;
    let range = feasibility_range(&p, &d, &demo_solver())?;
    let report = convexity_report(&d, &p)?;
    Ok(to_json(&Analysis {
        c,
        memory_span: memory_span(&d),
        d_min: range.d_min,
        d_max: range.d_max,
        e1: report.e1,
        e2: report.e2,
        convex: report.is_convex,
        affine: report.is_affine,
        witness_min: range.witness_min.to_rows(),
    }))
}

fn js_err(e: SrdError) -> JsError {
    JsError::new(&e.to_string())
}

/// `R_1`, `R_2` and `R_I2` for the switching-cost tensor with start-up cost `c`.
#[wasm_bindgen]
pub fn fig2_curves(c: f64, points: usize) -> Result<String, JsError> {
    fig2_curves_json(c, points).map_err(js_err)
}

/// Closed-form memoryless inner bound for the Gaussian source.
#[wasm_bindgen]
pub fn gaussian_curve(sigma2: f64, gamma: f64, points: usize) -> Result<String, JsError> {
    gaussian_curve_json(sigma2, gamma, points).map_err(js_err)
}

/// Memory span, feasible distortion range and convexity of the switching-cost tensor.
#[wasm_bindgen]
pub fn analyze_fig2(c: f64) -> Result<String, JsError> {
    analyze_fig2_json(c).map_err(js_err)
}
