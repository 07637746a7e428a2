//! The expected-distortion functional of a memoryless kernel, the memory span
//! of a tensor, and convexity diagnostics of the functional.
//!
//! For a memoryless kernel `W(y|x)` the previous reconstruction is an
//! independent copy of the current one, so the expected distortion is
//!
//! ```text
//! Λ(W) = Σ p(x) W(y|x) p_Y(ŷ) d(x, y, ŷ),   p_Y(ŷ) = Σ p(x') W(ŷ|x')
//! ```
//!
//! which is quadratic in `W`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::problem::{output_marginal, DistortionTensor, MemorylessKernel, SourcePmf};

/// Tolerance on the smallest Hessian eigenvalue for a convex verdict.
pub const HESSIAN_TOL: f64 = 1e-9;

pub fn lambda_value(w: &MemorylessKernel, p: &SourcePmf, d: &DistortionTensor) -> Result<f64> {
    w.check_problem(p, d)?;
    Ok(lambda_raw(p.probs(), w.flat(), d))
}

pub(crate) fn lambda_raw(p: &[f64], w: &[f64], d: &DistortionTensor) -> f64 {
    let ny = d.y_size();
    let py = output_marginal(p, w, ny);
    let mut total = 0.0;
    for (x, (&px, row)) in p.iter().zip(w.chunks(ny)).enumerate() {
        if px == 0.0 {
            continue;
        }
        let slice = d.slice(x);
        let mut acc = 0.0;
        for (y, &wv) in row.iter().enumerate() {
            if wv == 0.0 {
                continue;
            }
            let drow = &slice[y * ny..(y + 1) * ny];
            let inner: f64 = drow.iter().zip(&py).map(|(a, b)| a * b).sum();
            acc += wv * inner;
        }
        total += px * acc;
    }
    total
}

/// Linearization data of `Λ` at `W`.
pub(crate) struct LambdaLinearization {
    /// `Λ(W)`.
    pub value: f64,
    /// `∂Λ/∂W(y|x) / p(x)`, flat row-major.
    pub grad: Vec<f64>,
}

/// Value and scaled gradient of `Λ`. The gradient splits into the cost of
/// emitting `y` against the output marginal, `Σ_ŷ d(x,y,ŷ) p_Y(ŷ)`, and the
/// cost `y` imposes on the next step as the memory symbol,
/// `Σ_{x',y'} p(x') W(y'|x') d(x', y', y)`.
pub(crate) fn lambda_linearization(p: &[f64], w: &[f64], d: &DistortionTensor) -> LambdaLinearization {
    let nx = d.x_size();
    let ny = d.y_size();
    let py = output_marginal(p, w, ny);
    let mut grad = vec![0.0; nx * ny];
    let mut incoming = vec![0.0; ny];
    let mut value = 0.0;
    for x in 0..nx {
        let slice = d.slice(x);
        let row = &w[x * ny..(x + 1) * ny];
        for y in 0..ny {
            let drow = &slice[y * ny..(y + 1) * ny];
            let emit: f64 = drow.iter().zip(&py).map(|(a, b)| a * b).sum();
            grad[x * ny + y] = emit;
            let mass = p[x] * row[y];
            value += mass * emit;
            if mass != 0.0 {
                for (acc, dv) in incoming.iter_mut().zip(drow) {
                    *acc += mass * dv;
                }
            }
        }
    }
    for row in grad.chunks_mut(ny) {
        for (g, e) in row.iter_mut().zip(&incoming) {
            *g += e;
        }
    }
    LambdaLinearization { value, grad }
}

/// `max d(x, y, z) − d(x, y, t)` over all `(x, y, z, t)`: the largest change
/// in cost obtainable by swapping only the memory argument. Always `≥ 0`.
pub fn memory_span(d: &DistortionTensor) -> f64 {
    let ny = d.y_size();
    let mut span = 0.0_f64;
    for x in 0..d.x_size() {
        for y in 0..ny {
            let row = &d.slice(x)[y * ny..(y + 1) * ny];
            let (lo, hi) = row
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
            span = span.max(hi - lo);
        }
    }
    span
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    /// `d(0,0,0) + d(0,1,1) − d(0,1,0) − d(0,0,1)`; binary uniform problems only.
    pub e1: Option<f64>,
    /// `d(1,0,0) + d(1,1,1) − d(1,1,0) − d(1,0,1)`; binary uniform problems only.
    pub e2: Option<f64>,
    pub hessian_min_eigenvalue: f64,
    pub is_convex: bool,
    pub is_affine: bool,
    /// False when the verdict rests on the general Hessian test alone (source
    /// not uniform binary, or larger alphabets).
    pub binary_uniform: bool,
}

/// Hessian of `Λ` over the free kernel coordinates: for each row `x` the
/// entries `W(i|x)`, `i < |Y|−1`, with the last entry fixed by the simplex
/// constraint. Constant because `Λ` is quadratic.
pub fn lambda_hessian(d: &DistortionTensor, p: &SourcePmf) -> Result<DMatrix<f64>> {
    d.check_source(p)?;
    let nx = d.x_size();
    let ny = d.y_size();
    let free = ny - 1;
    let last = ny - 1;
    let n = nx * free;
    // g_x(i, j) = d(x,i,j) − d(x,i,L) − d(x,L,j) + d(x,L,L)
    let g = |x: usize, i: usize, j: usize| d.get(x, i, j) - d.get(x, i, last) - d.get(x, last, j) + d.get(x, last, last);
    let probs = p.probs();
    let mut h = DMatrix::zeros(n, n);
    for a in 0..nx {
        for b in 0..nx {
            let w = probs[a] * probs[b];
            for i in 0..free {
                for j in 0..free {
                    h[(a * free + i, b * free + j)] = w * (g(a, i, j) + g(b, j, i));
                }
            }
        }
    }
    Ok(h)
}

pub fn convexity_report(d: &DistortionTensor, p: &SourcePmf) -> Result<ConvexityReport> {
    let h = lambda_hessian(d, p)?;
    let min_eig = if h.nrows() == 0 {
        0.0
    } else {
        SymmetricEigen::new(h.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    };
    let is_affine = h.iter().all(|v| v.abs() <= HESSIAN_TOL);
    let binary_uniform = d.x_size() == 2 && d.y_size() == 2 && p.is_uniform();
    let (e1, e2) = if binary_uniform {
        (
            Some(d.get(0, 0, 0) + d.get(0, 1, 1) - d.get(0, 1, 0) - d.get(0, 0, 1)),
            Some(d.get(1, 0, 0) + d.get(1, 1, 1) - d.get(1, 1, 0) - d.get(1, 0, 1)),
        )
    } else {
        (None, None)
    };
    Ok(ConvexityReport {
        e1,
        e2,
        hessian_min_eigenvalue: min_eig,
        is_convex: is_affine || min_eig >= -HESSIAN_TOL,
        is_affine,
        binary_uniform,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn uniform2() -> SourcePmf {
        SourcePmf::uniform(2).unwrap()
    }

    #[test]
    fn lambda_examples() {
        let p = uniform2();
        let id = MemorylessKernel::identity(2);
        for gamma in [0.0, 0.3, 1.0] {
            let d = DistortionTensor::gamma_hamming(gamma).unwrap();
            assert_abs_diff_eq!(lambda_value(&id, &p, &d).unwrap(), gamma / 2.0, epsilon = 1e-15);
        }
        let k = DistortionTensor::constant(2, 3, 0.7).unwrap();
        let w = MemorylessKernel::new(&[vec![0.2, 0.3, 0.5], vec![0.6, 0.4, 0.0]]).unwrap();
        assert_abs_diff_eq!(lambda_value(&w, &p, &k).unwrap(), 0.7, epsilon = 1e-15);
        // Identity output on the start-up tensor: only (x=1, y=1, ŷ=0) costs c,
        // with weight p(1) p_Y(0) = 1/4.
        let d = DistortionTensor::fig2(1.0).unwrap();
        assert_abs_diff_eq!(lambda_value(&id, &p, &d).unwrap(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn lambda_dimension_mismatch() {
        let d = DistortionTensor::fig2(1.0).unwrap();
        let w = MemorylessKernel::identity(3);
        assert!(lambda_value(&w, &uniform2(), &d).is_err());
        assert!(lambda_value(&MemorylessKernel::identity(2), &SourcePmf::uniform(3).unwrap(), &d).is_err());
    }

    /// Brute-force closed form on the (α, β) square for the start-up tensor:
    /// Λ = ½((1−α) + β) + c q(1−q), q = (α+β)/2.
    #[test]
    fn lambda_matches_closed_form_on_grid() {
        let p = uniform2();
        for c in [0.0, 0.5, 1.0, 2.0] {
            let d = DistortionTensor::fig2(c).unwrap();
            for i in 0..=10 {
                for j in 0..=10 {
                    let (a, b) = (i as f64 / 10.0, j as f64 / 10.0);
                    let w = MemorylessKernel::new(&[vec![a, 1.0 - a], vec![b, 1.0 - b]]).unwrap();
                    let q = (a + b) / 2.0;
                    let expected = 0.5 * ((1.0 - a) + b) + c * q * (1.0 - q);
                    assert_abs_diff_eq!(lambda_value(&w, &p, &d).unwrap(), expected, epsilon = 1e-14);
                }
            }
        }
    }

    #[test]
    fn linearization_matches_finite_differences() {
        let d = DistortionTensor::from_fn(3, 3, |x, y, z| ((x * 7 + y * 3 + z * 5) % 4) as f64 * 0.5).unwrap();
        let p = [0.2, 0.5, 0.3];
        let w = [0.1, 0.6, 0.3, 0.4, 0.4, 0.2, 0.3, 0.3, 0.4];
        let lin = lambda_linearization(&p, &w, &d);
        assert_abs_diff_eq!(lin.value, lambda_raw(&p, &w, &d), epsilon = 1e-14);
        let h = 1e-6;
        for k in 0..9 {
            let mut plus = w;
            let mut minus = w;
            plus[k] += h;
            minus[k] -= h;
            let fd = (lambda_raw(&p, &plus, &d) - lambda_raw(&p, &minus, &d)) / (2.0 * h);
            assert_abs_diff_eq!(fd, p[k / 3] * lin.grad[k], epsilon = 1e-8);
        }
    }

    #[test]
    fn memory_span_examples() {
        assert_eq!(memory_span(&DistortionTensor::hamming(3).unwrap()), 0.0);
        for c in [0.0, 0.25, 1.0, 3.0] {
            assert_eq!(memory_span(&DistortionTensor::fig2(c).unwrap()), c);
        }
        for g in [0.1, 0.5] {
            assert_abs_diff_eq!(memory_span(&DistortionTensor::gamma_hamming(g).unwrap()), g, epsilon = 1e-15);
        }
    }

    /// Exhaustive enumeration over (x, y, z, t), independent of the per-row
    /// min/max shortcut.
    #[test]
    fn memory_span_matches_enumeration() {
        let d = DistortionTensor::from_fn(2, 3, |x, y, z| ((x + 2 * y + 3 * z) % 5) as f64 - 1.5 * (z == 1) as u8 as f64)
            .unwrap();
        let mut best = f64::NEG_INFINITY;
        for x in 0..2 {
            for y in 0..3 {
                for z in 0..3 {
                    for t in 0..3 {
                        best = best.max(d.get(x, y, z) - d.get(x, y, t));
                    }
                }
            }
        }
        assert_eq!(memory_span(&d), best);
    }

    #[test]
    fn convexity_examples() {
        let p = uniform2();
        let r = convexity_report(&DistortionTensor::gamma_hamming(0.5).unwrap(), &p).unwrap();
        assert_eq!((r.e1, r.e2), (Some(0.0), Some(0.0)));
        assert!(r.is_affine && r.is_convex);

        let r = convexity_report(&DistortionTensor::fig2(1.0).unwrap(), &p).unwrap();
        assert_eq!((r.e1, r.e2), (Some(-1.0), Some(-1.0)));
        assert!(!r.is_convex && !r.is_affine);

        // Λ = Σ p_Y(y)², convex.
        let staying = DistortionTensor::from_fn(2, 2, |_, y, yh| f64::from(u8::from(y == yh))).unwrap();
        let r = convexity_report(&staying, &p).unwrap();
        assert_eq!((r.e1, r.e2), (Some(2.0), Some(2.0)));
        assert!(r.is_convex && !r.is_affine);

        // Λ = 1 − Σ p_Y(y)², concave.
        let switching = DistortionTensor::from_fn(2, 2, |_, y, yh| f64::from(u8::from(y != yh))).unwrap();
        let r = convexity_report(&switching, &p).unwrap();
        assert_eq!((r.e1, r.e2), (Some(-2.0), Some(-2.0)));
        assert!(!r.is_convex);
    }

    #[test]
    fn binary_hessian_has_expected_structure() {
        // With α = W(0|0), β = W(0|1) and a uniform source the Hessian is
        // ¼ [[2e1, e1+e2], [e1+e2, 2e2]].
        let d = DistortionTensor::new(2, 2, vec![0.3, 1.1, 0.7, 0.2, 1.9, 0.4, 0.8, 1.3]).unwrap();
        let r = convexity_report(&d, &uniform2()).unwrap();
        let (e1, e2) = (r.e1.unwrap(), r.e2.unwrap());
        let h = lambda_hessian(&d, &uniform2()).unwrap();
        assert_abs_diff_eq!(h[(0, 0)], 0.5 * e1, epsilon = 1e-15);
        assert_abs_diff_eq!(h[(1, 1)], 0.5 * e2, epsilon = 1e-15);
        assert_abs_diff_eq!(h[(0, 1)], 0.25 * (e1 + e2), epsilon = 1e-15);
        assert_abs_diff_eq!(h.determinant(), -(e1 - e2).powi(2) / 16.0, epsilon = 1e-14);
    }

    #[test]
    fn larger_alphabets_leave_e_fields_empty() {
        let d = DistortionTensor::hamming(3).unwrap();
        let r = convexity_report(&d, &SourcePmf::uniform(3).unwrap()).unwrap();
        assert!(r.e1.is_none() && !r.binary_uniform);
        assert!(r.is_affine);
        let r = convexity_report(&DistortionTensor::fig2(1.0).unwrap(), &SourcePmf::new(vec![0.3, 0.7]).unwrap()).unwrap();
        assert!(r.e1.is_none());
    }
}
