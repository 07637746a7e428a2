//! Entropy and mutual information over finite alphabets, in bits.

use crate::error::{Result, SrdError};
use crate::problem::{SourcePmf, PMF_TOL};

/// `-Σ p log₂ p` with `0 log 0 = 0`. No validation.
pub fn entropy_bits(probs: &[f64]) -> f64 {
    let h: f64 = probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum();
    h.max(0.0)
}

pub fn entropy(p: &SourcePmf) -> f64 {
    entropy_bits(p.probs())
}

/// Binary entropy function `h(q)`.
pub fn binary_entropy(q: f64) -> f64 {
    entropy_bits(&[q, 1.0 - q])
}

/// `I(X;Y)` of a joint pmf given as `joint[x][y]`.
pub fn mutual_information(joint: &[Vec<f64>]) -> Result<f64> {
    let cols = joint.first().map_or(0, Vec::len);
    if joint.is_empty() || cols == 0 {
        return Err(SrdError::InvalidPmf("joint pmf is empty".into()));
    }
    if joint.iter().any(|r| r.len() != cols) {
        return Err(SrdError::InvalidPmf("joint pmf rows are ragged".into()));
    }
    let mut total = 0.0;
    for (x, row) in joint.iter().enumerate() {
        for (y, &v) in row.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(SrdError::InvalidPmf(format!("joint entry ({x}, {y}) is {v}")));
            }
            total += v;
        }
    }
    if (total - 1.0).abs() > PMF_TOL {
        return Err(SrdError::InvalidPmf(format!("joint pmf sums to {total}")));
    }
    Ok(mutual_information_unchecked(joint))
}

pub(crate) fn mutual_information_unchecked(joint: &[Vec<f64>]) -> f64 {
    let px: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
    let mut py = vec![0.0; joint[0].len()];
    for row in joint {
        for (acc, v) in py.iter_mut().zip(row) {
            *acc += v;
        }
    }
    let mut mi = 0.0;
    for (row, &pxv) in joint.iter().zip(&px) {
        for (&v, &pyv) in row.iter().zip(&py) {
            if v > 0.0 {
                mi += v * (v / (pxv * pyv)).log2();
            }
        }
    }
    mi.max(0.0)
}

/// `I(X;Y)` for `p(x) W(y|x)` given a flat row-major kernel. Computed as
/// `Σ p(x) W(y|x) log₂ W(y|x) / p_Y(y)`.
pub(crate) fn kernel_information(p: &[f64], w: &[f64], y_size: usize) -> f64 {
    let py = crate::problem::output_marginal(p, w, y_size);
    let mut mi = 0.0;
    for (&px, row) in p.iter().zip(w.chunks(y_size)) {
        if px <= 0.0 {
            continue;
        }
        for (&wv, &pyv) in row.iter().zip(&py) {
            // Skipping underflowed joint mass also keeps `p_Y(y) > 0`.
            let joint = px * wv;
            if joint > 0.0 {
                mi += joint * (wv / pyv).log2();
            }
        }
    }
    mi.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn underflowed_joint_mass_is_ignored() {
        // 0.5 · 5e-324 rounds to zero, so p_Y(1) = 0 while W(1|1) > 0.
        let w = [1.0, 0.0, 1.0, 5e-324];
        assert_eq!(kernel_information(&[0.5, 0.5], &w, 2), 0.0);
    }

    #[test]
    fn entropy_examples() {
        assert_abs_diff_eq!(entropy(&SourcePmf::new(vec![0.5, 0.5]).unwrap()), 1.0, epsilon = 1e-15);
        assert_eq!(entropy(&SourcePmf::new(vec![1.0, 0.0]).unwrap()), 0.0);
        // -(0.25 log₂ 0.25 + 0.75 log₂ 0.75) = 0.5 + 0.311278...
        assert_abs_diff_eq!(
            entropy(&SourcePmf::new(vec![0.25, 0.75]).unwrap()),
            0.811_278_124_459_132_8,
            epsilon = 1e-12
        );
    }

    #[test]
    fn mutual_information_examples() {
        let product = vec![vec![0.1, 0.3], vec![0.15, 0.45]];
        assert_abs_diff_eq!(mutual_information(&product).unwrap(), 0.0, epsilon = 1e-14);
        let diag = vec![vec![0.5, 0.0], vec![0.0, 0.5]];
        assert_abs_diff_eq!(mutual_information(&diag).unwrap(), 1.0, epsilon = 1e-14);
        let e = 0.11;
        let bsc = vec![vec![0.5 * (1.0 - e), 0.5 * e], vec![0.5 * e, 0.5 * (1.0 - e)]];
        let mi = mutual_information(&bsc).unwrap();
        assert_abs_diff_eq!(mi, 1.0 - binary_entropy(e), epsilon = 1e-12);
        assert!((mi - 0.5).abs() < 1e-3);
    }

    #[test]
    fn mutual_information_rejects_bad_joint() {
        assert!(mutual_information(&[vec![0.5, 0.6]]).is_err());
        assert!(mutual_information(&[vec![0.5], vec![0.25, 0.25]]).is_err());
        assert!(mutual_information(&[]).is_err());
    }

    fn joint_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (1usize..5, 1usize..5).prop_flat_map(|(r, c)| {
            prop::collection::vec(0.0f64..1.0, r * c).prop_map(move |v| {
                let s: f64 = v.iter().sum::<f64>().max(1e-9);
                let mut rows: Vec<Vec<f64>> = v.chunks(c).map(|ch| ch.iter().map(|x| x / s).collect()).collect();
                // Absorb rounding so the table sums to 1 within tolerance.
                let total: f64 = rows.iter().flatten().sum();
                rows[0][0] += 1.0 - total;
                rows[0][0] = rows[0][0].max(0.0);
                rows
            })
        })
    }

    proptest! {
        #[test]
        fn information_bounded_by_entropies(joint in joint_strategy()) {
            prop_assume!((joint.iter().flatten().sum::<f64>() - 1.0).abs() <= PMF_TOL);
            let mi = mutual_information(&joint).unwrap();
            let px: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
            let py: Vec<f64> = (0..joint[0].len()).map(|j| joint.iter().map(|r| r[j]).sum()).collect();
            prop_assert!(mi >= 0.0);
            prop_assert!(mi <= entropy_bits(&px).min(entropy_bits(&py)) + 1e-9);
        }
    }
}
