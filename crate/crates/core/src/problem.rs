//! Finite-alphabet problem data: the source distribution, the distortion
//! tensor `d(x, y, ŷ)` and the two kernel families used by the achievability
//! constructions.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SrdError};

/// Tolerance on probability sums. Inputs outside it are rejected rather than
/// renormalized.
pub const PMF_TOL: f64 = 1e-12;

fn check_distribution(values: &[f64], what: &str) -> std::result::Result<(), String> {
    if values.is_empty() {
        return Err(format!("{what} is empty"));
    }
    if let Some((i, v)) = values
        .iter()
        .enumerate()
        .find(|(_, v)| !v.is_finite() || **v < 0.0)
    {
        return Err(format!("{what} entry {i} is {v}"));
    }
    let sum: f64 = values.iter().sum();
    if (sum - 1.0).abs() > PMF_TOL {
        return Err(format!("{what} sums to {sum}"));
    }
    Ok(())
}

/// Probability vector over the source alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SourcePmf {
    probs: Vec<f64>,
}

impl SourcePmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_distribution(&probs, "source pmf").map_err(SrdError::InvalidPmf)?;
        Ok(Self { probs })
    }

    pub fn uniform(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(SrdError::InvalidPmf("source pmf is empty".into()));
        }
        Ok(Self {
            probs: vec![1.0 / size as f64; size],
        })
    }

    /// Clamps and renormalizes; for internally generated distributions.
    #[cfg(test)]
    pub(crate) fn from_normalized(mut probs: Vec<f64>) -> Self {
        normalize_in_place(&mut probs);
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// True when every entry equals `1/len` within [`PMF_TOL`].
    pub fn is_uniform(&self) -> bool {
        let u = 1.0 / self.len() as f64;
        self.probs.iter().all(|p| (p - u).abs() <= PMF_TOL)
    }
}

impl TryFrom<Vec<f64>> for SourcePmf {
    type Error = SrdError;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SourcePmf> for Vec<f64> {
    fn from(p: SourcePmf) -> Self {
        p.probs
    }
}

/// Bounded distortion `d(x, y, ŷ)` where `ŷ` is the previous reconstruction
/// symbol. The second and third indices share the reconstruction alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionTensor {
    x_size: usize,
    y_size: usize,
    values: Vec<f64>,
}

impl DistortionTensor {
    /// Builds a tensor from a flat table laid out as `(x * |Y| + y) * |Y| + ŷ`.
    pub fn new(x_size: usize, y_size: usize, values: Vec<f64>) -> Result<Self> {
        if x_size == 0 || y_size == 0 {
            return Err(SrdError::InvalidTensor("alphabets must be non-empty".into()));
        }
        if values.len() != x_size * y_size * y_size {
            return Err(SrdError::InvalidTensor(format!(
                "expected {} entries for |X|={x_size}, |Y|={y_size}, got {}",
                x_size * y_size * y_size,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(SrdError::InvalidTensor(format!("entry {i} is not finite")));
        }
        Ok(Self {
            x_size,
            y_size,
            values,
        })
    }

    /// Builds a tensor from `nested[x][y][ŷ]`.
    pub fn from_nested(nested: &[Vec<Vec<f64>>]) -> Result<Self> {
        let x_size = nested.len();
        let y_size = nested.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(x_size * y_size * y_size);
        for (x, plane) in nested.iter().enumerate() {
            if plane.len() != y_size {
                return Err(SrdError::InvalidTensor(format!(
                    "slice x={x} has {} rows, expected {y_size}",
                    plane.len()
                )));
            }
            for (y, row) in plane.iter().enumerate() {
                if row.len() != y_size {
                    return Err(SrdError::InvalidTensor(format!(
                        "row (x={x}, y={y}) has {} entries, expected {y_size}",
                        row.len()
                    )));
                }
                values.extend_from_slice(row);
            }
        }
        Self::new(x_size, y_size, values)
    }

    pub fn from_fn(x_size: usize, y_size: usize, f: impl Fn(usize, usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(x_size * y_size * y_size);
        for x in 0..x_size {
            for y in 0..y_size {
                for yh in 0..y_size {
                    values.push(f(x, y, yh));
                }
            }
        }
        Self::new(x_size, y_size, values)
    }

    /// Binary Hamming distortion with a start-up cost `c` charged whenever the
    /// reconstruction switches from 0 to 1:
    /// `d(·,·,ŷ=0) = [[0, 1+c], [1, c]]`, `d(·,·,ŷ=1) = [[0, 1], [1, 0]]`.
    pub fn fig2(c: f64) -> Result<Self> {
        Self::from_fn(2, 2, |x, y, yh| {
            let hamming = f64::from(u8::from(x != y));
            if yh == 0 && y == 1 {
                hamming + c
            } else {
                hamming
            }
        })
    }

    /// `d = 1(x ≠ y) + γ·1(x ≠ ŷ)` on binary alphabets.
    pub fn gamma_hamming(gamma: f64) -> Result<Self> {
        Self::from_fn(2, 2, |x, y, yh| {
            f64::from(u8::from(x != y)) + gamma * f64::from(u8::from(x != yh))
        })
    }

    /// Memoryless distortion `d(x, y)` lifted to a tensor that ignores `ŷ`.
    pub fn memoryless(matrix: &[Vec<f64>]) -> Result<Self> {
        let x_size = matrix.len();
        let y_size = matrix.first().map_or(0, Vec::len);
        if matrix.iter().any(|r| r.len() != y_size) {
            return Err(SrdError::InvalidTensor("ragged distortion matrix".into()));
        }
        Self::from_fn(x_size, y_size, |x, y, _| matrix[x][y])
    }

    pub fn hamming(size: usize) -> Result<Self> {
        Self::from_fn(size, size, |x, y, _| f64::from(u8::from(x != y)))
    }

    pub fn constant(x_size: usize, y_size: usize, k: f64) -> Result<Self> {
        Self::from_fn(x_size, y_size, |_, _, _| k)
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, yh: usize) -> f64 {
        self.values[(x * self.y_size + y) * self.y_size + yh]
    }

    /// The `|Y| × |Y|` slice `d(x, ·, ·)`.
    #[inline]
    pub fn slice(&self, x: usize) -> &[f64] {
        let n = self.y_size * self.y_size;
        &self.values[x * n..(x + 1) * n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.x_size)
            .map(|x| {
                (0..self.y_size)
                    .map(|y| (0..self.y_size).map(|yh| self.get(x, y, yh)).collect())
                    .collect()
            })
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Errors unless `p` ranges over the tensor's source alphabet.
    pub fn check_source(&self, p: &SourcePmf) -> Result<()> {
        if p.len() != self.x_size {
            return Err(SrdError::DimensionMismatch(format!(
                "source has {} symbols, tensor expects {}",
                p.len(),
                self.x_size
            )));
        }
        Ok(())
    }
}

/// Stochastic matrix `W(y | x)`, one row per source symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemorylessKernel {
    x_size: usize,
    y_size: usize,
    rows: Vec<f64>,
}

impl MemorylessKernel {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let x_size = rows.len();
        let y_size = rows.first().map_or(0, Vec::len);
        if x_size == 0 || y_size == 0 {
            return Err(SrdError::InvalidKernel("kernel is empty".into()));
        }
        let mut flat = Vec::with_capacity(x_size * y_size);
        for (x, row) in rows.iter().enumerate() {
            if row.len() != y_size {
                return Err(SrdError::InvalidKernel(format!("row {x} has length {}", row.len())));
            }
            check_distribution(row, &format!("row {x}")).map_err(SrdError::InvalidKernel)?;
            flat.extend_from_slice(row);
        }
        Ok(Self {
            x_size,
            y_size,
            rows: flat,
        })
    }

    /// Takes a flat row-major table, clamps negatives and renormalizes each
    /// row. Only for solver iterates, which carry rounding noise.
    pub(crate) fn from_flat_normalized(x_size: usize, y_size: usize, mut rows: Vec<f64>) -> Self {
        for row in rows.chunks_mut(y_size) {
            normalize_in_place(row);
        }
        Self {
            x_size,
            y_size,
            rows,
        }
    }

    pub fn identity(size: usize) -> Self {
        let mut rows = vec![0.0; size * size];
        for i in 0..size {
            rows[i * size + i] = 1.0;
        }
        Self {
            x_size: size,
            y_size: size,
            rows,
        }
    }

    /// Kernel whose rows all equal `r`: the output ignores the source.
    pub fn constant(x_size: usize, r: &[f64]) -> Result<Self> {
        check_distribution(r, "output pmf").map_err(SrdError::InvalidKernel)?;
        Ok(Self {
            x_size,
            y_size: r.len(),
            rows: r.repeat(x_size),
        })
    }

    /// Binary symmetric channel with crossover `eps`.
    pub fn bsc(eps: f64) -> Result<Self> {
        Self::new(&[vec![1.0 - eps, eps], vec![eps, 1.0 - eps]])
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.rows[x * self.y_size + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x * self.y_size..(x + 1) * self.y_size]
    }

    pub fn flat(&self) -> &[f64] {
        &self.rows
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows.chunks(self.y_size).map(<[f64]>::to_vec).collect()
    }

    /// `p_Y(y) = Σ_x p(x) W(y|x)`.
    pub fn output_marginal(&self, p: &SourcePmf) -> Vec<f64> {
        output_marginal(p.probs(), &self.rows, self.y_size)
    }

    /// The joint table `p(x) W(y|x)`.
    pub fn joint(&self, p: &SourcePmf) -> Vec<Vec<f64>> {
        (0..self.x_size)
            .map(|x| self.row(x).iter().map(|w| p.probs()[x] * w).collect())
            .collect()
    }

    pub(crate) fn check_problem(&self, p: &SourcePmf, d: &DistortionTensor) -> Result<()> {
        d.check_source(p)?;
        if self.x_size != d.x_size() || self.y_size != d.y_size() {
            return Err(SrdError::DimensionMismatch(format!(
                "kernel is {}x{}, tensor alphabets are {}x{}",
                self.x_size,
                self.y_size,
                d.x_size(),
                d.y_size()
            )));
        }
        Ok(())
    }
}

/// Conditional law `K(y | x, ŷ)`, one distribution over `y` per `(x, ŷ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovKernel {
    x_size: usize,
    y_size: usize,
    table: Vec<f64>,
}

impl MarkovKernel {
    /// `table[x][ŷ]` is the distribution of `y`.
    pub fn new(table: &[Vec<Vec<f64>>]) -> Result<Self> {
        let x_size = table.len();
        let y_size = table.first().map_or(0, Vec::len);
        if x_size == 0 || y_size == 0 {
            return Err(SrdError::InvalidKernel("kernel is empty".into()));
        }
        let mut flat = Vec::with_capacity(x_size * y_size * y_size);
        for (x, plane) in table.iter().enumerate() {
            if plane.len() != y_size {
                return Err(SrdError::InvalidKernel(format!("slice x={x} has {} rows", plane.len())));
            }
            for (yh, row) in plane.iter().enumerate() {
                if row.len() != y_size {
                    return Err(SrdError::InvalidKernel(format!(
                        "slice (x={x}, ŷ={yh}) has {} entries",
                        row.len()
                    )));
                }
                check_distribution(row, &format!("slice (x={x}, ŷ={yh})")).map_err(SrdError::InvalidKernel)?;
                flat.extend_from_slice(row);
            }
        }
        Ok(Self {
            x_size,
            y_size,
            table: flat,
        })
    }

    pub(crate) fn from_flat_normalized(x_size: usize, y_size: usize, mut table: Vec<f64>) -> Self {
        for row in table.chunks_mut(y_size) {
            normalize_in_place(row);
        }
        Self {
            x_size,
            y_size,
            table,
        }
    }

    /// Builds a kernel from a closure returning `K(y | x, ŷ)`.
    pub fn from_fn(x_size: usize, y_size: usize, f: impl Fn(usize, usize, usize) -> f64) -> Result<Self> {
        let table: Vec<Vec<Vec<f64>>> = (0..x_size)
            .map(|x| {
                (0..y_size)
                    .map(|yh| (0..y_size).map(|y| f(y, x, yh)).collect())
                    .collect()
            })
            .collect();
        Self::new(&table)
    }

    /// The memoryless kernel viewed as a Markov kernel that ignores `ŷ`.
    pub fn from_memoryless(w: &MemorylessKernel) -> Self {
        let (nx, ny) = (w.x_size(), w.y_size());
        let mut table = Vec::with_capacity(nx * ny * ny);
        for x in 0..nx {
            for _ in 0..ny {
                table.extend_from_slice(w.row(x));
            }
        }
        Self {
            x_size: nx,
            y_size: ny,
            table,
        }
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    /// `K(y | x, ŷ)`.
    #[inline]
    pub fn prob(&self, y: usize, x: usize, yh: usize) -> f64 {
        self.table[(x * self.y_size + yh) * self.y_size + y]
    }

    /// Distribution of `y` given `(x, ŷ)`.
    #[inline]
    pub fn slice(&self, x: usize, yh: usize) -> &[f64] {
        let start = (x * self.y_size + yh) * self.y_size;
        &self.table[start..start + self.y_size]
    }

    pub fn flat(&self) -> &[f64] {
        &self.table
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.x_size)
            .map(|x| (0..self.y_size).map(|yh| self.slice(x, yh).to_vec()).collect())
            .collect()
    }

    pub(crate) fn check_source(&self, p: &SourcePmf) -> Result<()> {
        if p.len() != self.x_size {
            return Err(SrdError::DimensionMismatch(format!(
                "source has {} symbols, kernel expects {}",
                p.len(),
                self.x_size
            )));
        }
        Ok(())
    }

    pub(crate) fn check_problem(&self, p: &SourcePmf, d: &DistortionTensor) -> Result<()> {
        self.check_source(p)?;
        if self.x_size != d.x_size() || self.y_size != d.y_size() {
            return Err(SrdError::DimensionMismatch(format!(
                "kernel is {}x{}, tensor alphabets are {}x{}",
                self.x_size,
                self.y_size,
                d.x_size(),
                d.y_size()
            )));
        }
        Ok(())
    }
}

pub(crate) fn output_marginal(p: &[f64], rows: &[f64], y_size: usize) -> Vec<f64> {
    let mut out = vec![0.0; y_size];
    for (px, row) in p.iter().zip(rows.chunks(y_size)) {
        for (o, w) in out.iter_mut().zip(row) {
            *o += px * w;
        }
    }
    out
}

pub(crate) fn normalize_in_place(row: &mut [f64]) {
    for v in row.iter_mut() {
        if !(*v > 0.0) {
            *v = 0.0;
        }
    }
    let s: f64 = row.iter().sum();
    if s > 0.0 {
        row.iter_mut().for_each(|v| *v /= s);
    } else {
        let u = 1.0 / row.len() as f64;
        row.iter_mut().for_each(|v| *v = u);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pmf_validation() {
        assert!(SourcePmf::new(vec![0.5, 0.5]).is_ok());
        assert!(SourcePmf::new(vec![]).is_err());
        assert!(SourcePmf::new(vec![0.5, 0.6]).is_err());
        assert!(SourcePmf::new(vec![1.5, -0.5]).is_err());
        // Off by more than the tolerance is refused, not renormalized.
        assert!(SourcePmf::new(vec![0.5, 0.5 + 1e-10]).is_err());
        assert!(SourcePmf::new(vec![0.5, 0.5 + 1e-14]).is_ok());
    }

    #[test]
    fn fig2_entries() {
        let d = DistortionTensor::fig2(1.0).unwrap();
        // ŷ = 0 slice: rows x, columns y.
        assert_eq!([d.get(0, 0, 0), d.get(0, 1, 0), d.get(1, 0, 0), d.get(1, 1, 0)], [0.0, 2.0, 1.0, 1.0]);
        assert_eq!([d.get(0, 0, 1), d.get(0, 1, 1), d.get(1, 0, 1), d.get(1, 1, 1)], [0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn nested_round_trip() {
        let d = DistortionTensor::gamma_hamming(0.3).unwrap();
        assert_eq!(DistortionTensor::from_nested(&d.to_nested()).unwrap(), d);
        assert!(DistortionTensor::from_nested(&[vec![vec![0.0, 1.0], vec![1.0]]]).is_err());
        assert!(DistortionTensor::new(1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn kernel_validation() {
        assert!(MemorylessKernel::new(&[vec![0.5, 0.5], vec![1.0, 0.0]]).is_ok());
        assert!(MemorylessKernel::new(&[vec![0.5, 0.4], vec![1.0, 0.0]]).is_err());
        assert!(MarkovKernel::new(&[vec![vec![1.0, 0.0], vec![0.2, 0.7]]]).is_err());
        let w = MemorylessKernel::bsc(0.1).unwrap();
        let k = MarkovKernel::from_memoryless(&w);
        assert_eq!(k.prob(1, 0, 1), 0.1);
        assert_eq!(k.prob(1, 1, 0), 0.9);
    }
}
