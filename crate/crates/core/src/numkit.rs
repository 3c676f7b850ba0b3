//! Complex dense kernels shared by the rest of the crate: a row-major
//! matrix type, Kronecker and Hadamard products, row-wise sums and the
//! multi-index flattening used by every sample tensor.
//!
//! All flattened tensors use row-major order with variable 1 slowest, i.e.
//! the ordering produced by `S ⊗ T ⊗ Z`.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexScalar = Complex64;
pub type CVector = Vec<Complex64>;

/// Largest number of entries a Kronecker product or grid may have by default.
pub const DEFAULT_DIMENSION_CAP: usize = 10_000_000;

/// Default relative tolerance for [`approx_eq`].
pub const DEFAULT_REL_TOL: f64 = 1e-12;

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn real(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `|a - b| / max(1, |a|, |b|)`.
pub fn rel_diff(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / 1f64.max(a.norm()).max(b.norm())
}

/// `|a - b| <= tol * max(1, |a|, |b|)`.
pub fn approx_eq(a: Complex64, b: Complex64, tol: f64) -> bool {
    rel_diff(a, b) <= tol
}

pub fn is_finite(z: Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

fn check_cap(rows: usize, cols: usize, cap: usize) -> Result<()> {
    let entries = rows as u128 * cols as u128;
    if entries > cap as u128 {
        return Err(Error::DimensionCap { entries, cap });
    }
    Ok(())
}

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = real(1.0);
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries given for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(CMatrix { rows, cols, data })
    }

    /// Builds a matrix from nested rows; all rows must have the same length.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged rows".into()));
        }
        let data = rows.iter().flatten().copied().collect();
        Ok(CMatrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn column(v: &[Complex64]) -> Self {
        CMatrix {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    pub fn diag(v: &[Complex64]) -> Self {
        let mut m = Self::zeros(v.len(), v.len());
        for (i, &x) in v.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn scale(&self, alpha: Complex64) -> Self {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| alpha * x).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &CMatrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &CMatrix) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::Shape("subtraction of mismatched shapes".into()));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(CMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Result<CVector> {
        if v.len() != self.cols {
            return Err(Error::Shape(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Swaps two columns in place.
    pub fn swap_columns(&mut self, a: usize, b: usize) {
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Kronecker product with the default dimension cap.
pub fn kron(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    kron_with_cap(a, b, DEFAULT_DIMENSION_CAP)
}

pub fn kron_with_cap(a: &CMatrix, b: &CMatrix, cap: usize) -> Result<CMatrix> {
    let rows = a.rows.checked_mul(b.rows);
    let cols = a.cols.checked_mul(b.cols);
    let (rows, cols) = match (rows, cols) {
        (Some(r), Some(c)) => (r, c),
        _ => {
            return Err(Error::DimensionCap {
                entries: u128::MAX,
                cap,
            })
        }
    };
    check_cap(rows, cols, cap)?;
    let mut out = CMatrix::zeros(rows, cols);
    for ia in 0..a.rows {
        for ja in 0..a.cols {
            let x = a[(ia, ja)];
            for ib in 0..b.rows {
                let dst = (ia * b.rows + ib) * cols + ja * b.cols;
                for jb in 0..b.cols {
                    out.data[dst + jb] = x * b[(ib, jb)];
                }
            }
        }
    }
    Ok(out)
}

/// Kronecker product of two column vectors.
pub fn kron_vec(a: &[Complex64], b: &[Complex64]) -> Result<CVector> {
    check_cap(a.len(), b.len(), DEFAULT_DIMENSION_CAP)?;
    Ok(a.iter()
        .flat_map(|&x| b.iter().map(move |&y| x * y))
        .collect())
}

/// The all-ones vector, written `I_k` in the decoupling formulas.
pub fn ones(k: usize) -> CVector {
    vec![real(1.0); k]
}

/// Entrywise product.
pub fn hadamard(a: &[Complex64], b: &[Complex64]) -> Result<CVector> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "hadamard of lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(b).map(|(x, y)| x * y).collect())
}

/// Sum of all entries (the "row-wise sum" of a column vector).
pub fn rowwise_sum(v: &[Complex64]) -> Complex64 {
    v.iter().sum()
}

pub fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Horner evaluation of an ascending coefficient vector.
pub fn poly_eval(coeffs: &[Complex64], s: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
}

/// Sine of the angle between the complex lines spanned by `a` and `b`.
pub fn sin_angle(a: &[Complex64], b: &[Complex64]) -> f64 {
    let na = norm2(a);
    let nb = norm2(b);
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    // Norm of the component of â orthogonal to b̂; unlike sqrt(1 − cos²)
    // this stays accurate for nearly parallel vectors.
    let inner: Complex64 = b.iter().zip(a).map(|(y, x)| y.conj() * x).sum();
    let coef = inner / (nb * nb);
    let residual: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - coef * y).norm_sqr())
        .sum::<f64>()
        .sqrt();
    (residual / na).min(1.0)
}

/// Per-variable extents `(k_1, ..., k_n)` of a Kronecker grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shape {
    dims: Vec<usize>,
    len: usize,
}

impl Shape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        Self::with_cap(dims, DEFAULT_DIMENSION_CAP)
    }

    pub fn with_cap(dims: Vec<usize>, cap: usize) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::Shape("every extent must be at least 1".into()));
        }
        let mut entries: u128 = 1;
        for &k in &dims {
            entries = entries.saturating_mul(k as u128);
        }
        if entries > cap as u128 {
            return Err(Error::DimensionCap { entries, cap });
        }
        Ok(Shape {
            len: entries as usize,
            dims,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    /// Total number of entries `N = k_1 ⋯ k_n`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `K_l = k_1 ⋯ k_l` for `l` in `0..=n` (so `prefix_len(0) == 1`).
    pub fn prefix_len(&self, l: usize) -> usize {
        self.dims[..l].iter().product()
    }

    /// `k_{l+1} ⋯ k_n`, the stride of variable `l` (0-based).
    pub fn stride(&self, l: usize) -> usize {
        self.dims[l + 1..].iter().product()
    }

    pub fn flatten(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.dims.len());
        index.iter().zip(&self.dims).fold(0, |acc, (&j, &k)| {
            debug_assert!(j < k);
            acc * k + j
        })
    }

    /// Flat position of a prefix `(j_1, …, j_l)` among all prefixes of that
    /// length.
    pub fn flatten_prefix(&self, prefix: &[usize]) -> usize {
        prefix
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&j, &k)| acc * k + j)
    }

    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        debug_assert!(flat < self.len);
        let mut index = vec![0; self.dims.len()];
        for (slot, &k) in index.iter_mut().zip(&self.dims).rev() {
            *slot = flat % k;
            flat /= k;
        }
        index
    }

    /// All multi-indices in flattening order.
    pub fn indices(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.len).map(move |i| self.unflatten(i))
    }
}
