//! Recursive reconstruction of a polynomial from anchored slice vectors.
//!
//! The innermost variable is handled first: for every choice of nodes for
//! the outer variables, the slice vector `q_n ⊙ X_n(x_n)` is formed. Each
//! step outwards stacks the vectors obtained with variable `l` pinned to
//! each of its nodes and multiplies them by `(q_l ⊙ X_l(x_l)) ⊗ 1`. The sum
//! of the final length-`N` vector is the value of the polynomial.
//!
//! `q_l` is taken with the variables before `l` pinned to the enclosing
//! node choices and the variables after `l` at their anchors. For `l ≥ 2`
//! it is divided by its anchor entry; `q_1` is left unnormalized.

use std::cell::{Cell, RefCell};
use std::collections::HashMap;

use num_complex::Complex64;

use crate::decouple::{GridSpec, ANCHOR_TOL};
use crate::error::{Error, Result};
use crate::evaluator::{eval_finite, Evaluator};
use crate::numkit::{real, CVector};

/// Point of variable `l` inserted into a context holding every other
/// variable.
fn with_variable(context: &[Complex64], l: usize, x: Complex64) -> Vec<Complex64> {
    let mut point = Vec::with_capacity(context.len() + 1);
    point.extend_from_slice(&context[..l]);
    point.push(x);
    point.extend_from_slice(&context[l..]);
    point
}

/// Normalized slice vector of `f` along variable `l` (0-based).
///
/// `context` lists the values of all variables except `l`, in order. Entry
/// `j` is `f(…, λ^(l)_j, …)`, divided by the anchor entry when `l > 0`.
pub fn q_vector<E: Evaluator + ?Sized>(
    f: &E,
    grid: &GridSpec,
    l: usize,
    context: &[Complex64],
) -> Result<CVector> {
    if l >= grid.ndim() || context.len() + 1 != grid.ndim() {
        return Err(Error::Shape(format!(
            "variable {l} with a context of {} values for {} variables",
            context.len(),
            grid.ndim()
        )));
    }
    let values = grid.nodes()[l]
        .as_slice()
        .iter()
        .map(|&x| eval_finite(f, &with_variable(context, l, x)))
        .collect::<Result<Vec<_>>>()?;
    // The context is not tied to grid nodes, so only the slice position of
    // the anchor is reported.
    normalize_slice(values, l, grid.anchors()[l], || vec![grid.anchors()[l]])
}

fn normalize_slice(
    values: CVector,
    l: usize,
    anchor: usize,
    index: impl FnOnce() -> Vec<usize>,
) -> Result<CVector> {
    if l == 0 {
        return Ok(values);
    }
    let largest = values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let divisor = values[anchor];
    if divisor.norm() == 0.0 || divisor.norm() <= ANCHOR_TOL * largest {
        return Err(Error::AnchorSingular {
            level: l + 1,
            index: index(),
        });
    }
    Ok(values
        .iter()
        .enumerate()
        .map(|(j, z)| if j == anchor { real(1.0) } else { z / divisor })
        .collect())
}

type PointKey = Vec<(u64, u64)>;

/// Reusable recursive evaluator with an optional cache of `f` values.
pub struct Recursion<'a, E: ?Sized> {
    f: &'a E,
    grid: &'a GridSpec,
    memoize: bool,
    cache: RefCell<HashMap<PointKey, Complex64>>,
    calls: Cell<usize>,
}

impl<'a, E: Evaluator + ?Sized> Recursion<'a, E> {
    /// Memoizing evaluator.
    pub fn new(f: &'a E, grid: &'a GridSpec) -> Self {
        Self::with_memo(f, grid, true)
    }

    pub fn with_memo(f: &'a E, grid: &'a GridSpec, memoize: bool) -> Self {
        Recursion {
            f,
            grid,
            memoize,
            cache: RefCell::new(HashMap::new()),
            calls: Cell::new(0),
        }
    }

    /// Calls made to `f` so far.
    pub fn evaluations(&self) -> usize {
        self.calls.get()
    }

    /// Distinct points held in the cache (zero when not memoizing).
    pub fn cached_points(&self) -> usize {
        self.cache.borrow().len()
    }

    fn call(&self, point: &[Complex64]) -> Result<Complex64> {
        let key: PointKey = point
            .iter()
            .map(|z| (z.re.to_bits(), z.im.to_bits()))
            .collect();
        if self.memoize {
            if let Some(v) = self.cache.borrow().get(&key) {
                return Ok(*v);
            }
        }
        self.calls.set(self.calls.get() + 1);
        let value = eval_finite(self.f, point)?;
        if self.memoize {
            self.cache.borrow_mut().insert(key, value);
        }
        Ok(value)
    }

    /// `q_l` for the node prefix `prefix` (length `l`), later variables at
    /// their anchors.
    fn q(&self, prefix: &[usize]) -> Result<CVector> {
        let grid = self.grid;
        let l = prefix.len();
        let mut index = grid.anchored_index(prefix);
        let mut point = grid.point(&index);
        let values = grid.nodes()[l]
            .as_slice()
            .iter()
            .map(|&x| {
                point[l] = x;
                self.call(&point)
            })
            .collect::<Result<Vec<_>>>()?;
        index[l] = grid.anchors()[l];
        normalize_slice(values, l, grid.anchors()[l], || index)
    }

    /// Slice vector for variables `prefix.len()..n`, length
    /// `k_{l} ⋯ k_n`.
    fn fold(&self, prefix: &mut Vec<usize>, point: &[Complex64]) -> Result<CVector> {
        let l = prefix.len();
        let n = self.grid.ndim();
        if l == n {
            return Ok(vec![real(1.0)]);
        }
        let basis = self.grid.nodes()[l].normalized_basis(point[l]);
        let q = self.q(prefix)?;
        let k = basis.len();
        let mut out = Vec::with_capacity(k * self.grid.shape().stride(l));
        for j in 0..k {
            prefix.push(j);
            let child = self.fold(prefix, point)?;
            prefix.pop();
            let m = q[j] * basis[j];
            out.extend(child.into_iter().map(|c| c * m));
        }
        Ok(out)
    }

    /// The length-`N` vector whose sum is `f(point)`.
    pub fn vector(&self, point: &[Complex64]) -> Result<CVector> {
        if point.len() != self.grid.ndim() {
            return Err(Error::Shape(format!(
                "point has {} coordinates for {} variables",
                point.len(),
                self.grid.ndim()
            )));
        }
        self.fold(&mut Vec::with_capacity(point.len()), point)
    }

    pub fn eval(&self, point: &[Complex64]) -> Result<Complex64> {
        Ok(self.vector(point)?.into_iter().sum())
    }
}

/// One-shot memoized recursive reconstruction of `f` at `point`.
pub fn recursive_reconstruct<E: Evaluator + ?Sized>(
    f: &E,
    grid: &GridSpec,
    point: &[Complex64],
) -> Result<Complex64> {
    Recursion::new(f, grid).eval(point)
}
