//! Black-box access to a multivariate function.

use std::cell::Cell;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numkit::is_finite;

/// A function of `n` complex variables that can be sampled pointwise.
pub trait Evaluator {
    fn eval(&self, point: &[Complex64]) -> Result<Complex64>;
}

impl<F> Evaluator for F
where
    F: Fn(&[Complex64]) -> Complex64,
{
    fn eval(&self, point: &[Complex64]) -> Result<Complex64> {
        Ok(self(point))
    }
}

/// Evaluates and rejects NaN/Inf results.
pub(crate) fn eval_finite<E: Evaluator + ?Sized>(f: &E, point: &[Complex64]) -> Result<Complex64> {
    let value = f.eval(point)?;
    if !is_finite(value) {
        return Err(Error::NonFinite(format!("function at {point:?}")));
    }
    Ok(value)
}

/// Wraps an evaluator and counts how often it is called.
pub struct Counting<'a, E: ?Sized> {
    inner: &'a E,
    calls: Cell<usize>,
}

impl<'a, E: Evaluator + ?Sized> Counting<'a, E> {
    pub fn new(inner: &'a E) -> Self {
        Counting {
            inner,
            calls: Cell::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.get()
    }
}

impl<E: Evaluator + ?Sized> Evaluator for Counting<'_, E> {
    fn eval(&self, point: &[Complex64]) -> Result<Complex64> {
        self.calls.set(self.calls.get() + 1);
        self.inner.eval(point)
    }
}
