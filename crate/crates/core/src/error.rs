use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure mode of the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension cap exceeded: {entries} entries requested, cap is {cap}")]
    DimensionCap { entries: u128, cap: usize },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("duplicate nodes at positions {first} and {second}")]
    DuplicateNodes { first: usize, second: usize },

    #[error("barycentric denominator vanishes at s = {at}")]
    PoleHit { at: Complex64 },

    #[error("zero barycentric weight at position {index}")]
    ZeroWeight { index: usize },

    #[error("left node {left} collides with right node {right}")]
    NodeCollision { left: usize, right: usize },

    #[error(
        "data is not rational of the probed degree: sigma_min/sigma_1 = {ratio:e} exceeds {tol:e}"
    )]
    NotRational { ratio: f64, tol: f64 },

    #[error(
        "singular anchor at level {level}, multi-index {index:?} (0-based); \
         re-anchor the variable or perturb its nodes"
    )]
    AnchorSingular { level: usize, index: Vec<usize> },

    #[error("polynomial degree {degree} exceeds nu = {nu}")]
    DegreeMismatch { nu: usize, degree: usize },

    #[error("reconstruction denominator vanishes at {point:?}")]
    DenominatorVanishes { point: Vec<Complex64> },

    #[error("logarithm of zero in variable {variable}, entry {entry}")]
    LogOfZero { variable: usize, entry: usize },

    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error(
        "division by zero while evaluating `{expr}`{}",
        index.as_ref().map(|i| format!(" at grid multi-index {i:?}")).unwrap_or_default()
    )]
    EvalPole {
        expr: String,
        index: Option<Vec<usize>>,
    },

    #[error("degree of variable {variable} not resolved with probe budget {budget}")]
    BudgetTooSmall { variable: String, budget: usize },

    #[error("non-finite value produced by {0}")]
    NonFinite(String),
}
