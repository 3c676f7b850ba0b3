//! One-dimensional Lagrange machinery: Lagrange coefficients, the
//! normalized (cardinal) basis and the barycentric rational form.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numkit::{is_finite, real, CVector};

/// Relative distance below which two nodes count as equal.
pub const NODE_DISTINCT_TOL: f64 = 1e-13;

/// Relative radius around a node inside which barycentric evaluation returns
/// the stored value instead of forming the 0/0 quotient.
pub const EXACT_NODE_TOL: f64 = 1e-14;

/// Pairwise distinct interpolation nodes `λ_1, ..., λ_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSet {
    nodes: Vec<Complex64>,
}

impl NodeSet {
    pub fn new(nodes: Vec<Complex64>) -> Result<Self> {
        if let Some(bad) = nodes.iter().position(|z| !is_finite(*z)) {
            return Err(Error::NonFinite(format!("node {bad}")));
        }
        let scale = nodes.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let threshold = NODE_DISTINCT_TOL * scale;
        for i in 0..nodes.len() {
            for j in i + 1..nodes.len() {
                if (nodes[i] - nodes[j]).norm() <= threshold {
                    return Err(Error::DuplicateNodes {
                        first: i,
                        second: j,
                    });
                }
            }
        }
        Ok(NodeSet { nodes })
    }

    pub fn from_reals(nodes: &[f64]) -> Result<Self> {
        Self::new(nodes.iter().map(|&x| real(x)).collect())
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn get(&self, j: usize) -> Complex64 {
        self.nodes[j]
    }

    /// `γ_j = 1 / ∏_{i≠j} (λ_j − λ_i)`.
    pub fn gamma(&self) -> CVector {
        let k = self.nodes.len();
        (0..k)
            .map(|j| {
                let prod: Complex64 = (0..k)
                    .filter(|&i| i != j)
                    .map(|i| self.nodes[j] - self.nodes[i])
                    .product();
                prod.inv()
            })
            .collect()
    }

    /// Normalized Lagrange basis `ℓ̃_j(s) = ∏_{i≠j} (s − λ_i)/(λ_j − λ_i)`.
    ///
    /// Uses the product of ratios directly so that clustered nodes do not
    /// overflow the way `γ_j · ∏(s − λ_i)` can.
    pub fn normalized_basis(&self, s: Complex64) -> CVector {
        let k = self.nodes.len();
        (0..k)
            .map(|j| {
                (0..k)
                    .filter(|&i| i != j)
                    .map(|i| (s - self.nodes[i]) / (self.nodes[j] - self.nodes[i]))
                    .product()
            })
            .collect()
    }

    /// Index of the node within the exact-node radius of `s`, if any.
    pub fn node_hit(&self, s: Complex64) -> Option<usize> {
        self.nodes
            .iter()
            .position(|&l| (s - l).norm() <= EXACT_NODE_TOL * (1.0 + l.norm()))
    }
}

/// Free-function form of [`NodeSet::gamma`].
pub fn gamma_coefficients(nodes: &NodeSet) -> CVector {
    nodes.gamma()
}

pub fn normalized_basis(nodes: &NodeSet, s: Complex64) -> CVector {
    nodes.normalized_basis(s)
}

/// `α_j = γ_j d(λ_j)`: the barycentric weights that reproduce `n/d` exactly
/// when both degrees are below the node count.
pub fn rational_weights(nodes: &NodeSet, den_values: &[Complex64]) -> Result<CVector> {
    if den_values.len() != nodes.len() {
        return Err(Error::Shape(format!(
            "{} denominator values for {} nodes",
            den_values.len(),
            nodes.len()
        )));
    }
    if let Some(index) = den_values.iter().position(|d| d.norm() == 0.0) {
        return Err(Error::ZeroWeight { index });
    }
    Ok(nodes
        .gamma()
        .into_iter()
        .zip(den_values)
        .map(|(g, d)| g * d)
        .collect())
}

/// `g(s) = Σ α_j w_j/(s − λ_j) / Σ α_j/(s − λ_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BarycentricForm {
    nodes: NodeSet,
    values: CVector,
    weights: CVector,
}

impl BarycentricForm {
    pub fn new(nodes: NodeSet, values: CVector, weights: CVector) -> Result<Self> {
        if values.len() != nodes.len() || weights.len() != nodes.len() {
            return Err(Error::Shape(format!(
                "{} nodes, {} values, {} weights",
                nodes.len(),
                values.len(),
                weights.len()
            )));
        }
        if let Some(index) = weights.iter().position(|a| a.norm() == 0.0) {
            return Err(Error::ZeroWeight { index });
        }
        Ok(BarycentricForm {
            nodes,
            values,
            weights,
        })
    }

    /// Polynomial interpolant: `α = γ`.
    pub fn polynomial(nodes: NodeSet, values: CVector) -> Result<Self> {
        let weights = nodes.gamma();
        Self::new(nodes, values, weights)
    }

    /// Rational interpolant with known denominator values at the nodes.
    pub fn rational(nodes: NodeSet, values: CVector, den_values: &[Complex64]) -> Result<Self> {
        let weights = rational_weights(&nodes, den_values)?;
        Self::new(nodes, values, weights)
    }

    pub fn nodes(&self) -> &NodeSet {
        &self.nodes
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        if let Some(j) = self.nodes.node_hit(s) {
            return Ok(self.values[j]);
        }
        let mut num = Complex64::new(0.0, 0.0);
        let mut den = Complex64::new(0.0, 0.0);
        let mut den_mag = 0.0;
        for ((&l, &w), &a) in self
            .nodes
            .as_slice()
            .iter()
            .zip(&self.values)
            .zip(&self.weights)
        {
            let term = a / (s - l);
            num += term * w;
            den += term;
            den_mag += term.norm();
        }
        if den.norm() <= 1e-14 * den_mag || !is_finite(den) {
            return Err(Error::PoleHit { at: s });
        }
        let g = num / den;
        if !is_finite(g) {
            return Err(Error::PoleHit { at: s });
        }
        Ok(g)
    }
}

pub fn barycentric_eval(form: &BarycentricForm, s: Complex64) -> Result<Complex64> {
    form.eval(s)
}
