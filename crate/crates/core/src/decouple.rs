//! Decoupled representation of `n`-variable polynomials and rational
//! functions.
//!
//! A function sampled on the Kronecker grid `λ^(1) × ⋯ × λ^(n)` is stored as
//! two [`WeightStack`]s (numerator and denominator). Level `l` of a stack
//! holds, for every prefix `(j_1, …, j_{l−1})`, the slice values of the
//! function along variable `l` (later variables pinned to their anchors),
//! divided by the value at the anchor node of variable `l`. Level 1 is not
//! divided. The product of the stack entries along a full multi-index
//! telescopes to the sampled value.
//!
//! From a stack and the normalized Lagrange basis `X_l` of each variable,
//!
//! ```text
//! Φ_l(x_l) = (stack_l ⊗ 1_{k_{l+1}⋯k_n}) ⊙ (1_{k_1⋯k_{l−1}} ⊗ X_l(x_l) ⊗ 1_{k_{l+1}⋯k_n})
//! ```
//!
//! and the function is recovered as
//! `Σ_rows ⊙_l Φ̂_l(x_l) / Σ_rows ⊙_l Φ_l(x_l)`, where the hatted vectors
//! come from the numerator stack.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::evaluator::{eval_finite, Counting, Evaluator};
use crate::lagrange::NodeSet;
use crate::loewner::{recover_denominator_values_with_tol, LoewnerSystem, DEFAULT_NULL_TOL};
use crate::numkit::{hadamard, is_finite, ones, real, rowwise_sum, CVector, Shape};

/// A divisor is singular when its modulus is at most this fraction of the
/// largest modulus in its block.
pub const ANCHOR_TOL: f64 = 1e-12;

/// Per-variable node sets, names and anchor indices of a Kronecker grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    variables: Vec<String>,
    nodes: Vec<NodeSet>,
    anchors: Vec<usize>,
    shape: Shape,
}

impl GridSpec {
    /// Grid anchored at the last node of every variable.
    pub fn new(variables: Vec<String>, nodes: Vec<NodeSet>) -> Result<Self> {
        let anchors = nodes.iter().map(|n| n.len().saturating_sub(1)).collect();
        Self::with_anchors(variables, nodes, anchors)
    }

    pub fn with_anchors(
        variables: Vec<String>,
        nodes: Vec<NodeSet>,
        anchors: Vec<usize>,
    ) -> Result<Self> {
        if variables.len() != nodes.len() || anchors.len() != nodes.len() {
            return Err(Error::Shape(format!(
                "{} variables, {} node sets, {} anchors",
                variables.len(),
                nodes.len(),
                anchors.len()
            )));
        }
        if nodes.is_empty() {
            return Err(Error::Shape("a grid needs at least one variable".into()));
        }
        for (l, (a, n)) in anchors.iter().zip(&nodes).enumerate() {
            if *a >= n.len() {
                return Err(Error::Shape(format!(
                    "anchor {a} out of range for variable {l} with {} nodes",
                    n.len()
                )));
            }
        }
        let shape = Shape::new(nodes.iter().map(NodeSet::len).collect())?;
        Ok(GridSpec {
            variables,
            nodes,
            anchors,
            shape,
        })
    }

    /// Unnamed variables `x1, x2, …` over real node lists.
    pub fn from_reals(nodes: &[&[f64]]) -> Result<Self> {
        let sets = nodes
            .iter()
            .map(|n| NodeSet::from_reals(n))
            .collect::<Result<Vec<_>>>()?;
        let names = (1..=sets.len()).map(|i| format!("x{i}")).collect();
        Self::new(names, sets)
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn nodes(&self) -> &[NodeSet] {
        &self.nodes
    }

    pub fn anchors(&self) -> &[usize] {
        &self.anchors
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.nodes.len()
    }

    /// `N = k_1 ⋯ k_n`.
    pub fn len(&self) -> usize {
        self.shape.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shape.is_empty()
    }

    /// Coordinates of the grid point with the given multi-index.
    pub fn point(&self, index: &[usize]) -> Vec<Complex64> {
        index
            .iter()
            .zip(&self.nodes)
            .map(|(&j, n)| n.get(j))
            .collect()
    }

    /// Full multi-index with the first entries taken from `prefix` and the
    /// remaining variables at their anchors.
    pub fn anchored_index(&self, prefix: &[usize]) -> Vec<usize> {
        let mut index = prefix.to_vec();
        index.extend_from_slice(&self.anchors[prefix.len()..]);
        index
    }

    fn reanchored(&self, variable: usize, anchor: usize) -> Result<Self> {
        let mut anchors = self.anchors.clone();
        anchors[variable] = anchor;
        Self::with_anchors(self.variables.clone(), self.nodes.clone(), anchors)
    }
}

/// Function values on a Kronecker grid, flattened with variable 1 slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTensor {
    shape: Shape,
    values: CVector,
}

impl SampleTensor {
    pub fn new(shape: Shape, values: CVector) -> Result<Self> {
        if values.len() != shape.len() {
            return Err(Error::Shape(format!(
                "{} values for a grid of {} points",
                values.len(),
                shape.len()
            )));
        }
        if let Some(i) = values.iter().position(|z| !is_finite(*z)) {
            return Err(Error::NonFinite(format!(
                "sample at multi-index {:?}",
                shape.unflatten(i)
            )));
        }
        Ok(SampleTensor { shape, values })
    }

    /// Evaluates `f` at every grid point.
    pub fn sample<E: Evaluator + ?Sized>(f: &E, grid: &GridSpec) -> Result<Self> {
        let values = grid
            .shape()
            .indices()
            .map(|index| eval_finite(f, &grid.point(&index)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(grid.shape().clone(), values)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn get(&self, index: &[usize]) -> Complex64 {
        self.values[self.shape.flatten(index)]
    }
}

/// Per-level anchored weight vectors; level `l` (0-based) has length
/// `k_1 ⋯ k_{l+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightStack {
    levels: Vec<CVector>,
}

impl WeightStack {
    pub fn new(shape: &Shape, levels: Vec<CVector>) -> Result<Self> {
        if levels.len() != shape.ndim() {
            return Err(Error::Shape(format!(
                "{} levels for {} variables",
                levels.len(),
                shape.ndim()
            )));
        }
        for (l, level) in levels.iter().enumerate() {
            if level.len() != shape.prefix_len(l + 1) {
                return Err(Error::Shape(format!(
                    "level {} has {} entries, expected {}",
                    l + 1,
                    level.len(),
                    shape.prefix_len(l + 1)
                )));
            }
        }
        Ok(WeightStack { levels })
    }

    /// The constant-1 stack.
    pub fn ones(shape: &Shape) -> Self {
        WeightStack {
            levels: (1..=shape.ndim())
                .map(|l| ones(shape.prefix_len(l)))
                .collect(),
        }
    }

    pub fn levels(&self) -> &[CVector] {
        &self.levels
    }

    pub fn level(&self, l: usize) -> &[Complex64] {
        &self.levels[l]
    }

    /// Product of the entries along every full multi-index, in flattening
    /// order.
    pub fn telescoped(&self, shape: &Shape) -> CVector {
        shape
            .indices()
            .map(|index| {
                (0..index.len())
                    .map(|l| self.levels[l][shape.flatten_prefix(&index[..=l])])
                    .product()
            })
            .collect()
    }

    /// Largest deviation from 1 of the anchor entries of levels ≥ 2.
    pub fn anchor_deviation(&self, grid: &GridSpec) -> f64 {
        let shape = grid.shape();
        let mut worst: f64 = 0.0;
        for l in 1..shape.ndim() {
            let k = shape.dims()[l];
            for block in self.levels[l].chunks(k) {
                worst = worst.max((block[grid.anchors()[l]] - real(1.0)).norm());
            }
        }
        worst
    }
}

/// What to do when a block's anchor value vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AnchorPolicy {
    /// Report [`Error::AnchorSingular`].
    #[default]
    Fail,
    /// Move the offending variable's anchor to the node whose smallest
    /// block-relative modulus is largest, then rebuild.
    Reanchor,
}

fn prefix_of(shape: &Shape, flat_prefix: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    let mut rest = flat_prefix;
    for l in (0..len).rev() {
        out[l] = rest % shape.dims()[l];
        rest /= shape.dims()[l];
    }
    out
}

/// Slice values `f(p, λ_j, anchors)` for every prefix `p` of length `l`,
/// in prefix order; each inner vector has `k_{l+1}` entries.
fn slice_blocks(values: &SampleTensor, grid: &GridSpec, l: usize) -> Vec<CVector> {
    let shape = grid.shape();
    (0..shape.prefix_len(l))
        .map(|p| {
            let mut index = grid.anchored_index(&prefix_of(shape, p, l));
            (0..shape.dims()[l])
                .map(|j| {
                    index[l] = j;
                    values.get(&index)
                })
                .collect()
        })
        .collect()
}

/// Builds the anchored weight stack of a sample tensor.
pub fn build_stack_from_values(values: &SampleTensor, grid: &GridSpec) -> Result<WeightStack> {
    if values.shape() != grid.shape() {
        return Err(Error::Shape(format!(
            "sample tensor of shape {:?} against grid {:?}",
            values.shape().dims(),
            grid.shape().dims()
        )));
    }
    let shape = grid.shape();
    let mut levels = Vec::with_capacity(shape.ndim());
    for l in 0..shape.ndim() {
        let blocks = slice_blocks(values, grid, l);
        if l == 0 {
            levels.push(blocks.into_iter().flatten().collect());
            continue;
        }
        let anchor = grid.anchors()[l];
        let mut level = Vec::with_capacity(shape.prefix_len(l + 1));
        for (p, block) in blocks.iter().enumerate() {
            let largest = block.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let divisor = block[anchor];
            if divisor.norm() <= ANCHOR_TOL * largest || divisor.norm() == 0.0 {
                let mut index = grid.anchored_index(&prefix_of(shape, p, l));
                index[l] = anchor;
                return Err(Error::AnchorSingular {
                    level: l + 1,
                    index,
                });
            }
            level.extend(block.iter().enumerate().map(|(j, z)| {
                if j == anchor {
                    real(1.0)
                } else {
                    z / divisor
                }
            }));
        }
        levels.push(level);
    }
    WeightStack::new(shape, levels)
}

/// Best anchor for variable `l` given the current anchors of the others:
/// maximizes the smallest block-relative modulus over all blocks of every
/// tensor.
fn best_anchor(tensors: &[&SampleTensor], grid: &GridSpec, l: usize) -> Option<usize> {
    let k = grid.shape().dims()[l];
    let score = |j: usize| -> f64 {
        tensors
            .iter()
            .flat_map(|t| slice_blocks(t, grid, l))
            .map(|block| {
                let largest = block.iter().map(|z| z.norm()).fold(0.0, f64::max);
                if largest == 0.0 {
                    0.0
                } else {
                    block[j].norm() / largest
                }
            })
            .fold(f64::INFINITY, f64::min)
    };
    (0..k)
        .map(|j| (j, score(j)))
        .filter(|(_, s)| *s > ANCHOR_TOL)
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(j, _)| j)
}

/// Builds one stack per tensor on a common grid, re-anchoring under
/// [`AnchorPolicy::Reanchor`]. Returns the stacks and the grid actually used.
pub fn build_stacks_with_policy(
    tensors: &[&SampleTensor],
    grid: &GridSpec,
    policy: AnchorPolicy,
) -> Result<(Vec<WeightStack>, GridSpec)> {
    let mut grid = grid.clone();
    let budget: usize = grid.shape().dims().iter().sum::<usize>() + 1;
    let mut last_err = None;
    for _ in 0..budget {
        let attempt: Result<Vec<WeightStack>> = tensors
            .iter()
            .map(|t| build_stack_from_values(t, &grid))
            .collect();
        match attempt {
            Ok(stacks) => return Ok((stacks, grid)),
            Err(Error::AnchorSingular { level, index }) if policy == AnchorPolicy::Reanchor => {
                let variable = level - 1;
                match best_anchor(tensors, &grid, variable) {
                    Some(j) if j != grid.anchors()[variable] => {
                        grid = grid.reanchored(variable, j)?;
                        last_err = Some(Error::AnchorSingular { level, index });
                    }
                    _ => return Err(Error::AnchorSingular { level, index }),
                }
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::Shape("re-anchoring did not converge".into())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Polynomial,
    Rational,
}

/// Numerator or denominator side of a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Num,
    Den,
}

/// The output of decoupling: grid, numerator and denominator stacks, and
/// the grid samples the stacks were built from.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoupledModel {
    grid: GridSpec,
    kind: ModelKind,
    num_stack: WeightStack,
    den_stack: WeightStack,
    samples: SampleTensor,
    evaluations: usize,
}

impl DecoupledModel {
    /// Assembles a model from parts, checking shapes.
    pub fn from_parts(
        grid: GridSpec,
        kind: ModelKind,
        num_stack: WeightStack,
        den_stack: WeightStack,
        samples: SampleTensor,
        evaluations: usize,
    ) -> Result<Self> {
        let shape = grid.shape();
        WeightStack::new(shape, num_stack.levels.clone())?;
        WeightStack::new(shape, den_stack.levels.clone())?;
        if samples.shape() != shape {
            return Err(Error::Shape("samples do not match the grid".into()));
        }
        Ok(DecoupledModel {
            grid,
            kind,
            num_stack,
            den_stack,
            samples,
            evaluations,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn num_stack(&self) -> &WeightStack {
        &self.num_stack
    }

    pub fn den_stack(&self) -> &WeightStack {
        &self.den_stack
    }

    pub fn stack(&self, which: Which) -> &WeightStack {
        match which {
            Which::Num => &self.num_stack,
            Which::Den => &self.den_stack,
        }
    }

    pub fn samples(&self) -> &SampleTensor {
        &self.samples
    }

    /// Function evaluations consumed while building the model.
    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    /// `N = k_1 ⋯ k_n`.
    pub fn grid_size(&self) -> usize {
        self.grid.len()
    }

    /// Values reproduced on the grid by the stacks alone (numerator
    /// telescoped product over denominator telescoped product).
    pub fn telescoped_values(&self) -> CVector {
        let shape = self.grid.shape();
        let num = self.num_stack.telescoped(shape);
        let den = self.den_stack.telescoped(shape);
        num.into_iter().zip(den).map(|(n, d)| n / d).collect()
    }
}

/// Decouples a polynomial from its `N` grid samples.
pub fn decouple_polynomial<E: Evaluator + ?Sized>(
    f: &E,
    grid: &GridSpec,
) -> Result<DecoupledModel> {
    decouple_polynomial_with_policy(f, grid, AnchorPolicy::Fail)
}

pub fn decouple_polynomial_with_policy<E: Evaluator + ?Sized>(
    f: &E,
    grid: &GridSpec,
    policy: AnchorPolicy,
) -> Result<DecoupledModel> {
    let counter = Counting::new(f);
    let samples = SampleTensor::sample(&counter, grid)?;
    let mut model = decouple_polynomial_from_samples(samples, grid, policy)?;
    model.evaluations = counter.calls();
    Ok(model)
}

/// Decouples a polynomial given only its values on the grid.
pub fn decouple_polynomial_from_samples(
    samples: SampleTensor,
    grid: &GridSpec,
    policy: AnchorPolicy,
) -> Result<DecoupledModel> {
    let (mut stacks, grid) = build_stacks_with_policy(&[&samples], grid, policy)?;
    let num_stack = stacks.remove(0);
    let den_stack = WeightStack::ones(grid.shape());
    Ok(DecoupledModel {
        grid,
        kind: ModelKind::Polynomial,
        num_stack,
        den_stack,
        samples,
        evaluations: 0,
    })
}

/// Options for [`decouple_rational_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RationalOptions {
    /// Largest `σ_min/σ_1` accepted for a slice null vector.
    pub null_tol: f64,
    pub anchor_policy: AnchorPolicy,
}

impl Default for RationalOptions {
    fn default() -> Self {
        RationalOptions {
            null_tol: DEFAULT_NULL_TOL,
            anchor_policy: AnchorPolicy::Fail,
        }
    }
}

/// Decouples a rational function from evaluations alone.
///
/// Every slice along variable `l` (earlier variables on grid nodes, later
/// ones at their anchors) is sampled at the right nodes `λ^(l)` and the left
/// nodes `left_nodes[l]`; the null vector of its Loewner matrix yields the
/// slice denominator values up to scale. Chaining the anchor-normalized
/// slice denominators gives denominator values `D_J` on the whole grid, and
/// the numerator values are `H_J · D_J`. Both tensors are then turned into
/// weight stacks. The global scale (fixed by the level-1 anchor entry being
/// 1) cancels in the reconstruction ratio.
pub fn decouple_rational_from_samples<E: Evaluator + ?Sized>(
    h: &E,
    grid: &GridSpec,
    left_nodes: &[NodeSet],
) -> Result<DecoupledModel> {
    decouple_rational_with(h, grid, left_nodes, RationalOptions::default())
}

pub fn decouple_rational_with<E: Evaluator + ?Sized>(
    h: &E,
    grid: &GridSpec,
    left_nodes: &[NodeSet],
    options: RationalOptions,
) -> Result<DecoupledModel> {
    if left_nodes.len() != grid.ndim() {
        return Err(Error::Shape(format!(
            "{} left node sets for {} variables",
            left_nodes.len(),
            grid.ndim()
        )));
    }
    let counter = Counting::new(h);
    let samples = SampleTensor::sample(&counter, grid)?;
    let shape = grid.shape().clone();

    // den[p * k_l + j] is the denominator value at (p, λ_j, anchors), up to
    // one global constant, for prefixes p of length l.
    let mut den: CVector = vec![real(1.0)];
    for l in 0..shape.ndim() {
        let right = grid.nodes()[l].clone();
        let blocks = slice_blocks(&samples, grid, l);
        let mut next = Vec::with_capacity(shape.prefix_len(l + 1));
        for (p, w) in blocks.into_iter().enumerate() {
            let prefix = prefix_of(&shape, p, l);
            let mut point = grid.point(&grid.anchored_index(&prefix));
            let v = left_nodes[l]
                .as_slice()
                .iter()
                .map(|&mu| {
                    point[l] = mu;
                    eval_finite(&counter, &point)
                })
                .collect::<Result<Vec<_>>>()?;
            let sys = LoewnerSystem::new(left_nodes[l].clone(), v, right.clone(), w)?;
            let ratios =
                recover_denominator_values_with_tol(&sys, grid.anchors()[l], options.null_tol)
                    .map_err(|e| match e {
                        Error::AnchorSingular { .. } => {
                            let mut index = grid.anchored_index(&prefix);
                            index[l] = grid.anchors()[l];
                            Error::AnchorSingular {
                                level: l + 1,
                                index,
                            }
                        }
                        other => other,
                    })?;
            next.extend(ratios.into_iter().map(|r| den[p] * r));
        }
        den = next;
    }

    let den_tensor = SampleTensor::new(shape.clone(), den)?;
    let num_values = hadamard(samples.values(), den_tensor.values())?;
    let num_tensor = SampleTensor::new(shape, num_values)?;
    let (mut stacks, grid) =
        build_stacks_with_policy(&[&num_tensor, &den_tensor], grid, options.anchor_policy)?;
    let den_stack = stacks.pop().expect("two stacks");
    let num_stack = stacks.pop().expect("two stacks");
    Ok(DecoupledModel {
        grid,
        kind: ModelKind::Rational,
        num_stack,
        den_stack,
        samples,
        evaluations: counter.calls(),
    })
}

/// The length-`N` vector function `Φ_l(x)` (or `Φ̂_l(x)` for
/// [`Which::Num`]); `l` is 0-based.
pub fn phi_eval(model: &DecoupledModel, l: usize, x: Complex64, which: Which) -> Result<CVector> {
    let grid = model.grid();
    if l >= grid.ndim() {
        return Err(Error::Shape(format!(
            "variable {l} out of range for {} variables",
            grid.ndim()
        )));
    }
    let shape = grid.shape();
    let stride = shape.stride(l);
    let k = shape.dims()[l];
    let basis = grid.nodes()[l].normalized_basis(x);
    let stack = model.stack(which).level(l);
    Ok((0..shape.len())
        .map(|i| {
            let prefix = i / stride;
            stack[prefix] * basis[prefix % k]
        })
        .collect())
}

fn check_point(model: &DecoupledModel, point: &[Complex64]) -> Result<()> {
    if point.len() != model.grid().ndim() {
        return Err(Error::Shape(format!(
            "point has {} coordinates, model has {} variables",
            point.len(),
            model.grid().ndim()
        )));
    }
    Ok(())
}

/// `⊙_l Φ_l(x_l)` for one side of the model.
pub fn hadamard_product(
    model: &DecoupledModel,
    point: &[Complex64],
    which: Which,
) -> Result<CVector> {
    check_point(model, point)?;
    let mut acc = ones(model.grid_size());
    for (l, &x) in point.iter().enumerate() {
        acc = hadamard(&acc, &phi_eval(model, l, x, which)?)?;
    }
    Ok(acc)
}

/// `(Σ_rows ⊙_l Φ̂_l, Σ_rows ⊙_l Φ_l)` at `point`.
pub fn numerator_denominator(
    model: &DecoupledModel,
    point: &[Complex64],
) -> Result<(Complex64, Complex64)> {
    let num = rowwise_sum(&hadamard_product(model, point, Which::Num)?);
    let den = rowwise_sum(&hadamard_product(model, point, Which::Den)?);
    Ok((num, den))
}

pub fn reconstruct(model: &DecoupledModel, point: &[Complex64]) -> Result<Complex64> {
    let (num, den) = numerator_denominator(model, point)?;
    if den.norm() == 0.0 || den.norm() <= 1e-13 * num.norm() {
        return Err(Error::DenominatorVanishes {
            point: point.to_vec(),
        });
    }
    let value = num / den;
    if !is_finite(value) {
        return Err(Error::NonFinite("reconstruction".into()));
    }
    Ok(value)
}

/// `Σ_rows exp(Σ_l log Φ̂_l)`, the sum-of-sums form of the numerator, using
/// the principal branch of the logarithm.
pub fn exp_log_reconstruct(model: &DecoupledModel, point: &[Complex64]) -> Result<Complex64> {
    check_point(model, point)?;
    let mut logs = vec![Complex64::new(0.0, 0.0); model.grid_size()];
    for (l, &x) in point.iter().enumerate() {
        for (entry, (acc, phi)) in logs
            .iter_mut()
            .zip(phi_eval(model, l, x, Which::Num)?)
            .enumerate()
        {
            if phi.norm() == 0.0 {
                return Err(Error::LogOfZero { variable: l, entry });
            }
            *acc += phi.ln();
        }
    }
    Ok(logs.into_iter().map(|s| s.exp()).sum())
}

/// Number of decoupled scalar single-variable functions,
/// `1 + k_1 + k_1 k_2 + ⋯ + k_1 ⋯ k_{n−1}`.
pub fn function_count(dims: &[usize]) -> usize {
    (0..dims.len())
        .map(|l| dims[..l].iter().product::<usize>())
        .sum()
}
