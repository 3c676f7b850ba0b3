//! Loewner matrices of one-variable data: assembly, numerical rank,
//! null vectors (by SVD and in closed form), recovery of denominator values
//! and the Bezoutian factorization `Δ_μ 𝕃 Δ_λ = V_μᵀ B(n, d) V_λ`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lagrange::{NodeSet, NODE_DISTINCT_TOL};
use crate::numkit::{poly_eval, real, CMatrix, CVector};

/// Relative singular-value threshold for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Largest `σ_min/σ_1` accepted as a genuine null direction.
pub const DEFAULT_NULL_TOL: f64 = 1e-6;

/// Largest `|d_anchor| / max |d_j|` treated as a vanishing anchor.
pub const ANCHOR_DEN_TOL: f64 = 1e-10;

/// Left data `(μ_i, v_i)`, right data `(λ_j, w_j)` and
/// `𝕃_{i,j} = (v_i − w_j)/(μ_i − λ_j)`.
#[derive(Debug, Clone)]
pub struct LoewnerSystem {
    left_nodes: NodeSet,
    left_values: CVector,
    right_nodes: NodeSet,
    right_values: CVector,
    matrix: CMatrix,
}

pub fn build_loewner(
    mu: &[Complex64],
    v: &[Complex64],
    lambda: &[Complex64],
    w: &[Complex64],
) -> Result<LoewnerSystem> {
    LoewnerSystem::new(
        NodeSet::new(mu.to_vec())?,
        v.to_vec(),
        NodeSet::new(lambda.to_vec())?,
        w.to_vec(),
    )
}

impl LoewnerSystem {
    pub fn new(
        left_nodes: NodeSet,
        left_values: CVector,
        right_nodes: NodeSet,
        right_values: CVector,
    ) -> Result<Self> {
        if left_values.len() != left_nodes.len() || right_values.len() != right_nodes.len() {
            return Err(Error::Shape(format!(
                "{} left nodes with {} values, {} right nodes with {} values",
                left_nodes.len(),
                left_values.len(),
                right_nodes.len(),
                right_values.len()
            )));
        }
        let scale = left_nodes
            .as_slice()
            .iter()
            .chain(right_nodes.as_slice())
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        let (rho, kappa) = (left_nodes.len(), right_nodes.len());
        let mut matrix = CMatrix::zeros(rho, kappa);
        for i in 0..rho {
            let (mu, vi) = (left_nodes.get(i), left_values[i]);
            for j in 0..kappa {
                let gap = mu - right_nodes.get(j);
                if gap.norm() <= NODE_DISTINCT_TOL * scale {
                    return Err(Error::NodeCollision { left: i, right: j });
                }
                matrix[(i, j)] = (vi - right_values[j]) / gap;
            }
        }
        Ok(LoewnerSystem {
            left_nodes,
            left_values,
            right_nodes,
            right_values,
            matrix,
        })
    }

    /// Samples `h` at both node sets and assembles the system.
    pub fn from_function<F>(left: NodeSet, right: NodeSet, h: F) -> Result<Self>
    where
        F: Fn(Complex64) -> Result<Complex64>,
    {
        let v = left
            .as_slice()
            .iter()
            .map(|&s| h(s))
            .collect::<Result<_>>()?;
        let w = right
            .as_slice()
            .iter()
            .map(|&s| h(s))
            .collect::<Result<_>>()?;
        Self::new(left, v, right, w)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn left_nodes(&self) -> &NodeSet {
        &self.left_nodes
    }

    pub fn right_nodes(&self) -> &NodeSet {
        &self.right_nodes
    }

    pub fn left_values(&self) -> &[Complex64] {
        &self.left_values
    }

    pub fn right_values(&self) -> &[Complex64] {
        &self.right_values
    }
}

/// Numerical rank of a Loewner matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeEstimate {
    pub rank: usize,
    /// Descending.
    pub singular_values: Vec<f64>,
    pub tol: f64,
}

struct Svd {
    /// Descending.
    sigma: Vec<f64>,
    /// Right singular vectors, matching `sigma` (padded to `cols` entries
    /// when the matrix is wide).
    right: Vec<CVector>,
}

fn svd(m: &CMatrix, want_vectors: bool) -> Svd {
    let (rows, cols) = m.shape();
    // Wide matrices are padded with zero rows so that the full right
    // singular basis (including the trailing null directions) is returned.
    let padded_rows = rows.max(cols);
    let mut dm = DMatrix::<Complex64>::zeros(padded_rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            dm[(i, j)] = m[(i, j)];
        }
    }
    let dec = dm.svd(false, want_vectors);
    let mut order: Vec<usize> = (0..dec.singular_values.len()).collect();
    order.sort_by(|&a, &b| dec.singular_values[b].total_cmp(&dec.singular_values[a]));
    let sigma = order.iter().map(|&i| dec.singular_values[i]).collect();
    let right = match (want_vectors, dec.v_t.as_ref()) {
        (true, Some(v_t)) => order
            .iter()
            .map(|&i| (0..cols).map(|j| v_t[(i, j)].conj()).collect())
            .collect(),
        _ => Vec::new(),
    };
    Svd { sigma, right }
}

/// Singular values of `m` in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let mut s = svd(m, false).sigma;
    s.truncate(m.rows().min(m.cols()));
    s
}

/// Count of singular values above `tol · σ_1`.
pub fn numerical_rank(sigma: &[f64], tol: f64) -> usize {
    match sigma.first() {
        Some(&s1) if s1 > 0.0 => sigma.iter().take_while(|&&s| s > tol * s1).count(),
        _ => 0,
    }
}

pub fn estimate_degree(sys: &LoewnerSystem, tol: f64) -> DegreeEstimate {
    let singular_values = singular_values(&sys.matrix);
    DegreeEstimate {
        rank: numerical_rank(&singular_values, tol),
        singular_values,
        tol,
    }
}

/// Scales `v` by a unit complex number so that its largest-modulus entry is
/// real and positive.
fn fix_phase(v: &mut [Complex64]) {
    let mut best = 0;
    for (i, z) in v.iter().enumerate() {
        if z.norm() > v[best].norm() {
            best = i;
        }
    }
    if let Some(&pivot) = v.get(best) {
        if pivot.norm() > 0.0 {
            let phase = pivot.conj() / pivot.norm();
            v.iter_mut().for_each(|z| *z *= phase);
        }
    }
}

/// Unit right singular vector of the smallest singular value, together with
/// that singular value. For wide matrices the trailing null directions have
/// `σ = 0`.
pub fn nullvector_numeric(sys: &LoewnerSystem) -> (CVector, f64) {
    let dec = svd(&sys.matrix, true);
    let mut v = dec.right.last().cloned().unwrap_or_default();
    fix_phase(&mut v);
    (v, dec.sigma.last().copied().unwrap_or(0.0))
}

/// Closed-form null vector `Δ_λ γ = (γ_j d(λ_j))_j`.
pub fn nullvector_closed_form(nodes: &NodeSet, den_values: &[Complex64]) -> Result<CVector> {
    if den_values.len() != nodes.len() {
        return Err(Error::Shape(format!(
            "{} denominator values for {} nodes",
            den_values.len(),
            nodes.len()
        )));
    }
    Ok(nodes
        .gamma()
        .into_iter()
        .zip(den_values)
        .map(|(g, d)| g * d)
        .collect())
}

/// Recovers `d(λ_j)` up to scale from data alone, normalized so that the
/// entry at `anchor` is 1.
pub fn recover_denominator_values(sys: &LoewnerSystem, anchor: usize) -> Result<CVector> {
    recover_denominator_values_with_tol(sys, anchor, DEFAULT_NULL_TOL)
}

pub fn recover_denominator_values_with_tol(
    sys: &LoewnerSystem,
    anchor: usize,
    null_tol: f64,
) -> Result<CVector> {
    let kappa = sys.right_nodes.len();
    if anchor >= kappa {
        return Err(Error::Shape(format!(
            "anchor {anchor} out of range for {kappa} nodes"
        )));
    }
    let dec = svd(&sys.matrix, true);
    let sigma_1 = dec.sigma.first().copied().unwrap_or(0.0);
    if sigma_1 == 0.0 {
        // Constant data: every weight vector interpolates, d ≡ 1 is the
        // canonical choice.
        return Ok(vec![real(1.0); kappa]);
    }
    let sigma_min = dec.sigma.last().copied().unwrap_or(0.0);
    let ratio = sigma_min / sigma_1;
    if ratio > null_tol {
        return Err(Error::NotRational {
            ratio,
            tol: null_tol,
        });
    }
    let c = dec.right.last().cloned().unwrap_or_default();
    let d: CVector = c
        .iter()
        .zip(sys.right_nodes.gamma())
        .map(|(c, g)| c / g)
        .collect();
    let largest = d.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let pivot = d[anchor];
    if pivot.norm() <= ANCHOR_DEN_TOL * largest {
        return Err(Error::AnchorSingular {
            level: 0,
            index: vec![anchor],
        });
    }
    Ok(d.into_iter().map(|z| z / pivot).collect())
}

/// `(V)_{i,j} = p_j^{i−1}`, a `nu × points.len()` matrix.
pub fn vandermonde(points: &[Complex64], nu: usize) -> CMatrix {
    let mut v = CMatrix::zeros(nu, points.len());
    for (j, &p) in points.iter().enumerate() {
        let mut power = real(1.0);
        for i in 0..nu {
            v[(i, j)] = power;
            power *= p;
        }
    }
    v
}

/// Degree of an ascending coefficient vector (0 for the zero polynomial).
fn degree(coeffs: &[Complex64]) -> usize {
    coeffs.iter().rposition(|c| c.norm() != 0.0).unwrap_or(0)
}

/// Coefficients `B_{k,l}` of
/// `(n(x)d(y) − n(y)d(x))/(x − y) = Σ_{k,l} B_{k,l} x^{k} y^{l}` (0-based).
pub fn bezoutian(n_coeffs: &[Complex64], d_coeffs: &[Complex64], nu: usize) -> Result<CMatrix> {
    let max_degree = degree(n_coeffs).max(degree(d_coeffs));
    if max_degree > nu {
        return Err(Error::DegreeMismatch {
            nu,
            degree: max_degree,
        });
    }
    let coeff = |c: &[Complex64], i: usize| c.get(i).copied().unwrap_or_default();
    let mut b = CMatrix::zeros(nu, nu);
    // n(x)d(y) − n(y)d(x) = Σ_{a>b} c_ab (x^a y^b − x^b y^a) with
    // c_ab = n_a d_b − n_b d_a, and
    // (x^a y^b − x^b y^a)/(x − y) = Σ_{m=0}^{a−b−1} x^{b+m} y^{a−1−m}.
    for a in 1..=nu {
        for bb in 0..a {
            let c =
                coeff(n_coeffs, a) * coeff(d_coeffs, bb) - coeff(n_coeffs, bb) * coeff(d_coeffs, a);
            if c.norm() == 0.0 {
                continue;
            }
            for m in 0..a - bb {
                b[(bb + m, a - 1 - m)] += c;
            }
        }
    }
    Ok(b)
}

/// `‖Δ_μ 𝕃 Δ_λ − V_μᵀ B V_λ‖_F / ‖V_μᵀ B V_λ‖_F`, with 0/0 reported as 0.
pub fn factorization_residual(
    sys: &LoewnerSystem,
    n_coeffs: &[Complex64],
    d_coeffs: &[Complex64],
    nu: usize,
) -> Result<f64> {
    let (lhs, rhs) = factorization_sides(sys, n_coeffs, d_coeffs, nu)?;
    let diff = lhs.sub(&rhs)?.frobenius_norm();
    let scale = rhs.frobenius_norm();
    Ok(match (diff == 0.0, scale == 0.0) {
        (true, _) => 0.0,
        (false, true) => f64::INFINITY,
        (false, false) => diff / scale,
    })
}

/// Both sides of the Bezoutian factorization, `(Δ_μ 𝕃 Δ_λ, V_μᵀ B V_λ)`.
pub fn factorization_sides(
    sys: &LoewnerSystem,
    n_coeffs: &[Complex64],
    d_coeffs: &[Complex64],
    nu: usize,
) -> Result<(CMatrix, CMatrix)> {
    let b = bezoutian(n_coeffs, d_coeffs, nu)?;
    let mu = sys.left_nodes.as_slice();
    let lambda = sys.right_nodes.as_slice();
    let d_mu: CVector = mu.iter().map(|&s| poly_eval(d_coeffs, s)).collect();
    let d_lambda: CVector = lambda.iter().map(|&s| poly_eval(d_coeffs, s)).collect();
    let lhs = CMatrix::diag(&d_mu)
        .matmul(&sys.matrix)?
        .matmul(&CMatrix::diag(&d_lambda))?;
    let rhs = vandermonde(mu, nu)
        .transpose()
        .matmul(&b)?
        .matmul(&vandermonde(lambda, nu))?;
    Ok((lhs, rhs))
}

/// Left nodes for a caller that only supplies right nodes: real points
/// strictly between consecutive right-node real parts, continued beyond
/// the largest one with the mean spacing.
pub fn default_left_nodes(right: &[Complex64], count: usize) -> CVector {
    let mut re: Vec<f64> = right.iter().map(|z| z.re).collect();
    re.sort_by(f64::total_cmp);
    re.dedup();
    let (lo, hi) = match (re.first(), re.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => return (0..count).map(|m| real(m as f64)).collect(),
    };
    let h = if re.len() > 1 {
        (hi - lo) / (re.len() - 1) as f64
    } else {
        1.0
    };
    let beyond = |m: usize| real(hi + h * (m + 1) as f64);
    let scale = right.iter().map(|z| z.norm()).fold(hi.abs(), f64::max);
    let collides = |z: Complex64| {
        right
            .iter()
            .any(|&r| (r - z).norm() <= NODE_DISTINCT_TOL * scale.max(z.norm()) * 1e3)
    };
    let mut out: CVector = re
        .windows(2)
        .map(|w| real(0.5 * (w[0] + w[1])))
        .chain((0..).map(beyond))
        .take(count)
        .collect();
    if out.iter().any(|&z| collides(z)) {
        out = (0..count).map(beyond).collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::sin_angle;

    fn r(x: &[f64]) -> CVector {
        x.iter().map(|&v| real(v)).collect()
    }

    fn running_example() -> LoewnerSystem {
        let h = |s: f64| 1.0 / (s + 1.0);
        build_loewner(
            &r(&[2.0, 3.0]),
            &r(&[h(2.0), h(3.0)]),
            &r(&[0.0, 1.0]),
            &r(&[h(0.0), h(1.0)]),
        )
        .unwrap()
    }

    #[test]
    fn hand_loewner_matrix() {
        let sys = running_example();
        let want = [[-1.0 / 3.0, -1.0 / 6.0], [-0.25, -0.125]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((sys.matrix()[(i, j)] - real(want[i][j])).norm() < 1e-16);
            }
        }
    }

    #[test]
    fn constant_data_gives_zero_matrix() {
        let c = real(2.5);
        let sys = build_loewner(&r(&[5.0, 6.0, 7.0]), &[c; 3], &r(&[0.0, 1.0]), &[c; 2]).unwrap();
        assert_eq!(sys.matrix().max_abs(), 0.0);
        let est = estimate_degree(&sys, DEFAULT_RANK_TOL);
        assert_eq!(est.rank, 0);
        assert_eq!(
            recover_denominator_values(&sys, 1).unwrap(),
            vec![real(1.0); 2]
        );
        let (v, sigma) = nullvector_numeric(&sys);
        assert_eq!(sigma, 0.0);
        assert!((crate::numkit::norm2(&v) - 1.0).abs() < 1e-15);
        assert_eq!(nullvector_numeric(&sys).0, v);
    }

    #[test]
    fn swapping_right_nodes_permutes_columns() {
        let mu = r(&[4.0, 5.0]);
        let v = r(&[0.2, 0.7]);
        let a = build_loewner(&mu, &v, &r(&[0.0, 1.0, 2.0]), &r(&[1.0, 3.0, -1.0])).unwrap();
        let b = build_loewner(&mu, &v, &r(&[2.0, 1.0, 0.0]), &r(&[-1.0, 3.0, 1.0])).unwrap();
        let mut swapped = a.matrix().clone();
        swapped.swap_columns(0, 2);
        assert_eq!(&swapped, b.matrix());
    }

    #[test]
    fn node_collision_detected() {
        let err =
            build_loewner(&r(&[0.0, 3.0]), &r(&[1.0, 1.0]), &r(&[3.0]), &r(&[2.0])).unwrap_err();
        assert_eq!(err, Error::NodeCollision { left: 1, right: 0 });
    }

    #[test]
    fn hand_rank_and_nullvector() {
        let sys = running_example();
        assert_eq!(estimate_degree(&sys, DEFAULT_RANK_TOL).rank, 1);
        let (v, sigma) = nullvector_numeric(&sys);
        assert!(sigma <= 1e-15, "{sigma}");
        assert!(sin_angle(&v, &r(&[1.0, -2.0])) < 1e-14);
        // Phase convention: largest entry real positive.
        assert!(v[1].re > 0.0 && v[1].im == 0.0);
        let closed = nullvector_closed_form(sys.right_nodes(), &r(&[1.0, 2.0])).unwrap();
        assert_eq!(closed, r(&[-1.0, 2.0]));
    }

    #[test]
    fn hand_denominator_recovery() {
        let d = recover_denominator_values(&running_example(), 1).unwrap();
        assert!((d[0] - real(0.5)).norm() < 1e-14);
        assert_eq!(d[1], real(1.0));
    }

    #[test]
    fn not_rational_rejected() {
        // exp is not rational of degree < 3 on three right nodes.
        let left = NodeSet::from_reals(&[-1.5, -0.5, 0.5]).unwrap();
        let right = NodeSet::from_reals(&[-1.0, 0.0, 1.0]).unwrap();
        let sys = LoewnerSystem::from_function(left, right, |s| Ok(s.exp())).unwrap();
        assert!(matches!(
            recover_denominator_values(&sys, 2),
            Err(Error::NotRational { .. })
        ));
    }

    #[test]
    fn bezoutian_hand_case() {
        let b = bezoutian(&r(&[1.0]), &r(&[1.0, 1.0]), 1).unwrap();
        assert_eq!(b.as_slice(), &[real(-1.0)]);
    }

    #[test]
    fn bezoutian_of_equal_polynomials_is_zero() {
        let p = r(&[1.0, -2.0, 0.5]);
        assert_eq!(bezoutian(&p, &p, 3).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn bezoutian_degree_mismatch() {
        assert_eq!(
            bezoutian(&r(&[1.0, 0.0, 2.0]), &r(&[1.0]), 1).unwrap_err(),
            Error::DegreeMismatch { nu: 1, degree: 2 }
        );
        // Trailing zeros do not count toward the degree.
        assert!(bezoutian(&r(&[1.0, 2.0, 0.0]), &r(&[1.0]), 1).is_ok());
    }

    #[test]
    fn factorization_hand_case() {
        let sys = running_example();
        let (lhs, rhs) = factorization_sides(&sys, &r(&[1.0]), &r(&[1.0, 1.0]), 1).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((lhs[(i, j)] - real(-1.0)).norm() < 1e-15);
                assert!((rhs[(i, j)] - real(-1.0)).norm() < 1e-15);
            }
        }
        assert!(factorization_residual(&sys, &r(&[1.0]), &r(&[1.0, 1.0]), 1).unwrap() < 1e-15);
    }

    #[test]
    fn factorization_degenerate_equal_polynomials() {
        let p = r(&[2.0, 1.0]);
        let mu = r(&[3.0, 4.0]);
        let lambda = r(&[0.0, 1.0]);
        let one = |_: &Complex64| real(1.0);
        let sys = build_loewner(
            &mu,
            &mu.iter().map(one).collect::<Vec<_>>(),
            &lambda,
            &lambda.iter().map(one).collect::<Vec<_>>(),
        )
        .unwrap();
        assert_eq!(factorization_residual(&sys, &p, &p, 1).unwrap(), 0.0);
    }

    #[test]
    fn vandermonde_layout() {
        let v = vandermonde(&r(&[2.0, 3.0]), 3);
        assert_eq!(v.shape(), (3, 2));
        assert_eq!(v.row(2), &r(&[4.0, 9.0])[..]);
    }

    #[test]
    fn default_left_nodes_interleave() {
        let right = r(&[1.0, 2.0, 3.0]);
        assert_eq!(default_left_nodes(&right, 3), r(&[1.5, 2.5, 4.0]));
        let one = r(&[0.0]);
        assert_eq!(default_left_nodes(&one, 2), r(&[1.0, 2.0]));
        let left = default_left_nodes(&right, 5);
        assert!(build_loewner(&left, &[real(0.0); 5], &right, &[real(0.0); 3]).is_ok());
    }
}
