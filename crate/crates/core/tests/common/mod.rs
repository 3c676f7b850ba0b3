//! Independent oracles shared by the integration tests: direct polynomial
//! arithmetic, random coprime pairs and random multivariate polynomials.

#![allow(dead_code)]

use lfdecouple::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn r(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / 1f64.max(a.norm()).max(b.norm())
}

pub fn horner(coeffs: &[Complex64], s: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &a| acc * s + a)
}

/// Ascending coefficients of `lead · ∏ (s − root)`.
pub fn from_roots(lead: Complex64, roots: &[Complex64]) -> Vec<Complex64> {
    let mut p = vec![lead];
    for &z in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); p.len() + 1];
        for (i, &a) in p.iter().enumerate() {
            next[i + 1] += a;
            next[i] -= a * z;
        }
        p = next;
    }
    p
}

pub fn rand_complex(rng: &mut ChaCha8Rng, radius: f64) -> Complex64 {
    c(
        rng.gen_range(-radius..radius),
        rng.gen_range(-radius..radius),
    )
}

/// `1/∏_{i≠j}(λ_j − λ_i)` computed directly.
pub fn gamma_oracle(nodes: &[Complex64]) -> Vec<Complex64> {
    (0..nodes.len())
        .map(|j| {
            let mut p = r(1.0);
            for i in 0..nodes.len() {
                if i != j {
                    p *= nodes[j] - nodes[i];
                }
            }
            r(1.0) / p
        })
        .collect()
}

/// A coprime pair `(n, d)` with `deg n = dn`, `deg d = dd`. Roots of `n`
/// stay at least 0.3 from roots of `d`, and roots of `d` keep
/// `|Im| ≥ 0.3` so real sample nodes never sit near a pole.
pub fn coprime_pair(
    rng: &mut ChaCha8Rng,
    dn: usize,
    dd: usize,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut den_roots = Vec::new();
    while den_roots.len() < dd {
        let z = c(
            rng.gen_range(-2.0..2.0),
            rng.gen_range(0.3..1.5) * if rng.gen() { 1.0 } else { -1.0 },
        );
        den_roots.push(z);
    }
    let mut num_roots = Vec::new();
    while num_roots.len() < dn {
        let z = rand_complex(rng, 2.0);
        if den_roots.iter().all(|&p: &Complex64| (p - z).norm() > 0.3) {
            num_roots.push(z);
        }
    }
    let lead_n = c(rng.gen_range(0.5..2.0), rng.gen_range(-1.0..1.0));
    let lead_d = c(rng.gen_range(0.5..2.0), rng.gen_range(-1.0..1.0));
    (
        from_roots(lead_n, &num_roots),
        from_roots(lead_d, &den_roots),
    )
}

/// `k` distinct real nodes: one jittered point per cell of `[lo, hi]`.
pub fn spread_nodes(rng: &mut ChaCha8Rng, k: usize, lo: f64, hi: f64) -> Vec<f64> {
    let w = (hi - lo) / k as f64;
    (0..k)
        .map(|i| lo + w * (i as f64 + rng.gen_range(0.2..0.8)))
        .collect()
}

/// Interleaved left/right real node sets of sizes `kappa` and `rho`.
pub fn interleaved_nodes(
    rng: &mut ChaCha8Rng,
    kappa: usize,
    rho: usize,
    lo: f64,
    hi: f64,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let all = spread_nodes(rng, kappa + rho, lo, hi);
    let mut left = Vec::new();
    let mut right = Vec::new();
    for (i, x) in all.into_iter().enumerate() {
        if (i % 2 == 1 && left.len() < kappa) || right.len() == rho {
            left.push(r(x));
        } else {
            right.push(r(x));
        }
    }
    (left, right)
}

/// Dense multivariate polynomial `Σ_a c_a ∏_l x_l^{a_l}` with per-variable
/// degree bounds, coefficients flattened with variable 1 slowest.
#[derive(Debug, Clone)]
pub struct MultiPoly {
    pub degrees: Vec<usize>,
    pub coeffs: Vec<Complex64>,
}

impl MultiPoly {
    pub fn random(rng: &mut ChaCha8Rng, degrees: &[usize]) -> Self {
        let count: usize = degrees.iter().map(|d| d + 1).product();
        MultiPoly {
            degrees: degrees.to_vec(),
            coeffs: (0..count).map(|_| rand_complex(rng, 1.0)).collect(),
        }
    }

    pub fn eval(&self, point: &[Complex64]) -> Complex64 {
        let mut total = Complex64::new(0.0, 0.0);
        for (flat, &coef) in self.coeffs.iter().enumerate() {
            let mut rest = flat;
            let mut term = coef;
            for l in (0..self.degrees.len()).rev() {
                let e = rest % (self.degrees[l] + 1);
                rest /= self.degrees[l] + 1;
                term *= point[l].powu(e as u32);
            }
            total += term;
        }
        total
    }

    /// Same polynomial with the variable order permuted:
    /// `q(x_{perm[0]}, …) = p(x)`.
    pub fn permuted(&self, perm: &[usize]) -> impl Fn(&[Complex64]) -> Complex64 + '_ {
        let perm = perm.to_vec();
        move |q: &[Complex64]| {
            let mut x = vec![Complex64::new(0.0, 0.0); q.len()];
            for (i, &p) in perm.iter().enumerate() {
                x[p] = q[i];
            }
            self.eval(&x)
        }
    }
}
