//! State evolution: Gaussian quadrature, the scalar recursions for Z2 synchronization and
//! sparse PCA, and the contraction coefficients that control them.
//!
//! Z2 (with `φ` the standard normal measure):
//!
//! ```text
//! τ_1 = λ² − 1,   τ_{t+1} = g_λ(τ_t) = λ² ∫ tanh(τ_t + √τ_t x) φ(dx)
//! T₂(λ, τ) = λ² ∫ (1 − tanh²(τ + √τ x)) (1 + x / (2√τ)) φ(dx)          (= g_λ'(τ))
//! κ²(λ, τ) = λ² max{ ∫ [(x + 2√τ tanh)(1 − tanh²)]² φ(dx), ∫ (1 − tanh²)² φ(dx) }
//! ```
//!
//! Sparse PCA: `α⋆_{t+1} = f(α⋆_t)` with
//! `f(α) = λ Σ_i v⋆_i E[ST_τ(α v⋆_i + Z/√n)] / √(Σ_i E[ST_τ(α v⋆_i + Z/√n)²])`,
//! evaluated coordinate by coordinate in closed form.

use alloc::vec::Vec;

use crate::gaussian::{st_moments, StMoments};
use crate::{Error, Result};

/// Default number of Gauss-Hermite nodes.
pub const DEFAULT_ORDER: usize = 201;
/// Default tolerance of the fixed-point solvers.
pub const DEFAULT_TOL: f64 = 1e-12;
/// Iteration cap of the fixed-point solvers.
pub const MAX_ITER: usize = 100_000;

/// Gauss-Hermite rule for the standard normal measure: `E[f(Z)] ≈ Σ w_i f(x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub order: usize,
}

impl Quadrature {
    /// Builds the `order`-point rule. Nodes whose weight underflows are dropped.
    ///
    /// Nodes start as eigenvalues of the Jacobi matrix of the probabilists' Hermite
    /// polynomials and are polished by Newton's method on the orthonormal three-term
    /// recurrence of the physicists' polynomials (`z = x/√2`), which also yields the
    /// weights `w = 2 / (√π p'_n(z)²)`.
    pub fn gauss_hermite(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidParameter("quadrature order must be positive"));
        }
        const PIM4: f64 = 0.751_125_544_464_942_5; // π^{-1/4}
        const BIG: f64 = 1e150;
        let n = order;
        let nf = n as f64;
        let off: Vec<f64> = (1..n).map(|k| libm::sqrt(k as f64)).collect();
        let mut guesses = symmetric_tridiagonal_eigenvalues(n, &off)?;
        guesses.sort_by(f64::total_cmp);

        let scale_w = 1.0 / libm::sqrt(core::f64::consts::PI);
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for x0 in guesses {
            let mut z = x0 * core::f64::consts::FRAC_1_SQRT_2;
            let mut weight = 0.0;
            for _ in 0..20 {
                let (mut p1, mut p2) = (PIM4, 0.0);
                let mut rescaled = false;
                for j in 1..=n {
                    let jf = j as f64;
                    let p3 = p2;
                    p2 = p1;
                    p1 = z * libm::sqrt(2.0 / jf) * p2 - libm::sqrt((jf - 1.0) / jf) * p3;
                    if libm::fabs(p1) > BIG {
                        p1 /= BIG;
                        p2 /= BIG;
                        rescaled = true;
                    }
                }
                let pp = libm::sqrt(2.0 * nf) * p2;
                let step = p1 / pp;
                z -= step;
                weight = if rescaled { 0.0 } else { 2.0 / (pp * pp) };
                if libm::fabs(step) <= 1e-15 * f64::max(1.0, libm::fabs(z)) {
                    break;
                }
            }
            let w = weight * scale_w;
            if w > 0.0 {
                nodes.push(core::f64::consts::SQRT_2 * z);
                weights.push(w);
            }
        }
        Ok(Quadrature {
            nodes,
            weights,
            order,
        })
    }

    /// The default rule (order 201).
    pub fn standard() -> Self {
        Self::gauss_hermite(DEFAULT_ORDER).expect("default order converges")
    }

    /// `Σ w_i f(x_i)`
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        gauss_expect(f, self)
    }
}

/// Eigenvalues of the symmetric tridiagonal matrix with zero diagonal and off-diagonal
/// `off`, by implicit QL iteration.
fn symmetric_tridiagonal_eigenvalues(n: usize, off: &[f64]) -> Result<Vec<f64>> {
    let mut d = alloc::vec![0.0; n];
    let mut e = alloc::vec![0.0; n];
    e[..n - 1].copy_from_slice(off);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = libm::fabs(d[m]) + libm::fabs(d[m + 1]);
                if libm::fabs(e[m]) <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::ConvergenceFailure(iter));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = libm::hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { r } else { -r });
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = libm::hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(d)
}

/// `Σ w_i f(x_i)`; fails if `f` is not finite at some node.
pub fn gauss_expect<F: Fn(f64) -> f64>(f: F, q: &Quadrature) -> Result<f64> {
    let mut acc = 0.0;
    for (x, w) in q.nodes.iter().zip(&q.weights) {
        let v = f(*x);
        if !v.is_finite() {
            return Err(Error::NonFinite(v));
        }
        acc += w * v;
    }
    Ok(acc)
}

/// A scalar state-evolution sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SeTrajectory {
    /// `τ_1, τ_2, …` (Z2) or `α⋆_2, α⋆_3, …` (sparse)
    pub values: Vec<f64>,
    pub fixed_point: Option<f64>,
    pub converged: bool,
    pub iterations_to_converge: usize,
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain("tau must be positive"))
    }
}

/// `g_λ(τ) = λ² ∫ tanh(τ + √τ x) φ(dx)`
pub fn se_z2_step(tau: f64, lambda: f64, q: &Quadrature) -> Result<f64> {
    check_tau(tau)?;
    let s = libm::sqrt(tau);
    Ok(lambda * lambda * q.expect(|x| libm::tanh(tau + s * x))?)
}

/// `τ_1 = λ² − 1, …, τ_T` (no convergence test).
pub fn se_z2_trajectory(lambda: f64, t_max: usize, q: &Quadrature) -> Result<SeTrajectory> {
    let mut values = Vec::with_capacity(t_max);
    let mut tau = lambda * lambda - 1.0;
    for _ in 0..t_max {
        values.push(tau);
        tau = se_z2_step(tau, lambda, q)?;
    }
    Ok(SeTrajectory {
        values,
        fixed_point: None,
        converged: false,
        iterations_to_converge: 0,
    })
}

/// Iterates `τ ↦ g_λ(τ)` from `τ_1 = λ² − 1` until successive values differ by less than
/// `tol`. A sign change of the increment switches to half-damped updates.
pub fn se_z2_fixed_point(lambda: f64, q: &Quadrature, tol: f64) -> Result<SeTrajectory> {
    if !(lambda > 1.0 && lambda <= 1.2) {
        return Err(Error::Domain("fixed-point solver requires lambda in (1, 1.2]"));
    }
    fixed_point_iterate(lambda * lambda - 1.0, tol, |tau| se_z2_step(tau, lambda, q))
}

fn fixed_point_iterate<F: FnMut(f64) -> Result<f64>>(
    start: f64,
    tol: f64,
    mut step: F,
) -> Result<SeTrajectory> {
    let mut values = Vec::new();
    values.push(start);
    let mut x = start;
    let mut damping = 1.0;
    let mut last_delta = 0.0;
    for it in 1..=MAX_ITER {
        let fx = step(x)?;
        let delta = fx - x;
        if delta * last_delta < 0.0 {
            damping = 0.5;
        }
        last_delta = delta;
        let next = x + damping * delta;
        values.push(next);
        if libm::fabs(next - x) < tol {
            return Ok(SeTrajectory {
                values,
                fixed_point: Some(next),
                converged: true,
                iterations_to_converge: it,
            });
        }
        x = next;
    }
    Err(Error::ConvergenceFailure(MAX_ITER))
}

/// `T₂(λ, τ)`, the derivative of `g_λ` in `τ`.
pub fn t2_z2(lambda: f64, tau: f64, q: &Quadrature) -> Result<f64> {
    check_tau(tau)?;
    let s = libm::sqrt(tau);
    let v = q.expect(|x| {
        let t = libm::tanh(tau + s * x);
        (1.0 - t * t) * (1.0 + x / (2.0 * s))
    })?;
    Ok(lambda * lambda * v)
}

/// The two integrals inside `κ²(λ, τ)`, without the `λ²` factor.
pub fn kappa2_z2_parts(tau: f64, q: &Quadrature) -> Result<(f64, f64)> {
    check_tau(tau)?;
    let s = libm::sqrt(tau);
    let first = q.expect(|x| {
        let t = libm::tanh(tau + s * x);
        let v = (x + 2.0 * s * t) * (1.0 - t * t);
        v * v
    })?;
    let second = q.expect(|x| {
        let t = libm::tanh(tau + s * x);
        (1.0 - t * t) * (1.0 - t * t)
    })?;
    Ok((first, second))
}

/// `κ²(λ, τ)`
pub fn kappa2_z2(lambda: f64, tau: f64, q: &Quadrature) -> Result<f64> {
    let (a, b) = kappa2_z2_parts(tau, q)?;
    Ok(lambda * lambda * f64::max(a, b))
}

/// `(λ² ∫ tanh², λ² ∫ tanh)` at `τ`; the two agree for every `τ > 0`.
pub fn quad_identity_check(tau: f64, lambda: f64, q: &Quadrature) -> Result<(f64, f64)> {
    check_tau(tau)?;
    let s = libm::sqrt(tau);
    let l2 = lambda * lambda;
    let sq = q.expect(|x| { let t = libm::tanh(tau + s * x); t * t })?;
    let lin = q.expect(|x| libm::tanh(tau + s * x))?;
    Ok((l2 * sq, l2 * lin))
}

fn coord_moments(alpha: f64, v: f64, sigma: f64, tau: f64) -> StMoments {
    st_moments(alpha * v, sigma, tau)
}

/// Numerator and denominator of `f(α)` (before the square root), summed over coordinates.
/// Zero coordinates share one centered moment.
fn sparse_sums(alpha: f64, v_star: &[f64], tau: f64) -> (f64, f64) {
    let sigma = 1.0 / libm::sqrt(v_star.len() as f64);
    let zero = coord_moments(0.0, 0.0, sigma, tau);
    let mut num = 0.0;
    let mut den = 0.0;
    for &v in v_star {
        if v == 0.0 {
            den += zero.second;
        } else {
            let m = coord_moments(alpha, v, sigma, tau);
            num += v * m.mean;
            den += m.second;
        }
    }
    (num, den)
}

/// `f(α)` for soft thresholding at level `tau_t` with noise `N(0, I/n)`, `n = v_star.len()`.
pub fn se_sparse_f(alpha: f64, v_star: &[f64], tau_t: f64, lambda: f64) -> Result<f64> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::Domain("alpha must be nonnegative"));
    }
    if !(tau_t >= 0.0) {
        return Err(Error::Domain("threshold must be nonnegative"));
    }
    let (num, den) = sparse_sums(alpha, v_star, tau_t);
    if !(den > 0.0) {
        return Err(Error::DegenerateSe("soft threshold removes all mass"));
    }
    Ok(lambda * num / libm::sqrt(den))
}

/// `α⋆_2 = alpha2, α⋆_{t+1} = f(α⋆_t)` for `T` values; `fixed_point` is set once
/// successive values differ by less than [`DEFAULT_TOL`].
pub fn se_sparse_trajectory(
    alpha2: f64,
    v_star: &[f64],
    tau_t: f64,
    lambda: f64,
    t_max: usize,
) -> Result<SeTrajectory> {
    let mut values = Vec::with_capacity(t_max);
    let mut a = alpha2;
    let mut conv = None;
    for i in 0..t_max {
        values.push(a);
        let next = se_sparse_f(a, v_star, tau_t, lambda)?;
        if conv.is_none() && libm::fabs(next - a) < DEFAULT_TOL {
            conv = Some((i, next));
        }
        a = next;
    }
    Ok(SeTrajectory {
        values,
        fixed_point: conv.map(|(_, v)| v),
        converged: conv.is_some(),
        iterations_to_converge: conv.map_or(0, |(i, _)| i),
    })
}

/// Iterates `f` from `alpha2` to convergence.
pub fn se_sparse_fixed_point(
    alpha2: f64,
    v_star: &[f64],
    tau_t: f64,
    lambda: f64,
    tol: f64,
) -> Result<SeTrajectory> {
    fixed_point_iterate(alpha2, tol, |a| se_sparse_f(a, v_star, tau_t, lambda))
}

/// `κ²_t` for soft thresholding:
/// `max(⟨γ² P(|αv⋆ + Z/√n| > τ)⟩, ⟨γ² E[Z² 1(|αv⋆ + Z/√n| > τ)]⟩)` with `⟨·⟩ = (1/n) Σ`.
pub fn kappa2_sparse(alpha: f64, v_star: &[f64], tau_t: f64, gamma: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let sigma = 1.0 / libm::sqrt(n as f64);
    let zero = coord_moments(0.0, 0.0, sigma, tau_t);
    let (mut p, mut z2) = (0.0, 0.0);
    for &v in v_star {
        let m = if v == 0.0 {
            zero
        } else {
            coord_moments(alpha, v, sigma, tau_t)
        };
        p += m.active;
        z2 += m.z2_active;
    }
    let g2 = gamma * gamma / n as f64;
    Ok(f64::max(g2 * p, g2 * z2))
}

/// Root of `h` on `[lo, hi]` by bisection; `h(lo)` and `h(hi)` must differ in sign.
pub fn bisect<F: FnMut(f64) -> Result<f64>>(mut h: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut hlo = h(lo)?;
    let hhi = h(hi)?;
    if hlo * hhi > 0.0 {
        return Err(Error::Domain("bisection bracket has no sign change"));
    }
    for _ in 0..500 {
        let mid = 0.5 * (lo + hi);
        if hi - lo < tol || mid <= lo || mid >= hi {
            break;
        }
        let hm = h(mid)?;
        if (hm > 0.0) == (hlo > 0.0) {
            lo = mid;
            hlo = hm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rule_moments() {
        let q = Quadrature::standard();
        assert!((q.expect(|_| 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(q.expect(|x| x).unwrap().abs() < 1e-10);
        assert!((q.expect(|x| x * x).unwrap() - 1.0).abs() < 1e-10);
        assert!((q.expect(|x| x.powi(4)).unwrap() - 3.0).abs() < 1e-10);
        assert!(q.weights.iter().all(|w| *w > 0.0));
    }

    #[test]
    fn small_rules_are_exact_for_low_degree() {
        for order in 1..8 {
            let q = Quadrature::gauss_hermite(order).unwrap();
            assert_eq!(q.nodes.len(), order);
            assert!((q.expect(|_| 1.0).unwrap() - 1.0).abs() < 1e-14);
            if order >= 2 {
                assert!((q.expect(|x| x * x).unwrap() - 1.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn doubled_rule_agrees() {
        let q = Quadrature::standard();
        let q2 = Quadrature::gauss_hermite(2 * DEFAULT_ORDER).unwrap();
        let f = |x: f64| libm::tanh(0.3 + 0.5 * x);
        assert!((q.expect(f).unwrap() - q2.expect(f).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn non_finite_integrand_is_rejected() {
        let q = Quadrature::gauss_hermite(4).unwrap();
        assert!(matches!(q.expect(|x| 1.0 / (x - x)), Err(Error::NonFinite(_))));
    }

    #[test]
    fn z2_step_limits() {
        let q = Quadrature::standard();
        assert!(se_z2_step(1e-12, 1.1, &q).unwrap() <= 1e-6);
        let v = se_z2_step(0.21, 1.1, &q).unwrap();
        assert!(v > 0.21 && v < 1.21);
        assert!(se_z2_step(0.0, 1.1, &q).is_err());
    }

    #[test]
    fn fixed_point_bracket() {
        let q = Quadrature::standard();
        let l = 1.0001;
        let s = se_z2_fixed_point(l, &q, DEFAULT_TOL).unwrap();
        let fp = s.fixed_point.unwrap();
        assert!(fp > l * l - 1.0 && fp < l * l);
        assert!(se_z2_fixed_point(1.5, &q, DEFAULT_TOL).is_err());
    }

    #[test]
    fn identity_pair_limit() {
        let q = Quadrature::standard();
        let (a, b) = quad_identity_check(1e-10, 1.0, &q).unwrap();
        assert!(a <= 1e-5 && b <= 1e-5);
    }

    #[test]
    fn sparse_f_without_threshold_is_linear_gaussian() {
        let mut v = vec![0.0; 50];
        v[3] = 0.6;
        v[10] = -0.8;
        let alpha = 0.7;
        let f = se_sparse_f(alpha, &v, 0.0, 1.3).unwrap();
        let exact = 1.3 * alpha / libm::sqrt(alpha * alpha + 1.0);
        assert!((f - exact).abs() < 1e-12, "{f} vs {exact}");
    }

    #[test]
    fn sparse_f_degenerate_denominator() {
        // One coordinate, σ = 1, absurd threshold: every moment underflows.
        let err = se_sparse_f(0.0, &[1.0], 1e3, 1.0).unwrap_err();
        assert!(matches!(err, Error::DegenerateSe(_)));
    }

    #[test]
    fn kappa_sparse_vanishes_for_huge_threshold() {
        let mut v = vec![0.0; 100];
        v[0] = 1.0;
        assert!(kappa2_sparse(0.0, &v, 1e3, 1.0, 100).unwrap() < 1e-300);
    }

    #[test]
    fn bisection_finds_sqrt2() {
        let r = bisect(|x| Ok(x * x - 2.0), 0.0, 2.0, 1e-14).unwrap();
        assert!((r - core::f64::consts::SQRT_2).abs() < 1e-13);
    }
}
