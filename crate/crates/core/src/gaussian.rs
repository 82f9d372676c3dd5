//! Standard normal density and distribution function, closed-form soft-threshold
//! moments of a Gaussian, and the 1-Wasserstein distance to a centered normal.

use alloc::vec::Vec;

use crate::denoise::soft_threshold;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
#[inline]
pub fn pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * libm::exp(-0.5 * x * x)
}

/// Standard normal distribution function.
#[inline]
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * core::f64::consts::FRAC_1_SQRT_2)
}

/// Upper tail `1 − Φ(x)`, accurate far into the tail.
#[inline]
pub fn sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * core::f64::consts::FRAC_1_SQRT_2)
}

/// Moments of `ST_τ(X)` for `X = μ + σZ`, `Z ~ N(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StMoments {
    /// `E[ST_τ(X)]`
    pub mean: f64,
    /// `E[ST_τ(X)²]`
    pub second: f64,
    /// `P(|X| > τ)`
    pub active: f64,
    /// `E[Z² 1(|X| > τ)]`
    pub z2_active: f64,
}

/// Closed-form soft-threshold moments. With `a = (τ − μ)/σ` and `b = (−τ − μ)/σ` the
/// active set is `{Z > a} ∪ {Z < b}` and each piece is a truncated-normal moment.
pub fn st_moments(mu: f64, sigma: f64, tau: f64) -> StMoments {
    if sigma == 0.0 {
        let s = soft_threshold(mu, tau);
        let on = if libm::fabs(mu) > tau { 1.0 } else { 0.0 };
        return StMoments {
            mean: s,
            second: s * s,
            active: on,
            z2_active: on,
        };
    }
    let a = (tau - mu) / sigma;
    let b = (-tau - mu) / sigma;
    let (pa, qa) = (pdf(a), sf(a));
    let (pb, cb) = (pdf(b), cdf(b));

    // E[(X − τ) 1(Z > a)] and E[(X + τ) 1(Z < b)]
    let upper = sigma * pa + (mu - tau) * qa;
    let lower = -sigma * pb + (mu + tau) * cb;
    // E[(X − τ)² 1(Z > a)] = σ² E[(Z − a)² 1(Z > a)], and symmetrically below b.
    let upper2 = sigma * sigma * ((1.0 + a * a) * qa - a * pa);
    let lower2 = sigma * sigma * ((1.0 + b * b) * cb + b * pb);

    StMoments {
        mean: upper + lower,
        second: upper2 + lower2,
        active: qa + cb,
        z2_active: a * pa + qa + cb - b * pb,
    }
}

/// `∫_{−∞}^{x} Φ(s) ds`
#[inline]
fn cdf_integral(x: f64) -> f64 {
    x * cdf(x) + pdf(x)
}

/// `∫_x^{∞} (1 − Φ(s)) ds`
#[inline]
fn sf_integral(x: f64) -> f64 {
    pdf(x) - x * sf(x)
}

/// `Φ^{-1}(c)` restricted to `[lo, hi]`, by bisection.
fn cdf_crossing(c: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cdf(mid) < c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact 1-Wasserstein distance between the empirical distribution of `samples` and
/// `N(0, sd²)`, computed as `∫ |F_n(x) − Φ(x/sd)| dx` piecewise between order statistics.
pub fn w1_to_normal(samples: &[f64], sd: f64) -> f64 {
    let m = samples.len();
    if m == 0 {
        return f64::NAN;
    }
    let mut y: Vec<f64> = samples.iter().map(|x| x / sd).collect();
    y.sort_by(f64::total_cmp);

    let mut total = cdf_integral(y[0]) + sf_integral(y[m - 1]);
    for i in 1..m {
        let (a, b) = (y[i - 1], y[i]);
        if b <= a {
            continue;
        }
        let c = i as f64 / m as f64;
        let (fa, fb) = (cdf(a), cdf(b));
        // ∫_a^b (c − Φ) = c (b − a) − (G(b) − G(a)); its sign flips at most once.
        let signed = |lo: f64, hi: f64| c * (hi - lo) - (cdf_integral(hi) - cdf_integral(lo));
        total += if fb <= c {
            signed(a, b)
        } else if fa >= c {
            -signed(a, b)
        } else {
            let s = cdf_crossing(c, a, b);
            signed(a, s) - signed(s, b)
        };
    }
    sd * total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_values() {
        assert!((cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-15);
        assert!((sf(10.0) - 7.619_853_024_160_527e-24).abs() < 1e-36);
    }

    #[test]
    fn zero_threshold_moments_are_raw_moments() {
        let m = st_moments(0.7, 0.3, 0.0);
        assert!((m.mean - 0.7).abs() < 1e-14);
        assert!((m.second - (0.49 + 0.09)).abs() < 1e-14);
        assert!((m.active - 1.0).abs() < 1e-14);
        assert!((m.z2_active - 1.0).abs() < 1e-14);
    }

    #[test]
    fn centered_moments_are_odd_and_even() {
        let m = st_moments(0.0, 1.0, 0.5);
        assert!(m.mean.abs() < 1e-16);
        let p = st_moments(0.4, 1.0, 0.5);
        let q = st_moments(-0.4, 1.0, 0.5);
        assert!((p.mean + q.mean).abs() < 1e-15);
        assert!((p.second - q.second).abs() < 1e-15);
    }

    #[test]
    fn degenerate_sigma() {
        let m = st_moments(2.0, 0.0, 0.5);
        assert_eq!(m.mean, 1.5);
        assert_eq!(m.active, 1.0);
    }

    #[test]
    fn w1_of_a_point_mass() {
        // W1(δ_0, N(0,1)) = E|Z| = √(2/π)
        let w = w1_to_normal(&[0.0], 1.0);
        assert!((w - libm::sqrt(2.0 / core::f64::consts::PI)).abs() < 1e-12);
        let w = w1_to_normal(&[0.0], 3.0);
        assert!((w - 3.0 * libm::sqrt(2.0 / core::f64::consts::PI)).abs() < 1e-12);
    }

    #[test]
    fn w1_of_a_shifted_point_mass() {
        // W1(δ_c, N(0,1)) = E|Z − c| = 2φ(c) + c(2Φ(c) − 1)
        let c = 0.8;
        let exact = 2.0 * pdf(c) + c * (2.0 * cdf(c) - 1.0);
        assert!((w1_to_normal(&[c], 1.0) - exact).abs() < 1e-12);
    }

    #[test]
    fn w1_of_two_atoms() {
        // Two atoms at ±1: ∫|F − Φ| on the three pieces, evaluated independently.
        let g = |x: f64| x * cdf(x) + pdf(x);
        let left = g(-1.0);
        let mid = 2.0 * (g(0.0) - g(-1.0) - 0.5);
        let right = left;
        let exact = left + mid.abs() + right;
        assert!((w1_to_normal(&[1.0, -1.0], 1.0) - exact).abs() < 1e-12);
    }
}
