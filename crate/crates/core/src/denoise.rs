//! Separable denoisers `η_t` and their data-driven parameters.
//!
//! Both nonlinear families are rescaled so that the denoised fitting iterate has unit
//! ℓ2 norm:
//!
//! * tanh: `η(x) = γ tanh(π x)` with `π = √(n (‖x_t‖² − 1))` and `γ = 1/‖tanh(π x_t)‖`;
//! * soft threshold: `η(x) = γ sign(x) (|x| − τ)_+` with `γ = 1/‖ST_τ(x_t)‖`.
//!
//! At the two kinks of the soft threshold the derivative is taken to be 0.

use alloc::vec::Vec;

use crate::{Error, Result};

/// Lower clamp on `‖x_t‖² − 1` under the square root in `π_t`.
pub const CLAMP_EPS: f64 = 1e-12;

/// Default multiplier in the soft-threshold level `τ = c_τ √(log n / n)`.
pub const DEFAULT_C_TAU: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Identity,
    TanhZ2,
    SoftThreshold,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenoiserState {
    pub family: Family,
    /// tanh scale `π_t` (unused otherwise)
    pub pi: f64,
    /// normalizer `γ_t`
    pub gamma: f64,
    /// threshold `τ_t` (unused otherwise)
    pub tau: f64,
}

/// `sign(x) (|x| − τ)_+`
#[inline]
pub fn soft_threshold(x: f64, tau: f64) -> f64 {
    if x > tau {
        x - tau
    } else if x < -tau {
        x + tau
    } else {
        0.0
    }
}

pub fn soft_threshold_vec(x: &[f64], tau: f64) -> Vec<f64> {
    x.iter().map(|v| soft_threshold(*v, tau)).collect()
}

/// `c_τ √(log n / n)`
pub fn default_threshold(n: usize, c_tau: f64) -> f64 {
    let n = n as f64;
    c_tau * libm::sqrt(libm::log(n) / n)
}

impl DenoiserState {
    pub const IDENTITY: DenoiserState = DenoiserState {
        family: Family::Identity,
        pi: 0.0,
        gamma: 1.0,
        tau: 0.0,
    };

    /// Fits `γ tanh(π ·)` to the iterate `x_t`; `n` is the noise dimension (entries of
    /// `W` have variance `1/n`).
    pub fn fit_tanh(x_t: &[f64], n: usize) -> Result<Self> {
        let sq: f64 = x_t.iter().map(|v| v * v).sum();
        if !sq.is_finite() {
            return Err(Error::DegenerateIterate("iterate is not finite"));
        }
        let pi = libm::sqrt(n as f64 * f64::max(sq - 1.0, CLAMP_EPS));
        let t_norm = libm::sqrt(x_t.iter().map(|v| { let t = libm::tanh(pi * v); t * t }).sum::<f64>());
        if t_norm == 0.0 {
            return Err(Error::DegenerateIterate("tanh(π x_t) vanishes"));
        }
        Ok(DenoiserState {
            family: Family::TanhZ2,
            pi,
            gamma: 1.0 / t_norm,
            tau: 0.0,
        })
    }

    /// Fits `γ ST_τ(·)` to the iterate `x_t`.
    pub fn fit_soft_threshold(x_t: &[f64], tau: f64) -> Result<Self> {
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter("threshold must be finite and nonnegative"));
        }
        let st_norm = libm::sqrt(
            x_t.iter()
                .map(|v| { let s = soft_threshold(*v, tau); s * s })
                .sum::<f64>(),
        );
        if st_norm == 0.0 {
            return Err(Error::DegenerateIterate(
                "every entry is below the threshold",
            ));
        }
        if !st_norm.is_finite() {
            return Err(Error::DegenerateIterate("iterate is not finite"));
        }
        Ok(DenoiserState {
            family: Family::SoftThreshold,
            pi: 0.0,
            gamma: 1.0 / st_norm,
            tau,
        })
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self.family {
            Family::Identity => x,
            Family::TanhZ2 => self.gamma * libm::tanh(self.pi * x),
            Family::SoftThreshold => self.gamma * soft_threshold(x, self.tau),
        }
    }

    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        match self.family {
            Family::Identity => 1.0,
            Family::TanhZ2 => {
                let t = libm::tanh(self.pi * x);
                self.gamma * self.pi * (1.0 - t * t)
            }
            Family::SoftThreshold => {
                if libm::fabs(x) > self.tau {
                    self.gamma
                } else {
                    0.0
                }
            }
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| self.eval(*v)).collect()
    }

    /// `⟨η'(x)⟩ = (1/len) Σ η'(x_i)`
    pub fn derivative_avg(&self, x: &[f64]) -> f64 {
        if x.is_empty() {
            return 0.0;
        }
        x.iter().map(|v| self.derivative(*v)).sum::<f64>() / x.len() as f64
    }

    /// Entrywise Lipschitz constant of `η`.
    pub fn lipschitz(&self) -> f64 {
        match self.family {
            Family::Identity => 1.0,
            Family::TanhZ2 => self.gamma * self.pi,
            Family::SoftThreshold => self.gamma,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm;

    fn st(gamma: f64, tau: f64) -> DenoiserState {
        DenoiserState {
            family: Family::SoftThreshold,
            pi: 0.0,
            gamma,
            tau,
        }
    }

    fn tanh_state(pi: f64, gamma: f64) -> DenoiserState {
        DenoiserState {
            family: Family::TanhZ2,
            pi,
            gamma,
            tau: 0.0,
        }
    }

    #[test]
    fn fit_tanh_direct_formula() {
        // ‖x‖² = 2 with n = 100 gives π = √(100 · 1) = 10.
        let x = [1.0, 1.0, 0.0];
        let s = DenoiserState::fit_tanh(&x, 100).unwrap();
        assert!((s.pi - 10.0).abs() < 1e-12);
        assert!((norm(&s.apply(&x)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_tanh_clamps_at_unit_norm() {
        let x = [0.6, 0.8];
        let s = DenoiserState::fit_tanh(&x, 50).unwrap();
        assert!((s.pi - libm::sqrt(50.0 * CLAMP_EPS)).abs() < 1e-18);
    }

    #[test]
    fn fit_tanh_hand_evaluation() {
        // x = (1, 1), n = 2: π = √2 and γ = 1/(√2 tanh √2).
        let s = DenoiserState::fit_tanh(&[1.0, 1.0], 2).unwrap();
        let r2 = core::f64::consts::SQRT_2;
        assert!((s.pi - r2).abs() < 1e-15);
        assert!((s.gamma - 1.0 / (r2 * libm::tanh(r2))).abs() < 1e-15);
    }

    #[test]
    fn fit_tanh_zero_iterate_is_degenerate() {
        assert!(matches!(
            DenoiserState::fit_tanh(&[0.0, 0.0], 2),
            Err(Error::DegenerateIterate(_))
        ));
    }

    #[test]
    fn soft_threshold_fits() {
        let s = DenoiserState::fit_soft_threshold(&[2.0, 0.0, 0.0], 1.0).unwrap();
        assert_eq!(s.gamma, 1.0);
        assert_eq!(s.apply(&[2.0, 0.0, 0.0]), [1.0, 0.0, 0.0]);

        let s = DenoiserState::fit_soft_threshold(&[2.0, -2.0], 1.0).unwrap();
        let h = core::f64::consts::FRAC_1_SQRT_2;
        assert!((s.gamma - h).abs() < 1e-15);
        let y = s.apply(&[2.0, -2.0]);
        assert!((y[0] - h).abs() < 1e-15 && (y[1] + h).abs() < 1e-15);

        assert!(matches!(
            DenoiserState::fit_soft_threshold(&[0.5, 0.4], 1.0),
            Err(Error::DegenerateIterate(_))
        ));
    }

    #[test]
    fn apply_examples() {
        let x = [0.3, -1.7];
        assert_eq!(DenoiserState::IDENTITY.apply(&x), x);
        assert_eq!(tanh_state(1.0, 1.0).apply(&[0.0]), [0.0]);
        assert_eq!(st(1.0, 1.0).apply(&[1.5, -0.2, -3.0]), [0.5, 0.0, -2.0]);
    }

    #[test]
    fn derivative_avg_examples() {
        assert_eq!(DenoiserState::IDENTITY.derivative_avg(&[1.0; 5]), 1.0);
        // The entry sitting exactly at the threshold contributes 0.
        assert_eq!(st(1.0, 1.0).derivative_avg(&[2.0, 0.5, -3.0, 1.0]), 0.5);
        assert_eq!(tanh_state(1.0, 1.0).derivative_avg(&[0.0; 6]), 1.0);
    }

    #[test]
    fn default_threshold_formula() {
        let t = default_threshold(4000, 2.0);
        assert!((t - 2.0 * (4000f64.ln() / 4000.0).sqrt()).abs() < 1e-15);
    }
}
