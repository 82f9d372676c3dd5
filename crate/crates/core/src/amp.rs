//! The AMP iteration and its spectral initialization.
//!
//! ```text
//! x_{t+1} = M η_t(x_t) − ⟨η'_t(x_t)⟩ η_{t−1}(x_{t−1}),   t ≥ 1
//! ```
//!
//! `η_0(x_0)` is supplied by the caller: `0` for an initialization independent of the
//! noise, `x_1 / λ` for a spectral start.

use alloc::vec::Vec;

use crate::denoise::{DenoiserState, Family};
use crate::linalg::{self, dot, norm, SymMatrix};
use crate::model::SpikedModel;
use crate::rng;
use crate::{Error, Result};

/// How `η_t` is fitted at every iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DenoiserPolicy {
    Identity,
    TanhZ2,
    SoftThreshold { tau: f64 },
}

impl DenoiserPolicy {
    pub fn family(&self) -> Family {
        match self {
            DenoiserPolicy::Identity => Family::Identity,
            DenoiserPolicy::TanhZ2 => Family::TanhZ2,
            DenoiserPolicy::SoftThreshold { .. } => Family::SoftThreshold,
        }
    }

    /// Fits the state for iterate `x_t`; `noise_dim` is the `n` of the `1/n` noise variance.
    pub fn fit(&self, x_t: &[f64], noise_dim: usize) -> Result<DenoiserState> {
        match *self {
            DenoiserPolicy::Identity => Ok(DenoiserState::IDENTITY),
            DenoiserPolicy::TanhZ2 => DenoiserState::fit_tanh(x_t, noise_dim),
            DenoiserPolicy::SoftThreshold { tau } => DenoiserState::fit_soft_threshold(x_t, tau),
        }
    }
}

/// A completed (or halted) AMP run. Index `i` holds iteration `t = i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmpTrajectory {
    /// `x_1, …, x_T`
    pub iterates: Vec<Vec<f64>>,
    /// `η_t(x_t)`
    pub denoised: Vec<Vec<f64>>,
    pub states: Vec<DenoiserState>,
    /// Onsager coefficient `b_t` actually used to form `x_{t+1}`.
    pub onsager: Vec<f64>,
    /// `η_0(x_0)`
    pub eta0_of_x0: Vec<f64>,
}

impl AmpTrajectory {
    pub fn len(&self) -> usize {
        self.iterates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterates.is_empty()
    }

    /// `η_{t}(x_{t})` for `t >= 0` (with `t = 0` the supplied `η_0(x_0)`).
    pub fn eta(&self, t: usize) -> &[f64] {
        if t == 0 {
            &self.eta0_of_x0
        } else {
            &self.denoised[t - 1]
        }
    }

    /// `x_t` for `t >= 1`.
    pub fn x(&self, t: usize) -> &[f64] {
        &self.iterates[t - 1]
    }
}

/// A run that stopped because `η_t` could not be fitted at iteration `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmpHalt {
    pub t: usize,
    pub error: Error,
    /// Everything computed before the failure (`x_1 … x_t`, `η` up to `t − 1`).
    pub partial: AmpTrajectory,
}

impl core::fmt::Display for AmpHalt {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "AMP halted at t = {}: {}", self.t, self.error)
    }
}

impl core::error::Error for AmpHalt {}

/// One AMP update `M η_t − b η_{t−1}`, exactly as written.
pub fn amp_step(m: &SymMatrix, eta_xt: &[f64], eta_prev: &[f64], onsager: f64) -> Result<Vec<f64>> {
    linalg::check_len(m.n(), eta_prev.len())?;
    let mut x = m.matvec(eta_xt)?;
    linalg::axpy(-onsager, eta_prev, &mut x);
    Ok(x)
}

/// Runs `t_max` AMP iterations on `model.observed`.
pub fn run_amp(
    model: &SpikedModel,
    policy: DenoiserPolicy,
    x1: Vec<f64>,
    eta0_of_x0: Vec<f64>,
    t_max: usize,
) -> core::result::Result<AmpTrajectory, AmpHalt> {
    run_amp_on(&model.observed, model.n(), policy, x1, eta0_of_x0, t_max)
}

/// Runs AMP on an arbitrary symmetric matrix whose noise entries have variance
/// `1/noise_dim`.
///
/// When `m` is a principal block of a larger `noise_dim × noise_dim` observation, the
/// Onsager coefficient is `(1/noise_dim) Σ_i η'(x_i)`, i.e. the block average rescaled by
/// `m.n() / noise_dim`; for a full matrix the two coincide.
pub fn run_amp_on(
    m: &SymMatrix,
    noise_dim: usize,
    policy: DenoiserPolicy,
    x1: Vec<f64>,
    eta0_of_x0: Vec<f64>,
    t_max: usize,
) -> core::result::Result<AmpTrajectory, AmpHalt> {
    let n = m.n();
    let mut traj = AmpTrajectory {
        iterates: Vec::with_capacity(t_max),
        denoised: Vec::with_capacity(t_max),
        states: Vec::with_capacity(t_max),
        onsager: Vec::with_capacity(t_max),
        eta0_of_x0,
    };
    let halt = |t: usize, error: Error, partial: AmpTrajectory| AmpHalt { t, error, partial };

    if t_max == 0 {
        return Err(halt(0, Error::InvalidParameter("T must be at least 1"), traj));
    }
    if let Err(e) = linalg::check_len(n, x1.len()).and(linalg::check_len(n, traj.eta0_of_x0.len())) {
        return Err(halt(0, e, traj));
    }
    let scale = n as f64 / noise_dim as f64;

    traj.iterates.push(x1);
    for t in 1..=t_max {
        let x_t = &traj.iterates[t - 1];
        let state = match policy.fit(x_t, noise_dim) {
            Ok(s) => s,
            Err(e) => return Err(halt(t, e, traj)),
        };
        let d = state.apply(x_t);
        let b = state.derivative_avg(x_t) * scale;
        traj.states.push(state);
        traj.denoised.push(d);
        traj.onsager.push(b);
        if t == t_max {
            break;
        }
        let next = match amp_step(m, &traj.denoised[t - 1], traj.eta(t - 1), b) {
            Ok(x) => x,
            Err(e) => return Err(halt(t, e, traj)),
        };
        traj.iterates.push(next);
    }
    Ok(traj)
}

/// Evaluation-only sign fix: returns `x` if `x^T v⋆ >= 0`, else `−x`.
pub fn sign_align(x: &[f64], v_star: &[f64]) -> Vec<f64> {
    if dot(x, v_star) >= 0.0 {
        x.to_vec()
    } else {
        x.iter().map(|v| -v).collect()
    }
}

/// Power-method estimate of the leading eigenvector and eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralInit {
    /// `a_s M^s ṽ` (unit norm)
    pub x1: Vec<f64>,
    pub s: usize,
    /// `1/‖M^s ṽ‖`
    pub a_s: f64,
    pub v_tilde: Vec<f64>,
    /// Rayleigh quotient after `s` further normalized power steps.
    pub lambda_max: f64,
    /// `(λ_max + √(λ_max² − 4))/2`, `None` when `λ_max < 2`.
    pub lambda_tilde: Option<f64>,
    /// Last normalized power iterate.
    pub vhat: Vec<f64>,
}

/// `(λ_max + √(λ_max² − 4))/2`, the spike strength whose BBP eigenvalue is `λ_max`.
pub fn lambda_tilde(lambda_max: f64) -> Option<f64> {
    (lambda_max >= 2.0).then(|| 0.5 * (lambda_max + libm::sqrt(lambda_max * lambda_max - 4.0)))
}

/// `⌈8 log n / (λ − 1)²⌉`, capped at `n/4` (and at least 1).
pub fn default_power_steps(n: usize, lambda: f64) -> usize {
    let cap = (n / 4).max(1);
    if lambda <= 1.0 {
        return cap;
    }
    let s = libm::ceil(8.0 * libm::log(n as f64) / ((lambda - 1.0) * (lambda - 1.0)));
    (s as usize).clamp(1, cap)
}

/// Normalized power steps from `start`; returns the last iterate, the product of
/// inverse norms, and the Rayleigh quotient of each iterate visited after the start.
pub fn power_iterate(m: &SymMatrix, start: &[f64], steps: usize) -> Result<(Vec<f64>, f64, Vec<f64>)> {
    let (mut u, _) = linalg::normalized(start).ok_or(Error::Domain("zero start vector"))?;
    let mut log_inv = 0.0;
    let mut rayleigh = Vec::with_capacity(steps);
    let mut mu = m.matvec(&u)?;
    for _ in 0..steps {
        let nrm = norm(&mu);
        if nrm == 0.0 {
            return Err(Error::Domain("power iterate vanished"));
        }
        log_inv -= libm::log(nrm);
        u = linalg::scaled(1.0 / nrm, &mu);
        mu = m.matvec(&u)?;
        rayleigh.push(dot(&u, &mu));
    }
    Ok((u, libm::exp(log_inv), rayleigh))
}

/// Spectral initialization: `x_1 = a_s M^s ṽ` with `ṽ` uniform on the sphere.
///
/// `a_s` is accumulated from the per-step inverse norms (the iterate is renormalized at
/// each step). The eigenvalue estimate continues for another `s` steps from `x_1`.
pub fn spectral_init(m: &SymMatrix, s: usize, seed: u64) -> Result<SpectralInit> {
    if s == 0 {
        return Err(Error::InvalidParameter("power steps must be at least 1"));
    }
    let n = m.n();
    let raw = rng::normal_vec(&mut rng::stream(seed), n, 1.0);
    let (v_tilde, _) = linalg::normalized(&raw).ok_or(Error::Domain("zero start vector"))?;
    let (x1, a_s, _) = power_iterate(m, &v_tilde, s)?;
    let (vhat, _, rq) = power_iterate(m, &x1, s)?;
    let lambda_max = *rq.last().expect("s >= 1");
    Ok(SpectralInit {
        x1,
        s,
        a_s,
        v_tilde,
        lambda_max,
        lambda_tilde: lambda_tilde(lambda_max),
        vhat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_spiked, sample_wigner};
    use alloc::vec;

    #[test]
    fn step_with_zero_previous_is_a_matvec() {
        let m = SymMatrix::from_upper(3, |i, j| (i + 2 * j) as f64);
        let e = [1.0, -1.0, 2.0];
        assert_eq!(amp_step(&m, &e, &[0.0; 3], 0.7).unwrap(), m.matvec(&e).unwrap());
    }

    #[test]
    fn step_cancellation() {
        let e1 = [1.0, 0.0, 0.0];
        let x = amp_step(&SymMatrix::identity(3), &e1, &e1, 1.0).unwrap();
        assert_eq!(x, [0.0; 3]);
    }

    #[test]
    fn step_dimension_mismatch() {
        let m = SymMatrix::identity(3);
        assert!(amp_step(&m, &[1.0; 2], &[0.0; 3], 0.0).is_err());
        assert!(amp_step(&m, &[1.0; 3], &[0.0; 2], 0.0).is_err());
    }

    #[test]
    fn identity_run_without_spike() {
        let w = sample_wigner(6, 3).unwrap();
        let model = make_spiked(0.0, linalg::unit_vector(6, 0), w.clone()).unwrap();
        let x1 = vec![0.5, -0.1, 0.2, 0.0, 1.0, 0.3];
        let traj = run_amp(&model, DenoiserPolicy::Identity, x1.clone(), vec![0.0; 6], 2).unwrap();
        assert_eq!(traj.len(), 2);
        assert_eq!(traj.iterates[1], w.matvec(&x1).unwrap());
        assert_eq!(traj.onsager, [1.0, 1.0]);
    }

    #[test]
    fn run_halts_on_degenerate_fit() {
        let w = sample_wigner(4, 1).unwrap();
        let model = make_spiked(0.0, linalg::unit_vector(4, 0), w).unwrap();
        let halt = run_amp(
            &model,
            DenoiserPolicy::SoftThreshold { tau: 10.0 },
            vec![0.1; 4],
            vec![0.0; 4],
            5,
        )
        .unwrap_err();
        assert_eq!(halt.t, 1);
        assert!(matches!(halt.error, Error::DegenerateIterate(_)));
        assert_eq!(halt.partial.iterates.len(), 1);
    }

    #[test]
    fn sign_align_examples() {
        let v = [0.6, 0.8];
        assert_eq!(sign_align(&[-0.6, -0.8], &v), v);
        assert_eq!(sign_align(&[0.8, -0.6], &v), [0.8, -0.6]);
    }

    #[test]
    fn spectral_on_diagonal_matrix() {
        let m = SymMatrix::diagonal(&[3.0, 1.0, 1.0]);
        let sp = spectral_init(&m, 50, 5).unwrap();
        assert!((sp.x1[0].abs() - 1.0).abs() < 1e-8);
        assert!((sp.lambda_max - 3.0).abs() < 1e-8);
        assert!((norm(&sp.x1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_x1_equals_scaled_power() {
        let m = SymMatrix::from_upper(5, |i, j| if i == j { 2.0 + i as f64 } else { 0.3 });
        let s = 7;
        let sp = spectral_init(&m, s, 9).unwrap();
        let mut v = sp.v_tilde.clone();
        for _ in 0..s {
            v = m.matvec(&v).unwrap();
        }
        for (a, b) in sp.x1.iter().zip(&v) {
            assert!((a - sp.a_s * b).abs() < 1e-10);
        }
    }

    #[test]
    fn lambda_tilde_closed_form() {
        assert_eq!(lambda_tilde(2.5), Some(2.0));
        assert_eq!(lambda_tilde(1.9), None);
    }

    #[test]
    fn default_steps() {
        assert_eq!(default_power_steps(2000, 1.5), 244);
        assert_eq!(default_power_steps(100, 1.01), 25);
        assert_eq!(default_power_steps(100, 0.8), 25);
    }
}
