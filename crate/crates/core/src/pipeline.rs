//! End-to-end runs: Z2 synchronization from a spectral start, and sparse PCA from an
//! informative, diagonal-maximization or sample-split start.

use alloc::vec;
use alloc::vec::Vec;

use crate::amp::{self, run_amp, run_amp_on, AmpHalt, AmpTrajectory, DenoiserPolicy, SpectralInit};
use crate::denoise::{default_threshold, soft_threshold_vec};
use crate::linalg::{self, dot, norm};
use crate::model::SpikedModel;
use crate::rng;
use crate::sparse_init::{self, MatrixAccess, SplitOutcome, SplitParams};
use crate::{Error, Result};

/// Z2 synchronization: `x_1 = λ a_s M^s ṽ` and `η_0(x_0) = x_1 / λ`.
#[derive(Debug, Clone)]
pub struct Z2Run {
    pub spectral: SpectralInit,
    pub traj: AmpTrajectory,
}

fn halt_to_error(h: AmpHalt) -> Error {
    h.error
}

/// Spectral start followed by `t_max` tanh-AMP iterations. `s = None` uses
/// [`amp::default_power_steps`].
pub fn z2_spectral(model: &SpikedModel, s: Option<usize>, spectral_seed: u64, t_max: usize) -> Result<Z2Run> {
    let n = model.n();
    let s = s.unwrap_or_else(|| amp::default_power_steps(n, model.lambda));
    let spectral = amp::spectral_init(&model.observed, s, spectral_seed)?;
    let x1 = linalg::scaled(model.lambda, &spectral.x1);
    let eta0 = spectral.x1.clone();
    let traj = run_amp(model, DenoiserPolicy::TanhZ2, x1, eta0, t_max).map_err(halt_to_error)?;
    Ok(Z2Run { spectral, traj })
}

/// `x_1 = α_1 v⋆ + g`, `g ~ N(0, I/n)` from its own stream, with `η_0(x_0) = 0`.
pub fn informative_start(v_star: &[f64], alpha1: f64, seed: u64) -> Vec<f64> {
    let n = v_star.len();
    let mut x = rng::normal_vec(&mut rng::stream(seed), n, 1.0 / libm::sqrt(n as f64));
    linalg::axpy(alpha1, v_star, &mut x);
    x
}

/// Tanh-AMP from an initialization independent of `W`, with `α_1 = √(λ² − 1)` so the
/// first state matches `τ_1 = λ² − 1`.
pub fn z2_informative(model: &SpikedModel, init_seed: u64, t_max: usize) -> Result<AmpTrajectory> {
    let alpha1 = libm::sqrt(f64::max(model.lambda * model.lambda - 1.0, 0.0));
    let x1 = informative_start(&model.v_star, alpha1, init_seed);
    run_amp(model, DenoiserPolicy::TanhZ2, x1, vec![0.0; model.n()], t_max).map_err(halt_to_error)
}

/// Soft-threshold AMP with `τ = c_τ √(log n / n)` from `x_1 = v⋆ + N(0, I/n)`.
pub fn sparse_informative(model: &SpikedModel, c_tau: f64, init_seed: u64, t_max: usize) -> Result<AmpTrajectory> {
    let n = model.n();
    let tau = default_threshold(n, c_tau);
    let x1 = informative_start(&model.v_star, 1.0, init_seed);
    run_amp(model, DenoiserPolicy::SoftThreshold { tau }, x1, vec![0.0; n], t_max).map_err(halt_to_error)
}

/// Soft-threshold AMP from `x_1 = e_ŝ`, `ŝ = argmax |M_ii|`.
pub fn sparse_diag_max(model: &SpikedModel, c_tau: f64, t_max: usize) -> Result<(usize, AmpTrajectory)> {
    let n = model.n();
    let tau = default_threshold(n, c_tau);
    let (s, x1) = sparse_init::diag_max_init(&model.observed)?;
    let traj = run_amp(model, DenoiserPolicy::SoftThreshold { tau }, x1, vec![0.0; n], t_max)
        .map_err(halt_to_error)?;
    Ok((s, traj))
}

/// Sample-split start, then soft-threshold AMP on `M_{I^c, I^c}` (noise variance still
/// `1/n`).
#[derive(Debug, Clone)]
pub struct SplitRun {
    pub split: SplitOutcome,
    pub traj: AmpTrajectory,
}

pub fn sparse_split<A: MatrixAccess + ?Sized>(
    model: &SpikedModel,
    access: &A,
    params: &SplitParams,
    c_tau: f64,
    seed: u64,
    t_max: usize,
) -> Result<SplitRun> {
    let n = model.n();
    let split = sparse_init::sample_split_init(access, params, seed)?;
    let comp = &split.chosen_round().complement;
    let sub = model.observed.principal_submatrix(comp);
    let tau = default_threshold(n, c_tau);
    let x1 = split.x1().to_vec();
    let traj = run_amp_on(
        &sub,
        n,
        DenoiserPolicy::SoftThreshold { tau },
        x1,
        vec![0.0; comp.len()],
        t_max,
    )
    .map_err(halt_to_error)?;
    Ok(SplitRun { split, traj })
}

/// `‖(1/λ) ST_τ(x) − v⋆‖`
pub fn sparse_l2_error(x: &[f64], v_star: &[f64], tau: f64, lambda: f64) -> f64 {
    let est = linalg::scaled(1.0 / lambda, &soft_threshold_vec(x, tau));
    norm(&linalg::sub(&est, v_star))
}

/// `(λ v⋆^T η_t(x_t))` for `t = 1 … T`.
pub fn alpha_path(traj: &AmpTrajectory, v_star: &[f64], lambda: f64) -> Vec<f64> {
    traj.denoised.iter().map(|d| lambda * dot(v_star, d)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_signal, make_spiked, sample_wigner, SignalKind, SignalSpec};

    #[test]
    fn spectral_pipeline_conventions() {
        let n = 200;
        let v = make_signal(&SignalSpec::z2(n, 1)).unwrap();
        let model = make_spiked(2.0, v, sample_wigner(n, 2).unwrap()).unwrap();
        let run = z2_spectral(&model, Some(30), 3, 4).unwrap();
        assert!((norm(run.traj.x(1)) - 2.0).abs() < 1e-12);
        assert!((norm(run.traj.eta(0)) - 1.0).abs() < 1e-12);
        for d in &run.traj.denoised {
            assert!((norm(d) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn sparse_pipeline_runs() {
        let n = 300;
        let v = make_signal(&SignalSpec::sparse(SignalKind::SparseDirac, n, 5, 1)).unwrap();
        let model = make_spiked(3.0, v.clone(), sample_wigner(n, 2).unwrap()).unwrap();
        let traj = sparse_informative(&model, 2.0, 4, 6).unwrap();
        let tau = default_threshold(n, 2.0);
        assert!(sparse_l2_error(traj.x(6), &v, tau, 3.0) < 1.0);
    }
}
