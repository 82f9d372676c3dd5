//! The signal + Gaussian + residual decomposition of AMP iterates,
//!
//! ```text
//! x_{t+1} = α_{t+1} v⋆ + Σ_k β_t^k φ_k + ξ_t,
//! ```
//!
//! built alongside a run. `z_k` is the Gram-Schmidt residual of `η_k(x_k)`, `W_k` the noise
//! compressed to the orthogonal complement of `z_1 … z_{k−1}`, and
//!
//! ```text
//! ζ_k = (√2/2 − 1)(z_k^T W_k z_k) z_k + Σ_{i<k} g_i^k z_i,   g_i^k ~ N(0, 1/n),
//! φ_k = W_k z_k + ζ_k.
//! ```
//!
//! When the run starts from a nonzero `η_0(x_0)` (spectral initialization), its direction is
//! stored as a prefix basis vector `z_0`. The identity above then holds exactly for
//! `t ≥ 1`, and the leftover of `x_1` itself, `ξ_0 = x_1 − α_1 v⋆ − β_0^0 φ_0`, is
//! reported as a measurement.

use alloc::vec;
use alloc::vec::Vec;

use crate::amp::AmpTrajectory;
use crate::gaussian::w1_to_normal;
use crate::linalg::{self, axpy, dot, norm, SymMatrix};
use crate::model::SpikedModel;
use crate::rng::{self, tag};
use crate::{Error, Result};

/// Residual norm below which a new direction is considered to lie in the current span.
pub const DEGENERATE_TOL: f64 = 1e-12;
/// Largest admissible component of `ξ_t` outside the basis span, relative to `‖x_{t+1}‖`.
pub const SPAN_TOL: f64 = 1e-8;

/// How `W_k z_k` is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionMode {
    /// Keep `W_k` as a dense matrix and update it by rank-one congruences.
    Dense,
    /// Use `W_k z_k = (I − U U^T) W z_k` without storing `W_k`.
    Lazy,
}

impl ProjectionMode {
    /// Dense up to `n = 4000`, lazy beyond.
    pub fn for_dimension(n: usize) -> Self {
        if n > 4000 {
            ProjectionMode::Lazy
        } else {
            ProjectionMode::Dense
        }
    }
}

/// The quantities attached to one recorded iteration `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub t: usize,
    /// `α_{t+1} = λ v⋆^T η_t(x_t)`
    pub alpha: f64,
    /// `β_t^k = ⟨η_t(x_t), z_k⟩` over the whole basis (prefix included)
    pub beta: Vec<f64>,
    /// `ξ_t = x_{t+1} − α_{t+1} v⋆ − Σ β_t^k φ_k`
    pub xi: Vec<f64>,
    pub xi_norm: f64,
    /// Relative error of `x_{t+1}` rebuilt with `ξ_t` taken from its in-span expansion.
    pub recon_err: f64,
    /// Norm of the part of `ξ_t` orthogonal to the basis.
    pub outside_span: f64,
}

/// Norms and coefficients of the `δ_t` family at iteration `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualDiagnostics {
    pub t: usize,
    /// `‖δ_t‖`, `δ_t = η_t(x_t) − η_t(v_t)`
    pub delta_norm: f64,
    /// `⟨δ'_t⟩`
    pub delta_prime_avg: f64,
    /// `μ_t^k = ⟨ξ_t, z_k⟩ / ‖ξ_t‖` (empty when `ξ_t = 0`)
    pub mu: Vec<f64>,
    /// `Δ_t`
    pub big_delta: f64,
    /// `⟨Σ μ^k φ_k, δ_t⟩ − ⟨δ'_t⟩ Σ μ^k β_{t−1}^k + Δ_t`
    pub xi_norm_leading: f64,
    pub xi_norm: f64,
    /// `‖ξ_{t−1}‖` (`ξ_0` for a prefixed run, 0 otherwise at `t = 1`)
    pub xi_prev_norm: f64,
}

/// Summary statistics of the synthesized Gaussians.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianityReport {
    /// `max_{j≠k} |⟨φ_j, φ_k⟩|`
    pub max_phi_corr: f64,
    /// `‖φ_k‖² / n` for each `k`
    pub phi_var: Vec<f64>,
    /// W1 between the coordinates of `φ_k` and `N(0, 1/n)`
    pub phi_w1: Vec<f64>,
    /// W1 of `Σ β_t^k φ_k / ‖β_t‖` for the last recorded `t`
    pub w1_mixed: f64,
}

/// Basis, projected matrices, synthesized Gaussians and per-iteration coefficients.
#[derive(Debug, Clone)]
pub struct DecompositionLedger<'a> {
    noise: &'a SymMatrix,
    mode: ProjectionMode,
    pub aux_seed: u64,
    /// Number of prefix basis vectors (0 or 1).
    pub offset: usize,
    pub basis: Vec<Vec<f64>>,
    projected: Option<SymMatrix>,
    projected_upto: usize,
    /// `W_k z_k`
    wz: Vec<Vec<f64>>,
    /// `z_k^T W_k z_k`
    wzz: Vec<f64>,
    pub zetas: Vec<Vec<f64>>,
    pub phis: Vec<Vec<f64>>,
    pub records: Vec<IterationRecord>,
    /// `‖ξ_0‖` of a prefixed run
    pub xi0_norm: Option<f64>,
    /// `α_1 = λ v⋆^T η_0(x_0)`
    pub alpha1: f64,
}

impl<'a> DecompositionLedger<'a> {
    pub fn new(noise: &'a SymMatrix, aux_seed: u64, mode: ProjectionMode) -> Self {
        DecompositionLedger {
            noise,
            mode,
            aux_seed,
            offset: 0,
            basis: Vec::new(),
            projected: None,
            projected_upto: 0,
            wz: Vec::new(),
            wzz: Vec::new(),
            zetas: Vec::new(),
            phis: Vec::new(),
            records: Vec::new(),
            xi0_norm: None,
            alpha1: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.noise.n()
    }

    pub fn mode(&self) -> ProjectionMode {
        self.mode
    }

    /// Current dense `W_k` (only in [`ProjectionMode::Dense`] after the first projection).
    pub fn projected(&self) -> Option<&SymMatrix> {
        self.projected.as_ref()
    }

    /// Appends the normalized component of `eta` orthogonal to the basis.
    /// Two classical Gram-Schmidt passes are always run.
    pub fn extend_basis(&mut self, eta: &[f64]) -> Result<()> {
        linalg::check_len(self.n(), eta.len())?;
        let mut r = eta.to_vec();
        for _ in 0..2 {
            for z in &self.basis {
                let c = dot(z, &r);
                axpy(-c, z, &mut r);
            }
        }
        let rn = norm(&r);
        if !(rn > DEGENERATE_TOL * f64::max(1.0, norm(eta))) {
            return Err(Error::BasisDegenerate {
                index: self.basis.len(),
                residual: rn,
            });
        }
        for v in &mut r {
            *v /= rn;
        }
        self.basis.push(r);
        Ok(())
    }

    /// Advances `W_k → (I − z_k z_k^T) W_k (I − z_k z_k^T)` by one pending basis vector.
    pub fn project_w(&mut self) -> Result<()> {
        if self.projected_upto >= self.basis.len() {
            return Err(Error::InvalidParameter("no basis vector awaiting projection"));
        }
        if self.mode == ProjectionMode::Dense {
            let m = self.projected.get_or_insert_with(|| self.noise.clone());
            m.project_out(&self.basis[self.projected_upto])?;
        }
        self.projected_upto += 1;
        Ok(())
    }

    /// `W_k z` for the flat index `k` (requires all earlier vectors projected).
    fn w_k_apply(&self, k: usize, z: &[f64]) -> Result<Vec<f64>> {
        match self.mode {
            ProjectionMode::Dense => match &self.projected {
                Some(m) => m.matvec(z),
                None => self.noise.matvec(z),
            },
            ProjectionMode::Lazy => {
                let mut y = self.noise.matvec(z)?;
                for _ in 0..2 {
                    for zj in &self.basis[..k] {
                        let c = dot(zj, &y);
                        axpy(-c, zj, &mut y);
                    }
                }
                Ok(y)
            }
        }
    }

    /// Forms `ζ_k` and `φ_k` for the flat basis index `k`, drawing `g_i^k` from the
    /// ledger's auxiliary stream.
    pub fn synthesize_phi(&mut self, k: usize) -> Result<&[f64]> {
        if k != self.phis.len() || k >= self.basis.len() {
            return Err(Error::InvalidParameter("phi must be synthesized in basis order"));
        }
        if self.projected_upto != k {
            return Err(Error::InvalidParameter("W_k is not projected up to k"));
        }
        let n = self.n();
        let z = &self.basis[k];
        let w = self.w_k_apply(k, z)?;
        let c = dot(z, &w);

        let mut zeta = linalg::scaled((core::f64::consts::FRAC_1_SQRT_2 - 1.0) * c, z);
        let mut g = rng::stream(rng::derive_seed(self.aux_seed, k as u64, tag::LEDGER));
        let sd = 1.0 / libm::sqrt(n as f64);
        for zi in &self.basis[..k] {
            axpy(sd * rng::normal(&mut g), zi, &mut zeta);
        }
        let mut phi = w.clone();
        axpy(1.0, &zeta, &mut phi);

        self.wz.push(w);
        self.wzz.push(c);
        self.zetas.push(zeta);
        self.phis.push(phi);
        Ok(&self.phis[k])
    }

    /// Extends the basis by `eta`, brings `W_k` up to date and synthesizes `φ_k`.
    pub fn push(&mut self, eta: &[f64]) -> Result<()> {
        self.extend_basis(eta)?;
        while self.projected_upto + 1 < self.basis.len() {
            self.project_w()?;
        }
        let k = self.basis.len() - 1;
        self.synthesize_phi(k)?;
        Ok(())
    }

    /// Registers `η_0(x_0)` as the prefix vector `z_0` and measures `ξ_0`.
    pub fn add_prefix(&mut self, model: &SpikedModel, traj: &AmpTrajectory) -> Result<()> {
        if !self.basis.is_empty() {
            return Err(Error::InvalidParameter("prefix must come first"));
        }
        let eta0 = &traj.eta0_of_x0;
        self.push(eta0)?;
        self.offset = 1;
        let alpha1 = model.lambda * dot(&model.v_star, eta0);
        let beta00 = dot(eta0, &self.basis[0]);
        let mut xi0 = traj.x(1).to_vec();
        axpy(-alpha1, &model.v_star, &mut xi0);
        axpy(-beta00, &self.phis[0], &mut xi0);
        self.xi0_norm = Some(norm(&xi0));
        self.alpha1 = alpha1;
        Ok(())
    }

    /// Adds iteration `t ≥ 1`: extends the basis by `η_t(x_t)` if needed, computes
    /// `α_{t+1}`, `β_t`, `ξ_t`, and checks the decomposition.
    pub fn record_iteration(&mut self, model: &SpikedModel, traj: &AmpTrajectory, t: usize) -> Result<&IterationRecord> {
        if t == 0 || t != self.records.len() + 1 {
            return Err(Error::InvalidParameter("iterations must be recorded in order from t = 1"));
        }
        if t + 1 > traj.len() {
            return Err(Error::InvalidParameter("trajectory does not contain x_{t+1}"));
        }
        if self.records.is_empty() && self.offset == 0 {
            self.alpha1 = model.lambda * dot(&model.v_star, &traj.eta0_of_x0);
        }
        let eta = traj.eta(t);
        if self.basis.len() < self.offset + t {
            self.push(eta)?;
        }
        let x_next = traj.x(t + 1);
        let kmax = self.basis.len();

        let alpha = model.lambda * dot(&model.v_star, eta);
        let beta: Vec<f64> = self.basis.iter().map(|z| dot(eta, z)).collect();

        let mut xi = x_next.to_vec();
        axpy(-alpha, &model.v_star, &mut xi);
        for (b, phi) in beta.iter().zip(&self.phis) {
            axpy(-b, phi, &mut xi);
        }

        // The same residual expanded in the basis (exact algebra, no x_{t+1} involved):
        // ξ_t = Σ_{j<K} z_j [⟨W_j z_j, η_t⟩ − β_t^j z_j^T W_j z_j − c_t β_{t−1}^j] − Σ_k β_t^k ζ_k
        let c_t = traj.onsager[t - 1];
        let prev: Vec<f64> = self.basis.iter().map(|z| dot(traj.eta(t - 1), z)).collect();
        let mut xi_span = vec![0.0; self.n()];
        for j in 0..kmax - 1 {
            let coef = dot(&self.wz[j], eta) - beta[j] * self.wzz[j] - c_t * prev[j];
            axpy(coef, &self.basis[j], &mut xi_span);
        }
        for (b, zeta) in beta.iter().zip(&self.zetas) {
            axpy(-b, zeta, &mut xi_span);
        }

        let x_norm = f64::max(norm(x_next), f64::MIN_POSITIVE);
        let mut rebuilt = linalg::scaled(alpha, &model.v_star);
        for (b, phi) in beta.iter().zip(&self.phis) {
            axpy(*b, phi, &mut rebuilt);
        }
        axpy(1.0, &xi_span, &mut rebuilt);
        let recon_err = norm(&linalg::sub(x_next, &rebuilt)) / x_norm;

        let mut outside = xi.clone();
        for _ in 0..2 {
            for z in &self.basis {
                let c = dot(z, &outside);
                axpy(-c, z, &mut outside);
            }
        }
        let outside_span = norm(&outside);
        if outside_span > SPAN_TOL * x_norm {
            return Err(Error::LedgerInconsistency { t, outside: outside_span });
        }

        let xi_norm = norm(&xi);
        self.records.push(IterationRecord {
            t,
            alpha,
            beta,
            xi,
            xi_norm,
            recon_err,
            outside_span,
        });
        Ok(self.records.last().expect("just pushed"))
    }

    pub fn record(&self, t: usize) -> Option<&IterationRecord> {
        t.checked_sub(1).and_then(|i| self.records.get(i))
    }

    /// `α_t`, with `α_1 = λ v⋆^T η_0(x_0)`.
    pub fn alpha(&self, t: usize) -> Option<f64> {
        if t == 1 {
            Some(self.alpha1)
        } else {
            self.record(t - 1).map(|r| r.alpha)
        }
    }

    /// `‖ξ_t‖` for recorded `t` (and `ξ_0` of a prefixed run).
    pub fn xi_norm(&self, t: usize) -> Option<f64> {
        if t == 0 {
            return Some(self.xi0_norm.unwrap_or(0.0));
        }
        self.record(t).map(|r| r.xi_norm)
    }

    /// `v_t = α_t v⋆ + Σ_k β_{t−1}^k φ_k` (the prefix term `β_0^0 φ_0` included when present).
    pub fn v_t(&self, model: &SpikedModel, traj: &AmpTrajectory, t: usize) -> Result<Vec<f64>> {
        let alpha = self.alpha(t).ok_or(Error::InvalidParameter("alpha_t not recorded"))?;
        let mut v = linalg::scaled(alpha, &model.v_star);
        if t >= 2 {
            let r = self.record(t - 1).ok_or(Error::InvalidParameter("t − 1 not recorded"))?;
            for (b, phi) in r.beta.iter().zip(&self.phis) {
                axpy(*b, phi, &mut v);
            }
        } else if self.offset > 0 {
            let b = dot(&traj.eta0_of_x0, &self.basis[0]);
            axpy(b, &self.phis[0], &mut v);
        }
        Ok(v)
    }

    /// `δ_t`, `⟨δ'_t⟩`, `μ_t`, `Δ_t` and the leading-order prediction of `‖ξ_t‖`.
    pub fn residual_diagnostics(
        &self,
        model: &SpikedModel,
        traj: &AmpTrajectory,
        t: usize,
    ) -> Result<ResidualDiagnostics> {
        let rec = self.record(t).ok_or(Error::InvalidParameter("t not recorded"))?;
        let state = traj.states[t - 1];
        let x_t = traj.x(t);
        let v_t = self.v_t(model, traj, t)?;

        let eta_v = state.apply(&v_t);
        let delta = linalg::sub(traj.eta(t), &eta_v);
        let dprime_v = state.derivative_avg(&v_t);
        let delta_prime_avg = state.derivative_avg(x_t) - dprime_v;

        let mu: Vec<f64> = if rec.xi_norm > 0.0 {
            self.basis.iter().map(|z| dot(&rec.xi, z) / rec.xi_norm).collect()
        } else {
            Vec::new()
        };
        let prev_beta: Vec<f64> = if t >= 2 {
            self.record(t - 1).map(|r| r.beta.clone()).unwrap_or_default()
        } else if self.offset > 0 {
            vec![dot(&traj.eta0_of_x0, &self.basis[0])]
        } else {
            Vec::new()
        };

        let mut mixed = vec![0.0; self.n()];
        let mut mu_beta = 0.0;
        let mut big_delta = 0.0;
        for (k, b) in prev_beta.iter().enumerate() {
            let m = mu.get(k).copied().unwrap_or(0.0);
            axpy(m, &self.phis[k], &mut mixed);
            mu_beta += m * b;
            big_delta += m * (dot(&self.phis[k], &eta_v) - dprime_v * b);
        }
        let xi_norm_leading = dot(&mixed, &delta) - delta_prime_avg * mu_beta + big_delta;

        Ok(ResidualDiagnostics {
            t,
            delta_norm: norm(&delta),
            delta_prime_avg,
            mu,
            big_delta,
            xi_norm_leading,
            xi_norm: rec.xi_norm,
            xi_prev_norm: self.xi_norm(t - 1).unwrap_or(0.0),
        })
    }

    /// Pairwise correlations, variances and W1 distances of the `φ_k`, plus the W1 of
    /// the normalized mixture `Σ β_t^k φ_k / ‖β_t‖` at the last recorded `t`.
    pub fn gaussianity_report(&self) -> GaussianityReport {
        let n = self.n() as f64;
        let sd = 1.0 / libm::sqrt(n);
        let mut max_corr: f64 = 0.0;
        for j in 0..self.phis.len() {
            for k in 0..j {
                max_corr = max_corr.max(libm::fabs(dot(&self.phis[j], &self.phis[k])));
            }
        }
        let phi_var = self.phis.iter().map(|p| dot(p, p) / n).collect();
        let phi_w1 = self.phis.iter().map(|p| w1_to_normal(p, sd)).collect();
        let w1_mixed = match self.records.last() {
            Some(r) => {
                let bn = norm(&r.beta);
                let mut mix = vec![0.0; self.n()];
                for (b, phi) in r.beta.iter().zip(&self.phis) {
                    axpy(b / bn, phi, &mut mix);
                }
                w1_to_normal(&mix, sd)
            }
            None => f64::NAN,
        };
        GaussianityReport {
            max_phi_corr: max_corr,
            phi_var,
            phi_w1,
            w1_mixed,
        }
    }
}

/// Builds the ledger for every `t = 1 … T − 1` of a run. A nonzero `η_0(x_0)` becomes the
/// prefix vector.
pub fn decompose<'a>(
    model: &'a SpikedModel,
    traj: &AmpTrajectory,
    aux_seed: u64,
    mode: ProjectionMode,
) -> Result<DecompositionLedger<'a>> {
    let mut ledger = DecompositionLedger::new(&model.noise, aux_seed, mode);
    if traj.eta0_of_x0.iter().any(|v| *v != 0.0) {
        ledger.add_prefix(model, traj)?;
    }
    for t in 1..traj.len() {
        ledger.record_iteration(model, traj, t)?;
    }
    Ok(ledger)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amp::{run_amp, DenoiserPolicy};
    use crate::model::{make_signal, make_spiked, sample_wigner, SignalSpec};

    #[test]
    fn first_vector_is_normalized() {
        let w = SymMatrix::zeros(2);
        let mut l = DecompositionLedger::new(&w, 0, ProjectionMode::Dense);
        l.extend_basis(&[2.0, 0.0]).unwrap();
        assert_eq!(l.basis[0], [1.0, 0.0]);
    }

    #[test]
    fn vector_in_span_is_degenerate() {
        let w = SymMatrix::zeros(3);
        let mut l = DecompositionLedger::new(&w, 0, ProjectionMode::Dense);
        l.extend_basis(&[1.0, 1.0, 0.0]).unwrap();
        assert!(matches!(
            l.extend_basis(&[-2.0, -2.0, 0.0]),
            Err(Error::BasisDegenerate { index: 1, .. })
        ));
    }

    #[test]
    fn projection_by_e1_clears_first_row() {
        let w = sample_wigner(4, 3).unwrap();
        let mut l = DecompositionLedger::new(&w, 0, ProjectionMode::Dense);
        l.extend_basis(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        l.project_w().unwrap();
        let p = l.projected().unwrap();
        for j in 0..4 {
            assert_eq!(p.get(0, j), 0.0);
            assert_eq!(p.get(j, 0), 0.0);
        }
    }

    #[test]
    fn zeta_is_in_span_and_phi_is_wz_plus_zeta() {
        let w = sample_wigner(30, 1).unwrap();
        let mut l = DecompositionLedger::new(&w, 5, ProjectionMode::Dense);
        for s in 0..3u64 {
            let e = rng::normal_vec(&mut rng::stream(s), 30, 1.0);
            l.push(&e).unwrap();
        }
        for k in 0..3 {
            let mut r = l.zetas[k].clone();
            for z in &l.basis[..=k] {
                let c = dot(z, &r);
                axpy(-c, z, &mut r);
            }
            assert!(norm(&r) < 1e-12);
            let diff = linalg::sub(&linalg::sub(&l.phis[k], &l.wz[k]), &l.zetas[k]);
            assert!(norm(&diff) < 1e-15);
        }
    }

    #[test]
    fn first_residual_is_minus_beta_zeta() {
        let n = 60;
        let v = make_signal(&SignalSpec::z2(n, 2)).unwrap();
        let model = make_spiked(1.5, v, sample_wigner(n, 3).unwrap()).unwrap();
        let x1 = rng::normal_vec(&mut rng::stream(4), n, 1.0);
        let traj = run_amp(&model, DenoiserPolicy::TanhZ2, x1, vec![0.0; n], 4).unwrap();
        let l = decompose(&model, &traj, 9, ProjectionMode::Dense).unwrap();
        let r = &l.records[0];
        let expect = libm::fabs(r.beta[0]) * norm(&l.zetas[0]);
        assert!((r.xi_norm - expect).abs() < 1e-12);
    }

    #[test]
    fn zero_spike_gives_zero_alpha() {
        let n = 40;
        let v = make_signal(&SignalSpec::z2(n, 2)).unwrap();
        let model = make_spiked(0.0, v, sample_wigner(n, 3).unwrap()).unwrap();
        let x1 = rng::normal_vec(&mut rng::stream(4), n, 1.0);
        let traj = run_amp(&model, DenoiserPolicy::Identity, x1, vec![0.0; n], 5).unwrap();
        let l = decompose(&model, &traj, 9, ProjectionMode::Dense).unwrap();
        assert!(l.records.iter().all(|r| r.alpha == 0.0));
    }
}
