//! Spiked Wigner instances `M = λ v⋆ v⋆^T + W`.
//!
//! The noise `W` is symmetric with independent entries on and above the diagonal:
//! `W_ij ~ N(0, 1/n)` for `i != j` and `W_ii ~ N(0, 2/n)`.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index::sample;

use crate::linalg::{self, norm, SymMatrix};
use crate::rng::{self, Rng};
use crate::{Error, Result};

/// Tolerance on `‖v⋆‖₂ = 1` accepted by [`SpikedModel::new`].
pub const UNIT_TOL: f64 = 1e-10;

/// Samples the Wigner noise matrix. Upper-triangle entries are drawn in row-major order.
pub fn sample_wigner(n: usize, seed: u64) -> Result<SymMatrix> {
    if n == 0 {
        return Err(Error::InvalidDimension(n));
    }
    let mut rng = rng::stream(seed);
    let off = libm::sqrt(1.0 / n as f64);
    let on = libm::sqrt(2.0 / n as f64);
    Ok(SymMatrix::from_upper(n, |i, j| {
        let sd = if i == j { on } else { off };
        sd * rng::normal(&mut rng)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalKind {
    /// Entries `±1/√n` with independent fair signs.
    Z2,
    /// `k` nonzeros of equal magnitude `1/√k` and random signs.
    SparseDirac,
    /// `k` nonzeros drawn `N(0, 1)`, then normalized.
    SparseGaussian,
    /// `k` nonzeros taken from `magnitudes` (with random signs), then normalized.
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    pub kind: SignalKind,
    pub n: usize,
    pub k: Option<usize>,
    pub magnitudes: Option<Vec<f64>>,
    pub seed: u64,
}

impl SignalSpec {
    pub fn z2(n: usize, seed: u64) -> Self {
        SignalSpec {
            kind: SignalKind::Z2,
            n,
            k: None,
            magnitudes: None,
            seed,
        }
    }

    pub fn sparse(kind: SignalKind, n: usize, k: usize, seed: u64) -> Self {
        SignalSpec {
            kind,
            n,
            k: Some(k),
            magnitudes: None,
            seed,
        }
    }
}

/// Draws a unit-norm planted signal.
///
/// Sparse kinds place their nonzeros on a uniformly random support of size `k`.
pub fn make_signal(spec: &SignalSpec) -> Result<Vec<f64>> {
    let n = spec.n;
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let mut rng = rng::stream(spec.seed);
    if spec.kind == SignalKind::Z2 {
        let a = 1.0 / libm::sqrt(n as f64);
        return Ok((0..n)
            .map(|_| if rng.random_bool(0.5) { a } else { -a })
            .collect());
    }

    let k = match (spec.kind, &spec.magnitudes, spec.k) {
        (SignalKind::Custom, Some(m), None) => m.len(),
        (_, _, Some(k)) => k,
        _ => return Err(Error::InvalidSpec("sparse signal needs k")),
    };
    if k == 0 {
        return Err(Error::InvalidSpec("k must be positive"));
    }
    if k > n {
        return Err(Error::InvalidSpec("k exceeds n"));
    }
    let mut support = sample(&mut rng, n, k).into_vec();
    support.sort_unstable();

    let values: Vec<f64> = match spec.kind {
        SignalKind::SparseDirac => (0..k)
            .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
            .collect(),
        SignalKind::SparseGaussian => (0..k).map(|_| rng::normal(&mut rng)).collect(),
        SignalKind::Custom => {
            let mags = spec
                .magnitudes
                .as_ref()
                .ok_or(Error::InvalidSpec("custom signal needs magnitudes"))?;
            if mags.len() != k {
                return Err(Error::InvalidSpec("magnitudes must have length k"));
            }
            if mags.iter().any(|m| *m == 0.0 || !m.is_finite()) {
                return Err(Error::InvalidSpec("magnitudes must be finite and nonzero"));
            }
            mags.iter()
                .map(|m| if rng.random_bool(0.5) { *m } else { -*m })
                .collect()
        }
        SignalKind::Z2 => unreachable!(),
    };

    let scale = norm(&values);
    if scale == 0.0 {
        return Err(Error::InvalidSpec("all nonzero values vanished"));
    }
    let mut v = vec![0.0; n];
    for (&i, x) in support.iter().zip(&values) {
        v[i] = x / scale;
    }
    Ok(v)
}

/// A rank-one spiked Wigner observation together with its ground truth.
#[derive(Debug, Clone)]
pub struct SpikedModel {
    pub lambda: f64,
    pub v_star: Vec<f64>,
    pub noise: SymMatrix,
    pub observed: SymMatrix,
    pub sparsity: Option<usize>,
}

impl SpikedModel {
    /// Forms `M = λ v⋆ v⋆^T + W`. `λ = 0` is allowed (pure noise).
    pub fn new(lambda: f64, v_star: Vec<f64>, noise: SymMatrix) -> Result<Self> {
        linalg::check_len(noise.n(), v_star.len())?;
        let nrm = norm(&v_star);
        if (nrm - 1.0).abs() > UNIT_TOL {
            return Err(Error::NotUnitNorm { norm: nrm });
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter("lambda must be finite and nonnegative"));
        }
        let observed = noise.scaled_plus_rank_one(1.0, lambda, &v_star)?;
        let nnz = v_star.iter().filter(|x| **x != 0.0).count();
        let sparsity = (nnz < v_star.len()).then_some(nnz);
        Ok(SpikedModel {
            lambda,
            v_star,
            noise,
            observed,
            sparsity,
        })
    }

    pub fn n(&self) -> usize {
        self.v_star.len()
    }
}

/// Shorthand for [`SpikedModel::new`].
pub fn make_spiked(lambda: f64, v_star: Vec<f64>, noise: SymMatrix) -> Result<SpikedModel> {
    SpikedModel::new(lambda, v_star, noise)
}
