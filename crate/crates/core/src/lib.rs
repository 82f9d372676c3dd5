//! Approximate message passing (AMP) for rank-one spiked Wigner models.
//!
//! The crate is `no_std` (with `alloc`) and contains only pure numerics:
//!
//! * [`model`]: Wigner noise, planted signals and the observation `M = λ v v^T + W`.
//! * [`denoise`]: the normalized tanh and soft-threshold denoisers with data-driven parameters.
//! * [`amp`]: the Onsager-corrected AMP iteration and power-method spectral initialization.
//! * [`se`]: Gauss-Hermite quadrature, the scalar state-evolution recursions and the
//!   contraction coefficients that control them.
//! * [`decomp`]: the exact signal + Gaussian + residual decomposition of each AMP iterate.
//! * [`sparse_init`]: diagonal maximization and sample-split initializations for sparse PCA.
//! * [`pipeline`]: end-to-end Z2 synchronization and sparse PCA runs.
//!
//! Everything that draws random numbers takes an explicit seed; see [`rng`].
#![no_std]

extern crate alloc;

pub mod amp;
pub mod decomp;
pub mod denoise;
mod error;
pub mod gaussian;
pub mod linalg;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod se;
pub mod sparse_init;

pub use error::{Error, Result};
pub use linalg::SymMatrix;
