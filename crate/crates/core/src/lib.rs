//! Randomized low-rank approximation and fast approximate inversion of
//! large symmetric positive definite matrices.
//!
//! The pipeline: sketch K down to a tall-skinny K Omega with a structured
//! random transform (Walsh-Hadamard, DCT or DHT) or a dense Gaussian draw,
//! factor the sketch with a blocked parallel tall-skinny QR, and use the
//! resulting orthonormal range for spectral truncation, conditioning
//! diagnostics and Gaussian-process solves with a nugget.
//!
//! Modules:
//! - [`kernels`]: covariance kernels, grids, Gram matrices, synthetic PSD
//!   matrices with planted spectra.
//! - [`transforms`]: Gaussian and structured `c R T P` sketches applied
//!   row-wise without materializing the sketch.
//! - [`tsqr`]: blocked Householder QR with tree and sequential reduction
//!   schemes, implicit Q application and triangular solves.
//! - [`lowrank`]: Jacobi eigensolver, truncation, condition numbers, range
//!   finding and projection-error diagnostics.
//! - [`gp`]: Woodbury solves and Gaussian log-likelihoods on the low-rank
//!   surrogate.
//!
//! Randomness is always explicit: operations take a `u64` seed and draw
//! from ChaCha20 streams ([`rng`]), and parallel sections take an explicit
//! [`Workers`] pool. Identical seeds and configurations reproduce results
//! bit for bit, independent of the worker count.

pub mod error;
pub mod gp;
pub mod kernels;
pub mod lowrank;
pub mod matrix;
pub mod parallel;
pub mod rng;
pub mod special;
pub mod transforms;
pub mod tsqr;

pub use error::{Error, Result};
pub use matrix::{DenseMatrix, SymMatrix};
pub use parallel::Workers;
