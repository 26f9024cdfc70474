//! Sampling and Fourier diagnostics for complex smoothing equations
//! `X =law Σ_j T_j X_j`.
//!
//! * [`model`]: weight laws and their moment functions.
//! * [`analysis`]: `m(s)`, the exponent `α`, and the assumption report.
//! * [`branching`]: the weighted branching process and its martingales `W_n`, `Z_n`.
//! * [`popdyn`]: population-dynamics sampling of the fixed point `Z`.
//! * [`fourier`]: empirical characteristic function, residual of the
//!   characteristic equation, and decay diagnostics.
//! * [`density`]: kernel density estimates of sample pools.
//!
//! All randomness flows through [`rng::Streams`]: results are a function of
//! the seed and never of the number of worker threads.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod branching;
pub mod cli;
pub mod config;
pub mod density;
pub mod error;
pub mod fourier;
pub mod io;
pub mod model;
pub mod popdyn;
pub mod rng;

pub use error::{Error, Result};
pub use model::{WeightDraw, WeightModel};
pub use num_complex::Complex64;
pub use popdyn::SamplePool;
pub use rng::Streams;
