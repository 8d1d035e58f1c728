//! Optimal transport map estimation with Lipschitz-constrained GroupSort networks.
//!
//! A generator `G = P_{B_L}(L · N)` is trained against a 1-Lipschitz GroupSort
//! discriminator so that it minimizes the quadratic transport cost plus a
//! penalty on the Wasserstein-1 distance between `G♯P_n` and `Q_n`.
//!
//! - [`nn`]: GroupSort networks with exact backward passes, Adam, checkpoints.
//! - [`lipschitz`]: norm constraints, exact projections, and the empirical audit.
//! - [`ot`]: point clouds, exact discrete matching, Wasserstein-1.
//! - [`datasets`]: seeded samplers, ground-truth maps, CSV I/O.
//! - [`training`]: the alternating adversarial loop and λ schedules.
//! - [`eval`], [`plot`], [`config`]: metrics, figures, run configuration.
//! - [`cli`]: the `otmap` command-line front end.

pub mod cli;
pub mod config;
pub mod datasets;
pub mod error;
pub mod eval;
pub mod lipschitz;
pub mod nn;
pub mod ot;
pub mod plot;
pub mod tensor;
pub mod training;

pub use error::{Error, Result};
