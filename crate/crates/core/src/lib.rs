//! Solvers and measurement tools for the fractional reaction-diffusion
//! equation `u_t + (-Delta)^s u^m = f(u)`.

pub mod diffusion;
pub mod error;
pub mod experiment;
pub mod front;
pub mod grid;
pub mod heat_kernel;
pub mod initial;
pub mod kpp;
pub mod params;
pub mod selfsim;
pub mod special;
pub mod tails;

pub use error::{Error, Result};
pub use grid::{apply_fractional_laplacian, oracle_fractional_laplacian_dense, Field, Grid};
pub use params::{classify_regime, critical_exponents, CriticalExponents, ModelParams, ReactionSpec, Regime};
