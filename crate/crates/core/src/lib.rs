//! Quadratic Value-at-Risk for delta-hedged option portfolios.
//!
//! A portfolio's second-order profit and loss `Θ + X Γ₁ Xᵗ/2` under zero-mean
//! elliptic log-returns `X ~ (0, Σ)` is reduced to the mass of an elliptic
//! distribution over the hyperboloid `{|w₋|² − |w₊|² ≥ R²}`. Solving
//! `G(R) = α` gives the Value-at-Risk `V = R²/2 − Θ`.
//!
//! Modules, bottom-up:
//! - [`linalg`]: Cholesky, Jacobi eigendecomposition, signed spectrum.
//! - [`chi2mix`]: tail probabilities of positively weighted chi-square sums.
//! - [`hyperboloid`]: `G(R)` for every signature, plus a sampling oracle.
//! - [`solver`]: root-finding `G(R) = α` and the VaR conversion.
//! - [`portfolio`]: Black-Scholes sensitivities, quadratic model, EWMA covariance.
//! - [`io`] and [`cli`]: file formats and the `hypervar` command set.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chi2mix;
pub mod cli;
pub mod error;
pub mod estimate;
pub mod hyperboloid;
pub mod io;
pub mod linalg;
pub mod portfolio;
pub mod solver;
pub mod special;

pub use error::{Error, Result};
pub use estimate::{Method, TailEstimate};
