//! Expected maximum likelihood (EML) estimation for discretely observed
//! scalar diffusions `dX = μ(X, θ) dt + dW` whose drift is linear in `θ`.
//!
//! Auxiliary points between observations are filled with modified Brownian
//! bridge paths; the Euler complete log-likelihood is then quadratic in `θ`
//! and its maximiser is the solution of one linear system. The crate also
//! carries the supporting machinery: Lamperti transforms for state-dependent
//! volatility, Monte Carlo transition densities (importance-sampled
//! simulated likelihood and the Girsanov/Brownian-bridge representation),
//! likelihood profiling over volatility parameters and Radon–Nikodym
//! diagnostics between the diffusion bridge and the Brownian bridge.

pub mod bridge;
pub mod diagnostics;
pub mod eml;
pub mod error;
pub mod likelihood;
pub mod model;
pub mod numeric;
pub mod rng;

pub use error::{EmlError, Result};
