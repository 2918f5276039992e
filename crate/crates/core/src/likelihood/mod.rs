//! Transition densities and likelihoods.
//!
//! * [`euler_transition_density`]: one Euler step.
//! * [`sml_transition_density`]: simulated likelihood with the modified
//!   Brownian bridge as importance sampler.
//! * [`rogers_density`]: Gaussian kernel times a Brownian-bridge functional
//!   of `g_θ = μ′ + μ²` (Girsanov representation).
//! * exact OU likelihood and its maximiser, the complete-likelihood gap
//!   check against the exact OU bridge, and profiling over volatility
//!   parameters.

mod convergence;
mod density;
mod ou_ml;
mod profile;

pub use convergence::{theorem1_gap, GapReport};
pub use density::{
    euler_transition_density, rogers_density, rogers_density_with_steps, rogers_log_functional, sml_log_weights, sml_transition_density,
    sml_transition_density_crn, DensityEstimate, ROGERS_STEPS,
};
pub use ou_ml::{ou_exact_loglik, ou_exact_loglik_gradient, ou_ml_fit, OuFit};
pub use profile::{profile_likelihood, LikelihoodProfile, ProfilePoint, SmlConfig};
