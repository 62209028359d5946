//! Penalized spectral-Galerkin simulation of stochastic damped 2D
//! Navier–Stokes on the periodic torus, reflected in the unit ball of the
//! divergence-free L² space `H`.
//!
//! The state is a truncated Fourier series ([`SpectralField`]). Each step
//! applies an explicit stochastic Euler update, the exact Stokes semigroup,
//! and then solves the penalty equation in closed form, so the solution is
//! pulled back toward the ball with strength `n`. As `n` grows the paths
//! approach the reflected solution and the accumulated penalty approximates
//! the reflection term `L`.
//!
//! - [`field`]: fields, norms, ball geometry
//! - [`operators`]: Stokes operator, convection, forcing and noise
//! - [`integrator`]: the penalized time stepper and Brownian driver
//! - [`diagnostics`]: reflection-term and convergence diagnostics
//! - [`harness`]: configuration, ensemble sweeps and reports
//! - [`formats`]: versioned CSV formats

pub mod check;
pub mod diagnostics;
pub mod field;
pub mod formats;
pub mod harness;
pub mod integrator;
pub mod operators;

pub use diagnostics::{
    boundary_support_integral, cauchy_gap, moment_estimates, stieltjes_integral, total_variation,
    uniqueness_gap, variational_inequality_check, DiagnosticsOptions, DiagnosticsReport, Estimate,
    PathStatistics,
};
pub use field::{
    ball_project, inner_h, lambda_of, norm_h, norm_v, penalty_resolvent, penetration, phi_of, BallGeometry,
    FieldError, SpectralField, Wavevector,
};
pub use harness::config::{parse_config, ConfigError, DtPolicy, ExperimentSpec};
pub use harness::experiment::{run_experiment, ExperimentOptions, ExperimentReport, HarnessError};
pub use harness::report::emit_report;
pub use integrator::{
    simulate_path, BrownianSource, PenalizedIntegrator, PenaltyRunConfig, ReflectionPath, SimulationError,
};
pub use operators::{apply_a, nonlinear_b, trilinear_b, CoefficientSet, Convection, Forcing};
