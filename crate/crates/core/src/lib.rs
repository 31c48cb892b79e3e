//! Simulation of stochastic differential equations driven by generalized
//! noisy memory,
//!
//! ```text
//! dX(t) = b(t, X(t), Z(t)) dt + σ(t, X(t), Z(t)) dB(t),   t ∈ (0, T]
//! X(t)  = ξ(t),                                           t ∈ [−δ, 0]
//! Z(t)  = ∫_{t−δ}^{t} φ(t, s) X(s) dB(s)
//! ```
//!
//! The crate provides an explicit Euler–Maruyama solver ([`euler`]), a
//! discretized stochastic Volterra reformulation used as an independent
//! cross-check ([`volterra`]), the closed-form solution of the test equation
//! `dX = Z dB` on `[0, δ]` ([`exact`]) and a Monte Carlo harness that
//! measures mean-square errors and fits the empirical convergence order
//! ([`montecarlo`]).

pub mod error;
pub mod euler;
pub mod grid;
pub mod model;
pub mod paths;
pub mod exact;
pub mod volterra;
pub mod montecarlo;
pub mod cli;

pub use error::{Error, Result};
pub use euler::{discrete_memory, euler_solve, euler_solve_naive, Trajectory};
pub use exact::{exact_solve, mat_exp_forward, mat_f, ExactSolution, Mat2};
pub use grid::{build_grid, memory_window, MemoryWindow, TimeGrid};
pub use model::{
    make_problem, paper_example, pure_memory_drift, BuiltinProblem, MemoryKernel, ProblemSpec,
};
pub use montecarlo::{
    convergence_study, convergence_study_with, estimate_mse, estimate_mse_with, exact_terminal_mean,
    fit_log_log_slope, moment_profile, ConvergenceOptions, ConvergenceReport, MomentProfile,
    MseCurve, MseOptions, Reference,
};
pub use paths::{coarsen, sample_path, value_at, BrownianPath};
pub use volterra::{build_volterra_kernel, volterra_euler_solve, KernelAnchor, VolterraKernel};
