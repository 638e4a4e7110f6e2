//! Weighted and shifted Lubich difference (WSLD) operators for
//! Riemann–Liouville space-fractional derivatives of order `1 < a < 2`.
//!
//! The crate provides the coefficient sequences and weights for operators of
//! orders one to four, their finite-domain matrices, a numerical stability
//! certifier, Crank–Nicolson and ADI solvers for variable-coefficient
//! fractional diffusion, and a manufactured-solution convergence harness.

pub mod coeffs;
pub mod error;
pub mod linalg;
pub mod operators;
pub mod solvers;
pub mod spectral;
pub mod verification;

pub use coeffs::{
    grunwald_g, lubich_q, stencil_phi, weights_order2, weights_order3, weights_order4, CoefficientTable,
    FractionalOrder, ShiftTuple,
};
pub use error::{Result, WsldError};
pub use operators::{apply, assemble_left, assemble_right, rl_exact_poly, Grid1D, OperatorMatrix, Side};
pub use solvers::{
    build_adi_factors, build_cn_system, solve_1d, solve_2d, step_adi, AdiVariant, Problem1D, Problem2D,
    SolveOptions, StabilityConfig,
};
pub use spectral::{certify, generating_function, max_real_eig_bound, scan_nonpositivity, SpectralReport, Verdict};
pub use verification::{convergence_study, manufactured_1d, manufactured_2d, max_error, ConvergenceTable, TauLaw};
