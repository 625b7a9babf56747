//! Finite-difference solver for `d_t rho = Delta_Sigma Phi~(rho)` on the
//! continuum torus, with a discrete maximum-principle monitor.

mod field;
mod solver;

pub use field::{discretize_profile, DensityField};
pub use solver::{extrema_monitor, self_convergence_order, MonitorReport, Solver, SolverSettings};
