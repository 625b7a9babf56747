//! Numerical laboratory for condensing zero range processes.
//!
//! Exact single-site thermodynamics, product and canonical measures, a
//! continuous-time simulator, a finite-difference solver for the
//! hydrodynamic equation and the statistical checks that tie them together.

// `!(x > 0.0)` style checks also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod measures;
pub mod pde;
pub mod process;
pub mod rate;
pub mod thermo;
pub mod verify;

pub use error::{Result, ZrpError};
pub use rate::{fugacity_radius, FugacityRadius, LocalJumpRate, RateFamily};
pub use thermo::{ThermoSettings, ThermoTable};
