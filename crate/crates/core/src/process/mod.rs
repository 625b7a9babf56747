//! Kinetic Monte Carlo for the zero range process on `T_N^d`, run in
//! diffusive time, with block-average and cylinder-function observables.

mod lattice;
mod observe;
mod sim;
mod step;
mod tree;

pub use lattice::Configuration;
pub use observe::{
    block_average, block_averages, block_sums, cylinder_average, default_cylinders, empirical_density_field, Cylinder,
    ObservationPlan, TestFunction,
};
pub use sim::{read_event_log, EventLog, JumpRecord, RunSummary, Simulator};
pub use step::StepDistribution;
pub use tree::SumTree;
