//! Example problems, configuration, run pipeline and output.

pub mod config;
pub mod examples;
pub mod manufactured;
pub mod output;
pub mod pipeline;

pub use config::{DtPolicy, ExampleId, ExperimentConfig};
pub use examples::{build_example, Problem, ProblemData};
pub use manufactured::{ManufacturedSolution, Profile, RotatedPlateData};
pub use pipeline::{
    convergence, prepare, run, simulate, spectrum, sweep, ConvergenceRow, Prepared, RunOutput, SweepRow,
};
