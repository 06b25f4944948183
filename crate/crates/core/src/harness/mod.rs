//! Experiment drivers: mesh generators, error norms, convergence studies and
//! file output.

mod generators;
mod norms;
mod output;
mod problem;
mod study;

pub use generators::*;
pub use norms::{eoc, error_norms, error_rules, prolong, ErrorNorms, NormMatrices};
pub use output::write_vtk;
pub use problem::{Discretization, Problem, Rhs};
pub use study::{
    consistency_study, run_study, ConsistencyReport, ErrorReport, Geometry, LevelResult, StudyConfig, StudyOutcome,
};
