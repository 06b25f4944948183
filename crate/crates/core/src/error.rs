use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex index {index} out of range ({count} vertices)")]
    InvalidIndex { index: usize, count: usize },

    #[error("cell {cell} repeats a vertex")]
    DegenerateCell { cell: usize },

    #[error("edge ({a}, {b}) is shared by {cells} cells, expected 2")]
    NonManifoldEdge { a: usize, b: usize, cells: usize },

    #[error("edge ({a}, {b}) is traversed twice in the same direction")]
    InconsistentOrientation { a: usize, b: usize },

    #[error("vertex {0} is not referenced by any cell")]
    UnreferencedVertex(usize),

    #[error("vertex {0} has a non-manifold neighbourhood")]
    NonManifoldVertex(usize),

    #[error("invalid valence {0}, expected at least 3")]
    InvalidValence(usize),

    #[error("cell {cell} has more than one extraordinary corner")]
    TwoEVsInPatch { cell: usize },

    #[error("edge ({a}, {b}) joins two extraordinary vertices")]
    TwoEVsOnEdge { a: usize, b: usize },

    #[error("parameter ({0}, {1}) lies outside the unit triangle")]
    OutOfDomain(f64, f64),

    #[error("evaluation requested exactly at the extraordinary vertex")]
    AtExtraordinaryVertex,

    #[error("subdivision depth {0} exceeds the evaluation cap")]
    MaxDepthExceeded(u32),

    #[error("unsupported quadrature degree {0}, expected 4 or 6")]
    UnsupportedDegree(usize),

    #[error("invalid adaptive quadrature level {0}")]
    InvalidLevel(usize),

    #[error("degenerate metric in cell {cell} (det G = {det:e})")]
    DegenerateMetric { cell: usize, det: f64 },

    #[error("no convergence after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("level mismatch: {0}")]
    LevelMismatch(String),

    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),

    #[error("degenerate error sequence: {0}")]
    DegenerateErrors(String),

    #[error("invalid resolution {n}x{m}, expected at least 3x3")]
    InvalidResolution { n: usize, m: usize },

    #[error("adjacent extraordinary vertices; subdivide the control mesh at least once")]
    AdjacentEVs,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// Solver failures are reported separately from input validation.
    pub fn is_solver_failure(&self) -> bool {
        matches!(self, Error::NoConvergence { .. } | Error::SingularSystem(_))
    }
}
