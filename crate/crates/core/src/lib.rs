pub mod assembly;
pub mod basis;
pub mod error;
pub mod harness;
pub mod quadrature;
pub mod solve;
pub mod topology;

pub use error::{Error, Result};
pub use topology::{beta, ControlMesh, Point3};
