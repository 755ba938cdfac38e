//! Optimal cloning of pure entangled two-qubit states under global, local
//! and LOCC/PPT constraints.

pub mod analytic;
pub mod channel;
pub mod cli;
pub mod covariant;
pub mod error;
pub mod linalg;
pub mod protocol;
pub mod sdp;
pub mod verify;

pub use error::{Error, Result};
