//! Gaussian density tools for curve shortening flow.

pub mod density;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod heat;
pub mod io;
pub mod optimize;
pub mod quadrature;
pub mod singularity;
pub mod verify;

pub use error::{Error, Result};
