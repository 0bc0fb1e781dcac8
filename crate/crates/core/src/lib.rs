//! Boundary quasi-orthogonality of Laplace eigenfunctions on planar domains.

pub mod config;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod image;
pub mod modes;
pub mod qform;
pub mod quadrature;
pub mod scaling;
pub mod symid;

pub use error::{Error, Result};
