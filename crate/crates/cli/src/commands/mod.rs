pub mod dynamics;
pub mod geometry;
pub mod spectral;
pub mod symbolic;
