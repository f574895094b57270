//! Pseudospectral simulation of surface diffusion flow for surfaces that are
//! graphs over a circular cylinder, `x` periodic with period `a` and `theta`
//! periodic with period `2 pi`.

pub mod config;
pub mod diagnostics;
pub mod equilibria;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod grid;
pub mod linearization;
pub mod neumann;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::SurfaceOperator;
pub use grid::{Grid, HeightField, SpectralField};
