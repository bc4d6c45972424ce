//! Pseudo-spectral 2D Euler flow and stability diagnostics on a flat torus
//! `[0, 2πν₁) × [0, 2πν₂)`.

pub mod diagnostics;
pub mod eigenmodes;
pub mod error;
pub mod field;
pub mod geometry;
pub mod io;
pub mod par;
pub mod perturbation;
pub mod rearrange;
pub mod search;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use field::{FluxVector, GridField, SpectralField};
pub use geometry::TorusGeometry;
