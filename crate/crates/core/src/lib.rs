//! Spectral computation of the Neumann–Poincaré operator on a ring torus via
//! toroidal harmonics, with a boundary-integral quadrature oracle.

pub mod bem_oracle;
pub mod error;
pub mod np_assembly;
pub mod quadrature;
pub mod spectral_solver;
pub mod toroidal_functions;
pub mod torus_geometry;
pub mod validation;

pub use error::{NptError, Result};
pub use np_assembly::{assemble_block, Convention, NpBlock};
pub use spectral_solver::{block_spectrum, Eigenvalue, SpectrumReport};
pub use torus_geometry::{ModeIndex, ToroidalPoint, TorusShape};
