//! Harmonic functions and α-fractal interpolation functions on the
//! Sierpinski gasket, their graph energies, and box-counting estimates for the
//! dimension of their graphs.
//!
//! Vertices are integer lattice points (see [`gasket::LatticeVertex`]) so all
//! topology is exact; only function values are floating point.

pub mod boxdim;
pub mod cli;
pub mod energy;
pub mod error;
pub mod fif;
pub mod format;
pub mod function;
pub mod gasket;
pub mod harmonic;
pub mod oracle;

pub use error::{GasketError, Result};
pub use function::VertexFunction;
pub use gasket::{GasketLevel, LatticeVertex, Symbol, Word};
pub use harmonic::{BoundaryValues, HarmonicSpec, PiecewiseHarmonicSpec};
