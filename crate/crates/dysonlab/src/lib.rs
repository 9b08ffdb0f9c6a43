//! Numerics for the Dyson expansion of random Schrodinger operators on periodic lattices.
//!
//! Fields live on the torus `(Z/NZ)^d`. The free Hamiltonian is the centered
//! discrete Laplacian with symbol `omega(m) = 2 sum_j cos(2 pi m_j / N)`, and the
//! random potential is supported on a ball of radius `R` around the center site.

pub mod dyson;
pub mod error;
pub mod evolve;
pub mod lattice;
pub mod operator;
pub mod potential;
pub mod quadrature;
pub mod rmt;
pub mod rng;
pub mod special;
pub mod spectral;

pub use error::{Error, Result};
pub use lattice::{Basis, LatticeGrid, WaveField, C64};
pub use potential::{sample_potential, DriveEnvelope, Distribution, PotentialSample};
