//! Time-optimal generation of multipartite entangled qubit states with
//! two-body Hamiltonians.
//!
//! The crate builds symmetry-constrained two-body Hamiltonians on up to seven
//! qubits, rescales them to unit energy bandwidth, evolves `|0...0>` and
//! searches for the shortest time at which GHZ, W, Dicke and AME(5,2) states
//! are reached. Analytic speed limits and a catalog of known optimal
//! Hamiltonians are provided as cross-checks.

pub mod bounds;
pub mod collective;
pub mod dynamics;
pub mod error;
pub mod operators;
pub mod optimizer;
pub mod reference;
pub mod states;

pub use error::{QslError, Result};
pub use num_complex::Complex64;

/// Dense complex matrix used for operators on the 2^N-dimensional space.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<Complex64>;

/// Largest register the dense code paths accept.
pub const MAX_SITES: usize = 10;
