//! Exact finite-level computations for rational curves on smooth hypersurfaces
//! over finite fields: point counts on spaces of maps, splitting types of
//! pulled-back tangent bundles, exponential sums of the function field circle
//! method, lattices over F_q((1/T)) and freedom-restricted height counts.

pub mod error;
pub mod ff_arith;
pub mod circle;
pub mod curves;
pub mod forms;
pub mod fq_lattice;
pub mod peyre;
pub mod report;
pub mod verify;

pub use error::{Error, Result};
