//! Arithmetic over F_q, F_q[T], F_q((1/T)) and Z[ζ_p].

pub mod cyclo;
pub mod field;
pub mod laurent;
pub mod linalg;
pub mod poly;

pub use cyclo::CycloValue;
pub use field::FqCtx;
pub use laurent::{best_approx, convergents, laurent_expand, Laurent, RationalArcPoint};
pub use poly::{euler_phi, factor, mobius, monic_divisors, monics_of_degree, PolyT};
