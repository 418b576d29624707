//! Counting functions for rational curves on X = {f = 0} and the freeness
//! classification of their tangent bundles.

pub mod bundles;
pub mod census;
pub mod enumerate;

pub use bundles::{tangent_kernel_dim, Bundle, CurveBundles, CurveTuple, SplittingType};
pub use census::{
    cancellation_check, census, count_n, count_n_rho, moduli_and_zrho, point_count, scan, tilde_n, CensusOptions,
    CensusRecord, Scan, ScanOptions,
};
pub use enumerate::{fold_solutions, PolyBox};
