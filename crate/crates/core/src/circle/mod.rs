//! Exponential sums over F_q[T] and the arc decompositions of the torus
//! 𝕋 = {|β| < 1}.
//!
//! Torus integrals are exact averages over the finitely many truncations the
//! integrand depends on. Magnitude inequalities use certified intervals.

pub mod arcs;
pub mod sums;
pub mod weyl;

use crate::error::{Error, Result};
use crate::ff_arith::{CycloValue, FqCtx, Laurent, PolyT};

pub use arcs::{arcs_table, in_m, in_n, in_n_j, ArcParams, ArcRow};
pub use sums::{
    integral_s_beta, lemma1_closed_form, lemma1_grid, major_integral, major_integral_average, n_rho_split, s_beta,
    s_beta_direct, IntegralMethod, Lemma1Grid, MajorIntegral, NRhoSplit,
};
pub use weyl::{
    bv_total_integral, minor_structural, n_alpha_r, n_alpha_r_shrunk, s_alpha_beta, s_bv, shrink_check, structural_check,
    weyl_checks,
    BvIntegral, ShrinkReport, StructuralReport, WeylReport,
};

/// ψ(γ) = ζ_p^{Tr(coefficient of T^{-1})}.
pub fn psi_char(f: &FqCtx, gamma: &Laurent) -> Result<CycloValue> {
    Ok(CycloValue::zeta_pow(f.p(), f.trace(gamma.coeff(-1)?)))
}

/// Coefficient of T^c in x·p.
pub(crate) fn prod_coeff(f: &FqCtx, x: &Laurent, p: &PolyT, c: i64) -> Result<u32> {
    let mut acc = 0;
    for (m, &pm) in p.coeffs().iter().enumerate() {
        if pm != 0 {
            acc = f.add(acc, f.mul(pm, x.coeff(c - m as i64)?));
        }
    }
    Ok(acc)
}

/// Fails unless x is known at least down to T^{-depth}.
pub(crate) fn require_depth(x: &Laurent, depth: i64) -> Result<()> {
    match x.known_from() {
        Some(l) if l > -depth => Err(Error::Precision { needed: -depth, available: l }),
        _ => Ok(()),
    }
}

pub(crate) fn require_frac(x: &Laurent) -> Result<()> {
    if x.abs_lt(0)? {
        Ok(())
    } else {
        Err(Error::invalid("torus elements need |x| < 1"))
    }
}

/// max_i deg g_i, `None` for the zero vector.
pub(crate) fn vec_deg(g: &[PolyT]) -> Option<usize> {
    g.iter().filter_map(|x| x.deg()).max()
}

/// q^k as i128, panicking on overflow.
pub(crate) fn ipow(q: u32, k: i64) -> i128 {
    debug_assert!(k >= 0);
    (q as i128).checked_pow(k as u32).expect("q-power overflow")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn psi_examples() {
        let f = FqCtx::prime(7).unwrap();
        let one = CycloValue::from_int(7, 1);
        assert_eq!(psi_char(&f, &Laurent::zero()).unwrap(), one);
        assert_eq!(psi_char(&f, &Laurent::from_terms(&[(2, 3)])).unwrap(), one);
        assert_eq!(psi_char(&f, &Laurent::from_terms(&[(-1, 3)])).unwrap(), CycloValue::zeta_pow(7, 3));
        assert!(psi_char(&f, &Laurent::truncated(0, vec![1])).is_err());
    }

    #[test]
    fn psi_is_additive() {
        let f = FqCtx::new(3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let a = Laurent::random_frac(&mut rng, 9, 4);
            let b = Laurent::random_frac(&mut rng, 9, 4);
            let lhs = psi_char(&f, &a.add(&f, &b)).unwrap();
            let rhs = psi_char(&f, &a).unwrap().mul(&psi_char(&f, &b).unwrap());
            assert_eq!(lhs, rhs);
        }
    }

    /// Σ_{|h|<q^B} ψ(γh) is q^B when ‖γ‖ < q^{-B} and 0 otherwise.
    #[test]
    fn orthogonality() {
        let f = FqCtx::prime(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for b in 0..=4usize {
            for _ in 0..30 {
                let mut v: Vec<u32> = (0..6).map(|_| rand::Rng::gen_range(&mut rng, 0..5)).collect();
                if rand::Rng::gen_bool(&mut rng, 0.4) {
                    // clear the coefficients of T^-1 … T^-b
                    for c in v.iter_mut().skip(6 - b) {
                        *c = 0;
                    }
                }
                let g = Laurent::exact(-6, v);
                let mut sum = CycloValue::zero(5);
                for idx in 0..5u64.pow(b as u32) {
                    let h = PolyT::from_index(5, idx, b);
                    sum = sum.add(&psi_char(&f, &g.mul_poly(&f, &h)).unwrap());
                }
                let small = g.frac_lt(-(b as i64)).unwrap();
                let want = if small { 5i128.pow(b as u32) } else { 0 };
                assert_eq!(sum, CycloValue::from_int(5, want));
            }
        }
    }
}
