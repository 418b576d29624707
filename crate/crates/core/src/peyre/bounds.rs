//! Exact evaluation of the displayed dimension bounds and their hypotheses.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::report::ser;

use super::rho_of_eps;

fn rat(a: i64) -> BigRational {
    BigRational::from_integer(a.into())
}

fn floor(a: i64, b: i64) -> i64 {
    a.div_euclid(b)
}

fn ceil(a: i64, b: i64) -> i64 {
    -(-a).div_euclid(b)
}

fn frac(a: i64, b: i64) -> BigRational {
    BigRational::new(a.into(), b.into())
}

/// Per-j quantities of the minor arc estimate.
#[derive(Clone, Debug, Serialize)]
pub struct ArcBounds {
    pub j: i64,
    /// M = ⌈d(e-j)/2⌉
    pub m: i64,
    /// N = ⌈((e-j)(d-1) + e - ρ)/2⌉
    pub n: i64,
    pub minor_arcs_exist: bool,
    pub e5: bool,
    pub delta: i64,
    #[serde(serialize_with = "ser::rat")]
    pub gamma: BigRational,
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoremReport {
    pub q: u32,
    pub d: i64,
    pub n: i64,
    pub e: i64,
    pub rho: i64,
    #[serde(serialize_with = "ser::rat")]
    pub eps: BigRational,
    pub b: i64,
    /// ⌊εB/(n-1)⌋ + 2
    pub rho_of_eps: i64,
    /// n/2^{d-2} - 6(d-1)
    #[serde(serialize_with = "ser::rat")]
    pub a: BigRational,
    #[serde(serialize_with = "ser::rat")]
    pub main_bound_rhs: BigRational,
    /// codimension of the singular locus of the space of degree-e maps
    #[serde(serialize_with = "ser::rat")]
    pub smooth_codimension: BigRational,
    #[serde(serialize_with = "ser::rat")]
    pub eps_cutoff: BigRational,
    pub eps_below_cutoff: bool,
    /// ⌊(e-ρ)/(d-1)⌋
    pub big_d: i64,
    pub delta0: i64,
    #[serde(serialize_with = "ser::rat")]
    pub gamma0: BigRational,
    /// leading part of Γ₀ in e and ρ
    #[serde(serialize_with = "ser::rat")]
    pub gamma0_leading: BigRational,
    pub arcs: Vec<ArcBounds>,
    pub n_hypothesis: bool,
    pub e_condition: bool,
    pub final_e: bool,
    pub final_hyp: bool,
}

/// Evaluates every bound for (q, d, n, e, ρ, ε, B). The per-j rows cover
/// j = 0, 1, 2.
pub fn theorem_report(q: u32, d: i64, n: i64, e: i64, rho: i64, eps: &BigRational, b: i64) -> Result<TheoremReport> {
    if d < 3 || n <= d {
        return Err(Error::invalid("bounds need d ≥ 3 and n > d"));
    }
    let a = frac(n, 1 << (d - 2)) - rat(6 * (d - 1));
    let half = floor(rho + 1, 2);
    let big_d = floor(e - rho, d - 1);
    let main_bound_rhs =
        rat((n - d) * e + n - 5 + 2 * (d - 1) * half) - &a * rat(1 + big_d - half);
    let smooth_codimension = &a * rat(1 + floor(e + 1, d - 1));
    let eps_cutoff = frac(n - 1, (n - d) * (d - 1) * (d - 1) * (1 << (d - 1)));
    let e_condition = rat(e) >= rat(rho + 1) * (rat(2) + frac(1, d - 2));
    let final_e = e >= rho + (d - 1) * half && e_condition;
    let final_hyp = e >= (d - 1) * (d - 1) * (1 << (d - 1)) * rho;
    let arcs = (0..=2)
        .map(|j| {
            let h = floor(rho - j + 1, 2).max(0);
            ArcBounds {
                j,
                m: ceil(d * (e - j), 2),
                n: ceil((e - j) * (d - 1) + e - rho, 2),
                minor_arcs_exist: (d - 1) * (e - j) > e - rho,
                e5: 1 + big_d >= h,
                delta: (e - j) * (n - 2 * d + 1) + (e - rho) * (n - 1) + n,
                gamma: &a * rat(1 + big_d - h) - rat(2 * (d - 1) * h),
            }
        })
        .collect();
    let gamma0 = &a * rat(1 + big_d - half) - rat(2 * (d - 1) * half);
    let gamma0_leading = &a * (frac(e - rho, d - 1) - frac(rho, 2)) - rat((d - 1) * rho);
    Ok(TheoremReport {
        q,
        d,
        n,
        e,
        rho,
        eps: eps.clone(),
        b,
        rho_of_eps: rho_of_eps(b, eps, n as usize),
        eps_below_cutoff: !eps.is_negative() && *eps < eps_cutoff,
        main_bound_rhs,
        smooth_codimension,
        eps_cutoff,
        big_d,
        delta0: 2 * e * (n - d) - rho * (n - 1) + n,
        gamma0,
        gamma0_leading,
        arcs,
        n_hypothesis: BigInt::from(n) > BigInt::from(3 * (d - 1)) * BigInt::from(1i64 << (d - 1)),
        e_condition,
        final_e,
        final_hyp,
        a,
    })
}
