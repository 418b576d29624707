//! Local solution densities and the heuristic leading constant of N_X(B).
//!
//! For a form with constant coefficients the completion at a prime P of
//! degree m has residue field F_{q^m}, and so does the infinite place for
//! m = 1. Points x ≢ 0 mod P lift uniquely once f is smooth at them, so
//! their density is fixed at depth 1; points x ≡ 0 mod P contribute
//! Q^{d-n} times the full density, giving σ_P = prim/(1 - Q^{d-n}).

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::curves::enumerate::check_budget;
use crate::curves::PolyBox;
use crate::error::{Error, Result};
use crate::ff_arith::FqCtx;
use crate::forms::Form;
use crate::report::{qpow, ser};

/// ζ_{F_q(T)}(s) = (1 - q^{1-s})^{-1}, finite places only.
pub fn zeta_fq_t(q: u32, s: i64) -> Result<BigRational> {
    if s < 2 {
        return Err(Error::invalid(format!("ζ(s) diverges at s = {s}; need n - d ≥ 2")));
    }
    Ok((BigRational::one() - qpow(q, 1 - s)).recip())
}

/// Number of monic irreducibles of degree m over F_q.
pub fn prime_count(q: u32, m: u32) -> BigInt {
    let mut total = BigInt::zero();
    for t in 1..=m {
        if m % t == 0 {
            total += BigInt::from(int_mobius(m / t)) * BigInt::from(q).pow(t);
        }
    }
    total / BigInt::from(m)
}

fn int_mobius(mut k: u32) -> i32 {
    let mut s = 1;
    let mut p = 2;
    while p * p <= k {
        if k % p == 0 {
            k /= p;
            if k % p == 0 {
                return 0;
            }
            s = -s;
        }
        p += 1;
    }
    if k > 1 {
        s = -s;
    }
    s
}

/// Solutions of f ≡ 0 mod T^k, by enumerating all residues.
#[derive(Clone, Debug, Serialize)]
pub struct ResidueCount {
    pub k: usize,
    #[serde(serialize_with = "ser::dec")]
    pub raw: u128,
    /// residues with some coordinate ≢ 0 mod T
    #[serde(serialize_with = "ser::dec")]
    pub primitive: u128,
}

impl ResidueCount {
    /// count / q^{k(n-1)}
    pub fn density(&self, q: u32, n: usize, primitive: bool) -> BigRational {
        let c = if primitive { self.primitive } else { self.raw };
        BigRational::from_integer(c.into()) * qpow(q, -((self.k * (n - 1)) as i64))
    }
}

pub fn residue_counts(form: &Form, k: usize, budget: u128) -> Result<ResidueCount> {
    if k == 0 {
        return Err(Error::invalid("depth must be positive"));
    }
    let (n, q) = (form.n(), form.q());
    let pbox = PolyBox::new(q, k - 1);
    let m = pbox.len() as u128;
    let total = m.checked_pow(n as u32).unwrap_or(u128::MAX);
    check_budget("residue enumeration", total, budget)?;
    let (raw, primitive) = (0..pbox.len() as u32)
        .into_par_iter()
        .map(|first| {
            let mut idx = vec![0u32; n];
            idx[0] = first;
            let mut acc = (0u128, 0u128);
            loop {
                let g = pbox.decode(&idx);
                let v = form.eval_form(&g).expect("form evaluation");
                if v.coeffs().iter().take(k).all(|&c| c == 0) {
                    acc.0 += 1;
                    if g.iter().any(|x| x.coeff(0) != 0) {
                        acc.1 += 1;
                    }
                }
                let mut i = 1;
                while i < n {
                    idx[i] += 1;
                    if (idx[i] as usize) < pbox.len() {
                        break;
                    }
                    idx[i] = 0;
                    i += 1;
                }
                if i == n {
                    break;
                }
            }
            acc
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(ResidueCount { k, raw, primitive })
}

/// Affine zeros of f over F_{q^m}, with the first nonzero singular zero if any.
fn affine_zeros(form: &Form, big: &Form, budget: u128) -> Result<(u128, Option<Vec<u32>>)> {
    let fq = big.fq();
    let (n, qm) = (big.n(), fq.q());
    if let Some(a) = big.diagonal_coeffs() {
        if form.d() % form.fq().p() as usize != 0 {
            check_budget("density convolution", (qm as u128).pow(2) * n as u128, budget)?;
            let mut dist = vec![0u128; qm as usize];
            dist[0] = 1;
            for &ai in a {
                let mut vals = vec![0u128; qm as usize];
                for x in fq.elements() {
                    vals[fq.mul(ai, fq.pow(x, big.d() as u64)) as usize] += 1;
                }
                let mut next = vec![0u128; qm as usize];
                for (u, &cu) in dist.iter().enumerate() {
                    if cu == 0 {
                        continue;
                    }
                    for (v, &cv) in vals.iter().enumerate() {
                        if cv != 0 {
                            next[fq.add(u as u32, v as u32) as usize] += cu * cv;
                        }
                    }
                }
                dist = next;
            }
            return Ok((dist[0], None));
        }
    }
    let total = (qm as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    check_budget("density enumeration", total, budget)?;
    let qm64 = qm as u64;
    let found = (0..total as u64)
        .into_par_iter()
        .fold(
            || (0u128, None::<Vec<u32>>),
            |mut acc, idx| {
                let x: Vec<u32> = (0..n).map(|i| ((idx / qm64.pow(i as u32)) % qm64) as u32).collect();
                if big.eval_point(&x) == 0 {
                    acc.0 += 1;
                    if idx != 0 && acc.1.is_none() && big.grad_point(&x).iter().all(|&v| v == 0) {
                        acc.1 = Some(x);
                    }
                }
                acc
            },
        )
        .reduce(
            || (0, None),
            |a, b| {
                let w = match (a.1, b.1) {
                    (Some(x), Some(y)) => Some(x.min(y)),
                    (x, y) => x.or(y),
                };
                (a.0 + b.0, w)
            },
        );
    Ok(found)
}

#[derive(Clone, Debug, Serialize)]
pub struct PrimeDensity {
    /// degree of the primes (1 also covers the infinite place)
    pub degree: u32,
    #[serde(serialize_with = "ser::dec")]
    pub primes: BigInt,
    #[serde(serialize_with = "ser::dec")]
    pub affine_zeros: u128,
    /// #{x mod P : f(x) ≡ 0}/|P|^{n-1}, zero vector included
    #[serde(serialize_with = "ser::rat")]
    pub raw_depth1: BigRational,
    #[serde(serialize_with = "ser::rat")]
    pub primitive: BigRational,
    #[serde(serialize_with = "ser::rat")]
    pub sigma: BigRational,
    /// depth at which the primitive density is constant
    pub stable_depth: usize,
    /// deepest level compared against residue enumeration
    pub verified_depth: usize,
}

/// Density at the primes of degree m. `hensel_depth` ≥ 2 re-counts residues
/// mod P^2.. for m = 1 when the enumeration fits in `budget`.
pub fn local_density(form: &Form, m: u32, hensel_depth: usize, budget: u128) -> Result<PrimeDensity> {
    if m == 0 || hensel_depth == 0 {
        return Err(Error::invalid("prime degree and depth must be positive"));
    }
    let (n, d, q) = (form.n(), form.d(), form.q());
    let big = if m == 1 {
        form.clone()
    } else {
        form.base_change(Arc::new(FqCtx::new(form.fq().p(), form.fq().k() * m)?))?
    };
    let qm = big.q();
    let (zeros, singular) = affine_zeros(form, &big, budget)?;
    if let Some(x) = singular {
        return Err(Error::assertion(format!(
            "density not stabilized: singular zero {x:?} over F_{qm}, lifts are not unique"
        )));
    }
    let scale = qpow(qm, -((n - 1) as i64));
    let raw_depth1 = BigRational::from_integer(zeros.into()) * &scale;
    let primitive = BigRational::from_integer((zeros - 1).into()) * &scale;
    let sigma = &primitive / (BigRational::one() - qpow(qm, d as i64 - n as i64));
    let mut verified_depth = 1;
    if m == 1 {
        for k in 2..=hensel_depth {
            match residue_counts(form, k, budget) {
                Ok(rc) => {
                    if rc.density(q, n, true) != primitive {
                        return Err(Error::assertion(format!("density not stabilized at depth {k}")));
                    }
                    verified_depth = k;
                }
                Err(Error::Budget { .. }) => break,
                Err(e) => return Err(e),
            }
        }
    }
    Ok(PrimeDensity {
        degree: m,
        primes: prime_count(q, m),
        affine_zeros: zeros,
        raw_depth1,
        primitive,
        sigma,
        stable_depth: 1,
        verified_depth,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CalibrationRow {
    pub b: i64,
    #[serde(serialize_with = "ser::dec")]
    pub n_x: u128,
    /// N_X(B) / (c_X q^{(n-d)⌊B/(n-d)⌋})
    #[serde(serialize_with = "ser::rat")]
    pub ratio: BigRational,
    pub ratio_approx: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityEstimate {
    pub prime_degree_cap: u32,
    pub primes: Vec<PrimeDensity>,
    #[serde(serialize_with = "ser::rat")]
    pub sigma_infinity: BigRational,
    /// Π_{deg P ≤ cap} σ_P
    #[serde(serialize_with = "ser::rat")]
    pub truncated_product: BigRational,
    pub truncated_product_approx: f64,
    #[serde(serialize_with = "ser::rat")]
    pub zeta: BigRational,
    /// q^{n-1} σ_∞ Π σ_P / ((q-1) ζ(n-d))
    #[serde(serialize_with = "ser::rat")]
    pub c_x: BigRational,
    pub c_x_approx: f64,
    pub calibration: Vec<CalibrationRow>,
}

fn approx(x: &BigRational) -> f64 {
    let (n, d) = (x.numer(), x.denom());
    let shift = d.bits().saturating_sub(60).max(n.bits().saturating_sub(60));
    (n >> shift).to_f64().unwrap_or(f64::NAN) / (d >> shift).to_f64().unwrap_or(f64::NAN)
}

pub fn c_x_estimate(form: &Form, prime_degree_cap: u32, hensel_depth: usize, budget: u128) -> Result<DensityEstimate> {
    let (n, d, q) = (form.n(), form.d(), form.q());
    if n < d + 2 {
        return Err(Error::invalid("the leading constant needs n - d ≥ 2"));
    }
    let zeta = zeta_fq_t(q, (n - d) as i64)?;
    let primes: Vec<PrimeDensity> =
        (1..=prime_degree_cap).map(|m| local_density(form, m, hensel_depth, budget)).collect::<Result<_>>()?;
    let sigma_infinity = match primes.first() {
        Some(p) => p.sigma.clone(),
        None => local_density(form, 1, hensel_depth, budget)?.sigma,
    };
    let mut truncated_product = BigRational::one();
    for p in &primes {
        let e = p.primes.to_u32().ok_or_else(|| Error::invalid("too many primes"))?;
        truncated_product *= num_traits::pow(p.sigma.clone(), e as usize);
    }
    let c_x = qpow(q, (n - 1) as i64) * &sigma_infinity * &truncated_product
        / (BigRational::from_integer((q - 1).into()) * &zeta);
    Ok(DensityEstimate {
        prime_degree_cap,
        primes,
        sigma_infinity,
        truncated_product_approx: approx(&truncated_product),
        truncated_product,
        zeta,
        c_x_approx: approx(&c_x),
        c_x,
        calibration: vec![],
    })
}

impl DensityEstimate {
    /// Records N_X(B)/(c_X q^{(n-d)⌊B/(n-d)⌋}) for the given counts.
    pub fn calibrate(&mut self, n_minus_d: usize, q: u32, counts: &[(i64, u128)]) {
        self.calibration = counts
            .iter()
            .filter(|(b, _)| *b >= 0)
            .map(|&(b, n_x)| {
                let top = (b / n_minus_d as i64) * n_minus_d as i64;
                let ratio = BigRational::from_integer(n_x.into()) / (&self.c_x * qpow(q, top));
                CalibrationRow { b, n_x, ratio_approx: approx(&ratio), ratio }
            })
            .collect();
    }
}
