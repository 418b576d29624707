//! S(α, β), the counts N(α; r) of Weyl differencing and the sum S_BV(α).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use super::arcs::{in_m, in_n, ArcParams};
use super::{prod_coeff, require_depth};
use crate::curves::enumerate::check_budget;
use crate::curves::{fold_solutions, PolyBox};
use crate::error::{Error, Result};
use crate::ff_arith::{linalg, CycloValue, FqCtx, Laurent, PolyT};
use crate::forms::Form;
use crate::report::{qpow, ser};

fn qpow_u128(q: u32, k: i64) -> u128 {
    (q as u128).checked_pow(k.max(0) as u32).unwrap_or(u128::MAX)
}

/// Decodes `idx` into `slots` vectors of n polynomials with `b` coefficients each.
fn decode_vecs(q: u32, mut idx: u64, slots: usize, n: usize, b: usize) -> Vec<Vec<PolyT>> {
    let per = (q as u64).pow(b as u32);
    (0..slots)
        .map(|_| {
            (0..n)
                .map(|_| {
                    let p = PolyT::from_index(q, idx % per, b);
                    idx /= per;
                    p
                })
                .collect()
        })
        .collect()
}

/// Σ_{|x|<q^B} ψ(α c x^d) restricted to x with ‖β·d c x^{d-1}‖ < q^{-k}.
fn diagonal_factor(f: &FqCtx, d: u32, c: u32, alpha: &Laurent, beta: Option<&Laurent>, b: usize, k: i64) -> Result<CycloValue> {
    let p = f.p();
    let dc = f.mul(c, f.from_int(d as i64));
    let mut counts = vec![0i128; p as usize];
    for idx in 0..(f.q() as u64).pow(b as u32) {
        let x = PolyT::from_index(f.q(), idx, b);
        if let Some(beta) = beta {
            let dfi = x.pow(f, d - 1).scale(f, dc);
            let mut ok = true;
            for t in 1..=k {
                if prod_coeff(f, beta, &dfi, -t)? != 0 {
                    ok = false;
                    break;
                }
            }
            if !ok {
                continue;
            }
        }
        let fx = x.pow(f, d).scale(f, c);
        counts[f.trace(prod_coeff(f, alpha, &fx, -1)?) as usize] += 1;
    }
    Ok(CycloValue::from_counts(p, &counts))
}

/// Σ_{|g|<q^B} ψ(α f(g)) over g with ‖β ∂_i f(g)‖ < q^{-k} for all i (no
/// restriction when `beta` is `None`).
fn restricted_sum(form: &Form, alpha: &Laurent, beta: Option<&Laurent>, b: usize, k: i64, budget: u128) -> Result<CycloValue> {
    let f = form.fq();
    let q = f.q();
    let n = form.n();
    let p = f.p();
    if let Some(a) = form.diagonal_coeffs() {
        check_budget("diagonal exponential sum", n as u128 * qpow_u128(q, b as i64), budget)?;
        let mut total = CycloValue::from_int(p, 1);
        for &c in a {
            total = total.mul(&diagonal_factor(f, form.d() as u32, c, alpha, beta, b, k)?);
        }
        return Ok(total);
    }
    let count = qpow_u128(q, (n * b) as i64);
    check_budget("exponential sum", count, budget)?;
    let counts = (0..count as u64)
        .into_par_iter()
        .map(|idx| -> Result<Option<u32>> {
            let g = decode_vecs(q, idx, 1, n, b).pop().unwrap();
            if let Some(beta) = beta {
                for fi in form.grad(&g)? {
                    for t in 1..=k {
                        if prod_coeff(f, beta, &fi, -t)? != 0 {
                            return Ok(None);
                        }
                    }
                }
            }
            Ok(Some(f.trace(prod_coeff(f, alpha, &form.eval_form(&g)?, -1)?)))
        })
        .try_fold(
            || vec![0i128; p as usize],
            |mut acc, x| {
                if let Some(c) = x? {
                    acc[c as usize] += 1;
                }
                Ok::<_, Error>(acc)
            },
        )
        .try_reduce(|| vec![0i128; p as usize], |a, b| Ok(a.iter().zip(&b).map(|(x, y)| x + y).collect()))?;
    Ok(CycloValue::from_counts(p, &counts))
}

/// S(α, β) = Σ_{|g|<|P|} Σ_{|h|<|Q|} ψ(α f(g) + β h·∇f(g)), with the h-sum
/// evaluated by orthogonality.
pub fn s_alpha_beta(form: &Form, alpha: &Laurent, beta: &Laurent, params: &ArcParams, budget: u128) -> Result<CycloValue> {
    require_depth(alpha, params.alpha_depth())?;
    require_depth(beta, params.beta_depth())?;
    let k = params.q().max(0);
    let s = restricted_sum(form, alpha, Some(beta), params.p() as usize, k, budget)?;
    Ok(s.scale(qpow_u128(form.q(), form.n() as i64 * k) as i128))
}

/// S_BV(α) = Σ_{|g|<q^{e+1}} ψ(α f(g)).
pub fn s_bv(form: &Form, alpha: &Laurent, e: usize, budget: u128) -> Result<CycloValue> {
    require_depth(alpha, (form.d() * e) as i64 + 1)?;
    restricted_sum(form, alpha, None, e + 1, 0, budget)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BvIntegral {
    #[serde(serialize_with = "ser::rat")]
    pub average: BigRational,
    /// #{g : |g| < q^{e+1}, f(g) = 0}, by enumeration
    #[serde(serialize_with = "ser::dec")]
    pub n_hat: u128,
}

impl BvIntegral {
    pub fn ok(&self) -> bool {
        self.average == BigRational::from_integer(self.n_hat.into())
    }
}

/// The average of S_BV over all α of depth de+1, and N̂ counted directly.
pub fn bv_total_integral(form: &Form, e: usize, budget: u128) -> Result<BvIntegral> {
    let q = form.q();
    let depth = form.d() * e + 1;
    let count = qpow_u128(q, depth as i64);
    check_budget("S_BV torus average", count, budget)?;
    let total = (0..count as u64)
        .into_par_iter()
        .map(|i| s_bv(form, &Laurent::from_frac_index(q, i, depth), e, budget))
        .try_reduce(|| CycloValue::zero(form.fq().p()), |a, b| Ok(a.add(&b)))?;
    let sum = total.as_integer().ok_or_else(|| Error::assertion("Σ S_BV is not a rational integer"))?;
    let average = BigRational::new(sum.into(), BigInt::from(count));
    let pbox = PolyBox::new(q, e);
    let n_hat = fold_solutions(form, &pbox, budget, || 0u128, |a, _| *a += 1, |a, b| a + b)?;
    Ok(BvIntegral { average, n_hat })
}

/// log_q of the number of y ∈ (F_q[T]^{cols}) with deg y < b and
/// ‖x Σ_k M_ik y_k‖ < q^{thr} for every row i.
fn solution_dim(f: &FqCtx, x: &Laurent, mat: &[Vec<PolyT>], b: usize, thr: i64) -> Result<usize> {
    let cols = mat[0].len();
    let width = cols * b;
    if thr >= 0 {
        return Ok(width);
    }
    let depth = (-thr) as usize;
    let rows = mat.len() * depth;
    let mut m = vec![0u32; rows * width];
    for (i, row) in mat.iter().enumerate() {
        for (k, mik) in row.iter().enumerate() {
            if mik.is_zero() {
                continue;
            }
            let xm = x.mul_poly(f, mik);
            for c in 0..depth {
                let expo = -1 - c as i64;
                for s in 0..b {
                    m[(i * depth + c) * width + k * b + s] = xm.coeff(expo - s as i64)?;
                }
            }
        }
    }
    Ok(linalg::nullity(f, &mut m, rows, width))
}

/// Number of (d-1)-tuples of vectors with coordinates of degree < b and
/// ‖x Ψ_i(g)‖ < q^{thr} for all i.
fn count_tuples(form: &Form, x: &Laurent, b: i64, thr: i64, budget: u128) -> Result<u128> {
    let f = form.fq();
    let q = f.q();
    let (n, d) = (form.n(), form.d());
    if b <= 0 {
        return Ok(1);
    }
    let b = b as usize;
    if let Some(a) = form.diagonal_coeffs() {
        // Ψ_i = d!·a_i·Π_k g_{k,i} involves coordinate i only
        check_budget("Ψ count", n as u128 * qpow_u128(q, ((d - 2) * b) as i64), budget)?;
        let fact = f.from_int((1..=d as i64).product());
        let mut total = 1u128;
        for &ai in a {
            let c = f.mul(fact, ai);
            let mut sub = 0u128;
            for idx in 0..(q as u64).pow(((d - 2) * b) as u32) {
                let us = decode_vecs(q, idx, d - 2, 1, b);
                let prod = us.iter().fold(PolyT::constant(c), |acc, u| acc.mul(f, &u[0]));
                sub += qpow_u128(q, solution_dim(f, x, &[vec![prod]], b, thr)? as i64);
            }
            total = total.checked_mul(sub).ok_or_else(|| Error::invalid("count overflow"))?;
        }
        return Ok(total);
    }
    let count = qpow_u128(q, ((d - 2) * n * b) as i64);
    check_budget("Ψ count", count, budget)?;
    (0..count as u64)
        .into_par_iter()
        .map(|idx| -> Result<u128> {
            let fixed = decode_vecs(q, idx, d - 2, n, b);
            let refs: Vec<&[PolyT]> = fixed.iter().map(|v| v.as_slice()).collect();
            let m = form.psi_matrix(&refs)?;
            Ok(qpow_u128(q, solution_dim(f, x, &m, b, thr)? as i64))
        })
        .try_reduce(|| 0u128, |a, b| Ok(a + b))
}

/// N(α; r): tuples with |g_k| < q^{box_exp} and ‖α Ψ_i(g)‖ < q^{-r}.
pub fn n_alpha_r(form: &Form, alpha: &Laurent, r: i64, box_exp: i64, budget: u128) -> Result<u128> {
    if r <= 0 {
        return Err(Error::invalid("N(α; r) needs r > 0"));
    }
    count_tuples(form, alpha, box_exp, -r, budget)
}

/// N_s(α; r): box |P|/q^s and threshold q^{-r-(d-1)s}.
pub fn n_alpha_r_shrunk(form: &Form, alpha: &Laurent, r: i64, box_exp: i64, s: i64, budget: u128) -> Result<u128> {
    if r <= 0 || s < 0 {
        return Err(Error::invalid("N_s(α; r) needs r > 0 and s ≥ 0"));
    }
    count_tuples(form, alpha, box_exp - s, -r - (form.d() as i64 - 1) * s, budget)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ShrinkReport {
    pub s: i64,
    #[serde(serialize_with = "ser::dec")]
    pub n: u128,
    #[serde(serialize_with = "ser::dec")]
    pub n_s: u128,
    /// log_q of the bound on N/N_s
    pub bound_exp: i64,
    pub ok: bool,
}

/// N(α; r)/N_s(α; r) ≤ q^{(d-1)ns + n max(0, ⌊(b-r)/2⌋)} for s ≥ max(0, b-r),
/// where b = box_exp.
pub fn shrink_check(form: &Form, alpha: &Laurent, r: i64, box_exp: i64, s: i64, budget: u128) -> Result<ShrinkReport> {
    if s < (box_exp - r).max(0) {
        return Err(Error::invalid("s below max(0, e-j+1-r)"));
    }
    let (n, d) = (form.n() as i64, form.d() as i64);
    let full = n_alpha_r(form, alpha, r, box_exp, budget)?;
    let shrunk = n_alpha_r_shrunk(form, alpha, r, box_exp, s, budget)?;
    let bound_exp = (d - 1) * n * s + n * (box_exp - r).div_euclid(2).max(0);
    let ok = BigInt::from(full) <= BigInt::from(shrunk) * BigInt::from(form.q()).pow(bound_exp as u32);
    Ok(ShrinkReport { s, n: full, n_s: shrunk, bound_exp, ok })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct StructuralReport {
    /// Tuples meeting the shrunk box and threshold.
    pub counted: u64,
    /// Counted tuples with some Ψ_i(g) ≠ 0.
    pub nonzero: u64,
}

/// Enumerates the (d-1)-tuples with |g_k| < q^l and ‖x Ψ_i(g)‖ < q^{thr}
/// and records how many have Ψ(g) ≠ 0.
pub fn structural_check(form: &Form, x: &Laurent, l: i64, thr: i64, budget: u128) -> Result<StructuralReport> {
    let f = form.fq();
    let q = f.q();
    let (n, d) = (form.n(), form.d());
    if l <= 0 {
        return Ok(StructuralReport { counted: 1, nonzero: 0 });
    }
    let b = l as usize;
    let head = qpow_u128(q, ((d - 2) * n * b) as i64);
    let last = qpow_u128(q, (n * b) as i64);
    check_budget("structural enumeration", head.saturating_mul(last), budget)?;
    (0..head as u64)
        .into_par_iter()
        .map(|idx| -> Result<StructuralReport> {
            let fixed = decode_vecs(q, idx, d - 2, n, b);
            let refs: Vec<&[PolyT]> = fixed.iter().map(|v| v.as_slice()).collect();
            let m = form.psi_matrix(&refs)?;
            let mut rep = StructuralReport::default();
            for li in 0..last as u64 {
                let y = decode_vecs(q, li, 1, n, b).pop().unwrap();
                let mut small = true;
                let mut zero = true;
                for row in &m {
                    let psi = row.iter().zip(&y).fold(PolyT::zero(), |acc, (mik, yk)| acc.add(f, &mik.mul(f, yk)));
                    zero &= psi.is_zero();
                    if !x.mul_poly(f, &psi).frac_lt(thr)? {
                        small = false;
                        break;
                    }
                }
                if small {
                    rep.counted += 1;
                    if !zero {
                        rep.nonzero += 1;
                    }
                }
            }
            Ok(rep)
        })
        .try_reduce(StructuralReport::default, |a, b| {
            Ok(StructuralReport { counted: a.counted + b.counted, nonzero: a.nonzero + b.nonzero })
        })
}

/// The zero-locus claim behind the minor arc bounds: for α ∉ 𝔐(J) with
/// l₁ = 1 + ⌊J/(d-1)⌋ and s₁ = e-j+1-l₁, every tuple with |g_k| < q^{l₁} and
/// ‖αΨ_i‖ < |P|^{-1} q^{-(d-1)s₁} has Ψ(g) = 0. With `beta` set the same is
/// checked for β ∉ 𝔑(K) with threshold |Q|^{-1} q^{-(d-1)s₂}.
/// Returns `None` when x lies in the arc.
pub fn minor_structural(
    form: &Form,
    x: &Laurent,
    params: &ArcParams,
    level: i64,
    beta: bool,
    budget: u128,
) -> Result<Option<StructuralReport>> {
    let f = form.fq();
    let d = params.d;
    let inside = if beta { in_n(f, x, params, level)? } else { in_m(f, x, params, level)? };
    if inside.is_some() {
        return Ok(None);
    }
    let l = params.l_of(level);
    let s = params.s_of(level);
    let thr = if beta { -params.q() - (d - 1) * s } else { -params.p() - (d - 1) * s };
    structural_check(form, x, l, thr, budget).map(Some)
}

/// S(α, β) with both Weyl inequalities
/// |S - q^{n(e-ρ)}| ≤ 2|P|^n|Q|^n (|P|^{-(d-1)n} N(α; e-j+1))^{1/2^{d-1}} and
/// |S - q^{n(e-ρ)}| ≤ 2|P|^n|Q|^n (|P|^{-(d-1)n} N(β; e-ρ))^{1/2^{d-2}}.
#[derive(Clone, Debug, Serialize)]
pub struct WeylReport {
    pub s: CycloValue,
    #[serde(serialize_with = "ser::dec")]
    pub n_alpha: u128,
    #[serde(serialize_with = "ser::dec")]
    pub n_beta: u128,
    pub weyl1: bool,
    pub weyl2: bool,
}

pub fn weyl_checks(form: &Form, alpha: &Laurent, beta: &Laurent, params: &ArcParams, budget: u128) -> Result<WeylReport> {
    if params.q() < 0 {
        return Err(Error::invalid("the Weyl bounds need e ≥ ρ"));
    }
    let s = s_alpha_beta(form, alpha, beta, params, budget)?;
    let q = form.q();
    let (n, d) = (form.n() as i64, params.d);
    let (pe, qe) = (params.p(), params.q());
    let w = s.sub(&CycloValue::from_int(form.fq().p(), qpow_u128(q, n * qe) as i128));
    let n_alpha = count_tuples(form, alpha, pe, -pe, budget)?;
    let n_beta = count_tuples(form, beta, pe, -qe, budget)?;
    // |w|^m ≤ 2^m (|P||Q|)^{nm} |P|^{-(d-1)n} N with m = 2^{d-1}, resp. 2^{d-2}
    let rhs = |m: i64, count: u128| {
        BigRational::from_integer(BigInt::from(2).pow(m as u32) * BigInt::from(count))
            * qpow(q, (pe + qe) * n * m - (d - 1) * n * pe)
    };
    let m1 = 1i64 << (d - 1);
    let m2 = 1i64 << (d - 2);
    let weyl1 = abs_sq_pow_le(&w, (m1 / 2) as u32, &rhs(m1, n_alpha))?;
    let weyl2 = abs_sq_pow_le(&w, (m2 / 2) as u32, &rhs(m2, n_beta))?;
    Ok(WeylReport { s, n_alpha, n_beta, weyl1, weyl2 })
}

/// Certified decision of (|z|²)^k ≤ bound.
pub fn abs_sq_pow_le(z: &CycloValue, k: u32, bound: &BigRational) -> Result<bool> {
    if let Some(v) = z.abs_sq_integer() {
        return Ok(BigRational::from_integer(BigInt::from(v).pow(k)) <= *bound);
    }
    if k == 1 {
        return z.abs_sq_le(bound);
    }
    let (lo, hi) = z.abs_sq_interval();
    let b = bound.to_f64().unwrap_or(f64::INFINITY);
    let rel = 4.0 * (k as f64 + 1.0) * f64::EPSILON;
    let hik = hi.max(0.0).powi(k as i32) * (1.0 + rel);
    let lok = lo.max(0.0).powi(k as i32) * (1.0 - rel);
    let slack = b.abs() * 4.0 * f64::EPSILON;
    if hik < b - slack {
        Ok(true)
    } else if lok > b + slack {
        Ok(false)
    } else {
        Err(Error::assertion("magnitude comparison could not be certified"))
    }
}
