//! The lattices Λ_{a,c} = (T^{-a} I, 0; T^c γ, T^c I) attached to a symmetric
//! matrix γ, their adjoints, and the counts
//! N_{γ,a,c} = #{x ∈ F_q[T]^n : |x| < q^a, ‖γ x‖ < q^{-c}}.

use std::sync::Arc;

use serde::Serialize;

use super::{LatticeBasis, MinimaProfile};
use crate::circle::prod_coeff;
use crate::curves::enumerate::check_budget;
use crate::error::{Error, Result};
use crate::ff_arith::{linalg, FqCtx, Laurent, PolyT};
use crate::forms::Form;

/// γ = α·M where M is the symmetric matrix of Ψ with d-2 slots fixed.
pub fn gamma_from_alpha_psi(form: &Form, alpha: &Laurent, fixed: &[&[PolyT]]) -> Result<Vec<Vec<Laurent>>> {
    let f = form.fq();
    let m = form.psi_matrix(fixed)?;
    Ok(m.iter().map(|row| row.iter().map(|p| alpha.mul_poly(f, p)).collect()).collect())
}

fn check_gamma(gamma: &[Vec<Laurent>]) -> Result<usize> {
    let n = gamma.len();
    if n == 0 || gamma.iter().any(|r| r.len() != n) {
        return Err(Error::invalid("γ must be a nonempty square matrix"));
    }
    for i in 0..n {
        for j in 0..i {
            if gamma[i][j] != gamma[j][i] {
                return Err(Error::invalid("γ must be symmetric"));
            }
        }
    }
    Ok(n)
}

/// Coefficients T^{-1}, …, T^{-depth} of the fractional part of γ. Lower
/// terms change neither the counts nor the minima of Λ_{a,c} when
/// depth ≥ a + c.
fn frac_truncated(gamma: &[Vec<Laurent>], depth: i64) -> Result<Vec<Vec<Laurent>>> {
    gamma
        .iter()
        .map(|row| {
            row.iter()
                .map(|x| {
                    let terms = (1..=depth).map(|t| Ok((-t, x.coeff(-t)?))).collect::<Result<Vec<_>>>()?;
                    Ok(Laurent::from_terms(&terms))
                })
                .collect()
        })
        .collect()
}

fn block_basis(fq: Arc<FqCtx>, blocks: [[&dyn Fn(usize, usize) -> Laurent; 2]; 2], n: usize) -> Result<LatticeBasis> {
    let dim = 2 * n;
    let mut entries = vec![Laurent::zero(); dim * dim];
    for (bi, brow) in blocks.iter().enumerate() {
        for (bj, blk) in brow.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    entries[(bi * n + i) * dim + bj * n + j] = blk(i, j);
                }
            }
        }
    }
    LatticeBasis::from_laurent(fq, dim, &entries)
}

fn scalar_id(e: i64) -> impl Fn(usize, usize) -> Laurent {
    move |i, j| if i == j { Laurent::from_terms(&[(e, 1)]) } else { Laurent::zero() }
}

/// Λ_{a,c} with γ replaced by its fractional part truncated below T^{-(a+c)}.
pub fn lambda_ac(fq: Arc<FqCtx>, gamma: &[Vec<Laurent>], a: i64, c: i64) -> Result<LatticeBasis> {
    let n = check_gamma(gamma)?;
    if c < 0 {
        return Err(Error::invalid("Λ_{a,c} needs c ≥ 0"));
    }
    let g = frac_truncated(gamma, (a + c).max(0))?;
    let lower = |i: usize, j: usize| g[i][j].shift(c);
    let zero = |_: usize, _: usize| Laurent::zero();
    block_basis(fq, [[&scalar_id(-a), &zero], [&lower, &scalar_id(c)]], n)
}

/// (T^a I, -T^a γ; 0, T^{-c} I), the adjoint of `lambda_ac` for symmetric γ.
pub fn adjoint_ac(fq: Arc<FqCtx>, gamma: &[Vec<Laurent>], a: i64, c: i64) -> Result<LatticeBasis> {
    let n = check_gamma(gamma)?;
    let g = frac_truncated(gamma, (a + c).max(0))?;
    let f = fq.clone();
    let upper = move |i: usize, j: usize| g[i][j].shift(a).neg(&f);
    let zero = |_: usize, _: usize| Laurent::zero();
    block_basis(fq, [[&scalar_id(a), &upper], [&zero, &scalar_id(-c)]], n)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DualityReport {
    pub a: i64,
    pub c: i64,
    pub minima: Vec<i64>,
    pub adjoint_minima: Vec<i64>,
    /// The inverse transpose equals the explicit block formula.
    pub explicit_adjoint: bool,
    /// R_i(Λ) + R_{N+1-i}(Λ*) = 0.
    pub dual_minima: bool,
    /// R_i + R_{2n+1-i} = c - a.
    pub pairing: bool,
}

impl DualityReport {
    pub fn ok(&self) -> bool {
        self.explicit_adjoint && self.dual_minima && self.pairing
    }
}

pub fn duality_check(fq: Arc<FqCtx>, gamma: &[Vec<Laurent>], a: i64, c: i64) -> Result<DualityReport> {
    let lam = lambda_ac(fq.clone(), gamma, a, c)?;
    let adj = lam.adjoint()?;
    let explicit = adjoint_ac(fq, gamma, a, c)?;
    let r = lam.successive_minima().exps;
    let rs = adj.successive_minima().exps;
    let m = r.len();
    Ok(DualityReport {
        a,
        c,
        dual_minima: (0..m).all(|i| r[i] + rs[m - 1 - i] == 0),
        pairing: (0..m).all(|i| r[i] + r[m - 1 - i] == c - a),
        explicit_adjoint: adj == explicit,
        minima: r,
        adjoint_minima: rs,
    })
}

/// Rows of the linear map x ↦ (coefficients of T^{-1..-c} in γx) on the box
/// |x| < q^a, unknowns ordered (coordinate, degree).
fn gamma_system(f: &FqCtx, gamma: &[Vec<Laurent>], a: usize, c: i64) -> Result<Vec<u32>> {
    let n = gamma.len();
    let mut rows = Vec::with_capacity(n * c as usize * n * a);
    for row in gamma {
        for t in 1..=c {
            for g in row {
                for m in 0..a {
                    rows.push(g.coeff(-t - m as i64)?);
                }
            }
        }
    }
    let _ = f;
    Ok(rows)
}

/// log_q N_{γ,a,c}.
pub fn count_gamma(fq: &FqCtx, gamma: &[Vec<Laurent>], a: i64, c: i64) -> Result<usize> {
    let n = check_gamma(gamma)?;
    if a <= 0 {
        return Ok(0);
    }
    let au = a as usize;
    let mut m = gamma_system(fq, gamma, au, c.max(0))?;
    let rows = m.len() / (n * au);
    Ok(linalg::nullity(fq, &mut m, rows, n * au))
}

/// N_{γ,a,c} by listing the box.
pub fn count_gamma_enum(fq: &FqCtx, gamma: &[Vec<Laurent>], a: i64, c: i64, budget: u128) -> Result<u128> {
    let n = check_gamma(gamma)?;
    if a <= 0 {
        return Ok(1);
    }
    let q = fq.q();
    let au = a as usize;
    let size = (q as u128).checked_pow((n * au) as u32).unwrap_or(u128::MAX);
    check_budget("γ box enumeration", size, budget)?;
    let per = (q as u64).pow(au as u32);
    let mut count = 0;
    'outer: for idx in 0..size as u64 {
        let mut rest = idx;
        let x: Vec<PolyT> = (0..n)
            .map(|_| {
                let p = PolyT::from_index(q, rest % per, au);
                rest /= per;
                p
            })
            .collect();
        for row in gamma {
            for t in 1..=c {
                let mut acc = 0;
                for (g, xk) in row.iter().zip(&x) {
                    acc = fq.add(acc, prod_coeff(fq, g, xk, -t)?);
                }
                if acc != 0 {
                    continue 'outer;
                }
            }
        }
        count += 1;
    }
    Ok(count)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ShrinkingReport {
    pub a: i64,
    pub c: i64,
    pub s: i64,
    /// log_q N_{γ,a,c}
    pub count_exp: usize,
    /// log_q N_{γ,a-s,c+s}
    pub shrunk_exp: usize,
    /// log_q of the bound on the ratio
    pub bound_exp: i64,
    pub minima: Vec<i64>,
    /// Both counts equal the product formula from the minima of Λ_{a,c}.
    pub lee: bool,
    pub ok: bool,
}

/// N_{γ,a,c}/N_{γ,a-s,c+s} ≤ q^{ns + n max(⌊(a-c)/2⌋, 0)}.
pub fn shrinking_check(fq: Arc<FqCtx>, gamma: &[Vec<Laurent>], a: i64, c: i64, s: i64) -> Result<ShrinkingReport> {
    let n = check_gamma(gamma)? as i64;
    if c <= 0 || s < 0 {
        return Err(Error::invalid("shrinking needs c > 0 and s ≥ 0"));
    }
    let count_exp = count_gamma(&fq, gamma, a, c)?;
    let shrunk_exp = count_gamma(&fq, gamma, a - s, c + s)?;
    let bound_exp = n * s + n * (a - c).div_euclid(2).max(0);
    let lam = lambda_ac(fq.clone(), gamma, a, c)?;
    let prof: MinimaProfile = lam.successive_minima();
    let shrunk_prof = lambda_ac(fq, gamma, a - s, c + s)?.successive_minima();
    let lee = prof.count_exp(0) == count_exp as i64
        && prof.count_exp(-s) == shrunk_exp as i64
        && shrunk_prof.count_exp(0) == shrunk_exp as i64;
    Ok(ShrinkingReport {
        a,
        c,
        s,
        count_exp,
        shrunk_exp,
        bound_exp,
        minima: prof.exps,
        lee,
        ok: count_exp as i64 - shrunk_exp as i64 <= bound_exp,
    })
}
