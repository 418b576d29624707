//! S(β) = Σ_{|h|<q^{e-ρ}} ψ(β h·∇f(g)), its integral over 𝕋 and over the
//! major arcs 𝔑_j, and the major/minor split of N_ρ.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::Rng;
use rayon::prelude::*;

use super::{arcs, ipow, prod_coeff, require_depth, vec_deg};
use crate::curves::census::{gcd_all, is_class_rep};
use crate::curves::enumerate::check_budget;
use crate::curves::{count_n, count_n_rho, fold_solutions, PolyBox};
use crate::error::{ensure, Error, Result};
use crate::ff_arith::{euler_phi, factor, laurent_expand, linalg, monic_divisors, monics_of_degree};
use crate::ff_arith::{CycloValue, FqCtx, Laurent, PolyT, RationalArcPoint};
use crate::forms::Form;
use crate::report::{qpow, Check};

/// Depth of β that S(β) depends on for curves of degree ≤ e.
pub fn s_beta_depth(d: usize, e: usize, rho: i64) -> i64 {
    ((d - 1) * e) as i64 + (e as i64 - rho).max(0)
}

/// Gradient of a nonzero solution g with deg g ≤ e.
fn solution_grad(form: &Form, g: &[PolyT], e: usize) -> Result<Vec<PolyT>> {
    match vec_deg(g) {
        None => return Err(Error::invalid("g must be nonzero")),
        Some(u) if u > e => return Err(Error::invalid(format!("deg g = {u} exceeds e = {e}"))),
        _ => {}
    }
    if !form.eval_form(g)?.is_zero() {
        return Err(Error::invalid("f(g) ≠ 0"));
    }
    form.grad(g)
}

/// Whether the coefficients of T^{-1}, …, T^{-k} of every β·F_i vanish.
fn grad_annihilates(f: &FqCtx, grad: &[PolyT], k: i64, beta: &Laurent) -> Result<bool> {
    for fi in grad {
        for t in 1..=k {
            if prod_coeff(f, beta, fi, -t)? != 0 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn s_beta_grad(form: &Form, grad: &[PolyT], k: i64, beta: &Laurent) -> Result<i128> {
    if k <= 0 {
        return Ok(1);
    }
    Ok(if grad_annihilates(form.fq(), grad, k, beta)? { ipow(form.q(), form.n() as i64 * k) } else { 0 })
}

/// S(β) for a curve g of degree ≤ e, evaluated through orthogonality in h.
pub fn s_beta(form: &Form, g: &[PolyT], e: usize, rho: i64, beta: &Laurent) -> Result<CycloValue> {
    let grad = solution_grad(form, g, e)?;
    require_depth(beta, s_beta_depth(form.d(), e, rho))?;
    Ok(CycloValue::from_int(form.fq().p(), s_beta_grad(form, &grad, e as i64 - rho, beta)?))
}

/// S(β) summed term by term. The sum factors over the coordinates of h, so
/// this costs n·q^{e-ρ} character evaluations.
pub fn s_beta_direct(form: &Form, g: &[PolyT], e: usize, rho: i64, beta: &Laurent) -> Result<CycloValue> {
    let grad = solution_grad(form, g, e)?;
    require_depth(beta, s_beta_depth(form.d(), e, rho))?;
    let f = form.fq();
    let (p, q) = (f.p(), f.q());
    let k = (e as i64 - rho).max(0) as usize;
    let mut total = CycloValue::from_int(p, 1);
    for fi in &grad {
        let bf = beta.mul_poly(f, fi);
        let mut counts = vec![0i128; p as usize];
        for idx in 0..(q as u64).pow(k as u32) {
            let h = PolyT::from_index(q, idx, k);
            counts[f.trace(prod_coeff(f, &bf, &h, -1)?) as usize] += 1;
        }
        total = total.mul(&CycloValue::from_counts(p, &counts));
    }
    Ok(total)
}

/// The value of S(a/r + θ) predicted for curves with |g| < q^{e-j+1}:
/// q^{n(e-ρ)} when r | gcd(g)^{d-1} and |θ| < q^{ρ-e}/|g|^{d-1}, else 0.
/// `None` when (a, r, θ) does not meet the hypotheses
/// |a| < |r| ≤ q^{e-ρ}, gcd(a, r) = 1, |rθ| < q^{-(d-1)(e-j)}.
pub fn lemma1_closed_form(
    form: &Form,
    g: &[PolyT],
    e: usize,
    j: usize,
    rho: i64,
    pt: &RationalArcPoint,
) -> Result<Option<CycloValue>> {
    solution_grad(form, g, e)?;
    let f = form.fq();
    let d = form.d() as i64;
    let u = vec_deg(g).unwrap() as i64;
    let k = e as i64 - rho;
    let ej = e as i64 - j as i64;
    if ej < 0 || u > ej || !pt.r.is_monic() {
        return Ok(None);
    }
    let dr = pt.r.deg_i64();
    let coprime = is_one(&pt.a.gcd(f, &pt.r));
    if dr > k || (!pt.a.is_zero() && pt.a.deg_i64() >= dr) || !coprime {
        return Ok(None);
    }
    if !pt.theta.abs_lt(-(d - 1) * ej - dr)? {
        return Ok(None);
    }
    let kk = gcd_all(form, g).pow(f, form.d() as u32 - 1);
    let divides = kk.rem(f, &pt.r)?.is_zero();
    let small = pt.theta.abs_lt(rho - e as i64 - (d - 1) * u)?;
    let v = if divides && small { ipow(form.q(), form.n() as i64 * k.max(0)) } else { 0 };
    Ok(Some(CycloValue::from_int(f.p(), v)))
}

fn is_one(p: &PolyT) -> bool {
    p.deg() == Some(0) && p.lead() == 1
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Lemma1Grid {
    pub points: u64,
    pub mismatches: u64,
    pub first_mismatch: Option<String>,
}

impl Lemma1Grid {
    fn merge(mut self, o: Lemma1Grid) -> Lemma1Grid {
        self.points += o.points;
        self.mismatches += o.mismatches;
        if self.first_mismatch.is_none() {
            self.first_mismatch = o.first_mismatch;
        }
        self
    }
}

/// Compares the closed form with `s_beta_direct` on every β = a/r + θ with
/// r monic, deg r ≤ min(max_r_deg, e-ρ), a coprime to r, and θ running over
/// all coefficient patterns allowed by |rθ| < q^{-(d-1)(e-j)} down to the
/// depth S depends on. Coefficients below that depth, down to T^{-prec}, are
/// drawn from `rng`.
#[allow(clippy::too_many_arguments)]
pub fn lemma1_grid<R: Rng>(
    form: &Form,
    g: &[PolyT],
    e: usize,
    j: usize,
    rho: i64,
    max_r_deg: usize,
    prec: i64,
    rng: &mut R,
) -> Result<Lemma1Grid> {
    let f = form.fq();
    let q = f.q();
    let d = form.d() as i64;
    let depth = s_beta_depth(form.d(), e, rho);
    ensure(prec >= depth, || format!("precision {prec} below the depth {depth} S needs"))?;
    let rmax = (max_r_deg as i64).min(e as i64 - rho);
    let mut tasks = Vec::new();
    for dr in 0..=rmax {
        for r in monics_of_degree(q, dr as usize) {
            for ai in 0..(q as u64).pow(dr as u32) {
                let a = PolyT::from_index(q, ai, dr as usize);
                if !is_one(&a.gcd(f, &r)) {
                    continue;
                }
                let top = -(dr + (d - 1) * (e as i64 - j as i64) + 1);
                let free = (top + depth + 1).max(0) as u32;
                let seeded_from = top.min(-depth - 1);
                // one seeded tail per θ, drawn up front so the result is thread-count independent
                let tails: Vec<Vec<u32>> = (0..(q as u64).pow(free))
                    .map(|_| (0..(seeded_from + prec + 1).max(0)).map(|_| rng.gen_range(0..q)).collect())
                    .collect();
                tasks.push((a, r.clone(), top, free, seeded_from, tails));
            }
        }
    }
    tasks
        .par_iter()
        .map(|(a, r, top, free, seeded_from, tails)| -> Result<Lemma1Grid> {
            let mut out = Lemma1Grid::default();
            let center = laurent_expand(f, a, r, prec)?;
            for (ti, tail) in tails.iter().enumerate() {
                let mut terms = Vec::new();
                let mut x = ti as u64;
                for s in 0..*free as i64 {
                    terms.push((top - s, (x % q as u64) as u32));
                    x /= q as u64;
                }
                for (s, &c) in tail.iter().enumerate() {
                    terms.push((seeded_from - s as i64, c));
                }
                let theta = Laurent::from_terms(&terms);
                let beta = center.add(f, &theta);
                let direct = s_beta_direct(form, g, e, rho, &beta)?;
                let pt = RationalArcPoint { a: a.clone(), r: r.clone(), theta };
                let closed = lemma1_closed_form(form, g, e, j, rho, &pt)?
                    .ok_or_else(|| Error::assertion("grid point violates the hypotheses"))?;
                out.points += 1;
                if closed != direct {
                    out.mismatches += 1;
                    if out.first_mismatch.is_none() {
                        out.first_mismatch = Some(format!("a={:?} r={:?} direct={direct} closed={closed}", a, r));
                    }
                }
            }
            Ok(out)
        })
        .try_reduce(Lemma1Grid::default, |a, b| Ok(a.merge(b)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntegralMethod {
    /// Average of S over every truncation of β.
    Average,
    /// q^{n(e-ρ) - rank} from the linear conditions on the coefficients of β.
    Rank,
}

/// ∫_𝕋 S(β) dβ.
pub fn integral_s_beta(
    form: &Form,
    g: &[PolyT],
    e: usize,
    rho: i64,
    method: IntegralMethod,
    budget: u128,
) -> Result<BigRational> {
    let grad = solution_grad(form, g, e)?;
    let q = form.q();
    let k = e as i64 - rho;
    let depth = s_beta_depth(form.d(), e, rho);
    match method {
        IntegralMethod::Average => {
            let count = (q as u128).checked_pow(depth as u32).unwrap_or(u128::MAX);
            check_budget("torus average", count, budget)?;
            let total = (0..count as u64)
                .into_par_iter()
                .map(|idx| s_beta_grad(form, &grad, k, &Laurent::from_frac_index(q, idx, depth as usize)))
                .try_reduce(|| 0i128, |a, b| Ok(a + b))?;
            Ok(BigRational::new(total.into(), BigInt::from(q).pow(depth as u32)))
        }
        IntegralMethod::Rank => Ok(qpow(q, form.n() as i64 * k.max(0) - torus_rank(form.fq(), &grad, k, depth) as i64)),
    }
}

/// Rank of β ↦ (coefficient of T^{-1-t} in β·F_i)_{i, t<k} on β of the given depth.
fn torus_rank(f: &FqCtx, grad: &[PolyT], k: i64, depth: i64) -> usize {
    if k <= 0 {
        return 0;
    }
    let rows = grad.len() * k as usize;
    let cols = depth as usize;
    let mut m = vec![0u32; rows * cols];
    for (i, fi) in grad.iter().enumerate() {
        for t in 0..k {
            let row = i * k as usize + t as usize;
            for c in 1..=depth {
                // T^{-c}·T^{m} contributes to T^{-1-t} when m = c-1-t
                let mi = c - 1 - t;
                if mi >= 0 {
                    m[row * cols + (c - 1) as usize] = fi.coeff(mi as usize);
                }
            }
        }
    }
    linalg::rank(f, &mut m, rows, cols)
}

/// ∫_{𝔑_j} S(β) dβ together with the main term
/// q^{(n-1)(e-ρ)} |gcd g|^{d-1} / |g|^{d-1}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MajorIntegral {
    pub value: BigRational,
    pub main: BigRational,
    pub discrepancy: BigRational,
    /// Whether either error condition holds for g.
    pub flagged: bool,
}

impl MajorIntegral {
    /// The discrepancy vanishes for unflagged g and never exceeds the main term.
    pub fn within_envelope(&self) -> bool {
        if self.flagged {
            self.discrepancy.abs() <= self.main
        } else {
            self.discrepancy.is_zero()
        }
    }
}

/// Exact major arc integral from the sum over r | gcd(g)^{d-1} with |r| ≤ q^{e-ρ}.
pub fn major_integral(form: &Form, g: &[PolyT], e: usize, j: usize, rho: i64) -> Result<MajorIntegral> {
    solution_grad(form, g, e)?;
    if rho > e as i64 {
        return Err(Error::invalid("major arcs need e ≥ ρ"));
    }
    let ej = e as i64 - j as i64;
    let u = vec_deg(g).unwrap() as i64;
    if u > ej {
        return Err(Error::invalid(format!("deg g = {u} exceeds e - j = {ej}")));
    }
    let gcd = gcd_all(form, g);
    Ok(major_from_gcd(form, &gcd, u, e as i64, j as i64, rho))
}

fn major_from_gcd(form: &Form, gcd: &PolyT, u: i64, e: i64, j: i64, rho: i64) -> MajorIntegral {
    let f = form.fq();
    let (q, n, d) = (form.q(), form.n() as i64, form.d() as i64);
    let k = e - rho;
    let (_, fs) = factor(f, gcd).expect("nonzero gcd");
    let fs: Vec<(PolyT, u32)> = fs.into_iter().map(|(p, m)| (p, m * (d as u32 - 1))).collect();
    let mut value = BigRational::zero();
    for r in monic_divisors(f, &fs) {
        let dr = r.deg_i64();
        if dr > k {
            continue;
        }
        let vol = (rho - e - (d - 1) * u).min(-dr - (d - 1) * (e - j));
        let phi = euler_phi(f, &r).expect("monic divisor");
        value += BigRational::from_integer(phi.into()) * qpow(q, n * k + vol);
    }
    let dg = gcd.deg_i64();
    let main = qpow(q, (n - 1) * k + (d - 1) * (dg - u));
    let big_d = k.div_euclid(d - 1);
    let flagged = j + big_d + 1 + u <= dg + e || dg > big_d;
    let discrepancy = &value - &main;
    MajorIntegral { value, main, discrepancy, flagged }
}

/// ∫_{𝔑_j} S(β) dβ as the average of S·1_{𝔑_j} over every truncation of β.
pub fn major_integral_average(
    form: &Form,
    g: &[PolyT],
    e: usize,
    j: usize,
    rho: i64,
    budget: u128,
) -> Result<BigRational> {
    let grad = solution_grad(form, g, e)?;
    let q = form.q();
    let d = form.d() as i64;
    let k = e as i64 - rho;
    let ej = e as i64 - j as i64;
    let depth = s_beta_depth(form.d(), e, rho).max((d - 1) * ej + k);
    let count = (q as u128).checked_pow(depth as u32).unwrap_or(u128::MAX);
    check_budget("major arc average", count, budget)?;
    let total = (0..count as u64)
        .into_par_iter()
        .map(|idx| -> Result<i128> {
            let beta = Laurent::from_frac_index(q, idx, depth as usize);
            if arcs::member_brute(form.fq(), &beta, k, -(d - 1) * ej)?.is_none() {
                return Ok(0);
            }
            s_beta_grad(form, &grad, k, &beta)
        })
        .try_reduce(|| 0i128, |a, b| Ok(a + b))?;
    Ok(BigRational::new(total.into(), BigInt::from(q).pow(depth as u32)))
}

/// N_ρ split into the major arc part Σ_j c_j Σ_g ∫_{𝔑_j} S and the rest.
#[derive(Clone, Debug)]
pub struct NRhoSplit {
    pub major: BigRational,
    pub minor: BigRational,
    pub n_rho: BigRational,
    /// Σ_j c_j Σ_g of the main terms.
    pub main_sum: BigRational,
    pub n: u128,
    /// Number of (j, g) pairs meeting an error condition.
    pub flagged: u64,
    pub checks: Vec<Check>,
}

#[derive(Clone, Default)]
struct SplitAcc {
    major: BigRational,
    torus: BigRational,
    main: BigRational,
    flagged: u64,
    outside: u64,
}

impl SplitAcc {
    fn merge(mut self, o: SplitAcc) -> SplitAcc {
        self.major += o.major;
        self.torus += o.torus;
        self.main += o.main;
        self.flagged += o.flagged;
        self.outside += o.outside;
        self
    }
}

/// c_0 = 1, c_1 = -(q+1), c_2 = q.
pub fn c_j(q: u32, j: usize) -> i64 {
    match j {
        0 => 1,
        1 => -(q as i64 + 1),
        2 => q as i64,
        _ => 0,
    }
}

pub fn n_rho_split(form: &Form, e: usize, rho: i64, budget: u128) -> Result<NRhoSplit> {
    if rho > e as i64 {
        return Err(Error::invalid("the split needs e ≥ ρ"));
    }
    let f = form.fq();
    let q = f.q();
    let (n, d) = (form.n() as i64, form.d() as i64);
    let k = e as i64 - rho;
    let depth = s_beta_depth(form.d(), e, rho);
    let mut major = BigRational::zero();
    let mut torus = BigRational::zero();
    let mut main_sum = BigRational::zero();
    let mut flagged = 0u64;
    let mut outside = 0u64;
    for j in 0..=e.min(2) {
        let pbox = PolyBox::new(q, e - j);
        let acc = fold_solutions(
            form,
            &pbox,
            budget,
            SplitAcc::default,
            |acc: &mut SplitAcc, idx| {
                if !is_class_rep(&pbox, idx) {
                    return;
                }
                let g = pbox.decode(idx);
                let grad = form.grad(&g).expect("arity");
                let u = vec_deg(&g).unwrap() as i64;
                let m = major_from_gcd(form, &gcd_all(form, &g), u, e as i64, j as i64, rho);
                acc.torus += qpow(q, n * k.max(0) - torus_rank(f, &grad, k, depth) as i64);
                if m.flagged {
                    acc.flagged += 1;
                }
                if !m.within_envelope() {
                    acc.outside += 1;
                }
                acc.major += m.value;
                acc.main += m.main;
            },
            SplitAcc::merge,
        )?;
        let w = BigRational::from_integer(BigInt::from(c_j(q, j) * (q as i64 - 1)));
        major += &acc.major * &w;
        torus += &acc.torus * &w;
        main_sum += &acc.main * &w;
        flagged += acc.flagged * (q as u64 - 1);
        outside += acc.outside;
    }
    let minor = &torus - &major;
    let n_rho = BigRational::from_integer(BigInt::from(count_n_rho(form, e, rho, budget)?));
    let n_count = count_n(form, e, budget)?;
    let n_big = BigRational::from_integer(BigInt::from(n_count));
    let scale = qpow(q, rho * (n - 1) - e as i64 * (n - d));
    let mut checks = vec![
        Check::new("partition", &major + &minor == n_rho),
        Check::new("main_terms_give_n", &main_sum * &scale == n_big),
        Check::new("major_envelope", outside == 0).with_detail(format!("{outside} curves outside")),
    ];
    checks.push(if flagged == 0 {
        Check::new("major_gives_n", &major * &scale == n_big)
    } else {
        Check::skip("major_gives_n", format!("{flagged} curves meet an error condition"))
    });
    Ok(NRhoSplit { major, minor, n_rho, main_sum, n: n_count, flagged, checks })
}

impl NRhoSplit {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| !c.failed())
    }
}
