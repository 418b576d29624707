//! Anticanonical heights, Peyre's freeness ℓ(x) and the counting functions
//! N_X(B), N_X^{ε-free}(B) for X = {f = 0} over K = F_q(T).
//!
//! A point x ∈ X(K) is a primitive tuple g up to scalars; its height is
//! q^{e(n-d)} with e = deg g, and ℓ(x) = (n-1)ρ/(e(n-d)) when the map is
//! ρ-free but not (ρ+1)-free.

pub mod bounds;
pub mod density;

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::curves::census::{gcd_all, is_class_rep};
use crate::curves::{fold_solutions, CurveBundles, CurveTuple, PolyBox};
use crate::error::{Error, Result};
use crate::ff_arith::{mobius, monics_of_degree, PolyT};
use crate::forms::Form;
use crate::report::{qpow, ser, Check};

pub use bounds::{theorem_report, ArcBounds, TheoremReport};
pub use density::{c_x_estimate, local_density, residue_counts, zeta_fq_t, DensityEstimate, PrimeDensity};

/// Conventions for ℓ that the definition leaves open.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct EllConvention {
    /// ℓ of a constant map: 1 when set, else 0.
    pub constant_ell_one: bool,
    /// Clamp ℓ to [0, 1] (ε is clamped alongside).
    pub clamp: bool,
}

impl Default for EllConvention {
    fn default() -> Self {
        EllConvention { constant_ell_one: true, clamp: true }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HeightPoint {
    pub e: usize,
    /// log_q H_{-ω_X}(x) = e(n-d)
    pub height_exp: i64,
    /// `None` for constant maps
    pub rho_max: Option<i64>,
    #[serde(serialize_with = "ser::rat")]
    pub ell: BigRational,
    /// The unclamped value (n-1)ρ_max/(e(n-d)).
    #[serde(serialize_with = "ser::opt_rat")]
    pub raw_ell: Option<BigRational>,
    pub clamped: bool,
    pub constant: bool,
}

fn check_dims(form: &Form) -> Result<()> {
    if form.n() <= form.d() || form.n() < 3 {
        return Err(Error::invalid("heights need n > d and n ≥ 3"));
    }
    Ok(())
}

/// ℓ for a map of degree e with the given ρ_max; returns (ℓ, raw, clamped).
pub fn ell_value(
    n: usize,
    d: usize,
    e: usize,
    rho_max: i64,
    conv: EllConvention,
) -> (BigRational, Option<BigRational>, bool) {
    if e == 0 {
        let v = if conv.constant_ell_one { BigRational::one() } else { BigRational::zero() };
        return (v, None, false);
    }
    let raw = BigRational::new(BigInt::from((n as i64 - 1) * rho_max), BigInt::from(e as i64 * (n - d) as i64));
    if !conv.clamp {
        return (raw.clone(), Some(raw), false);
    }
    let v = raw.clone().max(BigRational::zero()).min(BigRational::one());
    let clamped = v != raw;
    (v, Some(raw), clamped)
}

pub fn height_and_ell(form: &Form, g: &[PolyT], conv: EllConvention) -> Result<HeightPoint> {
    check_dims(form)?;
    let c = CurveTuple::new(form, g.to_vec())?;
    let (n, d, e) = (form.n(), form.d(), c.e());
    let rho_max = if e == 0 { None } else { Some(CurveBundles::new(form, &c).rho_max()?) };
    let (ell, raw_ell, clamped) = ell_value(n, d, e, rho_max.unwrap_or(0), conv);
    Ok(HeightPoint { e, height_exp: (e * (n - d)) as i64, rho_max, ell, raw_ell, clamped, constant: e == 0 })
}

/// ρ = ⌊εB/(n-1)⌋ + 2.
pub fn rho_of_eps(b: i64, eps: &BigRational, n: usize) -> i64 {
    let x = eps * BigRational::from_integer(b.into()) / BigRational::from_integer((n as i64 - 1).into());
    x.floor().to_integer().to_i64().expect("ρ out of range") + 2
}

/// The threshold r with ℓ < ε ⇔ not r-free for maps of degree e ≥ 1, i.e.
/// r = ⌈ε e(n-d)/(n-1)⌉; `None` when no map has ℓ < ε.
fn eps_threshold(n: usize, d: usize, e: usize, eps: &BigRational, conv: EllConvention) -> Option<i64> {
    let eps = effective_eps(eps, conv);
    if conv.clamp && eps.is_zero() {
        return None;
    }
    let x = eps * BigRational::new(BigInt::from(e * (n - d)), BigInt::from(n - 1));
    Some(x.ceil().to_integer().to_i64().expect("threshold out of range"))
}

fn effective_eps(eps: &BigRational, conv: EllConvention) -> BigRational {
    if conv.clamp {
        eps.clone().max(BigRational::zero()).min(BigRational::one())
    } else {
        eps.clone()
    }
}

#[derive(Clone, Debug, Default)]
struct Acc {
    /// nonzero solutions by max degree
    all: Vec<u128>,
    /// primitive solutions by max degree
    prim: Vec<u128>,
    /// (e, ρ_max) → primitive classes
    rho_hist: BTreeMap<(usize, i64), u64>,
    /// e → classes with ℓ < ε, from the freeness threshold
    below_eps: BTreeMap<usize, u64>,
    /// e → classes that are not ρ-free
    not_free: BTreeMap<usize, u64>,
    /// e → Σ over classes of q^{h0_twist(ρ)}
    n_rho: BTreeMap<usize, BigUint>,
    errors: Vec<String>,
}

impl Acc {
    fn new(len: usize) -> Self {
        Acc { all: vec![0; len], prim: vec![0; len], ..Default::default() }
    }

    fn merge(mut self, o: Acc) -> Acc {
        for (a, b) in self.all.iter_mut().zip(o.all) {
            *a += b;
        }
        for (a, b) in self.prim.iter_mut().zip(o.prim) {
            *a += b;
        }
        for (k, v) in o.rho_hist {
            *self.rho_hist.entry(k).or_default() += v;
        }
        for (k, v) in o.below_eps {
            *self.below_eps.entry(k).or_default() += v;
        }
        for (k, v) in o.not_free {
            *self.not_free.entry(k).or_default() += v;
        }
        for (k, v) in o.n_rho {
            *self.n_rho.entry(k).or_default() += v;
        }
        self.errors.extend(o.errors);
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EllBucket {
    pub e: usize,
    #[serde(serialize_with = "ser::rat")]
    pub ell: BigRational,
    #[serde(serialize_with = "ser::dec")]
    pub points: u128,
}

#[derive(Clone, Debug, Serialize)]
pub struct DegreeRow {
    pub e: usize,
    #[serde(serialize_with = "ser::dec")]
    pub points: u128,
    /// points of degree e that are not ρ-free
    #[serde(serialize_with = "ser::dec")]
    pub not_rho_free: u128,
    /// (N_ρ q^{ρ(n-1)-e(n-d)} - N)/(q-1)², for e ≥ 1
    #[serde(serialize_with = "ser::opt_rat")]
    pub unfree_bound: Option<BigRational>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PeyreReport {
    pub b: i64,
    #[serde(serialize_with = "ser::rat")]
    pub eps: BigRational,
    pub convention: EllConvention,
    /// maps of degree ≤ B/(n-d) are counted
    pub max_degree: Option<usize>,
    #[serde(serialize_with = "ser::dec")]
    pub n_x: u128,
    #[serde(serialize_with = "ser::rat")]
    pub n_x_mobius: BigRational,
    #[serde(serialize_with = "ser::dec")]
    pub n_x_eps_free: u128,
    #[serde(serialize_with = "ser::dec")]
    pub e_eps: u128,
    /// ρ = ⌊εB/(n-1)⌋ + 2
    pub rho: i64,
    #[serde(serialize_with = "ser::dec")]
    pub not_rho_free: u128,
    pub degrees: Vec<DegreeRow>,
    pub ell_histogram: Vec<EllBucket>,
    pub checks: Vec<Check>,
}

impl PeyreReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| !c.failed())
    }
}

/// N_X(B), N_X^{ε-free}(B), E_ε(B) and the not-ρ-free count for
/// ρ = rho_of_eps(B, ε), from one enumeration of the maps of degree ≤ B/(n-d).
pub fn peyre_report(form: &Form, b: i64, eps: &BigRational, conv: EllConvention, budget: u128) -> Result<PeyreReport> {
    check_dims(form)?;
    if eps.is_negative() {
        return Err(Error::invalid("ε must be non-negative"));
    }
    let (n, d, q) = (form.n(), form.d(), form.q());
    let rho = rho_of_eps(b, eps, n);
    let q1 = (q - 1) as u128;
    let empty = PeyreReport {
        b,
        eps: eps.clone(),
        convention: conv,
        max_degree: None,
        n_x: 0,
        n_x_mobius: BigRational::zero(),
        n_x_eps_free: 0,
        e_eps: 0,
        rho,
        not_rho_free: 0,
        degrees: vec![],
        ell_histogram: vec![],
        checks: vec![],
    };
    if b < 0 {
        return Ok(empty);
    }
    let emax = (b / (n - d) as i64) as usize;
    let pbox = PolyBox::new(q, emax);
    let acc = fold_solutions(
        form,
        &pbox,
        budget,
        || Acc::new(emax + 1),
        |acc, idx| {
            if idx.iter().all(|&i| i == 0) {
                return;
            }
            let g = pbox.decode(idx);
            let e = g.iter().filter_map(|x| x.deg()).max().unwrap();
            acc.all[e] += 1;
            if gcd_all(form, &g).deg() != Some(0) {
                return;
            }
            acc.prim[e] += 1;
            if is_class_rep(&pbox, idx) {
                if let Err(err) = classify(form, g, e, eps, rho, conv, acc) {
                    acc.errors.push(err.to_string());
                }
            }
        },
        Acc::merge,
    )?;
    if let Some(first) = acc.errors.iter().min() {
        return Err(Error::assertion(format!("per-curve analysis failed: {first}")));
    }

    let n_x = acc.prim.iter().sum::<u128>() / q1;
    let n_x_mobius = mobius_count(form, &acc.all, emax)?;
    let mut hist: BTreeMap<(usize, BigRational), u128> = BTreeMap::new();
    for (&(e, rm), &c) in &acc.rho_hist {
        let (ell, _, _) = ell_value(n, d, e, rm, conv);
        *hist.entry((e, ell)).or_default() += c as u128;
    }
    let eps_eff = effective_eps(eps, conv);
    let n_x_eps_free: u128 = hist.iter().filter(|((_, l), _)| *l >= eps_eff).map(|(_, &c)| c).sum();
    let e_eps: u128 = acc.below_eps.values().map(|&c| c as u128).sum();
    let not_rho_free: u128 = acc.not_free.values().map(|&c| c as u128).sum();

    let mut degrees = Vec::new();
    let mut bound_ok = true;
    for e in 0..=emax {
        let points = acc.prim[e] / q1;
        let nf = acc.not_free.get(&e).copied().unwrap_or(0) as u128;
        let unfree_bound = (e > 0).then(|| {
            let nr = BigRational::from_integer(acc.n_rho.get(&e).cloned().unwrap_or_default().into());
            let shift = rho * (n as i64 - 1) - (e * (n - d)) as i64;
            let num = nr * qpow(q, shift) - BigRational::from_integer(acc.prim[e].into());
            num / BigRational::from_integer(BigInt::from(q1 * q1))
        });
        if let Some(ub) = &unfree_bound {
            bound_ok &= BigRational::from_integer(nf.into()) <= *ub;
        }
        degrees.push(DegreeRow { e, points, not_rho_free: nf, unfree_bound });
    }
    let divisible = acc.prim.iter().all(|c| c % q1 == 0);
    let mut checks = vec![
        Check::new("primitive_divisible", divisible),
        Check::new("mobius_agrees", n_x_mobius == BigRational::from_integer(n_x.into())),
        Check::new("free_not", n_x_eps_free + e_eps == n_x),
        Check::new("e_eps_le_not_free", e_eps <= not_rho_free),
        Check::new("unfree_bound", bound_ok),
    ];
    if eps.is_zero() && conv.clamp {
        checks.push(Check::new("zero_free_is_all", n_x_eps_free == n_x));
    }
    Ok(PeyreReport {
        max_degree: Some(emax),
        n_x,
        n_x_mobius,
        n_x_eps_free,
        e_eps,
        not_rho_free,
        degrees,
        ell_histogram: hist.into_iter().map(|((e, ell), points)| EllBucket { e, ell, points }).collect(),
        checks,
        ..empty
    })
}

fn classify(
    form: &Form,
    g: Vec<PolyT>,
    e: usize,
    eps: &BigRational,
    rho: i64,
    conv: EllConvention,
    acc: &mut Acc,
) -> Result<()> {
    let (n, d, q) = (form.n(), form.d(), form.q());
    if e == 0 {
        // c*T_X is trivial: ρ-free exactly for ρ ≤ 0
        *acc.rho_hist.entry((0, 0)).or_default() += 1;
        let (ell, _, _) = ell_value(n, d, 0, 0, conv);
        if ell < effective_eps(eps, conv) {
            *acc.below_eps.entry(0).or_default() += 1;
        }
        if rho > 0 {
            *acc.not_free.entry(0).or_default() += 1;
        }
        return Ok(());
    }
    let c = CurveTuple::from_parts(form, g, e)?;
    let mut b = CurveBundles::new(form, &c);
    *acc.rho_hist.entry((e, b.rho_max()?)).or_default() += 1;
    if let Some(r) = eps_threshold(n, d, e, eps, conv) {
        if !b.is_rho_free(r) {
            *acc.below_eps.entry(e).or_default() += 1;
        }
    }
    if !b.is_rho_free(rho) {
        *acc.not_free.entry(e).or_default() += 1;
    }
    let h = b.h0_twist(rho) as u32;
    *acc.n_rho.entry(e).or_default() += BigUint::from(q).pow(h) * BigUint::from(q - 1);
    Ok(())
}

/// (q-1)^{-1} Σ_k μ(k) #{g ≠ 0 : |k g|^{n-d} < q^{B+1}, f(g) = 0}, with
/// `all[u]` the number of nonzero solutions of degree u.
fn mobius_count(form: &Form, all: &[u128], emax: usize) -> Result<BigRational> {
    let f = form.fq();
    let q = form.q();
    let mut total = BigInt::zero();
    for j in 0..=emax {
        let inner: u128 = all[..=emax - j].iter().sum();
        let mu_sum: i64 = monics_of_degree(q, j).map(|k| mobius(f, &k).map(i64::from)).sum::<Result<i64>>()?;
        total += BigInt::from(mu_sum) * BigInt::from(inner);
    }
    let (quo, rem) = total.div_rem(&BigInt::from(q - 1));
    Ok(if rem.is_zero() {
        BigRational::from_integer(quo)
    } else {
        BigRational::new(total, BigInt::from(q - 1))
    })
}

/// N_X(B) alone.
pub fn n_x(form: &Form, b: i64, budget: u128) -> Result<u128> {
    Ok(peyre_report(form, b, &BigRational::zero(), EllConvention::default(), budget)?.n_x)
}

/// N_X^{ε-free}(B).
pub fn n_x_eps_free(form: &Form, b: i64, eps: &BigRational, conv: EllConvention, budget: u128) -> Result<u128> {
    Ok(peyre_report(form, b, eps, conv, budget)?.n_x_eps_free)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_of_eps_examples() {
        let r = |a: i64, b: i64| BigRational::new(a.into(), b.into());
        assert_eq!(rho_of_eps(7, &r(0, 1), 4), 2);
        assert_eq!(rho_of_eps(3, &r(1, 1), 4), 3);
        let mut last = i64::MIN;
        for b in 0..20 {
            let v = rho_of_eps(b, &r(1, 3), 5);
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn ell_values() {
        let conv = EllConvention::default();
        let (l, raw, cl) = ell_value(4, 3, 1, -1, conv);
        assert_eq!(l, BigRational::zero());
        assert_eq!(raw, Some(BigRational::from_integer((-3).into())));
        assert!(cl);
        // ρ_max (n-1) = e(n-d)
        let (l, _, cl) = ell_value(5, 3, 2, 1, conv);
        assert_eq!(l, BigRational::one());
        assert!(!cl);
        assert_eq!(ell_value(5, 3, 4, 1, conv).0, BigRational::new(1.into(), 2.into()));
        let (l, raw, cl) = ell_value(4, 3, 2, 1, conv);
        assert_eq!(l, BigRational::one());
        assert_eq!(raw, Some(BigRational::new(3.into(), 2.into())));
        assert!(cl);
        let mut prev = BigRational::from_integer((-100).into());
        for r in -3..=3 {
            let (l, _, _) = ell_value(6, 3, 2, r, conv);
            assert!(l >= prev);
            prev = l;
        }
        assert_eq!(ell_value(4, 3, 0, 0, conv).0, BigRational::one());
        let off = EllConvention { constant_ell_one: false, clamp: false };
        assert_eq!(ell_value(4, 3, 0, 0, off).0, BigRational::zero());
        assert_eq!(ell_value(4, 3, 1, -1, off).0, BigRational::from_integer((-3).into()));
    }

    #[test]
    fn thresholds_match_ell() {
        // ℓ < ε ⇔ ρ_max < ⌈ε e(n-d)/(n-1)⌉
        let conv = EllConvention::default();
        for (n, d) in [(4usize, 3usize), (6, 3), (7, 4)] {
            for e in 1..4 {
                for num in 0..=8 {
                    let eps = BigRational::new(num.into(), 6.into());
                    for rm in -3..=4 {
                        let below = ell_value(n, d, e, rm, conv).0 < effective_eps(&eps, conv);
                        let via = eps_threshold(n, d, e, &eps, conv).is_some_and(|r| rm < r);
                        assert_eq!(below, via, "n={n} d={d} e={e} eps={eps} rm={rm}");
                    }
                }
            }
        }
    }
}
