//! Arc families on 𝕋:
//! 𝔐(J) = {α : |rα - a| < q^J |P₀|^{-d} for some monic |r| ≤ q^J},
//! 𝔑(K) = {β : |rβ - a| < q^K / (|P₀|^{d-1}|Q|) for some monic |r| ≤ q^K},
//! and 𝔑_j, which is 𝔑(e-ρ).

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::weyl::{weyl_checks, WeylReport};
use super::{require_depth, require_frac};
use crate::curves::enumerate::check_budget;
use crate::error::{Error, Result};
use crate::ff_arith::{convergents, laurent_expand, monics_of_degree, FqCtx, Laurent, PolyT, RationalArcPoint};
use crate::forms::Form;
use crate::report::ser;

/// Box and arc parameters for one value of j.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ArcParams {
    pub d: i64,
    pub e: i64,
    pub j: i64,
    pub rho: i64,
}

impl ArcParams {
    pub fn new(d: usize, e: usize, j: usize, rho: i64) -> Result<Self> {
        if d < 3 {
            return Err(Error::invalid("d must be at least 3"));
        }
        if j > e {
            return Err(Error::invalid("j exceeds e"));
        }
        Ok(ArcParams { d: d as i64, e: e as i64, j: j as i64, rho })
    }

    /// log_q |P₀| = e - j
    pub fn p0(&self) -> i64 {
        self.e - self.j
    }

    /// log_q |P| = e - j + 1
    pub fn p(&self) -> i64 {
        self.e - self.j + 1
    }

    /// log_q |Q| = e - ρ
    pub fn q(&self) -> i64 {
        self.e - self.rho
    }

    /// ⌈d(e-j)/2⌉
    pub fn m(&self) -> i64 {
        ceil_half(self.d * self.p0())
    }

    /// ⌈((e-j)(d-1) + e - ρ)/2⌉
    pub fn n(&self) -> i64 {
        ceil_half(self.p0() * (self.d - 1) + self.q())
    }

    /// ⌊(e-ρ)/(d-1)⌋
    pub fn big_d(&self) -> i64 {
        self.q().div_euclid(self.d - 1)
    }

    pub fn minor_arcs_exist(&self) -> bool {
        (self.d - 1) * self.p0() > self.q()
    }

    /// log_q of the radius of 𝔐(J).
    pub fn m_radius(&self, jj: i64) -> i64 {
        jj - self.d * self.p0()
    }

    /// log_q of the radius of 𝔑(K).
    pub fn n_radius(&self, k: i64) -> i64 {
        k - (self.d - 1) * self.p0() - self.q()
    }

    /// 1 + ⌊J/(d-1)⌋, also used for l₂ with K in place of J.
    pub fn l_of(&self, x: i64) -> i64 {
        1 + x.div_euclid(self.d - 1)
    }

    /// e - j + 1 - l
    pub fn s_of(&self, x: i64) -> i64 {
        self.p() - self.l_of(x)
    }

    /// Depth of α that S(α, β) and N(α; e-j+1) depend on.
    pub fn alpha_depth(&self) -> i64 {
        self.d * self.p0() + 1
    }

    /// Depth of β that S(α, β) and N(β; e-ρ) depend on.
    pub fn beta_depth(&self) -> i64 {
        (self.d - 1) * self.p0() + self.q().max(0)
    }
}

fn ceil_half(x: i64) -> i64 {
    (x + 1).div_euclid(2)
}

/// Whether |r x - a| < q^radius for some monic r with deg r ≤ max_deg and
/// |a| < |r| coprime, with the best such (a, r, θ) as witness.
///
/// The last continued-fraction convergent with deg ≤ max_deg minimizes
/// |rx - a| over all such r, so it decides membership. A truncated x must be
/// known down to T^{radius - max_deg}; its truncation is then treated as exact.
pub fn member(f: &FqCtx, x: &Laurent, max_deg: i64, radius: i64) -> Result<Option<RationalArcPoint>> {
    require_frac(x)?;
    if max_deg < 0 {
        return Ok(None);
    }
    require_depth(x, max_deg - radius)?;
    let exact = match x.known_from() {
        Some(l) => Laurent::exact(l, (l..0).map(|e| x.coeff_unchecked(e)).collect()),
        None => x.clone(),
    };
    let (cv, finished) = convergents(f, &exact, max_deg)?;
    let (a, r) = cv.last().cloned().unwrap();
    let resid = exact.mul_poly(f, &r).sub(f, &Laurent::from_poly(&a));
    if !resid.abs_lt(radius)? {
        return Ok(None);
    }
    let depth = exact.known_from().map(|l| -l).unwrap_or(0).max(-radius + max_deg + 1);
    let theta = match x.known_from() {
        Some(l) => x.sub(f, &laurent_expand(f, &a, &r, -l)?),
        None if finished => Laurent::zero(),
        None => x.sub(f, &laurent_expand(f, &a, &r, depth)?),
    };
    Ok(Some(RationalArcPoint { a, r, theta }))
}

/// Membership by trying every monic r with deg r ≤ max_deg.
pub(crate) fn member_brute(f: &FqCtx, x: &Laurent, max_deg: i64, radius: i64) -> Result<Option<PolyT>> {
    for dr in 0..=max_deg {
        for r in monics_of_degree(f.q(), dr as usize) {
            if x.mul_poly(f, &r).frac_lt(radius)? {
                return Ok(Some(r));
            }
        }
    }
    Ok(None)
}

pub fn in_m(f: &FqCtx, alpha: &Laurent, params: &ArcParams, jj: i64) -> Result<Option<RationalArcPoint>> {
    member(f, alpha, jj, params.m_radius(jj))
}

pub fn in_n(f: &FqCtx, beta: &Laurent, params: &ArcParams, k: i64) -> Result<Option<RationalArcPoint>> {
    member(f, beta, k, params.n_radius(k))
}

/// 𝔑_j: |r| ≤ q^{e-ρ} and |rβ - a| < q^{-(d-1)(e-j)}.
pub fn in_n_j(f: &FqCtx, beta: &Laurent, params: &ArcParams) -> Result<Option<RationalArcPoint>> {
    member(f, beta, params.q(), -(params.d - 1) * params.p0())
}

/// The J in [-1, M-1] with α ∈ 𝔐(J+1) \ 𝔐(J).
pub fn m_level(f: &FqCtx, alpha: &Laurent, params: &ArcParams) -> Result<i64> {
    for jj in -1..params.m() {
        if in_m(f, alpha, params, jj + 1)?.is_some() {
            return Ok(jj);
        }
    }
    Err(Error::assertion("α lies outside 𝔐(M)"))
}

/// `None` for β ∈ 𝔑_j, otherwise the K in [e-ρ, N-1] with β ∈ 𝔑(K+1) \ 𝔑(K).
pub fn n_level(f: &FqCtx, beta: &Laurent, params: &ArcParams) -> Result<Option<i64>> {
    if in_n_j(f, beta, params)?.is_some() {
        return Ok(None);
    }
    for k in params.q()..params.n() {
        if in_n(f, beta, params, k + 1)?.is_some() {
            return Ok(Some(k));
        }
    }
    Err(Error::assertion("β lies outside 𝔑(N)"))
}

/// Measure of {x : level(x) = target} over all truncations of the given depth.
fn level_measure<F>(q: u32, depth: i64, budget: u128, level: F) -> Result<Vec<(i64, BigRational)>>
where
    F: Fn(&Laurent) -> Result<i64> + Sync,
{
    use rayon::prelude::*;
    let count = (q as u128).pow(depth as u32);
    check_budget("arc measure", count, budget)?;
    let levels: Vec<i64> =
        (0..count as u64).into_par_iter().map(|i| level(&Laurent::from_frac_index(q, i, depth as usize))).collect::<Result<_>>()?;
    let mut hist = std::collections::BTreeMap::new();
    for l in levels {
        *hist.entry(l).or_insert(0u64) += 1;
    }
    let total = BigInt::from(count);
    Ok(hist.into_iter().map(|(l, c)| (l, BigRational::new(c.into(), total.clone()))).collect())
}

/// One sampled point (α, β) of the arcs table.
#[derive(Clone, Debug, Serialize)]
pub struct ArcRow {
    pub j: i64,
    /// α ∈ 𝔐(J+1) \ 𝔐(J)
    pub big_j: i64,
    /// β ∈ 𝔑(K+1) \ 𝔑(K), or `None` on 𝔑_j
    pub big_k: Option<i64>,
    pub label: String,
    /// log_q of the 𝔐(J+1) radius q^{J+1}|P₀|^{-d}
    pub alpha_radius_exp: i64,
    /// log_q of the 𝔑(K+1) radius, or of the 𝔑_j radius
    pub beta_radius_exp: i64,
    /// Exact measure of the α annulus, when enumerable within budget.
    #[serde(serialize_with = "ser::opt_rat")]
    pub alpha_measure: Option<BigRational>,
    #[serde(serialize_with = "ser::opt_rat")]
    pub beta_measure: Option<BigRational>,
    pub weyl: WeylReport,
}

/// Samples `samples` seeded points (α, β) for each j ≤ min(e, 2) and locates
/// them in the arc families, evaluating S(α, β) and both Weyl inequalities.
pub fn arcs_table(form: &Form, e: usize, rho: i64, samples: usize, seed: u64, budget: u128) -> Result<Vec<ArcRow>> {
    if rho > e as i64 {
        return Err(Error::invalid("arcs need e ≥ ρ"));
    }
    let f = form.fq();
    let q = f.q();
    let mut rows = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for j in 0..=e.min(2) {
        let params = ArcParams::new(form.d(), e, j, rho)?;
        let am = level_measure(q, params.alpha_depth() - 1, budget, |x| m_level(f, x, &params)).ok();
        let bm = level_measure(q, params.beta_depth(), budget, |x| {
            Ok(n_level(f, x, &params)?.unwrap_or(i64::MIN))
        })
        .ok();
        for _ in 0..samples {
            let alpha = Laurent::random_frac(&mut rng, q, params.alpha_depth() as usize);
            let beta = Laurent::random_frac(&mut rng, q, params.beta_depth() as usize);
            let big_j = m_level(f, &alpha, &params)?;
            let big_k = n_level(f, &beta, &params)?;
            let weyl = weyl_checks(form, &alpha, &beta, &params, budget)?;
            let label = match big_k {
                Some(k) => format!("M({})\\M({}) x N({})\\N({})", big_j + 1, big_j, k + 1, k),
                None => format!("M({})\\M({}) x N_{j}", big_j + 1, big_j),
            };
            let find = |m: &Option<Vec<(i64, BigRational)>>, key: i64| {
                m.as_ref().and_then(|v| v.iter().find(|(l, _)| *l == key).map(|(_, x)| x.clone()))
            };
            rows.push(ArcRow {
                j: j as i64,
                big_j,
                big_k,
                label,
                alpha_radius_exp: params.m_radius(big_j + 1),
                beta_radius_exp: match big_k {
                    Some(k) => params.n_radius(k + 1),
                    None => -(params.d - 1) * params.p0(),
                },
                alpha_measure: find(&am, big_j),
                beta_measure: find(&bm, big_k.unwrap_or(i64::MIN)),
                weyl,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn f5() -> FqCtx {
        FqCtx::prime(5).unwrap()
    }

    #[test]
    fn params_example() {
        let p = ArcParams::new(3, 2, 0, 0).unwrap();
        assert_eq!((p.m(), p.n(), p.big_d()), (3, 3, 1));
        assert!(p.minor_arcs_exist());
        assert_eq!(p.l_of(2), 2);
        assert_eq!(p.s_of(2), 1);
        assert!(ArcParams::new(3, 1, 2, 0).is_err());
    }

    #[test]
    fn zero_and_empty() {
        let f = f5();
        let p = ArcParams::new(3, 2, 0, 0).unwrap();
        for jj in 0..4 {
            let w = in_m(&f, &Laurent::zero(), &p, jj).unwrap().unwrap();
            assert_eq!((w.a, w.r), (PolyT::zero(), PolyT::one()));
            assert!(w.theta.abs_exp().unwrap().is_none());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let x = Laurent::random_frac(&mut rng, 5, 7);
            assert!(in_m(&f, &x, &p, -1).unwrap().is_none());
        }
    }

    #[test]
    fn convergents_agree_with_brute_force() {
        let f = f5();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..400 {
            let x = Laurent::random_frac(&mut rng, 5, 7);
            let max_deg = rng.gen_range(0..3);
            let radius = rng.gen_range(-7 + max_deg..0);
            let a = member(&f, &x, max_deg, radius).unwrap();
            let b = member_brute(&f, &x, max_deg, radius).unwrap();
            assert_eq!(a.is_some(), b.is_some(), "{x:?} {max_deg} {radius}");
            if let Some(w) = a {
                assert!(w.r.deg_i64() <= max_deg);
                assert!(w.theta.mul_poly(&f, &w.r).abs_lt(radius).unwrap());
            }
        }
    }

    #[test]
    fn monotone_and_covering() {
        let f = f5();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (e, j, rho) in [(2usize, 0usize, 0i64), (2, 1, 1), (3, 0, -1)] {
            let p = ArcParams::new(3, e, j, rho).unwrap();
            assert!(in_n(&f, &Laurent::from_terms(&[(-1, 1)]), &p, p.q()).is_ok());
            for _ in 0..100 {
                let x = Laurent::random_frac(&mut rng, 5, 12);
                let mut prev = false;
                for jj in -1..=p.m() {
                    let now = in_m(&f, &x, &p, jj).unwrap().is_some();
                    assert!(!prev || now);
                    prev = now;
                }
                assert!(prev, "𝔐(M) covers 𝕋");
                assert_eq!(in_n(&f, &x, &p, p.q()).unwrap().is_some(), in_n_j(&f, &x, &p).unwrap().is_some());
                assert!(in_n(&f, &x, &p, p.n()).unwrap().is_some());
                n_level(&f, &x, &p).unwrap();
            }
        }
    }

    #[test]
    fn truncated_input_precision() {
        let f = f5();
        let x = Laurent::truncated(-3, vec![1, 0, 2]);
        assert!(member(&f, &x, 1, -4).is_err());
        assert!(member(&f, &x, 1, -2).is_ok());
    }
}
