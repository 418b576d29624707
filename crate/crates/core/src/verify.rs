//! End-to-end acceptance criteria, shared by the `acceptance` test target and
//! the `verify` subcommand. Outcomes carry only exact data, so their JSON
//! form can be compared across thread counts.

use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::circle::{self, integral_s_beta, lemma1_grid, ArcParams, IntegralMethod};
use crate::curves::census::{census, cancellation_check, gcd_all, is_class_rep, CensusOptions};
use crate::curves::{fold_solutions, Bundle, CurveBundles, CurveTuple, PolyBox};
use crate::error::{Error, Result};
use crate::ff_arith::{FqCtx, Laurent, PolyT};
use crate::forms::Form;
use crate::fq_lattice::{count_gamma, count_gamma_enum, duality_check, gamma_from_alpha_psi, shrinking_check};
use crate::peyre::{peyre_report, EllConvention};
use crate::report::qpow;

pub const CRITERIA: &[(u32, &str)] = &[
    (1, "cancellation identity"),
    (2, "torus integral equals q^h0"),
    (3, "closed form on the (r,a,theta) grid"),
    (4, "line census"),
    (5, "freeness dichotomy"),
    (6, "Weyl inequalities"),
    (7, "shrinking lemma and product formula"),
    (8, "adjoint duality"),
    (9, "zero locus on minor arcs"),
    (10, "BV torus integral"),
    (11, "Peyre consistency"),
    (12, "determinism across thread counts"),
];

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct Outcome {
    pub id: u32,
    pub name: String,
    pub pass: bool,
    /// instances evaluated
    pub evaluated: u64,
    pub failures: Vec<String>,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub seed: u64,
    pub budget: u128,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { seed: 2024, budget: 1 << 40 }
    }
}

struct Tracker {
    evaluated: u64,
    failures: Vec<String>,
}

impl Tracker {
    fn new() -> Self {
        Tracker { evaluated: 0, failures: vec![] }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.evaluated += 1;
        if !ok && self.failures.len() < 20 {
            self.failures.push(what());
        }
    }

    fn finish(self, id: u32, detail: String) -> Outcome {
        let name = CRITERIA.iter().find(|c| c.0 == id).map(|c| c.1).unwrap_or("?").to_string();
        Outcome { id, name, pass: self.failures.is_empty() && self.evaluated > 0, evaluated: self.evaluated, failures: self.failures, detail }
    }
}

fn fermat(p: u32, n: usize) -> Result<Form> {
    Form::fermat(Arc::new(FqCtx::prime(p)?), n, 3)
}

/// Class representatives of primitive solutions with max degree exactly e, sorted.
pub fn primitive_curves(form: &Form, e: usize, budget: u128) -> Result<Vec<Vec<PolyT>>> {
    let pbox = PolyBox::new(form.q(), e);
    let mut v: Vec<Vec<u32>> = fold_solutions(
        form,
        &pbox,
        budget,
        Vec::new,
        |a: &mut Vec<Vec<u32>>, g| {
            if is_class_rep(&pbox, g) {
                a.push(g.to_vec());
            }
        },
        |mut a, b| {
            a.extend(b);
            a
        },
    )?;
    v.sort_unstable();
    Ok(v.into_iter()
        .map(|g| pbox.decode(&g))
        .filter(|g| g.iter().any(|x| x.deg() == Some(e)) && gcd_all(form, g).deg() == Some(0))
        .collect())
}

/// Runs criterion `id` (1..=11) in the current rayon pool.
pub fn run(id: u32, opts: &VerifyOptions) -> Result<Outcome> {
    match id {
        1 => cancellation(opts),
        2 => torus(opts),
        3 => lemma1(opts),
        4 => lines(opts),
        5 => dichotomy(opts),
        6 => weyl(opts),
        7 => shrinking(opts),
        8 => duality(opts),
        9 => structural(opts),
        10 => bv(opts),
        11 => peyre(opts),
        _ => Err(Error::invalid(format!("no criterion {id}"))),
    }
}

fn cancellation(o: &VerifyOptions) -> Result<Outcome> {
    let mut t = Tracker::new();
    let mut detail = vec![];
    for p in [5, 7] {
        let form = fermat(p, 4)?;
        for e in 1..=2 {
            let c = cancellation_check(&form, e, o.budget)?;
            t.check(!c.failed(), || format!("q={p} e={e}: {:?}", c.detail));
            detail.push(format!("q={p} e={e} {}", c.detail.clone().unwrap_or_default()));
        }
    }
    Ok(t.finish(1, detail.join("; ")))
}

fn torus(o: &VerifyOptions) -> Result<Outcome> {
    let form = fermat(5, 4)?;
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
    let mut t = Tracker::new();
    for e in 1..=2usize {
        let sols = primitive_curves(&form, e, o.budget)?;
        for _ in 0..50 {
            let g = &sols[rng.gen_range(0..sols.len())];
            let c = CurveTuple::new(&form, g.clone())?;
            let mut b = CurveBundles::new(&form, &c);
            for rho in -1..=1 {
                let want = qpow(5, b.h0_twist(rho) as i64);
                let avg = integral_s_beta(&form, g, e, rho, IntegralMethod::Average, o.budget)?;
                t.check(avg == want, || format!("e={e} rho={rho} g={g:?}: {avg} vs {want}"));
            }
        }
    }
    Ok(t.finish(2, "100 curves (50 of degree 1, 50 of degree 2), rho in -1..=1".into()))
}

fn lemma1(o: &VerifyOptions) -> Result<Outcome> {
    let form = fermat(5, 4)?;
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
    let mut t = Tracker::new();
    let mut points = 0u64;
    let mut sols = primitive_curves(&form, 1, o.budget)?;
    // tuples of degree 0 cover the j = 1 rows
    sols.extend(primitive_curves_const(&form));
    let picks: Vec<usize> = (0..24).map(|_| rng.gen_range(0..sols.len())).collect();
    for &i in &picks {
        let g = &sols[i];
        let u = g.iter().filter_map(|x| x.deg()).max().unwrap_or(0);
        for j in 0..=(1 - u) {
            for rho in -1..=1 {
                let rep = lemma1_grid(&form, g, 1, j, rho, 2, 8, &mut rng)?;
                points += rep.points;
                t.check(rep.mismatches == 0, || format!("g={g:?} j={j} rho={rho}: {:?}", rep.first_mismatch));
            }
        }
    }
    Ok(t.finish(3, format!("{points} grid points, deg r <= 2, precision 8")))
}

fn primitive_curves_const(form: &Form) -> Vec<Vec<PolyT>> {
    let q = form.q() as u64;
    let n = form.n();
    (1..q.pow(n as u32))
        .map(|idx| (0..n).map(|i| ((idx / q.pow(i as u32)) % q) as u32).collect::<Vec<u32>>())
        .filter(|x| x.iter().find(|&&c| c != 0) == Some(&1) && form.eval_point(x) == 0)
        .map(|x| x.into_iter().map(PolyT::constant).collect())
        .collect()
}

fn lines(o: &VerifyOptions) -> Result<Outcome> {
    let form = fermat(7, 4)?;
    let rec = census(&form, 1, &CensusOptions { rhos: vec![0], budget: o.budget, allow_uncertified: false, cache_dir: None })?;
    let mut t = Tracker::new();
    t.check(rec.counts.moduli_points == "27", || format!("moduli_points {}", rec.counts.moduli_points));
    t.check(rec.histogram_count(Bundle::T, &[2, -1]) == Some("27"), || "histogram entry {2,-1}".into());
    let t_rows = rec.histogram.iter().filter(|h| h.bundle == Bundle::T).count();
    t.check(t_rows == 1, || format!("{t_rows} T-splitting types"));
    let z = &rec.z_rho["0"];
    t.check(z.exact == "27" && z.upper == "27", || format!("z_0 exact {} upper {}", z.exact, z.upper));
    t.check(rec.all_pass(), || format!("{:?}", rec.checks));
    Ok(t.finish(4, format!("moduli_points={} z0={}/{}", rec.counts.moduli_points, z.exact, z.upper)))
}

fn dichotomy(o: &VerifyOptions) -> Result<Outcome> {
    let form = fermat(5, 4)?;
    let mut t = Tracker::new();
    let mut detail = vec![];
    for e in 1..=2i64 {
        let rhos: Vec<i64> = (-2..=e - 1).collect();
        let rec = census(&form, e as usize, &CensusOptions { rhos, budget: o.budget, allow_uncertified: false, cache_dir: None })?;
        let c = rec.check("dimension_free").cloned();
        match c {
            Some(c) => {
                t.check(!c.failed() && c.verdict != crate::report::Verdict::Skip, || format!("e={e}: {:?}", c.detail));
                detail.push(format!("e={e}: {}", c.detail.unwrap_or_default()));
            }
            None => t.check(false, || format!("e={e}: check missing")),
        }
    }
    Ok(t.finish(5, detail.join("; ")))
}

fn weyl(o: &VerifyOptions) -> Result<Outcome> {
    let form = fermat(5, 3)?;
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
    let mut t = Tracker::new();
    for j in 0..=1 {
        for rho in 0..=1 {
            let params = ArcParams::new(3, 2, j, rho)?;
            for _ in 0..50 {
                let a = Laurent::random_frac(&mut rng, 5, params.alpha_depth() as usize);
                let b = Laurent::random_frac(&mut rng, 5, params.beta_depth() as usize);
                let r = circle::weyl_checks(&form, &a, &b, &params, o.budget)?;
                t.check(r.weyl1 && r.weyl2, || format!("j={j} rho={rho} alpha={a:?} beta={b:?}"));
            }
        }
    }
    Ok(t.finish(6, "200 points, j in {0,1}, rho in {0,1}".into()))
}

fn random_symmetric<R: Rng>(rng: &mut R, q: u32, n: usize, depth: usize) -> Vec<Vec<Laurent>> {
    let mut g = vec![vec![Laurent::zero(); n]; n];
    for i in 0..n {
        for j in 0..=i {
            let x = Laurent::random_frac(rng, q, depth);
            g[i][j] = x.clone();
            g[j][i] = x;
        }
    }
    g
}

/// Seeded γ: 4 random symmetric matrices per n ≤ 2 and 100 from αΨ.
fn gammas(seed: u64) -> Result<Vec<Vec<Vec<Laurent>>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![];
    for n in 1..=2 {
        for _ in 0..4 {
            out.push(random_symmetric(&mut rng, 5, n, 8));
        }
    }
    let f = Arc::new(FqCtx::prime(5)?);
    let form = Form::new(f, 2, 3, [(vec![3, 0], 1), (vec![2, 1], 1), (vec![0, 3], 2)])?;
    for _ in 0..100 {
        let alpha = Laurent::random_frac(&mut rng, 5, 10);
        let g1: Vec<PolyT> = (0..2).map(|_| PolyT::from_index(5, rng.gen_range(0..25), 2)).collect();
        out.push(gamma_from_alpha_psi(&form, &alpha, &[&g1])?);
    }
    Ok(out)
}

fn shrinking(o: &VerifyOptions) -> Result<Outcome> {
    let f = Arc::new(FqCtx::prime(5)?);
    let mut t = Tracker::new();
    for (gi, g) in gammas(o.seed)?.iter().enumerate() {
        let random = gi < 8;
        for a in 0..=3 {
            for c in 1..=3 {
                // the full grid on the random matrices, one (a, c, s) diagonal on the αΨ ones
                if !random && a + 1 != c {
                    continue;
                }
                let count = count_gamma(&f, g, a, c)?;
                let listed = count_gamma_enum(&f, g, a, c, o.budget)?;
                t.check(listed == 5u128.pow(count as u32), || format!("gamma #{gi} a={a} c={c}: {listed} vs 5^{count}"));
                for s in 0..=3 {
                    let r = shrinking_check(f.clone(), g, a, c, s)?;
                    t.check(r.ok && r.lee, || format!("gamma #{gi} a={a} c={c} s={s}: {r:?}"));
                }
            }
        }
    }
    Ok(t.finish(7, "q=5, n<=2, a<=3, 1<=c<=3, s<=3; 8 random and 100 alpha-Psi matrices".into()))
}

fn duality(o: &VerifyOptions) -> Result<Outcome> {
    let f = Arc::new(FqCtx::prime(5)?);
    let mut t = Tracker::new();
    for (gi, g) in gammas(o.seed)?.iter().enumerate() {
        for a in 0..=3 {
            for c in 0..=3 {
                let r = duality_check(f.clone(), g, a, c)?;
                t.check(r.ok(), || format!("gamma #{gi} a={a} c={c}: {r:?}"));
            }
        }
    }
    Ok(t.finish(8, "q=5, n<=2, a,c<=3".into()))
}

fn structural(o: &VerifyOptions) -> Result<Outcome> {
    let form = fermat(5, 2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
    let mut t = Tracker::new();
    let mut counted = 0u64;
    for (j, rho) in [(0usize, 0i64), (0, 1), (1, 0), (1, 1)] {
        let params = ArcParams::new(3, 1, j, rho)?;
        for _ in 0..25 {
            let a = Laurent::random_frac(&mut rng, 5, params.alpha_depth() as usize);
            for jj in 0..params.m() {
                if let Some(rep) = circle::minor_structural(&form, &a, &params, jj, false, o.budget)? {
                    counted += rep.counted;
                    t.check(rep.nonzero == 0, || format!("alpha={a:?} J={jj} j={j} rho={rho}: {rep:?}"));
                }
            }
            let b = Laurent::random_frac(&mut rng, 5, params.beta_depth() as usize);
            for k in params.q()..params.n() {
                if let Some(rep) = circle::minor_structural(&form, &b, &params, k, true, o.budget)? {
                    counted += rep.counted;
                    t.check(rep.nonzero == 0, || format!("beta={b:?} K={k} j={j} rho={rho}: {rep:?}"));
                }
            }
        }
    }
    Ok(t.finish(9, format!("{counted} shrunk tuples counted")))
}

fn bv(o: &VerifyOptions) -> Result<Outcome> {
    let mut t = Tracker::new();
    let mut detail = vec![];
    for p in [5, 7] {
        let r = circle::bv_total_integral(&fermat(p, 4)?, 1, o.budget)?;
        t.check(r.ok(), || format!("q={p}: {r:?}"));
        detail.push(format!("q={p}: N_hat={}", r.n_hat));
    }
    Ok(t.finish(10, detail.join("; ")))
}

fn peyre(o: &VerifyOptions) -> Result<Outcome> {
    let form = fermat(7, 4)?;
    let mut t = Tracker::new();
    let mut detail = vec![];
    let epss = [BigRational::zero(), BigRational::new(1.into(), 4.into()), BigRational::new(1.into(), 2.into()), BigRational::one()];
    for b in 0..=2 {
        for eps in &epss {
            let r = peyre_report(&form, b, eps, EllConvention::default(), o.budget)?;
            if eps.is_zero() {
                t.check(r.n_x_eps_free == r.n_x, || format!("B={b}: {} vs {}", r.n_x_eps_free, r.n_x));
            }
            t.check(r.e_eps <= r.not_rho_free, || format!("B={b} eps={eps}: E={} > {}", r.e_eps, r.not_rho_free));
            t.check(r.all_pass(), || format!("B={b} eps={eps}: {:?}", r.checks));
            detail.push(format!("B={b} eps={eps}: N={} free={} E={} rho={} unfree={}", r.n_x, r.n_x_eps_free, r.e_eps, r.rho, r.not_rho_free));
        }
    }
    Ok(t.finish(11, detail.join("; ")))
}

/// Runs criteria `ids` once per thread count and compares the JSON outcomes.
pub fn determinism(ids: &[u32], jobs: &[usize], opts: &VerifyOptions) -> Result<(Outcome, Vec<Vec<Outcome>>)> {
    let mut runs = vec![];
    for &j in jobs {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
        let outs: Vec<Outcome> = pool.install(|| ids.iter().map(|&id| run(id, opts)).collect::<Result<_>>())?;
        runs.push(outs);
    }
    let mut t = Tracker::new();
    for (i, &id) in ids.iter().enumerate() {
        let base = serde_json::to_string(&runs[0][i])?;
        for (k, r) in runs.iter().enumerate().skip(1) {
            let other = serde_json::to_string(&r[i])?;
            t.check(base == other, || format!("criterion {id} differs between {} and {} threads", jobs[0], jobs[k]));
        }
    }
    let jobs_s: Vec<String> = jobs.iter().map(|j| j.to_string()).collect();
    Ok((t.finish(12, format!("criteria {ids:?}, jobs {}", jobs_s.join(","))), runs))
}
