//! One-pass counts over all solutions of f(g) = 0 with deg g ≤ e, and the
//! census record built from them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::bundles::{tangent_kernel_dim, Bundle, CurveBundles, CurveTuple};
use super::enumerate::{fold_solutions, PolyBox};
use crate::error::{Error, Result};
use crate::ff_arith::PolyT;
use crate::forms::Form;
use crate::report::{fmt_rat, qpow, Check, Tally};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug)]
pub struct ScanOptions {
    /// ρ values for which Σ q^{h0_twist} is accumulated.
    pub rhos: Vec<i64>,
    /// Compute splitting types and freeness for every curve.
    pub curves: bool,
    pub budget: u128,
}

/// Raw tallies from one enumeration pass. Per-curve quantities are counted
/// once per scalar class (first nonzero coordinate has leading coefficient 1).
#[derive(Clone, Debug, Default)]
pub struct Scan {
    pub n_hat: u128,
    /// Ñ(e) and Ñ(e−1)
    pub tilde: [u128; 2],
    pub n: u128,
    /// (ρ, h0) → number of classes
    pub h0_classes: BTreeMap<(i64, usize), u64>,
    pub hat_hist: BTreeMap<Vec<i64>, u64>,
    pub t_hist: BTreeMap<Vec<i64>, u64>,
    /// ρ → classes that are not ρ-free
    pub not_free: BTreeMap<i64, u64>,
    pub tally: Tally,
    pub errors: Vec<String>,
    /// whether splitting data was collected
    pub curves: bool,
}

impl Scan {
    fn merge(mut self, o: Scan) -> Scan {
        self.n_hat += o.n_hat;
        self.tilde[0] += o.tilde[0];
        self.tilde[1] += o.tilde[1];
        self.n += o.n;
        for (k, v) in o.h0_classes {
            *self.h0_classes.entry(k).or_default() += v;
        }
        for (k, v) in o.hat_hist {
            *self.hat_hist.entry(k).or_default() += v;
        }
        for (k, v) in o.t_hist {
            *self.t_hist.entry(k).or_default() += v;
        }
        for (k, v) in o.not_free {
            *self.not_free.entry(k).or_default() += v;
        }
        self.tally.merge(o.tally);
        self.errors.extend(o.errors);
        self
    }

    /// Σ over curves of q^{h0_twist(g,ρ)}.
    pub fn n_rho(&self, q: u32, rho: i64) -> BigUint {
        let mut s = BigUint::zero();
        for (&(r, h), &cnt) in &self.h0_classes {
            if r == rho {
                s += BigUint::from(q).pow(h as u32) * BigUint::from(cnt) * BigUint::from(q - 1);
            }
        }
        s
    }
}

/// True when g is the normalized member of its scalar class.
pub fn is_class_rep(pbox: &PolyBox, g: &[u32]) -> bool {
    g.iter().find(|&&i| i != 0).map(|&i| pbox.poly(i).lead() == 1).unwrap_or(false)
}

pub fn gcd_all(form: &Form, g: &[PolyT]) -> PolyT {
    g.iter().fold(PolyT::zero(), |acc, x| acc.gcd(form.fq(), x))
}

pub const CURVE_CHECKS: &[&str] = &[
    "hat_max_nonneg",
    "stronger_than",
    "rho_max_consistent",
    "no_overly_free_curve",
    "dimension_free",
    "tangent_dim",
];

pub fn scan(form: &Form, e: usize, opts: &ScanOptions) -> Result<Scan> {
    if e == 0 {
        return Err(Error::invalid("degree e must be at least 1"));
    }
    let pbox = PolyBox::new(form.q(), e);
    let q = form.q() as u128;
    let d = form.d() as u32;
    let mut s = fold_solutions(
        form,
        &pbox,
        opts.budget,
        Scan::default,
        |acc, idx| {
            acc.n_hat += 1;
            if idx.iter().all(|&i| i == 0) {
                return;
            }
            let g = pbox.decode(idx);
            let maxdeg = g.iter().filter_map(|x| x.deg()).max().unwrap();
            let gdeg = gcd_all(form, &g).deg().unwrap();
            let w = q.pow((d - 1) * gdeg as u32);
            if maxdeg == e {
                acc.tilde[0] += w;
            } else if maxdeg + 1 == e {
                acc.tilde[1] += w;
            }
            if maxdeg == e && gdeg == 0 {
                acc.n += 1;
                if is_class_rep(&pbox, idx) && (opts.curves || !opts.rhos.is_empty()) {
                    if let Err(err) = analyze(form, g, e, opts, acc) {
                        acc.errors.push(err.to_string());
                    }
                }
            }
        },
        Scan::merge,
    )?;
    if let Some(first) = s.errors.iter().min() {
        return Err(Error::assertion(format!("per-curve analysis failed: {first}")));
    }
    s.curves = opts.curves;
    Ok(s)
}

fn analyze(form: &Form, g: Vec<PolyT>, e: usize, opts: &ScanOptions, acc: &mut Scan) -> Result<()> {
    let c = CurveTuple::from_parts(form, g, e)?;
    let mut b = CurveBundles::new(form, &c);
    let mut h0s = Vec::new();
    for &rho in &opts.rhos {
        let h = b.h0_twist(rho);
        h0s.push((rho, h));
        *acc.h0_classes.entry((rho, h)).or_default() += 1;
    }
    if !opts.curves {
        return Ok(());
    }
    let (n, d, ei) = (form.n() as i64, form.d() as i64, e as i64);
    let hat = b.splitting_hat()?;
    let t = b.splitting_t()?;
    let rho_max = b.rho_max()?;
    let (kmin, lmin, kmax) = (hat.min_degree(), t.min_degree(), hat.max_degree());
    *acc.hat_hist.entry(hat.degrees).or_default() += 1;
    *acc.t_hist.entry(t.degrees).or_default() += 1;
    acc.tally.record("hat_max_nonneg", kmax >= 0);
    acc.tally.record("stronger_than", lmin >= kmin);
    acc.tally.record("rho_max_consistent", rho_max == lmin);
    acc.tally.record("no_overly_free_curve", rho_max <= (ei * (n - d)).div_euclid(n - 2));
    for &(rho, h) in &h0s {
        if ei - 1 - rho < 0 {
            continue;
        }
        let bound = ei * (n - d) - rho * (n - 1);
        let h = h as i64;
        acc.tally.record("dimension_free", h >= bound && ((h == bound) == (kmin >= rho)));
    }
    for &rho in &opts.rhos {
        if rho_max < rho {
            *acc.not_free.entry(rho).or_default() += 1;
        }
    }
    acc.tally.record("tangent_dim", tangent_kernel_dim(form, &c)? == b.h0_twist(-1));
    Ok(())
}

/// N(q,e,f): primitive solutions with max degree exactly e.
pub fn count_n(form: &Form, e: usize, budget: u128) -> Result<u128> {
    Ok(scan(form, e, &ScanOptions { rhos: vec![], curves: false, budget })?.n)
}

/// N_ρ(q,e,f) = Σ_g q^{h0_twist(g,ρ)}.
pub fn count_n_rho(form: &Form, e: usize, rho: i64, budget: u128) -> Result<BigUint> {
    let s = scan(form, e, &ScanOptions { rhos: vec![rho], curves: false, budget })?;
    Ok(s.n_rho(form.q(), rho))
}

/// Ñ(u) = Σ_{|g|=q^u, f(g)=0} |gcd(g)|^{d−1}.
pub fn tilde_n(form: &Form, u: usize, budget: u128) -> Result<u128> {
    if u == 0 {
        let pbox = PolyBox::new(form.q(), 0);
        return fold_solutions(form, &pbox, budget, || 0u128, |a, g| *a += g.iter().any(|&i| i != 0) as u128, |a, b| a + b);
    }
    Ok(scan(form, u, &ScanOptions { rhos: vec![], curves: false, budget })?.tilde[0])
}

/// Ñ(e) − q^d Ñ(e−1) = N(q,e,f), all from one pass.
pub fn cancellation_check(form: &Form, e: usize, budget: u128) -> Result<Check> {
    let s = scan(form, e, &ScanOptions { rhos: vec![], curves: false, budget })?;
    Ok(cancellation_from(form, &s))
}

fn cancellation_from(form: &Form, s: &Scan) -> Check {
    let lhs = BigInt::from(s.tilde[0]) - BigInt::from(form.q()).pow(form.d() as u32) * BigInt::from(s.tilde[1]);
    Check::new("cancellation", lhs == BigInt::from(s.n)).with_detail(format!("{lhs} vs {}", s.n))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusMeta {
    pub p: u32,
    pub k: u32,
    pub q: u32,
    pub d: usize,
    pub n: usize,
    pub e: usize,
    pub form_hash: String,
    pub tool_version: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusCounts {
    #[serde(rename = "N")]
    pub n: String,
    #[serde(rename = "N_rho")]
    pub n_rho: BTreeMap<String, String>,
    #[serde(rename = "N_hat")]
    pub n_hat: String,
    #[serde(rename = "tilde_N")]
    pub tilde_n: BTreeMap<String, String>,
    pub moduli_points: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramEntry {
    #[serde(rename = "type")]
    pub degrees: Vec<i64>,
    pub bundle: Bundle,
    /// number of maps up to reparametrization (may be fractional)
    pub count: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZRho {
    pub exact: String,
    pub upper: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusRecord {
    pub meta: CensusMeta,
    pub counts: CensusCounts,
    pub histogram: Vec<HistogramEntry>,
    pub z_rho: BTreeMap<String, ZRho>,
    pub checks: Vec<Check>,
}

impl CensusRecord {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| !c.failed())
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Number of maps with the given splitting.
    pub fn histogram_count(&self, bundle: Bundle, degrees: &[i64]) -> Option<&str> {
        self.histogram.iter().find(|h| h.bundle == bundle && h.degrees == degrees).map(|h| h.count.as_str())
    }
}

#[derive(Clone, Debug)]
pub struct CensusOptions {
    pub rhos: Vec<i64>,
    pub budget: u128,
    pub allow_uncertified: bool,
    pub cache_dir: Option<PathBuf>,
}

/// moduli points, z_ρ upper bound and exact z_ρ from the tallies.
pub struct Moduli {
    pub moduli_points: BigRational,
    pub z_upper: BigRational,
    pub z_exact: Option<BigRational>,
}

pub fn moduli_and_zrho(form: &Form, e: usize, s: &Scan, rho: i64) -> Moduli {
    let q = form.q();
    let (n, d) = (form.n() as i64, form.d() as i64);
    let pgl = BigInt::from(q).pow(3) - BigInt::from(q);
    let unit = BigInt::from(q - 1);
    let nn = BigRational::from_integer(BigInt::from(s.n));
    let moduli_points = nn.clone() / BigRational::from_integer(unit.clone() * &pgl);
    let nr = BigRational::from_integer(BigInt::from(s.n_rho(q, rho)));
    let z_upper = (nr * qpow(q, rho * (n - 1) - e as i64 * (n - d)) - nn)
        / BigRational::from_integer(unit.clone() * unit * &pgl);
    let z_exact = s
        .curves
        .then(|| BigRational::new(BigInt::from(s.not_free.get(&rho).copied().unwrap_or(0)), pgl.clone()));
    Moduli { moduli_points, z_upper, z_exact }
}

pub fn cache_path(dir: &Path, form: &Form, e: usize) -> PathBuf {
    let f = form.fq();
    dir.join(format!(
        "census-q{}-p{}-k{}-d{}-n{}-e{}-{}.json",
        f.q(),
        f.p(),
        f.k(),
        form.d(),
        form.n(),
        e,
        &form.hash_hex()[..16]
    ))
}

pub fn census(form: &Form, e: usize, opts: &CensusOptions) -> Result<CensusRecord> {
    if !opts.allow_uncertified {
        let rep = form.check_smooth(1, 1 << 22);
        if !rep.is_certified() {
            return Err(Error::invalid(format!("census needs a certified smooth form, got {rep:?}")));
        }
    }
    let mut rhos = opts.rhos.clone();
    rhos.sort_unstable();
    rhos.dedup();
    if let Some(dir) = &opts.cache_dir {
        let path = cache_path(dir, form, e);
        if let Ok(text) = std::fs::read_to_string(&path) {
            if let Ok(rec) = serde_json::from_str::<CensusRecord>(&text) {
                let covers = rhos.iter().all(|r| rec.counts.n_rho.contains_key(&r.to_string()));
                if covers && rec.meta.form_hash == form.hash_hex() && rec.meta.tool_version == TOOL_VERSION {
                    return Ok(rec);
                }
            }
        }
    }
    let s = scan(form, e, &ScanOptions { rhos: rhos.clone(), curves: true, budget: opts.budget })?;
    let rec = build_record(form, e, &rhos, &s);
    if let Some(dir) = &opts.cache_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(cache_path(dir, form, e), serde_json::to_string_pretty(&rec)?)?;
    }
    Ok(rec)
}

pub fn build_record(form: &Form, e: usize, rhos: &[i64], s: &Scan) -> CensusRecord {
    let f = form.fq();
    let q = form.q();
    let pgl = BigInt::from(q).pow(3) - BigInt::from(q);
    let meta = CensusMeta {
        p: f.p(),
        k: f.k(),
        q,
        d: form.d(),
        n: form.n(),
        e,
        form_hash: form.hash_hex(),
        tool_version: TOOL_VERSION.to_string(),
    };
    let mut checks = vec![cancellation_from(form, s)];
    let divisor = (q as u128 - 1) * (q as u128 * q as u128 * q as u128 - q as u128);
    checks.push(Check::new("n_divisible", s.n % divisor == 0));
    let mut n_rho = BTreeMap::new();
    let mut z_rho = BTreeMap::new();
    let mut moduli_points = BigRational::zero();
    for &rho in rhos {
        n_rho.insert(rho.to_string(), s.n_rho(q, rho).to_string());
        let m = moduli_and_zrho(form, e, s, rho);
        moduli_points = m.moduli_points.clone();
        let exact = m.z_exact.unwrap_or_else(BigRational::zero);
        checks.push(Check::new(format!("z_rho_exact_le_upper[{rho}]"), exact <= m.z_upper));
        z_rho.insert(rho.to_string(), ZRho { exact: fmt_rat(&exact), upper: fmt_rat(&m.z_upper) });
    }
    if rhos.is_empty() {
        moduli_points = BigRational::new(BigInt::from(s.n), BigInt::from(divisor));
    }
    checks.push(Check::new("moduli_integral", moduli_points.is_integer()));
    checks.extend(s.tally.checks(CURVE_CHECKS));
    let mut histogram = Vec::new();
    for (bundle, hist) in [(Bundle::T, &s.t_hist), (Bundle::HatT, &s.hat_hist)] {
        for (degrees, &cnt) in hist {
            histogram.push(HistogramEntry {
                degrees: degrees.clone(),
                bundle,
                count: fmt_rat(&BigRational::new(BigInt::from(cnt), pgl.clone())),
            });
        }
    }
    let mut tilde_n = BTreeMap::new();
    tilde_n.insert(e.to_string(), s.tilde[0].to_string());
    tilde_n.insert((e - 1).to_string(), s.tilde[1].to_string());
    CensusRecord {
        meta,
        counts: CensusCounts {
            n: s.n.to_string(),
            n_rho,
            n_hat: s.n_hat.to_string(),
            tilde_n,
            moduli_points: fmt_rat(&moduli_points),
        },
        histogram,
        z_rho,
        checks,
    }
}

/// Flattened CSV: one `section,key,value` row per field.
pub fn census_csv(rec: &CensusRecord) -> String {
    let mut out = String::from("section,key,value\n");
    let m = &rec.meta;
    for (k, v) in [
        ("p", m.p.to_string()),
        ("k", m.k.to_string()),
        ("q", m.q.to_string()),
        ("d", m.d.to_string()),
        ("n", m.n.to_string()),
        ("e", m.e.to_string()),
        ("form_hash", m.form_hash.clone()),
        ("tool_version", m.tool_version.clone()),
    ] {
        out += &format!("meta,{k},{v}\n");
    }
    out += &format!("counts,N,{}\n", rec.counts.n);
    for (r, v) in &rec.counts.n_rho {
        out += &format!("counts,N_rho[{r}],{v}\n");
    }
    out += &format!("counts,N_hat,{}\n", rec.counts.n_hat);
    for (u, v) in &rec.counts.tilde_n {
        out += &format!("counts,tilde_N[{u}],{v}\n");
    }
    out += &format!("counts,moduli_points,{}\n", rec.counts.moduli_points);
    for h in &rec.histogram {
        let t: Vec<String> = h.degrees.iter().map(|x| x.to_string()).collect();
        out += &format!("histogram,{}[{}],{}\n", h.bundle.label(), t.join(" "), h.count);
    }
    for (r, z) in &rec.z_rho {
        out += &format!("z_rho,exact[{r}],{}\nz_rho,upper[{r}],{}\n", z.exact, z.upper);
    }
    for c in &rec.checks {
        out += &format!("checks,{},{}\n", c.name, serde_json::to_value(c.verdict).unwrap().as_str().unwrap());
    }
    out
}

/// Projective point count #X(F_q), for oracles and small-height counts.
pub fn point_count(form: &Form) -> u64 {
    let f = form.fq();
    let n = form.n();
    let q = f.q() as u64;
    let mut count = 0u64;
    // affine cone minus the origin, divided by q−1
    for idx in 1..q.pow(n as u32) {
        let x: Vec<u32> = (0..n).map(|i| ((idx / q.pow(i as u32)) % q) as u32).collect();
        if form.eval_point(&x) == 0 {
            count += 1;
        }
    }
    count / (q - 1)
}
