//! Homogeneous forms of degree d in n variables over F_q with char > d.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ff_arith::poly::element_from_json;
use crate::ff_arith::{FqCtx, PolyT};

/// One term of Ψ_i: coefficient times Π_k x^{(k)}_{idx[k]}.
#[derive(Clone, Debug)]
struct PsiTerm {
    coeff: u32,
    idx: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Form {
    fq: Arc<FqCtx>,
    n: usize,
    d: usize,
    terms: BTreeMap<Vec<u32>, u32>,
    /// c_{i_1..i_d} keyed by the sorted index tuple.
    sym: BTreeMap<Vec<usize>, u32>,
    psi: Vec<Vec<PsiTerm>>,
    diagonal: Option<Vec<u32>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum SmoothnessReport {
    SmoothCertified,
    /// Common zero of the gradient over F_{q^m}, coordinates as field indices there.
    Singular { witness: Vec<u32>, m: u32 },
    Inconclusive { searched_up_to: u32 },
}

impl SmoothnessReport {
    pub fn is_certified(&self) -> bool {
        matches!(self, SmoothnessReport::SmoothCertified)
    }
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// All distinct orderings of a multiset given as a sorted vector.
fn arrangements(ms: &[usize]) -> Vec<Vec<usize>> {
    fn rec(rest: &mut Vec<usize>, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(cur.clone());
            return;
        }
        let mut last = None;
        for i in 0..rest.len() {
            if Some(rest[i]) == last {
                continue;
            }
            last = Some(rest[i]);
            let x = rest.remove(i);
            cur.push(x);
            rec(rest, cur, out);
            cur.pop();
            rest.insert(i, x);
        }
    }
    let mut out = Vec::new();
    rec(&mut ms.to_vec(), &mut Vec::new(), &mut out);
    out
}

fn exps_to_multiset(e: &[u32]) -> Vec<usize> {
    e.iter().enumerate().flat_map(|(i, &k)| std::iter::repeat(i).take(k as usize)).collect()
}

impl Form {
    /// Builds a form from monomial coefficients; rejects p ≤ d.
    pub fn new(fq: Arc<FqCtx>, n: usize, d: usize, terms: impl IntoIterator<Item = (Vec<u32>, u32)>) -> Result<Self> {
        if d < 1 || n < 1 {
            return Err(Error::invalid("need n ≥ 1 and d ≥ 1"));
        }
        if fq.p() as usize <= d {
            return Err(Error::invalid(format!(
                "characteristic {} must exceed the degree {d}",
                fq.p()
            )));
        }
        let mut map: BTreeMap<Vec<u32>, u32> = BTreeMap::new();
        for (e, c) in terms {
            if e.len() != n {
                return Err(Error::invalid(format!("exponent vector {e:?} has length ≠ {n}")));
            }
            if e.iter().sum::<u32>() as usize != d {
                return Err(Error::invalid(format!("monomial {e:?} is not of degree {d}")));
            }
            if c as u64 >= fq.q() as u64 {
                return Err(Error::invalid(format!("coefficient {c} out of range")));
            }
            let slot = map.entry(e).or_insert(0);
            *slot = fq.add(*slot, c);
        }
        map.retain(|_, c| *c != 0);
        if map.is_empty() {
            return Err(Error::invalid("the zero form"));
        }
        let dfact_inv = fq.inv(fq.from_int(factorial(d) as i64));
        let mut sym = BTreeMap::new();
        let mut psi = vec![Vec::new(); n];
        for (e, &a) in &map {
            let mult: u64 = e.iter().map(|&k| factorial(k as usize)).product();
            let c = fq.mul(fq.mul(a, fq.from_int(mult as i64)), dfact_inv);
            sym.insert(exps_to_multiset(e), c);
            // Ψ_i coefficient d!·c = a·Π e_j!
            let pc = fq.mul(a, fq.from_int(mult as i64));
            for i in 0..n {
                if e[i] == 0 {
                    continue;
                }
                let mut rest = e.clone();
                rest[i] -= 1;
                for idx in arrangements(&exps_to_multiset(&rest)) {
                    psi[i].push(PsiTerm { coeff: pc, idx });
                }
            }
        }
        let diagonal = {
            let mut a = vec![0u32; n];
            let mut ok = map.len() == n;
            for (e, &c) in &map {
                match e.iter().position(|&k| k as usize == d) {
                    Some(i) => a[i] = c,
                    None => ok = false,
                }
            }
            if ok && a.iter().all(|&c| c != 0) {
                Some(a)
            } else {
                None
            }
        };
        Ok(Form { fq, n, d, terms: map, sym, psi, diagonal })
    }

    /// x_1^d + … + x_n^d
    pub fn fermat(fq: Arc<FqCtx>, n: usize, d: usize) -> Result<Self> {
        Self::diagonal(fq, &vec![1; n], d)
    }

    pub fn diagonal(fq: Arc<FqCtx>, coeffs: &[u32], d: usize) -> Result<Self> {
        let n = coeffs.len();
        let terms = coeffs.iter().enumerate().map(|(i, &c)| {
            let mut e = vec![0u32; n];
            e[i] = d as u32;
            (e, c)
        });
        Self::new(fq, n, d, terms.collect::<Vec<_>>())
    }

    /// Parses the JSON format {n, d, terms: [{exps, coeff}]}.
    pub fn from_json(fq: Arc<FqCtx>, v: &Value) -> Result<Self> {
        let bad = |m: &str| Error::invalid(format!("form file: {m}"));
        let n = v.get("n").and_then(Value::as_u64).ok_or_else(|| bad("missing n"))? as usize;
        let d = v.get("d").and_then(Value::as_u64).ok_or_else(|| bad("missing d"))? as usize;
        let arr = v.get("terms").and_then(Value::as_array).ok_or_else(|| bad("missing terms"))?;
        let mut terms = Vec::new();
        for t in arr {
            let exps: Vec<u32> = t
                .get("exps")
                .and_then(Value::as_array)
                .ok_or_else(|| bad("term without exps"))?
                .iter()
                .map(|x| x.as_u64().map(|k| k as u32).ok_or_else(|| bad("bad exponent")))
                .collect::<Result<_>>()?;
            let c = element_from_json(&fq, t.get("coeff").ok_or_else(|| bad("term without coeff"))?)?;
            terms.push((exps, c));
        }
        Self::new(fq, n, d, terms)
    }

    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .terms
            .iter()
            .map(|(e, &c)| {
                let coeff = if self.fq.k() == 1 { json!(c) } else { json!(self.fq.to_digits(c)) };
                json!({ "exps": e, "coeff": coeff })
            })
            .collect();
        json!({ "n": self.n, "d": self.d, "terms": terms })
    }

    /// Stable hash of the field and the coefficient table.
    pub fn hash_hex(&self) -> String {
        let canon = json!({
            "p": self.fq.p(), "k": self.fq.k(), "modulus": self.fq.modulus(),
            "form": self.to_json(),
        });
        let digest = Sha256::digest(canon.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn fq(&self) -> &FqCtx {
        &self.fq
    }

    pub fn fq_arc(&self) -> Arc<FqCtx> {
        self.fq.clone()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn q(&self) -> u32 {
        self.fq.q()
    }

    pub fn terms(&self) -> &BTreeMap<Vec<u32>, u32> {
        &self.terms
    }

    /// Coefficients a_i when f = Σ a_i x_i^d with every a_i ≠ 0.
    pub fn diagonal_coeffs(&self) -> Option<&[u32]> {
        self.diagonal.as_deref()
    }

    /// Symmetric tensor entry c_{i_1..i_d}.
    pub fn sym_coeff(&self, idx: &[usize]) -> u32 {
        let mut k = idx.to_vec();
        k.sort_unstable();
        self.sym.get(&k).copied().unwrap_or(0)
    }

    /// Monomial coefficients recovered from the symmetric tensor.
    pub fn terms_from_sym(&self) -> BTreeMap<Vec<u32>, u32> {
        let f = &*self.fq;
        let dfact = f.from_int(factorial(self.d) as i64);
        self.sym
            .iter()
            .map(|(ms, &c)| {
                let mut e = vec![0u32; self.n];
                for &i in ms {
                    e[i] += 1;
                }
                let mult: u64 = e.iter().map(|&k| factorial(k as usize)).product();
                (e, f.mul(c, f.mul(dfact, f.inv(f.from_int(mult as i64)))))
            })
            .filter(|(_, c)| *c != 0)
            .collect()
    }

    fn check_arity(&self, g: &[PolyT]) -> Result<()> {
        if g.len() != self.n {
            return Err(Error::invalid(format!("expected {} coordinates, got {}", self.n, g.len())));
        }
        Ok(())
    }

    fn powers(&self, g: &[PolyT]) -> Vec<Vec<PolyT>> {
        let f = &*self.fq;
        g.iter()
            .map(|gi| {
                let mut v = vec![PolyT::one()];
                for k in 1..=self.d {
                    let next = v[k - 1].mul(f, gi);
                    v.push(next);
                }
                v
            })
            .collect()
    }

    /// f(g) in F_q[T].
    pub fn eval_form(&self, g: &[PolyT]) -> Result<PolyT> {
        self.check_arity(g)?;
        let f = &*self.fq;
        let pw = self.powers(g);
        let mut acc = PolyT::zero();
        for (e, &a) in &self.terms {
            let mut t = PolyT::constant(a);
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    t = t.mul(f, &pw[i][k as usize]);
                }
            }
            acc = acc.add(f, &t);
        }
        Ok(acc)
    }

    /// (∂f/∂x_i)(g) for all i.
    pub fn grad(&self, g: &[PolyT]) -> Result<Vec<PolyT>> {
        self.check_arity(g)?;
        let f = &*self.fq;
        let pw = self.powers(g);
        let mut out = vec![PolyT::zero(); self.n];
        for (e, &a) in &self.terms {
            for i in 0..self.n {
                if e[i] == 0 {
                    continue;
                }
                let mut t = PolyT::constant(f.mul(a, f.from_int(e[i] as i64)));
                for (j, &k) in e.iter().enumerate() {
                    let kk = if j == i { k - 1 } else { k };
                    if kk > 0 {
                        t = t.mul(f, &pw[j][kk as usize]);
                    }
                }
                out[i] = out[i].add(f, &t);
            }
        }
        Ok(out)
    }

    /// h·∇f(g)
    pub fn grad_dot(&self, g: &[PolyT], h: &[PolyT]) -> Result<PolyT> {
        self.check_arity(h)?;
        let f = &*self.fq;
        let gr = self.grad(g)?;
        Ok(gr.iter().zip(h).fold(PolyT::zero(), |acc, (a, b)| acc.add(f, &a.mul(f, b))))
    }

    /// Ψ_i(x^{(1)}, …, x^{(d-1)}) = d! Σ c_{i_1..i_{d-1} i} x^{(1)}_{i_1} ⋯ x^{(d-1)}_{i_{d-1}}.
    pub fn psi(&self, i: usize, xs: &[&[PolyT]]) -> Result<PolyT> {
        if i >= self.n {
            return Err(Error::invalid(format!("index {i} out of range")));
        }
        if xs.len() != self.d - 1 {
            return Err(Error::invalid(format!("Ψ takes {} vector arguments", self.d - 1)));
        }
        for x in xs {
            self.check_arity(x)?;
        }
        let f = &*self.fq;
        let mut acc = PolyT::zero();
        for t in &self.psi[i] {
            let mut prod = PolyT::constant(t.coeff);
            for (k, &j) in t.idx.iter().enumerate() {
                prod = prod.mul(f, &xs[k][j]);
                if prod.is_zero() {
                    break;
                }
            }
            acc = acc.add(f, &prod);
        }
        Ok(acc)
    }

    /// The n×n matrix M[i][k] = Ψ_i(fixed…, e_k) with the last slot free.
    pub fn psi_matrix(&self, fixed: &[&[PolyT]]) -> Result<Vec<Vec<PolyT>>> {
        if fixed.len() + 2 != self.d {
            return Err(Error::invalid("psi_matrix needs d-2 fixed vectors"));
        }
        let f = &*self.fq;
        let mut m = vec![vec![PolyT::zero(); self.n]; self.n];
        for (i, row) in m.iter_mut().enumerate() {
            for t in &self.psi[i] {
                let (last, head) = t.idx.split_last().unwrap();
                let mut prod = PolyT::constant(t.coeff);
                for (k, &j) in head.iter().enumerate() {
                    prod = prod.mul(f, &fixed[k][j]);
                }
                row[*last] = row[*last].add(f, &prod);
            }
        }
        Ok(m)
    }

    /// f at a point of F_q^n.
    pub fn eval_point(&self, x: &[u32]) -> u32 {
        let f = &*self.fq;
        let mut acc = 0;
        for (e, &a) in &self.terms {
            let mut t = a;
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    t = f.mul(t, f.pow(x[i], k as u64));
                }
            }
            acc = f.add(acc, t);
        }
        acc
    }

    pub fn grad_point(&self, x: &[u32]) -> Vec<u32> {
        let f = &*self.fq;
        let mut out = vec![0u32; self.n];
        for (e, &a) in &self.terms {
            for i in 0..self.n {
                if e[i] == 0 {
                    continue;
                }
                let mut t = f.mul(a, f.from_int(e[i] as i64));
                for (j, &k) in e.iter().enumerate() {
                    let kk = if j == i { k - 1 } else { k };
                    if kk > 0 {
                        t = f.mul(t, f.pow(x[j], kk as u64));
                    }
                }
                out[i] = f.add(out[i], t);
            }
        }
        out
    }

    /// The same form over an extension field.
    pub fn base_change(&self, big: Arc<FqCtx>) -> Result<Form> {
        let table = self.fq.embedding_into(&big)?;
        let terms: Vec<_> = self.terms.iter().map(|(e, &c)| (e.clone(), table[c as usize])).collect();
        Form::new(big, self.n, self.d, terms)
    }

    /// Smoothness: certificate for diagonal forms, otherwise a search for a
    /// common projective zero of ∇f over F_{q^m}, m ≤ k_max, within `budget` points.
    pub fn check_smooth(&self, k_max: u32, budget: u64) -> SmoothnessReport {
        if self.diagonal.is_some() && self.d % self.fq.p() as usize != 0 {
            return SmoothnessReport::SmoothCertified;
        }
        for m in 1..=k_max {
            let big = if m == 1 {
                self.fq.clone()
            } else {
                match FqCtx::new(self.fq.p(), self.fq.k() * m) {
                    Ok(b) => Arc::new(b),
                    Err(_) => return SmoothnessReport::Inconclusive { searched_up_to: m - 1 },
                }
            };
            let qm = big.q() as u64;
            let total = (qm as f64).powi(self.n as i32);
            if total > budget as f64 {
                return SmoothnessReport::Inconclusive { searched_up_to: m - 1 };
            }
            let form = if m == 1 { self.clone() } else {
                match self.base_change(big.clone()) {
                    Ok(fm) => fm,
                    Err(_) => return SmoothnessReport::Inconclusive { searched_up_to: m - 1 },
                }
            };
            // projective points: first nonzero coordinate equal to 1
            for lead in (0..self.n).rev() {
                let free = self.n - lead - 1;
                for idx in 0..qm.pow(free as u32) {
                    let mut x = vec![0u32; self.n];
                    x[lead] = 1;
                    let mut t = idx;
                    for c in x.iter_mut().skip(lead + 1) {
                        *c = (t % qm) as u32;
                        t /= qm;
                    }
                    if form.grad_point(&x).iter().all(|&v| v == 0) && form.eval_point(&x) == 0 {
                        return SmoothnessReport::Singular { witness: x, m };
                    }
                }
            }
        }
        SmoothnessReport::Inconclusive { searched_up_to: k_max }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fq(p: u32) -> Arc<FqCtx> {
        Arc::new(FqCtx::prime(p).unwrap())
    }

    fn p(v: &[u32]) -> PolyT {
        PolyT::from_coeffs(v.to_vec())
    }

    #[test]
    fn eval_examples() {
        let f = Form::fermat(fq(5), 4, 3).unwrap();
        let line = [p(&[0, 1]), p(&[0, 4]), p(&[1]), p(&[4])];
        assert!(f.eval_form(&line).unwrap().is_zero());
        assert_eq!(f.eval_form(&[p(&[1]), p(&[]), p(&[]), p(&[])]).unwrap(), p(&[1]));
        assert_eq!(f.eval_form(&[p(&[0, 1]), p(&[1]), p(&[]), p(&[])]).unwrap(), p(&[1, 0, 0, 1]));
        assert!(f.eval_form(&line[..3]).is_err());
    }

    #[test]
    fn grad_dot_examples() {
        let f = Form::fermat(fq(5), 4, 3).unwrap();
        let line = vec![p(&[0, 1]), p(&[0, 4]), p(&[1]), p(&[4])];
        assert!(f.grad_dot(&line, &line).unwrap().is_zero());
        let ones = vec![p(&[1]); 4];
        assert_eq!(f.grad_dot(&line, &ones).unwrap(), p(&[1, 0, 1]));
        assert!(f.grad_dot(&line, &vec![PolyT::zero(); 4]).unwrap().is_zero());
    }

    #[test]
    fn psi_examples() {
        let f = Form::fermat(fq(5), 4, 3).unwrap();
        let e1 = vec![p(&[1]), p(&[]), p(&[]), p(&[])];
        assert_eq!(f.psi(0, &[&e1, &e1]).unwrap(), p(&[1]));
        assert!(f.psi(1, &[&e1, &e1]).unwrap().is_zero());
        assert!(f.psi(4, &[&e1, &e1]).is_err());
    }

    fn random_vec(rng: &mut ChaCha8Rng, q: u32, n: usize, deg: usize) -> Vec<PolyT> {
        (0..n).map(|_| PolyT::from_coeffs((0..=deg).map(|_| rng.gen_range(0..q)).collect())).collect()
    }

    fn random_form(rng: &mut ChaCha8Rng, fqc: Arc<FqCtx>, n: usize, d: usize) -> Form {
        let q = fqc.q();
        let mut terms = Vec::new();
        for _ in 0..6 {
            let mut e = vec![0u32; n];
            for _ in 0..d {
                e[rng.gen_range(0..n)] += 1;
            }
            terms.push((e, rng.gen_range(1..q)));
        }
        Form::new(fqc, n, d, terms).unwrap()
    }

    #[test]
    fn euler_identity_and_sym_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (pp, n, d) in [(5u32, 3usize, 3usize), (7, 4, 3), (7, 3, 4), (11, 3, 5)] {
            let fqc = fq(pp);
            for _ in 0..5 {
                let form = random_form(&mut rng, fqc.clone(), n, d);
                assert_eq!(form.terms_from_sym(), *form.terms());
                for _ in 0..20 {
                    let g = random_vec(&mut rng, pp, n, 2);
                    let lhs = form.grad_dot(&g, &g).unwrap();
                    let rhs = form.eval_form(&g).unwrap().scale(&fqc, fqc.from_int(d as i64));
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }

    #[test]
    fn psi_is_symmetric_multilinear_and_matches_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let fqc = fq(7);
        let f = &*fqc;
        for d in [3usize, 4] {
            let form = random_form(&mut rng, fqc.clone(), 3, d);
            for _ in 0..10 {
                let xs: Vec<Vec<PolyT>> = (0..d - 1).map(|_| random_vec(&mut rng, 7, 3, 1)).collect();
                let refs: Vec<&[PolyT]> = xs.iter().map(|v| v.as_slice()).collect();
                for i in 0..3 {
                    let base = form.psi(i, &refs).unwrap();
                    let mut sw = refs.clone();
                    sw.swap(0, d - 2);
                    assert_eq!(form.psi(i, &sw).unwrap(), base);
                    let extra = random_vec(&mut rng, 7, 3, 1);
                    let sum: Vec<PolyT> = xs[0].iter().zip(&extra).map(|(a, b)| a.add(f, b)).collect();
                    let mut a1 = refs.clone();
                    a1[0] = &sum;
                    let mut a2 = refs.clone();
                    a2[0] = &extra;
                    assert_eq!(form.psi(i, &a1).unwrap(), base.add(f, &form.psi(i, &a2).unwrap()));
                }
                // Ψ_i(g,…,g) = (d-1)!·∂_i f(g)
                let g = &xs[0];
                let same: Vec<&[PolyT]> = vec![g.as_slice(); d - 1];
                let gr = form.grad(g).unwrap();
                let fact = f.from_int(factorial(d - 1) as i64);
                for i in 0..3 {
                    assert_eq!(form.psi(i, &same).unwrap(), gr[i].scale(f, fact));
                }
                // matrix in the last slot is symmetric
                let fixed: Vec<&[PolyT]> = refs[..d - 2].to_vec();
                let m = form.psi_matrix(&fixed).unwrap();
                for i in 0..3 {
                    for k in 0..3 {
                        assert_eq!(m[i][k], m[k][i]);
                    }
                }
            }
        }
    }

    #[test]
    fn fermat_psi_on_diagonal() {
        let fqc = fq(5);
        let form = Form::fermat(fqc.clone(), 4, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let g = random_vec(&mut rng, 5, 4, 2);
            for i in 0..4 {
                let want = g[i].pow(&fqc, 2).scale(&fqc, fqc.from_int(6));
                assert_eq!(form.psi(i, &[&g, &g]).unwrap(), want);
            }
        }
    }

    #[test]
    fn rejects_small_characteristic() {
        assert!(Form::fermat(fq(3), 4, 3).is_err());
        assert!(Form::fermat(fq(2), 3, 3).is_err());
        assert!(Form::fermat(fq(5), 3, 5).is_err());
        assert!(Form::fermat(fq(7), 3, 5).is_ok());
    }

    #[test]
    fn smoothness_examples() {
        let f7 = Form::fermat(fq(7), 4, 3).unwrap();
        assert_eq!(f7.check_smooth(2, 1 << 20), SmoothnessReport::SmoothCertified);
        let f5 = Form::fermat(fq(5), 3, 3).unwrap();
        assert_eq!(f5.check_smooth(2, 1 << 20), SmoothnessReport::SmoothCertified);
        let x2y = Form::new(fq(5), 3, 3, vec![(vec![2, 1, 0], 1)]).unwrap();
        assert_eq!(x2y.check_smooth(1, 1 << 20), SmoothnessReport::Singular { witness: vec![0, 0, 1], m: 1 });
        // x³+y³+z³+3xyz over F_7 is a smooth Hesse cubic; the search finds nothing
        let g = Form::new(fq(7), 3, 3, vec![(vec![3, 0, 0], 1), (vec![0, 3, 0], 1), (vec![0, 0, 3], 1), (vec![1, 1, 1], 3)]).unwrap();
        assert_eq!(g.check_smooth(2, 1 << 20), SmoothnessReport::Inconclusive { searched_up_to: 2 });
    }

    #[test]
    fn json_roundtrip_and_hash() {
        let form = Form::fermat(fq(7), 4, 3).unwrap();
        let v = form.to_json();
        let back = Form::from_json(fq(7), &v).unwrap();
        assert_eq!(back.terms(), form.terms());
        assert_eq!(back.hash_hex(), form.hash_hex());
        assert_ne!(Form::fermat(fq(5), 4, 3).unwrap().hash_hex(), form.hash_hex());
    }
}
