//! Polynomials in F_q[T].

use std::cmp::Ordering;

use serde_json::Value;

use super::field::FqCtx;
use crate::error::{Error, Result};

/// A polynomial with ascending coefficients and no trailing zeros.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PolyT {
    coeffs: Vec<u32>,
}

impl PolyT {
    pub fn zero() -> Self {
        PolyT { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        PolyT { coeffs: vec![1] }
    }

    /// The variable T.
    pub fn t() -> Self {
        PolyT { coeffs: vec![0, 1] }
    }

    pub fn constant(c: u32) -> Self {
        Self::from_coeffs(vec![c])
    }

    /// c·T^k
    pub fn monomial(c: u32, k: usize) -> Self {
        let mut v = vec![0; k + 1];
        v[k] = c;
        Self::from_coeffs(v)
    }

    pub fn from_coeffs(mut coeffs: Vec<u32>) -> Self {
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        PolyT { coeffs }
    }

    /// Polynomial whose coefficients are the base-q digits of `idx`.
    pub fn from_index(q: u32, mut idx: u64, len: usize) -> Self {
        let mut v = Vec::with_capacity(len);
        for _ in 0..len {
            v.push((idx % q as u64) as u32);
            idx /= q as u64;
        }
        Self::from_coeffs(v)
    }

    pub fn to_index(&self, q: u32) -> u64 {
        self.coeffs.iter().rev().fold(0u64, |acc, &c| acc * q as u64 + c as u64)
    }

    pub fn coeffs(&self) -> &[u32] {
        &self.coeffs
    }

    /// Coefficient of T^i (zero beyond the degree).
    pub fn coeff(&self, i: usize) -> u32 {
        self.coeffs.get(i).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, `None` for the zero polynomial.
    pub fn deg(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Degree with the zero polynomial mapped to -1.
    pub fn deg_i64(&self) -> i64 {
        self.coeffs.len() as i64 - 1
    }

    pub fn lead(&self) -> u32 {
        self.coeffs.last().copied().unwrap_or(0)
    }

    pub fn is_monic(&self) -> bool {
        self.lead() == 1
    }

    pub fn add(&self, f: &FqCtx, o: &PolyT) -> PolyT {
        let n = self.coeffs.len().max(o.coeffs.len());
        let v = (0..n).map(|i| f.add(self.coeff(i), o.coeff(i))).collect();
        Self::from_coeffs(v)
    }

    pub fn sub(&self, f: &FqCtx, o: &PolyT) -> PolyT {
        let n = self.coeffs.len().max(o.coeffs.len());
        let v = (0..n).map(|i| f.sub(self.coeff(i), o.coeff(i))).collect();
        Self::from_coeffs(v)
    }

    pub fn neg(&self, f: &FqCtx) -> PolyT {
        PolyT { coeffs: self.coeffs.iter().map(|&c| f.neg(c)).collect() }
    }

    pub fn scale(&self, f: &FqCtx, c: u32) -> PolyT {
        if c == 0 {
            return PolyT::zero();
        }
        PolyT { coeffs: self.coeffs.iter().map(|&x| f.mul(x, c)).collect() }
    }

    /// Multiplication by T^k.
    pub fn shift(&self, k: usize) -> PolyT {
        if self.is_zero() {
            return PolyT::zero();
        }
        let mut v = vec![0; k];
        v.extend_from_slice(&self.coeffs);
        PolyT { coeffs: v }
    }

    pub fn mul(&self, f: &FqCtx, o: &PolyT) -> PolyT {
        if self.is_zero() || o.is_zero() {
            return PolyT::zero();
        }
        let mut v = vec![0u32; self.coeffs.len() + o.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in o.coeffs.iter().enumerate() {
                v[i + j] = f.add(v[i + j], f.mul(a, b));
            }
        }
        Self::from_coeffs(v)
    }

    pub fn pow(&self, f: &FqCtx, e: u32) -> PolyT {
        let mut r = PolyT::one();
        for _ in 0..e {
            r = r.mul(f, self);
        }
        r
    }

    /// Euclidean division; errors on a zero divisor.
    pub fn divrem(&self, f: &FqCtx, d: &PolyT) -> Result<(PolyT, PolyT)> {
        let dd = d.deg().ok_or_else(|| Error::invalid("division by the zero polynomial"))?;
        let mut r = self.coeffs.clone();
        if r.len() <= dd {
            return Ok((PolyT::zero(), self.clone()));
        }
        let inv = f.inv(d.lead());
        let mut qv = vec![0u32; r.len() - dd];
        for top in (dd..r.len()).rev() {
            let c = f.mul(r[top], inv);
            if c == 0 {
                continue;
            }
            let s = top - dd;
            qv[s] = c;
            for (i, &di) in d.coeffs.iter().enumerate() {
                r[s + i] = f.sub(r[s + i], f.mul(c, di));
            }
        }
        Ok((Self::from_coeffs(qv), Self::from_coeffs(r)))
    }

    pub fn rem(&self, f: &FqCtx, d: &PolyT) -> Result<PolyT> {
        Ok(self.divrem(f, d)?.1)
    }

    /// Monic associate (zero stays zero).
    pub fn monic(&self, f: &FqCtx) -> PolyT {
        if self.is_zero() {
            return PolyT::zero();
        }
        self.scale(f, f.inv(self.lead()))
    }

    /// Monic gcd; gcd(0,0) = 0.
    pub fn gcd(&self, f: &FqCtx, o: &PolyT) -> PolyT {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let r = a.rem(f, &b).expect("nonzero divisor");
            a = b;
            b = r;
        }
        a.monic(f)
    }

    pub fn eval(&self, f: &FqCtx, x: u32) -> u32 {
        self.coeffs.iter().rev().fold(0, |acc, &c| f.add(f.mul(acc, x), c))
    }

    /// Coefficientwise image under a field embedding table.
    pub fn map_coeffs(&self, table: &[u32]) -> PolyT {
        PolyT::from_coeffs(self.coeffs.iter().map(|&c| table[c as usize]).collect())
    }

    /// JSON form: ascending integer array, or arrays of F_p digits when k > 1.
    pub fn to_json(&self, f: &FqCtx) -> Value {
        if f.k() == 1 {
            Value::from(self.coeffs.clone())
        } else {
            Value::Array(self.coeffs.iter().map(|&c| Value::from(f.to_digits(c))).collect())
        }
    }

    pub fn from_json(f: &FqCtx, v: &Value) -> Result<PolyT> {
        let arr = v.as_array().ok_or_else(|| Error::invalid("polynomial must be a JSON array"))?;
        let mut out = Vec::with_capacity(arr.len());
        for c in arr {
            out.push(element_from_json(f, c)?);
        }
        Ok(PolyT::from_coeffs(out))
    }
}

/// Field element from JSON: an integer in [0,p) for prime fields, otherwise a
/// digit array of length at most k.
pub fn element_from_json(f: &FqCtx, v: &Value) -> Result<u32> {
    if let Some(x) = v.as_i64() {
        if f.k() == 1 {
            return Ok(f.from_int(x));
        }
        if (0..f.p() as i64).contains(&x) {
            return Ok(x as u32);
        }
        return Err(Error::invalid(format!("element {x} out of range")));
    }
    let arr = v.as_array().ok_or_else(|| Error::invalid("bad field element"))?;
    let ds: Vec<u32> = arr
        .iter()
        .map(|d| d.as_u64().map(|x| x as u32).ok_or_else(|| Error::invalid("bad digit")))
        .collect::<Result<_>>()?;
    f.from_digits(&ds)
}

impl PolyT {
    /// Degree comparison helper for norms: |a| vs |b|.
    pub fn cmp_norm(&self, o: &PolyT) -> Ordering {
        self.deg_i64().cmp(&o.deg_i64())
    }
}

/// All monic polynomials of the given degree, in index order.
pub fn monics_of_degree(q: u32, deg: usize) -> impl Iterator<Item = PolyT> {
    let count = (q as u64).pow(deg as u32);
    (0..count).map(move |idx| {
        let mut p = PolyT::from_index(q, idx, deg);
        let mut v = p.coeffs.clone();
        v.resize(deg, 0);
        v.push(1);
        p.coeffs = v;
        p
    })
}

/// Factorization into monic irreducibles with multiplicity, by trial division.
/// Returns the leading coefficient separately.
pub fn factor(f: &FqCtx, a: &PolyT) -> Result<(u32, Vec<(PolyT, u32)>)> {
    if a.is_zero() {
        return Err(Error::invalid("cannot factor the zero polynomial"));
    }
    let lead = a.lead();
    let mut rest = a.monic(f);
    let mut out = Vec::new();
    let mut d = 1usize;
    while rest.deg().unwrap_or(0) >= 2 * d {
        for cand in monics_of_degree(f.q(), d) {
            let mut mult = 0;
            loop {
                let (quo, r) = rest.divrem(f, &cand)?;
                if !r.is_zero() {
                    break;
                }
                rest = quo;
                mult += 1;
            }
            if mult > 0 {
                out.push((cand, mult));
            }
            if rest.deg().unwrap_or(0) < 2 * d {
                break;
            }
        }
        d += 1;
    }
    if rest.deg().unwrap_or(0) >= 1 {
        // whatever is left is irreducible; merge with an equal earlier factor
        if let Some(e) = out.iter_mut().find(|(p, _)| *p == rest) {
            e.1 += 1;
        } else {
            out.push((rest, 1));
        }
    }
    out.sort();
    Ok((lead, out))
}

pub fn is_irreducible(f: &FqCtx, a: &PolyT) -> Result<bool> {
    let (_, fs) = factor(f, a)?;
    Ok(fs.len() == 1 && fs[0].1 == 1)
}

/// Möbius function on monic polynomials.
pub fn mobius(f: &FqCtx, k: &PolyT) -> Result<i32> {
    if !k.is_monic() {
        return Err(Error::invalid("mobius needs a monic polynomial"));
    }
    let (_, fs) = factor(f, k)?;
    if fs.iter().any(|(_, m)| *m > 1) {
        return Ok(0);
    }
    Ok(if fs.len() % 2 == 0 { 1 } else { -1 })
}

/// Euler totient #(F_q[T]/r)^×.
pub fn euler_phi(f: &FqCtx, r: &PolyT) -> Result<u128> {
    if r.is_zero() {
        return Err(Error::invalid("euler_phi of zero"));
    }
    let (_, fs) = factor(f, r)?;
    let q = f.q() as u128;
    let mut acc = 1u128;
    for (p, m) in fs {
        let norm = q.pow(p.deg().unwrap() as u32);
        acc *= norm.pow(m - 1) * (norm - 1);
    }
    Ok(acc)
}

/// All monic divisors of a polynomial given by its factorization.
pub fn monic_divisors(f: &FqCtx, fs: &[(PolyT, u32)]) -> Vec<PolyT> {
    let mut out = vec![PolyT::one()];
    for (p, m) in fs {
        let mut next = Vec::with_capacity(out.len() * (*m as usize + 1));
        for d in &out {
            let mut cur = d.clone();
            next.push(cur.clone());
            for _ in 0..*m {
                cur = cur.mul(f, p);
                next.push(cur.clone());
            }
        }
        out = next;
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f5() -> FqCtx {
        FqCtx::prime(5).unwrap()
    }

    #[test]
    fn mobius_examples() {
        let f = f5();
        assert_eq!(mobius(&f, &PolyT::one()).unwrap(), 1);
        assert_eq!(mobius(&f, &PolyT::monomial(1, 2)).unwrap(), 0);
        let tt1 = PolyT::from_coeffs(vec![0, 1, 1]);
        assert_eq!(mobius(&f, &tt1).unwrap(), 1);
        assert!(mobius(&f, &PolyT::from_coeffs(vec![0, 2])).is_err());
    }

    #[test]
    fn phi_examples() {
        let f = f5();
        assert_eq!(euler_phi(&f, &PolyT::one()).unwrap(), 1);
        assert_eq!(euler_phi(&f, &PolyT::t()).unwrap(), 4);
        assert_eq!(euler_phi(&f, &PolyT::monomial(1, 2)).unwrap(), 20);
        assert!(euler_phi(&f, &PolyT::zero()).is_err());
    }

    #[test]
    fn mobius_sums_by_degree() {
        for p in [2u32, 3, 5, 7] {
            let f = FqCtx::prime(p).unwrap();
            for j in 0..=3usize {
                let s: i64 = monics_of_degree(p, j).map(|k| mobius(&f, &k).unwrap() as i64).sum();
                let want = match j {
                    0 => 1,
                    1 => -(p as i64),
                    _ => 0,
                };
                assert_eq!(s, want, "q={p} j={j}");
            }
        }
        let f4 = FqCtx::new(2, 2).unwrap();
        for j in 0..=3usize {
            let s: i64 = monics_of_degree(4, j).map(|k| mobius(&f4, &k).unwrap() as i64).sum();
            assert_eq!(s, [1, -4, 0, 0][j]);
        }
    }

    #[test]
    fn multiplicative_on_coprime_pairs() {
        let f = f5();
        let all: Vec<PolyT> = (0..=2).flat_map(|d| monics_of_degree(5, d)).collect();
        for a in &all {
            for b in &all {
                if a.gcd(&f, b) != PolyT::one() {
                    continue;
                }
                let ab = a.mul(&f, b);
                assert_eq!(mobius(&f, &ab).unwrap(), mobius(&f, a).unwrap() * mobius(&f, b).unwrap());
                assert_eq!(euler_phi(&f, &ab).unwrap(), euler_phi(&f, a).unwrap() * euler_phi(&f, b).unwrap());
            }
        }
    }

    #[test]
    fn phi_sums_over_divisors() {
        let f = f5();
        for k in (1..=2).flat_map(|d| monics_of_degree(5, d)) {
            let k2 = k.mul(&f, &k);
            let (_, fs) = factor(&f, &k2).unwrap();
            let s: u128 = monic_divisors(&f, &fs).iter().map(|r| euler_phi(&f, r).unwrap()).sum();
            assert_eq!(s, 5u128.pow(k2.deg().unwrap() as u32));
        }
    }

    #[test]
    fn phi_counts_units_directly() {
        let f = FqCtx::prime(3).unwrap();
        for r in (1..=3).flat_map(|d| monics_of_degree(3, d)) {
            let d = r.deg().unwrap();
            let count = (0..3u64.pow(d as u32))
                .filter(|&i| PolyT::from_index(3, i, d).gcd(&f, &r) == PolyT::one())
                .count() as u128;
            assert_eq!(euler_phi(&f, &r).unwrap(), count);
        }
    }

    #[test]
    fn divrem_roundtrip() {
        let f = FqCtx::new(3, 2).unwrap();
        let a = PolyT::from_coeffs(vec![1, 5, 7, 2, 8]);
        let b = PolyT::from_coeffs(vec![3, 0, 4]);
        let (qq, r) = a.divrem(&f, &b).unwrap();
        assert!(r.deg_i64() < b.deg_i64());
        assert_eq!(qq.mul(&f, &b).add(&f, &r), a);
    }

    #[test]
    fn factor_reassembles() {
        let f = f5();
        for idx in 1..3125u64 {
            let a = PolyT::from_index(5, idx, 5);
            let (lead, fs) = factor(&f, &a).unwrap();
            let mut prod = PolyT::constant(lead);
            for (p, m) in &fs {
                assert!(p.is_monic());
                prod = prod.mul(&f, &p.pow(&f, *m));
            }
            assert_eq!(prod, a);
        }
    }

    #[test]
    fn json_roundtrip() {
        let f = FqCtx::new(3, 2).unwrap();
        let a = PolyT::from_coeffs(vec![1, 5, 0, 8]);
        let v = a.to_json(&f);
        assert_eq!(PolyT::from_json(&f, &v).unwrap(), a);
        let g = f5();
        assert_eq!(PolyT::from_json(&g, &serde_json::json!([1, -1])).unwrap(), PolyT::from_coeffs(vec![1, 4]));
    }
}
