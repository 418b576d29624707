//! The finite field F_q, q = p^k.
//!
//! Elements are `u32` indices in `[0, q)`. For k > 1 the index is the base-p
//! digit encoding of a polynomial in x of degree < k reduced modulo the stored
//! modulus, so the index of an element of the prime field is the integer itself.

use crate::error::{Error, Result};

/// Largest q for which full addition and multiplication tables are built.
const TABLE_LIMIT: u32 = 256;
/// Largest q accepted at all (log/exp tables are O(q)).
const MAX_Q: u64 = 1 << 24;

/// Known small Conway polynomials, ascending coefficients.
const CONWAY: &[(u32, u32, &[u32])] = &[
    (2, 2, &[1, 1, 1]),
    (2, 3, &[1, 1, 0, 1]),
    (2, 4, &[1, 1, 0, 0, 1]),
    (3, 2, &[2, 2, 1]),
    (3, 3, &[1, 2, 0, 1]),
    (3, 4, &[2, 0, 0, 2, 1]),
    (5, 2, &[2, 4, 1]),
    (5, 3, &[3, 3, 0, 1]),
    (7, 2, &[3, 6, 1]),
    (7, 3, &[4, 0, 6, 1]),
    (11, 2, &[2, 7, 1]),
    (13, 2, &[2, 12, 1]),
];

#[derive(Clone, Debug)]
pub struct FqCtx {
    p: u32,
    k: u32,
    q: u32,
    modulus: Vec<u32>,
    add_t: Vec<u32>,
    mul_t: Vec<u32>,
    neg_t: Vec<u32>,
    inv_t: Vec<u32>,
    trace_t: Vec<u32>,
    log_t: Vec<u32>,
    exp_t: Vec<u32>,
}

fn is_prime(p: u32) -> bool {
    if p < 2 {
        return false;
    }
    let mut i = 2u32;
    while (i as u64) * (i as u64) <= p as u64 {
        if p % i == 0 {
            return false;
        }
        i += 1;
    }
    true
}

/// Prime factors of `n` without multiplicity.
pub(crate) fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut f = 2u64;
    while f * f <= n {
        if n % f == 0 {
            out.push(f);
            while n % f == 0 {
                n /= f;
            }
        }
        f += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

// Dense polynomials over F_p used only while building the field.
fn fp_trim(v: &mut Vec<u32>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

fn fp_rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let mut r: Vec<u32> = a.to_vec();
    fp_trim(&mut r);
    let dm = m.len() - 1;
    let lead_inv = fp_inv(m[dm], p);
    while r.len() > dm {
        let top = r.len() - 1;
        let c = (r[top] as u64 * lead_inv as u64 % p as u64) as u32;
        let shift = top - dm;
        for (i, &mi) in m.iter().enumerate() {
            let sub = (c as u64 * mi as u64 % p as u64) as u32;
            r[shift + i] = (r[shift + i] + p - sub) % p;
        }
        fp_trim(&mut r);
    }
    r
}

fn fp_inv(a: u32, p: u32) -> u32 {
    let mut r = 1u64;
    let mut b = a as u64 % p as u64;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p as u64;
        }
        b = b * b % p as u64;
        e >>= 1;
    }
    r as u32
}

fn digits(mut a: u32, p: u32, k: u32) -> Vec<u32> {
    let mut out = vec![0; k as usize];
    for d in out.iter_mut() {
        *d = a % p;
        a /= p;
    }
    out
}

fn undigits(ds: &[u32], p: u32) -> u32 {
    ds.iter().rev().fold(0u32, |acc, &d| acc * p + d)
}

/// Irreducibility of a monic polynomial over F_p by trial division.
fn fp_irreducible(m: &[u32], p: u32) -> bool {
    let deg = m.len() - 1;
    if deg == 0 {
        return false;
    }
    for dd in 1..=deg / 2 {
        let count = (p as u64).pow(dd as u32);
        for idx in 0..count {
            let mut cand: Vec<u32> = digits(idx as u32, p, dd as u32);
            cand.push(1);
            if fp_rem(m, &cand, p).is_empty() {
                return false;
            }
        }
    }
    true
}

impl FqCtx {
    /// Prime field or extension with the default modulus.
    pub fn new(p: u32, k: u32) -> Result<Self> {
        let modulus = Self::default_modulus(p, k)?;
        Self::with_modulus(p, k, modulus)
    }

    pub fn prime(p: u32) -> Result<Self> {
        Self::new(p, 1)
    }

    fn default_modulus(p: u32, k: u32) -> Result<Vec<u32>> {
        if !is_prime(p) {
            return Err(Error::invalid(format!("p = {p} is not prime")));
        }
        if k == 0 {
            return Err(Error::invalid("extension degree must be at least 1"));
        }
        if k == 1 {
            return Ok(vec![0, 1]);
        }
        if let Some((_, _, m)) = CONWAY.iter().find(|(pp, kk, _)| *pp == p && *kk == k) {
            return Ok(m.to_vec());
        }
        let q = (p as u64).checked_pow(k).filter(|&q| q <= MAX_Q).ok_or_else(|| {
            Error::invalid(format!("field size {p}^{k} too large"))
        })?;
        for idx in 0..(q as u32) {
            let mut cand = digits(idx, p, k);
            cand.push(1);
            if cand[0] != 0 && fp_irreducible(&cand, p) {
                return Ok(cand);
            }
        }
        Err(Error::invalid("no irreducible polynomial found"))
    }

    /// Builds F_{p^k} from an explicit monic modulus (ascending coefficients).
    pub fn with_modulus(p: u32, k: u32, modulus: Vec<u32>) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::invalid(format!("p = {p} is not prime")));
        }
        if modulus.len() != k as usize + 1 || modulus[k as usize] != 1 {
            return Err(Error::invalid("modulus must be monic of degree k"));
        }
        if modulus.iter().any(|&c| c >= p) {
            return Err(Error::invalid("modulus coefficients must lie in [0, p)"));
        }
        if !fp_irreducible(&modulus, p) {
            return Err(Error::invalid(format!("modulus {modulus:?} is reducible over F_{p}")));
        }
        let q64 = (p as u64).checked_pow(k).filter(|&q| q <= MAX_Q).ok_or_else(|| {
            Error::invalid(format!("field size {p}^{k} too large"))
        })?;
        let q = q64 as u32;
        let mut ctx = FqCtx {
            p,
            k,
            q,
            modulus,
            add_t: Vec::new(),
            mul_t: Vec::new(),
            neg_t: Vec::new(),
            inv_t: Vec::new(),
            trace_t: Vec::new(),
            log_t: Vec::new(),
            exp_t: Vec::new(),
        };
        ctx.build_tables();
        Ok(ctx)
    }

    fn mul_slow(&self, a: u32, b: u32) -> u32 {
        if self.k == 1 {
            return ((a as u64 * b as u64) % self.p as u64) as u32;
        }
        let (p, k) = (self.p, self.k);
        let da = digits(a, p, k);
        let db = digits(b, p, k);
        let mut prod = vec![0u32; 2 * k as usize];
        for (i, &x) in da.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in db.iter().enumerate() {
                prod[i + j] = ((prod[i + j] as u64 + x as u64 * y as u64) % p as u64) as u32;
            }
        }
        let mut r = fp_rem(&prod, &self.modulus, p);
        r.resize(k as usize, 0);
        undigits(&r, p)
    }

    fn add_slow(&self, a: u32, b: u32) -> u32 {
        if self.k == 1 {
            return (a + b) % self.p;
        }
        let (p, k) = (self.p, self.k);
        let (mut x, mut y) = (a, b);
        let mut out = 0u32;
        let mut place = 1u32;
        for _ in 0..k {
            out += ((x % p + y % p) % p) * place;
            x /= p;
            y /= p;
            place = place.wrapping_mul(p);
        }
        out
    }

    fn build_tables(&mut self) {
        let q = self.q;
        let order = (q - 1) as u64;
        let factors = prime_factors(order);
        // primitive element
        let mut gen = 0u32;
        for cand in 1..q {
            let ok = factors.iter().all(|&f| self.pow_slow(cand, order / f) != 1);
            if ok {
                gen = cand;
                break;
            }
        }
        let mut exp_t = vec![0u32; q as usize];
        let mut log_t = vec![0u32; q as usize];
        let mut x = 1u32;
        for i in 0..(q - 1) {
            exp_t[i as usize] = x;
            log_t[x as usize] = i;
            x = self.mul_slow(x, gen);
        }
        exp_t[(q - 1) as usize] = 1;
        self.exp_t = exp_t;
        self.log_t = log_t;

        let mut neg_t = vec![0u32; q as usize];
        for a in 0..q {
            let ds: Vec<u32> = digits(a, self.p, self.k)
                .into_iter()
                .map(|c| (self.p - c) % self.p)
                .collect();
            neg_t[a as usize] = undigits(&ds, self.p);
        }
        self.neg_t = neg_t;
        let mut inv_t = vec![0u32; q as usize];
        for a in 1..q {
            let l = self.log_t[a as usize];
            inv_t[a as usize] = self.exp_t[((q - 1 - l) % (q - 1)) as usize];
        }
        self.inv_t = inv_t;

        if q <= TABLE_LIMIT {
            let mut add_t = vec![0u32; (q * q) as usize];
            let mut mul_t = vec![0u32; (q * q) as usize];
            for a in 0..q {
                for b in 0..q {
                    add_t[(a * q + b) as usize] = self.add_slow(a, b);
                    mul_t[(a * q + b) as usize] = self.mul_log(a, b);
                }
            }
            self.add_t = add_t;
            self.mul_t = mul_t;
        }

        // trace to F_p: sum of Frobenius conjugates
        let mut trace_t = vec![0u32; q as usize];
        for a in 0..q {
            let mut acc = 0u32;
            let mut c = a;
            for _ in 0..self.k {
                acc = self.add(acc, c);
                c = self.pow(c, self.p as u64);
            }
            debug_assert!(acc < self.p);
            trace_t[a as usize] = acc;
        }
        self.trace_t = trace_t;
    }

    fn pow_slow(&self, a: u32, mut e: u64) -> u32 {
        let mut r = 1u32;
        let mut b = a;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul_slow(r, b);
            }
            b = self.mul_slow(b, b);
            e >>= 1;
        }
        r
    }

    #[inline]
    fn mul_log(&self, a: u32, b: u32) -> u32 {
        if a == 0 || b == 0 {
            return 0;
        }
        let s = self.log_t[a as usize] + self.log_t[b as usize];
        let s = if s >= self.q - 1 { s - (self.q - 1) } else { s };
        self.exp_t[s as usize]
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        if !self.add_t.is_empty() {
            self.add_t[(a * self.q + b) as usize]
        } else {
            self.add_slow(a, b)
        }
    }

    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        self.neg_t[a as usize]
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        if !self.mul_t.is_empty() {
            self.mul_t[(a * self.q + b) as usize]
        } else {
            self.mul_log(a, b)
        }
    }

    /// Multiplicative inverse; `a` must be nonzero.
    #[inline]
    pub fn inv(&self, a: u32) -> u32 {
        debug_assert!(a != 0, "inverse of zero");
        self.inv_t[a as usize]
    }

    pub fn div(&self, a: u32, b: u32) -> u32 {
        self.mul(a, self.inv(b))
    }

    pub fn pow(&self, a: u32, e: u64) -> u32 {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        let l = self.log_t[a as usize] as u64 * (e % (self.q as u64 - 1));
        self.exp_t[(l % (self.q as u64 - 1)) as usize]
    }

    /// Image of an integer in the prime field.
    pub fn from_int(&self, v: i64) -> u32 {
        v.rem_euclid(self.p as i64) as u32
    }

    /// Absolute trace to F_p, returned as an integer in `[0, p)`.
    #[inline]
    pub fn trace(&self, a: u32) -> u32 {
        self.trace_t[a as usize]
    }

    /// A generator of the multiplicative group.
    pub fn generator(&self) -> u32 {
        self.exp_t[1 % (self.q as usize - 1).max(1)]
    }

    pub fn elements(&self) -> std::ops::Range<u32> {
        0..self.q
    }

    /// Embedding of this field into a larger field of the same characteristic,
    /// returned as the image table indexed by element.
    pub fn embedding_into(&self, big: &FqCtx) -> Result<Vec<u32>> {
        if big.p != self.p || big.k % self.k != 0 {
            return Err(Error::invalid(format!(
                "F_{} does not embed in F_{}",
                self.q, big.q
            )));
        }
        if self.k == 1 {
            return Ok((0..self.q).collect());
        }
        let root = (0..big.q)
            .find(|&w| {
                let mut acc = 0u32;
                for &c in self.modulus.iter().rev() {
                    acc = big.add(big.mul(acc, w), c);
                }
                acc == 0
            })
            .ok_or_else(|| Error::assertion("modulus has no root in the extension"))?;
        let mut table = vec![0u32; self.q as usize];
        for a in 0..self.q {
            let ds = digits(a, self.p, self.k);
            let mut acc = 0u32;
            for &c in ds.iter().rev() {
                acc = big.add(big.mul(acc, root), c);
            }
            table[a as usize] = acc;
        }
        Ok(table)
    }

    /// Element as its length-k coefficient vector over F_p (ascending).
    pub fn to_digits(&self, a: u32) -> Vec<u32> {
        digits(a, self.p, self.k)
    }

    pub fn from_digits(&self, ds: &[u32]) -> Result<u32> {
        if ds.len() > self.k as usize || ds.iter().any(|&c| c >= self.p) {
            return Err(Error::invalid(format!("bad element encoding {ds:?}")));
        }
        Ok(undigits(ds, self.p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_axioms_small() {
        for (p, k) in [(2, 1), (5, 1), (7, 1), (2, 3), (3, 2), (5, 2), (7, 2)] {
            let f = FqCtx::new(p, k).unwrap();
            let q = f.q();
            for a in 0..q {
                assert_eq!(f.add(a, f.neg(a)), 0);
                if a != 0 {
                    assert_eq!(f.mul(a, f.inv(a)), 1);
                }
                for b in 0..q {
                    assert_eq!(f.add(a, b), f.add(b, a));
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    for c in [0, 1, q - 1] {
                        assert_eq!(
                            f.mul(a, f.add(b, c)),
                            f.add(f.mul(a, b), f.mul(a, c))
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn trace_is_additive_and_onto() {
        let f = FqCtx::new(5, 2).unwrap();
        let mut hit = [false; 5];
        for a in 0..25 {
            hit[f.trace(a) as usize] = true;
            for b in 0..25 {
                assert_eq!(f.trace(f.add(a, b)), (f.trace(a) + f.trace(b)) % 5);
            }
        }
        assert!(hit.iter().all(|&h| h));
    }

    #[test]
    fn rejects_reducible_modulus() {
        assert!(FqCtx::with_modulus(5, 2, vec![4, 0, 1]).is_err());
        assert!(FqCtx::with_modulus(5, 2, vec![2, 0, 1]).is_ok());
        assert!(FqCtx::new(6, 1).is_err());
    }

    #[test]
    fn large_field_uses_log_tables() {
        let f = FqCtx::new(7, 4).unwrap();
        assert_eq!(f.q(), 2401);
        let g = f.generator();
        assert_eq!(f.pow(g, 2400), 1);
        assert_ne!(f.pow(g, 1200), 1);
        let a = 1234;
        assert_eq!(f.mul(a, f.inv(a)), 1);
    }

    #[test]
    fn embedding_respects_arithmetic() {
        let small = FqCtx::new(5, 2).unwrap();
        let big = FqCtx::new(5, 4).unwrap();
        let emb = small.embedding_into(&big).unwrap();
        for a in 0..25 {
            for b in 0..25 {
                assert_eq!(emb[small.mul(a, b) as usize], big.mul(emb[a as usize], emb[b as usize]));
                assert_eq!(emb[small.add(a, b) as usize], big.add(emb[a as usize], emb[b as usize]));
            }
        }
    }
}
