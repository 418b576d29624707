//! Truncated Laurent series in T^{-1}, the completion of F_q(T) at infinity.

use rand::Rng;
use serde_json::{json, Value};

use super::field::FqCtx;
use super::poly::{element_from_json, PolyT};
use crate::error::{Error, Result};

/// `coeffs[i]` is the coefficient of T^(lo + i). When `known_from` is
/// `Some(L)` the element is only known modulo T^(L-1)·F_q[[T^-1]] and
/// `lo == L`; otherwise it is an exact finite Laurent polynomial.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Laurent {
    lo: i64,
    coeffs: Vec<u32>,
    known_from: Option<i64>,
}

fn precision(needed: i64, available: i64) -> Error {
    Error::Precision { needed, available }
}

impl Laurent {
    pub fn zero() -> Self {
        Laurent { lo: 0, coeffs: Vec::new(), known_from: None }
    }

    /// Exact element from its coefficients starting at exponent `lo`.
    pub fn exact(lo: i64, coeffs: Vec<u32>) -> Self {
        let mut x = Laurent { lo, coeffs, known_from: None };
        x.normalize();
        x
    }

    /// Element known only down to exponent `lo` (inclusive).
    pub fn truncated(lo: i64, coeffs: Vec<u32>) -> Self {
        let mut x = Laurent { lo, coeffs, known_from: Some(lo) };
        x.normalize();
        x
    }

    pub fn from_poly(p: &PolyT) -> Self {
        Self::exact(0, p.coeffs().to_vec())
    }

    /// Exact element from (exponent, coefficient) pairs.
    pub fn from_terms(terms: &[(i64, u32)]) -> Self {
        if terms.is_empty() {
            return Self::zero();
        }
        let lo = terms.iter().map(|t| t.0).min().unwrap();
        let hi = terms.iter().map(|t| t.0).max().unwrap();
        let mut v = vec![0u32; (hi - lo + 1) as usize];
        for &(e, c) in terms {
            v[(e - lo) as usize] = c;
        }
        Self::exact(lo, v)
    }

    /// Exact fractional element with coefficient of T^{-i-1} equal to digit i of `idx` in base q.
    pub fn from_frac_index(q: u32, mut idx: u64, depth: usize) -> Self {
        let mut v = vec![0u32; depth];
        for i in 0..depth {
            v[depth - 1 - i] = (idx % q as u64) as u32;
            idx /= q as u64;
        }
        Self::exact(-(depth as i64), v)
    }

    /// Uniformly random exact fractional element with `depth` coefficients below T^0.
    pub fn random_frac<R: Rng>(rng: &mut R, q: u32, depth: usize) -> Self {
        let v = (0..depth).map(|_| rng.gen_range(0..q)).collect();
        Self::exact(-(depth as i64), v)
    }

    fn normalize(&mut self) {
        while self.coeffs.last() == Some(&0) {
            self.coeffs.pop();
        }
        match self.known_from {
            None => {
                let z = self.coeffs.iter().take_while(|&&c| c == 0).count();
                self.coeffs.drain(..z);
                self.lo += z as i64;
                if self.coeffs.is_empty() {
                    self.lo = 0;
                }
            }
            Some(l) => {
                debug_assert!(self.lo >= l);
                if self.lo > l {
                    let pad = (self.lo - l) as usize;
                    let mut v = vec![0u32; pad];
                    v.extend_from_slice(&self.coeffs);
                    self.coeffs = v;
                    self.lo = l;
                }
            }
        }
    }

    pub fn is_exact(&self) -> bool {
        self.known_from.is_none()
    }

    /// Lowest exponent whose coefficient is known (`None` when exact).
    pub fn known_from(&self) -> Option<i64> {
        self.known_from
    }

    /// Coefficient of T^e.
    pub fn coeff(&self, e: i64) -> Result<u32> {
        if let Some(l) = self.known_from {
            if e < l {
                return Err(precision(e, l));
            }
        }
        if e < self.lo {
            return Ok(0);
        }
        Ok(self.coeffs.get((e - self.lo) as usize).copied().unwrap_or(0))
    }

    /// Coefficient of T^e for an element that is certainly known there.
    #[inline]
    pub fn coeff_unchecked(&self, e: i64) -> u32 {
        if e < self.lo {
            return 0;
        }
        self.coeffs.get((e - self.lo) as usize).copied().unwrap_or(0)
    }

    /// Highest exponent with a nonzero known coefficient.
    fn top_nonzero(&self) -> Option<i64> {
        self.coeffs.iter().rposition(|&c| c != 0).map(|i| self.lo + i as i64)
    }

    /// Lowest and highest exponents with nonzero known coefficients.
    pub fn support(&self) -> Option<(i64, i64)> {
        let first = self.coeffs.iter().position(|&c| c != 0)?;
        Some((self.lo + first as i64, self.top_nonzero()?))
    }

    /// Exponent bound for the top: the top nonzero or, for an unknown truncated
    /// value with all known coefficients zero, `known_from - 1`.
    fn top_bound(&self) -> Option<i64> {
        match (self.top_nonzero(), self.known_from) {
            (Some(t), _) => Some(t),
            (None, Some(l)) => Some(l - 1),
            (None, None) => None,
        }
    }

    /// log_q |γ|, `None` for zero. Errors when the known coefficients are all
    /// zero but the element is truncated.
    pub fn abs_exp(&self) -> Result<Option<i64>> {
        match (self.top_nonzero(), self.known_from) {
            (Some(t), _) => Ok(Some(t)),
            (None, None) => Ok(None),
            (None, Some(l)) => Err(precision(l - 1, l)),
        }
    }

    /// log_q ‖γ‖, `None` when the fractional part is zero.
    pub fn frac_exp(&self) -> Result<Option<i64>> {
        self.frac_part().abs_exp()
    }

    /// (log_q|γ|, log_q‖γ‖) with `None` standing for the value 0.
    pub fn norms(&self) -> Result<(Option<i64>, Option<i64>)> {
        Ok((self.abs_exp()?, self.frac_exp()?))
    }

    /// Certified test of |γ| < q^k.
    pub fn abs_lt(&self, k: i64) -> Result<bool> {
        if let Some(t) = self.top_nonzero() {
            if t >= k {
                return Ok(false);
            }
        }
        match self.known_from {
            Some(l) if l > k => Err(precision(k, l)),
            _ => Ok(true),
        }
    }

    /// Certified test of ‖γ‖ < q^k (always true for k ≥ 0).
    pub fn frac_lt(&self, k: i64) -> Result<bool> {
        if k >= 0 {
            return Ok(true);
        }
        self.frac_part().abs_lt(k)
    }

    pub fn frac_part(&self) -> Laurent {
        let mut x = self.clone();
        if x.lo >= 0 {
            x.coeffs.clear();
        } else {
            let keep = ((-x.lo) as usize).min(x.coeffs.len());
            x.coeffs.truncate(keep);
        }
        if x.known_from.is_none() && x.coeffs.is_empty() {
            x.lo = 0;
        }
        x.normalize();
        x
    }

    /// Polynomial part (exponents ≥ 0). Errors if the element is not known down to T^0.
    pub fn poly_part(&self) -> Result<PolyT> {
        if let Some(l) = self.known_from {
            if l > 0 {
                return Err(precision(0, l));
            }
        }
        let v: Vec<u32> = (0..=self.top_nonzero().unwrap_or(-1).max(-1))
            .map(|e| self.coeff_unchecked(e))
            .collect();
        Ok(PolyT::from_coeffs(v))
    }

    /// Forget coefficients below T^l.
    pub fn truncate(&self, l: i64) -> Laurent {
        let l = match self.known_from {
            Some(k) => k.max(l),
            None => l,
        };
        let top = self.top_nonzero().unwrap_or(l - 1).max(l - 1);
        let v = (l..=top).map(|e| self.coeff_unchecked(e)).collect();
        Laurent::truncated(l, v)
    }

    fn combine(&self, f: &FqCtx, o: &Laurent, sign: bool) -> Laurent {
        let known = match (self.known_from, o.known_from) {
            (None, None) => None,
            (Some(a), None) => Some(a),
            (None, Some(b)) => Some(b),
            (Some(a), Some(b)) => Some(a.max(b)),
        };
        let lo_all = match known {
            Some(k) => k,
            None => {
                let a = if self.coeffs.is_empty() { i64::MAX } else { self.lo };
                let b = if o.coeffs.is_empty() { i64::MAX } else { o.lo };
                let m = a.min(b);
                if m == i64::MAX {
                    return Laurent::zero();
                }
                m
            }
        };
        let hi = self
            .top_nonzero()
            .unwrap_or(lo_all - 1)
            .max(o.top_nonzero().unwrap_or(lo_all - 1))
            .max(lo_all - 1);
        let v = (lo_all..=hi)
            .map(|e| {
                let (a, b) = (self.coeff_unchecked(e), o.coeff_unchecked(e));
                if sign {
                    f.add(a, b)
                } else {
                    f.sub(a, b)
                }
            })
            .collect();
        match known {
            Some(k) => Laurent::truncated(k, v),
            None => Laurent::exact(lo_all, v),
        }
    }

    pub fn add(&self, f: &FqCtx, o: &Laurent) -> Laurent {
        self.combine(f, o, true)
    }

    pub fn sub(&self, f: &FqCtx, o: &Laurent) -> Laurent {
        self.combine(f, o, false)
    }

    pub fn neg(&self, f: &FqCtx) -> Laurent {
        let mut x = self.clone();
        for c in x.coeffs.iter_mut() {
            *c = f.neg(*c);
        }
        x
    }

    pub fn scale(&self, f: &FqCtx, c: u32) -> Laurent {
        if c == 0 {
            return match self.known_from {
                None => Laurent::zero(),
                Some(l) => Laurent::truncated(l, Vec::new()),
            };
        }
        let mut x = self.clone();
        for v in x.coeffs.iter_mut() {
            *v = f.mul(*v, c);
        }
        x
    }

    /// Multiplication by T^k.
    pub fn shift(&self, k: i64) -> Laurent {
        let mut x = self.clone();
        x.lo += k;
        if let Some(l) = x.known_from.as_mut() {
            *l += k;
        }
        if x.known_from.is_none() && x.coeffs.is_empty() {
            x.lo = 0;
        }
        x
    }

    pub fn mul(&self, f: &FqCtx, o: &Laurent) -> Laurent {
        let exact_zero = |x: &Laurent| x.known_from.is_none() && x.coeffs.is_empty();
        if exact_zero(self) || exact_zero(o) {
            return Laurent::zero();
        }
        let known = match (self.known_from, o.known_from) {
            (None, None) => None,
            (Some(a), None) => Some(a + o.top_bound().unwrap()),
            (None, Some(b)) => Some(b + self.top_bound().unwrap()),
            (Some(a), Some(b)) => Some((a + o.top_bound().unwrap()).max(b + self.top_bound().unwrap())),
        };
        let mut v = vec![0u32; self.coeffs.len() + o.coeffs.len()];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in o.coeffs.iter().enumerate() {
                v[i + j] = f.add(v[i + j], f.mul(a, b));
            }
        }
        let lo = self.lo + o.lo;
        match known {
            None => Laurent::exact(lo, v),
            Some(k) => {
                let top = lo + v.len() as i64 - 1;
                let w = (k..=top.max(k - 1))
                    .map(|e| if e < lo { 0 } else { v.get((e - lo) as usize).copied().unwrap_or(0) })
                    .collect();
                Laurent::truncated(k, w)
            }
        }
    }

    pub fn mul_poly(&self, f: &FqCtx, p: &PolyT) -> Laurent {
        self.mul(f, &Laurent::from_poly(p))
    }

    /// JSON form {top_degree, coeffs (top down to -prec), prec, exact}.
    pub fn to_json(&self, f: &FqCtx) -> Value {
        let low = self.known_from.unwrap_or(self.lo.min(0));
        let top = self.top_nonzero().unwrap_or(low - 1).max(low - 1);
        let coeffs: Vec<Value> = (low..=top)
            .rev()
            .map(|e| {
                let c = self.coeff_unchecked(e);
                if f.k() == 1 {
                    Value::from(c)
                } else {
                    Value::from(f.to_digits(c))
                }
            })
            .collect();
        json!({ "top_degree": top, "coeffs": coeffs, "prec": -low, "exact": self.known_from.is_none() })
    }

    pub fn from_json(f: &FqCtx, v: &Value) -> Result<Laurent> {
        let bad = || Error::invalid("Laurent element must be {top_degree, coeffs, prec}");
        let top = v.get("top_degree").and_then(Value::as_i64).ok_or_else(bad)?;
        let prec = v.get("prec").and_then(Value::as_i64).ok_or_else(bad)?;
        let exact = v.get("exact").and_then(Value::as_bool).unwrap_or(false);
        let arr = v.get("coeffs").and_then(Value::as_array).ok_or_else(bad)?;
        if arr.len() as i64 != top + prec + 1 && !(arr.is_empty() && top < -prec) {
            return Err(Error::invalid("coeffs length must be top_degree + prec + 1"));
        }
        let mut asc = Vec::with_capacity(arr.len());
        for c in arr.iter().rev() {
            asc.push(element_from_json(f, c)?);
        }
        Ok(if exact { Laurent::exact(-prec, asc) } else { Laurent::truncated(-prec, asc) })
    }
}

/// Expansion of a/r at infinity, exact down to T^{-prec}.
pub fn laurent_expand(f: &FqCtx, a: &PolyT, r: &PolyT, prec: i64) -> Result<Laurent> {
    if r.is_zero() {
        return Err(Error::invalid("laurent_expand with r = 0"));
    }
    let (quo, rem) = a.divrem(f, r)?;
    let prec_u = prec.max(0) as usize;
    let (frac, _) = rem.shift(prec_u).divrem(f, r)?;
    let mut v = frac.coeffs().to_vec();
    v.resize(prec_u, 0);
    let mut all = v;
    all.extend_from_slice(quo.coeffs());
    let x = Laurent::truncated(-(prec_u as i64), all);
    if prec < 0 {
        return Ok(x.truncate(-prec));
    }
    Ok(x)
}

/// A point a/r + θ of the torus with r monic and gcd(a, r) = 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalArcPoint {
    pub a: PolyT,
    pub r: PolyT,
    pub theta: Laurent,
}

/// Continued-fraction convergents (a_k, r_k) of α with deg r_k ≤ max_deg, r_k monic.
/// The flag reports whether the expansion of the (exact or truncated) input terminated.
pub fn convergents(f: &FqCtx, alpha: &Laurent, max_deg: i64) -> Result<(Vec<(PolyT, PolyT)>, bool)> {
    if !alpha.abs_lt(0)? {
        return Err(Error::invalid("convergents need |α| < 1"));
    }
    let l = match alpha.known_from() {
        Some(l) => {
            if -l < 2 * max_deg + 2 {
                return Err(precision(-(2 * max_deg + 2), l));
            }
            -l
        }
        None => (-alpha.lo).max(0),
    };
    let num = PolyT::from_coeffs((-l..0).map(|e| alpha.coeff_unchecked(e)).collect());
    let den = PolyT::monomial(1, l as usize);
    let mut out = vec![(PolyT::zero(), PolyT::one())];
    let (mut x, mut y) = (den, num);
    let (mut p_prev, mut p_cur) = (PolyT::one(), PolyT::zero());
    let (mut q_prev, mut q_cur) = (PolyT::zero(), PolyT::one());
    let mut finished = y.is_zero();
    while !y.is_zero() {
        let (b, rem) = x.divrem(f, &y)?;
        x = y;
        y = rem;
        let p_new = b.mul(f, &p_cur).add(f, &p_prev);
        let q_new = b.mul(f, &q_cur).add(f, &q_prev);
        if q_new.deg_i64() > max_deg {
            break;
        }
        p_prev = std::mem::replace(&mut p_cur, p_new);
        q_prev = std::mem::replace(&mut q_cur, q_new);
        let c = f.inv(q_cur.lead());
        out.push((p_cur.scale(f, c), q_cur.scale(f, c)));
        if y.is_zero() {
            finished = true;
        }
    }
    Ok((out, finished))
}

/// Dirichlet approximation: (a, r, θ) with |a| < |r| ≤ q^M and |rθ| < q^{-M}.
pub fn best_approx(f: &FqCtx, alpha: &Laurent, m: i64) -> Result<RationalArcPoint> {
    let (cv, finished) = convergents(f, alpha, m)?;
    let (a, r) = cv.last().cloned().unwrap();
    let theta = if finished && alpha.is_exact() {
        Laurent::zero()
    } else if a.is_zero() {
        alpha.clone()
    } else {
        let depth = match alpha.known_from() {
            Some(l) => -l,
            None => (-alpha.lo).max(2 * m + 2),
        };
        let approx = laurent_expand(f, &a, &r, depth)?;
        let t = alpha.sub(f, &approx);
        if alpha.is_exact() {
            t.truncate(-depth)
        } else {
            t
        }
    };
    Ok(RationalArcPoint { a, r, theta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn f5() -> FqCtx {
        FqCtx::prime(5).unwrap()
    }

    #[test]
    fn expand_examples() {
        let f = f5();
        let x = laurent_expand(&f, &PolyT::one(), &PolyT::t(), 3).unwrap();
        assert_eq!((x.coeff(-1).unwrap(), x.coeff(-2).unwrap(), x.coeff(-3).unwrap()), (1, 0, 0));
        let x = laurent_expand(&f, &PolyT::one(), &PolyT::from_coeffs(vec![4, 1]), 3).unwrap();
        assert_eq!((x.coeff(-1).unwrap(), x.coeff(-2).unwrap(), x.coeff(-3).unwrap()), (1, 1, 1));
        assert!(x.coeff(-4).is_err());
        let x = laurent_expand(&f, &PolyT::t(), &PolyT::from_coeffs(vec![1, 0, 1]), 4).unwrap();
        let got: Vec<u32> = (-4..=0).rev().map(|e| x.coeff(e).unwrap()).collect();
        assert_eq!(got, vec![0, 1, 0, 4, 0]);
        assert!(laurent_expand(&f, &PolyT::one(), &PolyT::zero(), 3).is_err());
    }

    #[test]
    fn expand_times_r_recovers_a() {
        let f = FqCtx::prime(7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let r = PolyT::from_coeffs((0..4).map(|_| rng.gen_range(0..7)).collect::<Vec<_>>());
            if r.is_zero() {
                continue;
            }
            let a = PolyT::from_coeffs((0..5).map(|_| rng.gen_range(0..7)).collect::<Vec<_>>());
            let x = laurent_expand(&f, &a, &r, 6).unwrap();
            let back = x.mul_poly(&f, &r);
            assert_eq!(back.poly_part().unwrap(), a);
            assert!(back.frac_part().abs_lt(back.known_from().unwrap()).is_ok());
        }
    }

    #[test]
    fn norms_examples() {
        let f = f5();
        let x = Laurent::from_terms(&[(2, 1), (-1, 1)]);
        assert_eq!(x.norms().unwrap(), (Some(2), Some(-1)));
        assert_eq!(Laurent::zero().norms().unwrap(), (None, None));
        let x = Laurent::from_terms(&[(-2, 3)]);
        assert_eq!(x.norms().unwrap(), (Some(-2), Some(-2)));
        let t = Laurent::truncated(-3, vec![0, 0, 0]);
        assert!(t.abs_exp().is_err());
        assert!(t.abs_lt(-3).unwrap());
        assert!(t.abs_lt(-4).is_err());
        let _ = f;
    }

    #[test]
    fn frac_norm_never_exceeds_abs() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..300 {
            let lo = rng.gen_range(-6..2);
            let v: Vec<u32> = (0..rng.gen_range(0..8)).map(|_| rng.gen_range(0..5)).collect();
            let x = Laurent::exact(lo, v);
            let (a, fr) = x.norms().unwrap();
            assert!(fr <= a);
        }
    }

    #[test]
    fn best_approx_examples() {
        let f = f5();
        let x = Laurent::from_terms(&[(-1, 1)]);
        let b = best_approx(&f, &x, 1).unwrap();
        assert_eq!((b.a, b.r, b.theta), (PolyT::one(), PolyT::t(), Laurent::zero()));
        let x = Laurent::from_terms(&[(-1, 1), (-2, 1)]);
        let b = best_approx(&f, &x, 2).unwrap();
        assert_eq!(b.a, PolyT::from_coeffs(vec![1, 1]));
        assert_eq!(b.r, PolyT::monomial(1, 2));
        assert_eq!(b.theta, Laurent::zero());
        let x = Laurent::from_terms(&[(-4, 2)]);
        let b = best_approx(&f, &x, 2).unwrap();
        assert_eq!((b.a, b.r), (PolyT::zero(), PolyT::one()));
        assert_eq!(b.theta, x);
        let t = Laurent::truncated(-3, vec![1, 2, 3]);
        assert!(best_approx(&f, &t, 1).is_err());
    }

    #[test]
    fn best_approx_inequalities_and_nesting() {
        let f = FqCtx::prime(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let alpha = Laurent::random_frac(&mut rng, 3, 14);
            let mut prev: Option<PolyT> = None;
            for m in 0..6 {
                let b = best_approx(&f, &alpha, m).unwrap();
                assert!(b.r.is_monic());
                assert!(b.a.deg_i64() < b.r.deg_i64());
                assert!(b.r.deg_i64() <= m);
                assert_eq!(b.a.gcd(&f, &b.r).is_zero() || b.a.gcd(&f, &b.r) == PolyT::one(), true);
                if !b.a.is_zero() {
                    assert_eq!(b.a.gcd(&f, &b.r), PolyT::one());
                }
                let err = alpha.mul_poly(&f, &b.r).sub(&f, &Laurent::from_poly(&b.a));
                assert!(err.abs_lt(-m).unwrap());
                let (cv, _) = convergents(&f, &alpha, m + 1).unwrap();
                assert!(cv.iter().any(|(_, r)| *r == b.r));
                if let Some(p) = &prev {
                    assert!(p.deg_i64() <= b.r.deg_i64());
                }
                prev = Some(b.r.clone());
            }
        }
    }

    #[test]
    fn truncated_arithmetic_tracks_precision() {
        let f = f5();
        let x = Laurent::truncated(-4, vec![1, 0, 2, 0, 3]);
        let y = Laurent::from_terms(&[(1, 1)]);
        let z = x.mul(&f, &y);
        assert_eq!(z.known_from(), Some(-3));
        let w = x.add(&f, &Laurent::truncated(-2, vec![1]));
        assert_eq!(w.known_from(), Some(-2));
        assert!(w.coeff(-3).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let f = f5();
        let x = Laurent::truncated(-3, vec![1, 0, 2, 4, 1]);
        let v = x.to_json(&f);
        assert_eq!(Laurent::from_json(&f, &v).unwrap(), x);
        let e = Laurent::from_terms(&[(2, 1), (-1, 3)]);
        assert_eq!(Laurent::from_json(&f, &e.to_json(&f)).unwrap(), e);
    }
}
