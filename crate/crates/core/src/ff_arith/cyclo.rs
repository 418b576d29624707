//! Exact elements of Z[ζ_p] in the basis ζ^0, …, ζ^{p-2}.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CycloValue {
    p: u32,
    coords: Vec<i128>,
}

impl CycloValue {
    pub fn zero(p: u32) -> Self {
        CycloValue { p, coords: vec![0; (p - 1) as usize] }
    }

    pub fn from_int(p: u32, n: i128) -> Self {
        let mut z = Self::zero(p);
        z.coords[0] = n;
        z
    }

    /// ζ^k
    pub fn zeta_pow(p: u32, k: u32) -> Self {
        let mut counts = vec![0i128; p as usize];
        counts[(k % p) as usize] = 1;
        Self::from_counts(p, &counts)
    }

    /// Σ_x counts[x]·ζ^x, reduced with ζ^{p-1} = -(1 + … + ζ^{p-2}).
    pub fn from_counts(p: u32, counts: &[i128]) -> Self {
        debug_assert_eq!(counts.len(), p as usize);
        let last = counts[(p - 1) as usize];
        CycloValue { p, coords: counts[..(p - 1) as usize].iter().map(|&c| c - last).collect() }
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn coords(&self) -> &[i128] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    /// The value as a rational integer, if it is one.
    pub fn as_integer(&self) -> Option<i128> {
        if self.coords[1..].iter().all(|&c| c == 0) {
            Some(self.coords[0])
        } else {
            None
        }
    }

    pub fn add(&self, o: &CycloValue) -> CycloValue {
        debug_assert_eq!(self.p, o.p);
        CycloValue { p: self.p, coords: self.coords.iter().zip(&o.coords).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, o: &CycloValue) -> CycloValue {
        CycloValue { p: self.p, coords: self.coords.iter().zip(&o.coords).map(|(a, b)| a - b).collect() }
    }

    pub fn scale(&self, c: i128) -> CycloValue {
        CycloValue { p: self.p, coords: self.coords.iter().map(|a| a * c).collect() }
    }

    pub fn mul(&self, o: &CycloValue) -> CycloValue {
        let p = self.p as usize;
        let mut counts = vec![0i128; p];
        for (i, &a) in self.coords.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in o.coords.iter().enumerate() {
                counts[(i + j) % p] += a * b;
            }
        }
        Self::from_counts(self.p, &counts)
    }

    pub fn conj(&self) -> CycloValue {
        let p = self.p as usize;
        let mut counts = vec![0i128; p];
        for (i, &a) in self.coords.iter().enumerate() {
            counts[(p - i) % p] += a;
        }
        Self::from_counts(self.p, &counts)
    }

    /// |z|² = Σ_m M_m ζ^m with M_m = Σ_j c_j c_{j-m}; returns the integer
    /// vector M (indices mod p), exact.
    fn abs_sq_coeffs(&self) -> Vec<i128> {
        let p = self.p as usize;
        let mut c = self.coords.clone();
        c.push(0);
        (0..p)
            .map(|m| (0..p).map(|j| c[j] * c[(j + p - m) % p]).sum())
            .collect()
    }

    /// |z|² when it is a rational integer (then the comparison is exact).
    pub fn abs_sq_integer(&self) -> Option<i128> {
        let m = self.abs_sq_coeffs();
        if m[1..].iter().all(|&x| x == m[1]) {
            Some(m[0] - if m.len() > 1 { m[1] } else { 0 })
        } else {
            None
        }
    }

    /// Certified enclosure [lo, hi] of |z|² via the complex embedding ζ ↦ e^{2πi/p}.
    pub fn abs_sq_interval(&self) -> (f64, f64) {
        if let Some(v) = self.abs_sq_integer() {
            let x = v as f64;
            let e = x.abs() * f64::EPSILON;
            return (x - e, x + e);
        }
        let m = self.abs_sq_coeffs();
        let p = self.p as f64;
        let mut v = 0.0f64;
        let mut mag = 0.0f64;
        for (k, &mk) in m.iter().enumerate() {
            let c = (2.0 * PI * k as f64 / p).cos();
            v += mk as f64 * c;
            mag += (mk as f64).abs();
        }
        // cos and the products are each good to a few ulps; the sum adds p more
        let err = mag * f64::EPSILON * (8.0 + 2.0 * p) + f64::MIN_POSITIVE;
        (v - err, v + err)
    }

    /// Certified decision of |z|² ≤ bound.
    pub fn abs_sq_le(&self, bound: &BigRational) -> Result<bool> {
        if let Some(v) = self.abs_sq_integer() {
            return Ok(BigRational::from_integer(BigInt::from(v)) <= *bound);
        }
        let (lo, hi) = self.abs_sq_interval();
        let b = bound.to_f64().unwrap_or(f64::INFINITY);
        let slack = b.abs() * 4.0 * f64::EPSILON;
        if hi < b - slack {
            Ok(true)
        } else if lo > b + slack {
            Ok(false)
        } else {
            Err(Error::assertion("magnitude comparison could not be certified"))
        }
    }

    /// Exact real part when the value is real (coordinates symmetric under conjugation).
    pub fn is_real(&self) -> bool {
        *self == self.conj()
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.coords.iter().map(|c| c.to_string()).collect()
    }
}

impl std::fmt::Display for CycloValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if let Some(v) = self.as_integer() {
            return write!(f, "{v}");
        }
        let mut first = true;
        for (k, &c) in self.coords.iter().enumerate() {
            if c == 0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}·ζ^{k}")?;
        }
        Ok(())
    }
}

/// Convenience for exact rationals.
pub fn rat(n: i128, d: i128) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_is_zero(x: &BigRational) -> bool {
    x.is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_of_all_roots_vanishes() {
        for p in [2u32, 3, 5, 7, 11] {
            let mut acc = CycloValue::zero(p);
            for x in 0..p {
                acc = acc.add(&CycloValue::zeta_pow(p, x));
            }
            assert!(acc.is_zero(), "p={p}");
        }
    }

    #[test]
    fn zeta_multiplies_exponents() {
        let p = 7;
        for a in 0..p {
            for b in 0..p {
                assert_eq!(
                    CycloValue::zeta_pow(p, a).mul(&CycloValue::zeta_pow(p, b)),
                    CycloValue::zeta_pow(p, a + b)
                );
            }
        }
    }

    #[test]
    fn unit_modulus() {
        for p in [3u32, 5, 7] {
            for a in 0..p {
                let z = CycloValue::zeta_pow(p, a);
                assert_eq!(z.abs_sq_integer(), Some(1));
            }
        }
    }

    #[test]
    fn gauss_sum_modulus() {
        // quadratic Gauss sum over F_5 has |g|² = 5
        let p = 5;
        let mut counts = vec![0i128; 5];
        for x in 0..5u32 {
            counts[((x * x) % 5) as usize] += 1;
        }
        let g = CycloValue::from_counts(p, &counts);
        assert_eq!(g.abs_sq_integer(), Some(5));
        assert!(g.abs_sq_le(&rat(5, 1)).unwrap());
        assert!(!g.abs_sq_le(&rat(49, 10)).unwrap());
    }

    #[test]
    fn interval_contains_float_value() {
        let p = 7;
        let z = CycloValue::from_counts(p, &[3, -1, 4, 1, -5, 9, 2]);
        let (lo, hi) = z.abs_sq_interval();
        let mut re = 0.0;
        let mut im = 0.0;
        for (k, c) in [3, -1, 4, 1, -5, 9, 2].iter().enumerate() {
            let t = 2.0 * PI * k as f64 / 7.0;
            re += *c as f64 * t.cos();
            im += *c as f64 * t.sin();
        }
        let v = re * re + im * im;
        assert!(lo <= v + 1e-9 && v - 1e-9 <= hi);
        assert!(hi - lo < 1e-9);
    }
}
