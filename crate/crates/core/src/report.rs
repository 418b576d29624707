//! Check verdicts and exact-number formatting shared by all reports.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Skip,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    pub fn new(name: impl Into<String>, ok: bool) -> Self {
        Check { name: name.into(), verdict: if ok { Verdict::Pass } else { Verdict::Fail }, detail: None }
    }

    pub fn skip(name: impl Into<String>, why: impl Into<String>) -> Self {
        Check { name: name.into(), verdict: Verdict::Skip, detail: Some(why.into()) }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    pub fn failed(&self) -> bool {
        self.verdict == Verdict::Fail
    }
}

/// Tallies of evaluated and violated per-item checks, merged across workers.
#[derive(Clone, Debug, Default)]
pub struct Tally {
    evaluated: BTreeMap<&'static str, u64>,
    violated: BTreeMap<&'static str, u64>,
}

impl Tally {
    pub fn record(&mut self, name: &'static str, ok: bool) {
        *self.evaluated.entry(name).or_default() += 1;
        if !ok {
            *self.violated.entry(name).or_default() += 1;
        }
    }

    pub fn merge(&mut self, o: Tally) {
        for (k, v) in o.evaluated {
            *self.evaluated.entry(k).or_default() += v;
        }
        for (k, v) in o.violated {
            *self.violated.entry(k).or_default() += v;
        }
    }

    pub fn checks(&self, names: &[&'static str]) -> Vec<Check> {
        names
            .iter()
            .map(|&name| {
                let ev = self.evaluated.get(name).copied().unwrap_or(0);
                let bad = self.violated.get(name).copied().unwrap_or(0);
                if ev == 0 {
                    Check::skip(name, "no instances")
                } else {
                    Check::new(name, bad == 0).with_detail(format!("{} of {ev} violated", bad))
                }
            })
            .collect()
    }
}

pub fn fmt_rat(x: &BigRational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn parse_rat(s: &str) -> Option<BigRational> {
    match s.split_once('/') {
        Some((a, b)) => {
            let d: BigInt = b.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(BigRational::new(a.trim().parse().ok()?, d))
        }
        None => Some(BigRational::from_integer(s.trim().parse().ok()?)),
    }
}

/// Serde adapters writing exact numbers as decimal strings ("a/b" for
/// non-integral rationals).
pub mod ser {
    use std::fmt::Display;

    use num_rational::BigRational;
    use serde::Serializer;

    pub fn dec<T: Display, S: Serializer>(x: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(x)
    }

    pub fn rat<S: Serializer>(x: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::fmt_rat(x))
    }

    pub fn opt_rat<S: Serializer>(x: &Option<BigRational>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(r) => s.serialize_str(&super::fmt_rat(r)),
            None => s.serialize_none(),
        }
    }
}

/// q^k as an exact rational (k may be negative).
pub fn qpow(q: u32, k: i64) -> BigRational {
    let b = BigInt::from(q).pow(k.unsigned_abs() as u32);
    if k >= 0 {
        BigRational::from_integer(b)
    } else {
        BigRational::new(BigInt::one(), b)
    }
}
