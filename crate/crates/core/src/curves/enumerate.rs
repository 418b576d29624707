//! Enumeration of g ∈ F_q[T]^n with deg g_i ≤ e and f(g) = 0.
//!
//! Diagonal forms split the variables into two halves and match the
//! coefficient vectors of Σ a_i g_i^d across the halves through a hash table.
//! Other forms fall back to a full scan.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ff_arith::PolyT;
use crate::forms::Form;

/// Every polynomial of degree ≤ e, indexed by its base-q coefficient digits.
#[derive(Clone, Debug)]
pub struct PolyBox {
    q: u32,
    e: usize,
    polys: Vec<PolyT>,
}

impl PolyBox {
    pub fn new(q: u32, e: usize) -> Self {
        let count = (q as u64).pow(e as u32 + 1);
        let polys = (0..count).map(|i| PolyT::from_index(q, i, e + 1)).collect();
        PolyBox { q, e, polys }
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    pub fn max_deg(&self) -> usize {
        self.e
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    #[inline]
    pub fn poly(&self, idx: u32) -> &PolyT {
        &self.polys[idx as usize]
    }

    pub fn decode(&self, g: &[u32]) -> Vec<PolyT> {
        g.iter().map(|&i| self.polys[i as usize].clone()).collect()
    }
}

/// Work estimate for enumerating the solutions of f(g)=0 with deg g ≤ e.
pub fn enumeration_cost(form: &Form, e: usize) -> u128 {
    let per = (form.q() as u128).pow(e as u32 + 1);
    match plan(form, e) {
        Some((a, b)) => per.saturating_pow(a as u32) + per.saturating_pow(b as u32),
        None => per.saturating_pow(form.n() as u32),
    }
}

/// (|A|, |B|) for meet-in-the-middle, when it applies.
fn plan(form: &Form, e: usize) -> Option<(usize, usize)> {
    form.diagonal_coeffs()?;
    let n = form.n();
    if n < 2 {
        return None;
    }
    let lanes = form.d() * e + 1;
    let bits = 32 - (form.q() - 1).leading_zeros() as usize;
    if lanes * bits.max(1) > 128 {
        return None;
    }
    let b = n / 2;
    Some((n - b, b))
}

pub fn check_budget(what: &str, needed: u128, cap: u128) -> Result<()> {
    if needed > cap {
        Err(Error::Budget { what: what.to_string(), needed, cap })
    } else {
        Ok(())
    }
}

/// Folds `visit` over all solutions with deg g_i ≤ e (including g = 0).
/// `visit` receives the coordinates as `PolyBox` indices. The result does not
/// depend on the thread count as long as `merge` is commutative and associative.
pub fn fold_solutions<A, I, V, M>(form: &Form, pbox: &PolyBox, budget: u128, init: I, visit: V, merge: M) -> Result<A>
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    V: Fn(&mut A, &[u32]) + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    let e = pbox.max_deg();
    check_budget("solution enumeration", enumeration_cost(form, e), budget)?;
    match plan(form, e) {
        Some((na, nb)) => Ok(mitm(form, pbox, na, nb, init, visit, merge)),
        None => Ok(full_scan(form, pbox, init, visit, merge)),
    }
}

fn mitm<A, I, V, M>(form: &Form, pbox: &PolyBox, na: usize, nb: usize, init: I, visit: V, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    V: Fn(&mut A, &[u32]) + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    let f = form.fq();
    let n = form.n();
    let d = form.d() as u32;
    let e = pbox.max_deg();
    let lanes = form.d() * e + 1;
    let bits = (32 - (form.q() - 1).leading_zeros()).max(1);
    let a = form.diagonal_coeffs().unwrap();
    let count = pbox.len();

    // scaled d-th powers per variable, flat [idx][lane]
    let pw: Vec<Vec<u32>> = (0..n)
        .map(|i| {
            let mut flat = vec![0u32; count * lanes];
            for idx in 0..count {
                let gd = pbox.poly(idx as u32).pow(f, d).scale(f, a[i]);
                for (s, &c) in gd.coeffs().iter().enumerate() {
                    flat[idx * lanes + s] = c;
                }
            }
            flat
        })
        .collect();
    let pack = |v: &[u32]| v.iter().enumerate().fold(0u128, |k, (s, &c)| k | (c as u128) << (bits as usize * s));

    let decode = |mut t: u64, vars: std::ops::Range<usize>, out: &mut [u32]| {
        for i in vars {
            out[i] = (t % count as u64) as u32;
            t /= count as u64;
        }
    };

    // table for the last nb variables
    let total_b = (count as u64).pow(nb as u32);
    let mut entries: Vec<(u128, u32)> = (0..total_b)
        .into_par_iter()
        .map(|t| {
            let mut g = vec![0u32; n];
            decode(t, na..n, &mut g);
            let mut acc = vec![0u32; lanes];
            for i in na..n {
                let row = &pw[i][g[i] as usize * lanes..(g[i] as usize + 1) * lanes];
                for s in 0..lanes {
                    acc[s] = f.add(acc[s], row[s]);
                }
            }
            (pack(&acc), t as u32)
        })
        .collect();
    entries.par_sort_unstable();
    let mut ranges: HashMap<u128, (u32, u32)> = HashMap::new();
    let mut i = 0;
    while i < entries.len() {
        let k = entries[i].0;
        let mut j = i;
        while j < entries.len() && entries[j].0 == k {
            j += 1;
        }
        ranges.insert(k, (i as u32, (j - i) as u32));
        i = j;
    }

    let total_a = (count as u64).pow(na as u32);
    (0..total_a)
        .into_par_iter()
        .fold(&init, |mut acc, t| {
            let mut g = vec![0u32; n];
            decode(t, 0..na, &mut g);
            let mut s_vec = vec![0u32; lanes];
            for i in 0..na {
                let row = &pw[i][g[i] as usize * lanes..(g[i] as usize + 1) * lanes];
                for s in 0..lanes {
                    s_vec[s] = f.add(s_vec[s], row[s]);
                }
            }
            for c in s_vec.iter_mut() {
                *c = f.neg(*c);
            }
            if let Some(&(start, len)) = ranges.get(&pack(&s_vec)) {
                for &(_, tb) in &entries[start as usize..(start + len) as usize] {
                    decode(tb as u64, na..n, &mut g);
                    visit(&mut acc, &g);
                }
            }
            acc
        })
        .reduce(&init, &merge)
}

fn full_scan<A, I, V, M>(form: &Form, pbox: &PolyBox, init: I, visit: V, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    V: Fn(&mut A, &[u32]) + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    let n = form.n();
    let count = pbox.len() as u64;
    let total = count.pow(n as u32);
    (0..total)
        .into_par_iter()
        .fold(&init, |mut acc, t| {
            let mut g = vec![0u32; n];
            let mut x = t;
            for gi in g.iter_mut() {
                *gi = (x % count) as u32;
                x /= count;
            }
            let polys = pbox.decode(&g);
            if form.eval_form(&polys).map(|v| v.is_zero()).unwrap_or(false) {
                visit(&mut acc, &g);
            }
            acc
        })
        .reduce(&init, &merge)
}
