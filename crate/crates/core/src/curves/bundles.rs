//! Pull-backs of T̂_X and T_X along a rational curve c = (g_1:…:g_n).
//!
//! c*T̂_X is the kernel of O(e)^n → O(de) given by ∇f(g). Sections of its
//! twists are polynomial vectors h with ∇f(g)·h = 0, so everything reduces to
//! kernels of banded matrices over F_q. c*T_X is the cokernel of O → c*T̂_X,
//! 1 ↦ g; its sections need the connecting map H¹(O(m)) → H¹(c*T̂_X(m)),
//! computed on the Čech cover {T ≠ ∞}, {T ≠ 0}.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ff_arith::linalg::nullity;
use crate::ff_arith::{FqCtx, PolyT};
use crate::forms::Form;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Bundle {
    #[serde(rename = "hatT")]
    HatT,
    T,
}

impl Bundle {
    pub fn label(self) -> &'static str {
        match self {
            Bundle::HatT => "hatT",
            Bundle::T => "T",
        }
    }
}

/// Sorted (descending) splitting degrees.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SplittingType {
    pub bundle: Bundle,
    pub degrees: Vec<i64>,
}

impl SplittingType {
    pub fn min_degree(&self) -> i64 {
        *self.degrees.iter().min().unwrap()
    }

    pub fn max_degree(&self) -> i64 {
        *self.degrees.iter().max().unwrap()
    }

    pub fn sum(&self) -> i64 {
        self.degrees.iter().sum()
    }
}

/// A degree-e map P¹ → X given by a primitive tuple on X.
#[derive(Clone, Debug)]
pub struct CurveTuple {
    g: Vec<PolyT>,
    e: usize,
    grad: Vec<PolyT>,
}

impl CurveTuple {
    /// Validates f(g) = 0, gcd(g) = 1 and computes ∇f(g).
    pub fn new(form: &Form, g: Vec<PolyT>) -> Result<Self> {
        let f = form.fq();
        if g.len() != form.n() {
            return Err(Error::invalid(format!("expected {} coordinates, got {}", form.n(), g.len())));
        }
        let e = g.iter().filter_map(|x| x.deg()).max().ok_or_else(|| Error::invalid("zero tuple"))?;
        if !form.eval_form(&g)?.is_zero() {
            return Err(Error::invalid("tuple is not on the hypersurface"));
        }
        let gcd = g.iter().fold(PolyT::zero(), |acc, x| acc.gcd(f, x));
        if gcd.deg() != Some(0) {
            return Err(Error::invalid("coordinates have a common factor"));
        }
        let grad = form.grad(&g)?;
        Ok(CurveTuple { g, e, grad })
    }

    /// Skips validation; the caller guarantees f(g) = 0 and gcd(g) = 1.
    pub(crate) fn from_parts(form: &Form, g: Vec<PolyT>, e: usize) -> Result<Self> {
        let grad = form.grad(&g)?;
        Ok(CurveTuple { g, e, grad })
    }

    pub fn g(&self) -> &[PolyT] {
        &self.g
    }

    pub fn e(&self) -> usize {
        self.e
    }

    pub fn grad(&self) -> &[PolyT] {
        &self.grad
    }
}

/// Per-curve cohomology, with memoized h⁰ values.
pub struct CurveBundles<'a> {
    form: &'a Form,
    c: &'a CurveTuple,
    hat: BTreeMap<i64, usize>,
    tan: BTreeMap<i64, usize>,
}

impl<'a> CurveBundles<'a> {
    pub fn new(form: &'a Form, c: &'a CurveTuple) -> Self {
        CurveBundles { form, c, hat: BTreeMap::new(), tan: BTreeMap::new() }
    }

    fn fq(&self) -> &FqCtx {
        self.form.fq()
    }

    fn n(&self) -> usize {
        self.form.n()
    }

    fn e(&self) -> i64 {
        self.c.e as i64
    }

    fn d(&self) -> i64 {
        self.form.d() as i64
    }

    /// h⁰(c*T̂_X(m)) = dim{h : deg h_i ≤ e+m, ∇f(g)·h = 0}.
    pub fn h0_hat(&mut self, m: i64) -> usize {
        if let Some(&v) = self.hat.get(&m) {
            return v;
        }
        let v = self.compute_h0_hat(m);
        self.hat.insert(m, v);
        v
    }

    fn compute_h0_hat(&self, m: i64) -> usize {
        let b = self.e() + m;
        if b < 0 {
            return 0;
        }
        let b = b as usize;
        let n = self.n();
        let cols = n * (b + 1);
        let rows = (self.d() as usize - 1) * self.c.e + b + 1;
        let mut mat = vec![0u32; rows * cols];
        for (i, fi) in self.c.grad.iter().enumerate() {
            for t in 0..=b {
                for (s, &c) in fi.coeffs().iter().enumerate() {
                    mat[(s + t) * cols + i * (b + 1) + t] = c;
                }
            }
        }
        nullity(self.fq(), &mut mat, rows, cols)
    }

    /// dim{h : deg h_i ≤ e−1−ρ, h·∇f(g) = 0}.
    pub fn h0_twist(&mut self, rho: i64) -> usize {
        self.h0_hat(-1 - rho)
    }

    /// dim ker(H¹(O(m)) → H¹(c*T̂_X(m))), zero for m ≥ −1.
    ///
    /// A class Σ_{m<i<0} c_i T^i maps to the cocycle c·g. It is a coboundary
    /// when c·g = a − b with a a polynomial section of c*T̂_X(m) on the finite
    /// chart and b supported in degrees ≤ e+m. Solving for (c, a) and dividing
    /// out the pairs with c = 0 gives the kernel dimension.
    pub fn connecting_kernel(&mut self, m: i64) -> usize {
        if m >= -1 || self.c.e == 0 {
            return 0;
        }
        let n = self.n();
        let e = self.c.e;
        let nc = (-m - 1) as usize;
        let na = n * e;
        let cols = nc + na;
        let eq_rows = (self.d() as usize - 1) * e + e;
        // degrees in (e+m, e) where b cannot absorb c·g; below 0 a cannot either
        let t0 = e as i64 + m + 1;
        let fix_rows = n * (e as i64 - t0) as usize;
        let rows = eq_rows + fix_rows;
        let mut mat = vec![0u32; rows * cols];
        let f = self.fq();
        // ∇f(g)·a = 0
        for (i, fi) in self.c.grad.iter().enumerate() {
            for t in 0..e {
                for (s, &c) in fi.coeffs().iter().enumerate() {
                    mat[(s + t) * cols + nc + i * e + t] = c;
                }
            }
        }
        // a_{i,t} = (c·g_i)_t, where c_k multiplies T^{m+k}; a_{i,t} absent for t < 0
        let mut r = eq_rows;
        for i in 0..n {
            for t in t0..e as i64 {
                if t >= 0 {
                    mat[r * cols + nc + i * e + t as usize] = 1;
                }
                for k in 1..=nc {
                    let src = t - (m + k as i64);
                    if src >= 0 {
                        let c = self.c.g[i].coeff(src as usize);
                        if c != 0 {
                            mat[r * cols + (k - 1)] = f.neg(c);
                        }
                    }
                }
                r += 1;
            }
        }
        let total = nullity(f, &mut mat, rows, cols);
        total - self.h0_hat(m)
    }

    /// h⁰(c*T_X(m)).
    pub fn h0_tangent(&mut self, m: i64) -> usize {
        if let Some(&v) = self.tan.get(&m) {
            return v;
        }
        let v = self.h0_hat(m) - (m + 1).max(0) as usize + self.connecting_kernel(m);
        self.tan.insert(m, v);
        v
    }

    /// Splitting of c*T̂_X from first differences of ρ ↦ h0_twist(ρ).
    pub fn splitting_hat(&mut self) -> Result<SplittingType> {
        let (n, e, d) = (self.n() as i64, self.e(), self.d());
        // degrees lie in [(2−d)e, e]
        let lo = (2 - d) * e;
        let mut degrees = Vec::new();
        let mut prev_ge = 0i64;
        for rho in (lo..=e + 1).rev() {
            // #{k ≥ ρ} = h0_twist(ρ−1) − h0_twist(ρ)
            let ge = self.h0_twist(rho - 1) as i64 - self.h0_twist(rho) as i64;
            if ge < prev_ge || ge > n - 1 {
                return Err(Error::assertion(format!("inconsistent h0 differences at ρ={rho}")));
            }
            for _ in prev_ge..ge {
                degrees.push(rho);
            }
            prev_ge = ge;
        }
        finish(Bundle::HatT, degrees, (n - 1) as usize, e * (n - d))
    }

    /// Splitting of c*T_X from first differences of m ↦ h⁰(c*T_X(m)).
    pub fn splitting_t(&mut self) -> Result<SplittingType> {
        let (n, e, d) = (self.n() as i64, self.e(), self.d());
        let lo = (2 - d) * e;
        let hi = e * (n - d) - (n - 3) * lo;
        let mut degrees = Vec::new();
        let mut prev_ge = 0i64;
        for v in (lo..=hi + 1).rev() {
            // #{l ≥ v} = h⁰(T(−v)) − h⁰(T(−v−1))
            let ge = self.h0_tangent(-v) as i64 - self.h0_tangent(-v - 1) as i64;
            if ge < prev_ge || ge > n - 2 {
                return Err(Error::assertion(format!("inconsistent tangent differences at {v}")));
            }
            for _ in prev_ge..ge {
                degrees.push(v);
            }
            prev_ge = ge;
        }
        finish(Bundle::T, degrees, (n - 2) as usize, e * (n - d))
    }

    /// c*T_X(−ρ) is globally generated iff h⁰(c*T_X(−ρ−1)) equals its Euler characteristic.
    pub fn is_rho_free(&mut self, rho: i64) -> bool {
        let (n, e, d) = (self.n() as i64, self.e(), self.d());
        let chi = e * (n - d) - (n - 2) * rho;
        chi >= 0 && self.h0_tangent(-rho - 1) as i64 == chi
    }

    /// Largest ρ with c ρ-free, scanning down from ⌊e(n−d)/(n−2)⌋.
    pub fn rho_max(&mut self) -> Result<i64> {
        let (n, e, d) = (self.n() as i64, self.e(), self.d());
        let top = (e * (n - d)).div_euclid(n - 2);
        let lo = (2 - d) * e;
        for rho in (lo..=top).rev() {
            if self.is_rho_free(rho) {
                return Ok(rho);
            }
        }
        Err(Error::assertion("no ρ-freeness found above the lower degree bound"))
    }
}

fn finish(bundle: Bundle, mut degrees: Vec<i64>, rank: usize, sum: i64) -> Result<SplittingType> {
    degrees.sort_unstable_by(|a, b| b.cmp(a));
    if degrees.len() != rank {
        return Err(Error::assertion(format!("{} splitting has rank {} not {rank}", bundle.label(), degrees.len())));
    }
    let st = SplittingType { bundle, degrees };
    if st.sum() != sum {
        return Err(Error::assertion(format!("{} splitting sums to {} not {sum}", bundle.label(), st.sum())));
    }
    Ok(st)
}

/// Kernel dimension of the Jacobian of the de+1 coefficient equations of
/// f(g(T)) = 0 in the n(e+1) coefficients of g. Columns are the linear
/// coefficients of λ ↦ f(g + λT^t e_i), read off by interpolation at λ = 0..d.
pub fn tangent_kernel_dim(form: &Form, c: &CurveTuple) -> Result<usize> {
    let f = form.fq();
    let (n, d, e) = (form.n(), form.d(), c.e());
    let nodes: Vec<u32> = (0..=d as i64).map(|j| f.from_int(j)).collect();
    // L_j'(0) for Lagrange basis on the nodes, with node 0 at λ = 0
    let mut w = vec![0u32; d + 1];
    for j in 0..=d {
        if j == 0 {
            w[0] = (1..=d).fold(0, |acc, m| f.add(acc, f.inv(f.neg(nodes[m]))));
        } else {
            let mut num = 1;
            let mut den = 1;
            for k in 0..=d {
                if k == j {
                    continue;
                }
                if k != 0 {
                    num = f.mul(num, f.neg(nodes[k]));
                }
                den = f.mul(den, f.sub(nodes[j], nodes[k]));
            }
            w[j] = f.div(num, den);
        }
    }
    let rows = d * e + 1;
    let cols = n * (e + 1);
    let mut mat = vec![0u32; rows * cols];
    for i in 0..n {
        for t in 0..=e {
            let mut col = PolyT::zero();
            for (j, &lam) in nodes.iter().enumerate() {
                let mut g = c.g().to_vec();
                g[i] = g[i].add(f, &PolyT::monomial(lam, t));
                let v = form.eval_form(&g)?;
                col = col.add(f, &v.scale(f, w[j]));
            }
            for (s, &x) in col.coeffs().iter().enumerate() {
                if s >= rows {
                    return Err(Error::assertion("Jacobian column exceeds degree de"));
                }
                mat[s * cols + i * (e + 1) + t] = x;
            }
        }
    }
    Ok(nullity(f, &mut mat, rows, cols))
}
