//! Lattices Λ·F_q[T]^N in F_q((1/T))^N under the norm |x| = max_i |x_i|.
//!
//! A basis is stored as T^{-shift}·P with P a polynomial matrix, so all
//! arithmetic is exact. Successive minima come from column reduction of P;
//! point counts are dimensions of F_q-subspaces and therefore powers of q.

pub mod geometry;

use std::sync::Arc;

use num_bigint::BigUint;
use serde::Serialize;
use serde_json::{json, Value};

use crate::curves::enumerate::check_budget;
use crate::error::{Error, Result};
use crate::ff_arith::{linalg, FqCtx, Laurent, PolyT};

pub use geometry::{
    adjoint_ac, count_gamma, count_gamma_enum, duality_check, gamma_from_alpha_psi, lambda_ac, shrinking_check,
    DualityReport, ShrinkingReport,
};

/// Exponents R_1 ≤ … ≤ R_N of the successive minima q^{R_i}.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MinimaProfile {
    pub exps: Vec<i64>,
}

impl MinimaProfile {
    /// log_q of the number of lattice points of norm < q^m predicted by the
    /// product Π max(1, q^{m-R_i}).
    pub fn count_exp(&self, m: i64) -> i64 {
        self.exps.iter().map(|&r| (m - r).max(0)).sum()
    }

    pub fn lee_count(&self, q: u32, m: i64) -> BigUint {
        BigUint::from(q).pow(self.count_exp(m) as u32)
    }
}

#[derive(Clone, Debug)]
pub struct LatticeBasis {
    fq: Arc<FqCtx>,
    dim: usize,
    shift: i64,
    /// Row-major dim × dim; the basis vectors are the columns.
    mat: Vec<PolyT>,
}

impl PartialEq for LatticeBasis {
    fn eq(&self, o: &Self) -> bool {
        self.fq.q() == o.fq.q()
            && self.fq.modulus() == o.fq.modulus()
            && self.dim == o.dim
            && self.shift == o.shift
            && self.mat == o.mat
    }
}

impl Eq for LatticeBasis {}

impl LatticeBasis {
    /// The lattice T^{-shift}·P·F_q[T]^dim.
    pub fn from_poly(fq: Arc<FqCtx>, dim: usize, mat: Vec<PolyT>, shift: i64) -> Result<Self> {
        if dim == 0 || mat.len() != dim * dim {
            return Err(Error::invalid(format!("expected a {dim}x{dim} matrix")));
        }
        if det_poly(&fq, &mat, dim).is_zero() {
            return Err(Error::invalid("singular lattice matrix"));
        }
        let mut b = LatticeBasis { fq, dim, shift, mat };
        b.normalize();
        Ok(b)
    }

    /// Basis from exact (finite) Laurent polynomial entries, row-major.
    pub fn from_laurent(fq: Arc<FqCtx>, dim: usize, entries: &[Laurent]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::invalid(format!("expected {} entries", dim * dim)));
        }
        if entries.iter().any(|x| !x.is_exact()) {
            return Err(Error::invalid("lattice entries must be finite Laurent polynomials"));
        }
        let low = entries.iter().filter_map(|x| x.support()).map(|s| s.0).min().unwrap_or(0);
        let shift = (-low).max(0);
        let mat = entries
            .iter()
            .map(|x| match x.support() {
                None => PolyT::zero(),
                Some((_, hi)) => PolyT::from_coeffs((-shift..=hi).map(|e| x.coeff_unchecked(e)).collect()),
            })
            .collect();
        Self::from_poly(fq, dim, mat, shift)
    }

    /// diag(T^{e_1}, …, T^{e_N}).
    pub fn diagonal(fq: Arc<FqCtx>, exps: &[i64]) -> Result<Self> {
        let n = exps.len();
        let mut entries = vec![Laurent::zero(); n * n];
        for (i, &e) in exps.iter().enumerate() {
            entries[i * n + i] = Laurent::from_terms(&[(e, 1)]);
        }
        Self::from_laurent(fq, n, &entries)
    }

    pub fn identity(fq: Arc<FqCtx>, dim: usize) -> Result<Self> {
        Self::diagonal(fq, &vec![0; dim])
    }

    /// Divides out the largest power of T common to all entries of P.
    fn normalize(&mut self) {
        let v = self.mat.iter().filter_map(|p| p.coeffs().iter().position(|&c| c != 0)).min().unwrap_or(0);
        if v > 0 {
            for p in &mut self.mat {
                *p = PolyT::from_coeffs(p.coeffs().get(v..).unwrap_or(&[]).to_vec());
            }
            self.shift -= v as i64;
        }
    }

    pub fn fq(&self) -> &FqCtx {
        &self.fq
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// (P, shift) with Λ = T^{-shift}·P.
    pub fn poly_matrix(&self) -> (&[PolyT], i64) {
        (&self.mat, self.shift)
    }

    pub fn entry(&self, i: usize, j: usize) -> Laurent {
        Laurent::from_poly(&self.mat[i * self.dim + j]).shift(-self.shift)
    }

    pub fn det(&self) -> Laurent {
        Laurent::from_poly(&det_poly(&self.fq, &self.mat, self.dim)).shift(-self.shift * self.dim as i64)
    }

    /// Λ·U for U in GL_N(F_q[T]).
    pub fn mul_right(&self, u: &[PolyT]) -> Result<Self> {
        let n = self.dim;
        if u.len() != n * n || det_poly(&self.fq, u, n).deg() != Some(0) {
            return Err(Error::invalid("column operations must be unimodular"));
        }
        Self::from_poly(self.fq.clone(), n, mat_mul(&self.fq, &self.mat, u, n), self.shift)
    }

    /// G·Λ for G in GL_N(F_q).
    pub fn mul_left(&self, g: &[u32]) -> Result<Self> {
        let n = self.dim;
        let mut m = g.to_vec();
        if g.len() != n * n || linalg::rank(&self.fq, &mut m, n, n) != n {
            return Err(Error::invalid("row operations must be invertible over F_q"));
        }
        let gp: Vec<PolyT> = g.iter().map(|&c| PolyT::constant(c)).collect();
        Self::from_poly(self.fq.clone(), n, mat_mul(&self.fq, &gp, &self.mat, n), self.shift)
    }

    /// Λ ⊕ Λ'.
    pub fn direct_sum(&self, o: &LatticeBasis) -> Result<Self> {
        let n = self.dim + o.dim;
        let mut entries = vec![Laurent::zero(); n * n];
        for i in 0..self.dim {
            for j in 0..self.dim {
                entries[i * n + j] = self.entry(i, j);
            }
        }
        for i in 0..o.dim {
            for j in 0..o.dim {
                entries[(self.dim + i) * n + self.dim + j] = o.entry(i, j);
            }
        }
        Self::from_laurent(self.fq.clone(), n, &entries)
    }

    /// Inverse transpose (Λ^{-1})^T. The entries stay finite only when
    /// det P = c·T^k.
    pub fn adjoint(&self) -> Result<Self> {
        let f = &*self.fq;
        let n = self.dim;
        let det = det_poly(f, &self.mat, n);
        let k = det.deg().unwrap();
        if det.coeffs().iter().filter(|&&c| c != 0).count() != 1 {
            return Err(Error::invalid("adjoint needs a determinant of the form c·T^k"));
        }
        let cinv = f.inv(det.lead());
        let cof = cofactors(f, &self.mat, n).into_iter().map(|p| p.scale(f, cinv)).collect();
        Self::from_poly(self.fq.clone(), n, cof, k as i64 - self.shift)
    }

    /// Column reduced basis: the leading coefficient matrix is nonsingular.
    pub fn reduce(&self) -> Self {
        let f = &*self.fq;
        let n = self.dim;
        let mut m = self.mat.clone();
        loop {
            let degs: Vec<usize> = (0..n).map(|j| col_deg(&m, n, j).expect("zero column in a nonsingular basis")).collect();
            let lc: Vec<u32> = (0..n * n).map(|ij| m[ij].coeff(degs[ij % n])).collect();
            let ker = linalg::kernel_basis(f, &lc, n, n);
            let Some(c) = ker.first() else { break };
            let k = (0..n).filter(|&j| c[j] != 0).max_by_key(|&j| (degs[j], j)).unwrap();
            let ck = f.inv(c[k]);
            for j in (0..n).filter(|&j| j != k && c[j] != 0) {
                let factor = f.mul(c[j], ck);
                let sh = degs[k] - degs[j];
                for i in 0..n {
                    let add = m[i * n + j].shift(sh).scale(f, factor);
                    m[i * n + k] = m[i * n + k].add(f, &add);
                }
            }
        }
        LatticeBasis { fq: self.fq.clone(), dim: n, shift: self.shift, mat: m }
    }

    /// Successive minima from the column norms of a reduced basis.
    pub fn successive_minima(&self) -> MinimaProfile {
        let r = self.reduce();
        let mut exps: Vec<i64> =
            (0..self.dim).map(|j| col_deg(&r.mat, self.dim, j).unwrap() as i64 - self.shift).collect();
        exps.sort_unstable();
        MinimaProfile { exps }
    }

    /// Number of lattice vectors of norm < q^m, as q^{dim} of the solution
    /// space of a linear system over F_q.
    pub fn count_norm_lt(&self, m: i64) -> BigUint {
        BigUint::from(self.fq.q()).pow(self.count_norm_lt_exp(m) as u32)
    }

    pub fn count_norm_lt_exp(&self, m: i64) -> usize {
        let f = &*self.fq;
        let n = self.dim;
        let mp = m + self.shift;
        if mp <= 0 {
            return 0;
        }
        let widths = self.u_widths(mp);
        let cols: usize = widths.iter().sum();
        if cols == 0 {
            return 0;
        }
        // rows: coefficient of T^t in (P u)_i for t ≥ mp
        let top = (0..n).filter_map(|j| col_deg(&self.mat, n, j)).max().unwrap_or(0) + widths.iter().max().unwrap();
        let mut rows = Vec::new();
        for i in 0..n {
            for t in mp as usize..top.max(mp as usize) {
                let mut row = vec![0u32; cols];
                let mut off = 0;
                for j in 0..n {
                    let p = &self.mat[i * n + j];
                    for (w, slot) in row[off..off + widths[j]].iter_mut().enumerate() {
                        if t >= w {
                            *slot = p.coeff(t - w);
                        }
                    }
                    off += widths[j];
                }
                if row.iter().any(|&c| c != 0) {
                    rows.push(row);
                }
            }
        }
        let r = rows.len();
        let mut flat: Vec<u32> = rows.concat();
        linalg::nullity(f, &mut flat, r, cols)
    }

    /// Coordinate bounds deg u_i < w_i for all u with |P u| < q^{mp}, from
    /// u = adj(P)·v / det P.
    fn u_widths(&self, mp: i64) -> Vec<usize> {
        let f = &*self.fq;
        let n = self.dim;
        let det = det_poly(f, &self.mat, n).deg_i64();
        let cof = cofactors(f, &self.mat, n);
        (0..n)
            .map(|i| {
                // adj(P)_{ij} = C_{ji}
                let a = (0..n).filter(|&j| !cof[j * n + i].is_zero()).map(|j| cof[j * n + i].deg_i64()).max();
                a.map_or(0, |a| (a + mp - det).max(0) as usize)
            })
            .collect()
    }

    /// Visits every P-scale lattice vector v = P u with |v| < q^{mp}.
    fn visit_below(&self, mp: i64, budget: u128, mut visit: impl FnMut(&[PolyT])) -> Result<()> {
        if mp <= 0 {
            visit(&vec![PolyT::zero(); self.dim]);
            return Ok(());
        }
        let f = &*self.fq;
        let (q, n) = (f.q(), self.dim);
        let widths = self.u_widths(mp);
        let total: u32 = widths.iter().map(|&w| w as u32).sum();
        let size = (q as u128).checked_pow(total).unwrap_or(u128::MAX);
        check_budget("lattice enumeration", size, budget)?;
        for idx in 0..size as u64 {
            let mut rest = idx;
            let u: Vec<PolyT> = widths
                .iter()
                .map(|&w| {
                    let per = (q as u64).pow(w as u32);
                    let p = PolyT::from_index(q, rest % per, w);
                    rest /= per;
                    p
                })
                .collect();
            let v: Vec<PolyT> = (0..n)
                .map(|i| (0..n).fold(PolyT::zero(), |acc, j| acc.add(f, &self.mat[i * n + j].mul(f, &u[j]))))
                .collect();
            if v.iter().all(|x| x.deg_i64() < mp) {
                visit(&v);
            }
        }
        Ok(())
    }

    /// count_norm_lt by listing the lattice points.
    pub fn count_norm_lt_enum(&self, m: i64, budget: u128) -> Result<u128> {
        let mut c = 0u128;
        self.visit_below(m + self.shift, budget, |_| c += 1)?;
        Ok(c)
    }

    /// Successive minima by listing lattice points in order of norm and
    /// keeping each one independent of those kept so far.
    pub fn minima_by_enumeration(&self, budget: u128) -> Result<MinimaProfile> {
        let f = &*self.fq;
        let n = self.dim;
        let mut kept: Vec<Vec<PolyT>> = Vec::new();
        let mut exps = Vec::new();
        let mut r = 0i64;
        while kept.len() < n {
            let mut level = Vec::new();
            self.visit_below(r + 1, budget, |v| {
                if v.iter().map(|x| x.deg_i64()).max() == Some(r) {
                    level.push(v.to_vec());
                }
            })?;
            for v in level {
                kept.push(v);
                if poly_rank(f, &kept) == kept.len() {
                    exps.push(r - self.shift);
                    if kept.len() == n {
                        break;
                    }
                } else {
                    kept.pop();
                }
            }
            r += 1;
        }
        Ok(MinimaProfile { exps })
    }

    /// {"dim", "matrix": rows of Laurent entries}.
    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> =
            (0..self.dim).map(|i| (0..self.dim).map(|j| self.entry(i, j).to_json(&self.fq)).collect()).collect();
        json!({ "dim": self.dim, "matrix": rows })
    }

    /// Reads {"matrix": [[entry, …], …]} where an entry is a Laurent object,
    /// an ascending coefficient array or a constant.
    pub fn from_json(fq: Arc<FqCtx>, v: &Value) -> Result<Self> {
        let rows = v
            .get("matrix")
            .unwrap_or(v)
            .as_array()
            .ok_or_else(|| Error::invalid("lattice JSON needs a \"matrix\" array of rows"))?;
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            let row = row.as_array().filter(|r| r.len() == n).ok_or_else(|| Error::invalid("matrix must be square"))?;
            for e in row {
                entries.push(entry_from_json(&fq, e)?);
            }
        }
        Self::from_laurent(fq, n, &entries)
    }
}

/// A matrix entry: Laurent object, ascending coefficient array or constant.
pub fn entry_from_json(f: &FqCtx, v: &Value) -> Result<Laurent> {
    if v.is_object() {
        Laurent::from_json(f, v)
    } else if v.is_array() {
        Ok(Laurent::from_poly(&PolyT::from_json(f, v)?))
    } else {
        Ok(Laurent::from_poly(&PolyT::from_json(f, &Value::Array(vec![v.clone()]))?))
    }
}

fn col_deg(m: &[PolyT], n: usize, j: usize) -> Option<usize> {
    (0..n).filter_map(|i| m[i * n + j].deg()).max()
}

fn mat_mul(f: &FqCtx, a: &[PolyT], b: &[PolyT], n: usize) -> Vec<PolyT> {
    let mut out = vec![PolyT::zero(); n * n];
    for i in 0..n {
        for k in 0..n {
            if a[i * n + k].is_zero() {
                continue;
            }
            for j in 0..n {
                out[i * n + j] = out[i * n + j].add(f, &a[i * n + k].mul(f, &b[k * n + j]));
            }
        }
    }
    out
}

fn exact_div(f: &FqCtx, a: &PolyT, b: &PolyT) -> PolyT {
    let (q, r) = a.divrem(f, b).expect("division by zero");
    debug_assert!(r.is_zero());
    q
}

/// Determinant over F_q[T] by fraction-free (Bareiss) elimination.
pub(crate) fn det_poly(f: &FqCtx, m: &[PolyT], n: usize) -> PolyT {
    if n == 0 {
        return PolyT::one();
    }
    let mut a = m.to_vec();
    let mut neg = false;
    let mut prev = PolyT::one();
    for k in 0..n {
        let Some(p) = (k..n).find(|&i| !a[i * n + k].is_zero()) else {
            return PolyT::zero();
        };
        if p != k {
            for j in 0..n {
                a.swap(p * n + j, k * n + j);
            }
            neg = !neg;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let t = a[k * n + k].mul(f, &a[i * n + j]).sub(f, &a[i * n + k].mul(f, &a[k * n + j]));
                a[i * n + j] = exact_div(f, &t, &prev);
            }
        }
        prev = a[k * n + k].clone();
    }
    let d = a[n * n - 1].clone();
    if neg {
        d.neg(f)
    } else {
        d
    }
}

/// Cofactor matrix C_{ij} = (-1)^{i+j} det(P without row i and column j).
fn cofactors(f: &FqCtx, m: &[PolyT], n: usize) -> Vec<PolyT> {
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let minor: Vec<PolyT> = (0..n)
                .filter(|&r| r != i)
                .flat_map(|r| (0..n).filter(|&c| c != j).map(move |c| (r, c)))
                .map(|(r, c)| m[r * n + c].clone())
                .collect();
            let d = det_poly(f, &minor, n - 1);
            out.push(if (i + j) % 2 == 1 { d.neg(f) } else { d });
        }
    }
    out
}

/// Rank over F_q(T) of a list of vectors in F_q[T]^N.
pub(crate) fn poly_rank(f: &FqCtx, vecs: &[Vec<PolyT>]) -> usize {
    let mut rows: Vec<Vec<PolyT>> = vecs.to_vec();
    let cols = rows.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(rank, p);
        let piv = rows[rank].clone();
        for row in rows.iter_mut().skip(rank + 1) {
            if row[c].is_zero() {
                continue;
            }
            let k = row[c].clone();
            for (x, y) in row.iter_mut().zip(&piv) {
                *x = x.mul(f, &piv[c]).sub(f, &y.mul(f, &k));
            }
        }
        rank += 1;
    }
    rank
}
