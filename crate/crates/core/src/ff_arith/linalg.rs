//! Dense linear algebra over F_q on row-major matrices.

use super::field::FqCtx;

/// Row-reduces `m` (rows × cols, row-major) in place and returns the rank.
pub fn rank(f: &FqCtx, m: &mut [u32], rows: usize, cols: usize) -> usize {
    echelon(f, m, rows, cols).len()
}

/// Reduced row echelon form in place; returns the pivot columns.
pub fn echelon(f: &FqCtx, m: &mut [u32], rows: usize, cols: usize) -> Vec<usize> {
    debug_assert_eq!(m.len(), rows * cols);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(pr) = (r..rows).find(|&i| m[i * cols + c] != 0) else {
            continue;
        };
        if pr != r {
            for j in 0..cols {
                m.swap(pr * cols + j, r * cols + j);
            }
        }
        let inv = f.inv(m[r * cols + c]);
        for j in c..cols {
            m[r * cols + j] = f.mul(m[r * cols + j], inv);
        }
        for i in 0..rows {
            if i == r {
                continue;
            }
            let factor = m[i * cols + c];
            if factor == 0 {
                continue;
            }
            let nf = f.neg(factor);
            for j in c..cols {
                let v = m[r * cols + j];
                if v != 0 {
                    m[i * cols + j] = f.add(m[i * cols + j], f.mul(nf, v));
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Basis of the right kernel {x : m x = 0}.
pub fn kernel_basis(f: &FqCtx, m: &[u32], rows: usize, cols: usize) -> Vec<Vec<u32>> {
    let mut a = m.to_vec();
    let pivots = echelon(f, &mut a, rows, cols);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&fc| {
            let mut v = vec![0u32; cols];
            v[fc] = 1;
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = f.neg(a[r * cols + fc]);
            }
            v
        })
        .collect()
}

/// Kernel dimension cols − rank.
pub fn nullity(f: &FqCtx, m: &mut [u32], rows: usize, cols: usize) -> usize {
    cols - rank(f, m, rows, cols)
}
