use std::sync::Arc;

use num_bigint::BigUint;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use freecurves::error::Error;
use freecurves::ff_arith::{FqCtx, Laurent, PolyT};
use freecurves::forms::Form;
use freecurves::fq_lattice::{
    count_gamma, count_gamma_enum, duality_check, gamma_from_alpha_psi, shrinking_check, LatticeBasis,
};

fn field(p: u32) -> Arc<FqCtx> {
    Arc::new(FqCtx::prime(p).unwrap())
}

fn random_basis<R: Rng>(rng: &mut R, f: &Arc<FqCtx>, n: usize, max_deg: usize) -> Option<LatticeBasis> {
    let q = f.q();
    let mat = (0..n * n)
        .map(|_| {
            let len = rng.gen_range(0..=max_deg + 1);
            PolyT::from_coeffs((0..len).map(|_| rng.gen_range(0..q)).collect())
        })
        .collect();
    let shift = rng.gen_range(-1..=2);
    LatticeBasis::from_poly(f.clone(), n, mat, shift).ok()
}

/// Product of random elementary column operations.
fn random_unimodular<R: Rng>(rng: &mut R, f: &FqCtx, n: usize) -> Vec<PolyT> {
    let q = f.q();
    let mut u: Vec<PolyT> = (0..n * n).map(|ij| if ij % (n + 1) == 0 { PolyT::one() } else { PolyT::zero() }).collect();
    for _ in 0..6 {
        let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if i == j {
            let c = rng.gen_range(1..q);
            for r in 0..n {
                u[r * n + i] = u[r * n + i].scale(f, c);
            }
        } else {
            let m = PolyT::from_coeffs((0..rng.gen_range(1..=3)).map(|_| rng.gen_range(0..q)).collect());
            // column i += m · column j
            for r in 0..n {
                let add = u[r * n + j].mul(f, &m);
                u[r * n + i] = u[r * n + i].add(f, &add);
            }
        }
    }
    u
}

fn random_gl<R: Rng>(rng: &mut R, f: &FqCtx, n: usize) -> Vec<u32> {
    loop {
        let g: Vec<u32> = (0..n * n).map(|_| rng.gen_range(0..f.q())).collect();
        let mut m = g.clone();
        if freecurves::ff_arith::linalg::rank(f, &mut m, n, n) == n {
            return g;
        }
    }
}

#[test]
fn reduction_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    for (p, n, deg) in [(2u32, 4usize, 1usize), (3, 3, 1), (5, 2, 2), (2, 3, 2)] {
        let f = field(p);
        for _ in 0..60 {
            let Some(b) = random_basis(&mut rng, &f, n, deg) else { continue };
            let want = match b.minima_by_enumeration(1 << 22) {
                Ok(w) => w,
                Err(Error::Budget { .. }) => continue,
                Err(e) => panic!("{e}"),
            };
            let got = b.successive_minima();
            assert_eq!(got, want, "{b:?}");
            let (_, shift) = b.poly_matrix();
            for m in -shift..=want.exps[n - 1] + 1 {
                let c = b.count_norm_lt(m);
                assert_eq!(c, got.lee_count(p, m));
                if let Ok(e) = b.count_norm_lt_enum(m, 1 << 22) {
                    assert_eq!(BigUint::from(e), c);
                }
            }
            checked += 1;
        }
    }
    assert!(checked > 100, "{checked}");
}

#[test]
fn minima_sum_to_degree_of_determinant() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let f = field(7);
    for _ in 0..50 {
        let Some(b) = random_basis(&mut rng, &f, 5, 3) else { continue };
        let sum: i64 = b.successive_minima().exps.iter().sum();
        assert_eq!(Some(sum), b.det().abs_exp().unwrap());
    }
}

#[test]
fn adjoint_duality_general() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let f = field(3);
    for _ in 0..30 {
        // unimodular times a diagonal of T-powers has determinant c·T^k
        let exps: Vec<i64> = (0..3).map(|_| rng.gen_range(-2..=2)).collect();
        let d = LatticeBasis::diagonal(f.clone(), &exps).unwrap();
        let b = d.mul_right(&random_unimodular(&mut rng, &f, 3)).unwrap();
        let b = b.mul_left(&random_gl(&mut rng, &f, 3)).unwrap();
        let r = b.successive_minima().exps;
        let rs = b.adjoint().unwrap().successive_minima().exps;
        for i in 0..3 {
            assert_eq!(r[i] + rs[2 - i], 0);
        }
        assert_eq!(b.adjoint().unwrap().adjoint().unwrap(), b);
    }
}

fn random_symmetric<R: Rng>(rng: &mut R, q: u32, n: usize, depth: usize) -> Vec<Vec<Laurent>> {
    let mut g = vec![vec![Laurent::zero(); n]; n];
    for i in 0..n {
        for j in 0..=i {
            let x = Laurent::random_frac(rng, q, depth);
            g[i][j] = x.clone();
            g[j][i] = x;
        }
    }
    g
}

#[test]
fn shrinking_and_duality_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for p in [2u32, 3, 5] {
        let f = field(p);
        for n in 1..=2 {
            for _ in 0..4 {
                let g = random_symmetric(&mut rng, p, n, 8);
                for a in 0..=3 {
                    for c in 1..=3 {
                        let dual = duality_check(f.clone(), &g, a, c).unwrap();
                        assert!(dual.ok(), "{dual:?}");
                        assert_eq!(
                            count_gamma_enum(&f, &g, a, c, 1 << 20).unwrap(),
                            (p as u128).pow(count_gamma(&f, &g, a, c).unwrap() as u32)
                        );
                        for s in 0..=3 {
                            let r = shrinking_check(f.clone(), &g, a, c, s).unwrap();
                            assert!(r.ok && r.lee, "{r:?}");
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn gamma_from_psi_matrices() {
    let f = field(5);
    // x^3 + x^2 y + 2 y^3
    let form = Form::new(f.clone(), 2, 3, [(vec![3, 0], 1), (vec![2, 1], 1), (vec![0, 3], 2)]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    for _ in 0..25 {
        let alpha = Laurent::random_frac(&mut rng, 5, 10);
        let g1: Vec<PolyT> = (0..2).map(|_| PolyT::from_index(5, rng.gen_range(0..25), 2)).collect();
        let gamma = gamma_from_alpha_psi(&form, &alpha, &[&g1]).unwrap();
        assert_eq!(gamma[0][1], gamma[1][0]);
        let (a, c, s) = (rng.gen_range(0..=3), rng.gen_range(1..=3), rng.gen_range(0..=3));
        assert!(duality_check(f.clone(), &gamma, a, c).unwrap().ok());
        let r = shrinking_check(f.clone(), &gamma, a, c, s).unwrap();
        assert!(r.ok && r.lee, "{r:?}");
    }
}

#[test]
fn adjoint_needs_monomial_determinant() {
    let f = field(5);
    let b = LatticeBasis::from_poly(f, 1, vec![PolyT::from_coeffs(vec![1, 1])], 0).unwrap();
    assert_eq!(b.successive_minima().exps, vec![1]);
    assert!(b.adjoint().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn minima_invariant_under_unimodular_ops(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = field(3);
        if let Some(b) = random_basis(&mut rng, &f, 3, 2) {
            let r = b.successive_minima();
            let b2 = b.mul_right(&random_unimodular(&mut rng, &f, 3)).unwrap();
            prop_assert_eq!(&b2.successive_minima(), &r);
            let b3 = b2.mul_left(&random_gl(&mut rng, &f, 3)).unwrap();
            prop_assert_eq!(&b3.successive_minima(), &r);
            prop_assert_eq!(b3.reduce().successive_minima(), r);
        }
    }

    #[test]
    fn counts_multiply_over_direct_sums(seed in any::<u64>(), m in -2i64..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = field(5);
        if let (Some(a), Some(b)) = (random_basis(&mut rng, &f, 2, 2), random_basis(&mut rng, &f, 2, 1)) {
            let s = a.direct_sum(&b).unwrap();
            prop_assert_eq!(s.count_norm_lt(m), a.count_norm_lt(m) * b.count_norm_lt(m));
        }
    }

    #[test]
    fn count_steps_at_minima(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = field(2);
        if let Some(b) = random_basis(&mut rng, &f, 4, 2) {
            let r = b.successive_minima().exps;
            for m in r[0] - 1..=r[3] + 1 {
                let jump = b.count_norm_lt_exp(m + 1) as i64 - b.count_norm_lt_exp(m) as i64;
                prop_assert_eq!(jump, r.iter().filter(|&&x| x <= m).count() as i64);
            }
        }
    }
}
