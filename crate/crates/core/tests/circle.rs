use std::sync::Arc;

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use freecurves::circle::{
    self, integral_s_beta, lemma1_grid, major_integral, major_integral_average, n_rho_split, ArcParams, IntegralMethod,
};
use freecurves::curves::{self, CurveBundles, CurveTuple, PolyBox};
use freecurves::ff_arith::{laurent_expand, FqCtx, Laurent, PolyT};
use freecurves::forms::Form;
use freecurves::report::qpow;

const BIG: u128 = 1 << 40;

fn fermat(p: u32, n: usize) -> Form {
    Form::fermat(Arc::new(FqCtx::prime(p).unwrap()), n, 3).unwrap()
}

/// Class representatives of nonzero solutions with deg ≤ e.
fn solutions(form: &Form, e: usize) -> Vec<Vec<PolyT>> {
    let pbox = PolyBox::new(form.q(), e);
    let mut v: Vec<Vec<u32>> = curves::fold_solutions(
        form,
        &pbox,
        BIG,
        Vec::new,
        |a: &mut Vec<Vec<u32>>, g| {
            if curves::census::is_class_rep(&pbox, g) {
                a.push(g.to_vec())
            }
        },
        |mut a, b| {
            a.extend(b);
            a
        },
    )
    .unwrap();
    v.sort();
    v.into_iter().map(|g| pbox.decode(&g)).collect()
}

fn primitive(form: &Form, g: &[PolyT]) -> bool {
    curves::census::gcd_all(form, g).deg() == Some(0)
}

#[test]
fn torus_integral_is_twisted_h0() {
    let form = fermat(5, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for e in 1..=2usize {
        let sols: Vec<_> = solutions(&form, e)
            .into_iter()
            .filter(|g| primitive(&form, g) && g.iter().any(|x| x.deg() == Some(e)))
            .collect();
        for _ in 0..8 {
            let g = &sols[rng.gen_range(0..sols.len())];
            let c = CurveTuple::new(&form, g.clone()).unwrap();
            let mut b = CurveBundles::new(&form, &c);
            for rho in -1..=1 {
                let want = qpow(5, b.h0_twist(rho) as i64);
                let avg = integral_s_beta(&form, g, e, rho, IntegralMethod::Average, BIG).unwrap();
                let rank = integral_s_beta(&form, g, e, rho, IntegralMethod::Rank, BIG).unwrap();
                assert_eq!(avg, want, "{g:?} rho={rho}");
                assert_eq!(rank, want);
            }
        }
    }
}

#[test]
fn unit_gradient_coordinate() {
    // ∇f(g) has the unit coordinate 3·1² = 3, so one coordinate of h is solved for
    let form = fermat(7, 4);
    let g = vec![PolyT::t(), PolyT::monomial(6, 1), PolyT::one(), PolyT::constant(6)];
    let v = integral_s_beta(&form, &g, 1, -1, IntegralMethod::Average, BIG).unwrap();
    let c = CurveTuple::new(&form, g.clone()).unwrap();
    let mut b = CurveBundles::new(&form, &c);
    assert_eq!(v, qpow(7, b.h0_twist(-1) as i64));
    assert!(v <= qpow(7, 3 * 2));
}

#[test]
fn major_integral_matches_torus_average() {
    let form = fermat(5, 4);
    let sols = solutions(&form, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut picked: Vec<Vec<PolyT>> = sols.iter().filter(|g| !primitive(&form, g)).take(6).cloned().collect();
    for _ in 0..10 {
        picked.push(sols[rng.gen_range(0..sols.len())].clone());
    }
    let mut flagged = 0;
    for g in &picked {
        let u = g.iter().filter_map(|x| x.deg()).max().unwrap();
        for j in 0..=(2 - u) {
            for rho in [-1i64, 0, 1, 2] {
                let m = major_integral(&form, g, 2, j, rho).unwrap();
                let avg = major_integral_average(&form, g, 2, j, rho, BIG).unwrap();
                assert_eq!(m.value, avg, "{g:?} j={j} rho={rho}");
                assert!(m.within_envelope(), "{m:?}");
                flagged += m.flagged as u32;
            }
        }
    }
    assert!(flagged > 0);
}

#[test]
fn major_arc_centres_are_distinct() {
    // every a/r with r | gcd^{d-1} and |r| ≤ q^{e-ρ} expands differently
    let f = FqCtx::prime(5).unwrap();
    let k = PolyT::from_coeffs(vec![0, 1]).mul(&f, &PolyT::from_coeffs(vec![1, 1]));
    let k2 = k.pow(&f, 2);
    let (_, fs) = freecurves::ff_arith::factor(&f, &k2).unwrap();
    let mut seen = std::collections::BTreeSet::new();
    for r in freecurves::ff_arith::monic_divisors(&f, &fs) {
        if r.deg_i64() > 3 {
            continue;
        }
        for ai in 0..5u64.pow(r.deg().unwrap() as u32) {
            let a = PolyT::from_index(5, ai, r.deg().unwrap());
            if a.gcd(&f, &r).deg() != Some(0) {
                continue;
            }
            let x = laurent_expand(&f, &a, &r, 8).unwrap();
            assert!(seen.insert(format!("{x:?}")));
        }
    }
}

#[test]
fn split_for_lines() {
    let form = fermat(7, 4);
    let s = n_rho_split(&form, 1, 0, BIG).unwrap();
    assert_eq!(s.n_rho, BigRational::from_integer((54432u64 * 49).into()));
    assert_eq!(&s.major + &s.minor, s.n_rho);
    assert!(s.all_pass(), "{:?}", s.checks);
}

#[test]
fn split_checks_over_f5() {
    let form = fermat(5, 4);
    for (e, rho) in [(1usize, -1i64), (1, 1), (2, 0), (2, 1)] {
        let s = n_rho_split(&form, e, rho, BIG).unwrap();
        assert!(s.all_pass(), "e={e} rho={rho} {:?}", s.checks);
    }
}

#[test]
fn split_for_plane_cubic_is_empty() {
    let form = fermat(5, 3);
    for e in 1..=2 {
        let s = n_rho_split(&form, e, 0, BIG).unwrap();
        assert_eq!(s.n, 0);
        assert_eq!(s.n_rho, BigRational::from_integer(0.into()));
        assert!(s.all_pass(), "{:?}", s.checks);
    }
}

#[test]
fn lemma1_grid_small() {
    let form = fermat(5, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let sols = solutions(&form, 1);
    let mut total = 0;
    for g in sols.iter().step_by(97).take(8) {
        let u = g.iter().filter_map(|x| x.deg()).max().unwrap();
        for j in 0..=(1 - u) {
            for rho in -1..=1 {
                let rep = lemma1_grid(&form, g, 1, j, rho, 2, 8, &mut rng).unwrap();
                assert_eq!(rep.mismatches, 0, "{:?}", rep.first_mismatch);
                total += rep.points;
            }
        }
    }
    assert!(total > 1000);
}

#[test]
fn bv_identity() {
    for p in [5u32, 7] {
        let rep = circle::bv_total_integral(&fermat(p, 4), 1, BIG).unwrap();
        assert!(rep.ok(), "{rep:?}");
    }
}

#[test]
fn weyl_on_samples() {
    let form = fermat(5, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for (j, rho) in [(0usize, 0i64), (1, 1)] {
        let params = ArcParams::new(3, 2, j, rho).unwrap();
        for _ in 0..10 {
            let a = Laurent::random_frac(&mut rng, 5, params.alpha_depth() as usize);
            let b = Laurent::random_frac(&mut rng, 5, params.beta_depth() as usize);
            let r = circle::weyl_checks(&form, &a, &b, &params, BIG).unwrap();
            assert!(r.weyl1 && r.weyl2, "{r:?}");
        }
    }
}

#[test]
fn arcs_table_rows() {
    let form = fermat(5, 3);
    let rows = circle::arcs_table(&form, 2, 0, 3, 1, BIG).unwrap();
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().all(|r| r.weyl.weyl1 && r.weyl.weyl2));
    assert!(rows.iter().all(|r| r.alpha_measure.is_some() && r.beta_measure.is_some()));
}
