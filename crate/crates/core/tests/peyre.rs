use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{One, Zero};

use freecurves::curves::census::{count_n, point_count};
use freecurves::curves::PolyBox;
use freecurves::ff_arith::{FqCtx, PolyT};
use freecurves::forms::Form;
use freecurves::peyre::{
    c_x_estimate, height_and_ell, local_density, n_x, peyre_report, rho_of_eps, theorem_report, EllConvention,
};

const BUDGET: u128 = 1 << 34;

fn fermat(p: u32, n: usize) -> Form {
    Form::fermat(Arc::new(FqCtx::prime(p).unwrap()), n, 3).unwrap()
}

fn r(a: i64, b: i64) -> BigRational {
    BigRational::new(a.into(), b.into())
}

/// Primitive classes of degree ≤ e by listing every tuple.
fn brute_n_x(form: &Form, e: usize) -> u128 {
    let f = form.fq();
    let pbox = PolyBox::new(form.q(), e);
    let n = form.n();
    let len = pbox.len() as u64;
    let mut count = 0u128;
    for idx in 1..len.pow(n as u32) {
        let ix: Vec<u32> = (0..n).map(|i| ((idx / len.pow(i as u32)) % len) as u32).collect();
        let g = pbox.decode(&ix);
        if !form.eval_form(&g).unwrap().is_zero() {
            continue;
        }
        let gcd = g.iter().fold(PolyT::zero(), |a, x| a.gcd(f, x));
        if gcd.deg() == Some(0) {
            count += 1;
        }
    }
    count / (form.q() as u128 - 1)
}

#[test]
fn fermat_f7_counts() {
    let form = fermat(7, 4);
    assert_eq!(point_count(&form), 99);
    let r0 = peyre_report(&form, 0, &BigRational::zero(), EllConvention::default(), BUDGET).unwrap();
    assert_eq!(r0.n_x, 99);
    assert!(r0.all_pass(), "{:?}", r0.checks);

    let rep = peyre_report(&form, 1, &r(1, 2), EllConvention::default(), BUDGET).unwrap();
    assert_eq!(rep.rho, 2);
    assert_eq!(rep.n_x, 99 + 54432 / 6);
    assert_eq!(rep.n_x_eps_free, 99);
    assert_eq!(rep.e_eps, 9072);
    assert_eq!(rep.not_rho_free, 9171);
    assert!(rep.all_pass(), "{:?}", rep.checks);
    // every line has ℓ = 0 after clamping
    let lines: Vec<_> = rep.ell_histogram.iter().filter(|b| b.e == 1).collect();
    assert_eq!(lines.len(), 1);
    assert_eq!(lines[0].ell, BigRational::zero());
}

#[test]
fn line_height_and_ell() {
    let form = fermat(7, 4);
    let f = form.fq();
    let g = vec![PolyT::t(), PolyT::t().neg(f), PolyT::one(), PolyT::one().neg(f)];
    let h = height_and_ell(&form, &g, EllConvention::default()).unwrap();
    assert_eq!(h.height_exp, 1);
    assert_eq!(h.rho_max, Some(-1));
    assert_eq!(h.ell, BigRational::zero());
    assert!(h.clamped);
    let c = height_and_ell(&form, &[PolyT::one(), PolyT::one().neg(f), PolyT::zero(), PolyT::zero()], EllConvention::default())
        .unwrap();
    assert!(c.constant);
    assert_eq!(c.ell, BigRational::one());
    assert!(height_and_ell(&form, &[PolyT::t(), PolyT::zero(), PolyT::zero(), PolyT::zero()], EllConvention::default())
        .is_err());
}

#[test]
fn n_x_against_oracles() {
    let form = fermat(5, 4);
    assert_eq!(n_x(&form, 0, BUDGET).unwrap(), brute_n_x(&form, 0));
    assert_eq!(n_x(&form, 1, BUDGET).unwrap(), brute_n_x(&form, 1));
    let mut want = point_count(&form) as u128;
    for b in 1..=2 {
        want += count_n(&form, b as usize, BUDGET).unwrap() / 4;
        assert_eq!(n_x(&form, b, BUDGET).unwrap(), want);
    }
}

#[test]
fn monotone_in_b_and_eps() {
    let form = fermat(5, 4);
    let conv = EllConvention::default();
    let epss = [r(0, 1), r(1, 4), r(1, 2), r(3, 4), r(1, 1), r(2, 1)];
    let mut prev_b: Vec<u128> = vec![0; epss.len()];
    for b in 0..=2 {
        let mut prev_eps = u128::MAX;
        for (i, eps) in epss.iter().enumerate() {
            let rep = peyre_report(&form, b, eps, conv, BUDGET).unwrap();
            assert!(rep.all_pass(), "B={b} ε={eps}: {:?}", rep.checks);
            assert!(rep.n_x_eps_free <= prev_eps);
            assert!(rep.n_x_eps_free >= prev_b[i]);
            assert!(rep.e_eps <= rep.not_rho_free);
            if eps.is_zero() {
                assert_eq!(rep.n_x_eps_free, rep.n_x);
            }
            if *eps >= BigRational::one() {
                let top: u128 = rep.ell_histogram.iter().filter(|h| h.ell.is_one()).map(|h| h.points).sum();
                assert_eq!(rep.n_x_eps_free, top);
            }
            prev_eps = rep.n_x_eps_free;
            prev_b[i] = rep.n_x_eps_free;
        }
    }
}

#[test]
fn conventions_change_constants_only() {
    let form = fermat(5, 4);
    let off = EllConvention { constant_ell_one: false, clamp: true };
    let on = EllConvention::default();
    let a = peyre_report(&form, 1, &r(1, 2), on, BUDGET).unwrap();
    let b = peyre_report(&form, 1, &r(1, 2), off, BUDGET).unwrap();
    assert_eq!(a.n_x, b.n_x);
    assert_eq!(a.n_x_eps_free - b.n_x_eps_free, point_count(&form) as u128);
    assert!(b.all_pass());
    let raw = EllConvention { constant_ell_one: true, clamp: false };
    let c = peyre_report(&form, 2, &r(3, 2), raw, BUDGET).unwrap();
    assert!(c.all_pass(), "{:?}", c.checks);
}

#[test]
fn rho_of_eps_values() {
    assert_eq!(rho_of_eps(10, &BigRational::zero(), 4), 2);
    assert_eq!(rho_of_eps(3, &BigRational::one(), 4), 3);
    for n in 3..7 {
        for b in 0..12 {
            for k in 0..6 {
                let eps = r(k, 3);
                assert!(rho_of_eps(b + 1, &eps, n) >= rho_of_eps(b, &eps, n));
                assert!(rho_of_eps(b, &r(k + 1, 3), n) >= rho_of_eps(b, &eps, n));
            }
        }
    }
}

#[test]
fn local_density_at_t() {
    let form = fermat(7, 4);
    let p = local_density(&form, 1, 1, BUDGET).unwrap();
    assert_eq!(p.raw_depth1, r(595, 343));
    assert_eq!(p.primitive, r(594, 343));
    assert_eq!(p.sigma, r(99, 49));
    assert_eq!(p.stable_depth, 1);
}

#[test]
fn density_estimate_and_calibration() {
    let form = fermat(5, 5);
    let one = c_x_estimate(&form, 1, 1, BUDGET).unwrap();
    let mut two = c_x_estimate(&form, 2, 1, BUDGET).unwrap();
    assert_eq!(one.zeta, r(5, 4));
    let p2 = &two.primes[1];
    let step = num_traits::pow(p2.sigma.clone(), 10);
    assert_eq!(two.truncated_product, &one.truncated_product * step);
    assert_eq!(one.sigma_infinity, one.primes[0].sigma);
    let counts: Vec<(i64, u128)> = (0..=2).map(|b| (b, n_x(&form, b, BUDGET).unwrap())).collect();
    two.calibrate(2, 5, &counts);
    assert_eq!(two.calibration.len(), 3);
    assert!(two.calibration.iter().all(|c| c.ratio_approx > 0.0));
    assert_eq!(two.calibration[0].n_x, point_count(&form) as u128);
}

#[test]
fn displayed_bound_values() {
    let t = theorem_report(5, 3, 25, 10, 0, &BigRational::zero(), 0).unwrap();
    assert_eq!(t.main_bound_rhs, r(237, 1));
    assert_eq!(t.smooth_codimension, r(3, 1));
    assert_eq!(t.eps_cutoff, r(24, 352));
}

#[test]
fn gamma0_positive_for_small_rho() {
    for d in 3..=5i64 {
        let n0 = 3 * (d - 1) * (1 << (d - 1)) + 1;
        for n in n0..n0 + 12 {
            for rho in -1..=0 {
                for e in 0..40 {
                    let t = theorem_report(5, d, n, e, rho, &BigRational::zero(), 0).unwrap();
                    assert!(t.n_hypothesis);
                    if t.final_e {
                        assert!(t.gamma0 > BigRational::zero(), "d={d} n={n} e={e} ρ={rho}");
                        assert!(t.arcs.iter().all(|a| a.e5));
                    }
                }
            }
        }
    }
}

#[test]
fn gamma0_can_be_negative_for_positive_rho() {
    let t = theorem_report(5, 3, 25, 6, 1, &BigRational::zero(), 0).unwrap();
    assert!(t.n_hypothesis && t.final_e);
    assert_eq!(t.gamma0, r(-3, 1));
    // still negative with the stronger hypothesis on e
    let t = theorem_report(5, 3, 25, 16, 1, &BigRational::zero(), 0).unwrap();
    assert!(t.final_hyp && t.final_e);
    assert_eq!(t.gamma0, r(-1, 2));
    assert!(t.gamma0_leading > BigRational::zero());
}

#[test]
fn gamma0_leading_positive_under_final_hyp() {
    for d in 3..=5i64 {
        let n0 = 3 * (d - 1) * (1 << (d - 1)) + 1;
        for n in n0..n0 + 8 {
            for rho in 0..=3 {
                for e in 1..300 {
                    let t = theorem_report(5, d, n, e, rho, &BigRational::zero(), 0).unwrap();
                    if t.final_hyp && t.final_e {
                        assert!(t.gamma0_leading > BigRational::zero(), "d={d} n={n} e={e} ρ={rho}");
                    }
                }
            }
        }
    }
}
