use std::sync::Arc;

use freecurves::curves::{
    self, census, count_n, count_n_rho, point_count, tilde_n, Bundle, CensusOptions, CurveBundles, CurveTuple, PolyBox,
};
use freecurves::ff_arith::{FqCtx, PolyT};
use freecurves::forms::Form;

const BIG: u128 = 1 << 40;

fn fermat(p: u32, n: usize) -> Form {
    Form::fermat(Arc::new(FqCtx::prime(p).unwrap()), n, 3).unwrap()
}

fn opts(rhos: Vec<i64>) -> CensusOptions {
    CensusOptions { rhos, budget: BIG, allow_uncertified: false, cache_dir: None }
}

/// Lines in P³ contained in X, found from pairs of rational points.
fn lines_on_surface(form: &Form) -> usize {
    let f = form.fq();
    let q = f.q();
    let mut pts = Vec::new();
    for idx in 1..q.pow(4) {
        let x: Vec<u32> = (0..4).map(|i| (idx / q.pow(i)) % q).collect();
        let lead = *x.iter().rev().find(|&&c| c != 0).unwrap();
        if lead == 1 && form.eval_point(&x) == 0 {
            pts.push(x);
        }
    }
    let mut lines = std::collections::BTreeSet::new();
    for a in 0..pts.len() {
        for b in a + 1..pts.len() {
            // all q+1 points of the line through a and b
            let mut on = true;
            let mut members = vec![pts[a].clone()];
            for t in 0..q {
                let x: Vec<u32> = (0..4).map(|i| f.add(f.mul(t, pts[a][i]), pts[b][i])).collect();
                if form.eval_point(&x) != 0 {
                    on = false;
                    break;
                }
                let lead = *x.iter().rev().find(|&&c| c != 0).unwrap();
                members.push(x.iter().map(|&c| f.div(c, lead)).collect());
            }
            if on {
                members.sort();
                lines.insert(members);
            }
        }
    }
    lines.len()
}

#[test]
fn lines_on_fermat_cubic_over_f7() {
    let form = fermat(7, 4);
    let lines = lines_on_surface(&form);
    assert_eq!(lines, 27);
    let n = count_n(&form, 1, BIG).unwrap();
    assert_eq!(n, 27 * 6 * 336);
    assert_eq!(n, 54432);
}

#[test]
fn plane_cubic_has_no_curves() {
    let form = fermat(5, 3);
    // brute force over all 5^6 coefficient tuples
    let f = form.fq();
    let mut oracle = 0;
    for idx in 0..5u64.pow(6) {
        let g: Vec<PolyT> = (0..3).map(|i| PolyT::from_index(5, (idx / 25u64.pow(i)) % 25, 2)).collect();
        if g.iter().any(|x| x.deg() == Some(1)) && form.eval_form(&g).unwrap().is_zero() {
            let gcd = g.iter().fold(PolyT::zero(), |a, x| a.gcd(f, x));
            if gcd.deg() == Some(0) {
                oracle += 1;
            }
        }
    }
    assert_eq!(oracle, 0);
    assert_eq!(count_n(&form, 1, BIG).unwrap(), 0);
    assert_eq!(count_n_rho(&form, 2, 0, BIG).unwrap(), 0u32.into());
    for e in 1..=2 {
        let rec = census(&form, e, &opts(vec![0])).unwrap();
        assert!(rec.histogram.is_empty());
        assert_eq!(rec.counts.n, "0");
    }
}

#[test]
fn n_divisible_by_group_order() {
    for p in [5u32, 7] {
        let form = fermat(p, 4);
        let n = count_n(&form, 1, BIG).unwrap();
        let q = p as u128;
        assert_eq!(n % ((q - 1) * (q * q * q - q)), 0);
    }
}

#[test]
fn n_rho_for_lines() {
    let form = fermat(7, 4);
    assert_eq!(count_n_rho(&form, 1, 0, BIG).unwrap(), (54432u64 * 49).into());
    // empty h-box
    assert_eq!(count_n_rho(&form, 1, 1, BIG).unwrap(), 54432u64.into());
}

/// Σ_g #{h : deg h ≤ e−1−ρ, h·∇f(g) = 0} by enumerating h.
fn n_rho_oracle(form: &Form, e: usize, rho: i64) -> u128 {
    let f = form.fq();
    let q = f.q();
    let pbox = PolyBox::new(q, e);
    let len = (e as i64 - rho) as usize;
    let per = (q as u64).pow(len as u32);
    let n = form.n();
    let mut total = 0u128;
    let reps: Vec<Vec<u32>> = curves::fold_solutions(
        form,
        &pbox,
        BIG,
        Vec::new,
        |a: &mut Vec<Vec<u32>>, g| a.push(g.to_vec()),
        |mut a, b| {
            a.extend(b);
            a
        },
    )
    .unwrap();
    for idx in reps {
        let g = pbox.decode(&idx);
        if !curves::census::is_class_rep(&pbox, &idx) || g.iter().all(|x| x.deg() != Some(e)) {
            continue;
        }
        if curves::census::gcd_all(form, &g).deg() != Some(0) {
            continue;
        }
        let mut count = 0u128;
        for hi in 0..per.pow(n as u32) {
            let h: Vec<PolyT> = (0..n).map(|i| PolyT::from_index(q, (hi / per.pow(i as u32)) % per, len)).collect();
            if form.grad_dot(&g, &h).unwrap().is_zero() {
                count += 1;
            }
        }
        total += count * (q as u128 - 1);
    }
    total
}

#[test]
fn n_rho_matches_h_enumeration() {
    let form = fermat(5, 4);
    for (e, rho) in [(1usize, 0i64), (2, 1)] {
        let fast = count_n_rho(&form, e, rho, BIG).unwrap();
        assert_eq!(fast, n_rho_oracle(&form, e, rho).into(), "e={e} rho={rho}");
    }
}

#[test]
fn tilde_n_at_zero_counts_points() {
    let form = fermat(7, 4);
    assert_eq!(point_count(&form), 99);
    assert_eq!(point_count(&form), 49 + 7 * 7 + 1);
    assert_eq!(tilde_n(&form, 0, BIG).unwrap(), 594);
}

#[test]
fn tilde_n_expands_over_gcd_degree() {
    // Ñ(1) = N(1) + q^d N(0), N(0) = nonzero constant solutions
    let form = fermat(5, 4);
    let n1 = count_n(&form, 1, BIG).unwrap();
    let n0 = tilde_n(&form, 0, BIG).unwrap();
    assert_eq!(tilde_n(&form, 1, BIG).unwrap(), n1 + 125 * n0);
}

#[test]
fn cancellation_identity_degree_one() {
    for p in [5u32, 7] {
        let c = curves::cancellation_check(&fermat(p, 4), 1, BIG).unwrap();
        assert!(!c.failed(), "{c:?}");
    }
}

#[test]
fn line_census() {
    let form = fermat(7, 4);
    let rec = census(&form, 1, &opts(vec![0])).unwrap();
    assert_eq!(rec.counts.moduli_points, "27");
    assert_eq!(rec.histogram_count(Bundle::T, &[2, -1]), Some("27"));
    assert_eq!(rec.histogram_count(Bundle::HatT, &[1, 1, -1]), Some("27"));
    assert_eq!(rec.histogram.len(), 2);
    assert_eq!(rec.z_rho["0"].exact, "27");
    assert_eq!(rec.z_rho["0"].upper, "27");
    assert!(rec.all_pass(), "{:?}", rec.checks);
}

/// Degree-2 maps onto the three rational lines x=−y, z=−w (and pairings) over F_5
/// are double covers with T-splitting {4,−2}; the rest are smooth conics {2,0}.
#[test]
fn conic_census_splittings() {
    let form = fermat(5, 4);
    let rec = census(&form, 2, &opts(vec![-1, 0, 1])).unwrap();
    assert!(rec.all_pass(), "{:?}", rec.checks);
    let f = form.fq();
    assert_eq!(lines_on_surface(&form), 3);
    // coprime pairs (a,b), max deg exactly 2
    let mut pairs = 0u64;
    for i in 0..25u64 * 5 {
        for j in 0..125u64 {
            let a = PolyT::from_index(5, i, 3);
            let b = PolyT::from_index(5, j, 3);
            if (a.deg() == Some(2) || b.deg() == Some(2)) && a.gcd(f, &b).deg() == Some(0) {
                pairs += 1;
            }
        }
    }
    let covers = num_rational::BigRational::new((3 * pairs).into(), (4u64 * 120).into());
    assert_eq!(rec.histogram_count(Bundle::T, &[4, -2]), Some(freecurves::report::fmt_rat(&covers).as_str()));
    for h in rec.histogram.iter().filter(|h| h.bundle == Bundle::T) {
        assert!(h.degrees == vec![4, -2] || h.degrees == vec![2, 0], "{h:?}");
    }
}

#[test]
fn census_is_thread_independent() {
    let form = fermat(5, 4);
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| serde_json::to_string(&census(&form, 1, &opts(vec![-1, 0])).unwrap()).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn census_cache_roundtrip() {
    let dir = std::env::temp_dir().join(format!("freecurves-cache-{}", std::process::id()));
    let form = fermat(5, 4);
    let mut o = opts(vec![0]);
    o.cache_dir = Some(dir.clone());
    let a = census(&form, 1, &o).unwrap();
    assert!(curves::census::cache_path(&dir, &form, 1).exists());
    let b = census(&form, 1, &o).unwrap();
    assert_eq!(a, b);
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn uncertified_form_is_rejected() {
    let fq = Arc::new(FqCtx::prime(7).unwrap());
    // x³+y³+z³+w³+xyz is not diagonal, so no certificate exists
    let mut terms = vec![(vec![1, 1, 1, 0], 1)];
    for i in 0..4 {
        let mut e = vec![0; 4];
        e[i] = 3;
        terms.push((e, 1));
    }
    let form = Form::new(fq, 4, 3, terms).unwrap();
    assert!(census(&form, 1, &opts(vec![])).is_err());
}

#[test]
fn scaled_tuple_has_same_data() {
    let form = fermat(7, 4);
    let f = form.fq();
    let g = vec![PolyT::t(), PolyT::monomial(6, 1), PolyT::one(), PolyT::constant(6)];
    let c1 = CurveTuple::new(&form, g.clone()).unwrap();
    let c2 = CurveTuple::new(&form, g.iter().map(|x| x.scale(f, 5)).collect()).unwrap();
    let mut b1 = CurveBundles::new(&form, &c1);
    let mut b2 = CurveBundles::new(&form, &c2);
    assert_eq!(b1.splitting_t().unwrap(), b2.splitting_t().unwrap());
    for rho in -2..3 {
        assert_eq!(b1.h0_twist(rho), b2.h0_twist(rho));
    }
}
