use std::sync::Arc;

use serde_json::{json, Value};

use freecurves::circle::{arcs_table, n_rho_split};
use freecurves::curves::census::{census, census_csv, point_count, scan, CensusOptions, ScanOptions};
use freecurves::ff_arith::FqCtx;
use freecurves::fq_lattice::{count_gamma, duality_check, entry_from_json, shrinking_check, LatticeBasis};
use freecurves::peyre::{c_x_estimate, peyre_report, theorem_report, EllConvention};
use freecurves::report::{fmt_rat, Check};
use freecurves::verify::{self, VerifyOptions};
use freecurves::{Error, Result};
use num_rational::BigRational;

use crate::output::table;
use crate::{Cli, Cmd, Global, Report};

pub fn dispatch(cli: &Cli) -> Result<Report> {
    let g = &cli.global;
    match &cli.cmd {
        Cmd::Count => count(g),
        Cmd::Census => census_cmd(g),
        Cmd::Arcs { samples } => arcs(g, *samples),
        Cmd::Lattice { matrix_file, a, c, s } => lattice(g, matrix_file, *a, *c, *s),
        Cmd::Peyre { prime_cap, hensel_depth, constant_ell_zero, no_clamp } => {
            let conv = EllConvention { constant_ell_one: !constant_ell_zero, clamp: !no_clamp };
            peyre(g, *prime_cap, *hensel_depth, conv)
        }
        Cmd::Bounds => bounds(g),
        Cmd::Verify { criteria } => verify_cmd(g, criteria),
    }
}

fn checks_ok(checks: &[Check]) -> bool {
    checks.iter().all(|c| !c.failed())
}

fn rat(x: &BigRational) -> Value {
    Value::String(fmt_rat(x))
}

fn count(g: &Global) -> Result<Report> {
    let form = g.form()?;
    let q = form.q();
    let s = scan(&form, g.e, &ScanOptions { rhos: vec![g.rho], curves: false, budget: g.budget })?;
    let lhs = num_bigint_lhs(s.tilde, q, form.d());
    let mut checks = vec![Check::new("cancellation", lhs == s.n.to_string()).with_detail(format!("{lhs} vs {}", s.n))];
    let split = if g.rho <= g.e as i64 {
        let sp = n_rho_split(&form, g.e, g.rho, g.budget)?;
        checks.extend(sp.checks.iter().cloned());
        json!({
            "major": rat(&sp.major),
            "minor": rat(&sp.minor),
            "n_rho": rat(&sp.n_rho),
            "main_sum": rat(&sp.main_sum),
            "flagged": sp.flagged,
        })
    } else {
        Value::Null
    };
    let json = json!({
        "form": form.to_json(),
        "q": q,
        "e": g.e,
        "rho": g.rho,
        "points": point_count(&form).to_string(),
        "N": s.n.to_string(),
        "N_hat": s.n_hat.to_string(),
        "tilde_N": { (g.e).to_string(): s.tilde[0].to_string(), (g.e - 1).to_string(): s.tilde[1].to_string() },
        "N_rho": s.n_rho(q, g.rho).to_string(),
        "split": split,
        "checks": checks,
    });
    Ok(Report::new(json, checks_ok(&checks)))
}

/// Ñ(e) − q^d Ñ(e−1) as a decimal string.
fn num_bigint_lhs(tilde: [u128; 2], q: u32, d: usize) -> String {
    let qd = (q as u128).pow(d as u32);
    let sub = qd * tilde[1];
    if tilde[0] >= sub {
        (tilde[0] - sub).to_string()
    } else {
        format!("-{}", sub - tilde[0])
    }
}

fn census_cmd(g: &Global) -> Result<Report> {
    let form = g.form()?;
    let opts = CensusOptions {
        rhos: vec![g.rho],
        budget: g.budget,
        allow_uncertified: g.allow_uncertified,
        cache_dir: g.cache_dir.clone(),
    };
    let rec = census(&form, g.e, &opts)?;
    let mut rep = Report::new(serde_json::to_value(&rec)?, rec.all_pass());
    rep.csv = Some(census_csv(&rec));
    Ok(rep)
}

fn arcs(g: &Global, samples: usize) -> Result<Report> {
    let form = g.form()?;
    let rows = arcs_table(&form, g.e, g.rho, samples, g.seed, g.budget)?;
    let w1 = rows.iter().all(|r| r.weyl.weyl1);
    let w2 = rows.iter().all(|r| r.weyl.weyl2);
    let checks = vec![Check::new("weyl1", w1), Check::new("weyl2", w2)];
    let opt = |x: &Option<BigRational>| x.as_ref().map(fmt_rat).unwrap_or_default();
    let verdict = |b: bool| if b { "pass" } else { "fail" }.to_string();
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.j.to_string(),
                r.big_j.to_string(),
                r.big_k.map(|k| k.to_string()).unwrap_or_default(),
                r.label.clone(),
                r.alpha_radius_exp.to_string(),
                r.beta_radius_exp.to_string(),
                opt(&r.alpha_measure),
                opt(&r.beta_measure),
                r.weyl.s.coords().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" "),
                r.weyl.n_alpha.to_string(),
                r.weyl.n_beta.to_string(),
                verdict(r.weyl.weyl1),
                verdict(r.weyl.weyl2),
            ]
        })
        .collect();
    let csv = table(
        &[
            "j",
            "J",
            "K",
            "label",
            "alpha_radius_exp",
            "beta_radius_exp",
            "alpha_measure",
            "beta_measure",
            "s_coords",
            "n_alpha",
            "n_beta",
            "weyl1",
            "weyl2",
        ],
        &csv_rows,
    )?;
    let json = json!({ "form": form.to_json(), "e": g.e, "rho": g.rho, "seed": g.seed, "rows": rows, "checks": checks });
    let mut rep = Report::new(json, w1 && w2);
    rep.csv = Some(csv);
    Ok(rep)
}

fn lattice(g: &Global, path: &std::path::Path, a: i64, c: i64, s: i64) -> Result<Report> {
    let fq = Arc::new(FqCtx::new(g.p, g.k)?);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    if let Some(rows) = v.get("gamma") {
        let rows = rows.as_array().ok_or_else(|| Error::invalid("\"gamma\" must be an array of rows"))?;
        let gamma = rows
            .iter()
            .map(|r| {
                r.as_array()
                    .ok_or_else(|| Error::invalid("gamma rows must be arrays"))?
                    .iter()
                    .map(|x| entry_from_json(&fq, x))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let dual = duality_check(fq.clone(), &gamma, a, c)?;
        let shrink = if c > 0 && s >= 0 { Some(shrinking_check(fq.clone(), &gamma, a, c, s)?) } else { None };
        let mut checks = vec![Check::new("duality", dual.ok())];
        if let Some(r) = &shrink {
            checks.push(Check::new("shrinking", r.ok));
            checks.push(Check::new("product_formula", r.lee));
        }
        let json = json!({
            "a": a, "c": c, "s": s,
            "count_exp": count_gamma(&fq, &gamma, a, c)?,
            "duality": dual,
            "shrinking": shrink,
            "checks": checks,
        });
        return Ok(Report::new(json, checks_ok(&checks)));
    }
    let b = LatticeBasis::from_json(fq, &v)?;
    let minima = b.successive_minima();
    let det_exp = b.det().abs_exp()?.ok_or_else(|| Error::invalid("singular basis"))?;
    let sum: i64 = minima.exps.iter().sum();
    let mut checks = vec![Check::new("minima_sum_det", sum == det_exp)];
    let q = g.p.pow(g.k);
    let lo = minima.exps[0] - 1;
    let hi = minima.exps[b.dim() - 1] + 1;
    let mut counts = serde_json::Map::new();
    let mut lee_ok = true;
    let mut enum_ok = true;
    let mut enumerated = false;
    for m in lo..=hi {
        let c = b.count_norm_lt(m);
        lee_ok &= c == minima.lee_count(q, m);
        if b.dim() <= 4 {
            if let Ok(e) = b.count_norm_lt_enum(m, g.budget) {
                enumerated = true;
                enum_ok &= c == e.into();
            }
        }
        counts.insert(m.to_string(), Value::String(c.to_string()));
    }
    checks.push(Check::new("product_formula", lee_ok));
    checks.push(if enumerated { Check::new("enumeration", enum_ok) } else { Check::skip("enumeration", "over budget") });
    let adjoint = match b.adjoint() {
        Ok(adj) => {
            let r = adj.successive_minima().exps;
            let n = r.len();
            checks.push(Check::new("adjoint_duality", (0..n).all(|i| minima.exps[i] + r[n - 1 - i] == 0)));
            json!(r)
        }
        Err(_) => {
            checks.push(Check::skip("adjoint_duality", "determinant is not a monomial"));
            Value::Null
        }
    };
    let json = json!({
        "dim": b.dim(),
        "minima": minima.exps,
        "det_exp": det_exp,
        "counts": counts,
        "adjoint_minima": adjoint,
        "reduced": b.reduce().to_json(),
        "checks": checks,
    });
    Ok(Report::new(json, checks_ok(&checks)))
}

fn peyre(g: &Global, prime_cap: u32, hensel_depth: usize, conv: EllConvention) -> Result<Report> {
    let form = g.form()?;
    let rep = peyre_report(&form, g.b, &g.eps, conv, g.budget)?;
    let nd = form.n() - form.d();
    let density = if nd >= 2 {
        let mut est = c_x_estimate(&form, prime_cap, hensel_depth, g.budget)?;
        let mut counts = vec![];
        let mut acc = 0u128;
        for row in &rep.degrees {
            acc += row.points;
            for b in (row.e * nd) as i64..((row.e + 1) * nd) as i64 {
                if b <= g.b {
                    counts.push((b, acc));
                }
            }
        }
        est.calibrate(nd, form.q(), &counts);
        serde_json::to_value(&est)?
    } else {
        json!({ "skipped": "the leading constant needs n - d >= 2" })
    };
    let ok = rep.all_pass();
    let json = json!({ "form": form.to_json(), "report": rep, "density": density });
    Ok(Report::new(json, ok))
}

fn bounds(g: &Global) -> Result<Report> {
    let q = g.p.pow(g.k);
    let r = theorem_report(q, g.d as i64, g.n as i64, g.e as i64, g.rho, &g.eps, g.b)?;
    Ok(Report::new(serde_json::to_value(&r)?, true))
}

fn verify_cmd(g: &Global, criteria: &[u32]) -> Result<Report> {
    let opts = VerifyOptions { seed: if g.seed == 0 { VerifyOptions::default().seed } else { g.seed }, budget: g.budget };
    let ids: Vec<u32> = if criteria.is_empty() { (1..=12).collect() } else { criteria.to_vec() };
    let mut outcomes = vec![];
    let mut budget_hit = false;
    for &id in ids.iter().filter(|&&i| i != 12) {
        match verify::run(id, &opts) {
            Ok(o) => outcomes.push(serde_json::to_value(&o)?),
            Err(Error::Budget { what, needed, cap }) => {
                budget_hit = true;
                outcomes.push(json!({ "id": id, "pass": false, "error": format!("budget: {what} needs {needed}, cap {cap}") }));
            }
            Err(e) => return Err(e),
        }
    }
    if ids.contains(&12) {
        let rest: Vec<u32> = ids.iter().copied().filter(|&i| i != 12).collect();
        let rest = if rest.is_empty() { (1..=11).collect() } else { rest };
        let (o, _) = verify::determinism(&rest, &[1, 8], &opts)?;
        outcomes.push(serde_json::to_value(&o)?);
    }
    let ok = outcomes.iter().all(|o| o["pass"] == json!(true));
    let csv_rows: Vec<Vec<String>> = outcomes
        .iter()
        .map(|o| {
            vec![
                o["id"].to_string(),
                o["name"].as_str().unwrap_or("").to_string(),
                if o["pass"] == json!(true) { "pass" } else { "fail" }.to_string(),
                o["evaluated"].to_string(),
                o["detail"].as_str().or(o["error"].as_str()).unwrap_or("").to_string(),
            ]
        })
        .collect();
    let mut rep = Report::new(json!({ "seed": opts.seed, "criteria": outcomes }), ok);
    rep.csv = Some(table(&["id", "name", "verdict", "evaluated", "detail"], &csv_rows)?);
    if budget_hit {
        rep.code = 3;
    }
    Ok(rep)
}
