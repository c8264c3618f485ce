//! Acceptance battery: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs as a plain binary (`harness = false`).

#[allow(dead_code)]
#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use plateflow::determining::*;
use plateflow::duffing::*;
use plateflow::modal::{energy_identity_residual, integrate_system, ModalState, ModalSystem, Trajectory, TruncationSpec};
use plateflow::ode::Tolerances;
use plateflow::spectrum::{find_spectrum, SpectrumTable};
use plateflow::stability::*;
use plateflow::stationary::*;
use plateflow::{ForcingSpec, ModeKey, Parity, PlateParams};
use plateflow_cli::config::*;
use plateflow_cli::{execute, prepare, Experiment, Invocation, RunManifest, ScenarioConfig};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn base() -> PlateParams {
    PlateParams::default()
}

/// m ≤ 3 even plus m ≤ 2 odd, first branch.
fn low_keys(table: &SpectrumTable) -> Vec<ModeKey> {
    table
        .keys()
        .into_iter()
        .filter(|k| k.branch == 1 && (k.parity == Parity::Even || k.m <= 2))
        .collect()
}

fn run(sys: &ModalSystem, p: &PlateParams, init: &ModalState, t: f64, stride: f64, nu: f64, tol: Tolerances) -> Result<Trajectory, String> {
    let spec = TruncationSpec::new(sys.keys.clone(), stride).with_tol(tol).with_nu(nu);
    ok(integrate_system(sys, init, (0.0, t), &spec, p))
}

fn cli_run(cfg: ScenarioConfig, exp: Experiment, dir: &Path) -> Result<RunManifest, String> {
    let path = dir.join("input.toml");
    ok(std::fs::write(&path, ok(cfg.to_toml())?))?;
    let cfg = ok(prepare(&Invocation {
        config: Some(path),
        experiment: Some(exp),
        ..Default::default()
    }))?;
    ok(execute(&cfg, &dir.join("run"), vec!["acceptance".into()]))
}

fn c1_spectrum() -> Outcome {
    let p = base();
    let t = ok(find_spectrum(&p, 20, 2))?;
    let mut worst = 0.0f64;
    let mut worst_res = 0.0f64;
    for mode in t.modes.iter().take(20) {
        let k = mode.key;
        let o = support::galerkin_eigenvalues(k.m, k.parity, p.sigma, p.ell, 24)[k.branch as usize - 1];
        let rel = (mode.lambda - o).abs() / o;
        worst = worst.max(rel);
        ensure!(rel <= 1e-6, "{k:?}: λ = {} vs oracle {o}", mode.lambda);
    }
    for mode in &t.modes {
        let r = mode.residuals(p.sigma, 400);
        worst_res = worst_res.max(r[0]).max(r[1]).max(r[2]);
    }
    ensure!(worst_res < 1e-8, "mode residual {worst_res:e}");
    Ok(format!("λ₁ = {:.10}, max rel. dev. {worst:.1e} over 20, max residual {worst_res:.1e} over {} modes", t.lambda1, t.len()))
}

fn c2_energy_identity() -> Outcome {
    let alphas = [-400.0, -40.0, -1.0, 0.0, 0.5, 3.0, -10.0, 25.0, -150.0, 1.0];
    let ks = [0.1, 0.5, 1.0, 0.3, 0.8, 0.05, 1.2, 0.4, 0.6, 0.0];
    let forcing = |i: usize| match i % 3 {
        0 => ForcingSpec::None,
        1 => ForcingSpec::Constant { c: 0.3 * i as f64 },
        _ => ForcingSpec::Harmonic { c: 1.5, m: 2 },
    };
    let table = ok(find_spectrum(&base(), 3, 1))?;
    let mut worst = 0.0f64;
    for i in 0..10 {
        let p = base().with_alpha(alphas[i]).with_k(ks[i]).with_forcing(forcing(i));
        let table = ok(table.clone().with_forcing(&p.forcing))?;
        let sys = ok(ModalSystem::new(&p, &table, &low_keys(&table)))?;
        let init = ok(random_battery(&sys.lambda, 1, (1.0, 10.0), 100 + i as u64))?.remove(0);
        let tr = run(&sys, &p, &init, 20.0, 0.1, 0.25 * p.k, Tolerances::new(1e-10, 1e-12))?;
        let rep = energy_identity_residual(&tr, &p);
        worst = worst.max(rep.relative());
        ensure!(rep.relative() <= 1e-6, "run {i} (α={}, k={}): {:e}", p.alpha, p.k, rep.relative());
    }
    Ok(format!("10 runs, max residual/(1+max 𝓔) = {worst:.1e}"))
}

fn c3_quartic() -> Outcome {
    let mut worst = 0.0f64;
    for m in 1..=5u32 {
        let q = quartic_roots(m, 0.0, 0.0);
        let mf = m as f64;
        let mut re: Vec<f64> = q.roots.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        for (z, want) in re.iter().zip([-mf, -mf, mf, mf]) {
            worst = worst.max((z - want).abs());
        }
        ensure!(q.roots.iter().all(|z| z.im.abs() <= 1e-12), "m={m}: {:?}", q.roots);
    }
    ensure!(worst <= 1e-12, "double roots off by {worst:e}");
    let mut n = 0;
    for m in 1..=5u32 {
        for j in 0..20 {
            let mu = 0.25 + 99.75 * j as f64 / 19.0;
            let a = alpha_crit(m, mu) * (1.0 + 0.05 * (j + 1) as f64) - 1e-6;
            let q = quartic_roots(m, mu, a);
            ensure!(q.class == RootClass::TwoNegativeRealPlusPair, "m={m} μ={mu} α={a}: {:?}", q.class);
            // companion-matrix oracle
            let o = support::companion_roots(&QuarticRoots::coefficients(m, mu, a));
            let scale = o.iter().fold(1.0f64, |s, z| s.max(z.norm()));
            let mut real: Vec<f64> = o.iter().filter(|z| z.im.abs() <= 1e-9 * scale).map(|z| z.re).collect();
            real.sort_by(f64::total_cmp);
            ensure!(real.len() == 2 && real[1] < 0.0, "oracle m={m} μ={mu}: {o:?}");
            n += 1;
        }
    }
    Ok(format!("double roots ±m exact to {worst:.1e}; {n}/100 grid points two negative real + pair"))
}

fn c4_alpha_crit() -> Outcome {
    for m in 1..=5 {
        ensure!(alpha_crit(m, 0.0) == 0.0, "α_{m}(0) = {}", alpha_crit(m, 0.0));
    }
    let want = -8.0 * 15f64.sqrt() / 9.0;
    let got = alpha_crit(1, 4.0);
    ensure!((got - want).abs() <= 1e-12, "α₁(4) = {got} vs {want}");
    Ok(format!("α_m(0) = 0 for m=1..5, α₁(4) = {got:.15} (err {:.1e})", (got - want).abs()))
}

fn read_curve(path: &Path) -> Result<Vec<(f64, f64)>, String> {
    let mut r = ok(csv::Reader::from_path(path))?;
    r.records()
        .map(|x| {
            let x = ok(x)?;
            Ok((ok(x[0].parse::<f64>())?, ok(x[2].parse::<f64>())?))
        })
        .collect()
}

fn interp(c: &[(f64, f64)], x: f64) -> Option<f64> {
    let i = c.iter().position(|p| p.0 >= x)?;
    if i == 0 {
        return None;
    }
    let (a, b) = (c[i - 1], c[i]);
    Some(a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0))
}

fn c5_figure() -> Outcome {
    let dir = ok(tempfile::tempdir())?;
    let exp = Experiment::Branch(BranchArgs {
        m: Some(IntSpan { lo: 1, hi: 5 }),
        mu: Some(Span::new(0.0, 100.0)),
    });
    cli_run(ScenarioConfig::default(), exp, dir.path())?;
    let curves: Vec<Vec<(f64, f64)>> = (1..=5)
        .map(|m| read_curve(&dir.path().join(format!("run/branch_m{m}.csv"))))
        .collect::<Result<_, _>>()?;
    for (i, c) in curves.iter().enumerate() {
        ensure!(c.len() > 10 && c.last().unwrap().0 >= 99.0, "m={} truncated at μ={:?}", i + 1, c.last());
        for w in c.windows(2) {
            ensure!(w[1].1 >= w[0].1 * (1.0 - 1e-6), "m={}: |Φ| drops at μ={}", i + 1, w[1].0);
        }
    }
    let mut checked = 0;
    for j in 0..=200 {
        let mu = 0.5 + 99.0 * j as f64 / 200.0;
        let v: Vec<f64> = curves.iter().filter_map(|c| interp(c, mu)).collect();
        ensure!(v.len() == 5, "μ={mu}: missing samples");
        for w in v.windows(2) {
            ensure!(w[0] < w[1] * (1.0 - 1e-6), "μ={mu}: {v:?}");
        }
        checked += 1;
    }
    let pts: usize = curves.iter().map(Vec::len).sum();
    Ok(format!("5 curves ({pts} points) nondecreasing, ordered in m at {checked} μ values"))
}

fn c6_unimodal() -> Outcome {
    let p = base();
    let mut worst = 0.0f64;
    for m in 1..=4u32 {
        for a in [-2500.0 * m as f64, -6000.0 * m as f64] {
            let u = ok(build_unimodal(m, a, &p))?;
            let r = u.residual(&p).max();
            worst = worst.max(r);
            ensure!(r < 1e-7, "m={m} α={a}: residual {r:e}");
            ensure!(u.zero_count == m - 1, "m={m} α={a}: {} zeros", u.zero_count);
        }
    }
    let mut refl = 0.0f64;
    for (m, a) in [(1u32, -400.0), (2, -1500.0), (3, -8000.0)] {
        let u = ok(build_unimodal(m, a, &p))?;
        let v = ok(build_unimodal(m, -a, &p))?;
        ensure!((u.mu - v.mu).abs() <= 1e-8 * u.mu, "μ differs under reflection");
        for i in 0..=50 {
            let y = -p.ell + 2.0 * p.ell * i as f64 / 50.0;
            let d = (u.value(0.7, y) - v.value(0.7, -y)).abs() / u.amplitude;
            refl = refl.max(d);
        }
    }
    ensure!(refl <= 1e-8, "reflection defect {refl:e}");
    Ok(format!("m=1..4: max residual {worst:.1e}, m−1 zeros; reflection defect {refl:.1e}"))
}

fn c7_duffing() -> Outcome {
    let p = base().with_alpha(-400.0).with_k(0.5);
    let u = ok(build_unimodal(1, -400.0, &p))?;
    let q = ok(DuffingParams::from_unimodal(&u, &p))?;
    let dir = ok(tempfile::tempdir())?;
    let cfg = ScenarioConfig {
        params: p.clone(),
        ..Default::default()
    };
    let exp = Experiment::Basin(BasinArgs {
        r2: Some(q.r2),
        n_phi: Some(201),
        n_dphi: Some(201),
        t_final: Some(400.0),
        ..Default::default()
    });
    let m = cli_run(cfg, exp, dir.path())?;
    let s = &m.summary;
    let counts = &s["counts"];
    let body = ok(std::fs::read_to_string(dir.path().join("run/basin.csv")))?;
    let labels_ok = body.lines().skip(1).all(|l| matches!(l.rsplit(',').next(), Some("-1" | "0" | "1")));
    ensure!(body.lines().count() == 1 + 201 * 201, "basin.csv has {} lines", body.lines().count());
    ensure!(labels_ok && counts["undecided"] == 0, "undecided points: {counts}");
    ensure!(s["negative_energy_violations"] == 0, "negative-energy region violations: {}", s["negative_energy_violations"]);
    let res = s["max_energy_residual"].as_f64().unwrap_or(f64::NAN);
    ensure!(res < 1e-7, "energy residual {res:e}");
    let n: Vec<u32> = (1..=10).collect();
    let h = ok(heteroclinic_family(&n, &q, 400.0, &Tolerances::new(1e-10, 1e-13)))?;
    ensure!(h.all_plus, "heteroclinic limits: {:?}", h.entries.iter().map(|e| e.limit).collect::<Vec<_>>());
    Ok(format!(
        "201×201 labels {counts}, {} negative-energy points with no violation, energy residual {res:.1e}, (1/n,0)→+1 for n=1..10",
        s["negative_energy_points"]
    ))
}

fn c8_cross_validation() -> Outcome {
    let p = base().with_alpha(-400.0).with_k(0.5);
    let table = ok(find_spectrum(&p, 2, 4))?;
    let u = ok(build_unimodal(1, -400.0, &p))?;
    let keys: Vec<ModeKey> = table.keys().into_iter().filter(|k| k.branch <= 2).collect();
    let r = ok(cross_validate_full(&u, 0.5, 0.0, &p, &table, &keys, 50.0, &CrossValidationOptions::default()))?;
    let bound = 10.0 * (r.projection_error + r.tol);
    ensure!(r.discrepancy <= bound, "discrepancy {:e} > {bound:e}", r.discrepancy);
    ensure!(r.galerkin_final == r.duffing_final, "final labels {:?} vs {:?}", r.galerkin_final, r.duffing_final);
    Ok(format!(
        "discrepancy {:.2e} ≤ 10·({:.1e} + {:.0e}) = {bound:.1e}, {} modes, final limit {:?}",
        r.discrepancy,
        r.projection_error,
        r.tol,
        keys.len(),
        r.galerkin_final
    ))
}

fn c9_uniqueness() -> Outcome {
    let table = ok(find_spectrum(&base(), 2, 1))?;
    let thr = ok(trivial_uniqueness_threshold(&base(), table.lambda1))?;
    let mut seen = Vec::new();
    for a in [-0.9 * thr, 0.9 * thr] {
        let p = base().with_alpha(a);
        let sys = ok(ModalSystem::full(&p, &table))?;
        let r = ok(newton_equilibria(&sys, &p, &NewtonConfig::new(100, 7)))?;
        ensure!(r.equilibria.len() == 1, "α={a}: {} equilibria", r.equilibria.len());
        ensure!(support::norm(&r.equilibria[0].coeffs) < 1e-9, "α={a}: nonzero equilibrium");
        seen.push(r.equilibria.len());
    }
    let abar = ok(alpha_bar(1, &base(), -400.0, 1e-10))?;
    let a = abar - 0.1 * abar.abs();
    let p = base().with_alpha(a);
    let sys = ok(ModalSystem::full(&p, &table))?;
    let r = ok(newton_equilibria(&sys, &p, &NewtonConfig::new(100, 11)))?;
    ensure!(r.equilibria.len() >= 3, "α={a} < ᾱ₁={abar}: {} equilibria", r.equilibria.len());
    Ok(format!(
        "|α| = 0.9·{thr:.4}: only 0 (both signs); α = {a:.2} < ᾱ₁ = {abar:.2}: {} equilibria",
        r.equilibria.len()
    ))
}

fn c10_absorbing() -> Outcome {
    let (k, alpha, nu) = (1.0, -10.0, 0.3);
    let p = base().with_k(k).with_alpha(alpha);
    let table = ok(find_spectrum(&p, 3, 1))?;
    let rep = ok(thresholds(&p, table.lambda1, 0.0, &ThresholdQuery::standard(k)))?;
    let limits = [
        rep.alpha_bound_general,
        rep.alpha_bound_g0_case_a.unwrap_or(0.0),
        rep.alpha_bound_g0_case_b.unwrap_or(0.0),
        rep.trivial_uniqueness_bound,
    ];
    let top = limits.iter().copied().fold(0.0, f64::max);
    ensure!(alpha.abs() > top, "|α| = {} within threshold {top}", alpha.abs());
    let dir = ok(tempfile::tempdir())?;
    let mut cfg = ScenarioConfig {
        params: p,
        seed: 1,
        ..Default::default()
    };
    cfg.truncation.keys = Some(low_keys(&table));
    let exp = Experiment::Absorb(AbsorbArgs {
        nu: Some(nu),
        calibration_runs: Some(4),
        runs: Some(20),
        norm: Some(Span::new(0.1, 100.0)),
        t_final: Some(100.0),
        stride: Some(0.1),
    });
    let m = cli_run(cfg, exp, dir.path())?;
    let s = &m.summary;
    let level = s["level"].as_f64().unwrap_or(f64::NAN);
    ensure!(s["pass"] == true, "battery failed: witnesses {}", s["witnesses"]);
    ensure!(s["entered"] == 20 && s["runs"] == 20, "entered {} of {}", s["entered"], s["runs"]);
    let mut r = ok(csv::Reader::from_path(dir.path().join("run/absorb_runs.csv")))?;
    let mut outside = 0;
    let mut v0_max = 0.0f64;
    for row in r.records() {
        let row = ok(row)?;
        let v0: f64 = ok(row[1].parse())?;
        outside += (v0 > level) as usize;
        v0_max = v0_max.max(v0);
    }
    ensure!(outside > 0, "every run starts inside the level set");
    Ok(format!(
        "α={alpha} (thresholds ≤ {top:.3}): 20/20 runs enter and stay in V_ν,k ≤ {level:.3}; {outside} start outside (V₀ up to {v0_max:.2e})"
    ))
}

fn c11_decay() -> Outcome {
    let p = base().with_k(1.0).with_alpha(0.5);
    let table = ok(find_spectrum(&p, 3, 1))?;
    let q = ThresholdQuery::new(0.5, 0.1);
    let rep = ok(thresholds(&p, table.lambda1, 0.0, &q))?;
    let bound = rep.alpha_bound_g0_case_a.unwrap_or(f64::NAN);
    ensure!(rep.compliant && p.alpha <= bound, "case (a) not satisfied: α={} bound {bound}", p.alpha);
    let dir = ok(tempfile::tempdir())?;
    let mut cfg = ScenarioConfig {
        params: p,
        seed: 9,
        ..Default::default()
    };
    cfg.truncation.keys = Some(low_keys(&table));
    let exp = Experiment::Decay(DecayArgs {
        runs: Some(8),
        norm: Some(Span::new(0.1, 10.0)),
        t_final: Some(60.0),
        ..Default::default()
    });
    cli_run(cfg, exp, dir.path())?;
    let mut r = ok(csv::Reader::from_path(dir.path().join("run/decay.csv")))?;
    let mut etas = Vec::new();
    for row in r.records() {
        let row = ok(row)?;
        ensure!(&row[1] == "fitted", "run {}: status {}", &row[0], &row[1]);
        etas.push(ok(row[2].parse::<f64>())?);
    }
    ensure!(etas.len() == 8 && etas.iter().all(|&e| e > 0.0), "rates {etas:?}");

    let k = 0.2;
    let p = base().with_k(k);
    let t1 = ok(find_spectrum(&p, 1, 1))?;
    let sys = ok(ModalSystem::new(&p, &t1, &[ModeKey::new(1, Parity::Even, 1)]))?;
    let tr = run(&sys, &p, &ModalState::new(vec![1e-4], vec![0.0]), 200.0, 0.05, 0.05, Tolerances::new(1e-10, 1e-24))?;
    let eta = ok(fit_decay(&tr, &[0.0]))?.eta.ok_or("linear oracle: no rate")?;
    let want = linear_mode_rate(k, sys.lambda[0]);
    let rel = ((eta - want) / want).abs();
    ensure!(rel < 0.05, "linear oracle η = {eta} vs {want}");
    let lo = etas.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(format!("case (a) k=1, α=0.5: 8/8 fitted η ≥ {lo:.3}; linear oracle η = {eta:.5} vs k/2 = {want:.5} ({:.2}%)", 100.0 * rel))
}

fn c12_determining() -> Outcome {
    let table = ok(find_spectrum(&base(), 20, 2))?;
    let mut worst = 0.0f64;
    for n in 1..=20 {
        let d = ok(modal_defect(n, &table, 0.0))?;
        worst = worst.max((d.scaled - 1.0).abs());
    }
    ensure!(worst <= 1e-8, "ε₀(N)√λ_(N+1) off by {worst:e}");
    let p = base().with_alpha(-1500.0).with_k(1.0);
    let t = ok(find_spectrum(&p, 2, 1))?;
    let sys = ok(ModalSystem::new(&p, &t, &t.keys()))?;
    let mut pairs = ok(random_pairs(&sys.lambda, 6, (0.1, 10.0), 12))?;
    let i2 = sys.keys.iter().position(|k| *k == ModeKey::new(2, Parity::Even, 1)).ok_or("m2e missing")?;
    let mut a = ModalState::zeros(sys.dim());
    a.h[i2] = 0.3;
    let mut b = a.clone();
    b.h[i2] = -0.3;
    pairs.push((a, b));
    let r = ok(determining_experiment(&sys, &p, &[1, 2, 3, 4], &pairs, &ExperimentOptions::default()))?;
    let n_star = r.n_star.ok_or("no consistent rung")?;
    for rung in &r.ladder {
        ensure!(rung.n < n_star || rung.verdict == Verdict::Consistent, "N={} ≥ N*={n_star} inconsistent", rung.n);
    }
    let verdicts: Vec<String> = r.ladder.iter().map(|x| format!("N={}:{:?}", x.n, x.verdict)).collect();
    Ok(format!("defect scaling within {worst:.1e} for N=1..20; {} pairs, {}; N* = {n_star}", pairs.len(), verdicts.join(" ")))
}

type Criterion = (u32, &'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 12] = [
    (1, "spectrum vs Rayleigh-Ritz oracle", c1_spectrum),
    (2, "energy identity battery", c2_energy_identity),
    (3, "quartic root structure", c3_quartic),
    (4, "critical alpha values", c4_alpha_crit),
    (5, "branch curves Phi(mu, m)", c5_figure),
    (6, "unimodal equilibria", c6_unimodal),
    (7, "Duffing basin and heteroclinic family", c7_duffing),
    (8, "unimodal Galerkin/Duffing cross-validation", c8_cross_validation),
    (9, "trivial uniqueness and multiplicity", c9_uniqueness),
    (10, "absorbing ball battery", c10_absorbing),
    (11, "contractive decay rates", c11_decay),
    (12, "determining modes", c12_determining),
];

fn main() -> ExitCode {
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let selected: Vec<&Criterion> = CRITERIA.iter().filter(|c| only.is_empty() || only.contains(&c.0)).collect();
    let results: Vec<(Outcome, f64)> = std::thread::scope(|s| {
        let handles: Vec<_> = selected
            .iter()
            .map(|c| {
                s.spawn(move || {
                    let t = Instant::now();
                    let r = catch_unwind(AssertUnwindSafe(c.2)).unwrap_or_else(|e| {
                        let msg = e
                            .downcast_ref::<String>()
                            .cloned()
                            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                            .unwrap_or_default();
                        Err(format!("panic: {msg}"))
                    });
                    (r, t.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("criterion thread")).collect()
    });
    let mut failed = 0;
    for (c, (r, secs)) in selected.iter().zip(&results) {
        match r {
            Ok(detail) => println!("criterion {:>2} PASS  {} ({secs:.1}s): {detail}", c.0, c.1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {} ({secs:.1}s): {why}", c.0, c.1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", selected.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
