//! One function per experiment. Each writes its artifacts through the
//! context and returns a JSON summary for the manifest.

use std::path::Path;

use plateflow::determining::{determining_experiment, modal_defect, random_pairs, ExperimentOptions, Verdict};
use plateflow::duffing::{
    integrate_duffing_with, nonzero_limit_predicate, BasinGrid, DuffingOptions, DuffingParams, LimitLabel,
};
use plateflow::modal::{energy_identity_residual, integrate_system, ModalState, ModalSystem, Trajectory, TruncationSpec};
use plateflow::ode::Tolerances;
use plateflow::stability::{
    absorbing_check, asymptotic_bounds, calibrate_absorbing, fit_decay, random_battery, thresholds, DecayStatus,
    ThresholdQuery,
};
use plateflow::stationary::{build_unimodal, newton_equilibria, phi, trace_branch, trivial_uniqueness_threshold, NewtonConfig};
use plateflow::{Error, PlateParams};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::*;
use crate::error::{CliError, Result};
use crate::run::{key_label, num, subseed, Ctx};

pub fn dispatch(ctx: &Ctx<'_>, exp: &Experiment) -> Result<Value> {
    match exp {
        Experiment::Spectrum(a) => spectrum(ctx, a),
        Experiment::Simulate(a) => simulate(ctx, a),
        Experiment::Stationary(a) => stationary(ctx, a),
        Experiment::Branch(a) => branch(ctx, a),
        Experiment::Duffing(a) => duffing(ctx, a),
        Experiment::Basin(a) => basin(ctx, a),
        Experiment::Thresholds(a) => threshold_report(ctx, a),
        Experiment::Absorb(a) => absorb(ctx, a),
        Experiment::Decay(a) => decay(ctx, a),
        Experiment::Determine(a) => determine(ctx, a),
        Experiment::Sweep(a) => sweep(ctx, a),
    }
}

fn spectrum(ctx: &Ctx<'_>, a: &SpectrumArgs) -> Result<Value> {
    let t = ctx.table(a.m_max(), a.per_m())?;
    let mut w = ctx.csv("spectrum.csv")?;
    w.write_record(["index", "m", "parity", "branch", "lambda", "residual_ode", "residual_bc2", "residual_bc3"])?;
    let mut worst = 0.0f64;
    for (i, mode) in t.modes.iter().enumerate() {
        let r = mode.residuals(ctx.cfg.params.sigma, 400);
        worst = worst.max(r[0]).max(r[1]).max(r[2]);
        w.write_record([
            (i + 1).to_string(),
            mode.key.m.to_string(),
            mode.key.parity.as_str().to_string(),
            mode.key.branch.to_string(),
            num(mode.lambda),
            num(r[0]),
            num(r[1]),
            num(r[2]),
        ])?;
    }
    w.flush().map_err(|e| CliError::io(ctx.path("spectrum.csv"), e))?;
    Ok(json!({ "lambda1": t.lambda1, "modes": t.len(), "max_residual": worst }))
}

fn run_traj(sys: &ModalSystem, p: &PlateParams, init: &ModalState, t: f64, stride: f64, tol: Tolerances, nu: Option<f64>) -> Result<Trajectory> {
    let mut spec = TruncationSpec::new(sys.keys.clone(), stride).with_tol(tol);
    if let Some(nu) = nu {
        spec = spec.with_nu(nu);
    }
    Ok(integrate_system(sys, init, (0.0, t), &spec, p)?)
}

fn run_battery(sys: &ModalSystem, p: &PlateParams, inits: &[ModalState], t: f64, stride: f64, tol: Tolerances, nu: Option<f64>) -> Result<Vec<Trajectory>> {
    inits.par_iter().map(|x| run_traj(sys, p, x, t, stride, tol, nu)).collect()
}

fn write_trajectory(ctx: &Ctx<'_>, name: &str, tr: &Trajectory) -> Result<()> {
    let mut w = ctx.csv(name)?;
    let mut head: Vec<String> = ["t", "e", "e_plus", "script_e", "v_nu", "v_nu_k", "h2_sq", "ux_sq", "ut_sq"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    head.extend(tr.meta.keys.iter().map(|k| format!("h_{}", key_label(k))));
    head.extend(tr.meta.keys.iter().map(|k| format!("hdot_{}", key_label(k))));
    w.write_record(&head)?;
    for s in &tr.samples {
        let e = &s.energy;
        let mut row: Vec<String> = [s.state.t, e.e, e.e_plus, e.script_e, e.v_nu, e.v_nu_k, e.norm_h2_sq, e.norm_ux_sq, e.norm_ut_sq]
            .iter()
            .map(|&x| num(x))
            .collect();
        row.extend(s.state.h.iter().chain(&s.state.hdot).map(|&x| num(x)));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| CliError::io(ctx.path(name), e))?;
    Ok(())
}

fn simulate(ctx: &Ctx<'_>, a: &SimulateArgs) -> Result<Value> {
    let p = &ctx.cfg.params;
    let (table, sys) = ctx.system()?;
    let init = ctx.initial(&table, &sys)?;
    let tr = run_traj(&sys, p, &init, a.t_final(), a.stride(), ctx.cfg.truncation.tol, a.nu())?;
    write_trajectory(ctx, "trajectory.csv", &tr)?;
    let id = energy_identity_residual(&tr, p);
    let v = json!({
        "modes": sys.dim(),
        "samples": tr.samples.len(),
        "accepted_steps": tr.meta.accepted,
        "rejected_steps": tr.meta.rejected,
        "nu": tr.meta.nu,
        "energy_identity": { "max_abs": id.max_abs, "max_script_e": id.max_script_e, "relative": id.relative() },
        "final_energy": tr.last().energy,
    });
    ctx.json("simulate.json", &v)?;
    Ok(v)
}

fn stationary(ctx: &Ctx<'_>, a: &StationaryArgs) -> Result<Value> {
    let p = &ctx.cfg.params;
    let (table, sys) = ctx.system()?;
    let mut cfg = NewtonConfig::new(a.n_starts(), ctx.cfg.seed);
    cfg.radius = a.radius();
    let rep = newton_equilibria(&sys, p, &cfg)?;
    let mut w = ctx.csv("equilibria.csv")?;
    let mut head: Vec<String> = ["index", "norm", "residual", "hyperbolic", "hits"].iter().map(|s| s.to_string()).collect();
    head.extend(sys.keys.iter().map(|k| format!("h_{}", key_label(k))));
    w.write_record(&head)?;
    for (i, e) in rep.equilibria.iter().enumerate() {
        let norm = e.coeffs.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut row = vec![i.to_string(), num(norm), num(e.residual), e.hyperbolic.to_string(), e.hits.to_string()];
        row.extend(e.coeffs.iter().map(|&x| num(x)));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| CliError::io(ctx.path("equilibria.csv"), e))?;

    let m = a.profile_m();
    let unimodal = match build_unimodal(m, p.alpha, p) {
        Ok(u) => {
            let mut w = ctx.csv("unimodal.csv")?;
            w.write_record(["y", "psi", "u_at_peak"])?;
            let x = std::f64::consts::FRAC_PI_2 / m as f64;
            for i in 0..=200 {
                let y = -p.ell + 2.0 * p.ell * i as f64 / 200.0;
                w.write_record([num(y), num(u.psi.value(y)), num(u.value(x, y))])?;
            }
            w.flush().map_err(|e| CliError::io(ctx.path("unimodal.csv"), e))?;
            json!({ "m": m, "mu": u.mu, "amplitude": u.amplitude, "zero_count": u.zero_count, "residual": u.residual(p) })
        }
        Err(Error::NoUnimodal { .. }) => Value::Null,
        Err(e) => return Err(e.into()),
    };
    let v = json!({
        "equilibria": rep.equilibria.len(),
        "hyperbolic": rep.equilibria.iter().filter(|e| e.hyperbolic).count(),
        "discarded_starts": rep.discarded,
        "start_radius": rep.radius,
        "trivial_uniqueness_threshold": trivial_uniqueness_threshold(p, table.lambda1).ok(),
        "unimodal": unimodal,
    });
    ctx.json("stationary.json", &v)?;
    Ok(v)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CurveSummary {
    m: u32,
    samples: usize,
    monotonicity_violations: usize,
    diagnostic: Option<String>,
}

fn branch(ctx: &Ctx<'_>, a: &BranchArgs) -> Result<Value> {
    let p = &ctx.cfg.params;
    let mu = a.mu();
    let ms: Vec<u32> = a.m().iter().collect();
    let curves = ms
        .par_iter()
        .map(|&m| trace_branch(m, mu.pair(), p))
        .collect::<Result<Vec<_>, _>>()?;
    let mut summary = Vec::new();
    for c in &curves {
        let name = format!("branch_m{}.csv", c.m);
        let mut w = ctx.csv(&name)?;
        w.write_record(["mu", "phi", "abs_phi"])?;
        for &(x, y) in &c.samples {
            w.write_record([num(x), num(y), num(y.abs())])?;
        }
        w.flush().map_err(|e| CliError::io(ctx.path(&name), e))?;
        summary.push(CurveSummary {
            m: c.m,
            samples: c.samples.len(),
            monotonicity_violations: c.monotonicity_violations(1e-6).len(),
            diagnostic: c.diagnostic.clone(),
        });
    }
    // ordering from bottom to top in m on an interior μ grid
    let mut ordered = true;
    for i in 0..=20 {
        let x = mu.lo + (mu.hi - mu.lo) * (0.005 + 0.99 * i as f64 / 20.0);
        let vals: Vec<Option<f64>> = curves
            .iter()
            .map(|c| phi(c.m, x, p, c.interpolate(x)).or_else(|| c.interpolate(x)).map(f64::abs))
            .collect();
        for w in vals.windows(2) {
            if let (Some(lo), Some(hi)) = (w[0], w[1]) {
                ordered &= lo < hi * (1.0 - 1e-6);
            }
        }
    }
    let v = json!({ "curves": summary, "ordered_in_m": ordered });
    ctx.json("branch.json", &v)?;
    Ok(v)
}

fn duffing_params(ctx: &Ctx<'_>, m: u32, r2: Option<f64>) -> Result<DuffingParams> {
    let p = &ctx.cfg.params;
    Ok(match r2 {
        Some(r2) => DuffingParams::new(m, p.k, r2)?,
        None => DuffingParams::from_unimodal(&build_unimodal(m, p.alpha, p)?, p)?,
    })
}

fn duffing(ctx: &Ctx<'_>, a: &DuffingArgs) -> Result<Value> {
    let q = duffing_params(ctx, a.m(), a.r2())?;
    let opts = DuffingOptions {
        stride: Some(a.stride()),
        ..Default::default()
    };
    let tr = integrate_duffing_with(&q, a.phi0(), a.dphi0(), a.t_final(), &ctx.cfg.truncation.tol, &opts)?;
    let mut w = ctx.csv("duffing.csv")?;
    w.write_record(["t", "phi", "dphi", "energy"])?;
    for s in &tr.samples {
        w.write_record([num(s.t), num(s.phi), num(s.dphi), num(s.energy)])?;
    }
    w.flush().map_err(|e| CliError::io(ctx.path("duffing.csv"), e))?;
    let v = json!({
        "params": q,
        "limit": tr.limit,
        "decided_at": tr.decided_at,
        "energy_residual": tr.energy_residual,
        "max_energy_increase": tr.max_energy_increase,
        "negative_energy_start": nonzero_limit_predicate(a.phi0(), a.dphi0(), &q),
    });
    ctx.json("duffing.json", &v)?;
    Ok(v)
}

fn label_str(l: LimitLabel) -> String {
    match l.value() {
        Some(v) => v.to_string(),
        None => "undecided".to_string(),
    }
}

fn basin(ctx: &Ctx<'_>, a: &BasinArgs) -> Result<Value> {
    let q = duffing_params(ctx, a.m(), a.r2())?;
    let grid = BasinGrid {
        phi: a.phi().pair(),
        dphi: a.dphi().pair(),
        n_phi: a.n_phi(),
        n_dphi: a.n_dphi(),
    };
    let pts = grid.points();
    let opts = DuffingOptions {
        stride: None,
        stop_on_decision: true,
        ..Default::default()
    };
    let tol = ctx.cfg.truncation.tol;
    let t_final = a.t_final();
    let res = pts
        .par_iter()
        .map(|&(x, y)| integrate_duffing_with(&q, x, y, t_final, &tol, &opts).map(|t| (t.limit, t.energy_residual)))
        .collect::<Result<Vec<_>, _>>()?;

    let mut w = ctx.csv("basin.csv")?;
    w.write_record(["phi0", "dphi0", "label"])?;
    let mut counts = [0usize; 4];
    let (mut neg, mut violations, mut worst) = (0usize, 0usize, 0.0f64);
    for (&(x, y), &(l, r)) in pts.iter().zip(&res) {
        w.write_record([num(x), num(y), label_str(l)])?;
        counts[l.value().map_or(3, |v| (v + 1) as usize)] += 1;
        worst = worst.max(r);
        if nonzero_limit_predicate(x, y, &q) {
            neg += 1;
            if l.value().map(f64::from) != Some(x.signum()) {
                violations += 1;
            }
        }
    }
    w.flush().map_err(|e| CliError::io(ctx.path("basin.csv"), e))?;
    let v = json!({
        "params": q,
        "points": pts.len(),
        "counts": { "minus": counts[0], "zero": counts[1], "plus": counts[2], "undecided": counts[3] },
        "negative_energy_points": neg,
        "negative_energy_violations": violations,
        "max_energy_residual": worst,
    });
    ctx.json("basin.json", &v)?;
    Ok(v)
}

fn threshold_report(ctx: &Ctx<'_>, a: &ThresholdsArgs) -> Result<Value> {
    let p = &ctx.cfg.params;
    let (table, sys) = ctx.system()?;
    let mut q = ThresholdQuery::standard(p.k);
    if let Some(nu) = a.nu() {
        q.nu = nu;
        q.delta = 0.25 * (p.k - nu);
    }
    if let Some(d) = a.delta() {
        q.delta = d;
    }
    q.gamma = a.gamma();
    let rep = thresholds(p, table.lambda1, sys.g_norm_sq(), &q)?;
    let bounds = asymptotic_bounds(p, table.lambda1, q.nu, rep.vnu_limsup).ok();
    let v = json!({ "lambda1": table.lambda1, "g_norm_sq": sys.g_norm_sq(), "report": rep, "asymptotic": bounds });
    ctx.json("thresholds.json", &v)?;
    Ok(v)
}

fn absorb(ctx: &Ctx<'_>, a: &AbsorbArgs) -> Result<Value> {
    let p = &ctx.cfg.params;
    let (_, sys) = ctx.system()?;
    let tol = ctx.cfg.truncation.tol;
    let nu = a.nu();
    let go = |n: usize, counter: u64| -> Result<Vec<Trajectory>> {
        let inits = random_battery(&sys.lambda, n, a.norm().pair(), subseed(ctx.cfg.seed, counter))?;
        run_battery(&sys, p, &inits, a.t_final(), a.stride(), tol, Some(nu))
    };
    let cal = calibrate_absorbing(&sys, &go(a.calibration_runs(), 1)?, nu)?;
    let rep = absorbing_check(&sys, &go(a.runs(), 2)?, &cal)?;
    let mut w = ctx.csv("absorb_runs.csv")?;
    w.write_record(["run", "v0", "e_plus0", "entry_time", "contained", "envelope_ok", "sandwich_ok"])?;
    for (i, r) in rep.runs.iter().enumerate() {
        w.write_record([
            i.to_string(),
            num(r.v0),
            num(r.e_plus0),
            r.entry_time.map(num).unwrap_or_default(),
            r.contained.to_string(),
            r.envelope_ok.to_string(),
            r.sandwich_ok.to_string(),
        ])?;
    }
    w.flush().map_err(|e| CliError::io(ctx.path("absorb_runs.csv"), e))?;
    let v = json!({
        "calibration": rep.calibration,
        "level": rep.level,
        "pass": rep.pass,
        "entered": rep.runs.iter().filter(|r| r.entry_time.is_some()).count(),
        "runs": rep.runs.len(),
        "witnesses": rep.witnesses,
    });
    ctx.json("absorb.json", &v)?;
    Ok(v)
}

fn decay_fits(sys: &ModalSystem, p: &PlateParams, inits: &[ModalState], t: f64, stride: f64, tol: Tolerances) -> Result<Vec<plateflow::stability::DecayFit>> {
    let zero = vec![0.0; sys.dim()];
    let trs = run_battery(sys, p, inits, t, stride, tol, None)?;
    Ok(trs.iter().map(|tr| fit_decay(tr, &zero)).collect::<Result<Vec<_>, _>>()?)
}

fn decay(ctx: &Ctx<'_>, a: &DecayArgs) -> Result<Value> {
    let p = &ctx.cfg.params;
    let (table, sys) = ctx.system()?;
    let tol = Tolerances {
        atol: a.atol(),
        ..ctx.cfg.truncation.tol
    };
    let inits = random_battery(&sys.lambda, a.runs(), a.norm().pair(), subseed(ctx.cfg.seed, 3))?;
    let fits = decay_fits(&sys, p, &inits, a.t_final(), a.stride(), tol)?;
    let mut w = ctx.csv("decay.csv")?;
    w.write_record(["run", "status", "eta", "residual", "points"])?;
    for (i, f) in fits.iter().enumerate() {
        let status = serde_json::to_value(f.status)?;
        w.write_record([
            i.to_string(),
            status.as_str().unwrap_or_default().to_string(),
            f.eta.map(num).unwrap_or_default(),
            num(f.residual),
            f.points.to_string(),
        ])?;
    }
    w.flush().map_err(|e| CliError::io(ctx.path("decay.csv"), e))?;
    let etas: Vec<f64> = fits.iter().filter_map(|f| f.eta).collect();
    let q = ThresholdQuery::standard(p.k);
    let v = json!({
        "runs": fits.len(),
        "fitted": etas.len(),
        "min_eta": etas.iter().copied().fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.min(x)))),
        "all_positive": fits.iter().all(|f| f.eta.is_some_and(|e| e > 0.0) || f.status == DecayStatus::Converged),
        "thresholds": thresholds(p, table.lambda1, sys.g_norm_sq(), &q).ok(),
    });
    ctx.json("decay.json", &v)?;
    Ok(v)
}

fn determine(ctx: &Ctx<'_>, a: &DetermineArgs) -> Result<Value> {
    let p = &ctx.cfg.params;
    let nmax = a.defect_n();
    let dt = ctx.table(nmax as u32, 2)?;
    let mut w = ctx.csv("defect.csv")?;
    w.write_record(["n", "eps0", "lambda_next", "scaled"])?;
    let mut worst = 0.0f64;
    for n in 1..=nmax {
        let d = modal_defect(n, &dt, 0.0)?;
        worst = worst.max((d.scaled - 1.0).abs());
        w.write_record([n.to_string(), num(d.eps0), num(d.lambda_next), num(d.scaled)])?;
    }
    w.flush().map_err(|e| CliError::io(ctx.path("defect.csv"), e))?;

    let (_, sys) = ctx.system()?;
    let pairs = random_pairs(&sys.lambda, a.pairs(), a.norm().pair(), subseed(ctx.cfg.seed, 4))?;
    let tol = ctx.cfg.truncation.tol;
    let opts = ExperimentOptions {
        t_final: a.t_final(),
        stride: a.stride(),
        tol: Tolerances {
            atol: tol.atol.min(1e-16),
            ..tol
        },
        ..Default::default()
    };
    let rep = determining_experiment(&sys, p, &a.ladder(), &pairs, &opts)?;
    let mut w = ctx.csv("determine.csv")?;
    w.write_record(["n", "verdict", "inconsistent_pairs"])?;
    for r in &rep.ladder {
        let bad = r.outcomes.iter().filter(|o| !o.consistent()).count();
        let verdict = match r.verdict {
            Verdict::Consistent => "consistent",
            Verdict::Inconsistent => "inconsistent",
        };
        w.write_record([r.n.to_string(), verdict.to_string(), bad.to_string()])?;
    }
    w.flush().map_err(|e| CliError::io(ctx.path("determine.csv"), e))?;
    let v = json!({
        "defect_max_deviation": worst,
        "keys": rep.keys.iter().map(key_label).collect::<Vec<_>>(),
        "n_star": rep.n_star,
        "ladder": rep.ladder.iter().map(|r| json!({ "n": r.n, "verdict": r.verdict })).collect::<Vec<_>>(),
    });
    ctx.json("determine.json", &v)?;
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub index: usize,
    pub value: f64,
    pub measure: Option<f64>,
    pub detail: Option<String>,
    pub error: Option<String>,
}

fn sweep_grid(a: &SweepArgs) -> Vec<f64> {
    let mut v = a.values();
    let n = a.points();
    if let (Some(s), true) = (a.span(), n > 0) {
        v.extend((0..n).map(|i| if n == 1 { s.lo } else { s.lo + (s.hi - s.lo) * i as f64 / (n - 1) as f64 }));
    }
    v
}

fn sweep_point(ctx: &Ctx<'_>, a: &SweepArgs, table: &plateflow::spectrum::SpectrumTable, i: usize, x: f64) -> std::result::Result<(f64, String), CliError> {
    let mut p = ctx.cfg.params.clone();
    match a.param() {
        SweepParam::Alpha => p.alpha = x,
        SweepParam::K => p.k = x,
    }
    let sys = ModalSystem::new(&p, table, &ctx.keys(table))?;
    match a.measure() {
        SweepMeasure::Equilibria => {
            let cfg = NewtonConfig::new(a.n_starts(), subseed(ctx.cfg.seed, 100 + i as u64));
            let r = newton_equilibria(&sys, &p, &cfg)?;
            let hyp = r.equilibria.iter().filter(|e| e.hyperbolic).count();
            Ok((r.equilibria.len() as f64, format!("hyperbolic={hyp}")))
        }
        SweepMeasure::Decay => {
            let inits = random_battery(&sys.lambda, a.runs(), a.norm().pair(), subseed(ctx.cfg.seed, 3))?;
            let tol = Tolerances {
                atol: 1e-24,
                ..ctx.cfg.truncation.tol
            };
            let fits = decay_fits(&sys, &p, &inits, a.t_final(), 0.1, tol)?;
            let etas: Vec<f64> = fits.iter().filter_map(|f| f.eta).collect();
            if etas.len() < fits.len() {
                return Err(CliError::schema("sweep", format!("{} of {} runs without a rate", fits.len() - etas.len(), fits.len())));
            }
            Ok((etas.iter().copied().fold(f64::INFINITY, f64::min), format!("runs={}", fits.len())))
        }
    }
}

fn point_file(dir: &Path, i: usize) -> std::path::PathBuf {
    dir.join(format!("point_{i:05}.json"))
}

fn sweep(ctx: &Ctx<'_>, a: &SweepArgs) -> Result<Value> {
    let grid = sweep_grid(a);
    let dir = ctx.mkdir("points")?;
    let t = &ctx.cfg.truncation;
    let table = if grid.is_empty() { None } else { Some(ctx.table(t.m_max, t.per_m)?) };
    grid.par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let table = table.as_ref().expect("nonempty grid has a table");
            let (measure, detail, error) = match sweep_point(ctx, a, table, i, x) {
                Ok((m, d)) => (Some(m), Some(d), None),
                Err(e) => (None, None, Some(e.to_string())),
            };
            let pt = SweepPoint { index: i, value: x, measure, detail, error };
            let path = point_file(&dir, i);
            let f = std::fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
            serde_json::to_writer_pretty(f, &pt)?;
            Ok(())
        })
        .collect::<Result<Vec<()>>>()?;

    // single aggregator
    let mut w = ctx.csv("sweep.csv")?;
    w.write_record(["index", "param", "value", "measure", "status", "detail", "error"])?;
    let param = serde_json::to_value(a.param())?;
    let param = param.as_str().unwrap_or_default();
    let mut failed = 0usize;
    let mut rows = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let path = point_file(&dir, i);
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        let pt: SweepPoint = serde_json::from_str(&text)?;
        failed += pt.error.is_some() as usize;
        w.write_record([
            pt.index.to_string(),
            param.to_string(),
            num(pt.value),
            pt.measure.map(num).unwrap_or_default(),
            if pt.error.is_some() { "failed" } else { "ok" }.to_string(),
            pt.detail.clone().unwrap_or_default(),
            pt.error.clone().unwrap_or_default(),
        ])?;
        rows.push(pt);
    }
    w.flush().map_err(|e| CliError::io(ctx.path("sweep.csv"), e))?;
    let v = json!({ "points": grid.len(), "failed": failed, "rows": rows });
    ctx.json("sweep.json", &v)?;
    Ok(v)
}
