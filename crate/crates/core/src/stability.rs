//! Threshold formulas, Lyapunov bounds along trajectories, decay fits and
//! the absorbing-ball battery.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, precondition, Result};
use crate::modal::{ModalState, ModalSystem, Trajectory};
use crate::params::PlateParams;
use crate::rng::{gaussian_vec, subtask_rng};
use crate::spectrum::{GramKind, SpectrumTable};
use crate::stationary::trivial_uniqueness_threshold;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdQuery {
    pub nu: f64,
    pub delta: f64,
    /// Defaults to (k − ν)/2 − δ, the choice making the estimate global.
    pub gamma: Option<f64>,
}

impl ThresholdQuery {
    pub fn new(nu: f64, delta: f64) -> Self {
        Self { nu, delta, gamma: None }
    }

    /// ν = k/2, δ = k/8.
    pub fn standard(k: f64) -> Self {
        Self::new(0.5 * k, 0.125 * k)
    }

    pub fn gamma(&self, k: f64) -> f64 {
        self.gamma.unwrap_or(0.5 * (k - self.nu) - self.delta)
    }

    pub fn validate(&self, params: &PlateParams, lambda1: f64) -> Result<()> {
        let k = params.k;
        if !(k > 0.0) {
            return Err(invalid("k", "thresholds need k > 0"));
        }
        if !(params.p >= 0.0 && params.p < lambda1) {
            return Err(invalid("p", format!("need 0 ≤ P < λ₁ = {lambda1}")));
        }
        if !(self.nu > 0.0 && self.nu <= 0.5 * k) {
            return Err(invalid("nu", format!("need 0 < ν ≤ k/2 = {}", 0.5 * k)));
        }
        if !(self.delta > 0.0 && self.delta < 0.5 * (k - self.nu)) {
            return Err(invalid("delta", format!("need 0 < δ < (k−ν)/2 = {}", 0.5 * (k - self.nu))));
        }
        if self.nu * self.nu > lambda1 - params.p {
            return Err(invalid("nu", "need ν² ≤ λ₁ − P"));
        }
        if let Some(g) = self.gamma {
            let want = 0.5 * (k - self.nu) - self.delta;
            if !(g > 0.0) || (g - want).abs() > 1e-12 * k {
                return Err(invalid("gamma", format!("must equal (k−ν)/2 − δ = {want}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub query: ThresholdQuery,
    /// √(4δ(1−σ²)ν(λ₁−P−νk+ν²)/λ₁)
    pub alpha_bound_general: f64,
    /// g = 0, k² ≤ 2(λ₁−P).
    pub alpha_bound_g0_case_a: Option<f64>,
    /// g = 0, k² ≥ 2(λ₁−P).
    pub alpha_bound_g0_case_b: Option<f64>,
    pub nu_case_b: Option<f64>,
    /// ∥g∥²/(2ν(k−ν−2δ))
    pub vnu_limsup: f64,
    pub trivial_uniqueness_bound: f64,
    /// |α| within the general bound, or (for g = 0) within the case bound
    /// whose prescribed ν equals the queried one.
    pub compliant: bool,
}

pub fn thresholds(params: &PlateParams, lambda1: f64, g_norm_sq: f64, q: &ThresholdQuery) -> Result<ThresholdReport> {
    q.validate(params, lambda1)?;
    let (k, nu, d) = (params.k, q.nu, q.delta);
    let gap = lambda1 - params.p;
    let s2 = 1.0 - params.sigma.powi(2);
    let general = (4.0 * d * s2 * nu * (gap - nu * k + nu * nu) / lambda1).max(0.0).sqrt();
    let slack = 1e-12 * gap;
    let case_a = (k * k <= 2.0 * gap + slack).then(|| k * (s2 / (2.0 * lambda1) * (gap - 0.25 * k * k)).max(0.0).sqrt());
    let case_b = (k * k >= 2.0 * gap - slack).then(|| (s2 / (2.0 * lambda1)).sqrt() * gap);
    let a = params.alpha.abs();
    let nu_b = (k * k >= 2.0 * gap - slack).then(|| 0.5 * k - 0.5 * (k * k - 2.0 * gap).max(0.0).sqrt());
    Ok(ThresholdReport {
        query: *q,
        alpha_bound_general: general,
        alpha_bound_g0_case_a: case_a,
        alpha_bound_g0_case_b: case_b,
        nu_case_b: nu_b,
        vnu_limsup: g_norm_sq / (2.0 * nu * (k - nu - 2.0 * d)),
        trivial_uniqueness_bound: trivial_uniqueness_threshold(params, lambda1)?,
        compliant: params.alpha.abs() <= general
            || (g_norm_sq == 0.0
                && (case_a.is_some_and(|b| a <= b && (nu - 0.5 * k).abs() <= 1e-12 * k)
                    || case_b.is_some_and(|b| a <= b && nu_b.is_some_and(|n| (nu - n).abs() <= 1e-12 * k)))),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginSample {
    pub t: f64,
    pub v_nu: f64,
    /// Tightest right-hand side over all earlier base times.
    pub bound: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VnuCheck {
    pub compliant: bool,
    pub pass: bool,
    pub min_margin: f64,
    pub scale: f64,
    pub series: Vec<MarginSample>,
}

/// V_ν(t) ≤ e^{−ν(t−t₀)}V_ν(t₀) + (1−e^{−ν(t−t₀)})∥g∥²/(2ν(k−ν−2δ)) for all
/// sample pairs t₀ < t (base times thinned to at most 400).
pub fn verify_vnu_bound(traj: &Trajectory, params: &PlateParams, q: &ThresholdQuery) -> Result<VnuCheck> {
    let report = thresholds(params, traj.meta.lambda1, traj.meta.g_norm_sq, q)?;
    let limsup = report.vnu_limsup;
    let dn = q.nu - traj.meta.nu;
    let v: Vec<f64> = traj
        .samples
        .iter()
        .map(|s| {
            let hv: f64 = s.state.h.iter().zip(&s.state.hdot).map(|(a, b)| a * b).sum();
            s.energy.v_nu + dn * hv
        })
        .collect();
    let t: Vec<f64> = traj.times();
    let scale = v.iter().fold(1.0f64, |a, x| a.max(x.abs()));
    let base_stride = (v.len() / 400).max(1);
    let mut series = Vec::with_capacity(v.len());
    let mut min_margin = f64::INFINITY;
    for j in 1..v.len() {
        let mut bound = f64::INFINITY;
        for i in (0..j).step_by(base_stride).chain(core::iter::once(j - 1)) {
            let e = (-q.nu * (t[j] - t[i])).exp();
            bound = bound.min(e * v[i] + (1.0 - e) * limsup);
        }
        let margin = bound - v[j];
        min_margin = min_margin.min(margin);
        series.push(MarginSample {
            t: t[j],
            v_nu: v[j],
            bound,
            margin,
        });
    }
    Ok(VnuCheck {
        compliant: report.compliant,
        pass: min_margin >= -1e-8 * scale,
        min_margin,
        scale,
        series,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticBounds {
    /// limsup ∥u∥²
    pub psi: f64,
    /// limsup ∥u_x∥²
    pub ux_bound: f64,
    /// limsup ∥u∥²_{H²*}
    pub h2_bound: f64,
}

pub fn asymptotic_bounds(params: &PlateParams, lambda1: f64, nu: f64, vnu_inf: f64) -> Result<AsymptoticBounds> {
    if !(vnu_inf >= 0.0) {
        return Err(invalid("vnu_inf", "must be nonnegative"));
    }
    let gap = lambda1 - params.p;
    if !(gap > 0.0) {
        return Err(precondition("asymptotic_bounds", "need P < λ₁"));
    }
    let (s, v) = (params.s, vnu_inf);
    let psi = 4.0 * v / ((gap * gap + 4.0 * s * v).sqrt() + gap);
    let w = 2.0 * v + nu * nu * psi;
    let ux = 2.0 * w / ((gap * gap + 2.0 * s * w).sqrt() + gap);
    Ok(AsymptoticBounds {
        psi,
        ux_bound: ux,
        h2_bound: 2.0 * lambda1 / gap * (v + 0.5 * nu * nu * psi),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayStatus {
    Fitted,
    /// Distance at round-off over the whole window.
    Converged,
    PoorFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub target: Vec<f64>,
    pub status: DecayStatus,
    pub eta: Option<f64>,
    /// RMS deviation of ln d from the fitted line.
    pub residual: f64,
    pub window: (f64, f64),
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayOptions {
    /// Fraction of samples at the end used for the fit.
    pub window_fraction: f64,
    pub max_residual: f64,
    /// Samples with d below floor·max d are dropped as round-off.
    pub floor: f64,
    /// Largest rise of ln d above its running minimum before refusing.
    pub max_rise: f64,
}

impl Default for DecayOptions {
    fn default() -> Self {
        Self {
            window_fraction: 0.5,
            max_residual: 0.5,
            floor: 1e-11,
            max_rise: core::f64::consts::LN_10,
        }
    }
}

/// Y-norm distance √(Σλ_j(h_j−e_j)² + Σḣ_j²).
pub fn y_distance(lambda: &[f64], state: &ModalState, target: &[f64]) -> f64 {
    let a: f64 = lambda
        .iter()
        .zip(state.h.iter().zip(target))
        .map(|(l, (h, e))| l * (h - e).powi(2))
        .sum();
    let b: f64 = state.hdot.iter().map(|x| x * x).sum();
    (a + b).sqrt()
}

pub fn fit_decay(traj: &Trajectory, target: &[f64]) -> Result<DecayFit> {
    fit_decay_with(traj, target, &DecayOptions::default())
}

/// Least-squares slope of ln d(t) over the tail window; η = −slope.
pub fn fit_decay_with(traj: &Trajectory, target: &[f64], opts: &DecayOptions) -> Result<DecayFit> {
    if target.len() != traj.meta.lambda.len() {
        return Err(invalid("target", "length must match the truncation"));
    }
    let n = traj.samples.len();
    if n < 4 {
        return Err(invalid("traj", "need at least four samples"));
    }
    let start = ((1.0 - opts.window_fraction) * n as f64).floor() as usize;
    let win = &traj.samples[start.min(n - 2)..];
    let window = (win[0].state.t, win[win.len() - 1].state.t);
    let d: Vec<(f64, f64)> = win
        .iter()
        .map(|s| (s.state.t, y_distance(&traj.meta.lambda, &s.state, target)))
        .collect();
    let d0 = traj
        .samples
        .iter()
        .map(|s| y_distance(&traj.meta.lambda, &s.state, target))
        .fold(0.0f64, f64::max);
    let converged = |points| DecayFit {
        target: target.to_vec(),
        status: DecayStatus::Converged,
        eta: None,
        residual: 0.0,
        window,
        points,
    };
    if d0 == 0.0 {
        return Ok(converged(0));
    }
    let floor = opts.floor * d0.max(1e-300);
    let pts: Vec<(f64, f64)> = d.iter().filter(|p| p.1 > floor).map(|&(t, x)| (t, x.ln())).collect();
    if pts.len() < 3 {
        return Ok(converged(pts.len()));
    }
    let mut run_min = f64::INFINITY;
    for &(t, y) in &pts {
        if y - run_min > opts.max_rise {
            return Err(precondition(
                "fit_decay",
                format!("distance rises by more than e^{} at t = {t}", opts.max_rise),
            ));
        }
        run_min = run_min.min(y);
    }
    let m = pts.len() as f64;
    let (st, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mt, my) = (st / m, sy / m);
    let (sxx, sxy) = pts
        .iter()
        .fold((0.0, 0.0), |a, p| (a.0 + (p.0 - mt).powi(2), a.1 + (p.0 - mt) * (p.1 - my)));
    let slope = sxy / sxx;
    let residual = (pts
        .iter()
        .map(|p| (p.1 - my - slope * (p.0 - mt)).powi(2))
        .sum::<f64>()
        / m)
        .sqrt();
    let ok = residual <= opts.max_residual;
    Ok(DecayFit {
        target: target.to_vec(),
        status: if ok { DecayStatus::Fitted } else { DecayStatus::PoorFit },
        eta: ok.then_some(-slope),
        residual,
        window,
        points: pts.len(),
    })
}

/// Decay rate of the linear oscillator ḧ + kḣ + λh = 0: −max Re of the roots
/// of s² + ks + λ.
pub fn linear_mode_rate(k: f64, lambda: f64) -> f64 {
    let disc = k * k - 4.0 * lambda;
    if disc < 0.0 {
        0.5 * k
    } else {
        0.5 * (k - disc.sqrt())
    }
}

/// Largest ν compatible with the sign conditions of the dissipation estimate
/// as γ → 0: ν < k/2, ν < 2λ₁/3, ν < 2S.
pub fn absorbing_nu_max(k: f64, s: f64, lambda1: f64) -> f64 {
    (0.5 * k).min(2.0 * lambda1 / 3.0).min(2.0 * s)
}

/// Frozen constants of V(t) ≤ V(0)e^{−ηt} + (C/η)(1 − e^{−ηt}) and of the
/// sandwich c₀E₊ − c₂ ≤ V ≤ c₁E₊ + c₂.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsorbingCalibration {
    pub nu: f64,
    pub eta: f64,
    pub c: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl AbsorbingCalibration {
    /// C/η
    pub fn level(&self) -> f64 {
        self.c / self.eta
    }

    /// Level of the absorbing set, 1 + C/η.
    pub fn ball_level(&self) -> f64 {
        1.0 + self.level()
    }

    pub fn envelope(&self, v0: f64, t: f64) -> f64 {
        let e = (-self.eta * t).exp();
        v0 * e + self.level() * (1.0 - e)
    }
}

/// V_{ν,k} = 𝓔 + ν(h·ḣ + k/2 |h|²).
pub fn v_nu_k(sys: &ModalSystem, h: &[f64], v: &[f64], nu: f64) -> f64 {
    sys.energy(h, v, nu).script_e + nu * (dot(h, v) + 0.5 * sys.k * dot(h, h))
}

/// d/dt V_{ν,k} along the flow:
/// (ν−k)|ḣ|² + α(u_y,u_t) + ν(−a(u,u) − S∥u_x∥⁴ + P∥u_x∥² + α(u_y,u) + (g,u)).
pub fn v_nu_k_rate(sys: &ModalSystem, h: &[f64], v: &[f64], nu: f64) -> f64 {
    let ux = sys.ux_sq(h);
    (nu - sys.k) * dot(v, v)
        + sys.alpha * sys.uy_dot(h, v)
        + nu * (-sys.h2_sq(h) - sys.s * ux * ux + sys.p * ux + sys.alpha * sys.uy_dot(h, h) + dot(&sys.g, h))
}

/// sup over velocities of dV_{ν,k}/dt + ηV_{ν,k} at displacement h (a concave
/// quadratic in ḣ when ν − k + η/2 < 0).
pub fn dissipation_excess(sys: &ModalSystem, h: &[f64], nu: f64, eta: f64) -> f64 {
    let n = h.len();
    let a2 = nu - sys.k + 0.5 * eta;
    let mut w = vec![0.0; n];
    sys.upsilon.transpose_apply(h, &mut w);
    let b: Vec<f64> = w.iter().zip(h).map(|(wj, hj)| sys.alpha * wj + eta * nu * hj).collect();
    let zero = vec![0.0; n];
    let rest = v_nu_k_rate(sys, h, &zero, nu) + eta * v_nu_k(sys, h, &zero, nu);
    rest - dot(&b, &b) / (4.0 * a2)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_nu(sys: &ModalSystem, nu: f64, eta: f64) -> Result<()> {
    let max = absorbing_nu_max(sys.k, sys.s, sys.lambda1);
    if !(nu > 0.0 && nu < max) {
        return Err(precondition("absorbing", format!("need 0 < ν < {max}, got {nu}")));
    }
    if !(nu - sys.k + 0.5 * eta < 0.0) {
        return Err(precondition("absorbing", "need ν − k + η/2 < 0"));
    }
    Ok(())
}

/// Fits (η, C) and the sandwich constants on calibration runs: η = ν and C
/// is 1.25 times the least value for which the envelope holds on every
/// calibration sample. The
/// sandwich uses c₀ = 1/2, c₁ = 2 and c₂ = 1.25 times the worst offset.
pub fn calibrate_absorbing(sys: &ModalSystem, trajs: &[Trajectory], nu: f64) -> Result<AbsorbingCalibration> {
    if trajs.is_empty() {
        return Err(invalid("trajs", "need calibration runs"));
    }
    let eta = nu;
    check_nu(sys, nu, eta)?;
    let mut c = 0.0f64;
    let (c0, c1) = (0.5, 2.0);
    let mut off = 0.0f64;
    for traj in trajs {
        let first = &traj.samples[0].state;
        let (t0, v0) = (first.t, v_nu_k(sys, &first.h, &first.hdot, nu));
        for s in &traj.samples {
            let v = v_nu_k(sys, &s.state.h, &s.state.hdot, nu);
            let dt = s.state.t - t0;
            if dt > 0.0 {
                let e = (-eta * dt).exp();
                c = c.max(eta * (v - v0 * e) / (1.0 - e));
            }
            let ep = s.energy.e_plus;
            off = off.max((c0 * ep - v).max(v - c1 * ep));
        }
    }
    Ok(AbsorbingCalibration {
        nu,
        eta,
        c: 1.25 * c.max(1e-12),
        c0,
        c1,
        c2: 1.25 * off,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub run: usize,
    pub t: f64,
    pub value: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsorbingRun {
    pub v0: f64,
    pub e_plus0: f64,
    pub entry_time: Option<f64>,
    pub contained: bool,
    pub envelope_ok: bool,
    pub sandwich_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorbingBallReport {
    pub calibration: AbsorbingCalibration,
    pub level: f64,
    pub runs: Vec<AbsorbingRun>,
    pub witnesses: Vec<Witness>,
    pub pass: bool,
}

/// Checks the frozen envelope, entry into 𝓑 = {V_{ν,k} ≤ 1 + C/η},
/// post-entry containment and the E₊ sandwich on every sample.
pub fn absorbing_check(sys: &ModalSystem, trajs: &[Trajectory], cal: &AbsorbingCalibration) -> Result<AbsorbingBallReport> {
    check_nu(sys, cal.nu, cal.eta)?;
    let level = cal.ball_level();
    let mut runs = Vec::with_capacity(trajs.len());
    let mut witnesses = Vec::new();
    for (r, traj) in trajs.iter().enumerate() {
        let s: Vec<(f64, f64, f64)> = traj
            .samples
            .iter()
            .map(|x| (x.state.t, v_nu_k(sys, &x.state.h, &x.state.hdot, cal.nu), x.energy.e_plus))
            .collect();
        let (t0, v0, ep0) = s[0];
        let mut run = AbsorbingRun {
            v0,
            e_plus0: ep0,
            entry_time: None,
            contained: true,
            envelope_ok: true,
            sandwich_ok: true,
        };
        for &(t, v, ep) in &s {
            let env = cal.envelope(v0, t - t0);
            if v > env + 1e-9 * v0.abs().max(1.0) {
                if run.envelope_ok {
                    witnesses.push(Witness { run: r, t, value: v, limit: env });
                }
                run.envelope_ok = false;
            }
            if v < cal.c0 * ep - cal.c2 || v > cal.c1 * ep + cal.c2 {
                run.sandwich_ok = false;
            }
            match run.entry_time {
                None if v <= level => run.entry_time = Some(t),
                Some(_) if v > level => {
                    if run.contained {
                        witnesses.push(Witness { run: r, t, value: v, limit: level });
                    }
                    run.contained = false;
                }
                _ => {}
            }
        }
        runs.push(run);
    }
    let pass = runs
        .iter()
        .all(|r| r.entry_time.is_some() && r.contained && r.envelope_ok && r.sandwich_ok);
    Ok(AbsorbingBallReport {
        calibration: *cal,
        level,
        runs,
        witnesses,
        pass,
    })
}

/// Seeded initial data with ∥y₀∥_Y log-uniform in `norms`.
pub fn random_battery(lambda: &[f64], n: usize, norms: (f64, f64), seed: u64) -> Result<Vec<ModalState>> {
    if !(norms.0 > 0.0 && norms.1 >= norms.0) {
        return Err(invalid("norms", "need 0 < lo ≤ hi"));
    }
    let dim = lambda.len();
    Ok((0..n)
        .map(|i| {
            let mut rng = subtask_rng(seed, i as u64);
            let u: f64 = rng.random();
            let r = norms.0 * (norms.1 / norms.0).powf(u);
            let z = gaussian_vec(&mut rng, 2 * dim);
            let zn = z.iter().map(|x| x * x).sum::<f64>().sqrt();
            let h = (0..dim).map(|j| r * z[j] / zn / lambda[j].sqrt()).collect();
            let hdot = (0..dim).map(|j| r * z[dim + j] / zn).collect();
            ModalState::new(h, hdot)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuperlinearityRow {
    pub radius: f64,
    pub max_ratio: f64,
}

/// max of ∥u∥₁²/(a(u,u) + ∥u_x∥⁴) over random modal samples with ∥u∥₁ = r.
pub fn superlinearity_sweep(
    table: &SpectrumTable,
    radii: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Vec<SuperlinearityRow>> {
    let n = table.len();
    if n == 0 || samples == 0 {
        return Err(invalid("samples", "need modes and samples"));
    }
    let l2 = table.gram(GramKind::L2);
    let dx = table.gram(GramKind::Dx);
    let dy = table.gram(GramKind::Dy);
    let lambda = table.lambdas();
    let m2: Vec<f64> = table.modes.iter().map(|w| (w.m() as f64).powi(2)).collect();
    let mut rows = Vec::with_capacity(radii.len());
    for (ri, &r) in radii.iter().enumerate() {
        if !(r > 0.0) {
            return Err(invalid("radii", "must be positive"));
        }
        let mut best = 0.0f64;
        for s in 0..samples {
            let mut rng = subtask_rng(seed, (ri * samples + s) as u64);
            let mut h = gaussian_vec(&mut rng, n);
            let h1 = l2.bilinear(&h, &h) + dx.bilinear(&h, &h) + dy.bilinear(&h, &h);
            let c = r / h1.sqrt();
            h.iter_mut().for_each(|x| *x *= c);
            let a: f64 = lambda.iter().zip(&h).map(|(l, x)| l * x * x).sum();
            let ux: f64 = m2.iter().zip(&h).map(|(m, x)| m * x * x).sum();
            best = best.max(r * r / (a + ux * ux));
        }
        rows.push(SuperlinearityRow { radius: r, max_ratio: best });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    const L1: f64 = 0.960_009_355_1;

    #[test]
    fn standard_query_reduces() {
        let p = PlateParams::default().with_k(0.5);
        let r = thresholds(&p, L1, 2.0, &ThresholdQuery::standard(0.5)).unwrap();
        let s2 = 1.0 - 0.04;
        let want = 0.5 * (s2 * (4.0 * L1 - 0.25) / (16.0 * L1)).sqrt();
        assert!((r.alpha_bound_general - want).abs() < 1e-14);
        assert!((r.vnu_limsup - 4.0 * 2.0 / 0.25).abs() < 1e-12);
    }

    #[test]
    fn case_b_continuity() {
        let k = (2.0 * L1).sqrt();
        let p = PlateParams::default().with_k(k);
        let r = thresholds(&p, L1, 0.0, &ThresholdQuery::standard(k)).unwrap();
        assert!((r.nu_case_b.unwrap() - 0.5 * k).abs() < 1e-7);
        assert!((r.alpha_bound_g0_case_a.unwrap() - r.alpha_bound_g0_case_b.unwrap()).abs() < 1e-6);
    }

    #[test]
    fn query_violations_named() {
        let p = PlateParams::default().with_k(0.5);
        let e = ThresholdQuery::new(0.3, 0.01).validate(&p, L1).unwrap_err();
        assert!(format!("{e}").contains("nu"));
        let e = ThresholdQuery::new(0.2, 0.2).validate(&p, L1).unwrap_err();
        assert!(format!("{e}").contains("delta"));
    }

    #[test]
    fn asymptotic_limits() {
        let p = PlateParams::default();
        let z = asymptotic_bounds(&p, L1, 0.1, 0.0).unwrap();
        assert_eq!((z.psi, z.ux_bound, z.h2_bound), (0.0, 0.0, 0.0));
        let big = PlateParams { s: 1e12, ..p.clone() };
        assert!(asymptotic_bounds(&big, L1, 0.1, 1.0).unwrap().psi < 1e-5);
        let a = asymptotic_bounds(&p, L1, 0.1, 1.0).unwrap();
        let b = asymptotic_bounds(&p, L1, 0.1, 2.0).unwrap();
        assert!(b.psi > a.psi && b.ux_bound > a.ux_bound && b.h2_bound > a.h2_bound);
    }

    #[test]
    fn linear_rates() {
        assert!((linear_mode_rate(0.2, 0.96) - 0.1).abs() < 1e-15);
        assert!((linear_mode_rate(5.0, 4.0) - 1.0).abs() < 1e-15);
    }
}
