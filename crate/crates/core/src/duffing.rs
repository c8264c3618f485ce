//! Duffing reduction of unimodal dynamics.
//!
//! If U is a unimodal equilibrium, V = φ(t)U solves the plate equation iff
//! φ̈ + kφ̇ + (φ³ − φ)m⁴R² = 0 with m⁴R² = S m² ∥U_x∥².

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::ControlFlow;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, precondition, Error, Result};
use crate::modal::{integrate_system, ModalState, ModalSystem, TruncationSpec};
use crate::ode::{self, OdeSystem, Tolerances};
use crate::params::{ModeKey, PlateParams};
use crate::quadrature::simpson;
use crate::spectrum::SpectrumTable;
use crate::stationary::{project_unimodal, projection_error, UnimodalEquilibrium};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DuffingParams {
    pub m: u32,
    pub k: f64,
    pub r2: f64,
}

impl DuffingParams {
    pub fn new(m: u32, k: f64, r2: f64) -> Result<Self> {
        if !(r2 > 0.0) {
            return Err(invalid("r2", format!("must be positive, got {r2}")));
        }
        if !(k >= 0.0) || m == 0 {
            return Err(invalid("k/m", "need k ≥ 0 and m ≥ 1"));
        }
        Ok(Self { m, k, r2 })
    }

    /// From a built equilibrium and the plate's damping.
    pub fn from_unimodal(u: &UnimodalEquilibrium, params: &PlateParams) -> Result<Self> {
        Self::new(u.m, params.k, duffing_r2(u, params))
    }

    /// m⁴R²
    pub fn stiffness(&self) -> f64 {
        (self.m as f64).powi(4) * self.r2
    }

    /// ½φ̇² + m⁴R²(φ⁴/4 − φ²/2)
    pub fn energy(&self, phi: f64, dphi: f64) -> f64 {
        0.5 * dphi * dphi + self.stiffness() * (0.25 * phi.powi(4) - 0.5 * phi * phi)
    }
}

impl OdeSystem for DuffingParams {
    fn dim(&self) -> usize {
        2
    }
    fn eval(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        dy[0] = y[1];
        dy[1] = -self.k * y[1] - (y[0].powi(3) - y[0]) * self.stiffness();
    }
}

/// R² = S∥U_x∥²/m² by Gauss–Legendre quadrature (64 nodes).
pub fn duffing_r2(u: &UnimodalEquilibrium, params: &PlateParams) -> f64 {
    duffing_r2_with(u, params, 64)
}

pub fn duffing_r2_with(u: &UnimodalEquilibrium, params: &PlateParams, nodes: usize) -> f64 {
    params.s * u.ux_sq(nodes) / (u.m as f64).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitLabel {
    Minus,
    Zero,
    Plus,
    Undecided,
}

impl LimitLabel {
    pub fn value(self) -> Option<i8> {
        match self {
            LimitLabel::Minus => Some(-1),
            LimitLabel::Zero => Some(0),
            LimitLabel::Plus => Some(1),
            LimitLabel::Undecided => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LimitLabel::Minus => "-1",
            LimitLabel::Zero => "0",
            LimitLabel::Plus => "1",
            LimitLabel::Undecided => "undecided",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DuffingOptions {
    /// Spacing of stored samples; `None` stores only the endpoints.
    pub stride: Option<f64>,
    pub dwell_radius: f64,
    /// Defaults to 10/k.
    pub dwell_time: Option<f64>,
    /// Stop as soon as the limit is decided.
    pub stop_on_decision: bool,
}

impl Default for DuffingOptions {
    fn default() -> Self {
        Self {
            stride: Some(0.05),
            dwell_radius: 1e-4,
            dwell_time: None,
            stop_on_decision: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DuffingSample {
    pub t: f64,
    pub phi: f64,
    pub dphi: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuffingTrajectory {
    pub params: DuffingParams,
    pub samples: Vec<DuffingSample>,
    pub limit: LimitLabel,
    pub decided_at: Option<f64>,
    /// max over step ends of |E(t) − E(0) + k∫₀ᵗφ̇²|.
    pub energy_residual: f64,
    /// Largest increase of E between consecutive step ends.
    pub max_energy_increase: f64,
}

pub fn integrate_duffing(
    p: &DuffingParams,
    phi0: f64,
    dphi0: f64,
    t_final: f64,
    tol: &Tolerances,
) -> Result<DuffingTrajectory> {
    integrate_duffing_with(p, phi0, dphi0, t_final, tol, &DuffingOptions::default())
}

pub fn integrate_duffing_with(
    p: &DuffingParams,
    phi0: f64,
    dphi0: f64,
    t_final: f64,
    tol: &Tolerances,
    opts: &DuffingOptions,
) -> Result<DuffingTrajectory> {
    if !(t_final > 0.0) {
        return Err(invalid("t_final", "must be positive"));
    }
    let dwell = opts
        .dwell_time
        .unwrap_or(if p.k > 0.0 { 10.0 / p.k } else { f64::INFINITY });
    let e0 = p.energy(phi0, dphi0);
    let mut samples = vec![DuffingSample {
        t: 0.0,
        phi: phi0,
        dphi: dphi0,
        energy: e0,
    }];
    let mut next = 1usize;
    let mut diss = 0.0;
    let mut e_prev = e0;
    let mut residual = 0.0f64;
    let mut increase = 0.0f64;
    let mut entered: Option<(LimitLabel, f64)> = None;
    let mut decided: Option<(LimitLabel, f64)> = None;
    let mut buf = [0.0; 2];

    let summary = ode::integrate(p, 0.0, &[phi0, dphi0], t_final, tol, |st| {
        if let Some(stride) = opts.stride {
            let n_total = (t_final / stride).ceil() as usize;
            loop {
                let ts = if next >= n_total { t_final } else { next as f64 * stride };
                if next > n_total || ts > st.t1 {
                    break;
                }
                st.dense(ts, &mut buf);
                samples.push(DuffingSample {
                    t: ts,
                    phi: buf[0],
                    dphi: buf[1],
                    energy: p.energy(buf[0], buf[1]),
                });
                next += 1;
            }
        }
        let h = st.t1 - st.t0;
        let mut vals = [0.0; 9];
        for (i, v) in vals.iter_mut().enumerate() {
            st.dense(st.t0 + h * i as f64 / 8.0, &mut buf);
            *v = buf[1] * buf[1];
        }
        diss += simpson(0.0, 8.0, 4, |x| vals[x.round() as usize]) * h / 8.0;
        let (phi, dphi) = (st.y1[0], st.y1[1]);
        let e = p.energy(phi, dphi);
        residual = residual.max((e - e0 + p.k * diss).abs());
        increase = increase.max(e - e_prev);
        e_prev = e;

        if decided.is_none() {
            let near = [(LimitLabel::Minus, -1.0), (LimitLabel::Zero, 0.0), (LimitLabel::Plus, 1.0)]
                .into_iter()
                .find(|(_, c)| ((phi - c).powi(2) + dphi * dphi).sqrt() <= opts.dwell_radius);
            entered = match (near, entered) {
                (Some((l, _)), Some((el, t0))) if l == el => Some((el, t0)),
                (Some((l, _)), _) => Some((l, st.t1)),
                (None, _) => None,
            };
            if let Some((l, t0)) = entered {
                if st.t1 - t0 >= dwell {
                    decided = Some((l, st.t1));
                    if opts.stop_on_decision {
                        return ControlFlow::Break(());
                    }
                }
            }
        }
        ControlFlow::Continue(())
    })?;

    if opts.stride.is_none() {
        samples.push(DuffingSample {
            t: summary.t,
            phi: summary.y[0],
            dphi: summary.y[1],
            energy: p.energy(summary.y[0], summary.y[1]),
        });
    }
    Ok(DuffingTrajectory {
        params: *p,
        samples,
        limit: decided.map_or(LimitLabel::Undecided, |d| d.0),
        decided_at: decided.map(|d| d.1),
        energy_residual: residual,
        max_energy_increase: increase,
    })
}

/// 2φ̇₀² + m⁴R²(φ₀⁴ − 2φ₀²) < 0: negative Duffing energy, which forces a
/// limit in {−1, +1} with the sign of φ₀.
pub fn nonzero_limit_predicate(phi0: f64, dphi0: f64, p: &DuffingParams) -> bool {
    2.0 * dphi0 * dphi0 + p.stiffness() * (phi0.powi(4) - 2.0 * phi0 * phi0) < 0.0
}

/// Limit label of one basin-grid point (integration stops once decided).
pub fn basin_point(p: &DuffingParams, phi0: f64, dphi0: f64, t_final: f64, tol: &Tolerances) -> Result<LimitLabel> {
    let opts = DuffingOptions {
        stride: None,
        stop_on_decision: true,
        ..Default::default()
    };
    Ok(integrate_duffing_with(p, phi0, dphi0, t_final, tol, &opts)?.limit)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasinGrid {
    pub phi: (f64, f64),
    pub dphi: (f64, f64),
    pub n_phi: usize,
    pub n_dphi: usize,
}

impl Default for BasinGrid {
    fn default() -> Self {
        Self {
            phi: (-2.0, 2.0),
            dphi: (-2.0, 2.0),
            n_phi: 201,
            n_dphi: 201,
        }
    }
}

impl BasinGrid {
    /// Grid points in row-major order (φ̇ outer, φ inner).
    pub fn points(&self) -> Vec<(f64, f64)> {
        let lin = |(a, b): (f64, f64), n: usize, i: usize| {
            if n <= 1 {
                a
            } else {
                a + (b - a) * i as f64 / (n - 1) as f64
            }
        };
        let mut out = Vec::with_capacity(self.n_phi * self.n_dphi);
        for j in 0..self.n_dphi {
            for i in 0..self.n_phi {
                out.push((lin(self.phi, self.n_phi, i), lin(self.dphi, self.n_dphi, j)));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeteroclinicEntry {
    pub n: u32,
    pub phi0: f64,
    pub energy0: f64,
    pub limit: LimitLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeteroclinicReport {
    pub entries: Vec<HeteroclinicEntry>,
    pub all_plus: bool,
    pub all_negative_energy: bool,
}

/// Runs (φ₀, φ̇₀) = (1/n, 0) for each n: data shrinking to 0 whose limit
/// stays +1.
pub fn heteroclinic_family(n_list: &[u32], p: &DuffingParams, t_final: f64, tol: &Tolerances) -> Result<HeteroclinicReport> {
    let mut entries = Vec::with_capacity(n_list.len());
    for &n in n_list {
        if n == 0 {
            return Err(invalid("n", "values must be at least 1"));
        }
        let phi0 = 1.0 / n as f64;
        entries.push(HeteroclinicEntry {
            n,
            phi0,
            energy0: p.energy(phi0, 0.0),
            limit: basin_point(p, phi0, 0.0, t_final, tol)?,
        });
    }
    Ok(HeteroclinicReport {
        all_plus: entries.iter().all(|e| e.limit == LimitLabel::Plus),
        all_negative_energy: entries.iter().all(|e| e.energy0 < 0.0),
        entries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossValidationOptions {
    pub tol: Tolerances,
    pub stride: f64,
    /// Refuse when the relative L² projection error of U exceeds this.
    pub max_projection_error: f64,
}

impl Default for CrossValidationOptions {
    fn default() -> Self {
        Self {
            tol: Tolerances::new(1e-10, 1e-12),
            stride: 0.05,
            max_projection_error: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub projection_error: f64,
    pub tol: f64,
    /// sup_t ∥h(t) − φ(t)c∥ / ∥c∥ with c the modal coefficients of U.
    pub discrepancy: f64,
    /// sup_t |h_j(t)| over modes with m_j ≠ m.
    pub leakage: f64,
    /// Dwell-based label of the Duffing run.
    pub duffing_limit: LimitLabel,
    /// Nearest equilibrium within 1e-3 of φ(t_final).
    pub duffing_final: LimitLabel,
    /// Same rule applied to the Galerkin coordinate along c.
    pub galerkin_final: LimitLabel,
    pub duffing_phi_final: f64,
    pub galerkin_phi_final: f64,
}

fn nearest_label(phi: f64) -> LimitLabel {
    [(LimitLabel::Minus, -1.0), (LimitLabel::Zero, 0.0), (LimitLabel::Plus, 1.0)]
        .into_iter()
        .find(|(_, v)| (phi - v).abs() <= 1e-3)
        .map_or(LimitLabel::Undecided, |x| x.0)
}

/// Integrates the Galerkin system from (φ₀c, φ̇₀c) and compares with φ(t)c.
pub fn cross_validate_full(
    u: &UnimodalEquilibrium,
    phi0: f64,
    dphi0: f64,
    params: &PlateParams,
    table: &SpectrumTable,
    truncation: &[ModeKey],
    t_final: f64,
    opts: &CrossValidationOptions,
) -> Result<CrossValidation> {
    if params.alpha != u.alpha {
        return Err(precondition(
            "cross_validate_full",
            format!("params.alpha = {} differs from the equilibrium's α = {}", params.alpha, u.alpha),
        ));
    }
    let sys = ModalSystem::new(params, table, truncation)?;
    if sys.g.iter().any(|&g| g != 0.0) {
        return Err(precondition("cross_validate_full", "forcing must vanish"));
    }
    let modes: Vec<_> = sys.table_index.iter().map(|&i| table.modes[i].clone()).collect();
    let eps = projection_error(u, &modes, 96);
    if eps > opts.max_projection_error {
        let have = modes.iter().filter(|w| w.key.m == u.m).count();
        return Err(Error::ProjectionTooCoarse {
            error: eps,
            threshold: opts.max_projection_error,
            m: u.m,
            hint: format!(
                "truncation holds {have} modes with m={}; add further even and odd branches with that m",
                u.m
            ),
        });
    }
    let c = project_unimodal(u, &modes, 96);
    let cn = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    let init = ModalState::new(
        c.iter().map(|x| phi0 * x).collect(),
        c.iter().map(|x| dphi0 * x).collect(),
    );
    let spec = TruncationSpec::new(sys.keys.clone(), opts.stride).with_tol(opts.tol);
    let traj = integrate_system(&sys, &init, (0.0, t_final), &spec, params)?;
    let dp = DuffingParams::from_unimodal(u, params)?;
    let dopts = DuffingOptions {
        stride: Some(opts.stride),
        ..Default::default()
    };
    let duff = integrate_duffing_with(&dp, phi0, dphi0, t_final, &opts.tol, &dopts)?;

    let mut discrepancy = 0.0f64;
    let mut leakage = 0.0f64;
    let scale = duff.samples.iter().fold(1.0f64, |a, s| a.max(s.phi.abs()));
    for (s, d) in traj.samples.iter().zip(&duff.samples) {
        debug_assert!((s.state.t - d.t).abs() < 1e-9);
        let diff: f64 = s.state.h.iter().zip(&c).map(|(h, ci)| (h - d.phi * ci).powi(2)).sum();
        discrepancy = discrepancy.max(diff.sqrt() / (cn * scale));
        for (j, key) in sys.keys.iter().enumerate() {
            if key.m != u.m {
                leakage = leakage.max(s.state.h[j].abs());
            }
        }
    }
    let last = traj.last();
    let phi_final = last.state.h.iter().zip(&c).map(|(h, ci)| h * ci).sum::<f64>() / (cn * cn);
    let duffing_phi_final = duff.samples[duff.samples.len() - 1].phi;
    Ok(CrossValidation {
        projection_error: eps,
        tol: opts.tol.rtol,
        discrepancy,
        leakage,
        duffing_limit: duff.limit,
        duffing_final: nearest_label(duffing_phi_final),
        galerkin_final: nearest_label(phi_final),
        duffing_phi_final,
        galerkin_phi_final: phi_final,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> DuffingParams {
        DuffingParams::new(1, 0.5, 2.0).unwrap()
    }

    #[test]
    fn equilibrium_stays_put() {
        let t = integrate_duffing(&p(), 1.0, 0.0, 50.0, &Tolerances::default()).unwrap();
        assert!(t.samples.iter().all(|s| (s.phi - 1.0).abs() < 1e-14 && s.dphi.abs() < 1e-14));
        assert_eq!(t.limit, LimitLabel::Plus);
    }

    #[test]
    fn half_converges_to_a_well_with_dissipation() {
        let t = integrate_duffing(&p(), 0.5, 0.0, 200.0, &Tolerances::new(1e-11, 1e-13)).unwrap();
        assert!(t.limit.value().is_some());
        assert_eq!(t.limit, LimitLabel::Plus);
        assert!(t.energy_residual < 1e-7, "{}", t.energy_residual);
        assert!(t.max_energy_increase <= 1e-12);
    }

    #[test]
    fn predicate_examples() {
        let q = p();
        for n in 1..=20 {
            assert!(nonzero_limit_predicate(1.0 / n as f64, 0.0, &q));
        }
        assert!(!nonzero_limit_predicate(0.0, 0.3, &q));
    }

    #[test]
    fn undecided_without_damping() {
        let q = DuffingParams::new(1, 0.0, 1.0).unwrap();
        let t = integrate_duffing(&q, 0.5, 0.0, 20.0, &Tolerances::default()).unwrap();
        assert_eq!(t.limit, LimitLabel::Undecided);
    }

    #[test]
    fn rejects_nonpositive_r2() {
        assert!(DuffingParams::new(1, 0.1, 0.0).is_err());
    }

    #[test]
    fn grid_shape() {
        let g = BasinGrid::default();
        let pts = g.points();
        assert_eq!(pts.len(), 201 * 201);
        assert_eq!(pts[0], (-2.0, -2.0));
        assert_eq!(pts[100], (0.0, -2.0));
    }
}
