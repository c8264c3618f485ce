//! Truncated modal system
//!
//! ```text
//! ḧ_j = −k ḣ_j − λ_j h_j − m_j²[S Σ m_i² h_i² − P] h_j + α Σ_i Υ_ij h_i + g_j
//! ```
//!
//! on L²-orthonormal eigenmodes, with energies and the energy-identity check.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::ControlFlow;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::ode::{self, OdeSystem, Tolerances};
use crate::params::{ModeKey, PlateParams};
use crate::quadrature::simpson;
use crate::spectrum::{SpectrumTable, SquareMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalState {
    pub t: f64,
    pub h: Vec<f64>,
    pub hdot: Vec<f64>,
}

impl ModalState {
    pub fn zeros(n: usize) -> Self {
        Self {
            t: 0.0,
            h: vec![0.0; n],
            hdot: vec![0.0; n],
        }
    }

    pub fn new(h: Vec<f64>, hdot: Vec<f64>) -> Self {
        Self { t: 0.0, h, hdot }
    }

    pub fn dim(&self) -> usize {
        self.h.len()
    }

    fn packed(&self) -> Vec<f64> {
        let mut y = self.h.clone();
        y.extend_from_slice(&self.hdot);
        y
    }

    fn unpack(t: f64, y: &[f64]) -> Self {
        let n = y.len() / 2;
        Self {
            t,
            h: y[..n].to_vec(),
            hdot: y[n..].to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationSpec {
    pub keys: Vec<ModeKey>,
    #[serde(default)]
    pub tol: Tolerances,
    /// Maximal spacing of stored samples.
    pub stride: f64,
    /// ν used for the V_ν and V_{ν,k} columns; defaults to k/4.
    #[serde(default)]
    pub nu: Option<f64>,
}

impl TruncationSpec {
    pub fn new(keys: Vec<ModeKey>, stride: f64) -> Self {
        Self {
            keys,
            tol: Tolerances::default(),
            stride,
            nu: None,
        }
    }

    pub fn with_tol(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_nu(mut self, nu: f64) -> Self {
        self.nu = Some(nu);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyReport {
    pub e: f64,
    pub e_plus: f64,
    pub script_e: f64,
    pub v_nu: f64,
    pub v_nu_k: f64,
    pub norm_h2_sq: f64,
    pub norm_ux_sq: f64,
    pub norm_ut_sq: f64,
}

/// The modal system restricted to a truncation, in table order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalSystem {
    pub keys: Vec<ModeKey>,
    pub table_index: Vec<usize>,
    pub lambda: Vec<f64>,
    pub m2: Vec<f64>,
    pub g: Vec<f64>,
    pub upsilon: SquareMatrix,
    pub lambda1: f64,
    pub s: f64,
    pub p: f64,
    pub k: f64,
    pub alpha: f64,
}

impl ModalSystem {
    /// Builds the truncation on `keys`; modes are re-ordered as in the table.
    pub fn new(params: &PlateParams, table: &SpectrumTable, keys: &[ModeKey]) -> Result<Self> {
        params.validate()?;
        if keys.is_empty() {
            return Err(invalid("truncation", "at least one mode is required"));
        }
        let mut idx = Vec::with_capacity(keys.len());
        for k in keys {
            idx.push(table.index_of(k).ok_or(crate::Error::UnknownMode {
                m: k.m,
                parity: k.parity,
                branch: k.branch,
            })?);
        }
        idx.sort_unstable();
        idx.dedup();
        let g_all = crate::spectrum::project_forcing(&params.forcing, &table.modes)?;
        Ok(Self {
            keys: idx.iter().map(|&i| table.modes[i].key).collect(),
            lambda: idx.iter().map(|&i| table.modes[i].lambda).collect(),
            m2: idx.iter().map(|&i| (table.modes[i].key.m as f64).powi(2)).collect(),
            g: idx.iter().map(|&i| g_all[i]).collect(),
            upsilon: table.upsilon.select(&idx),
            table_index: idx,
            lambda1: table.lambda1,
            s: params.s,
            p: params.p,
            k: params.k,
            alpha: params.alpha,
        })
    }

    /// Every mode of the table.
    pub fn full(params: &PlateParams, table: &SpectrumTable) -> Result<Self> {
        Self::new(params, table, &table.keys())
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    pub fn position(&self, key: &ModeKey) -> Option<usize> {
        self.keys.iter().position(|k| k == key)
    }

    pub fn g_norm_sq(&self) -> f64 {
        self.g.iter().map(|x| x * x).sum()
    }

    /// ∥u∥²_{H²*} = Σ λ h².
    pub fn h2_sq(&self, h: &[f64]) -> f64 {
        self.lambda.iter().zip(h).map(|(l, x)| l * x * x).sum()
    }

    /// ∥u_x∥² = Σ m² h².
    pub fn ux_sq(&self, h: &[f64]) -> f64 {
        self.m2.iter().zip(h).map(|(m, x)| m * x * x).sum()
    }

    /// (u_y, v) = Σ Υ_ij h_i v_j.
    pub fn uy_dot(&self, h: &[f64], v: &[f64]) -> f64 {
        self.upsilon.bilinear(h, v)
    }

    /// Acceleration ḧ for the given state.
    pub fn accel(&self, h: &[f64], hdot: &[f64], out: &mut [f64]) {
        let tension = self.s * self.ux_sq(h) - self.p;
        self.upsilon.transpose_apply(h, out);
        for j in 0..h.len() {
            out[j] = self.alpha * out[j] - self.k * hdot[j] - self.lambda[j] * h[j] - self.m2[j] * tension * h[j]
                + self.g[j];
        }
    }

    /// Time derivative of `(h, ḣ)`.
    pub fn rhs(&self, state: &ModalState) -> ModalState {
        let mut acc = vec![0.0; state.dim()];
        self.accel(&state.h, &state.hdot, &mut acc);
        ModalState {
            t: state.t,
            h: state.hdot.clone(),
            hdot: acc,
        }
    }

    /// Stationary residual F(h) = λh + m²(S∥u_x∥² − P)h − αΥᵀh − g.
    pub fn stationary_residual(&self, h: &[f64], out: &mut [f64]) {
        let zero = vec![0.0; h.len()];
        self.accel(h, &zero, out);
        out.iter_mut().for_each(|x| *x = -*x);
    }

    pub fn energy(&self, h: &[f64], hdot: &[f64], nu: f64) -> EnergyReport {
        let h2 = self.h2_sq(h);
        let ux = self.ux_sq(h);
        let ut: f64 = hdot.iter().map(|x| x * x).sum();
        let l2: f64 = h.iter().map(|x| x * x).sum();
        let hv: f64 = h.iter().zip(hdot).map(|(a, b)| a * b).sum();
        let gh: f64 = self.g.iter().zip(h).map(|(a, b)| a * b).sum();
        let e = 0.5 * (h2 + ut);
        let e_plus = e + 0.25 * self.s * ux * ux;
        let script_e = e_plus - 0.5 * self.p * ux - gh;
        EnergyReport {
            e,
            e_plus,
            script_e,
            v_nu: script_e + gh + nu * hv,
            v_nu_k: script_e + nu * (hv + 0.5 * self.k * l2),
            norm_h2_sq: h2,
            norm_ux_sq: ux,
            norm_ut_sq: ut,
        }
    }
}

impl OdeSystem for ModalSystem {
    fn dim(&self) -> usize {
        2 * self.lambda.len()
    }

    fn eval(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        let n = self.lambda.len();
        let (h, v) = y.split_at(n);
        let (dh, dv) = dy.split_at_mut(n);
        dh.copy_from_slice(v);
        self.accel(h, v, dv);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub state: ModalState,
    pub energy: EnergyReport,
    /// ∫₀ᵗ ∥u_t∥² from the start of the run.
    pub dissipation: f64,
    /// ∫₀ᵗ (u_y, u_t) from the start of the run.
    pub flow_work: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub params: PlateParams,
    pub keys: Vec<ModeKey>,
    pub lambda: Vec<f64>,
    pub lambda1: f64,
    pub nu: f64,
    pub tol: Tolerances,
    pub stride: f64,
    pub seed: Option<u64>,
    pub g_norm_sq: f64,
    pub error_estimate: f64,
    pub accepted: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn last(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectory has at least one sample")
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.state.t).collect()
    }
}

/// Adaptive integration of the truncation from `init` over `span`.
pub fn integrate(
    init: &ModalState,
    span: (f64, f64),
    spec: &TruncationSpec,
    params: &PlateParams,
    table: &SpectrumTable,
) -> Result<Trajectory> {
    let sys = ModalSystem::new(params, table, &spec.keys)?;
    integrate_system(&sys, init, span, spec, params)
}

/// As [`integrate`] with a prepared system (keys already resolved).
pub fn integrate_system(
    sys: &ModalSystem,
    init: &ModalState,
    span: (f64, f64),
    spec: &TruncationSpec,
    params: &PlateParams,
) -> Result<Trajectory> {
    let (t0, t1) = span;
    if !(t1 > t0) {
        return Err(invalid("span", "t1 must exceed t0"));
    }
    if !(spec.tol.rtol > 0.0 && spec.tol.atol > 0.0) {
        return Err(invalid("tol", "tolerances must be positive"));
    }
    if !(spec.stride > 0.0) {
        return Err(invalid("stride", "must be positive"));
    }
    let n = sys.dim();
    if init.h.len() != n || init.hdot.len() != n {
        return Err(invalid("init", alloc::format!("expected {n} modal coefficients")));
    }
    let nu = spec.nu.unwrap_or(0.25 * sys.k);
    let y0 = init.packed();
    let n_samples = ((t1 - t0) / spec.stride).ceil() as usize;
    let sample_time = |i: usize| if i >= n_samples { t1 } else { t0 + i as f64 * spec.stride };

    let mut samples = Vec::with_capacity(n_samples + 1);
    let make = |t: f64, y: &[f64], diss: f64, work: f64| {
        let st = ModalState::unpack(t, y);
        let energy = sys.energy(&st.h, &st.hdot, nu);
        TrajectorySample {
            state: st,
            energy,
            dissipation: diss,
            flow_work: work,
        }
    };
    samples.push(make(t0, &y0, 0.0, 0.0));
    let mut next = 1usize;
    let mut diss = 0.0;
    let mut work = 0.0;
    let mut buf = vec![0.0; 2 * n];
    let mut integrand = |st: &ode::Step<'_>, t: f64, buf: &mut [f64]| -> (f64, f64) {
        st.dense(t, buf);
        let (h, v) = buf.split_at(n);
        (v.iter().map(|x| x * x).sum(), sys.uy_dot(h, v))
    };

    let summary = ode::integrate(sys, t0, &y0, t1, &spec.tol, |st| {
        while next <= n_samples && sample_time(next) <= st.t1 {
            let ts = sample_time(next);
            let (d, w) = step_integrals(st, st.t0, ts, &mut integrand, &mut buf);
            let mut y = vec![0.0; 2 * n];
            if ts == st.t1 {
                y.copy_from_slice(st.y1);
            } else {
                st.dense(ts, &mut y);
            }
            samples.push(make(ts, &y, diss + d, work + w));
            next += 1;
        }
        let (d, w) = step_integrals(st, st.t0, st.t1, &mut integrand, &mut buf);
        diss += d;
        work += w;
        ControlFlow::Continue(())
    })?;

    Ok(Trajectory {
        samples,
        meta: TrajectoryMeta {
            params: params.clone(),
            keys: sys.keys.clone(),
            lambda: sys.lambda.clone(),
            lambda1: sys.lambda1,
            nu,
            tol: spec.tol,
            stride: spec.stride,
            seed: None,
            g_norm_sq: sys.g_norm_sq(),
            error_estimate: summary.error_estimate,
            accepted: summary.accepted,
            rejected: summary.rejected,
        },
    })
}

/// Composite Simpson (4 panels) of ∥u_t∥² and (u_y,u_t) over [a, b] inside
/// one accepted step, on the dense output.
fn step_integrals(
    st: &ode::Step<'_>,
    a: f64,
    b: f64,
    f: &mut impl FnMut(&ode::Step<'_>, f64, &mut [f64]) -> (f64, f64),
    buf: &mut [f64],
) -> (f64, f64) {
    if b <= a {
        return (0.0, 0.0);
    }
    let mut vals = [(0.0, 0.0); 9];
    for (i, v) in vals.iter_mut().enumerate() {
        *v = f(st, a + (b - a) * i as f64 / 8.0, buf);
    }
    let d = simpson(0.0, 8.0, 4, |x| vals[x.round() as usize].0) * (b - a) / 8.0;
    let w = simpson(0.0, 8.0, 4, |x| vals[x.round() as usize].1) * (b - a) / 8.0;
    (d, w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyIdentityReport {
    /// max |r(s,t)| over the ladder.
    pub max_abs: f64,
    pub max_script_e: f64,
    /// (s, t, r) for every ladder pair.
    pub series: Vec<(f64, f64, f64)>,
}

impl EnergyIdentityReport {
    /// max|r| / (1 + max|𝓔|)
    pub fn relative(&self) -> f64 {
        self.max_abs / (1.0 + self.max_script_e)
    }
}

/// r(s,t) = 𝓔(t) − 𝓔(s) + k∫ₛᵗ∥u_t∥² − α∫ₛᵗ(u_y,u_t) over the ladder of
/// base points s ∈ {0, ¼, ½, ¾} of the run and every later sample t.
pub fn energy_identity_residual(traj: &Trajectory, params: &PlateParams) -> EnergyIdentityReport {
    let s = &traj.samples;
    let n = s.len();
    let mut series = Vec::new();
    let mut max_abs = 0.0f64;
    let bases = [0, n / 4, n / 2, (3 * n) / 4];
    for (bi, &b) in bases.iter().enumerate() {
        if bi > 0 && b == bases[bi - 1] {
            continue;
        }
        for t in b + 1..n {
            let r = s[t].energy.script_e - s[b].energy.script_e
                + params.k * (s[t].dissipation - s[b].dissipation)
                - params.alpha * (s[t].flow_work - s[b].flow_work);
            max_abs = max_abs.max(r.abs());
            series.push((s[b].state.t, s[t].state.t, r));
        }
    }
    let max_script_e = s.iter().fold(0.0f64, |m, x| m.max(x.energy.script_e.abs()));
    EnergyIdentityReport {
        max_abs,
        max_script_e,
        series,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{ForcingSpec, Parity};
    use crate::spectrum::find_spectrum;

    fn table() -> SpectrumTable {
        find_spectrum(&PlateParams::default(), 2, 2).unwrap()
    }

    #[test]
    fn harmonic_reduction() {
        let t = table();
        let params = PlateParams {
            s: 1e-300,
            k: 0.0,
            ..Default::default()
        };
        let sys = ModalSystem::new(&params, &t, &[t.modes[0].key]).unwrap();
        let d = sys.rhs(&ModalState::new(vec![1.0], vec![0.0]));
        assert!((d.hdot[0] + t.lambda1).abs() < 1e-12 * t.lambda1);
        assert_eq!(d.h[0], 0.0);
    }

    #[test]
    fn rest_is_equilibrium() {
        let t = table();
        let params = PlateParams::default().with_alpha(-3.0);
        let sys = ModalSystem::full(&params, &t).unwrap();
        let d = sys.rhs(&ModalState::zeros(sys.dim()));
        assert!(d.h.iter().chain(&d.hdot).all(|&x| x == 0.0));
    }

    #[test]
    fn coupling_cross_terms() {
        let t = table();
        let even = ModeKey::new(1, Parity::Even, 1);
        let odd = ModeKey::new(1, Parity::Odd, 1);
        let params = PlateParams {
            s: 1e-300,
            k: 0.0,
            alpha: 2.0,
            ..Default::default()
        };
        let sys = ModalSystem::new(&params, &t, &[even, odd]).unwrap();
        let (ie, io) = (sys.position(&even).unwrap(), sys.position(&odd).unwrap());
        let mut h = vec![0.0; 2];
        h[ie] = 1.0;
        let d = sys.rhs(&ModalState::new(h, vec![0.0; 2]));
        let u = sys.upsilon[(ie, io)];
        assert!(u != 0.0);
        assert!((d.hdot[io] - 2.0 * u).abs() < 1e-12 * u.abs());
    }

    #[test]
    fn energy_identity_forced_run() {
        let t = table();
        let params = PlateParams {
            k: 0.3,
            alpha: -5.0,
            forcing: ForcingSpec::Constant { c: 2.0 },
            ..Default::default()
        };
        let spec = TruncationSpec::new(t.keys(), 0.05);
        let mut init = ModalState::zeros(t.len());
        init.h[0] = 0.5;
        let traj = integrate(&init, (0.0, 20.0), &spec, &params, &t).unwrap();
        let r = energy_identity_residual(&traj, &params);
        assert!(r.relative() < 1e-6, "{}", r.relative());
        for w in traj.samples.windows(2) {
            assert!(w[1].state.t > w[0].state.t);
            assert!(w[1].state.t - w[0].state.t <= spec.stride * (1.0 + 1e-12));
        }
    }
}
