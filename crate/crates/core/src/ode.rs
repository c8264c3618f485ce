//! Dormand–Prince 5(4) with FSAL and fourth-order dense output.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::ControlFlow;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    #[serde(default)]
    pub h_max: Option<f64>,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_max_steps() -> usize {
    20_000_000
}

impl Tolerances {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            h_max: None,
            max_steps: default_max_steps(),
        }
    }

    pub fn scaled(self, factor: f64) -> Self {
        Self {
            rtol: self.rtol * factor,
            atol: self.atol * factor,
            ..self
        }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::new(1e-10, 1e-12)
    }
}

/// An accepted step with its interpolant.
pub struct Step<'a> {
    pub t0: f64,
    pub t1: f64,
    pub y0: &'a [f64],
    pub y1: &'a [f64],
    rcont: &'a [Vec<f64>; 5],
}

impl Step<'_> {
    pub fn dense(&self, t: f64, out: &mut [f64]) {
        let h = self.t1 - self.t0;
        let th = (t - self.t0) / h;
        let th1 = 1.0 - th;
        let r = self.rcont;
        for i in 0..out.len() {
            out[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeSummary {
    pub t: f64,
    pub y: Vec<f64>,
    pub accepted: usize,
    pub rejected: usize,
    /// Sum of the local error estimates (max-norm) over accepted steps.
    pub error_estimate: f64,
    /// True when the observer asked to stop before `t_end`.
    pub stopped: bool,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn wrms(v: &[f64], y0: &[f64], y1: &[f64], tol: &Tolerances) -> f64 {
    let n = v.len().max(1) as f64;
    let s: f64 = v
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sk = tol.atol + tol.rtol * a.abs().max(b.abs());
            (e / sk) * (e / sk)
        })
        .sum();
    (s / n).sqrt()
}

fn initial_step<S: OdeSystem>(sys: &S, t0: f64, y0: &[f64], f0: &[f64], span: f64, tol: &Tolerances) -> f64 {
    let n = y0.len();
    let d0 = wrms(y0, y0, y0, tol);
    let d1 = wrms(f0, y0, y0, tol);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(span.abs());
    let y1: Vec<f64> = (0..n).map(|i| y0[i] + h0 * f0[i]).collect();
    let mut f1 = vec![0.0; n];
    sys.eval(t0 + h0, &y1, &mut f1);
    let df: Vec<f64> = (0..n).map(|i| f1[i] - f0[i]).collect();
    let d2 = wrms(&df, y0, y0, tol) / h0;
    let m = d1.max(d2);
    let h1 = if m <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / m).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span.abs())
}

/// Integrates `sys` from `(t0, y0)` to `t_end`, calling `observer` after every
/// accepted step. The observer may stop the integration early.
pub fn integrate<S, F>(
    sys: &S,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    tol: &Tolerances,
    mut observer: F,
) -> Result<OdeSummary>
where
    S: OdeSystem,
    F: FnMut(&Step<'_>) -> ControlFlow<()>,
{
    let n = sys.dim();
    assert_eq!(y0.len(), n, "state dimension mismatch");
    let span = t_end - t0;
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut k1 = vec![0.0; n];
    sys.eval(t, &y, &mut k1);
    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut yt = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut rcont: [Vec<f64>; 5] = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let h_max = tol.h_max.unwrap_or(span.abs());
    let mut h = initial_step(sys, t, &y, &k1, span, tol).min(h_max);
    let mut summary = OdeSummary {
        t,
        y: y.clone(),
        accepted: 0,
        rejected: 0,
        error_estimate: 0.0,
        stopped: false,
    };
    if span <= 0.0 {
        return Ok(summary);
    }
    let mut fac_old: f64 = 1e-4;
    let mut last_rejected = false;

    while t < t_end {
        if summary.accepted + summary.rejected >= tol.max_steps {
            return Err(Error::TooManySteps {
                t,
                max_steps: tol.max_steps,
            });
        }
        let h_min = 16.0 * f64::EPSILON * t.abs().max(1.0);
        if h < h_min {
            return Err(Error::StepUnderflow {
                t,
                step: h,
                last_state: y,
            });
        }
        let last = t + 1.01 * h >= t_end;
        if last {
            h = t_end - t;
        }
        for i in 0..n {
            yt[i] = y[i] + h * A21 * k1[i];
        }
        sys.eval(t + C2 * h, &yt, &mut k2);
        for i in 0..n {
            yt[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        sys.eval(t + C3 * h, &yt, &mut k3);
        for i in 0..n {
            yt[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        sys.eval(t + C4 * h, &yt, &mut k4);
        for i in 0..n {
            yt[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        sys.eval(t + C5 * h, &yt, &mut k5);
        for i in 0..n {
            yt[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let t_new = if last { t_end } else { t + h };
        sys.eval(t_new, &yt, &mut k6);
        for i in 0..n {
            ynew[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        sys.eval(t_new, &ynew, &mut k7);
        for i in 0..n {
            err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let e = wrms(&err, &y, &ynew, tol);
        if !e.is_finite() {
            summary.rejected += 1;
            h *= 0.1;
            last_rejected = true;
            continue;
        }
        if e <= 1.0 {
            for i in 0..n {
                let ydiff = ynew[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                rcont[0][i] = y[i];
                rcont[1][i] = ydiff;
                rcont[2][i] = bspl;
                rcont[3][i] = ydiff - h * k7[i] - bspl;
                rcont[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            summary.accepted += 1;
            summary.error_estimate += err.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let flow = {
                let step = Step {
                    t0: t,
                    t1: t_new,
                    y0: &y,
                    y1: &ynew,
                    rcont: &rcont,
                };
                observer(&step)
            };
            core::mem::swap(&mut y, &mut ynew);
            core::mem::swap(&mut k1, &mut k7);
            t = t_new;
            if flow.is_break() {
                summary.stopped = true;
                break;
            }
            // PI controller (Hairer's beta = 0.04).
            let fac = (e.max(1e-10).powf(0.2 - 0.04 * 0.75) / fac_old.powf(0.04) / 0.9).clamp(0.1, 5.0);
            fac_old = e.max(1e-4);
            let mut h_new = h / fac;
            if last_rejected {
                h_new = h_new.min(h);
            }
            last_rejected = false;
            h = h_new.min(h_max);
        } else {
            summary.rejected += 1;
            last_rejected = true;
            h /= (e.powf(0.2) / 0.9).min(5.0);
        }
    }
    summary.t = t;
    summary.y = y;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Osc(f64);
    impl OdeSystem for Osc {
        fn dim(&self) -> usize {
            2
        }
        fn eval(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
            dy[0] = y[1];
            dy[1] = -self.0 * y[0];
        }
    }

    #[test]
    fn harmonic_oscillator_accuracy() {
        let w2 = 2.0;
        let tol = Tolerances::new(1e-11, 1e-13);
        let s = integrate(&Osc(w2), 0.0, &[1.0, 0.0], 20.0, &tol, |_| ControlFlow::Continue(())).unwrap();
        let w = w2.sqrt();
        assert!((s.y[0] - (w * 20.0).cos()).abs() < 1e-8);
        assert!((s.y[1] + w * (w * 20.0).sin()).abs() < 1e-8);
    }

    #[test]
    fn dense_output_matches_exact() {
        let tol = Tolerances::new(1e-10, 1e-12);
        let mut worst = 0.0f64;
        integrate(&Osc(1.0), 0.0, &[1.0, 0.0], 10.0, &tol, |st| {
            let mut out = [0.0; 2];
            for j in 1..4 {
                let t = st.t0 + (st.t1 - st.t0) * j as f64 / 4.0;
                st.dense(t, &mut out);
                worst = worst.max((out[0] - t.cos()).abs());
            }
            ControlFlow::Continue(())
        })
        .unwrap();
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn early_stop() {
        let s = integrate(&Osc(1.0), 0.0, &[1.0, 0.0], 100.0, &Tolerances::default(), |st| {
            if st.t1 > 1.0 {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        })
        .unwrap();
        assert!(s.stopped && s.t < 100.0);
    }
}
