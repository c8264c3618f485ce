use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

use super::EigenMode;
use crate::error::{Error, Result};
use crate::params::ForcingSpec;
use crate::quadrature::GaussLegendre;

/// g_j = (g, w_j) for every mode. Analytic loads are integrated exactly in x
/// and by Gauss–Legendre in y.
pub fn project_forcing(spec: &ForcingSpec, modes: &[EigenMode]) -> Result<Vec<f64>> {
    let mut g = vec![0.0; modes.len()];
    match spec {
        ForcingSpec::None => {}
        ForcingSpec::Modal { coeffs } => {
            for (key, v) in coeffs {
                let i = modes.iter().position(|m| m.key == *key).ok_or(Error::UnknownMode {
                    m: key.m,
                    parity: key.parity,
                    branch: key.branch,
                })?;
                g[i] += v;
            }
        }
        ForcingSpec::Constant { c } => {
            let q = GaussLegendre::new(super::QUAD_NODES);
            for (gi, mode) in g.iter_mut().zip(modes) {
                let m = mode.key.m as f64;
                let x_int = (1.0 - (m * PI).cos()) / m;
                if x_int.abs() < 1e-12 {
                    continue;
                }
                let ell = mode.psi.ell;
                let y_int = q.integrate(-ell, ell, |y| mode.psi.value(y));
                *gi = floor(c * x_int * y_int, c * x_int * (2.0 * ell).sqrt());
            }
        }
        ForcingSpec::Harmonic { c, m } => {
            let q = GaussLegendre::new(super::QUAD_NODES);
            for (gi, mode) in g.iter_mut().zip(modes) {
                if mode.key.m != *m {
                    continue;
                }
                let ell = mode.psi.ell;
                let y_int = q.integrate(-ell, ell, |y| mode.psi.value(y));
                *gi = floor(c * 0.5 * PI * y_int, c * (2.0 * ell).sqrt());
            }
        }
    }
    Ok(g)
}

/// Integrals of odd profiles come back at round-off; snap them to zero.
fn floor(v: f64, scale: f64) -> f64 {
    if v.abs() <= 1e-13 * scale.abs() {
        0.0
    } else {
        v
    }
}
