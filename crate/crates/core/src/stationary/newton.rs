//! Multi-start Newton on the truncated stationary system
//! F(h) = λh + m²(S∥u_x∥² − P)h − αΥᵀh − g = 0.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::unimodal::build_unimodal;
use crate::error::{invalid, precondition, Result};
use crate::modal::ModalSystem;
use crate::params::PlateParams;
use crate::rng::{subtask_rng, uniform_ball};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonConfig {
    pub n_starts: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Convergence when ∥F∥ ≤ tol·(1 + ∥λh∥).
    pub tol: f64,
    /// Two roots closer than this (modal Euclidean norm) are the same.
    pub dedup: f64,
    /// Hyperbolic iff every linearization eigenvalue exceeds
    /// margin·∥J∥_F in modulus.
    pub margin: f64,
    /// Overrides the start-ball radius.
    pub radius: Option<f64>,
}

impl NewtonConfig {
    pub fn new(n_starts: usize, seed: u64) -> Self {
        Self {
            n_starts,
            seed,
            max_iter: 100,
            tol: 1e-10,
            dedup: 1e-6,
            margin: 1e-8,
            radius: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonEquilibrium {
    pub coeffs: Vec<f64>,
    pub residual: f64,
    /// Eigenvalues of the linearized stationary operator.
    pub linearization: Vec<Complex64>,
    pub hyperbolic: bool,
    /// Number of starts that converged here.
    pub hits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonReport {
    pub equilibria: Vec<NewtonEquilibrium>,
    pub discarded: usize,
    pub radius: f64,
}

/// (λ₁−P)√(2(1−σ²))/√λ₁: for |α| below it and g = 0 the only stationary
/// solution is 0.
pub fn trivial_uniqueness_threshold(params: &PlateParams, lambda1: f64) -> Result<f64> {
    if !(params.p >= 0.0 && params.p < lambda1) {
        return Err(precondition(
            "trivial_uniqueness_threshold",
            format!("need 0 ≤ P < λ₁ = {lambda1}, got P = {}", params.p),
        ));
    }
    Ok((lambda1 - params.p) * (2.0 * (1.0 - params.sigma.powi(2))).sqrt() / lambda1.sqrt())
}

/// A-priori bound ∥u∥_{H²*} ≤ √(2(1−σ²))∥g∥ / ((λ₁−P)√(2(1−σ²)) − |α|√λ₁)
/// for stationary solutions; None when |α| is not below the threshold.
pub fn stationary_a_priori_bound(params: &PlateParams, lambda1: f64, g_norm: f64) -> Option<f64> {
    let c = (2.0 * (1.0 - params.sigma.powi(2))).sqrt();
    let den = (lambda1 - params.p) * c - params.alpha.abs() * lambda1.sqrt();
    (params.p >= 0.0 && den > 0.0).then(|| c * g_norm / den)
}

/// Largest R with S R³ = (P⁺ m_max² + |α|∥Υ∥) R + ∥g∥: every root of F has
/// Euclidean modal norm at most R.
fn cubic_radius(sys: &ModalSystem) -> f64 {
    let m2max = sys.m2.iter().cloned().fold(1.0, f64::max);
    let a = (sys.p.max(0.0) * m2max + sys.alpha.abs() * sys.upsilon.frobenius()) / sys.s;
    let b = sys.g_norm_sq().sqrt() / sys.s;
    let f = |r: f64| r * r * r - a * r - b;
    let mut hi = 1.0;
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    crate::roots::brent(f, 0.0, hi, 0.0, 1e-12, 200).unwrap_or(hi)
}

fn start_radius(sys: &ModalSystem, params: &PlateParams) -> f64 {
    let g = sys.g_norm_sq().sqrt();
    if g > 0.0 {
        if let Some(b) = stationary_a_priori_bound(params, sys.lambda1, g) {
            // the bound is in H²*; modal Euclidean norm ≤ ∥u∥_{H²*}/√λ₁
            return (b / sys.lambda1.sqrt()).max(1e-6);
        }
        return cubic_radius(sys);
    }
    let mut ms: Vec<u32> = sys.keys.iter().map(|k| k.m).collect();
    ms.sort_unstable();
    ms.dedup();
    let amp = ms
        .iter()
        .filter_map(|&m| build_unimodal(m, params.alpha, params).ok())
        .map(|u| u.amplitude)
        .fold(0.0, f64::max);
    if amp > 0.0 {
        2.0 * amp
    } else {
        cubic_radius(sys)
    }
}

fn residual(sys: &ModalSystem, h: &[f64]) -> Vec<f64> {
    let mut r = vec![0.0; h.len()];
    sys.stationary_residual(h, &mut r);
    r
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn fd_jacobian(sys: &ModalSystem, h: &[f64]) -> DMatrix<f64> {
    let n = h.len();
    let mut j = DMatrix::zeros(n, n);
    let mut x = h.to_vec();
    for k in 0..n {
        let d = 1e-6 * h[k].abs().max(1e-3);
        x[k] = h[k] + d;
        let fp = residual(sys, &x);
        x[k] = h[k] - d;
        let fm = residual(sys, &x);
        x[k] = h[k];
        for i in 0..n {
            j[(i, k)] = (fp[i] - fm[i]) / (2.0 * d);
        }
    }
    j
}

/// Analytic linearization of F at e:
/// J = diag(λ + m²(S∥e_x∥² − P)) + 2S (m²e)(m²e)ᵀ − αΥᵀ.
pub fn linearization(sys: &ModalSystem, e: &[f64]) -> DMatrix<f64> {
    let n = e.len();
    let t = sys.s * sys.ux_sq(e) - sys.p;
    DMatrix::from_fn(n, n, |j, k| {
        let diag = if j == k { sys.lambda[j] + sys.m2[j] * t } else { 0.0 };
        diag + 2.0 * sys.s * sys.m2[j] * e[j] * sys.m2[k] * e[k] - sys.alpha * sys.upsilon[(k, j)]
    })
}

fn scale_of(sys: &ModalSystem, h: &[f64]) -> f64 {
    1.0 + h.iter().zip(&sys.lambda).map(|(x, l)| (x * l).powi(2)).sum::<f64>().sqrt() + sys.g_norm_sq().sqrt()
}

/// Damped Newton from one start. Returns the root and its residual norm.
pub fn newton_from(sys: &ModalSystem, start: &[f64], cfg: &NewtonConfig, blowup: f64) -> Option<(Vec<f64>, f64)> {
    let mut h = start.to_vec();
    let mut f = residual(sys, &h);
    let mut fn_ = norm(&f);
    for _ in 0..cfg.max_iter {
        if fn_ <= cfg.tol * scale_of(sys, &h) {
            return Some((h, fn_));
        }
        let j = fd_jacobian(sys, &h);
        let step = j.lu().solve(&DVector::from_column_slice(&f))?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = h.iter().zip(step.iter()).map(|(x, d)| x - t * d).collect();
            let ft = residual(sys, &trial);
            let nt = norm(&ft);
            if nt.is_finite() && nt < (1.0 - 1e-4 * t) * fn_ {
                h = trial;
                f = ft;
                fn_ = nt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted || norm(&h) > blowup {
            return None;
        }
    }
    (fn_ <= cfg.tol * scale_of(sys, &h)).then_some((h, fn_))
}

/// Multi-start Newton with deduplication and a linearization spectrum per
/// equilibrium. Starts are uniform in a ball (radius from the a-priori
/// bound when g ≠ 0, from twice the unimodal amplitudes when g = 0, else
/// from the cubic bound), each drawn from its own seeded stream. Start 0 is
/// the origin: its Newton basin is thin once 0 is unstable.
pub fn newton_equilibria(sys: &ModalSystem, params: &PlateParams, cfg: &NewtonConfig) -> Result<NewtonReport> {
    if cfg.n_starts == 0 {
        return Err(invalid("n_starts", "must be at least 1"));
    }
    let radius = cfg.radius.unwrap_or_else(|| start_radius(sys, params));
    let n = sys.dim();
    let mut found: Vec<NewtonEquilibrium> = Vec::new();
    let mut discarded = 0;
    for i in 0..cfg.n_starts {
        let start = if i == 0 {
            vec![0.0; n]
        } else {
            uniform_ball(&mut subtask_rng(cfg.seed, i as u64), n, radius)
        };
        match newton_from(sys, &start, cfg, 1e3 * radius.max(1.0)) {
            Some((h, r)) => {
                if let Some(e) = found
                    .iter_mut()
                    .find(|e| norm(&e.coeffs.iter().zip(&h).map(|(a, b)| a - b).collect::<Vec<_>>()) <= cfg.dedup)
                {
                    e.hits += 1;
                } else {
                    found.push(classify(sys, h, r, cfg));
                }
            }
            None => discarded += 1,
        }
    }
    found.sort_by(|a, b| norm(&a.coeffs).total_cmp(&norm(&b.coeffs)));
    Ok(NewtonReport {
        equilibria: found,
        discarded,
        radius,
    })
}

fn classify(sys: &ModalSystem, h: Vec<f64>, r: f64, cfg: &NewtonConfig) -> NewtonEquilibrium {
    let j = linearization(sys, &h);
    let scale = j.norm();
    let eig: Vec<Complex64> = j.complex_eigenvalues().iter().copied().collect();
    let hyperbolic = eig.iter().all(|z| z.norm() > cfg.margin * scale);
    NewtonEquilibrium {
        coeffs: h,
        residual: r,
        linearization: eig,
        hyperbolic,
        hits: 1,
    }
}
