//! Completeness defects of modal functional sets and the determining-modes
//! experiment on trajectory pairs.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, precondition, Error, Result};
use crate::modal::{integrate_system, ModalState, ModalSystem, TruncationSpec};
use crate::ode::Tolerances;
use crate::params::ModeKey;
use crate::rng::{gaussian_vec, subtask_rng};
use crate::spectrum::{GramKind, SpectrumTable};

/// l_j(w) = (w, e_j) for the first `n` modes of a table (in λ order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSet {
    pub n: usize,
    pub keys: Vec<ModeKey>,
}

impl FunctionalSet {
    pub fn modal(n: usize, table: &SpectrumTable) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n", "need at least one functional"));
        }
        if table.len() < n {
            return Err(Error::InsufficientDepth {
                required: n,
                available: table.len(),
            });
        }
        Ok(Self {
            n,
            keys: table.modes[..n].iter().map(|w| w.key).collect(),
        })
    }

    /// Values l_j(w) for modal coefficients ordered as the table.
    pub fn apply(&self, h: &[f64]) -> Vec<f64> {
        h[..self.n.min(h.len())].to_vec()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefectReport {
    pub n: usize,
    /// Smoothness s of the intermediate defect.
    pub s: f64,
    /// sup ∥w∥₀/∥w∥_{H²*} over the tail span, from the tail Gram matrices.
    pub eps0: f64,
    /// λ_{N+1}^{−1/2}
    pub eps0_spectral: f64,
    pub lambda_next: f64,
    /// ε₀·√λ_{N+1}
    pub scaled: f64,
    /// Interpolation control ε_s ≤ c·ε₀^{(2−s)/2} with c = 1 (spectral H^s norms).
    pub eps_s: f64,
}

/// Defect of the first `n` modes. Needs at least n + 1 modes in the table;
/// the tail span is every table mode past the first n.
pub fn modal_defect(n: usize, table: &SpectrumTable, s: f64) -> Result<DefectReport> {
    if !(0.0..2.0).contains(&s) {
        return Err(invalid("s", "smoothness must lie in [0, 2)"));
    }
    if n == 0 {
        return Err(invalid("n", "need at least one functional"));
    }
    if table.len() <= n {
        return Err(Error::InsufficientDepth {
            required: n + 1,
            available: table.len(),
        });
    }
    let tail: Vec<usize> = (n..table.len()).collect();
    let m = table.gram(GramKind::L2).select(&tail);
    let a = table.gram(GramKind::Energy).select(&tail);
    let eps0 = top_generalized(&m, &a)?.sqrt();
    let lambda_next = table.modes[n].lambda;
    Ok(DefectReport {
        n,
        s,
        eps0,
        eps0_spectral: lambda_next.powf(-0.5),
        lambda_next,
        scaled: eps0 * lambda_next.sqrt(),
        eps_s: eps0.powf(0.5 * (2.0 - s)),
    })
}

/// Largest μ with M x = μ A x, after Jacobi scaling of A.
fn top_generalized(m: &crate::spectrum::SquareMatrix, a: &crate::spectrum::SquareMatrix) -> Result<f64> {
    let n = m.n;
    let d: Vec<f64> = (0..n).map(|i| 1.0 / a[(i, i)].sqrt()).collect();
    let am = DMatrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]) * d[i] * d[j]);
    let mm = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]) * d[i] * d[j]);
    let chol = am
        .cholesky()
        .ok_or_else(|| precondition("modal_defect", "energy Gram of the tail is not positive definite"))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| precondition("modal_defect", "singular Cholesky factor"))?;
    let c = &linv * mm * linv.transpose();
    let c = 0.5 * (&c + c.transpose());
    Ok(SymmetricEigen::new(c).eigenvalues.iter().fold(f64::NEG_INFINITY, |x, &y| x.max(y)))
}

/// Smallest c with ε₀(N) ≤ c/N for N = 1..=n_max.
pub fn defect_constant(table: &SpectrumTable, n_max: usize) -> Result<f64> {
    let mut c = 0.0f64;
    for n in 1..=n_max {
        c = c.max(n as f64 * modal_defect(n, table, 0.0)?.eps0);
    }
    Ok(c)
}

/// Spectral H^s norm (Σ λ_j^{s/2} h_j²)^{1/2}.
pub fn spectral_norm(h: &[f64], lambda: &[f64], s: f64) -> f64 {
    h.iter().zip(lambda).map(|(x, l)| l.powf(0.5 * s) * x * x).sum::<f64>().sqrt()
}

/// ∥w − R_ℒ w∥₀ and the bound ε₀∥w∥_{H²*} for modal coefficients.
pub fn fourier_residual(h: &[f64], lambda: &[f64], n: usize) -> (f64, f64) {
    let err = h[n.min(h.len())..].iter().map(|x| x * x).sum::<f64>().sqrt();
    let eps0 = lambda.get(n).map_or(0.0, |l| l.powf(-0.5));
    (err, eps0 * spectral_norm(h, lambda, 2.0))
}

/// Frozen constant of ∥v∥_{2−η} ≤ ε_{2−η}∥v∥_{H²*} + C max_j |l_j(v)|.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaConstant {
    pub n: usize,
    pub eta: f64,
    pub eps: f64,
    pub c: f64,
    /// √(Σ_{j≤N} λ_j^{(2−η)/2}), a constant valid for every v.
    pub c_analytic: f64,
}

/// Seeded test vector mixing a head part (j ≤ n) and a tail part, each of
/// random H²* size.
pub fn mixture_sample(lambda: &[f64], n: usize, seed: u64, index: u64) -> Vec<f64> {
    let mut rng = subtask_rng(seed, index);
    let z = gaussian_vec(&mut rng, lambda.len() + 2);
    let mut h: Vec<f64> = (0..lambda.len()).map(|j| z[j] / lambda[j].sqrt()).collect();
    let (wh, wt) = (z[lambda.len()].exp(), z[lambda.len() + 1].exp());
    for (j, x) in h.iter_mut().enumerate() {
        *x *= if j < n { wh } else { wt };
    }
    h
}

fn lemma_excess(h: &[f64], lambda: &[f64], n: usize, eta: f64, eps: f64) -> (f64, f64) {
    let lhs = spectral_norm(h, lambda, 2.0 - eta) - eps * spectral_norm(h, lambda, 2.0);
    let lmax = h[..n].iter().fold(0.0f64, |a, x| a.max(x.abs()));
    (lhs, lmax)
}

/// Fits C on `samples` seeded mixtures and doubles it.
pub fn calibrate_lemma_constant(table: &SpectrumTable, n: usize, eta: f64, samples: usize, seed: u64) -> Result<LemmaConstant> {
    if !(eta > 0.0 && eta <= 2.0) {
        return Err(invalid("eta", "need 0 < η ≤ 2"));
    }
    let d = modal_defect(n, table, 2.0 - eta.min(2.0 - 1e-12))?;
    let lambda = table.lambdas();
    let mut c = 0.0f64;
    for i in 0..samples {
        let h = mixture_sample(&lambda, n, seed, i as u64);
        let (ex, lmax) = lemma_excess(&h, &lambda, n, eta, d.eps_s);
        if ex > 0.0 && lmax > 0.0 {
            c = c.max(ex / lmax);
        }
    }
    Ok(LemmaConstant {
        n,
        eta,
        eps: d.eps_s,
        c: 2.0 * c,
        c_analytic: lambda[..n].iter().map(|l| l.powf(0.5 * (2.0 - eta))).sum::<f64>().sqrt(),
    })
}

/// ε∥v∥_{H²*} + C max|l_j(v)| − ∥v∥_{2−η} (nonnegative when the estimate holds).
pub fn lemma_8_4_check(h: &[f64], lambda: &[f64], k: &LemmaConstant) -> f64 {
    let (ex, lmax) = lemma_excess(h, lambda, k.n, k.eta, k.eps);
    k.c * lmax - ex
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Every pair with decaying functionals also decays in Y.
    Consistent,
    Inconsistent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairOutcome {
    pub pair: usize,
    pub n: usize,
    pub functionals_decay: bool,
    pub state_decays: bool,
}

impl PairOutcome {
    pub fn consistent(&self) -> bool {
        !self.functionals_decay || self.state_decays
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSeries {
    pub t: Vec<f64>,
    /// ∥(z, z_t)∥_Y
    pub y_norm: Vec<f64>,
    /// |l_j(z)| for j < truncation size, per sample.
    pub coeffs: Vec<Vec<f64>>,
}

impl PairSeries {
    /// max_{j<n} |l_j(z(t))|
    pub fn functional_max(&self, n: usize) -> Vec<f64> {
        self.coeffs
            .iter()
            .map(|c| c[..n.min(c.len())].iter().fold(0.0f64, |a, x| a.max(*x)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderRung {
    pub n: usize,
    pub verdict: Verdict,
    pub outcomes: Vec<PairOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub keys: Vec<ModeKey>,
    pub ladder: Vec<LadderRung>,
    /// Smallest rung from which every larger rung is consistent.
    pub n_star: Option<usize>,
    pub series: Vec<PairSeries>,
}

/// Last-quarter maximum below `rel`·scale, scale = ∥z(0)∥_Y (or 1e−300).
pub fn decays(series: &[f64], scale: f64, rel: f64) -> bool {
    let q = series.len() - series.len() / 4;
    let tail = series[q.min(series.len() - 1)..].iter().fold(0.0f64, |a, x| a.max(*x));
    tail <= rel * scale
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOptions {
    pub t_final: f64,
    pub stride: f64,
    pub tol: Tolerances,
    pub rel: f64,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            t_final: 200.0,
            stride: 0.5,
            tol: Tolerances::new(1e-10, 1e-16),
            rel: 1e-6,
        }
    }
}

/// Integrates each pair on `sys` and grades every rung N of the ladder.
/// Functionals are the first N truncation modes in λ order.
pub fn determining_experiment(
    sys: &ModalSystem,
    params: &crate::params::PlateParams,
    ladder: &[usize],
    pairs: &[(ModalState, ModalState)],
    opts: &ExperimentOptions,
) -> Result<ExperimentReport> {
    let dim = sys.dim();
    if ladder.iter().any(|&n| n == 0 || n > dim) {
        return Err(invalid("ladder", format!("rungs must lie in 1..={dim}")));
    }
    let spec = TruncationSpec::new(sys.keys.clone(), opts.stride).with_tol(opts.tol);
    let mut series = Vec::with_capacity(pairs.len());
    for (a, b) in pairs {
        let ta = integrate_system(sys, a, (0.0, opts.t_final), &spec, params)?;
        let tb = integrate_system(sys, b, (0.0, opts.t_final), &spec, params)?;
        let mut s = PairSeries {
            t: Vec::with_capacity(ta.samples.len()),
            y_norm: Vec::with_capacity(ta.samples.len()),
            coeffs: Vec::with_capacity(ta.samples.len()),
        };
        for (x, y) in ta.samples.iter().zip(&tb.samples) {
            let z: Vec<f64> = x.state.h.iter().zip(&y.state.h).map(|(p, q)| p - q).collect();
            let zt: Vec<f64> = x.state.hdot.iter().zip(&y.state.hdot).map(|(p, q)| p - q).collect();
            s.t.push(x.state.t);
            s.y_norm.push((sys.h2_sq(&z) + zt.iter().map(|v| v * v).sum::<f64>()).sqrt());
            s.coeffs.push(z.iter().map(|v| v.abs()).collect());
        }
        series.push(s);
    }
    let mut rungs = Vec::with_capacity(ladder.len());
    for &n in ladder {
        let outcomes: Vec<PairOutcome> = series
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let scale = s.y_norm[0].max(1e-300);
                PairOutcome {
                    pair: i,
                    n,
                    functionals_decay: decays(&s.functional_max(n), scale, opts.rel),
                    state_decays: decays(&s.y_norm, scale, opts.rel),
                }
            })
            .collect();
        let verdict = if outcomes.iter().all(PairOutcome::consistent) {
            Verdict::Consistent
        } else {
            Verdict::Inconsistent
        };
        rungs.push(LadderRung { n, verdict, outcomes });
    }
    let mut order: Vec<usize> = (0..rungs.len()).collect();
    order.sort_by_key(|&i| rungs[i].n);
    let mut n_star = None;
    for &i in order.iter().rev() {
        if rungs[i].verdict == Verdict::Inconsistent {
            break;
        }
        n_star = Some(rungs[i].n);
    }
    Ok(ExperimentReport {
        keys: sys.keys.clone(),
        ladder: rungs,
        n_star,
        series,
    })
}

/// Seeded pairs with ∥y∥_Y log-uniform in `norms`.
pub fn random_pairs(lambda: &[f64], n: usize, norms: (f64, f64), seed: u64) -> Result<Vec<(ModalState, ModalState)>> {
    let a = crate::stability::random_battery(lambda, n, norms, seed)?;
    let b = crate::stability::random_battery(lambda, n, norms, seed ^ 0x9e37_79b9_7f4a_7c15)?;
    Ok(a.into_iter().zip(b).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decay_rule() {
        let s: Vec<f64> = (0..100).map(|i| (-(i as f64) * 0.5).exp()).collect();
        assert!(decays(&s, 1.0, 1e-6));
        assert!(!decays(&vec![1.0; 100], 1.0, 1e-6));
        assert!(decays(&vec![0.0; 8], 1e-300, 1e-6));
    }

    #[test]
    fn fourier_residual_bound() {
        let lambda = [1.0, 4.0, 9.0, 16.0];
        let (e, b) = fourier_residual(&[0.3, -0.2, 0.5, 0.1], &lambda, 2);
        assert!(e <= b);
        let (e, b) = fourier_residual(&[0.0, 0.0, 1.0, 0.0], &lambda, 2);
        assert!((e - b).abs() < 1e-15);
    }

    #[test]
    fn head_only_needs_constant_term() {
        let lambda = [1.0, 4.0, 9.0];
        let k = LemmaConstant {
            n: 2,
            eta: 1.0,
            eps: 9f64.powf(-0.25),
            c: (1.0f64 + 2.0).sqrt(),
            c_analytic: (1.0f64 + 2.0).sqrt(),
        };
        assert!(lemma_8_4_check(&[0.7, -0.4, 0.0], &lambda, &LemmaConstant { eps: 0.0, ..k }) >= 0.0);
        assert!(lemma_8_4_check(&[0.0, 0.0, 2.0], &lambda, &k).abs() < 1e-14);
    }
}
