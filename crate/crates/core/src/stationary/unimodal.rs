//! Unimodal stationary solutions u = A ψ(y) sin(mx).
//!
//! ψ solves ψ'''' − 2m²ψ'' + (m⁴ + μm²)ψ − αψ' = 0 with the free-edge
//! conditions at ±ℓ, where μ = S∥u_x∥² − P. For fixed (m, α) the admissible
//! μ are the zeros of the 4×4 boundary determinant.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::format;
use core::f64::consts::PI;

use nalgebra::{Matrix4, Vector4};
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::quartic::{alpha_crit, mu_crit, quartic_roots, QuarticRoots, RootClass};
use crate::error::{invalid, precondition, Error, Result};
use crate::params::PlateParams;
use crate::quadrature::GaussLegendre;
use crate::roots::brent;

/// State matrix of the y-ODE for s = (ψ, ψ', ψ'', ψ''').
pub fn companion(m: u32, mu: f64, alpha: f64) -> Matrix4<f64> {
    let m2 = (m as f64).powi(2);
    Matrix4::new(
        0.0, 1.0, 0.0, 0.0, //
        0.0, 0.0, 1.0, 0.0, //
        0.0, 0.0, 0.0, 1.0, //
        -(m2 * m2 + mu * m2), alpha, 2.0 * m2, 0.0,
    )
}

/// exp(A) by scaling and squaring with a degree-18 Taylor polynomial.
fn expm(a: &Matrix4<f64>) -> Matrix4<f64> {
    let norm = a.column_iter().map(|c| c.abs().sum()).fold(0.0, f64::max);
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let b = a / 2f64.powi(s);
    let mut term = Matrix4::identity();
    let mut out = Matrix4::identity();
    for k in 1..=18 {
        term = term * b / k as f64;
        out += term;
    }
    for _ in 0..s {
        out = out * out;
    }
    out
}

/// Fundamental matrix Φ(y) = exp(C y), mapping the state at 0 to the state at y.
pub fn fundamental_matrix(m: u32, mu: f64, alpha: f64, y: f64) -> Matrix4<f64> {
    expm(&(companion(m, mu, alpha) * y))
}

fn bc_rows(m: u32, sigma: f64) -> [Vector4<f64>; 2] {
    let m2 = (m as f64).powi(2);
    [
        Vector4::new(-sigma * m2, 0.0, 1.0, 0.0),
        Vector4::new(0.0, -(2.0 - sigma) * m2, 0.0, 1.0),
    ]
}

fn scale_rows_cols(mut a: Matrix4<f64>) -> Matrix4<f64> {
    for mut r in a.row_iter_mut() {
        let s = r.amax();
        if s > 0.0 {
            r /= s;
        }
    }
    for mut c in a.column_iter_mut() {
        let s = c.amax();
        if s > 0.0 {
            c /= s;
        }
    }
    a
}

/// Free-edge system acting on the state at y = 0, rows
/// (BC₁(ℓ), BC₂(ℓ), BC₁(−ℓ), BC₂(−ℓ)).
pub fn boundary_system(m: u32, mu: f64, alpha: f64, params: &PlateParams) -> Matrix4<f64> {
    let rows = bc_rows(m, params.sigma);
    let mut a = Matrix4::zeros();
    for (k, y) in [params.ell, -params.ell].into_iter().enumerate() {
        let f = fundamental_matrix(m, mu, alpha, y);
        for (j, r) in rows.iter().enumerate() {
            a.set_row(2 * k + j, &(r.transpose() * f));
        }
    }
    a
}

/// Determinant of the row- and column-scaled [`boundary_system`]. It is
/// entire in (μ, α) and changes sign exactly where the unimodal problem has a
/// nontrivial solution; this is the function used for root finding.
pub fn characteristic_determinant(m: u32, mu: f64, alpha: f64, params: &PlateParams) -> f64 {
    scale_rows_cols(boundary_system(m, mu, alpha, params)).determinant()
}

/// Derivative of order `n` of the four exponential basis functions at y:
/// e^{z₁y}, e^{z₂y}, Re e^{z₃y}, Im e^{z₃y}, each multiplied by
/// exp(−|Re z|·shift).
fn exp_basis(roots: &QuarticRoots, y: f64, n: i32, shift: f64) -> [f64; 4] {
    let z = roots.roots;
    let real = |r: f64| r.powi(n) * (r * y - r.abs() * shift).exp();
    let c = z[2].powi(n) * (z[2] * y).exp() * (-z[2].re.abs() * shift).exp();
    [real(z[0].re), real(z[1].re), c.re, c.im]
}

/// D(m, μ, α): the free-edge determinant over the exponential basis of the
/// quartic's roots, with max-abs row scaling and exp(−|Re z|ℓ) column scaling.
pub fn boundary_determinant_d(m: u32, mu: f64, alpha: f64, params: &PlateParams) -> Result<f64> {
    if !(mu >= 0.0) {
        return Err(precondition("boundary_determinant_D", format!("need μ ≥ 0, got {mu}")));
    }
    let ac = alpha_crit(m, mu);
    if !(alpha < ac) {
        return Err(precondition(
            "boundary_determinant_D",
            format!("need α < α_m(μ) = {ac}, got α = {alpha}"),
        ));
    }
    let roots = quartic_roots(m, mu, alpha);
    if roots.class != RootClass::TwoNegativeRealPlusPair {
        return Err(precondition(
            "boundary_determinant_D",
            format!("root classification is {:?}, expected two negative reals plus a pair", roots.class),
        ));
    }
    Ok(exp_basis_matrix(&roots, params).determinant())
}

fn exp_basis_matrix(roots: &QuarticRoots, params: &PlateParams) -> Matrix4<f64> {
    let m2 = (roots.m as f64).powi(2);
    let s = params.sigma;
    let mut a = Matrix4::zeros();
    for (k, y) in [params.ell, -params.ell].into_iter().enumerate() {
        let d: [[f64; 4]; 4] = core::array::from_fn(|n| exp_basis(roots, y, n as i32, params.ell));
        for j in 0..4 {
            a[(2 * k, j)] = d[2][j] - s * m2 * d[0][j];
            a[(2 * k + 1, j)] = d[3][j] - (2.0 - s) * m2 * d[1][j];
        }
    }
    for mut r in a.row_iter_mut() {
        let sc = r.amax();
        if sc > 0.0 {
            r /= sc;
        }
    }
    a
}

/// Search window for μ roots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuWindow {
    pub lo: f64,
    pub hi: f64,
    /// Number of scan intervals (quadratically clustered near `lo`).
    pub scan: usize,
}

impl MuWindow {
    /// (0, μ_c(−|α|)) capped at `cap`: beyond μ_c the quartic has no real roots.
    pub fn for_alpha(m: u32, alpha: f64, cap: f64) -> Self {
        Self {
            lo: 0.0,
            hi: mu_crit(m, -alpha.abs()).min(cap),
            scan: 400,
        }
    }
}

/// Roots of D(m, ·, α) in the default window, ascending. Empty when α lies
/// above the threshold ᾱ_m: no unimodal solution with this m exists.
pub fn solve_mu(m: u32, alpha: f64, params: &PlateParams) -> Result<Vec<f64>> {
    solve_mu_in(m, alpha, params, MuWindow::for_alpha(m, alpha, 1e6))
}

pub fn solve_mu_in(m: u32, alpha: f64, params: &PlateParams, w: MuWindow) -> Result<Vec<f64>> {
    params.validate()?;
    if m == 0 {
        return Err(invalid("m", "must be at least 1"));
    }
    if !(w.hi > w.lo) || w.scan == 0 {
        return Ok(Vec::new());
    }
    let f = |mu: f64| characteristic_determinant(m, mu, alpha, params);
    let span = w.hi - w.lo;
    let at = |i: usize| {
        let t = i as f64 / w.scan as f64;
        w.lo + span * (1e-9 + (1.0 - 2e-9) * t * t)
    };
    let mut out = Vec::new();
    let mut prev = (at(0), f(at(0)));
    for i in 1..=w.scan {
        let x = at(i);
        let fx = f(x);
        if fx == 0.0 {
            out.push(x);
        } else if prev.1 != 0.0 && fx.signum() != prev.1.signum() {
            out.push(brent(f, prev.0, x, 1e-13, 1e-13, 200)?);
        }
        prev = (x, fx);
    }
    Ok(out)
}

/// ᾱ_m: bisection on α for the predicate "solve_mu is nonempty". The answer
/// is bracketed in [`lo`, 0).
pub fn alpha_bar(m: u32, params: &PlateParams, lo: f64, tol: f64) -> Result<f64> {
    let has = |a: f64| solve_mu(m, a, params).map(|r| !r.is_empty());
    if !has(lo)? {
        return Err(precondition("alpha_bar", format!("no unimodal solution at α = {lo}")));
    }
    let (mut a, mut b) = (lo, 0.0);
    while b - a > tol * (1.0 + a.abs()) {
        let c = 0.5 * (a + b);
        if has(c)? {
            a = c;
        } else {
            b = c;
        }
    }
    Ok(a)
}

/// Φ(μ, m): the first zero of D(m, μ, ·) below α_m(μ). With a `guess`,
/// only a local bracket around it is searched.
pub fn phi(m: u32, mu: f64, params: &PlateParams, guess: Option<f64>) -> Option<f64> {
    let ac = alpha_crit(m, mu);
    let f = |a: f64| characteristic_determinant(m, mu, a, params);
    if let Some(g) = guess {
        let mut eps = 1e-3;
        while eps <= 0.3 {
            let hi = (g * (1.0 - eps)).min(ac - 1e-12 * (1.0 + ac.abs()));
            let lo = g * (1.0 + eps);
            if hi > lo && f(lo).signum() != f(hi).signum() {
                return brent(f, lo, hi, 1e-13, 1e-13, 200).ok();
            }
            eps *= 2.0;
        }
        return None;
    }
    let base = 1e-6 * (1.0 + ac.abs());
    let mut prev = (ac - base, f(ac - base));
    for i in 1..=480 {
        let a = ac - base * 10f64.powf(i as f64 / 40.0);
        let fa = f(a);
        if fa.signum() != prev.1.signum() {
            return brent(f, a, prev.0, 1e-13, 1e-13, 200).ok();
        }
        prev = (a, fa);
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchCurve {
    pub m: u32,
    /// (μ, Φ(μ, m)) samples, μ increasing.
    pub samples: Vec<(f64, f64)>,
    /// Set when continuation was lost before the end of the range.
    pub diagnostic: Option<String>,
}

impl BranchCurve {
    /// Pairs of consecutive samples where |Φ| decreases by more than
    /// `tol·|Φ|`.
    pub fn monotonicity_violations(&self, tol: f64) -> Vec<(f64, f64)> {
        self.samples
            .windows(2)
            .filter(|w| w[1].1.abs() < w[0].1.abs() * (1.0 - tol))
            .map(|w| (w[0].0, w[1].0))
            .collect()
    }

    /// Linear interpolation of Φ at μ inside the sampled range.
    pub fn interpolate(&self, mu: f64) -> Option<f64> {
        let s = &self.samples;
        let i = s.iter().position(|p| p.0 >= mu)?;
        if i == 0 {
            return (s[0].0 == mu).then_some(s[0].1);
        }
        let (a, b) = (s[i - 1], s[i]);
        Some(a.1 + (b.1 - a.1) * (mu - a.0) / (b.0 - a.0))
    }
}

/// Continuation of D(m, μ, Φ) = 0 over μ ∈ [μ_a, μ_b] with a secant
/// predictor and adaptive steps.
pub fn trace_branch(m: u32, mu_range: (f64, f64), params: &PlateParams) -> Result<BranchCurve> {
    params.validate()?;
    let (a, b) = mu_range;
    if !(a >= 0.0 && b > a) {
        return Err(invalid("mu_range", "need 0 ≤ μ_a < μ_b"));
    }
    let span = b - a;
    let h_max = span / 40.0;
    let h_min = 1e-7 * span;
    let start = if a == 0.0 { 1e-4 * span } else { a };
    let mut curve = BranchCurve {
        m,
        samples: Vec::new(),
        diagnostic: None,
    };
    let Some(p0) = phi(m, start, params, None) else {
        curve.diagnostic = Some(format!("no branch point found at μ = {start}"));
        return Ok(curve);
    };
    curve.samples.push((start, p0));
    let mut h = h_max / 8.0;
    let mut mu = start;
    while mu < b {
        let next = (mu + h).min(b);
        let n = curve.samples.len();
        let pred = if n >= 2 {
            let (x0, y0) = curve.samples[n - 2];
            let (x1, y1) = curve.samples[n - 1];
            y1 + (y1 - y0) * (next - x1) / (x1 - x0)
        } else {
            curve.samples[n - 1].1
        };
        match phi(m, next, params, Some(pred)) {
            Some(v) if (v - pred).abs() <= 0.1 * pred.abs() => {
                curve.samples.push((next, v));
                mu = next;
                if (v - pred).abs() <= 1e-3 * v.abs() {
                    h = (h * 1.5).min(h_max);
                }
            }
            _ if h > h_min => h *= 0.5,
            _ => match phi(m, next, params, None) {
                Some(v) => {
                    curve.samples.push((next, v));
                    mu = next;
                }
                None => {
                    curve.diagnostic = Some(format!("continuation lost at μ = {next}"));
                    break;
                }
            },
        }
    }
    Ok(curve)
}

/// Solution of the linear y-problem at a determinant root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiSolution {
    pub m: u32,
    pub mu: f64,
    pub alpha: f64,
    pub ell: f64,
    pub roots: QuarticRoots,
    /// (ψ, ψ', ψ'', ψ''') at y = 0.
    pub initial: [f64; 4],
    /// A₁..A₄ over e^{z₁y}, e^{z₂y}, Re e^{z₃y}, Im e^{z₃y}.
    pub coeffs: [f64; 4],
}

impl PsiSolution {
    /// (ψ, ψ', ψ'', ψ''') at y through the fundamental matrix.
    pub fn state(&self, y: f64) -> [f64; 4] {
        let v = fundamental_matrix(self.m, self.mu, self.alpha, y) * Vector4::from(self.initial);
        [v[0], v[1], v[2], v[3]]
    }

    pub fn value(&self, y: f64) -> f64 {
        self.state(y)[0]
    }

    /// ψ^{(n)}(y) from the exponential-basis coefficients, n ≤ 4.
    pub fn derivative_exp(&self, y: f64, n: i32) -> f64 {
        let e = exp_basis(&self.roots, y, n, 0.0);
        e.iter().zip(&self.coeffs).map(|(a, b)| a * b).sum()
    }

    fn scale(&mut self, f: f64) {
        self.initial.iter_mut().for_each(|x| *x *= f);
        self.coeffs.iter_mut().for_each(|x| *x *= f);
    }
}

/// Builds ψ from the null vector of the boundary system at a root μ,
/// normalized by (π/2)∫ψ² = 1 with ∫ψ > 0.
pub fn psi_at_root(m: u32, mu: f64, alpha: f64, params: &PlateParams) -> Result<PsiSolution> {
    let a = scale_rows_cols_tracking(boundary_system(m, mu, alpha, params));
    let svd = a.0.svd(false, true);
    let vt = svd.v_t.ok_or_else(|| precondition("psi_at_root", "SVD failed"))?;
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    let v = vt.row(imin).transpose();
    // undo the column scaling
    let init = Vector4::from_fn(|i, _| v[i] / a.1[i]);
    let roots = quartic_roots(m, mu, alpha);
    let mut sol = PsiSolution {
        m,
        mu,
        alpha,
        ell: params.ell,
        roots,
        initial: [init[0], init[1], init[2], init[3]],
        coeffs: [0.0; 4],
    };
    if roots.class == RootClass::TwoNegativeRealPlusPair {
        let mut b = Matrix4::zeros();
        for n in 0..4 {
            let e = exp_basis(&roots, 0.0, n as i32, 0.0);
            for j in 0..4 {
                b[(n, j)] = e[j];
            }
        }
        if let Some(c) = b.lu().solve(&init) {
            sol.coeffs = [c[0], c[1], c[2], c[3]];
        }
    }
    let q = GaussLegendre::new(64);
    let ell = params.ell;
    let pts: Vec<(f64, f64)> = q.on(-ell, ell).map(|(y, w)| (sol.value(y), w)).collect();
    let norm = (0.5 * PI * pts.iter().map(|(v, w)| w * v * v).sum::<f64>()).sqrt();
    let mean: f64 = pts.iter().map(|(v, w)| w * v).sum();
    let sign = if mean < 0.0 || (mean == 0.0 && sol.value(ell) < 0.0) { -1.0 } else { 1.0 };
    sol.scale(sign / norm);
    Ok(sol)
}

fn scale_rows_cols_tracking(mut a: Matrix4<f64>) -> (Matrix4<f64>, [f64; 4]) {
    for mut r in a.row_iter_mut() {
        let s = r.amax();
        if s > 0.0 {
            r /= s;
        }
    }
    let mut cs = [1.0; 4];
    for (j, mut c) in a.column_iter_mut().enumerate() {
        let s = c.amax();
        if s > 0.0 {
            c /= s;
            cs[j] = s;
        }
    }
    // column j was divided by cs[j]: A' = A D⁻¹, so x = D⁻¹ x'
    (a, cs)
}

/// Singular values (descending) of the scaled boundary system.
pub fn boundary_singular_values(m: u32, mu: f64, alpha: f64, params: &PlateParams) -> [f64; 4] {
    let a = scale_rows_cols(boundary_system(m, mu, alpha, params));
    let mut s: Vec<f64> = a.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    [s[0], s[1], s[2], s[3]]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnimodalEquilibrium {
    pub m: u32,
    pub alpha: f64,
    pub mu: f64,
    pub psi: PsiSolution,
    /// √((μ+P)/S)/∥U_x∥₀ with ∥U∥₀ = 1.
    pub amplitude: f64,
    pub zero_count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnimodalResidual {
    /// |S∥u_x∥² − P − μ| / (|μ| + |P|), ∥u_x∥ by quadrature.
    pub tension: f64,
    /// Sup over a y-grid of the strong residual of the nonlinear equation,
    /// relative to the sup of its individual terms.
    pub equation: f64,
    /// Free-edge residuals at ±ℓ, relative.
    pub boundary: f64,
}

impl UnimodalResidual {
    pub fn max(&self) -> f64 {
        self.tension.max(self.equation).max(self.boundary)
    }
}

impl UnimodalEquilibrium {
    /// u(x, y)
    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.amplitude * self.psi.value(y) * (self.m as f64 * x).sin()
    }

    /// ∥u_x∥₀² by Gauss–Legendre quadrature in y.
    pub fn ux_sq(&self, nodes: usize) -> f64 {
        let q = GaussLegendre::new(nodes);
        let m2 = (self.m as f64).powi(2);
        let ell = self.psi.ell;
        self.amplitude.powi(2) * m2 * 0.5 * PI * q.integrate(-ell, ell, |y| self.psi.value(y).powi(2))
    }

    /// Residual of Δ²u + [P − S∥u_x∥²]u_xx − αu_y = 0 with free edges,
    /// evaluated through the exponential-basis form of ψ.
    pub fn residual(&self, params: &PlateParams) -> UnimodalResidual {
        let m2 = (self.m as f64).powi(2);
        let tension_val = params.s * self.ux_sq(96) - params.p;
        let tension = (tension_val - self.mu).abs() / (self.mu.abs() + params.p.abs()).max(f64::MIN_POSITIVE);
        let ell = self.psi.ell;
        let d = |y: f64, n: i32| self.psi.derivative_exp(y, n);
        let mut eq = 0.0f64;
        let mut eq_scale = 0.0f64;
        for i in 0..=200 {
            let y = -ell + 2.0 * ell * i as f64 / 200.0;
            let t = [
                d(y, 4),
                -2.0 * m2 * d(y, 2),
                (m2 * m2 + m2 * tension_val) * d(y, 0),
                -self.alpha * d(y, 1),
            ];
            eq = eq.max(t.iter().sum::<f64>().abs());
            eq_scale = eq_scale.max(t.iter().map(|x| x.abs()).sum());
        }
        let s = params.sigma;
        let mut bc = 0.0f64;
        for y in [-ell, ell] {
            let r1 = (d(y, 2) - s * m2 * d(y, 0)).abs() / (d(y, 2).abs() + s * m2 * d(y, 0).abs());
            let r2 = (d(y, 3) - (2.0 - s) * m2 * d(y, 1)).abs() / (d(y, 3).abs() + (2.0 - s) * m2 * d(y, 1).abs());
            bc = bc.max(r1).max(r2);
        }
        UnimodalResidual {
            tension,
            equation: eq / eq_scale,
            boundary: bc,
        }
    }
}

/// The unimodal equilibrium on the primary branch: the largest μ root of
/// D(m, ·, α) = 0 (secondary branches cross α at smaller μ).
pub fn build_unimodal(m: u32, alpha: f64, params: &PlateParams) -> Result<UnimodalEquilibrium> {
    let roots = solve_mu(m, alpha, params)?;
    let mu = *roots.last().ok_or(Error::NoUnimodal { m, alpha })?;
    build_unimodal_at(m, alpha, mu, params)
}

/// Rescales the solution of the linear problem at a known root μ.
pub fn build_unimodal_at(m: u32, alpha: f64, mu: f64, params: &PlateParams) -> Result<UnimodalEquilibrium> {
    params.validate()?;
    if !(mu + params.p > 0.0) {
        return Err(precondition(
            "build_unimodal",
            format!("μ + P = {} ≤ 0: rescaling undefined", mu + params.p),
        ));
    }
    let psi = psi_at_root(m, mu, alpha, params)?;
    let mut u = UnimodalEquilibrium {
        m,
        alpha,
        mu,
        psi,
        amplitude: 1.0,
        zero_count: 0,
    };
    let ux = u.ux_sq(128).sqrt();
    u.amplitude = ((mu + params.p) / params.s).sqrt() / ux;
    u.zero_count = count_x_zeros(&u, 4000);
    Ok(u)
}

/// Interior sign changes of x ↦ u(x, y*) where |ψ| peaks on the sample grid.
fn count_x_zeros(u: &UnimodalEquilibrium, grid: usize) -> u32 {
    let ell = u.psi.ell;
    let ys: Vec<f64> = (0..=40).map(|i| -ell + 2.0 * ell * i as f64 / 40.0).collect();
    let y = ys
        .iter()
        .copied()
        .fold((0.0, 0.0f64), |acc, y| {
            let v = u.psi.value(y).abs();
            if v > acc.1 {
                (y, v)
            } else {
                acc
            }
        })
        .0;
    let vals: Vec<f64> = (1..grid)
        .map(|i| u.value(PI * i as f64 / grid as f64, y))
        .collect();
    vals.windows(2).filter(|w| w[0].signum() != w[1].signum()).count() as u32
}

/// Galerkin coefficients (u, w_j) of `u` on the eigenmodes of a table,
/// nonzero only for modes with the same m.
pub fn project_unimodal(u: &UnimodalEquilibrium, modes: &[crate::spectrum::EigenMode], nodes: usize) -> Vec<f64> {
    let q = GaussLegendre::new(nodes);
    let ell = u.psi.ell;
    let pts: Vec<(f64, f64, f64)> = q.on(-ell, ell).map(|(y, w)| (y, w, u.psi.value(y))).collect();
    modes
        .iter()
        .map(|mode| {
            if mode.key.m != u.m {
                return 0.0;
            }
            u.amplitude * 0.5 * PI * pts.iter().map(|&(y, w, p)| w * p * mode.psi.value(y)).sum::<f64>()
        })
        .collect()
}

/// Relative L² error of the projection of u onto `modes`.
pub fn projection_error(u: &UnimodalEquilibrium, modes: &[crate::spectrum::EigenMode], nodes: usize) -> f64 {
    let c = project_unimodal(u, modes, nodes);
    let q = GaussLegendre::new(nodes);
    let ell = u.psi.ell;
    let mut err = 0.0;
    let mut tot = 0.0;
    for (y, w) in q.on(-ell, ell) {
        let v = u.amplitude * u.psi.value(y);
        let r: f64 = modes
            .iter()
            .zip(&c)
            .filter(|(mode, _)| mode.key.m == u.m)
            .map(|(mode, ci)| ci * mode.psi.value(y))
            .sum();
        err += w * (v - r).powi(2);
        tot += w * v * v;
    }
    (err / tot).sqrt()
}
