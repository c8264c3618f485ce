//! Hinged-free biharmonic spectrum on (0,π)×(-ℓ,ℓ).
//!
//! Eigenfunctions separate as w = ψ(y) sin(mx) with
//! ψ'''' − 2m²ψ'' + (m⁴−λ)ψ = 0 and the free-edge conditions
//! ψ'' − σm²ψ = 0, ψ''' − (2−σ)m²ψ' = 0 at y = ±ℓ.

mod forcing;
mod gram;
mod profile;

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ModeKey, Parity, PlateParams};
use crate::quadrature::GaussLegendre;
use crate::roots::brent;

pub use forcing::project_forcing;
pub use gram::{coupling_upsilon, gram_matrix, CouplingMatrix, GramKind, SquareMatrix};
pub use profile::{basis_derivative, scaled_pair, squared_roots, PsiProfile};

/// Default Gauss–Legendre order on (-ℓ, ℓ).
pub const QUAD_NODES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootBranch {
    /// λ < m⁴: both m² ± √λ positive.
    TwoRealPairs,
    /// λ = m⁴: m² − √λ = 0.
    Degenerate,
    /// λ > m⁴: one real pair and one imaginary pair.
    RealAndImaginary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootStructure {
    pub m: u32,
    pub lambda: f64,
    /// r² = m² + √λ and r² = m² − √λ.
    pub r2: [f64; 2],
    pub branch: RootBranch,
}

pub fn characteristic_roots(m: u32, lambda: f64) -> RootStructure {
    let r2 = squared_roots(m, lambda);
    let m4 = (m as f64).powi(4);
    let branch = if (lambda - m4).abs() <= 4.0 * f64::EPSILON * m4 {
        RootBranch::Degenerate
    } else if lambda < m4 {
        RootBranch::TwoRealPairs
    } else {
        RootBranch::RealAndImaginary
    };
    RootStructure { m, lambda, r2, branch }
}

/// 2×2 free-edge system at y = ℓ for the given parity. Columns are the two
/// scaled basis functions, rows the two boundary operators.
pub fn free_edge_matrix(m: u32, lambda: f64, parity: Parity, sigma: f64, ell: f64) -> [[f64; 2]; 2] {
    let s = squared_roots(m, lambda);
    let m2 = (m as f64) * (m as f64);
    let mut a = [[0.0; 2]; 2];
    for (j, &sj) in s.iter().enumerate() {
        let d = |n| basis_derivative(sj, ell, parity, ell, n);
        a[0][j] = d(2) - sigma * m2 * d(0);
        a[1][j] = d(3) - (2.0 - sigma) * m2 * d(1);
    }
    for row in &mut a {
        let sc = row[0].abs().max(row[1].abs());
        if sc > 0.0 {
            row[0] /= sc;
            row[1] /= sc;
        }
    }
    a
}

/// Determinant of the row-scaled free-edge system. It vanishes exactly at
/// the eigenvalues of the `(m, parity)` family and is continuous in λ across
/// λ = m⁴, where the basis degenerates smoothly to polynomials.
pub fn free_edge_determinant(m: u32, lambda: f64, parity: Parity, params: &PlateParams) -> Result<f64> {
    params.validate_geometry()?;
    if m == 0 || !(lambda > 0.0) {
        return Err(crate::error::invalid("lambda", "need m ≥ 1 and λ > 0"));
    }
    Ok(det_raw(m, lambda, parity, params.sigma, params.ell))
}

fn det_raw(m: u32, lambda: f64, parity: Parity, sigma: f64, ell: f64) -> f64 {
    let a = free_edge_matrix(m, lambda, parity, sigma, ell);
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenMode {
    pub key: ModeKey,
    pub lambda: f64,
    pub psi: PsiProfile,
    /// L² norm of the profile before normalization.
    pub l2_norm: f64,
}

impl EigenMode {
    pub fn m(&self) -> u32 {
        self.key.m
    }

    /// Sup over `grid` of the strong ODE residual and of the two boundary
    /// residuals, each relative to the size of its individual terms.
    pub fn residuals(&self, sigma: f64, grid: usize) -> [f64; 3] {
        let m2 = (self.key.m as f64).powi(2);
        let ell = self.psi.ell;
        let mut ode = 0.0f64;
        for i in 0..=grid {
            let y = -ell + 2.0 * ell * i as f64 / grid as f64;
            let j = self.psi.jet(y);
            let r = j[4] - 2.0 * m2 * j[2] + (m2 * m2 - self.lambda) * j[0];
            let sc = j[4].abs() + 2.0 * m2 * j[2].abs() + (m2 * m2 + self.lambda) * j[0].abs();
            ode = ode.max(r.abs() / sc.max(f64::MIN_POSITIVE));
        }
        let mut bc1 = 0.0f64;
        let mut bc2 = 0.0f64;
        for y in [-ell, ell] {
            let j = self.psi.jet(y);
            let r1 = j[2] - sigma * m2 * j[0];
            let r2 = j[3] - (2.0 - sigma) * m2 * j[1];
            bc1 = bc1.max(r1.abs() / (j[2].abs() + sigma * m2 * j[0].abs()).max(f64::MIN_POSITIVE));
            bc2 = bc2.max(r2.abs() / (j[3].abs() + (2.0 - sigma) * m2 * j[1].abs()).max(f64::MIN_POSITIVE));
        }
        [ode, bc1, bc2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOptions {
    /// Multiplies the density of the bracketing sweep.
    pub resolution: usize,
    /// Gauss–Legendre order used for normalization and Gram matrices.
    pub quad_nodes: usize,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            resolution: 1,
            quad_nodes: QUAD_NODES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTable {
    pub modes: Vec<EigenMode>,
    pub lambda1: f64,
    pub upsilon: CouplingMatrix,
    pub g_coeffs: Vec<f64>,
    pub ell: f64,
    pub sigma: f64,
    pub quad_nodes: usize,
}

impl SpectrumTable {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.lambda).collect()
    }

    pub fn index_of(&self, key: &ModeKey) -> Option<usize> {
        self.modes.iter().position(|m| m.key == *key)
    }

    pub fn mode(&self, key: &ModeKey) -> Result<&EigenMode> {
        self.index_of(key).map(|i| &self.modes[i]).ok_or(Error::UnknownMode {
            m: key.m,
            parity: key.parity,
            branch: key.branch,
        })
    }

    pub fn keys(&self) -> Vec<ModeKey> {
        self.modes.iter().map(|m| m.key).collect()
    }

    /// Recomputes the forcing column for another load.
    pub fn with_forcing(mut self, forcing: &crate::params::ForcingSpec) -> Result<Self> {
        self.g_coeffs = project_forcing(forcing, &self.modes)?;
        Ok(self)
    }

    pub fn gram(&self, kind: GramKind) -> SquareMatrix {
        gram_matrix(&self.modes, kind, self.sigma, self.quad_nodes)
    }
}

pub fn find_spectrum(params: &PlateParams, m_max: u32, per_m: usize) -> Result<SpectrumTable> {
    find_spectrum_with(params, m_max, per_m, SpectrumOptions::default())
}

pub fn find_spectrum_with(
    params: &PlateParams,
    m_max: u32,
    per_m: usize,
    opts: SpectrumOptions,
) -> Result<SpectrumTable> {
    params.validate_geometry()?;
    if m_max < 1 || per_m < 1 {
        return Err(crate::error::invalid("m_max/per_m", "both must be at least 1"));
    }
    let quad = GaussLegendre::new(opts.quad_nodes);
    let mut modes = Vec::with_capacity(2 * m_max as usize * per_m);
    for m in 1..=m_max {
        for parity in [Parity::Even, Parity::Odd] {
            let roots = family_roots(m, parity, per_m, params.sigma, params.ell, opts.resolution.max(1))?;
            for (b, lambda) in roots.into_iter().enumerate() {
                modes.push(build_mode(
                    ModeKey::new(m, parity, b as u32 + 1),
                    lambda,
                    params.sigma,
                    params.ell,
                    &quad,
                ));
            }
        }
    }
    modes.sort_by(|a, b| a.lambda.total_cmp(&b.lambda).then(a.key.tie_break(&b.key)));
    let upsilon = coupling_upsilon(&modes, opts.quad_nodes);
    let g_coeffs = project_forcing(&params.forcing, &modes)?;
    Ok(SpectrumTable {
        lambda1: modes[0].lambda,
        modes,
        upsilon,
        g_coeffs,
        ell: params.ell,
        sigma: params.sigma,
        quad_nodes: opts.quad_nodes,
    })
}

/// First `count` roots of the determinant for one family.
///
/// The sweep runs uniformly in λ on (0, m⁴] and then uniformly in
/// b = √(√λ − m²), the frequency of the trigonometric pair, where roots are
/// spaced roughly π/ℓ apart. Sign changes are polished by Brent; local minima
/// of |det| without a sign change are subdivided to catch close root pairs.
fn family_roots(m: u32, parity: Parity, count: usize, sigma: f64, ell: f64, res: usize) -> Result<Vec<f64>> {
    let m2 = (m as f64).powi(2);
    let m4 = m2 * m2;
    let f = |l: f64| det_raw(m, l, parity, sigma, ell);

    let mut grid = Vec::new();
    let n_low = 256 * res;
    for i in 1..=n_low {
        grid.push(m4 * i as f64 / n_low as f64);
    }
    let db = PI / (ell * 32.0 * res as f64);
    let b_cap = (count as f64 + 2.0) * PI / ell;
    let mut b = db;
    while b <= b_cap {
        grid.push((b * b + m2).powi(2));
        b += db;
    }
    let vals: Vec<f64> = grid.iter().map(|&l| f(l)).collect();

    let mut brackets: Vec<(f64, f64)> = Vec::new();
    for i in 0..grid.len() - 1 {
        let (fa, fb) = (vals[i], vals[i + 1]);
        if fa == 0.0 {
            brackets.push((grid[i], grid[i]));
        } else if fa.signum() != fb.signum() && fb != 0.0 {
            brackets.push((grid[i], grid[i + 1]));
        } else if i > 0 && fa.abs() < vals[i - 1].abs() && fa.abs() < fb.abs() && fa.signum() == vals[i - 1].signum() {
            // possible pair of close roots hidden between grid points
            let (lo, hi) = (grid[i - 1], grid[i + 1]);
            let n = 64;
            let mut prev = (lo, vals[i - 1]);
            for j in 1..=n {
                let x = lo + (hi - lo) * j as f64 / n as f64;
                let fx = f(x);
                if fx.signum() != prev.1.signum() {
                    brackets.push((prev.0, x));
                }
                prev = (x, fx);
            }
        }
    }
    brackets.sort_by(|a, b| a.0.total_cmp(&b.0));
    brackets.dedup_by(|a, b| (a.0 - b.0).abs() <= 1e-15 * a.0.abs() && (a.1 - b.1).abs() <= 1e-15 * a.1.abs());

    let mut roots: Vec<f64> = Vec::with_capacity(count);
    for (lo, hi) in brackets {
        if roots.len() == count {
            break;
        }
        let r = if lo == hi {
            lo
        } else {
            brent(f, lo, hi, 0.0, 1e-14, 200)?
        };
        if roots.last().is_none_or(|&p| (r - p).abs() > 1e-12 * r) {
            roots.push(r);
        }
    }
    if roots.len() < count {
        return Err(Error::BracketFailure {
            m,
            parity,
            lo: grid[0],
            hi: *grid.last().unwrap(),
            found: roots.len(),
            wanted: count,
        });
    }
    Ok(roots)
}

fn build_mode(key: ModeKey, lambda: f64, sigma: f64, ell: f64, quad: &GaussLegendre) -> EigenMode {
    let s = squared_roots(key.m, lambda);
    let a = free_edge_matrix(key.m, lambda, key.parity, sigma, ell);
    // null vector of the 2×2 system from its better-conditioned row
    let row = if a[0][0].hypot(a[0][1]) >= a[1][0].hypot(a[1][1]) { a[0] } else { a[1] };
    let mut coef = [row[1], -row[0]];
    if coef[0] == 0.0 && coef[1] == 0.0 {
        coef = [1.0, 0.0];
    }
    let mut psi = PsiProfile {
        m: key.m,
        parity: key.parity,
        lambda,
        ell,
        s,
        coef,
    };
    let raw = (0.5 * PI * quad.integrate(-ell, ell, |y| psi.value(y).powi(2))).sqrt();
    let sign = if psi.value(ell) < 0.0 { -1.0 } else { 1.0 };
    psi.scale(sign / raw);
    EigenMode {
        key,
        lambda,
        psi,
        l2_norm: raw,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults() -> PlateParams {
        PlateParams::default()
    }

    #[test]
    fn root_structure_examples() {
        let r = characteristic_roots(1, 1.0);
        assert_eq!(r.branch, RootBranch::Degenerate);
        assert_eq!(r.r2, [2.0, 0.0]);
        let r = characteristic_roots(1, 0.5);
        assert_eq!(r.branch, RootBranch::TwoRealPairs);
        assert!(r.r2.iter().all(|&x| x > 0.0));
        let r = characteristic_roots(2, 625.0);
        assert_eq!(r.branch, RootBranch::RealAndImaginary);
        assert_eq!(r.r2, [29.0, -21.0]);
    }

    #[test]
    fn sigma_zero_constant_mode() {
        let p = PlateParams {
            sigma: 0.0,
            ..defaults()
        };
        for m in 1..=4u32 {
            let l = (m as f64).powi(4);
            let d = free_edge_determinant(m, l, Parity::Even, &p).unwrap();
            assert!(d.abs() < 1e-14, "m={m} d={d}");
        }
        let t = find_spectrum(&p, 3, 1).unwrap();
        for m in 1..=3u32 {
            let l = (m as f64).powi(4);
            assert!(t.modes.iter().any(|e| e.key.m == m
                && e.key.parity == Parity::Even
                && (e.lambda - l).abs() < 1e-10 * l));
        }
    }

    #[test]
    fn first_even_bracket_and_polish() {
        let p = defaults();
        let lo = free_edge_determinant(1, 0.9, Parity::Even, &p).unwrap();
        let hi = free_edge_determinant(1, 1.0 + 1e-9, Parity::Even, &p).unwrap();
        assert!(lo.signum() != hi.signum());
        let t = find_spectrum(&p, 2, 1).unwrap();
        let d = free_edge_determinant(1, t.lambda1, Parity::Even, &p).unwrap();
        assert!(d.abs() < 1e-10);
    }

    #[test]
    fn table_is_sorted_and_lambda1_is_m1_even() {
        let t = find_spectrum(&defaults(), 5, 4).unwrap();
        assert_eq!(t.len(), 40);
        assert_eq!(t.modes[0].key, ModeKey::new(1, Parity::Even, 1));
        for w in t.modes.windows(2) {
            assert!(w[0].lambda <= w[1].lambda);
        }
        assert!(t.modes[1..].iter().all(|m| m.lambda > t.lambda1));
    }

    #[test]
    fn mode_residuals_small() {
        let p = defaults();
        let t = find_spectrum(&p, 4, 3).unwrap();
        for mode in &t.modes {
            let r = mode.residuals(p.sigma, 200);
            assert!(r.iter().all(|&x| x < 1e-8), "{:?}: {r:?}", mode.key);
        }
    }

    #[test]
    fn normalization_and_sign() {
        let p = defaults();
        let t = find_spectrum(&p, 3, 2).unwrap();
        let q = GaussLegendre::new(128);
        for mode in &t.modes {
            let n = 0.5 * PI * q.integrate(-p.ell, p.ell, |y| mode.psi.value(y).powi(2));
            assert!((n - 1.0).abs() < 1e-12);
            assert!(mode.psi.value(p.ell) > 0.0);
        }
    }
}
