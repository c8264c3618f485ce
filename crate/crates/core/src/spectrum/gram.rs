use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Index, IndexMut};

use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::EigenMode;
use crate::quadrature::GaussLegendre;

/// Dense row-major square matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

/// Υ_ij = (∂_y w_i, w_j).
pub type CouplingMatrix = SquareMatrix;

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    /// Sub-matrix on the given index list.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), |i, j| self[(idx[i], idx[j])])
    }

    /// x·(A y)
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            acc += x[i] * row.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        }
        acc
    }

    /// Aᵀ x
    pub fn transpose_apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n;
        out.iter_mut().for_each(|o| *o = 0.0);
        for i in 0..n {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                out[j] += self.data[i * n + j] * x[i];
            }
        }
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

impl Index<(usize, usize)> for SquareMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for SquareMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Bilinear forms evaluated between pairs of eigenmodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GramKind {
    /// (w_i, w_j)
    L2,
    /// (∂_x w_i, ∂_x w_j)
    Dx,
    /// (∂_y w_i, ∂_y w_j)
    Dy,
    /// (∂_xy w_i, ∂_xy w_j)
    Dxy,
    /// a(w_i, w_j), the H²* form
    Energy,
    /// (∂_y w_i, w_j)
    Coupling,
}

struct Jets {
    w: Vec<f64>,
    /// jets[mode][node] = (ψ, ψ', ψ'')
    jets: Vec<Vec<[f64; 3]>>,
}

fn sample(modes: &[EigenMode], nodes: usize) -> Jets {
    let q = GaussLegendre::new(nodes);
    let ell = modes.first().map_or(1.0, |m| m.psi.ell);
    let pts: Vec<(f64, f64)> = q.on(-ell, ell).collect();
    let w = pts.iter().map(|p| p.1).collect();
    let jets = modes
        .iter()
        .map(|m| {
            pts.iter()
                .map(|&(y, _)| [m.psi.derivative(y, 0), m.psi.derivative(y, 1), m.psi.derivative(y, 2)])
                .collect()
        })
        .collect();
    Jets { w, jets }
}

/// Gram matrix of `kind` by Gauss–Legendre quadrature in y and exact
/// integration in x (∫ sin(mx) sin(m'x) = ∫ cos cos = δ π/2).
pub fn gram_matrix(modes: &[EigenMode], kind: GramKind, sigma: f64, nodes: usize) -> SquareMatrix {
    let n = modes.len();
    let s = sample(modes, nodes);
    SquareMatrix::from_fn(n, |i, j| {
        if modes[i].key.m != modes[j].key.m {
            return 0.0;
        }
        let m2 = (modes[i].key.m as f64).powi(2);
        let (a, b) = (&s.jets[i], &s.jets[j]);
        let integral: f64 = s
            .w
            .iter()
            .enumerate()
            .map(|(k, w)| {
                let (p, q) = (a[k], b[k]);
                w * match kind {
                    GramKind::L2 => p[0] * q[0],
                    GramKind::Dx => m2 * p[0] * q[0],
                    GramKind::Dy => p[1] * q[1],
                    GramKind::Dxy => m2 * p[1] * q[1],
                    GramKind::Energy => {
                        m2 * m2 * p[0] * q[0] + p[2] * q[2] - sigma * m2 * (p[0] * q[2] + p[2] * q[0])
                            + 2.0 * (1.0 - sigma) * m2 * p[1] * q[1]
                    }
                    GramKind::Coupling => p[1] * q[0],
                }
            })
            .sum();
        0.5 * PI * integral
    })
}

/// Υ_ij = (∂_y w_i, w_j). Entries below a relative floor are set to exact
/// zero; the floor removes the quadrature noise left on same-parity pairs.
pub fn coupling_upsilon(modes: &[EigenMode], nodes: usize) -> CouplingMatrix {
    let mut u = gram_matrix(modes, GramKind::Coupling, 0.0, nodes);
    let dy = gram_matrix(modes, GramKind::Dy, 0.0, nodes);
    for i in 0..u.n {
        for j in 0..u.n {
            let scale = dy[(i, i)].sqrt();
            if u[(i, j)].abs() <= 1e-12 * scale.max(1.0) {
                u[(i, j)] = 0.0;
            }
        }
    }
    u
}
