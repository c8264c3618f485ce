//! Independent numerical oracles shared by integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use plateflow::quadrature::{legendre_with_derivative, GaussLegendre};
use plateflow::Parity;
use std::f64::consts::PI;

/// Legendre P_n, P_n', P_n'' on the open interval (-1, 1).
fn legendre_jet(n: usize, x: f64) -> [f64; 3] {
    let (p, dp) = legendre_with_derivative(n, x);
    let ddp = (2.0 * x * dp - (n * (n + 1)) as f64 * p) / (1.0 - x * x);
    [p, dp, ddp]
}

/// Rayleigh–Ritz eigenvalues of a(w,w)/∥w∥² over w = p(y) sin(mx), with p a
/// polynomial of the given parity and degree ≤ `degree` in y/ℓ.
///
/// The small eigenvalues are taken as reciprocals of the largest eigenvalues
/// of K⁻¹M, which keeps them accurate relative to their own size despite the
/// large ℓ⁻⁴ entries of K.
pub fn galerkin_eigenvalues(m: u32, parity: Parity, sigma: f64, ell: f64, degree: usize) -> Vec<f64> {
    let degs: Vec<usize> = (0..=degree)
        .filter(|d| (d % 2 == 0) == (parity == Parity::Even))
        .collect();
    let n = degs.len();
    let q = GaussLegendre::new(2 * degree + 16);
    let m2 = (m as f64).powi(2);
    let mut k = DMatrix::<f64>::zeros(n, n);
    let mut mm = DMatrix::<f64>::zeros(n, n);
    for (&x, &w) in q.nodes.iter().zip(&q.weights) {
        let jets: Vec<[f64; 3]> = degs
            .iter()
            .map(|&d| {
                let j = legendre_jet(d, x);
                [j[0], j[1] / ell, j[2] / (ell * ell)]
            })
            .collect();
        let wy = 0.5 * PI * ell * w;
        for a in 0..n {
            for b in 0..n {
                let (p, r) = (jets[a], jets[b]);
                k[(a, b)] += wy
                    * (m2 * m2 * p[0] * r[0] + p[2] * r[2] - sigma * m2 * (p[0] * r[2] + p[2] * r[0])
                        + 2.0 * (1.0 - sigma) * m2 * p[1] * r[1]);
                mm[(a, b)] += wy * p[0] * r[0];
            }
        }
    }
    let l = k.cholesky().expect("stiffness matrix is SPD").l();
    let li = l.clone().try_inverse().unwrap();
    let b = &li * mm * li.transpose();
    let b = (&b + b.transpose()) * 0.5;
    let mut mu: Vec<f64> = b.symmetric_eigen().eigenvalues.iter().copied().collect();
    mu.sort_by(|a, b| b.total_cmp(a));
    mu.into_iter().map(|x| 1.0 / x).collect()
}

/// Roots of a monic polynomial (coefficients from highest degree after the
/// leading 1) as eigenvalues of its companion matrix.
pub fn companion_roots(coeffs: &[f64]) -> Vec<num_complex::Complex64> {
    let n = coeffs.len();
    let mut c = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        c[(i, i - 1)] = 1.0;
    }
    for (j, a) in coeffs.iter().enumerate() {
        c[(0, j)] = -a;
    }
    c.complex_eigenvalues().iter().copied().collect()
}

pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn norm(v: &[f64]) -> f64 {
    DVector::from_column_slice(v).norm()
}
