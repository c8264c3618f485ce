//! y-profiles of separated eigenfunctions.
//!
//! With s = m² ± √λ, the fundamental pair of ψ'' = sψ is
//! C(s,y) = cosh(√s y) and S(s,y) = sinh(√s y)/√s, continued to cos/sin for
//! s < 0 and to (1, y) at s = 0. Both are entire in s, so one basis covers the
//! three regimes λ < m⁴, λ = m⁴ and λ > m⁴. For s > 0 the pair is divided by
//! cosh(√s ℓ), which keeps every value on [-ℓ, ℓ] of order one.

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::params::Parity;

/// Scaled (C, S) at y.
pub fn scaled_pair(s: f64, ell: f64, y: f64) -> (f64, f64) {
    if s > 0.0 {
        let r = s.sqrt();
        let ay = y.abs();
        let g = (r * (ay - ell)).exp() / (1.0 + (-2.0 * r * ell).exp());
        let e = -2.0 * r * ay;
        let c = g * (1.0 + e.exp());
        let sn = g * (-e.exp_m1()) / r;
        (c, if y < 0.0 { -sn } else { sn })
    } else if s < 0.0 {
        let r = (-s).sqrt();
        let ry = r * y;
        let sn = if ry.abs() < 1e-8 {
            y * (1.0 - ry * ry / 6.0)
        } else {
            ry.sin() / r
        };
        (ry.cos(), sn)
    } else {
        (1.0, y)
    }
}

/// n-th derivative of the scaled basis function of the given parity
/// (C for even, S for odd). Uses C' = sS and S' = C.
pub fn basis_derivative(s: f64, ell: f64, parity: Parity, y: f64, n: u32) -> f64 {
    let (c, sn) = scaled_pair(s, ell, y);
    match parity {
        Parity::Even => {
            let v = if n % 2 == 0 { c } else { sn };
            v * s.powi(n.div_ceil(2) as i32)
        }
        Parity::Odd => {
            let v = if n % 2 == 0 { sn } else { c };
            v * s.powi((n / 2) as i32)
        }
    }
}

/// The two squared roots s = m² ± √λ, larger first.
pub fn squared_roots(m: u32, lambda: f64) -> [f64; 2] {
    let m2 = (m as f64) * (m as f64);
    let rl = lambda.sqrt();
    [m2 + rl, m2 - rl]
}

/// ψ(y) = c₁ B(s₁, y) + c₂ B(s₂, y) with B the scaled basis of the parity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiProfile {
    pub m: u32,
    pub parity: Parity,
    pub lambda: f64,
    pub ell: f64,
    pub s: [f64; 2],
    pub coef: [f64; 2],
}

impl PsiProfile {
    pub fn derivative(&self, y: f64, n: u32) -> f64 {
        self.coef[0] * basis_derivative(self.s[0], self.ell, self.parity, y, n)
            + self.coef[1] * basis_derivative(self.s[1], self.ell, self.parity, y, n)
    }

    pub fn value(&self, y: f64) -> f64 {
        self.derivative(y, 0)
    }

    /// ψ, ψ', ψ'', ψ''', ψ'''' at y.
    pub fn jet(&self, y: f64) -> [f64; 5] {
        let mut out = [0.0; 5];
        for (n, o) in out.iter_mut().enumerate() {
            *o = self.derivative(y, n as u32);
        }
        out
    }

    pub(crate) fn scale(&mut self, f: f64) {
        self.coef[0] *= f;
        self.coef[1] *= f;
    }
}
