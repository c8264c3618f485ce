//! Roots of h_m(z) = z⁴ − 2m²z² − αz + m⁴ + μm².

use nalgebra::Matrix4;
use num_complex::Complex64;
use num_traits::Float;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootClass {
    /// z₁ < z₂ < 0 real and a conjugate pair.
    TwoNegativeRealPlusPair,
    /// Two simple real roots, not both negative, and a conjugate pair.
    TwoRealPlusPair,
    FourReal,
    /// Two real roots coincide: the boundary α = α_m(μ).
    DoubleRoot,
    NoReal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarticRoots {
    pub m: u32,
    pub mu: f64,
    pub alpha: f64,
    /// Real roots first in ascending order, then complex ones with the
    /// positive imaginary part before its conjugate.
    pub roots: [Complex64; 4],
    pub class: RootClass,
}

impl QuarticRoots {
    /// Coefficients of z⁴ + c₃z³ + c₂z² + c₁z + c₀ as [c₃, c₂, c₁, c₀].
    pub fn coefficients(m: u32, mu: f64, alpha: f64) -> [f64; 4] {
        let m2 = (m as f64).powi(2);
        [0.0, -2.0 * m2, -alpha, m2 * m2 + mu * m2]
    }

    /// Coefficients recovered by expanding ∏(z − z_i).
    pub fn expanded(&self) -> [Complex64; 4] {
        let mut c = [Complex64::new(1.0, 0.0), Complex64::default(), Complex64::default(), Complex64::default(), Complex64::default()];
        for (k, z) in self.roots.iter().enumerate() {
            for i in (1..=k + 1).rev() {
                c[i] = c[i] - z * c[i - 1];
            }
        }
        [c[1], c[2], c[3], c[4]]
    }

    pub fn real_roots(&self) -> impl Iterator<Item = f64> + '_ {
        self.roots.iter().filter(|z| z.im == 0.0).map(|z| z.re)
    }
}

fn horner(c: &[f64; 4], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(1.0, 0.0);
    let mut dp = Complex64::default();
    for &a in c {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

fn magnitude(c: &[f64; 4], z: Complex64) -> f64 {
    let r = z.norm();
    r.powi(4) + c.iter().enumerate().map(|(i, a)| a.abs() * r.powi(3 - i as i32)).sum::<f64>()
}

/// Largest real root of y³ + a y² + b y + c.
fn cubic_max_root(a: f64, b: f64, c: f64) -> f64 {
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let disc = 0.25 * q * q + p * p * p / 27.0;
    let t = if disc > 0.0 {
        let u = (-0.5 * q - q.signum() * disc.sqrt()).cbrt();
        if u == 0.0 {
            0.0
        } else {
            u - p / (3.0 * u)
        }
    } else if p == 0.0 {
        0.0
    } else {
        let r = (-p / 3.0).sqrt();
        let arg = (1.5 * q / (p * r)).clamp(-1.0, 1.0);
        2.0 * r * (arg.acos() / 3.0).cos()
    };
    let mut y = t - a / 3.0;
    for _ in 0..3 {
        let f = ((y + a) * y + b) * y + c;
        let d = (3.0 * y + 2.0 * a) * y + b;
        if d == 0.0 || f == 0.0 {
            break;
        }
        let yn = y - f / d;
        if (((yn + a) * yn + b) * yn + c).abs() >= f.abs() {
            break;
        }
        y = yn;
    }
    y
}

fn quadratic(b: Complex64, c: Complex64) -> [Complex64; 2] {
    // z² + bz + c, in the cancellation-free form
    let d = (b * b - c * 4.0).sqrt();
    let s = if (b.conj() * d).re >= 0.0 { -(b + d) * 0.5 } else { -(b - d) * 0.5 };
    if s.norm() == 0.0 {
        [Complex64::default(); 2]
    } else {
        [s, c / s]
    }
}

/// Ferrari's reduction for the depressed quartic z⁴ + pz² + qz + r.
fn ferrari(p: f64, q: f64, r: f64) -> [Complex64; 4] {
    let scale = p.abs().powf(1.5).max(r.abs().powf(0.75)).max(f64::MIN_POSITIVE);
    if q.abs() <= 1e-15 * scale {
        let w = quadratic(Complex64::new(p, 0.0), Complex64::new(r, 0.0));
        let (a, b) = (w[0].sqrt(), w[1].sqrt());
        return [a, -a, b, -b];
    }
    let y = cubic_max_root(p, 0.25 * p * p - r, -0.125 * q * q);
    let s = (2.0 * y).sqrt();
    let t = q / (2.0 * s);
    let c0 = 0.5 * p + y;
    let a = quadratic(Complex64::new(-s, 0.0), Complex64::new(c0 + t, 0.0));
    let b = quadratic(Complex64::new(s, 0.0), Complex64::new(c0 - t, 0.0));
    [a[0], a[1], b[0], b[1]]
}

fn companion_eigen(c: &[f64; 4]) -> [Complex64; 4] {
    let m = Matrix4::new(
        -c[0], -c[1], -c[2], -c[3], //
        1.0, 0.0, 0.0, 0.0, //
        0.0, 1.0, 0.0, 0.0, //
        0.0, 0.0, 1.0, 0.0,
    );
    let e = m.complex_eigenvalues();
    [e[0], e[1], e[2], e[3]]
}

fn polish(c: &[f64; 4], z: &mut Complex64) {
    for _ in 0..4 {
        let (p, dp) = horner(c, *z);
        if p.norm() == 0.0 || dp.norm() == 0.0 {
            return;
        }
        let zn = *z - p / dp;
        if horner(c, zn).0.norm() < p.norm() {
            *z = zn;
        } else {
            return;
        }
    }
}

pub fn quartic_roots(m: u32, mu: f64, alpha: f64) -> QuarticRoots {
    let c = QuarticRoots::coefficients(m, mu, alpha);
    let mut roots = ferrari(c[1], c[2], c[3]);
    let ill = roots
        .iter()
        .any(|z| !z.re.is_finite() || horner(&c, *z).0.norm() > 1e-10 * magnitude(&c, *z));
    if ill {
        roots = companion_eigen(&c);
    }
    for z in &mut roots {
        polish(&c, z);
    }
    classify(m, mu, alpha, roots)
}

fn classify(m: u32, mu: f64, alpha: f64, mut roots: [Complex64; 4]) -> QuarticRoots {
    let scale = (m as f64).max(1.0);
    for z in &mut roots {
        if z.im.abs() <= 1e-9 * (scale + z.norm()) {
            z.im = 0.0;
        }
    }
    roots.sort_by(|a, b| {
        let ra = a.im != 0.0;
        let rb = b.im != 0.0;
        ra.cmp(&rb)
            .then(a.re.total_cmp(&b.re))
            .then(b.im.total_cmp(&a.im))
    });
    let n_real = roots.iter().filter(|z| z.im == 0.0).count();
    let mut double = false;
    for i in 0..4 {
        for j in i + 1..4 {
            let (a, b) = (roots[i], roots[j]);
            let near = (a - b).norm() <= 1e-6 * (scale + a.norm());
            let real_mean = (0.5 * (a.im + b.im)).abs() <= 1e-9 * (scale + a.norm());
            if near && real_mean {
                double = true;
            }
        }
    }
    if double {
        // merge the near-coincident pair onto the real axis, keep the order
        for z in &mut roots {
            if z.im.abs() <= 1e-6 * (scale + z.norm()) {
                z.im = 0.0;
            }
        }
        roots.sort_by(|a, b| (a.im != 0.0).cmp(&(b.im != 0.0)).then(a.re.total_cmp(&b.re)).then(b.im.total_cmp(&a.im)));
    }
    let class = if double {
        RootClass::DoubleRoot
    } else {
        match n_real {
            4 => RootClass::FourReal,
            2 if roots[0].re < 0.0 && roots[1].re < 0.0 => RootClass::TwoNegativeRealPlusPair,
            2 => RootClass::TwoRealPlusPair,
            _ => RootClass::NoReal,
        }
    };
    QuarticRoots {
        m,
        mu,
        alpha,
        roots,
        class,
    }
}

/// α_m(μ) = −(4m/(3√3))(√(4m²+3μ) − 2m)√(m² + m√(4m²+3μ)), the value of α at
/// which h_m acquires a double negative root.
pub fn alpha_crit(m: u32, mu: f64) -> f64 {
    let m = m as f64;
    let r = (4.0 * m * m + 3.0 * mu).sqrt();
    -(4.0 * m / (3.0 * 3f64.sqrt())) * (r - 2.0 * m) * (m * m + m * r).sqrt()
}

/// μ_c with α_m(μ_c) = α for α < 0 (α_m decreases from 0 to −∞).
pub fn mu_crit(m: u32, alpha: f64) -> f64 {
    if alpha >= 0.0 {
        return 0.0;
    }
    let mut hi = 1.0;
    while alpha_crit(m, hi) > alpha {
        hi *= 2.0;
    }
    crate::roots::brent(|mu| alpha_crit(m, mu) - alpha, 0.0, hi, 0.0, 1e-15, 200).unwrap_or(hi)
}
