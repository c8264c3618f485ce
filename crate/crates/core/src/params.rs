use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// y-parity of a separated eigenfunction ψ(y) sin(mx).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn as_str(self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        }
    }
}

/// Identifies an eigenpair: x-frequency, y-parity and the index (from 1)
/// within the `(m, parity)` family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeKey {
    pub m: u32,
    pub parity: Parity,
    pub branch: u32,
}

impl ModeKey {
    pub fn new(m: u32, parity: Parity, branch: u32) -> Self {
        Self { m, parity, branch }
    }

    /// Tie-break used after λ: m, then even before odd, then branch.
    pub fn tie_break(&self, other: &Self) -> Ordering {
        self.m
            .cmp(&other.m)
            .then(self.parity.cmp(&other.parity))
            .then(self.branch.cmp(&other.branch))
    }
}

/// External load g(x, y).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ForcingSpec {
    #[default]
    None,
    /// Coefficients g_j = (g, w_j) given directly.
    Modal { coeffs: Vec<(ModeKey, f64)> },
    /// g ≡ c.
    Constant { c: f64 },
    /// g = c sin(m x).
    Harmonic { c: f64, m: u32 },
}

/// Physical and analytic parameters of the plate.
///
/// `k` is the total damping (structural plus flow) and `alpha` the
/// non-conservative flow coefficient multiplying `u_y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlateParams {
    #[serde(default = "default_ell")]
    pub ell: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_s")]
    pub s: f64,
    #[serde(default)]
    pub p: f64,
    #[serde(default = "default_k")]
    pub k: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub forcing: ForcingSpec,
}

fn default_ell() -> f64 {
    PI / 150.0
}
fn default_sigma() -> f64 {
    0.2
}
fn default_s() -> f64 {
    1.0
}
fn default_k() -> f64 {
    0.5
}

impl Default for PlateParams {
    fn default() -> Self {
        Self {
            ell: default_ell(),
            sigma: default_sigma(),
            s: default_s(),
            p: 0.0,
            k: default_k(),
            alpha: 0.0,
            forcing: ForcingSpec::None,
        }
    }
}

impl PlateParams {
    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_k(mut self, k: f64) -> Self {
        self.k = k;
        self
    }

    pub fn with_forcing(mut self, forcing: ForcingSpec) -> Self {
        self.forcing = forcing;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_geometry()?;
        if !(self.sigma > 0.0) {
            return Err(invalid("sigma", format!("must lie in (0,1), got {}", self.sigma)));
        }
        if !(self.s > 0.0) || !self.s.is_finite() {
            return Err(invalid("s", format!("must be positive, got {}", self.s)));
        }
        if !(self.k >= 0.0) || !self.k.is_finite() {
            return Err(invalid("k", format!("must be nonnegative, got {}", self.k)));
        }
        if !self.p.is_finite() {
            return Err(invalid("p", "must be finite"));
        }
        if !self.alpha.is_finite() {
            return Err(invalid("alpha", "must be finite"));
        }
        Ok(())
    }

    /// The eigenvalue problem itself is well posed for `sigma = 0` too, so
    /// the spectrum routines only need this weaker check.
    pub(crate) fn validate_geometry(&self) -> Result<()> {
        if !(self.ell > 0.0) || !self.ell.is_finite() {
            return Err(invalid("ell", format!("must be positive, got {}", self.ell)));
        }
        if !(0.0..1.0).contains(&self.sigma) {
            return Err(invalid("sigma", format!("must lie in (0,1), got {}", self.sigma)));
        }
        Ok(())
    }
}
