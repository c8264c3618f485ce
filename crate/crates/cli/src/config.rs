//! Scenario files: TOML with `[params]`, `[truncation]`, `[initial]` and
//! `[experiment]` blocks. Unknown keys are rejected everywhere.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use clap::{Args, Subcommand, ValueEnum};
use plateflow::ode::Tolerances;
use plateflow::{ModeKey, PlateParams};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Closed interval written `a..b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Span {
    pub lo: f64,
    pub hi: f64,
}

impl Span {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn pair(self) -> (f64, f64) {
        (self.lo, self.hi)
    }
}

fn split_range(s: &str) -> Result<(&str, &str), String> {
    s.split_once("..")
        .map(|(a, b)| (a.trim(), b.trim()))
        .ok_or_else(|| format!("expected `lo..hi`, got `{s}`"))
}

impl FromStr for Span {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = split_range(s)?;
        let p = |x: &str| x.parse::<f64>().map_err(|e| format!("`{x}`: {e}"));
        let (lo, hi) = (p(a)?, p(b)?);
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(format!("need finite lo ≤ hi, got `{s}`"));
        }
        Ok(Self { lo, hi })
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}..{:?}", self.lo, self.hi)
    }
}

impl TryFrom<String> for Span {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<Span> for String {
    fn from(s: Span) -> String {
        s.to_string()
    }
}

/// Inclusive integer range written `a..b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct IntSpan {
    pub lo: u32,
    pub hi: u32,
}

impl IntSpan {
    pub fn iter(self) -> impl Iterator<Item = u32> {
        self.lo..=self.hi
    }
}

impl FromStr for IntSpan {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (lo, hi) = match split_range(s) {
            Ok((a, b)) => (a, b),
            Err(_) => (s.trim(), s.trim()),
        };
        let p = |x: &str| x.parse::<u32>().map_err(|e| format!("`{x}`: {e}"));
        let (lo, hi) = (p(lo)?, p(hi)?);
        if lo == 0 || lo > hi {
            return Err(format!("need 1 ≤ lo ≤ hi, got `{s}`"));
        }
        Ok(Self { lo, hi })
    }
}

impl fmt::Display for IntSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.lo, self.hi)
    }
}

impl TryFrom<String> for IntSpan {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<IntSpan> for String {
    fn from(s: IntSpan) -> String {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationBlock {
    #[serde(default = "default_m_max")]
    pub m_max: u32,
    #[serde(default = "default_per_m")]
    pub per_m: usize,
    /// Keeps only branches up to this index.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_branch: Option<u32>,
    /// Explicit mode list; overrides `max_branch`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keys: Option<Vec<ModeKey>>,
    #[serde(default)]
    pub tol: Tolerances,
}

fn default_m_max() -> u32 {
    3
}
fn default_per_m() -> usize {
    1
}

impl Default for TruncationBlock {
    fn default() -> Self {
        Self {
            m_max: default_m_max(),
            per_m: default_per_m(),
            max_branch: None,
            keys: None,
            tol: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    #[default]
    Zero,
    /// Coefficients in truncation order; `hdot` defaults to zero.
    Modal {
        h: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hdot: Option<Vec<f64>>,
    },
    /// φ₀·U_{m,α} with velocity φ̇₀·U; α defaults to `params.alpha`.
    Unimodal {
        m: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
        phi0: f64,
        #[serde(default)]
        dphi0: f64,
    },
    /// One seeded draw with ∥y₀∥_Y = norm.
    Random { norm: f64 },
}

macro_rules! op_args {
    (@get $f:ident $t:ty ; $d:expr) => {
        pub fn $f(&self) -> $t {
            self.$f.clone().unwrap_or_else(|| $d)
        }
    };
    (@get $f:ident $t:ty ;) => {
        pub fn $f(&self) -> Option<$t> {
            self.$f.clone()
        }
    };
    (@fill $s:ident $f:ident ; $d:expr) => {
        if $s.$f.is_none() {
            $s.$f = Some($d);
        }
    };
    (@fill $s:ident $f:ident ;) => {};
    ($(#[$m:meta])* $name:ident { $($(#[$fm:meta])* $f:ident : $t:ty $(= $d:expr)?),* $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
        #[serde(deny_unknown_fields)]
        pub struct $name {
            $(
                $(#[$fm])*
                #[arg(long)]
                #[serde(default, skip_serializing_if = "Option::is_none")]
                pub $f: Option<$t>,
            )*
        }

        impl $name {
            $(op_args!(@get $f $t ; $($d)?);)*

            /// Takes every field set in `o`.
            pub fn overlay(&mut self, o: &Self) {
                $(if o.$f.is_some() {
                    self.$f = o.$f.clone();
                })*
            }

            /// Writes the defaults into unset fields.
            pub fn resolve(&mut self) {
                $(op_args!(@fill self $f ; $($d)?);)*
            }
        }
    };
}

op_args!(SpectrumArgs {
    /// Largest x-frequency.
    m_max: u32 = 5,
    /// Eigenvalues per (m, parity) family.
    per_m: usize = 4,
});

op_args!(SimulateArgs {
    t_final: f64 = 50.0,
    stride: f64 = 0.1,
    /// ν of the V_ν columns (default k/4).
    nu: f64,
});

op_args!(StationaryArgs {
    n_starts: usize = 100,
    /// Start-ball radius (default from the a-priori bounds).
    radius: f64,
    /// x-frequency of the unimodal profile written alongside.
    profile_m: u32 = 1,
});

op_args!(BranchArgs {
    /// x-frequencies, e.g. `1..5`.
    m: IntSpan = IntSpan { lo: 1, hi: 5 },
    /// μ interval, e.g. `0..100`.
    mu: Span = Span::new(0.0, 100.0),
});

op_args!(DuffingArgs {
    m: u32 = 1,
    /// R² (default from U_{m,α} at `params.alpha`).
    r2: f64,
    phi0: f64 = 0.5,
    dphi0: f64 = 0.0,
    t_final: f64 = 200.0,
    stride: f64 = 0.05,
});

op_args!(BasinArgs {
    m: u32 = 1,
    r2: f64,
    phi: Span = Span::new(-2.0, 2.0),
    dphi: Span = Span::new(-2.0, 2.0),
    n_phi: usize = 201,
    n_dphi: usize = 201,
    t_final: f64 = 400.0,
});

op_args!(ThresholdsArgs {
    /// Lyapunov ν (default k/2).
    nu: f64,
    /// δ (default k/8).
    delta: f64,
    gamma: f64,
});

op_args!(AbsorbArgs {
    nu: f64 = 0.3,
    calibration_runs: usize = 4,
    runs: usize = 20,
    /// Range of initial ∥y₀∥_Y (log-uniform).
    norm: Span = Span::new(0.1, 100.0),
    t_final: f64 = 100.0,
    stride: f64 = 0.1,
});

op_args!(DecayArgs {
    runs: usize = 5,
    norm: Span = Span::new(0.1, 10.0),
    t_final: f64 = 60.0,
    stride: f64 = 0.1,
    /// Absolute tolerance of the decay runs.
    atol: f64 = 1e-24,
});

op_args!(DetermineArgs {
    /// Rungs N to grade, e.g. `1,2,3,4`.
    #[arg(value_delimiter = ',')]
    ladder: Vec<usize> = vec![1, 2, 3, 4],
    pairs: usize = 6,
    norm: Span = Span::new(0.1, 10.0),
    t_final: f64 = 200.0,
    stride: f64 = 0.5,
    /// Largest N of the completeness-defect table.
    defect_n: usize = 20,
});

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Alpha,
    K,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SweepMeasure {
    /// Number of distinct equilibria from multi-start Newton.
    Equilibria,
    /// Smallest fitted decay rate over a seeded battery.
    Decay,
}

op_args!(SweepArgs {
    param: SweepParam = SweepParam::Alpha,
    measure: SweepMeasure = SweepMeasure::Equilibria,
    /// Explicit grid values.
    #[arg(value_delimiter = ',')]
    values: Vec<f64> = Vec::new(),
    /// Uniform grid over `span` with `points` values (appended to `values`).
    span: Span,
    points: usize = 0,
    n_starts: usize = 100,
    runs: usize = 5,
    norm: Span = Span::new(0.1, 10.0),
    t_final: f64 = 60.0,
});

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Subcommand)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Experiment {
    /// Eigenvalue table of the hinged-free operator.
    Spectrum(SpectrumArgs),
    /// Time integration of the truncated modal system.
    Simulate(SimulateArgs),
    /// Multi-start Newton equilibria and a unimodal profile.
    Stationary(StationaryArgs),
    /// Bifurcation curves Φ(μ, m).
    Branch(BranchArgs),
    /// One Duffing trajectory.
    Duffing(DuffingArgs),
    /// Duffing limit labels on a (φ₀, φ̇₀) grid.
    Basin(BasinArgs),
    /// Explicit stability thresholds.
    Thresholds(ThresholdsArgs),
    /// Absorbing-ball battery with frozen calibration.
    Absorb(AbsorbArgs),
    /// Decay-rate fits towards 0.
    Decay(DecayArgs),
    /// Completeness defects and the determining-modes pair experiment.
    Determine(DetermineArgs),
    /// Concurrent parameter sweep aggregated into one CSV.
    Sweep(SweepArgs),
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Spectrum(_) => "spectrum",
            Experiment::Simulate(_) => "simulate",
            Experiment::Stationary(_) => "stationary",
            Experiment::Branch(_) => "branch",
            Experiment::Duffing(_) => "duffing",
            Experiment::Basin(_) => "basin",
            Experiment::Thresholds(_) => "thresholds",
            Experiment::Absorb(_) => "absorb",
            Experiment::Decay(_) => "decay",
            Experiment::Determine(_) => "determine",
            Experiment::Sweep(_) => "sweep",
        }
    }

    /// Fields set in `o` win; `o` must name the same operation.
    pub fn overlay(&mut self, o: &Experiment) -> Result<()> {
        use Experiment::*;
        match (self, o) {
            (Spectrum(a), Spectrum(b)) => a.overlay(b),
            (Simulate(a), Simulate(b)) => a.overlay(b),
            (Stationary(a), Stationary(b)) => a.overlay(b),
            (Branch(a), Branch(b)) => a.overlay(b),
            (Duffing(a), Duffing(b)) => a.overlay(b),
            (Basin(a), Basin(b)) => a.overlay(b),
            (Thresholds(a), Thresholds(b)) => a.overlay(b),
            (Absorb(a), Absorb(b)) => a.overlay(b),
            (Decay(a), Decay(b)) => a.overlay(b),
            (Determine(a), Determine(b)) => a.overlay(b),
            (Sweep(a), Sweep(b)) => a.overlay(b),
            (a, b) => {
                return Err(CliError::schema(
                    "experiment.op",
                    format!("config names `{}` but the command is `{}`", a.name(), b.name()),
                ))
            }
        }
        Ok(())
    }

    pub fn resolve(&mut self) {
        match self {
            Experiment::Spectrum(a) => a.resolve(),
            Experiment::Simulate(a) => a.resolve(),
            Experiment::Stationary(a) => a.resolve(),
            Experiment::Branch(a) => a.resolve(),
            Experiment::Duffing(a) => a.resolve(),
            Experiment::Basin(a) => a.resolve(),
            Experiment::Thresholds(a) => a.resolve(),
            Experiment::Absorb(a) => a.resolve(),
            Experiment::Decay(a) => a.resolve(),
            Experiment::Determine(a) => a.resolve(),
            Experiment::Sweep(a) => a.resolve(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, with = "seed_repr")]
    pub seed: u64,
    #[serde(default)]
    pub params: PlateParams,
    #[serde(default)]
    pub truncation: TruncationBlock,
    #[serde(default)]
    pub initial: InitialData,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
}

/// TOML integers are i64: seeds above i64::MAX travel as decimal strings.
mod seed_repr {
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(*v) {
            Ok(i) => s.serialize_i64(i),
            Err(_) => s.serialize_str(&v.to_string()),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Int(u64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Int(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(|e| D::Error::custom(format!("seed `{t}`: {e}"))),
        }
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            params: PlateParams::default(),
            truncation: TruncationBlock::default(),
            initial: InitialData::Zero,
            experiment: None,
        }
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Checks that the type system cannot express.
    pub fn validate(&self) -> Result<()> {
        self.params
            .validate()
            .map_err(|e| CliError::schema("params", e.to_string()))?;
        let t = &self.truncation;
        if t.m_max == 0 || t.per_m == 0 {
            return Err(CliError::schema("truncation.m_max", "m_max and per_m must be at least 1"));
        }
        if !(t.tol.rtol > 0.0 && t.tol.atol > 0.0) {
            return Err(CliError::schema("truncation.tol", "rtol and atol must be positive"));
        }
        if let InitialData::Random { norm } = self.initial {
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(CliError::schema("initial.norm", "must be positive"));
            }
        }
        Ok(())
    }
}
