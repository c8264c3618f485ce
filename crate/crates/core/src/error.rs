use alloc::string::String;
use alloc::vec::Vec;

use crate::params::Parity;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("precondition of `{op}` violated: {detail}")]
    Precondition { op: &'static str, detail: String },

    #[error(
        "found {found} of {wanted} eigenvalues for m={m} ({parity:?}) while sweeping lambda in [{lo:e}, {hi:e}]"
    )]
    BracketFailure {
        m: u32,
        parity: Parity,
        lo: f64,
        hi: f64,
        found: usize,
        wanted: usize,
    },

    #[error("mode m={m} {parity:?} branch {branch} is not in the spectrum table")]
    UnknownMode { m: u32, parity: Parity, branch: u32 },

    #[error("step size underflow at t={t} (h={step:e})")]
    StepUnderflow {
        t: f64,
        step: f64,
        last_state: Vec<f64>,
    },

    #[error("step budget of {max_steps} exhausted at t={t}")]
    TooManySteps { t: f64, max_steps: usize },

    #[error("root polishing did not converge in [{lo}, {hi}]")]
    RootNotConverged { lo: f64, hi: f64 },

    #[error("no unimodal solution for m={m} at alpha={alpha}")]
    NoUnimodal { m: u32, alpha: f64 },

    #[error("spectrum depth {available} is too small, need at least {required} modes")]
    InsufficientDepth { required: usize, available: usize },

    #[error(
        "projection error {error:e} exceeds {threshold:e}; include more modes with m={m} (hint: {hint})"
    )]
    ProjectionTooCoarse {
        error: f64,
        threshold: f64,
        m: u32,
        hint: String,
    },

    #[error("pair diverged at t={t}")]
    Diverged { t: f64 },
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn precondition(op: &'static str, detail: impl Into<String>) -> Error {
    Error::Precondition {
        op,
        detail: detail.into(),
    }
}
