//! Spectral-Galerkin dynamics and bifurcation analysis for a rectangular plate
//! hinged at `x = 0, π` and free at `y = ±ℓ`, with nonlocal span-wise stretching
//! and a piston-theory flow load:
//!
//! ```text
//! u_tt + k u_t + Δ²u + [P − S‖u_x‖²] u_xx = g + α u_y
//! ```
//!
//! The crate is `no_std` (it needs `alloc`). All operations are pure and
//! deterministic; file formats, configuration and concurrency live in the
//! `plateflow-cli` companion crate.
//!
//! Module map:
//! - [`spectrum`]: separated eigenpairs of the hinged-free biharmonic operator,
//!   the flow coupling matrix and forcing projections.
//! - [`modal`]: the truncated modal system, its integrator driver, energies and
//!   the energy-identity residual.
//! - [`stationary`]: unimodal equilibria (quartic roots, boundary determinant,
//!   branch tracing, rescaling) and multi-start Newton on the Galerkin system.
//! - [`duffing`]: the Duffing reduction of unimodal dynamics.
//! - [`stability`]: threshold formulas, Lyapunov bounds, absorbing-ball and
//!   decay-rate checks.
//! - [`determining`]: completeness defects and determining-modes experiments.
#![no_std]
// `num_traits::Float` is shadowed by the inherent float methods whenever std is
// linked into the build graph, which makes its imports look unused there.
#![allow(unused_imports)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod determining;
pub mod duffing;
pub mod error;
pub mod modal;
pub mod ode;
pub mod params;
pub mod quadrature;
pub mod rng;
pub mod roots;
pub mod spectrum;
pub mod stability;
pub mod stationary;

pub use error::{Error, Result};
pub use params::{ForcingSpec, ModeKey, Parity, PlateParams};
