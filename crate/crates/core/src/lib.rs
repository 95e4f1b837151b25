//! Nonlocal Gray-Scott solver.
//!
//! The reaction-diffusion system
//!
//! ```text
//! u_t = d_u K u - u v² + f (1 - u)
//! v_t = d_v K v + u v² - (f + κ) v
//! ```
//!
//! with the integral diffusion operator `Ku(x) = ∫ (u(y) - u(x)) γ(x - y) dy` is
//! discretized with continuous P1 finite elements in space and a first-order
//! semi-implicit scheme in time, under nonlocal Dirichlet (`u = 0` outside `Ω`)
//! or nonlocal Neumann (`Ku = 0` on a collar around `Ω`) volume constraints.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod app;
pub mod assembly;
pub mod config;
mod error;
pub mod kernel;
pub mod linalg;
pub mod mesh;
pub mod mms;
pub mod output;
pub mod pulse;
pub mod quadrature;
pub mod spectral;
pub mod stepper;

pub use error::Error;
pub use assembly::{AssembledOperators, BcMode};
pub use kernel::{KernelSpec, ScaleFormula};
pub use mesh::{Interval, Mesh1D, Region};
pub use quadrature::QuadratureRule;
