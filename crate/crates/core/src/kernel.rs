//! Symmetric radial convolution kernels `γ(|x - y|)`.
//!
//! Every kernel here has an elementary antiderivative, so masses, clipped masses
//! and second moments are evaluated in closed form.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::mesh::Interval;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("operation requires a DispersalExp kernel, got {0}")]
    UnsupportedVariant(&'static str),
    #[error("invalid kernel parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum KernelSpec {
    /// `exp(-z²)`, infinite horizon.
    Gaussian,
    /// `exp(-|z|)`, infinite horizon.
    Exponential,
    /// `c·exp(|z|)` on `|z| ≤ R`.
    TruncatedGrowingExp { c: f64, horizon: f64 },
    /// `A·exp(-a|z|)` on `|z| ≤ R`, with `A` chosen for unit mass.
    DispersalExp { a: f64, horizon: f64 },
}

/// Which closed form to use for the constant `C` that makes `C·K` approach `∂²ₓ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleFormula {
    /// `a³ / (A (2 - e^{-aR}(1 + aR(2 + aR))))`.
    #[default]
    ClosedForm,
    /// `2 / m₂` with `m₂` the kernel's second moment.
    Derived,
}

/// Intended boundary-constraint use, for [`KernelSpec::validate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelUse {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelViolation {
    NonPositive { z: f64 },
    Asymmetric { z: f64 },
    NonFiniteMass,
    NonFiniteSecondMoment,
    InfiniteHorizon,
    BadParameter(String),
}

impl std::fmt::Display for KernelViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::NonPositive { z } => write!(f, "kernel not positive at z = {z}"),
            Self::Asymmetric { z } => write!(f, "kernel not symmetric at z = {z}"),
            Self::NonFiniteMass => write!(f, "kernel mass not finite"),
            Self::NonFiniteSecondMoment => write!(f, "kernel second moment not finite"),
            Self::InfiniteHorizon => write!(f, "infinite horizon"),
            Self::BadParameter(s) => write!(f, "bad parameter: {s}"),
        }
    }
}

impl KernelSpec {
    pub fn gaussian() -> Self {
        Self::Gaussian
    }

    pub fn exponential() -> Self {
        Self::Exponential
    }

    pub fn truncated_growing_exp(c: f64, horizon: f64) -> Self {
        Self::TruncatedGrowingExp { c, horizon }
    }

    pub fn dispersal_exp(a: f64, horizon: f64) -> Self {
        Self::DispersalExp { a, horizon }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::Exponential => "exponential",
            Self::TruncatedGrowingExp { .. } => "truncated_growing_exp",
            Self::DispersalExp { .. } => "dispersal_exp",
        }
    }

    /// Support radius, `f64::INFINITY` for the untruncated kernels.
    pub fn horizon(&self) -> f64 {
        match *self {
            Self::Gaussian | Self::Exponential => f64::INFINITY,
            Self::TruncatedGrowingExp { horizon, .. } | Self::DispersalExp { horizon, .. } => {
                horizon
            }
        }
    }

    /// Kernels built on `exp(±|z|)` are not differentiable at `z = 0`.
    pub fn has_kink(&self) -> bool {
        !matches!(self, Self::Gaussian)
    }

    /// Length over which the kernel varies by a factor `e`.
    pub fn length_scale(&self) -> f64 {
        match *self {
            Self::Gaussian | Self::Exponential | Self::TruncatedGrowingExp { .. } => 1.0,
            Self::DispersalExp { a, .. } => 1.0 / a,
        }
    }

    /// Normalization `A = a / (2(1 - e^{-aR}))` of [`KernelSpec::DispersalExp`].
    pub fn dispersal_amplitude(a: f64, horizon: f64) -> f64 {
        a / (2.0 * -(-a * horizon).exp_m1())
    }

    pub fn eval(&self, z: f64) -> f64 {
        let r = z.abs();
        match *self {
            Self::Gaussian => (-r * r).exp(),
            Self::Exponential => (-r).exp(),
            Self::TruncatedGrowingExp { c, horizon } => {
                if r <= horizon {
                    c * r.exp()
                } else {
                    0.0
                }
            }
            Self::DispersalExp { a, horizon } => {
                if r <= horizon {
                    Self::dispersal_amplitude(a, horizon) * (-a * r).exp()
                } else {
                    0.0
                }
            }
        }
    }

    /// Odd antiderivative `F(s) = ∫₀ˢ γ(z) dz`, valid for any `s` including `±∞`.
    fn antiderivative(&self, s: f64) -> f64 {
        let sign = s.signum();
        let r = s.abs().min(self.horizon());
        let half = match *self {
            Self::Gaussian => 0.5 * PI.sqrt() * libm::erf(r),
            Self::Exponential => -(-r).exp_m1(),
            Self::TruncatedGrowingExp { c, .. } => c * r.exp_m1(),
            Self::DispersalExp { a, horizon } => {
                Self::dispersal_amplitude(a, horizon) * -(-a * r).exp_m1() / a
            }
        };
        if s == 0.0 {
            0.0
        } else {
            sign * half
        }
    }

    /// `Γ_∞ = ∫_ℝ γ(z) dz`.
    pub fn total_mass(&self) -> f64 {
        match *self {
            Self::Gaussian => PI.sqrt(),
            Self::Exponential => 2.0,
            Self::TruncatedGrowingExp { c, horizon } => 2.0 * c * horizon.exp_m1(),
            Self::DispersalExp { .. } => 1.0,
        }
    }

    /// `Γ(x) = ∫_J γ(x - y) dy`. Interval ends may be infinite.
    pub fn partial_mass(&self, x: f64, j: Interval) -> f64 {
        if !(j.hi > j.lo) {
            return 0.0;
        }
        self.antiderivative(j.hi - x) - self.antiderivative(j.lo - x)
    }

    /// `∫_ℝ z² γ(z) dz`.
    pub fn second_moment(&self) -> f64 {
        match *self {
            Self::Gaussian => 0.5 * PI.sqrt(),
            Self::Exponential => 4.0,
            Self::TruncatedGrowingExp { c, horizon: r } => {
                2.0 * c * (r.exp() * (r * r - 2.0 * r + 2.0) - 2.0)
            }
            Self::DispersalExp { a, horizon: r } => {
                let amp = Self::dispersal_amplitude(a, r);
                let ar = a * r;
                2.0 * amp / a.powi(3) * (2.0 - (-ar).exp() * (2.0 + 2.0 * ar + ar * ar))
            }
        }
    }

    /// Scaling `C` such that `C·K` tends to the second derivative as `a → ∞`.
    pub fn laplacian_scale(&self, formula: ScaleFormula) -> Result<f64, KernelError> {
        let Self::DispersalExp { a, horizon: r } = *self else {
            return Err(KernelError::UnsupportedVariant(self.name()));
        };
        Ok(match formula {
            ScaleFormula::ClosedForm => {
                let amp = Self::dispersal_amplitude(a, r);
                let ar = a * r;
                a.powi(3) / (amp * (2.0 - (-ar).exp() * (1.0 + ar * (2.0 + ar))))
            }
            ScaleFormula::Derived => 2.0 / self.second_moment(),
        })
    }

    fn check_parameters(&self) -> Vec<KernelViolation> {
        let mut out = Vec::new();
        let mut positive = |name: &str, v: f64| {
            if !(v > 0.0) || !v.is_finite() {
                out.push(KernelViolation::BadParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        };
        match *self {
            Self::Gaussian | Self::Exponential => {}
            Self::TruncatedGrowingExp { c, horizon } => {
                positive("c", c);
                positive("horizon", horizon);
            }
            Self::DispersalExp { a, horizon } => {
                positive("a", a);
                positive("horizon", horizon);
            }
        }
        out
    }

    /// Numerically check the kernel hypotheses. An empty list means the kernel is
    /// admissible for `usage`.
    pub fn validate(&self, usage: KernelUse) -> Vec<KernelViolation> {
        let mut out = self.check_parameters();
        if !out.is_empty() {
            return out;
        }
        let reach = if self.horizon().is_finite() {
            self.horizon()
        } else {
            10.0
        };
        for i in 0..=200 {
            let z = reach * i as f64 / 200.0;
            let g = self.eval(z);
            if !(g > 0.0) {
                out.push(KernelViolation::NonPositive { z });
                break;
            }
            if g != self.eval(-z) {
                out.push(KernelViolation::Asymmetric { z });
                break;
            }
        }
        if !self.total_mass().is_finite() {
            out.push(KernelViolation::NonFiniteMass);
        }
        if !self.second_moment().is_finite() {
            out.push(KernelViolation::NonFiniteSecondMoment);
        }
        if usage == KernelUse::Neumann && !self.horizon().is_finite() {
            out.push(KernelViolation::InfiniteHorizon);
        }
        out
    }
}
