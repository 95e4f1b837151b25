//! Steady pulse solutions under nonlocal Neumann constraints.
//!
//! A pulse run starts from a localized perturbation of the trivial state
//! `(u, v) = (1, 0)` and steps the unforced system until successive iterates
//! stop changing. The dispersal kernel `A e^{-a|z|}` is rescaled by `C(a)` so
//! that `C K → ∂²ₓ` as `a → ∞`; the local model with the P1 Laplacian is the
//! reference profile that large-`a` pulses approach.

use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_local, assemble_nonlocal, BcMode};
use crate::kernel::{KernelSpec, ScaleFormula};
use crate::mesh::{Interval, Mesh1D};
use crate::quadrature::QuadratureRule;
use crate::stepper::{Diffusion, PhysicalParams, Stepper, StepperState, SteadyOutcome};
use crate::Error;

/// Scaling applied to the nonlocal operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleMode {
    None,
    #[default]
    #[serde(rename = "paper_C")]
    ClosedFormC,
    #[serde(rename = "derived_C")]
    DerivedC,
}

impl ScaleMode {
    pub fn scale_for(&self, kernel: &KernelSpec) -> Result<f64, Error> {
        Ok(match self {
            ScaleMode::None => 1.0,
            ScaleMode::ClosedFormC => kernel.laplacian_scale(ScaleFormula::ClosedForm)?,
            ScaleMode::DerivedC => kernel.laplacian_scale(ScaleFormula::Derived)?,
        })
    }
}

/// Diffusion model of one pulse run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PulseModel {
    Nonlocal { a: f64 },
    /// `a = ∞`: the P1 Laplacian on `Ω` without collar.
    Local,
}

impl PulseModel {
    pub fn label(&self) -> String {
        match self {
            PulseModel::Nonlocal { a } => format!("a{a}"),
            PulseModel::Local => "local".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseConfig {
    pub omega: Interval,
    pub collar: f64,
    pub horizon: f64,
    pub h: f64,
    pub tau: f64,
    pub tol: f64,
    pub max_steps: usize,
    pub params: PhysicalParams,
    pub scale: ScaleMode,
}

impl Default for PulseConfig {
    fn default() -> Self {
        Self {
            omega: Interval::new(-40.0, 40.0),
            collar: 5.0,
            horizon: 5.0,
            h: 0.05,
            tau: 0.01,
            tol: 1e-5,
            max_steps: 2_000_000,
            params: PhysicalParams::new(1.0, 0.01, 0.01, 0.0977),
            scale: ScaleMode::ClosedFormC,
        }
    }
}

pub fn initial_u(x: f64) -> f64 {
    1.0 - 0.3 * (-10.0 * x * x).exp()
}

pub fn initial_v(x: f64) -> f64 {
    (-10.0 * x * x).exp()
}

#[derive(Debug, Clone)]
pub struct PulseRun {
    pub model: PulseModel,
    pub scale_c: f64,
    pub mesh: Mesh1D,
    pub outcome: SteadyOutcome,
}

impl PulseRun {
    /// Interior nodes and the matching `v` values.
    pub fn interior_profile(&self) -> (Vec<f64>, Vec<f64>) {
        let idx: Vec<usize> = self.mesh.interior_nodes().collect();
        (
            idx.iter().map(|&i| self.mesh.nodes()[i]).collect(),
            idx.iter().map(|&i| self.outcome.state.v[i]).collect(),
        )
    }

    pub fn max_v(&self) -> f64 {
        self.interior_profile().1.into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn shape(&self) -> PulseShape {
        let (x, v) = self.interior_profile();
        classify_profile(&x, &v, Interval::new(-5.0, 5.0))
    }
}

/// March one model to steady state. Hitting `max_steps` is not an error here:
/// the outcome carries `converged = false` and the last state.
pub fn run_pulse(cfg: &PulseConfig, model: PulseModel) -> Result<PulseRun, Error> {
    let q = QuadratureRule::gauss_legendre(4);
    let (mesh, ops, scale_c, diffusion) = match model {
        PulseModel::Nonlocal { a } => {
            let kernel = KernelSpec::dispersal_exp(a, cfg.horizon);
            let mesh = Mesh1D::build_uniform(cfg.omega, cfg.collar, cfg.h)?;
            let ops = assemble_nonlocal(&mesh, &kernel, BcMode::Neumann, &q)?;
            (mesh, ops, cfg.scale.scale_for(&kernel)?, Diffusion::Nonlocal)
        }
        PulseModel::Local => {
            let mesh = Mesh1D::build_uniform(cfg.omega, 0.0, cfg.h)?;
            let ops = assemble_local(&mesh);
            (mesh, ops, 1.0, Diffusion::Local)
        }
    };
    let params = cfg.params.with_scale(scale_c);
    let stepper = Stepper::new(&mesh, &ops, params, cfg.tau, diffusion)?;
    let state0 = StepperState::from_functions(&mesh, initial_u, initial_v);
    let outcome = stepper.march_to_steady(state0, cfg.tol, cfg.max_steps)?;
    Ok(PulseRun {
        model,
        scale_c,
        mesh,
        outcome,
    })
}

/// Qualitative shape of a pulse near the origin.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseShape {
    /// One local maximum, at the node nearest the center.
    SinglePeak,
    /// Local minimum at the center flanked by exactly two maxima.
    Batman,
    Other { maxima: usize, center_is_min: bool },
}

/// Indices `i` with `v[i-1] < v[i] > v[i+1]` and `x[i]` in `window`.
pub fn local_maxima(x: &[f64], v: &[f64], window: Interval) -> Vec<usize> {
    (1..v.len().saturating_sub(1))
        .filter(|&i| window.contains(x[i]) && v[i] > v[i - 1] && v[i] > v[i + 1])
        .collect()
}

fn nearest_node(x: &[f64], target: f64) -> usize {
    // leftmost on ties
    let mut best = 0;
    for (i, &xi) in x.iter().enumerate() {
        if (xi - target).abs() < (x[best] - target).abs() {
            best = i;
        }
    }
    best
}

/// Classify the profile around the window's midpoint.
pub fn classify_profile(x: &[f64], v: &[f64], window: Interval) -> PulseShape {
    let maxima = local_maxima(x, v, window);
    let c = nearest_node(x, window.midpoint());
    let center_is_min = c > 0 && c + 1 < v.len() && v[c] < v[c - 1] && v[c] < v[c + 1];
    match maxima.as_slice() {
        [m] if *m == c => PulseShape::SinglePeak,
        [_, _] if center_is_min => PulseShape::Batman,
        _ => PulseShape::Other {
            maxima: maxima.len(),
            center_is_min,
        },
    }
}

/// Relative `L²` difference of two nodal profiles restricted to `window`,
/// the second one linearly interpolated onto the first one's nodes.
pub fn windowed_relative_difference(
    x_ref: &[f64],
    v_ref: &[f64],
    x_other: &[f64],
    v_other: &[f64],
    window: Interval,
) -> f64 {
    let interp = |x: f64| {
        let j = x_other.partition_point(|&xo| xo < x).clamp(1, x_other.len() - 1);
        let (x0, x1) = (x_other[j - 1], x_other[j]);
        let s = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
        v_other[j - 1] * (1.0 - s) + v_other[j] * s
    };
    let mut num = 0.0;
    let mut den = 0.0;
    for (&x, &v) in x_ref.iter().zip(v_ref) {
        if window.contains(x) {
            let d = interp(x) - v;
            num += d * d;
            den += v * v;
        }
    }
    (num / den).sqrt()
}
