//! First-order semi-implicit time stepping (backward Euler for diffusion and the
//! linear reaction terms, explicit `u v²`).
//!
//! Each step solves
//!
//! ```text
//! S_u u' = M_Ω u / τ + f M_Ω 1 - N(u, v) + L(q_u)
//! S_v v' = M_Ω v / τ + N(u, v) + L(q_v)
//! S_u = (1/τ + f) M_Ω + d_u c A,   S_v = (1/τ + f + κ) M_Ω + d_v c A
//! ```
//!
//! where `A` is the nonlocal matrix (or the P1 stiffness for local reference
//! runs), `c` the diffusion scaling and `N_i = ∫_Ω u v² φ_i`. Both systems are
//! factored once and reused. With a collar, rows of pure-collar nodes carry only
//! the constraint `-d K u' = q`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::AssembledOperators;
use crate::linalg::{BandCholesky, BandedSym, LinalgError};
use crate::mesh::{Interval, Mesh1D};
use crate::quadrature::QuadratureRule;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("system matrix factorization failed: {0}")]
    FactorizationFailure(#[from] LinalgError),
    #[error("non-finite state at step {step}")]
    NonFiniteState { step: usize },
    #[error("steady state not reached in {steps} steps (last criterion {last_criterion:e})")]
    MaxStepsExceeded { steps: usize, last_criterion: f64 },
    #[error("invalid time step {0}")]
    InvalidTimeStep(f64),
    #[error("final time {t_end} is not an integer multiple of tau = {tau}")]
    NonIntegralSteps { t_end: f64, tau: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub d_u: f64,
    pub d_v: f64,
    pub f: f64,
    pub kappa: f64,
    /// Multiplier on the diffusion operator (1 unless rescaled towards the Laplacian).
    #[serde(default = "one")]
    pub scale_c: f64,
}

fn one() -> f64 {
    1.0
}

impl PhysicalParams {
    pub fn new(d_u: f64, d_v: f64, f: f64, kappa: f64) -> Self {
        Self {
            d_u,
            d_v,
            f,
            kappa,
            scale_c: 1.0,
        }
    }

    pub fn with_scale(mut self, scale_c: f64) -> Self {
        self.scale_c = scale_c;
        self
    }

    pub fn validate(&self) -> Result<(), StepError> {
        for (name, v) in [
            ("d_u", self.d_u),
            ("d_v", self.d_v),
            ("f", self.f),
            ("kappa", self.kappa),
            ("scale_c", self.scale_c),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(StepError::InvalidParams(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Which diffusion matrix drives the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Diffusion {
    Nonlocal,
    /// The P1 Laplacian: the `a → ∞` reference model.
    Local,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepperState {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
    pub n: usize,
}

impl StepperState {
    pub fn new(u: Vec<f64>, v: Vec<f64>) -> Self {
        assert_eq!(u.len(), v.len(), "u and v must have the same length");
        Self { u, v, t: 0.0, n: 0 }
    }

    pub fn from_functions(
        mesh: &Mesh1D,
        u0: impl Fn(f64) -> f64,
        v0: impl Fn(f64) -> f64,
    ) -> Self {
        Self::new(mesh.nodal_values(u0), mesh.nodal_values(v0))
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|x| x.is_finite())
    }
}

/// Both system matrices, factored once.
#[derive(Debug, Clone)]
pub struct FactoredSystems {
    pub tau: f64,
    pub s_u: BandCholesky,
    pub s_v: BandCholesky,
    pub bandwidth: usize,
}

fn system_matrix(
    mass: &DMatrix<f64>,
    diffusion: &DMatrix<f64>,
    reaction: f64,
    tau: f64,
    d: f64,
) -> DMatrix<f64> {
    mass * (1.0 / tau + reaction) + diffusion * d
}

/// Assemble and factor `S_u` and `S_v`.
pub fn build_systems(
    ops: &AssembledOperators,
    params: &PhysicalParams,
    tau: f64,
    diffusion: Diffusion,
) -> Result<FactoredSystems, StepError> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(StepError::InvalidTimeStep(tau));
    }
    params.validate()?;
    let a = match diffusion {
        Diffusion::Nonlocal => &ops.nonlocal,
        Diffusion::Local => &ops.laplacian,
    };
    let s_u = system_matrix(&ops.mass_omega, a, params.f, tau, params.d_u * params.scale_c);
    let s_v = system_matrix(
        &ops.mass_omega,
        a,
        params.f + params.kappa,
        tau,
        params.d_v * params.scale_c,
    );
    let bu = BandedSym::from_dense(&s_u);
    let bv = BandedSym::from_dense(&s_v);
    let bandwidth = bu.bandwidth().max(bv.bandwidth());
    Ok(FactoredSystems {
        tau,
        s_u: bu.cholesky()?,
        s_v: bv.cholesky()?,
        bandwidth,
    })
}

/// Assembled source loads `(L(q_u), L(q_v))` at a given time.
pub trait Forcing: Sync {
    fn loads(&self, t: f64) -> (Vec<f64>, Vec<f64>);
}

/// Homogeneous problem.
pub struct NoForcing;

impl Forcing for NoForcing {
    fn loads(&self, _t: f64) -> (Vec<f64>, Vec<f64>) {
        (Vec::new(), Vec::new())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub t: f64,
    pub norm_u: f64,
    pub norm_v: f64,
    /// Steady-state criterion, when computed.
    pub criterion: Option<f64>,
    /// Whether `‖u‖² ≤ ‖u(0)‖² + |Ω|` holds, for unforced Dirichlet runs.
    pub energy_bound_ok: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
}

impl Trace {
    pub fn energy_bound_violations(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| r.energy_bound_ok == Some(false))
            .count()
    }
}

/// A fully configured time stepper for one mesh, operator set and time step.
#[derive(Debug, Clone)]
pub struct Stepper {
    mesh: Mesh1D,
    params: PhysicalParams,
    systems: FactoredSystems,
    mass: BandedSym,
    f_load: Vec<f64>,
    nonlinear_rule: QuadratureRule,
    monitor_energy: bool,
}

impl Stepper {
    pub fn new(
        mesh: &Mesh1D,
        ops: &AssembledOperators,
        params: PhysicalParams,
        tau: f64,
        diffusion: Diffusion,
    ) -> Result<Self, StepError> {
        let systems = build_systems(ops, &params, tau, diffusion)?;
        let mass = BandedSym::from_dense(&ops.mass_omega);
        let ones = vec![1.0; mesh.node_count()];
        let f_load = mass.matvec(&ones).into_iter().map(|m| params.f * m).collect();
        Ok(Self {
            mesh: mesh.clone(),
            params,
            systems,
            mass,
            f_load,
            nonlinear_rule: QuadratureRule::gauss_legendre(3),
            monitor_energy: ops.bc == crate::assembly::BcMode::Dirichlet,
        })
    }

    pub fn tau(&self) -> f64 {
        self.systems.tau
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn systems(&self) -> &FactoredSystems {
        &self.systems
    }

    /// `‖w‖_{L²(Ω)}` of a P1 field (exact).
    pub fn l2_norm_omega(&self, w: &[f64]) -> f64 {
        self.mass.quadratic_form(w).max(0.0).sqrt()
    }

    /// `N_i = ∫_Ω u v² φ_i`, exact for P1 fields with 3-point Gauss.
    pub fn nonlinear_load(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        let nodes = self.mesh.nodes();
        for (e, &[a, b]) in self.mesh.elements().iter().enumerate() {
            if !self.mesh.element_in_omega(e) {
                continue;
            }
            let (xa, xb) = (nodes[a], nodes[b]);
            for (x, w) in self.nonlinear_rule.mapped(Interval::new(xa, xb)) {
                let s = (x - xa) / (xb - xa);
                let (pa, pb) = (1.0 - s, s);
                let uh = u[a] * pa + u[b] * pb;
                let vh = v[a] * pa + v[b] * pb;
                let g = w * uh * vh * vh;
                out[a] += g * pa;
                out[b] += g * pb;
            }
        }
        out
    }

    /// One step. `loads` are `(L(q_u), L(q_v))` at `t + τ`; empty slices mean no source.
    pub fn step(
        &self,
        state: &StepperState,
        loads: (&[f64], &[f64]),
    ) -> Result<StepperState, StepError> {
        let inv_tau = 1.0 / self.systems.tau;
        let nl = self.nonlinear_load(&state.u, &state.v);
        let mut ru = self.mass.matvec(&state.u);
        let mut rv = self.mass.matvec(&state.v);
        for i in 0..ru.len() {
            ru[i] = inv_tau * ru[i] + self.f_load[i] - nl[i];
            rv[i] = inv_tau * rv[i] + nl[i];
        }
        if !loads.0.is_empty() {
            ru.iter_mut().zip(loads.0).for_each(|(r, q)| *r += q);
        }
        if !loads.1.is_empty() {
            rv.iter_mut().zip(loads.1).for_each(|(r, q)| *r += q);
        }
        self.systems.s_u.solve_in_place(&mut ru)?;
        self.systems.s_v.solve_in_place(&mut rv)?;
        let next = StepperState {
            u: ru,
            v: rv,
            t: (state.n + 1) as f64 * self.systems.tau,
            n: state.n + 1,
        };
        if !next.is_finite() {
            return Err(StepError::NonFiniteState { step: next.n });
        }
        Ok(next)
    }

    fn trace_row(&self, s: &StepperState, criterion: Option<f64>, energy0: Option<f64>) -> TraceRow {
        let norm_u = self.l2_norm_omega(&s.u);
        TraceRow {
            step: s.n,
            t: s.t,
            norm_u,
            norm_v: self.l2_norm_omega(&s.v),
            criterion,
            energy_bound_ok: energy0.map(|e0| norm_u * norm_u <= e0),
        }
    }

    /// March exactly `T / τ` steps, recording `L²(Ω)` norms after every step.
    pub fn run_to_time(
        &self,
        state0: StepperState,
        t_end: f64,
        forcing: &dyn Forcing,
    ) -> Result<(StepperState, Trace), StepError> {
        let steps = step_count(t_end, self.systems.tau)?;
        // the bound is only meaningful for the unforced problem
        let unforced = forcing.loads(0.0).0.is_empty();
        let energy0 = (self.monitor_energy && unforced).then(|| {
            let n0 = self.l2_norm_omega(&state0.u);
            n0 * n0 + self.mesh.omega().length()
        });
        let mut trace = Trace::default();
        trace.rows.push(self.trace_row(&state0, None, energy0));
        let mut state = state0;
        for _ in 0..steps {
            let t_next = (state.n + 1) as f64 * self.systems.tau;
            let (qu, qv) = forcing.loads(t_next);
            state = self.step(&state, (&qu, &qv))?;
            trace.rows.push(self.trace_row(&state, None, energy0));
        }
        Ok((state, trace))
    }

    /// Relative change between successive iterates, max over both species.
    pub fn steady_criterion(&self, prev: &StepperState, next: &StepperState) -> f64 {
        let rel = |a: &[f64], b: &[f64]| {
            let diff: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
            let num = self.l2_norm_omega(&diff);
            if num == 0.0 {
                0.0
            } else {
                num / self.l2_norm_omega(a)
            }
        };
        rel(&prev.u, &next.u).max(rel(&prev.v, &next.v))
    }

    /// Step the unforced problem until the relative change drops to `tol`,
    /// returning the last state either way.
    pub fn march_to_steady(
        &self,
        state0: StepperState,
        tol: f64,
        max_steps: usize,
    ) -> Result<SteadyOutcome, StepError> {
        if !(tol > 0.0) {
            return Err(StepError::InvalidParams(format!("tolerance must be positive, got {tol}")));
        }
        let mut trace = Trace::default();
        trace.rows.push(self.trace_row(&state0, None, None));
        let mut state = state0;
        let mut last = f64::INFINITY;
        for _ in 0..max_steps {
            let next = self.step(&state, (&[], &[]))?;
            last = self.steady_criterion(&state, &next);
            trace.rows.push(self.trace_row(&next, Some(last), None));
            state = next;
            if last <= tol {
                return Ok(SteadyOutcome {
                    state,
                    trace,
                    converged: true,
                    last_criterion: last,
                });
            }
        }
        Ok(SteadyOutcome {
            state,
            trace,
            converged: false,
            last_criterion: last,
        })
    }

    /// As [`Stepper::march_to_steady`], failing with `MaxStepsExceeded` if `tol` is not reached.
    pub fn run_to_steady(
        &self,
        state0: StepperState,
        tol: f64,
        max_steps: usize,
    ) -> Result<(StepperState, Trace), StepError> {
        let out = self.march_to_steady(state0, tol, max_steps)?;
        if out.converged {
            Ok((out.state, out.trace))
        } else {
            Err(StepError::MaxStepsExceeded {
                steps: max_steps,
                last_criterion: out.last_criterion,
            })
        }
    }
}

/// Result of a steady-state march.
#[derive(Debug, Clone)]
pub struct SteadyOutcome {
    pub state: StepperState,
    pub trace: Trace,
    pub converged: bool,
    pub last_criterion: f64,
}

/// `T / τ` as an integer, rejecting non-integral ratios beyond `1e-9` relative.
pub fn step_count(t_end: f64, tau: f64) -> Result<usize, StepError> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(StepError::InvalidTimeStep(tau));
    }
    if t_end == 0.0 {
        return Ok(0);
    }
    let n = (t_end / tau).round();
    if !(t_end > 0.0) || n < 1.0 || (n * tau - t_end).abs() > 1e-9 * t_end {
        return Err(StepError::NonIntegralSteps { t_end, tau });
    }
    Ok(n as usize)
}
