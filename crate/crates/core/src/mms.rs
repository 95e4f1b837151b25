//! Manufactured-solution cases, their source terms, and refinement studies.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::{assemble_nonlocal, eval_k_strong, BcMode, NonlocalDomain, StrongQuadrature};
use crate::kernel::KernelSpec;
use crate::mesh::{Interval, Mesh1D};
use crate::quadrature::QuadratureRule;
use crate::stepper::{step_count, Diffusion, Forcing, PhysicalParams, Stepper, StepperState, Trace};
use crate::Error;

/// Scalar field of `(x, t)`.
pub type Field = fn(f64, f64) -> f64;

#[derive(Debug, Clone)]
pub struct MmsCase {
    pub name: &'static str,
    pub omega: Interval,
    pub collar: f64,
    pub kernel: KernelSpec,
    pub bc: BcMode,
    pub params: PhysicalParams,
    pub t_end: f64,
    pub u: Field,
    pub v: Field,
    pub u_t: Field,
    pub v_t: Field,
}

// dirichlet1: Ω = [0, 1], Gaussian kernel.
fn d1_bump(x: f64) -> f64 {
    (-x + x * x).exp()
}
fn d1_u(x: f64, t: f64) -> f64 {
    x * x * (PI * x / 2.0).cos() * d1_bump(x) * (-t).exp()
}
fn d1_u_t(x: f64, t: f64) -> f64 {
    -d1_u(x, t)
}
fn d1_v_profile(x: f64) -> f64 {
    x.sin() * (1.0 - x) * d1_bump(x) / 300.0
}
fn d1_v(x: f64, t: f64) -> f64 {
    d1_v_profile(x) * (10.0 + x * t) * (t * t).cos()
}
fn d1_v_t(x: f64, t: f64) -> f64 {
    d1_v_profile(x) * (x * (t * t).cos() - (10.0 + x * t) * 2.0 * t * (t * t).sin())
}

// neumann1: Ω = [-8, 8] with collar 2, truncated growing kernel.
fn n1_u(x: f64, t: f64) -> f64 {
    (x - 10.0) * (x + 10.0) * t.cos() / 100.0
}
fn n1_u_t(x: f64, t: f64) -> f64 {
    -(x - 10.0) * (x + 10.0) * t.sin() / 100.0
}
fn n1_v(x: f64, t: f64) -> f64 {
    (PI * x / 10.0).sin() * (-t * t).exp() / 2.0
}
fn n1_v_t(x: f64, t: f64) -> f64 {
    -2.0 * t * n1_v(x, t)
}

impl MmsCase {
    pub fn dirichlet1() -> Self {
        Self {
            name: "dirichlet1",
            omega: Interval::new(0.0, 1.0),
            collar: 0.0,
            kernel: KernelSpec::gaussian(),
            bc: BcMode::Dirichlet,
            params: PhysicalParams::new(0.05, 0.01, 6.0, 2.0),
            t_end: 1.0,
            u: d1_u,
            v: d1_v,
            u_t: d1_u_t,
            v_t: d1_v_t,
        }
    }

    pub fn neumann1() -> Self {
        Self {
            name: "neumann1",
            omega: Interval::new(-8.0, 8.0),
            collar: 2.0,
            kernel: KernelSpec::truncated_growing_exp(0.5, 2.0),
            bc: BcMode::Neumann,
            params: PhysicalParams::new(0.05, 0.01, 2.0, 3.0),
            t_end: 1.0,
            u: n1_u,
            v: n1_v,
            u_t: n1_u_t,
            v_t: n1_v_t,
        }
    }

    pub fn registered() -> Vec<Self> {
        vec![Self::dirichlet1(), Self::neumann1()]
    }

    pub fn by_name(name: &str) -> Option<Self> {
        Self::registered().into_iter().find(|c| c.name == name)
    }

    pub fn omega_tilde(&self) -> Interval {
        Interval::new(self.omega.lo - self.collar, self.omega.hi + self.collar)
    }

    pub fn nonlocal_domain(&self) -> NonlocalDomain {
        let integration = match self.bc {
            BcMode::Dirichlet => self.omega,
            BcMode::Neumann => self.omega_tilde(),
        };
        NonlocalDomain::new(integration, self.bc)
    }

    /// Strong-form quadrature for the sources.
    pub fn source_quadrature(&self) -> StrongQuadrature {
        StrongQuadrature::for_domain(self.omega_tilde(), &self.kernel)
    }

    /// `(K u(·, t))(x)` and `(K v(·, t))(x)`.
    pub fn k_exact(&self, x: f64, t: f64, sq: &StrongQuadrature) -> (f64, f64) {
        let dom = self.nonlocal_domain();
        let (u, v) = (self.u, self.v);
        (
            eval_k_strong(|y| u(y, t), x, &self.kernel, &dom, sq),
            eval_k_strong(|y| v(y, t), x, &self.kernel, &dom, sq),
        )
    }

    /// `(q_u, q_v)` at `(x, t)`. Inside `Ω` these balance the full equations; on
    /// the collar they balance the constraint rows `-d K u = q`.
    pub fn source_terms(&self, x: f64, t: f64, sq: &StrongQuadrature) -> (f64, f64) {
        let (ku, kv) = self.k_exact(x, t, sq);
        let p = &self.params;
        if self.omega.contains(x) {
            let u = (self.u)(x, t);
            let v = (self.v)(x, t);
            let uvv = u * v * v;
            (
                (self.u_t)(x, t) - p.d_u * ku + uvv - p.f * (1.0 - u),
                (self.v_t)(x, t) - p.d_v * kv - uvv + (p.f + p.kappa) * v,
            )
        } else {
            (-p.d_u * ku, -p.d_v * kv)
        }
    }
}

/// Assembled MMS loads `∫ q φ_i` with the outer quadrature rule.
pub struct MmsForcing {
    case: MmsCase,
    sq: StrongQuadrature,
    n: usize,
    /// `(node a, node b, φ_a, φ_b, weight, x, inside Ω)` per quadrature point.
    points: Vec<(usize, usize, f64, f64, f64, f64, bool)>,
}

impl MmsForcing {
    pub fn new(case: &MmsCase, mesh: &Mesh1D, q: &QuadratureRule) -> Self {
        let nodes = mesh.nodes();
        let mut points = Vec::new();
        for (e, &[a, b]) in mesh.elements().iter().enumerate() {
            let (xa, xb) = (nodes[a], nodes[b]);
            let inside = mesh.element_in_omega(e);
            for (x, w) in q.mapped(Interval::new(xa, xb)) {
                let s = (x - xa) / (xb - xa);
                points.push((a, b, 1.0 - s, s, w, x, inside));
            }
        }
        Self {
            case: case.clone(),
            sq: case.source_quadrature(),
            n: mesh.node_count(),
            points,
        }
    }
}

impl Forcing for MmsForcing {
    fn loads(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let values: Vec<(f64, f64)> = self
            .points
            .par_iter()
            .map(|&(_, _, _, _, _, x, inside)| {
                // quadrature points never sit on ∂Ω; classify by element
                if inside == self.case.omega.contains(x) {
                    self.case.source_terms(x, t, &self.sq)
                } else {
                    let (ku, kv) = self.case.k_exact(x, t, &self.sq);
                    (-self.case.params.d_u * ku, -self.case.params.d_v * kv)
                }
            })
            .collect();
        let mut lu = vec![0.0; self.n];
        let mut lv = vec![0.0; self.n];
        for (&(a, b, pa, pb, w, _, _), &(qu, qv)) in self.points.iter().zip(&values) {
            lu[a] += w * qu * pa;
            lu[b] += w * qu * pb;
            lv[a] += w * qv * pa;
            lv[b] += w * qv * pb;
        }
        (lu, lv)
    }
}

/// `‖u_h - u‖_{L²(Ω)} / ‖u‖_{L²(Ω)}` with an `n`-point Gauss rule per element.
pub fn l2_relative_error_with(
    mesh: &Mesh1D,
    coeffs: &[f64],
    exact: impl Fn(f64) -> f64,
    rule: &QuadratureRule,
) -> Result<f64, Error> {
    let nodes = mesh.nodes();
    let mut err = 0.0;
    let mut norm = 0.0;
    for (e, &[a, b]) in mesh.elements().iter().enumerate() {
        if !mesh.element_in_omega(e) {
            continue;
        }
        let (xa, xb) = (nodes[a], nodes[b]);
        for (x, w) in rule.mapped(Interval::new(xa, xb)) {
            let s = (x - xa) / (xb - xa);
            let uh = coeffs[a] * (1.0 - s) + coeffs[b] * s;
            let ue = exact(x);
            err += w * (uh - ue) * (uh - ue);
            norm += w * ue * ue;
        }
    }
    if norm == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok((err / norm).sqrt())
}

/// Relative `L²(Ω)` error with the default 5-point rule.
pub fn l2_relative_error(
    mesh: &Mesh1D,
    coeffs: &[f64],
    exact: impl Fn(f64) -> f64,
) -> Result<f64, Error> {
    l2_relative_error_with(mesh, coeffs, exact, &QuadratureRule::gauss_legendre(5))
}

/// Time step as a function of the mesh size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauRule {
    /// `τ = factor · h`.
    Proportional(f64),
    Fixed(f64),
}

impl TauRule {
    pub fn tau(&self, h: f64) -> f64 {
        match *self {
            TauRule::Proportional(c) => c * h,
            TauRule::Fixed(t) => t,
        }
    }

    /// The rule used for a registered case: `τ = 2h` (Dirichlet), `τ = h/5` (Neumann).
    pub fn default_for(case: &MmsCase) -> Self {
        match case.bc {
            BcMode::Dirichlet => TauRule::Proportional(2.0),
            BcMode::Neumann => TauRule::Proportional(0.2),
        }
    }
}

/// Mesh sizes of a registered case's study: halving from `h₀`.
pub fn default_levels(case: &MmsCase, count: usize) -> Vec<f64> {
    let h0 = match case.bc {
        BcMode::Dirichlet => 0.05,
        BcMode::Neumann => 0.5,
    };
    (0..count).map(|k| h0 / 2f64.powi(k as i32)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelRecord {
    pub level: usize,
    pub h: f64,
    pub tau: f64,
    pub nodes: usize,
    pub elements: usize,
    pub err_u: f64,
    pub err_v: f64,
    pub rate_u: Option<f64>,
    pub rate_v: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub case: String,
    pub levels: Vec<LevelRecord>,
}

fn rate(e0: f64, e1: f64, h0: f64, h1: f64) -> f64 {
    (e0 / e1).ln() / (h0 / h1).ln()
}

impl ConvergenceReport {
    pub fn from_levels(case: &str, mut levels: Vec<LevelRecord>) -> Self {
        for i in 1..levels.len() {
            let (prev, cur) = (&levels[i - 1], &levels[i]);
            let ru = rate(prev.err_u, cur.err_u, prev.h, cur.h);
            let rv = rate(prev.err_v, cur.err_v, prev.h, cur.h);
            levels[i].rate_u = Some(ru);
            levels[i].rate_v = Some(rv);
        }
        Self {
            case: case.to_string(),
            levels,
        }
    }

    pub const CSV_HEADER: &'static str = "level,h,tau,nodes,elements,err_u,rate_u,err_v,rate_v";

    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        let opt = |r: Option<f64>| r.map(crate::output::fmt_f64).unwrap_or_default();
        for l in &self.levels {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                l.level,
                crate::output::fmt_f64(l.h),
                crate::output::fmt_f64(l.tau),
                l.nodes,
                l.elements,
                crate::output::fmt_f64(l.err_u),
                opt(l.rate_u),
                crate::output::fmt_f64(l.err_v),
                opt(l.rate_v),
            )?;
        }
        Ok(())
    }
}

/// Result of one refinement level, including the final state.
#[derive(Debug, Clone)]
pub struct LevelRun {
    pub record: LevelRecord,
    pub mesh: Mesh1D,
    pub state: StepperState,
    pub trace: Trace,
}

/// Build, assemble, interpolate the initial data, march to `T`, measure errors.
pub fn run_level(case: &MmsCase, h: f64, tau: f64, level: usize) -> Result<LevelRun, Error> {
    let mesh = Mesh1D::build_uniform(case.omega, case.collar, h)?;
    let q = QuadratureRule::gauss_legendre(4);
    let ops = assemble_nonlocal(&mesh, &case.kernel, case.bc, &q)?;
    step_count(case.t_end, tau)?;
    let stepper = Stepper::new(&mesh, &ops, case.params, tau, Diffusion::Nonlocal)?;
    let (u, v) = (case.u, case.v);
    let state0 = StepperState::from_functions(&mesh, |x| u(x, 0.0), |x| v(x, 0.0));
    let forcing = MmsForcing::new(case, &mesh, &q);
    let (state, trace) = stepper.run_to_time(state0, case.t_end, &forcing)?;
    let t = state.t;
    let err_u = l2_relative_error(&mesh, &state.u, |x| u(x, t))?;
    let err_v = l2_relative_error(&mesh, &state.v, |x| v(x, t))?;
    Ok(LevelRun {
        record: LevelRecord {
            level,
            h,
            tau,
            nodes: mesh.node_count(),
            elements: mesh.element_count(),
            err_u,
            err_v,
            rate_u: None,
            rate_v: None,
        },
        mesh,
        state,
        trace,
    })
}

/// Run every level (concurrently), keeping meshes, final states and traces.
pub fn run_levels(case: &MmsCase, levels: &[f64], tau_rule: TauRule) -> Result<Vec<LevelRun>, Error> {
    levels
        .par_iter()
        .enumerate()
        .map(|(i, &h)| run_level(case, h, tau_rule.tau(h), i + 1))
        .collect()
}

/// Run every level and compute rates between consecutive ones.
pub fn convergence_study(
    case: &MmsCase,
    levels: &[f64],
    tau_rule: TauRule,
) -> Result<ConvergenceReport, Error> {
    let runs = run_levels(case, levels, tau_rule)?;
    Ok(ConvergenceReport::from_levels(
        case.name,
        runs.into_iter().map(|r| r.record).collect(),
    ))
}
