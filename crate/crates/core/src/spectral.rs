//! Trigonometric Galerkin solver for the Dirichlet problem.
//!
//! On `Ω = [c - L, c + L]` the basis consists of the odd harmonics
//! `cos((2n-1)π(x-c)/(2L))` and `sin((2n-1)π(x-c)/(2L))`, normalized by `1/√L`,
//! and one constant-like mode. The cosines are not orthogonal to the constant, so
//! that mode is the constant with its projection onto the retained cosines
//! removed, then normalized. With `N = 1` it is exactly `1/√(2L)`.
//!
//! Integrals over `Ω` use a fixed composite Gauss grid. The mass matrix is the
//! identity, so each BDF1 step solves two dense `N × N` systems that are
//! factored once.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::assembly::BcMode;
use crate::kernel::KernelSpec;
use crate::mesh::{Interval, Mesh1D};
use crate::mms::MmsCase;
use crate::quadrature::QuadratureRule;
use crate::stepper::PhysicalParams;
use crate::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    omega: Interval,
    modes: usize,
    /// `⟨1, ĉ_n⟩` for the retained cosines.
    const_coeffs: Vec<f64>,
    const_norm: f64,
}

impl SpectralBasis {
    /// `modes` must be odd: the constant plus `(modes - 1) / 2` cosine/sine pairs.
    pub fn new(omega: Interval, modes: usize) -> Result<Self, Error> {
        if modes.is_multiple_of(2) {
            return Err(Error::Invalid(format!(
                "spectral mode count must be odd and positive, got {modes}"
            )));
        }
        let l = 0.5 * omega.length();
        let pairs = (modes - 1) / 2;
        let const_coeffs: Vec<f64> = (1..=pairs)
            .map(|n| {
                let m = (2 * n - 1) as f64;
                let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
                sign * 4.0 * l / (m * PI) / l.sqrt()
            })
            .collect();
        let residual = 2.0 * l - const_coeffs.iter().map(|b| b * b).sum::<f64>();
        Ok(Self {
            omega,
            modes,
            const_coeffs,
            const_norm: residual.sqrt(),
        })
    }

    pub fn len(&self) -> usize {
        self.modes
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn omega(&self) -> Interval {
        self.omega
    }

    fn half_width(&self) -> f64 {
        0.5 * self.omega.length()
    }

    fn harmonic(&self, n: usize, x: f64) -> f64 {
        let l = self.half_width();
        (2 * n - 1) as f64 * PI * (x - self.omega.midpoint()) / (2.0 * l)
    }

    /// Mode ordering: `0` constant, `2n - 1` cosine `n`, `2n` sine `n`.
    pub fn eval(&self, k: usize, x: f64) -> f64 {
        assert!(k < self.modes, "mode {k} out of range");
        let s = 1.0 / self.half_width().sqrt();
        if k == 0 {
            let proj: f64 = self
                .const_coeffs
                .iter()
                .enumerate()
                .map(|(i, b)| b * s * self.harmonic(i + 1, x).cos())
                .sum();
            (1.0 - proj) / self.const_norm
        } else if k % 2 == 1 {
            s * self.harmonic(k.div_ceil(2), x).cos()
        } else {
            s * self.harmonic(k / 2, x).sin()
        }
    }

    /// All modes at `x`.
    pub fn eval_all(&self, x: f64) -> Vec<f64> {
        (0..self.modes).map(|k| self.eval(k, x)).collect()
    }

    /// `Σ d_k φ_k(x)`.
    pub fn reconstruct(&self, coeffs: &[f64], x: f64) -> f64 {
        self.eval_all(x).iter().zip(coeffs).map(|(p, d)| p * d).sum()
    }
}

/// Composite Gauss grid on `Ω` with the basis tabulated at its points.
#[derive(Debug, Clone)]
pub struct SpectralGrid {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    /// `points × modes`.
    pub phi: DMatrix<f64>,
}

impl SpectralGrid {
    pub fn new(basis: &SpectralBasis, panels: usize, rule: &QuadratureRule) -> Self {
        let om = basis.omega();
        let w = om.length() / panels as f64;
        let mut points = Vec::with_capacity(panels * rule.len());
        let mut weights = Vec::with_capacity(panels * rule.len());
        for p in 0..panels {
            let lo = om.lo + p as f64 * w;
            for (x, wt) in rule.mapped(Interval::new(lo, lo + w)) {
                points.push(x);
                weights.push(wt);
            }
        }
        let phi = DMatrix::from_fn(points.len(), basis.len(), |i, k| basis.eval(k, points[i]));
        Self {
            points,
            weights,
            phi,
        }
    }

    /// Default resolution: 8-point panels, at least 128 and about 4 per half-wavelength of the top mode.
    pub fn for_basis(basis: &SpectralBasis) -> Self {
        let panels = (2 * basis.len()).max(128);
        Self::new(basis, panels, &QuadratureRule::gauss_legendre(8))
    }

    /// `⟨g, φ_k⟩` for every mode.
    pub fn project_values(&self, g: &[f64]) -> DVector<f64> {
        let wg = DVector::from_iterator(g.len(), g.iter().zip(&self.weights).map(|(g, w)| g * w));
        self.phi.tr_mul(&wg)
    }

    pub fn project(&self, g: impl Fn(f64) -> f64) -> DVector<f64> {
        let vals: Vec<f64> = self.points.iter().map(|&x| g(x)).collect();
        self.project_values(&vals)
    }

    /// Field values at the grid points.
    pub fn values(&self, coeffs: &DVector<f64>) -> DVector<f64> {
        &self.phi * coeffs
    }

    pub fn gram(&self) -> DMatrix<f64> {
        let w = DMatrix::from_diagonal(&DVector::from_column_slice(&self.weights));
        self.phi.transpose() * w * &self.phi
    }
}

/// `B_kj = Γ δ_kj - ∬_{Ω×Ω} γ(x - y) φ_j(y) φ_k(x)`.
pub fn assemble_spectral(kernel: &KernelSpec, grid: &SpectralGrid) -> DMatrix<f64> {
    let n = grid.points.len();
    let modes = grid.phi.ncols();
    let mut wphi = grid.phi.clone();
    for i in 0..n {
        wphi.row_mut(i).scale_mut(grid.weights[i]);
    }
    let kmat = DMatrix::from_fn(n, n, |i, j| kernel.eval(grid.points[i] - grid.points[j]));
    let coupling = wphi.transpose() * (kmat * &wphi);
    let mut b = DMatrix::identity(modes, modes) * kernel.total_mass() - coupling;
    // remove quadrature asymmetry from the tabulated products
    b = (&b + b.transpose()) * 0.5;
    b
}

/// Data for one spectral run.
pub struct SpectralProblem<'a> {
    pub basis: &'a SpectralBasis,
    pub grid: &'a SpectralGrid,
    pub b: &'a DMatrix<f64>,
    pub params: PhysicalParams,
    pub tau: f64,
    pub t_end: f64,
    /// Manufactured case supplying initial data and sources; `None` means an
    /// unforced run from `initial`.
    pub case: Option<&'a MmsCase>,
    pub initial: (DVector<f64>, DVector<f64>),
}

#[derive(Debug, Clone)]
pub struct SpectralTrajectory {
    pub times: Vec<f64>,
    pub u: Vec<DVector<f64>>,
    pub v: Vec<DVector<f64>>,
}

impl SpectralTrajectory {
    pub fn last(&self) -> (&DVector<f64>, &DVector<f64>) {
        (self.u.last().unwrap(), self.v.last().unwrap())
    }
}

/// March the Galerkin system with the same splitting as the FEM stepper:
/// linear terms implicit, `u v²` explicit, sources at `t_{n+1}`.
pub fn solve_spectral(problem: &SpectralProblem) -> Result<SpectralTrajectory, Error> {
    let steps = crate::stepper::step_count(problem.t_end, problem.tau)?;
    if let Some(case) = problem.case {
        if case.bc != BcMode::Dirichlet {
            return Err(Error::Invalid("the spectral solver is Dirichlet-only".into()));
        }
    }
    problem.params.validate()?;
    let p = &problem.params;
    let modes = problem.basis.len();
    let inv_tau = 1.0 / problem.tau;
    let id = DMatrix::<f64>::identity(modes, modes);
    let s_u = &id * (inv_tau + p.f) + problem.b * (p.d_u * p.scale_c);
    let s_v = &id * (inv_tau + p.f + p.kappa) + problem.b * (p.d_v * p.scale_c);
    let chol_u = s_u
        .cholesky()
        .ok_or_else(|| Error::Invalid("spectral u-system is not positive definite".into()))?;
    let chol_v = s_v
        .cholesky()
        .ok_or_else(|| Error::Invalid("spectral v-system is not positive definite".into()))?;

    let grid = problem.grid;
    let f_proj = grid.project(|_| p.f);
    let sq = problem.case.map(|c| c.source_quadrature());

    let (mut du, mut dv) = problem.initial.clone();
    let mut traj = SpectralTrajectory {
        times: vec![0.0],
        u: vec![du.clone()],
        v: vec![dv.clone()],
    };
    for n in 0..steps {
        let t_next = (n + 1) as f64 * problem.tau;
        let uh = grid.values(&du);
        let vh = grid.values(&dv);
        let nl: Vec<f64> = uh.iter().zip(vh.iter()).map(|(u, v)| u * v * v).collect();
        let nl = grid.project_values(&nl);
        let mut ru = &du * inv_tau + &f_proj - &nl;
        let mut rv = &dv * inv_tau + &nl;
        if let (Some(case), Some(sq)) = (problem.case, sq.as_ref()) {
            let q: Vec<(f64, f64)> = grid
                .points
                .iter()
                .map(|&x| case.source_terms(x, t_next, sq))
                .collect();
            let qu: Vec<f64> = q.iter().map(|q| q.0).collect();
            let qv: Vec<f64> = q.iter().map(|q| q.1).collect();
            ru += grid.project_values(&qu);
            rv += grid.project_values(&qv);
        }
        du = chol_u.solve(&ru);
        dv = chol_v.solve(&rv);
        if du.iter().chain(dv.iter()).any(|x| !x.is_finite()) {
            return Err(crate::stepper::StepError::NonFiniteState { step: n + 1 }.into());
        }
        traj.times.push(t_next);
        traj.u.push(du.clone());
        traj.v.push(dv.clone());
    }
    Ok(traj)
}

/// Run a Dirichlet manufactured case spectrally from the projected initial data.
pub fn solve_case_spectral(
    case: &MmsCase,
    modes: usize,
    tau: f64,
) -> Result<(SpectralBasis, SpectralTrajectory), Error> {
    let basis = SpectralBasis::new(case.omega, modes)?;
    let grid = SpectralGrid::for_basis(&basis);
    let b = assemble_spectral(&case.kernel, &grid);
    let (u, v) = (case.u, case.v);
    let initial = (grid.project(|x| u(x, 0.0)), grid.project(|x| v(x, 0.0)));
    let traj = solve_spectral(&SpectralProblem {
        basis: &basis,
        grid: &grid,
        b: &b,
        params: case.params,
        tau,
        t_end: case.t_end,
        case: Some(case),
        initial,
    })?;
    Ok((basis, traj))
}

/// `‖u_h - u_spec‖_{L²(Ω)}` with 5-point Gauss per FEM element of `Ω`.
pub fn fem_spectral_difference(
    mesh: &Mesh1D,
    fem: &[f64],
    basis: &SpectralBasis,
    coeffs: &[f64],
) -> f64 {
    let rule = QuadratureRule::gauss_legendre(5);
    let nodes = mesh.nodes();
    let mut sum = 0.0;
    for (e, &[a, b]) in mesh.elements().iter().enumerate() {
        if !mesh.element_in_omega(e) {
            continue;
        }
        let (xa, xb) = (nodes[a], nodes[b]);
        for (x, w) in rule.mapped(Interval::new(xa, xb)) {
            let s = (x - xa) / (xb - xa);
            let d = fem[a] * (1.0 - s) + fem[b] * s - basis.reconstruct(coeffs, x);
            sum += w * d * d;
        }
    }
    sum.sqrt()
}

/// One joint FEM/spectral comparison of `u` at `T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleComparison {
    pub h: f64,
    pub tau: f64,
    pub modes: usize,
    pub difference_u: f64,
    pub difference_v: f64,
}

pub fn compare_with_fem(
    case: &MmsCase,
    h: f64,
    tau: f64,
    modes: usize,
) -> Result<OracleComparison, Error> {
    let fem = crate::mms::run_level(case, h, tau, 1)?;
    let (basis, traj) = solve_case_spectral(case, modes, tau)?;
    let (du, dv) = traj.last();
    Ok(OracleComparison {
        h,
        tau,
        modes,
        difference_u: fem_spectral_difference(&fem.mesh, &fem.state.u, &basis, du.as_slice()),
        difference_v: fem_spectral_difference(&fem.mesh, &fem.state.v, &basis, dv.as_slice()),
    })
}
