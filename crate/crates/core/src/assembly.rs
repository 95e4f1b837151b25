//! P1 finite-element assembly of the nonlocal operator and the mass terms.
//!
//! The weak form of `-K` is `A_nl = D_γ - G` where
//!
//! * `G_ij = ∫∫ γ(x - y) φ_j(y) φ_i(x) dy dx` over the integration domain,
//! * `D_γ,ij = ∫ Γ(x) φ_i(x) φ_j(x) dx` with `Γ(x)` the kernel mass seen from `x`.
//!
//! Under Dirichlet constraints trial functions vanish outside `Ω`, so all
//! integrals are restricted to `Ω` while `Γ` is the mass over all of `ℝ`. Under
//! Neumann constraints everything lives on `Ω̃` and `Γ(x)` is clipped to `Ω̃`.
//!
//! `G` is computed with an outer Gauss loop over elements; for each outer point
//! the inner integral runs over `[x - R, x + R]` clipped to the integration
//! domain, element by element, and is split at `y = x` for kernels with a kink.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::KernelSpec;
use crate::mesh::{Interval, Mesh1D};
use crate::quadrature::QuadratureRule;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error("kernel horizon {horizon} exceeds collar width {collar}")]
    HorizonExceedsCollar { horizon: f64, collar: f64 },
    #[error("Neumann constraints need a kernel with finite horizon")]
    InfiniteHorizonNeumann,
    #[error("Dirichlet problems are posed without a collar (got width {0})")]
    CollarInDirichlet(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcMode {
    Dirichlet,
    Neumann,
}

impl BcMode {
    pub fn name(&self) -> &'static str {
        match self {
            BcMode::Dirichlet => "dirichlet",
            BcMode::Neumann => "neumann",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MassRegion {
    Omega,
    OmegaTilde,
}

/// Where the nonlocal interactions of a problem live.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonlocalDomain {
    /// Domain of the `y` integral: `Ω` (Dirichlet) or `Ω̃` (Neumann).
    pub integration: Interval,
    pub bc: BcMode,
}

impl NonlocalDomain {
    pub fn new(integration: Interval, bc: BcMode) -> Self {
        Self { integration, bc }
    }

    pub fn from_mesh(mesh: &Mesh1D, bc: BcMode) -> Self {
        let integration = match bc {
            BcMode::Dirichlet => mesh.omega(),
            BcMode::Neumann => mesh.omega_tilde(),
        };
        Self { integration, bc }
    }

    /// `Γ(x)`: total kernel mass (Dirichlet) or mass clipped to `Ω̃` (Neumann).
    pub fn gamma(&self, kernel: &KernelSpec, x: f64) -> f64 {
        match self.bc {
            BcMode::Dirichlet => kernel.total_mass(),
            BcMode::Neumann => kernel.partial_mass(x, self.integration),
        }
    }
}

/// Check the mesh/kernel/constraint combination before any assembly.
pub fn check_configuration(
    mesh: &Mesh1D,
    kernel: &KernelSpec,
    bc: BcMode,
) -> Result<(), AssemblyError> {
    match bc {
        BcMode::Dirichlet => {
            if mesh.collar_width() != 0.0 {
                return Err(AssemblyError::CollarInDirichlet(mesh.collar_width()));
            }
        }
        BcMode::Neumann => {
            let r = kernel.horizon();
            if !r.is_finite() {
                return Err(AssemblyError::InfiniteHorizonNeumann);
            }
            if r > mesh.collar_width() * (1.0 + 1e-12) {
                return Err(AssemblyError::HorizonExceedsCollar {
                    horizon: r,
                    collar: mesh.collar_width(),
                });
            }
        }
    }
    Ok(())
}

/// Linear shape functions of element `[xa, xb]` at `x`.
#[inline]
fn shape(xa: f64, xb: f64, x: f64) -> [f64; 2] {
    let s = (x - xa) / (xb - xa);
    [1.0 - s, s]
}

/// Exact P1 mass matrix over `Ω` or `Ω̃`, indexed by all mesh nodes.
pub fn assemble_mass(mesh: &Mesh1D, region: MassRegion) -> DMatrix<f64> {
    let n = mesh.node_count();
    let mut m = DMatrix::zeros(n, n);
    for (e, &[a, b]) in mesh.elements().iter().enumerate() {
        if region == MassRegion::Omega && !mesh.element_in_omega(e) {
            continue;
        }
        let h = mesh.element_length(e);
        m[(a, a)] += h / 3.0;
        m[(b, b)] += h / 3.0;
        m[(a, b)] += h / 6.0;
        m[(b, a)] += h / 6.0;
    }
    m
}

/// Standard P1 stiffness over `Ω` with natural boundary conditions.
pub fn assemble_laplacian(mesh: &Mesh1D) -> DMatrix<f64> {
    let n = mesh.node_count();
    let mut k = DMatrix::zeros(n, n);
    for (e, &[a, b]) in mesh.elements().iter().enumerate() {
        if !mesh.element_in_omega(e) {
            continue;
        }
        let inv_h = 1.0 / mesh.element_length(e);
        k[(a, a)] += inv_h;
        k[(b, b)] += inv_h;
        k[(a, b)] -= inv_h;
        k[(b, a)] -= inv_h;
    }
    k
}

/// Everything one outer element contributes, over columns `col0..col0 + len`.
struct ElementBlock {
    rows: [usize; 2],
    col0: usize,
    /// `G` rows for the two outer nodes.
    coupling: [Vec<f64>; 2],
    /// `∫ φ_i φ_i' m(x) dx` with `m(x)` the quadrature kernel mass seen from `x`.
    outer_mass: [[f64; 2]; 2],
    /// Diagonal and first off-diagonal (`(j, j + 1)`) of `∫∫ γ φ_j(y) φ_j'(y)`.
    inner_diag: Vec<f64>,
    inner_off: Vec<f64>,
}

/// Quadrature pieces of the inner integral seen from an outer point `x`:
/// `(inner element, sub-interval)`, clipped to the horizon and split at `y = x`
/// for kinked kernels.
fn inner_pieces<'a>(
    mesh: &'a Mesh1D,
    kernel: &KernelSpec,
    domain: &NonlocalDomain,
    x: f64,
) -> impl Iterator<Item = (usize, Interval)> + 'a {
    let r = kernel.horizon();
    let reach = Interval::new(
        (x - r).max(domain.integration.lo),
        (x + r).min(domain.integration.hi),
    );
    let split = kernel.has_kink();
    mesh.elements_within_horizon(x, r).flat_map(move |e| {
        let piece = mesh.element_interval(e).intersect(&reach);
        let (first, second) = match piece {
            Some(p) if split && p.lo < x && x < p.hi => {
                (Some(Interval::new(p.lo, x)), Some(Interval::new(x, p.hi)))
            }
            other => (other, None),
        };
        first.into_iter().chain(second).map(move |iv| (e, iv))
    })
}

fn element_block(
    mesh: &Mesh1D,
    kernel: &KernelSpec,
    domain: &NonlocalDomain,
    q: &QuadratureRule,
    e: usize,
) -> ElementBlock {
    let nodes = mesh.nodes();
    let [a, b] = mesh.elements()[e];
    let (xa, xb) = (nodes[a], nodes[b]);
    let cols = mesh.elements_within_horizon(0.5 * (xa + xb), kernel.horizon() + 0.5 * (xb - xa));
    let col0 = mesh.elements()[cols.start.min(mesh.element_count() - 1)][0];
    let len = cols.len() + 1;
    let mut blk = ElementBlock {
        rows: [a, b],
        col0,
        coupling: [vec![0.0; len], vec![0.0; len]],
        outer_mass: [[0.0; 2]; 2],
        inner_diag: vec![0.0; len],
        inner_off: vec![0.0; len],
    };
    for (x, wx) in q.mapped(Interval::new(xa, xb)) {
        let px = shape(xa, xb, x);
        let mut mass = 0.0;
        for (ei, piece) in inner_pieces(mesh, kernel, domain, x) {
            let [c, d] = mesh.elements()[ei];
            let (yc, yd) = (nodes[c], nodes[d]);
            let (jc, jd) = (c - col0, d - col0);
            for (y, wy) in q.mapped(piece) {
                let g = wx * wy * kernel.eval(x - y);
                let py = shape(yc, yd, y);
                mass += g;
                for (row, &p) in blk.coupling.iter_mut().zip(&px) {
                    row[jc] += g * p * py[0];
                    row[jd] += g * p * py[1];
                }
                blk.inner_diag[jc] += g * py[0] * py[0];
                blk.inner_diag[jd] += g * py[1] * py[1];
                blk.inner_off[jc] += g * py[0] * py[1];
            }
        }
        for r in 0..2 {
            for s in 0..2 {
                blk.outer_mass[r][s] += mass * px[r] * px[s];
            }
        }
    }
    blk
}

/// Raw pair-quadrature sums over the integration domain:
/// `(G, D_x, D_y)` with `G` unsymmetrized, `D_x = ∫ φ_i φ_j m(x) dx` and
/// `D_y = ∫ φ_i φ_j m(y) dy` both using the quadrature kernel mass.
fn assemble_pair_terms(
    mesh: &Mesh1D,
    kernel: &KernelSpec,
    bc: BcMode,
    q: &QuadratureRule,
) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let domain = NonlocalDomain::from_mesh(mesh, bc);
    let blocks: Vec<ElementBlock> = (0..mesh.element_count())
        .into_par_iter()
        .filter(|&e| domain.integration.intersect(&mesh.element_interval(e)).is_some())
        .map(|e| element_block(mesh, kernel, &domain, q, e))
        .collect();

    let n = mesh.node_count();
    let mut g = DMatrix::zeros(n, n);
    let mut dx = DMatrix::zeros(n, n);
    let mut dy = DMatrix::zeros(n, n);
    for blk in &blocks {
        for (r, &row) in blk.rows.iter().enumerate() {
            for (k, v) in blk.coupling[r].iter().enumerate() {
                g[(row, blk.col0 + k)] += v;
            }
            for (s, &col) in blk.rows.iter().enumerate() {
                dx[(row, col)] += blk.outer_mass[r][s];
            }
        }
        for k in 0..blk.inner_diag.len() {
            let j = blk.col0 + k;
            dy[(j, j)] += blk.inner_diag[k];
            if j + 1 < n {
                dy[(j, j + 1)] += blk.inner_off[k];
                dy[(j + 1, j)] += blk.inner_off[k];
            }
        }
    }
    (g, dx, dy)
}

/// Kernel coupling matrix `G`, symmetrized.
pub fn assemble_kernel_coupling(
    mesh: &Mesh1D,
    kernel: &KernelSpec,
    bc: BcMode,
    q: &QuadratureRule,
) -> Result<DMatrix<f64>, AssemblyError> {
    check_configuration(mesh, kernel, bc)?;
    let (g, _, _) = assemble_pair_terms(mesh, kernel, bc, q);
    Ok(symmetrize(g))
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

/// `D_γ`: mass matrix weighted by the closed-form `Γ(x)`.
pub fn assemble_gamma_mass(
    mesh: &Mesh1D,
    kernel: &KernelSpec,
    bc: BcMode,
    q: &QuadratureRule,
) -> Result<DMatrix<f64>, AssemblyError> {
    check_configuration(mesh, kernel, bc)?;
    let domain = NonlocalDomain::from_mesh(mesh, bc);
    if bc == BcMode::Dirichlet {
        return Ok(assemble_mass(mesh, MassRegion::Omega) * kernel.total_mass());
    }
    let n = mesh.node_count();
    let mut d = DMatrix::zeros(n, n);
    let nodes = mesh.nodes();
    for &[a, b] in mesh.elements() {
        let (xa, xb) = (nodes[a], nodes[b]);
        for (x, w) in q.mapped(Interval::new(xa, xb)) {
            let gw = w * domain.gamma(kernel, x);
            let [pa, pb] = shape(xa, xb, x);
            d[(a, a)] += gw * pa * pa;
            d[(b, b)] += gw * pb * pb;
            d[(a, b)] += gw * pa * pb;
            d[(b, a)] += gw * pa * pb;
        }
    }
    Ok(d)
}

/// All matrices needed by the time steppers.
#[derive(Debug, Clone)]
pub struct AssembledOperators {
    pub bc: BcMode,
    /// `∫_Ω φ_i φ_j`.
    pub mass_omega: DMatrix<f64>,
    /// `G`.
    pub coupling: DMatrix<f64>,
    /// `D_γ`. Dirichlet: `Γ_∞ M_Ω`. Neumann: the `Γ`-weighted mass whose `Γ` is
    /// the same pair quadrature as `G`, so that `D_γ 1 = G 1` to rounding.
    pub gamma_mass: DMatrix<f64>,
    /// `A_nl = D_γ - G`, the matrix of `-K`.
    pub nonlocal: DMatrix<f64>,
    /// P1 stiffness over `Ω` (local reference only).
    pub laplacian: DMatrix<f64>,
}

/// Assemble `A_nl` and its parts.
///
/// For Neumann constraints the matrix is the Galerkin matrix of
/// `½∫∫ γ (u(y) - u(x)) (φ(y) - φ(x))` under the pair quadrature, i.e.
/// `A_nl = ½(D_x + D_y) - ½(G + Gᵀ)`: exactly symmetric, and `A_nl 1 = 0` up to
/// rounding whatever the quadrature error.
pub fn assemble_nonlocal(
    mesh: &Mesh1D,
    kernel: &KernelSpec,
    bc: BcMode,
    q: &QuadratureRule,
) -> Result<AssembledOperators, AssemblyError> {
    check_configuration(mesh, kernel, bc)?;
    let (g, dx, dy) = assemble_pair_terms(mesh, kernel, bc, q);
    let coupling = symmetrize(g);
    let mass_omega = assemble_mass(mesh, MassRegion::Omega);
    let gamma_mass = match bc {
        BcMode::Dirichlet => &mass_omega * kernel.total_mass(),
        BcMode::Neumann => (dx + dy) * 0.5,
    };
    let nonlocal = &gamma_mass - &coupling;
    Ok(AssembledOperators {
        bc,
        mass_omega,
        coupling,
        gamma_mass,
        nonlocal,
        laplacian: assemble_laplacian(mesh),
    })
}

/// Operators for the local model: only mass and stiffness are meaningful.
pub fn assemble_local(mesh: &Mesh1D) -> AssembledOperators {
    let n = mesh.node_count();
    let laplacian = assemble_laplacian(mesh);
    AssembledOperators {
        bc: BcMode::Neumann,
        mass_omega: assemble_mass(mesh, MassRegion::Omega),
        coupling: DMatrix::zeros(n, n),
        gamma_mass: DMatrix::zeros(n, n),
        nonlocal: laplacian.clone(),
        laplacian,
    }
}

/// Composite rule used for strong-form evaluations of `K`.
#[derive(Debug, Clone)]
pub struct StrongQuadrature {
    pub rule: QuadratureRule,
    pub max_panel: f64,
    /// Extra points where the integrand may have kinks (e.g. mesh nodes).
    pub breakpoints: Vec<f64>,
}

impl StrongQuadrature {
    /// 8-point panels no wider than `0.01·|domain|` or half the kernel length scale.
    pub fn for_domain(domain: Interval, kernel: &KernelSpec) -> Self {
        Self {
            rule: QuadratureRule::gauss_legendre(8),
            max_panel: (0.01 * domain.length()).min(0.5 * kernel.length_scale()),
            breakpoints: Vec::new(),
        }
    }

    pub fn with_breakpoints(mut self, mut pts: Vec<f64>) -> Self {
        pts.sort_by(f64::total_cmp);
        self.breakpoints = pts;
        self
    }
}

/// `Ku(x) = ∫_J γ(x - y) u(y) dy - Γ(x) u(x)` for a function `u` defined on `J`.
///
/// Evaluated as `∫_J γ (u(y) - u(x)) dy - u(x) (Γ(x) - ∫_J γ)` to avoid the
/// cancellation between the two large terms; the second bracket is exact.
pub fn eval_k_strong(
    u: impl Fn(f64) -> f64,
    x: f64,
    kernel: &KernelSpec,
    domain: &NonlocalDomain,
    sq: &StrongQuadrature,
) -> f64 {
    let r = kernel.horizon();
    let j = domain.integration;
    let ux = u(x);
    let reach = Interval::new((x - r).max(j.lo), (x + r).min(j.hi));
    let mut cuts = vec![reach.lo];
    if reach.lo < x && x < reach.hi {
        cuts.push(x);
    }
    let lo = sq.breakpoints.partition_point(|&p| p <= reach.lo);
    let hi = sq.breakpoints.partition_point(|&p| p < reach.hi);
    cuts.extend_from_slice(&sq.breakpoints[lo..hi]);
    cuts.push(reach.hi);
    cuts.sort_by(f64::total_cmp);
    let mut integral = 0.0;
    for w in cuts.windows(2) {
        if w[1] > w[0] {
            integral += sq
                .rule
                .integrate_composite(Interval::new(w[0], w[1]), sq.max_panel, |y| {
                    kernel.eval(x - y) * (u(y) - ux)
                });
        }
    }
    let exterior = domain.gamma(kernel, x) - kernel.partial_mass(x, j);
    integral - ux * exterior
}

/// `∫ q φ_i` over the elements of `Ω̃` with the given rule.
pub fn load_vector(mesh: &Mesh1D, q: &QuadratureRule, f: impl Fn(f64) -> f64) -> DVector<f64> {
    let mut l = DVector::zeros(mesh.node_count());
    let nodes = mesh.nodes();
    for &[a, b] in mesh.elements() {
        let (xa, xb) = (nodes[a], nodes[b]);
        for (x, w) in q.mapped(Interval::new(xa, xb)) {
            let v = w * f(x);
            let [pa, pb] = shape(xa, xb, x);
            l[a] += v * pa;
            l[b] += v * pb;
        }
    }
    l
}

/// Dense dump: a `rows cols` header, then one row per line.
pub fn dump_matrix(m: &DMatrix<f64>, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{} {}", m.nrows(), m.ncols())?;
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.16e}", m[(i, j)])).collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Region;

    fn unit_mesh(h: f64) -> Mesh1D {
        Mesh1D::build_uniform(Interval::new(0.0, 1.0), 0.0, h).unwrap()
    }

    fn max_abs(m: &DMatrix<f64>) -> f64 {
        m.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    }

    #[test]
    fn single_element_mass() {
        let m = assemble_mass(&unit_mesh(1.0), MassRegion::Omega);
        let expect = DMatrix::from_row_slice(2, 2, &[1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0]);
        assert!((m - expect).norm() < 1e-15);
    }

    #[test]
    fn omega_mass_vanishes_on_collar_nodes() {
        let mesh = Mesh1D::build_uniform(Interval::new(-8.0, 8.0), 2.0, 0.5).unwrap();
        let m = assemble_mass(&mesh, MassRegion::Omega);
        for i in 0..mesh.node_count() {
            let row_zero = (0..mesh.node_count()).all(|j| m[(i, j)] == 0.0);
            let pure_collar = mesh.node_region(i) == Region::Collar;
            assert_eq!(row_zero, pure_collar, "node {i}");
        }
        let full = assemble_mass(&mesh, MassRegion::OmegaTilde);
        let total: f64 = full.iter().sum();
        assert!((total - 20.0).abs() < 1e-12);
        for i in 0..mesh.node_count() {
            let support = if i == 0 || i + 1 == mesh.node_count() { 0.25 } else { 0.5 };
            let rs: f64 = full.row(i).iter().sum();
            assert!((rs - support).abs() < 1e-14);
        }
    }

    #[test]
    fn laplacian_rows() {
        let k = assemble_laplacian(&unit_mesh(1.0));
        assert_eq!(k, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
        let h = 0.25;
        let k = assemble_laplacian(&unit_mesh(h));
        assert!((k[(2, 1)] + 1.0 / h).abs() < 1e-12);
        assert!((k[(2, 2)] - 2.0 / h).abs() < 1e-12);
        assert!((k[(2, 3)] + 1.0 / h).abs() < 1e-12);
        let ones = DVector::from_element(5, 1.0);
        assert!((k * ones).amax() < 1e-12);
    }

    #[test]
    fn neumann_requires_compact_support_and_wide_collar() {
        let mesh = Mesh1D::build_uniform(Interval::new(-8.0, 8.0), 2.0, 0.5).unwrap();
        let q = QuadratureRule::gauss_legendre(4);
        assert_eq!(
            assemble_kernel_coupling(&mesh, &KernelSpec::gaussian(), BcMode::Neumann, &q)
                .unwrap_err(),
            AssemblyError::InfiniteHorizonNeumann
        );
        let wide = KernelSpec::dispersal_exp(3.0, 2.5);
        assert!(matches!(
            assemble_kernel_coupling(&mesh, &wide, BcMode::Neumann, &q),
            Err(AssemblyError::HorizonExceedsCollar { .. })
        ));
        let k = KernelSpec::truncated_growing_exp(0.5, 2.0);
        assert!(assemble_kernel_coupling(&mesh, &k, BcMode::Dirichlet, &q).is_err());
    }

    #[test]
    fn dirichlet_gamma_mass_is_scaled_mass() {
        let mesh = unit_mesh(0.25);
        let q = QuadratureRule::gauss_legendre(4);
        let k = KernelSpec::gaussian();
        let d = assemble_gamma_mass(&mesh, &k, BcMode::Dirichlet, &q).unwrap();
        let m = assemble_mass(&mesh, MassRegion::Omega);
        assert!((d - m * std::f64::consts::PI.sqrt()).amax() < 1e-15);
    }

    #[test]
    fn neumann_gamma_values() {
        let k = KernelSpec::dispersal_exp(3.0, 5.0);
        let mesh = Mesh1D::build_uniform(Interval::new(-40.0, 40.0), 5.0, 0.5).unwrap();
        let dom = NonlocalDomain::from_mesh(&mesh, BcMode::Neumann);
        assert!((dom.gamma(&k, 0.0) - 1.0).abs() < 1e-15);
        assert!((dom.gamma(&k, 45.0) - 0.5).abs() < 1e-15);
        assert!((dom.gamma(&k, -45.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn neumann_operator_annihilates_constants() {
        let mesh = Mesh1D::build_uniform(Interval::new(-8.0, 8.0), 2.0, 0.5).unwrap();
        let k = KernelSpec::truncated_growing_exp(0.5, 2.0);
        let q = QuadratureRule::gauss_legendre(4);
        let ops = assemble_nonlocal(&mesh, &k, BcMode::Neumann, &q).unwrap();
        let ones = DVector::from_element(mesh.node_count(), 1.0);
        let r = (&ops.nonlocal * ones).amax();
        assert!(r <= 1e-10 * max_abs(&ops.nonlocal), "{r}");
    }

    #[test]
    fn dirichlet_operator_is_positive_definite() {
        let mesh = unit_mesh(0.25);
        let q = QuadratureRule::gauss_legendre(4);
        let ops = assemble_nonlocal(&mesh, &KernelSpec::gaussian(), BcMode::Dirichlet, &q).unwrap();
        let eig = ops.nonlocal.clone().symmetric_eigen();
        assert!(eig.eigenvalues.min() > 0.0);
        let m = assemble_mass(&mesh, MassRegion::Omega);
        let identity = &m * std::f64::consts::PI.sqrt() - &ops.coupling;
        assert!((identity - &ops.nonlocal).amax() < 1e-15);
    }

    #[test]
    fn nearly_constant_kernel_is_separable() {
        // a → 0 makes the kernel constant (= A) on [-R, R]: G_ij = A (∫φ_i)(∫φ_j) = A/4
        let k = KernelSpec::dispersal_exp(1e-10, 10.0);
        let amp = KernelSpec::dispersal_amplitude(1e-10, 10.0);
        let q = QuadratureRule::gauss_legendre(4);
        let g = assemble_kernel_coupling(&unit_mesh(1.0), &k, BcMode::Dirichlet, &q).unwrap();
        for v in g.iter() {
            assert!((v / amp - 0.25).abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn growing_kernel_single_element_matches_tensor_quadrature() {
        let k = KernelSpec::truncated_growing_exp(1.0, 10.0);
        let mesh = unit_mesh(1.0);
        let q = QuadratureRule::gauss_legendre(6);
        let g = assemble_kernel_coupling(&mesh, &k, BcMode::Dirichlet, &q).unwrap();
        // nested composite Gauss, inner integral split at the kink y = x
        let fine = QuadratureRule::gauss_legendre(20);
        let mut expect = [[0.0; 2]; 2];
        for px in 0..64 {
            let ix = Interval::new(px as f64 / 64.0, (px + 1) as f64 / 64.0);
            for (x, wx) in fine.mapped(ix) {
                let phx = [1.0 - x, x];
                for side in [Interval::new(0.0, x), Interval::new(x, 1.0)] {
                    for (y, wy) in fine.mapped(side) {
                        let phy = [1.0 - y, y];
                        for i in 0..2 {
                            for j in 0..2 {
                                expect[i][j] += wx * wy * k.eval(x - y) * phx[i] * phy[j];
                            }
                        }
                    }
                }
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                assert!((g[(i, j)] - expect[i][j]).abs() < 1e-10, "{i}{j} {} {}", g[(i, j)], expect[i][j]);
            }
        }
    }

    #[test]
    fn matrix_dump_format() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let mut out = Vec::new();
        dump_matrix(&m, &mut out).unwrap();
        let s = String::from_utf8(out).unwrap();
        let mut lines = s.lines();
        assert_eq!(lines.next(), Some("2 2"));
        let row: Vec<f64> = lines.next().unwrap().split(' ').map(|v| v.parse().unwrap()).collect();
        assert_eq!(row, vec![1.0, 2.0]);
    }

    #[test]
    fn strong_form_kills_constants_under_neumann() {
        let k = KernelSpec::truncated_growing_exp(0.5, 2.0);
        let dom = NonlocalDomain::new(Interval::new(-10.0, 10.0), BcMode::Neumann);
        let sq = StrongQuadrature::for_domain(dom.integration, &k);
        for &x in &[-10.0, -9.3, 0.0, 7.9, 10.0] {
            assert!(eval_k_strong(|_| 3.5, x, &k, &dom, &sq).abs() < 1e-13);
        }
    }
}
