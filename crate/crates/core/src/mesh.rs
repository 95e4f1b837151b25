//! Uniform P1 meshes over the extended domain `Ω̃ = Ω ∪ Ω₀`.
//!
//! The physical domain `Ω = [x_lo, x_hi]` is padded on both sides by a collar of
//! width `collar_width` (zero for Dirichlet problems). Nodes on `∂Ω` belong to the
//! interior and carry unknowns.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance used when checking that a spacing tiles an interval.
const TILING_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("spacing h = {h} does not tile a length of {length}")]
    NonDivisibleSpacing { h: f64, length: f64 },
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("invalid mesh parameter: {0}")]
    InvalidParameter(String),
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Intersection, or `None` when the overlap has zero length.
    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (hi > lo).then_some(Interval { lo, hi })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    Interior,
    Collar,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    nodes: Vec<f64>,
    elements: Vec<[usize; 2]>,
    omega: Interval,
    collar_width: f64,
    node_region: Vec<Region>,
    h: f64,
}

/// Number of cells of width `h` in `length`, or an error if `h` does not tile it.
fn cell_count(length: f64, h: f64) -> Result<usize, MeshError> {
    if length == 0.0 {
        return Ok(0);
    }
    let n = (length / h).round();
    if n < 1.0 || ((n * h - length).abs() > TILING_TOL * length) {
        return Err(MeshError::NonDivisibleSpacing { h, length });
    }
    Ok(n as usize)
}

/// Check that `h` tiles both `Ω` and the collar, as [`Mesh1D::build_uniform`] requires.
pub fn check_spacing(omega: Interval, collar_width: f64, h: f64) -> Result<(), MeshError> {
    cell_count(omega.length(), h)?;
    cell_count(collar_width, h)?;
    Ok(())
}

impl Mesh1D {
    /// Uniform mesh with element length `h` on `[x_lo - collar, x_hi + collar]`.
    ///
    /// Nodes land exactly on `x_lo`, `x_hi` and on both ends of the collar.
    pub fn build_uniform(omega: Interval, collar_width: f64, h: f64) -> Result<Self, MeshError> {
        if !(omega.hi > omega.lo) || !omega.lo.is_finite() || !omega.hi.is_finite() {
            return Err(MeshError::InvalidInterval {
                lo: omega.lo,
                hi: omega.hi,
            });
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(MeshError::InvalidParameter(format!("h must be positive, got {h}")));
        }
        if !(collar_width >= 0.0) || !collar_width.is_finite() {
            return Err(MeshError::InvalidParameter(format!(
                "collar width must be nonnegative, got {collar_width}"
            )));
        }
        let n_int = cell_count(omega.length(), h)?;
        let n_col = cell_count(collar_width, h)?;

        let left = omega.lo - collar_width;
        let mut nodes = Vec::with_capacity(n_int + 2 * n_col + 1);
        for i in 0..n_col {
            nodes.push(left + collar_width * i as f64 / n_col as f64);
        }
        for i in 0..n_int {
            nodes.push(omega.lo + omega.length() * i as f64 / n_int as f64);
        }
        nodes.push(omega.hi);
        for i in 1..=n_col {
            nodes.push(omega.hi + collar_width * i as f64 / n_col as f64);
        }

        let elements = (0..nodes.len() - 1).map(|e| [e, e + 1]).collect();
        let node_region = nodes
            .iter()
            .map(|&x| {
                if omega.contains(x) {
                    Region::Interior
                } else {
                    Region::Collar
                }
            })
            .collect();
        let h = nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0_f64, f64::max);

        Ok(Self {
            nodes,
            elements,
            omega,
            collar_width,
            node_region,
            h,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn elements(&self) -> &[[usize; 2]] {
        &self.elements
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    pub fn omega(&self) -> Interval {
        self.omega
    }

    pub fn collar_width(&self) -> f64 {
        self.collar_width
    }

    /// The extended domain `Ω̃`.
    pub fn omega_tilde(&self) -> Interval {
        Interval::new(self.nodes[0], self.nodes[self.nodes.len() - 1])
    }

    pub fn node_region(&self, i: usize) -> Region {
        self.node_region[i]
    }

    pub fn node_regions(&self) -> &[Region] {
        &self.node_region
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn element_interval(&self, e: usize) -> Interval {
        let [a, b] = self.elements[e];
        Interval::new(self.nodes[a], self.nodes[b])
    }

    pub fn element_length(&self, e: usize) -> f64 {
        self.element_interval(e).length()
    }

    /// True when the element lies inside `Ω` (both end nodes interior).
    pub fn element_in_omega(&self, e: usize) -> bool {
        let [a, b] = self.elements[e];
        self.node_region[a] == Region::Interior && self.node_region[b] == Region::Interior
    }

    /// Elements whose closure meets `[x - radius, x + radius] ∩ Ω̃` in a set of
    /// positive length. `radius` may be `f64::INFINITY`.
    ///
    /// The result is always a contiguous, increasing range of element indices.
    pub fn elements_within_horizon(&self, x: f64, radius: f64) -> std::ops::Range<usize> {
        let ne = self.elements.len();
        if radius.is_infinite() {
            return 0..ne;
        }
        let lo = x - radius;
        let hi = x + radius;
        // first element whose right node lies strictly right of `lo`
        let start = self.nodes[1..].partition_point(|&xr| xr <= lo);
        // first element whose left node is at or beyond `hi`
        let end = self.nodes[..ne].partition_point(|&xl| xl < hi);
        start.min(end)..end
    }

    /// Index of the element containing `x` (left-closed, last element right-closed).
    pub fn locate(&self, x: f64) -> Option<usize> {
        let dom = self.omega_tilde();
        if !dom.contains(x) {
            return None;
        }
        let e = self.nodes[1..].partition_point(|&xr| xr < x);
        Some(e.min(self.elements.len() - 1))
    }

    /// Evaluate the P1 interpolant with nodal `coeffs` at `x ∈ Ω̃`.
    pub fn interpolate(&self, coeffs: &[f64], x: f64) -> f64 {
        match self.locate(x) {
            Some(e) => {
                let [a, b] = self.elements[e];
                let (xa, xb) = (self.nodes[a], self.nodes[b]);
                let s = (x - xa) / (xb - xa);
                coeffs[a] * (1.0 - s) + coeffs[b] * s
            }
            None => 0.0,
        }
    }

    /// Nodal interpolant of `f`.
    pub fn nodal_values(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&x| f(x)).collect()
    }

    /// Indices of nodes inside `Ω`.
    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| self.node_region[i] == Region::Interior)
    }
}
