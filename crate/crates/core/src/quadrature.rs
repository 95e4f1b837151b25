//! Gauss–Legendre rules on the reference interval `[-1, 1]`.

use std::f64::consts::PI;

use crate::mesh::Interval;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    points: Vec<f64>,
    weights: Vec<f64>,
    order: usize,
}

impl QuadratureRule {
    /// `n`-point Gauss–Legendre rule, exact for polynomials of degree `2n - 1`.
    ///
    /// Nodes are found by Newton iteration on `P_n` from Chebyshev-like guesses.
    pub fn gauss_legendre(n: usize) -> Self {
        assert!(n >= 1, "a quadrature rule needs at least one point");
        let mut points = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            points[i] = -x;
            points[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            points[n / 2] = 0.0;
        }
        Self {
            points,
            weights,
            order: 2 * n - 1,
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Polynomial degree integrated exactly.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Physical points and weights mapped onto `iv`.
    pub fn mapped(&self, iv: Interval) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * iv.length();
        let mid = iv.midpoint();
        self.points
            .iter()
            .zip(&self.weights)
            .map(move |(&t, &w)| (mid + half * t, half * w))
    }

    pub fn integrate(&self, iv: Interval, f: impl Fn(f64) -> f64) -> f64 {
        self.mapped(iv).map(|(x, w)| w * f(x)).sum()
    }

    /// Composite rule on `iv` split into panels no wider than `max_width`.
    pub fn integrate_composite(
        &self,
        iv: Interval,
        max_width: f64,
        f: impl Fn(f64) -> f64,
    ) -> f64 {
        let len = iv.length();
        if !(len > 0.0) {
            return 0.0;
        }
        let panels = (len / max_width).ceil().max(1.0) as usize;
        let w = len / panels as f64;
        (0..panels)
            .map(|p| {
                let lo = iv.lo + p as f64 * w;
                let hi = if p + 1 == panels { iv.hi } else { lo + w };
                self.integrate(Interval::new(lo, hi), &f)
            })
            .sum()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
