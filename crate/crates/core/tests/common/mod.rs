//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use nlgs::{BcMode, Interval, KernelSpec, Mesh1D, QuadratureRule};

/// `½∬ γ(x - y) (u_h(y) - u_h(x))²` by nested composite Gauss.
///
/// The inner integral is split at every mesh node, at `y = x` and at `x ± R`,
/// so each piece has a smooth integrand. Dirichlet problems extend `u_h` by
/// zero, which adds `∫_Ω u_h(x)² ∫_{ℝ∖Ω} γ(x - y) dy dx`; the exterior mass is
/// integrated numerically over a truncated half line.
pub fn brute_quadratic_form(mesh: &Mesh1D, kernel: &KernelSpec, bc: BcMode, u: &[f64]) -> f64 {
    let rule = QuadratureRule::gauss_legendre(10);
    let panel = 0.5 * mesh.h();
    let j = match bc {
        BcMode::Dirichlet => mesh.omega(),
        BcMode::Neumann => mesh.omega_tilde(),
    };
    let reach = if kernel.horizon().is_finite() {
        kernel.horizon()
    } else {
        40.0
    };
    let uh = |x: f64| mesh.interpolate(u, x);
    let nodes = mesh.nodes();
    let pieces = |x: f64, lo: f64, hi: f64| {
        let mut cuts: Vec<f64> = nodes
            .iter()
            .copied()
            .chain([x, x - reach, x + reach])
            .filter(|&c| c > lo && c < hi)
            .collect();
        cuts.push(lo);
        cuts.push(hi);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        cuts
    };
    let inner = |x: f64| {
        let ux = uh(x);
        let lo = (x - reach).max(j.lo);
        let hi = (x + reach).min(j.hi);
        let mut s = 0.0;
        for w in pieces(x, lo, hi).windows(2) {
            s += rule.integrate_composite(Interval::new(w[0], w[1]), panel, |y| {
                let d = uh(y) - ux;
                kernel.eval(x - y) * d * d
            });
        }
        let mut form = 0.5 * s;
        if bc == BcMode::Dirichlet {
            let mut exterior = 0.0;
            for iv in [Interval::new(j.hi, x + reach), Interval::new(x - reach, j.lo)] {
                if iv.hi > iv.lo {
                    exterior += rule.integrate_composite(iv, panel, |y| kernel.eval(x - y));
                }
            }
            form += ux * ux * exterior;
        }
        form
    };
    let mut total = 0.0;
    for &[a, b] in mesh.elements() {
        let (xa, xb) = (nodes[a], nodes[b]);
        if xb <= j.lo || xa >= j.hi {
            continue;
        }
        total += rule.integrate_composite(Interval::new(xa, xb), panel, inner);
    }
    total
}

pub fn quadratic_form(a: &DMatrix<f64>, u: &[f64]) -> f64 {
    let v = nalgebra::DVector::from_column_slice(u);
    (v.transpose() * a * &v)[(0, 0)]
}

/// `max |M - Mᵀ| / max |M|`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).amax() / m.amax()
}

/// Three nodal vectors of different character: smooth, oscillatory, localized.
pub fn test_vectors(mesh: &Mesh1D) -> Vec<Vec<f64>> {
    let c = mesh.omega().midpoint();
    let l = mesh.omega_tilde().length();
    vec![
        mesh.nodal_values(|x| 1.0 + (x - c) / l),
        mesh.nodal_values(|x| (7.0 * (x - c) / l).sin() + 0.3 * (19.0 * x / l).cos()),
        mesh.nodal_values(|x| (-40.0 * ((x - c) / l).powi(2)).exp()),
    ]
}

/// `C K[x²](x)` for `DispersalExp` on `[-45, 45]`.
pub fn scaled_k_of_square(kernel: &KernelSpec, c: f64, x: f64) -> f64 {
    use nlgs::assembly::{eval_k_strong, NonlocalDomain, StrongQuadrature};
    let domain = NonlocalDomain::new(Interval::new(-45.0, 45.0), BcMode::Neumann);
    let sq = StrongQuadrature::for_domain(domain.integration, kernel);
    c * eval_k_strong(|y| y * y, x, kernel, &domain, &sq)
}

/// Max nodal deviation from `(1, 0)` after `steps` unforced steps on the pulse domain.
pub fn fixed_point_drift(steps: usize, a: f64, h: f64) -> f64 {
    use nlgs::assembly::assemble_nonlocal;
    use nlgs::pulse::{PulseConfig, ScaleMode};
    use nlgs::stepper::{Diffusion, Stepper, StepperState};
    let cfg = PulseConfig {
        h,
        ..PulseConfig::default()
    };
    let kernel = KernelSpec::dispersal_exp(a, cfg.horizon);
    let mesh = Mesh1D::build_uniform(cfg.omega, cfg.collar, cfg.h).unwrap();
    let ops = assemble_nonlocal(&mesh, &kernel, BcMode::Neumann, &QuadratureRule::gauss_legendre(4)).unwrap();
    let params = cfg.params.with_scale(ScaleMode::ClosedFormC.scale_for(&kernel).unwrap());
    let stepper = Stepper::new(&mesh, &ops, params, cfg.tau, Diffusion::Nonlocal).unwrap();
    let mut state = StepperState::from_functions(&mesh, |_| 1.0, |_| 0.0);
    for _ in 0..steps {
        state = stepper.step(&state, (&[], &[])).unwrap();
    }
    state
        .u
        .iter()
        .map(|u| (u - 1.0).abs())
        .chain(state.v.iter().map(|v| v.abs()))
        .fold(0.0, f64::max)
}

/// Largest `|(f(t+δ) - f(t-δ))/2δ - f_t(t)|` over a grid of `Ω × {0.1, 0.5, 0.9}`.
pub fn max_time_derivative_mismatch(case: &nlgs::mms::MmsCase, dt: f64) -> f64 {
    let fd = |f: nlgs::mms::Field, x: f64, t: f64| (f(x, t + dt) - f(x, t - dt)) / (2.0 * dt);
    let mut worst: f64 = 0.0;
    for i in 0..=8 {
        let x = case.omega.lo + case.omega.length() * i as f64 / 8.0;
        for t in [0.1, 0.5, 0.9] {
            worst = worst
                .max((fd(case.u, x, t) - (case.u_t)(x, t)).abs())
                .max((fd(case.v, x, t) - (case.v_t)(x, t)).abs());
        }
    }
    worst
}

/// Least-squares slope of `log e` against `log h`.
pub fn fitted_slope(hs: &[f64], es: &[f64]) -> f64 {
    let n = hs.len() as f64;
    let lx: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ly: Vec<f64> = es.iter().map(|e| e.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Fitted slopes `(u, v)` of the initial nodal-interpolation error over five halvings.
pub fn initial_interpolation_slopes(case: &nlgs::mms::MmsCase) -> (f64, f64) {
    use nlgs::mms::l2_relative_error;
    let h0 = nlgs::mms::default_levels(case, 1)[0];
    let hs: Vec<f64> = (0..5).map(|k| h0 / 2f64.powi(k)).collect();
    let (mut eu, mut ev) = (Vec::new(), Vec::new());
    for &h in &hs {
        let mesh = Mesh1D::build_uniform(case.omega, case.collar, h).unwrap();
        let (u, v) = (case.u, case.v);
        eu.push(l2_relative_error(&mesh, &mesh.nodal_values(|x| u(x, 0.0)), |x| u(x, 0.0)).unwrap());
        ev.push(l2_relative_error(&mesh, &mesh.nodal_values(|x| v(x, 0.0)), |x| v(x, 0.0)).unwrap());
    }
    (fitted_slope(&hs, &eu), fitted_slope(&hs, &ev))
}
