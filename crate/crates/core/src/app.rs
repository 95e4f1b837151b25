//! Execution of validated plans and persistence of their results.
//!
//! Every run writes into its own directory: a `manifest.toml` holding the
//! effective configuration, code version, wall time and per-run results, plus
//! the CSV files of the run type. CSV contents depend only on the configuration
//! and the code, so reruns reproduce them byte for byte.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::assembly::assemble_nonlocal;
use crate::config::{ConfigError, InitialData, Job, Mode, OracleLevel, Plan, RunConfig, SingleRun};
use crate::mesh::Mesh1D;
use crate::mms::{run_level, run_levels, ConvergenceReport, LevelRecord, MmsCase, TauRule};
use crate::output::{fmt_f64, write_profile, write_trace};
use crate::pulse::{run_pulse, PulseConfig, PulseModel, PulseRun, PulseShape};
use crate::quadrature::QuadratureRule;
use crate::spectral::{fem_spectral_difference, solve_case_spectral};
use crate::stepper::{Diffusion, NoForcing, StepError, Stepper, StepperState};
use crate::Error;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("configuration error [{code}]: {0}", code = .0.code())]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(Error),
    #[error("steady state not reached: {0}")]
    MaxSteps(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl From<Error> for AppError {
    fn from(e: Error) -> Self {
        match e {
            Error::Step(StepError::MaxStepsExceeded { .. }) => AppError::MaxSteps(e.to_string()),
            other => AppError::Numerical(other),
        }
    }
}

impl AppError {
    /// Process exit status: 2 configuration, 3 numerical failure, 4 step cap reached.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 2,
            AppError::Numerical(_) => 3,
            AppError::MaxSteps(_) => 4,
            AppError::Io { .. } => 1,
        }
    }
}

/// One line per completed run, for the terminal.
#[derive(Debug, Clone, Default)]
pub struct Summary {
    pub out: PathBuf,
    pub lines: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a, R: Serialize> {
    code_version: &'static str,
    mode: Mode,
    wall_time_s: f64,
    notes: Vec<&'static str>,
    files: Vec<String>,
    config: &'a RunConfig,
    results: R,
}

const NOTE_INITIAL: &str = "initial data is the nodal interpolant of the exact solution at t = 0";
const NOTE_ERRORS: &str = "errors are relative L2(Omega) norms with 5-point Gauss per element";
const NOTE_COLLAR: &str = "collar sources are q = -d K(exact), balancing the constraint rows";
const NOTE_SOURCES: &str = "sources are evaluated at t_{n+1} by the strong form with 8-point panels";
const NOTE_STEADY: &str =
    "steady criterion: max over u, v of ||w^{n+1} - w^n||_{L2(Omega)} / ||w^n||_{L2(Omega)}";
const NOTE_LOCAL: &str = "local reference: P1 Laplacian on Omega without collar, scale 1";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> AppError + '_ {
    move |source| AppError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, AppError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    Ok(BufWriter::new(fs::File::create(path).map_err(io_err(path))?))
}

fn write_with(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>,
) -> Result<(), AppError> {
    let mut w = create(path)?;
    f(&mut w).and_then(|_| w.flush()).map_err(io_err(path))
}

fn write_manifest<R: Serialize>(
    out: &Path,
    plan: &Plan,
    started: Instant,
    notes: Vec<&'static str>,
    files: Vec<String>,
    results: R,
) -> Result<(), AppError> {
    let manifest = Manifest {
        code_version: env!("CARGO_PKG_VERSION"),
        mode: plan.mode,
        wall_time_s: started.elapsed().as_secs_f64(),
        notes,
        files,
        config: &plan.config,
        results,
    };
    let text = toml::to_string(&manifest).expect("manifest is serializable");
    let path = out.join("manifest.toml");
    write_with(&path, |w| w.write_all(text.as_bytes()))
}

/// Run a plan and write its outputs under `plan.out`.
pub fn execute(plan: &Plan) -> Result<Summary, AppError> {
    let started = Instant::now();
    let out = plan.out.as_path();
    match &plan.job {
        Job::Converge {
            case,
            levels,
            tau_rule,
        } => converge(plan, out, started, case, levels, *tau_rule),
        Job::Oracle { case, levels } => oracle(plan, out, started, case, levels),
        Job::Pulse { cfg, models } => pulse(plan, out, started, cfg, models),
        Job::SingleCase { case, h, tau } => single_case(plan, out, started, case, *h, *tau),
        Job::Single(run) => single(plan, out, started, run),
    }
}

fn converge(
    plan: &Plan,
    out: &Path,
    started: Instant,
    case: &MmsCase,
    levels: &[f64],
    tau_rule: TauRule,
) -> Result<Summary, AppError> {
    let runs = run_levels(case, levels, tau_rule)?;
    let mut files = vec!["convergence.csv".to_string()];
    for r in &runs {
        let name = format!("trace_level{}.csv", r.record.level);
        write_with(&out.join(&name), |w| write_trace(&r.trace, w))?;
        files.push(name);
    }
    let report = ConvergenceReport::from_levels(
        case.name,
        runs.into_iter().map(|r| r.record).collect(),
    );
    write_with(&out.join("convergence.csv"), |w| report.write_csv(w))?;
    #[derive(Serialize)]
    struct Results<'a> {
        case: &'a str,
        levels: &'a [LevelRecord],
    }
    write_manifest(
        out,
        plan,
        started,
        vec![NOTE_INITIAL, NOTE_ERRORS, NOTE_COLLAR, NOTE_SOURCES],
        files,
        Results {
            case: case.name,
            levels: &report.levels,
        },
    )?;
    let lines = report
        .levels
        .iter()
        .map(|l| {
            format!(
                "level {} h={} tau={} err_u={:.3e} err_v={:.3e}",
                l.level, l.h, l.tau, l.err_u, l.err_v
            )
        })
        .collect();
    Ok(Summary {
        out: out.to_path_buf(),
        lines,
    })
}

#[derive(Debug, Clone, Serialize)]
struct OracleRecord {
    level: usize,
    h: f64,
    tau: f64,
    modes: usize,
    diff_u: f64,
    diff_v: f64,
}

fn oracle(
    plan: &Plan,
    out: &Path,
    started: Instant,
    case: &MmsCase,
    levels: &[OracleLevel],
) -> Result<Summary, AppError> {
    let results: Vec<(OracleRecord, Mesh1D, Vec<[f64; 4]>)> = levels
        .par_iter()
        .enumerate()
        .map(|(i, l)| -> Result<_, Error> {
            let fem = run_level(case, l.h, l.tau, i + 1)?;
            let (basis, traj) = solve_case_spectral(case, l.modes, l.tau)?;
            let (du, dv) = traj.last();
            let fields = fem
                .mesh
                .nodes()
                .iter()
                .enumerate()
                .map(|(j, &x)| {
                    [
                        fem.state.u[j],
                        basis.reconstruct(du.as_slice(), x),
                        fem.state.v[j],
                        basis.reconstruct(dv.as_slice(), x),
                    ]
                })
                .collect();
            Ok((
                OracleRecord {
                    level: i + 1,
                    h: l.h,
                    tau: l.tau,
                    modes: l.modes,
                    diff_u: fem_spectral_difference(&fem.mesh, &fem.state.u, &basis, du.as_slice()),
                    diff_v: fem_spectral_difference(&fem.mesh, &fem.state.v, &basis, dv.as_slice()),
                },
                fem.mesh,
                fields,
            ))
        })
        .collect::<Result<_, _>>()?;

    let mut files = vec!["oracle.csv".to_string()];
    for (rec, mesh, fields) in &results {
        let name = format!("fields_level{}.csv", rec.level);
        write_with(&out.join(&name), |w| {
            writeln!(w, "x,u_fem,u_spectral,v_fem,v_spectral")?;
            for (x, f) in mesh.nodes().iter().zip(fields) {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    fmt_f64(*x),
                    fmt_f64(f[0]),
                    fmt_f64(f[1]),
                    fmt_f64(f[2]),
                    fmt_f64(f[3])
                )?;
            }
            Ok(())
        })?;
        files.push(name);
    }
    let records: Vec<OracleRecord> = results.into_iter().map(|r| r.0).collect();
    write_with(&out.join("oracle.csv"), |w| {
        writeln!(w, "level,h,tau,modes,diff_u,diff_v")?;
        for r in &records {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.level,
                fmt_f64(r.h),
                fmt_f64(r.tau),
                r.modes,
                fmt_f64(r.diff_u),
                fmt_f64(r.diff_v)
            )?;
        }
        Ok(())
    })?;
    #[derive(Serialize)]
    struct Results<'a> {
        case: &'a str,
        levels: &'a [OracleRecord],
    }
    write_manifest(
        out,
        plan,
        started,
        vec![
            NOTE_INITIAL,
            NOTE_SOURCES,
            "spectral initial data is the L2 projection; differences are absolute L2(Omega) norms",
        ],
        files,
        Results {
            case: case.name,
            levels: &records,
        },
    )?;
    Ok(Summary {
        out: out.to_path_buf(),
        lines: records
            .iter()
            .map(|r| {
                format!(
                    "level {} h={} modes={} |u_fem - u_spec|={:.3e}",
                    r.level, r.h, r.modes, r.diff_u
                )
            })
            .collect(),
    })
}

#[derive(Debug, Clone, Serialize)]
struct PulseRecord {
    label: String,
    a: Option<f64>,
    scale_c: f64,
    steps: usize,
    converged: bool,
    last_criterion: f64,
    max_v: f64,
    shape: PulseShape,
}

fn pulse_record(run: &PulseRun) -> PulseRecord {
    PulseRecord {
        label: run.model.label(),
        a: match run.model {
            PulseModel::Nonlocal { a } => Some(a),
            PulseModel::Local => None,
        },
        scale_c: run.scale_c,
        steps: run.outcome.state.n,
        converged: run.outcome.converged,
        last_criterion: run.outcome.last_criterion,
        max_v: run.max_v(),
        shape: run.shape(),
    }
}

fn pulse(
    plan: &Plan,
    out: &Path,
    started: Instant,
    cfg: &PulseConfig,
    models: &[PulseModel],
) -> Result<Summary, AppError> {
    let runs: Vec<PulseRun> = models
        .par_iter()
        .map(|&m| run_pulse(cfg, m))
        .collect::<Result<_, _>>()?;
    let mut files = vec!["pulse_summary.csv".to_string()];
    for run in &runs {
        let dir = out.join(run.model.label());
        write_with(&dir.join("profile.csv"), |w| {
            write_profile(&run.mesh, &run.outcome.state, w)
        })?;
        write_with(&dir.join("trace.csv"), |w| write_trace(&run.outcome.trace, w))?;
        files.push(format!("{}/profile.csv", run.model.label()));
        files.push(format!("{}/trace.csv", run.model.label()));
    }
    let records: Vec<PulseRecord> = runs.iter().map(pulse_record).collect();
    write_with(&out.join("pulse_summary.csv"), |w| {
        writeln!(w, "label,a,scale_c,steps,converged,last_criterion,max_v,shape")?;
        for r in &records {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.label,
                r.a.map(fmt_f64).unwrap_or_default(),
                fmt_f64(r.scale_c),
                r.steps,
                r.converged,
                fmt_f64(r.last_criterion),
                fmt_f64(r.max_v),
                shape_name(&r.shape)
            )?;
        }
        Ok(())
    })?;
    #[derive(Serialize)]
    struct Results<'a> {
        runs: &'a [PulseRecord],
    }
    write_manifest(
        out,
        plan,
        started,
        vec![NOTE_STEADY, NOTE_LOCAL],
        files,
        Results { runs: &records },
    )?;
    let lines = records
        .iter()
        .map(|r| {
            format!(
                "{}: {} steps, max v = {:.6}, shape = {}{}",
                r.label,
                r.steps,
                r.max_v,
                shape_name(&r.shape),
                if r.converged { "" } else { " (not converged)" }
            )
        })
        .collect();
    if let Some(r) = records.iter().find(|r| !r.converged) {
        return Err(AppError::MaxSteps(format!(
            "{} stopped after {} steps with criterion {:e}; partial outputs in {}",
            r.label,
            r.steps,
            r.last_criterion,
            out.display()
        )));
    }
    Ok(Summary {
        out: out.to_path_buf(),
        lines,
    })
}

pub fn shape_name(shape: &PulseShape) -> String {
    match shape {
        PulseShape::SinglePeak => "single_peak".into(),
        PulseShape::Batman => "batman".into(),
        PulseShape::Other {
            maxima,
            center_is_min,
        } => format!(
            "other({maxima} maxima{})",
            if *center_is_min { ", center minimum" } else { "" }
        ),
    }
}

fn single_case(
    plan: &Plan,
    out: &Path,
    started: Instant,
    case: &MmsCase,
    h: f64,
    tau: f64,
) -> Result<Summary, AppError> {
    let run = run_level(case, h, tau, 1)?;
    write_with(&out.join("profile.csv"), |w| write_profile(&run.mesh, &run.state, w))?;
    write_with(&out.join("trace.csv"), |w| write_trace(&run.trace, w))?;
    write_manifest(
        out,
        plan,
        started,
        vec![NOTE_INITIAL, NOTE_ERRORS, NOTE_COLLAR, NOTE_SOURCES],
        vec!["profile.csv".into(), "trace.csv".into()],
        &run.record,
    )?;
    Ok(Summary {
        out: out.to_path_buf(),
        lines: vec![format!(
            "{} h={h} tau={tau} err_u={:.3e} err_v={:.3e}",
            case.name, run.record.err_u, run.record.err_v
        )],
    })
}

fn single(plan: &Plan, out: &Path, started: Instant, run: &SingleRun) -> Result<Summary, AppError> {
    let mesh = Mesh1D::build_uniform(run.omega, run.collar, run.h).map_err(Error::from)?;
    let ops = assemble_nonlocal(&mesh, &run.kernel, run.bc, &QuadratureRule::gauss_legendre(4))
        .map_err(Error::from)?;
    let stepper =
        Stepper::new(&mesh, &ops, run.params, run.tau, Diffusion::Nonlocal).map_err(Error::from)?;
    let state0 = match run.initial {
        InitialData::Pulse => {
            StepperState::from_functions(&mesh, crate::pulse::initial_u, crate::pulse::initial_v)
        }
        InitialData::Trivial => StepperState::from_functions(&mesh, |_| 1.0, |_| 0.0),
    };
    let (state, trace) = stepper
        .run_to_time(state0, run.t_end, &NoForcing)
        .map_err(Error::from)?;
    write_with(&out.join("profile.csv"), |w| write_profile(&mesh, &state, w))?;
    write_with(&out.join("trace.csv"), |w| write_trace(&trace, w))?;
    #[derive(Serialize)]
    struct Results {
        steps: usize,
        t: f64,
        norm_u: f64,
        norm_v: f64,
        energy_bound_violations: usize,
    }
    let last = trace.rows.last().expect("trace has the initial row");
    let results = Results {
        steps: state.n,
        t: state.t,
        norm_u: last.norm_u,
        norm_v: last.norm_v,
        energy_bound_violations: trace.energy_bound_violations(),
    };
    write_manifest(
        out,
        plan,
        started,
        vec![],
        vec!["profile.csv".into(), "trace.csv".into()],
        &results,
    )?;
    Ok(Summary {
        out: out.to_path_buf(),
        lines: vec![format!(
            "{} steps to t = {}: |u| = {:.6}, |v| = {:.6}",
            results.steps, results.t, results.norm_u, results.norm_v
        )],
    })
}
