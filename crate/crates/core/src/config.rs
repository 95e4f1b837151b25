//! Run configuration: TOML sections `[run]`, `[domain]`, `[kernel]`, `[params]`,
//! `[grid]`, command-line overrides, and validation into an executable plan.
//!
//! ```toml
//! [run]
//! mode = "pulse"          # mms | pulse | oracle | single
//! out = "runs/pulse"
//! a_values = [3.0, 5.0, 7.0, 9.0]
//!
//! [domain]
//! lo = -40.0
//! hi = 40.0
//! collar = 5.0
//!
//! [grid]
//! h = 0.05
//! tau = 0.01
//! ```
//!
//! Every check runs before anything is allocated or written.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::BcMode;
use crate::kernel::{KernelSpec, KernelUse, KernelViolation};
use crate::mesh::{check_spacing, Interval};
use crate::mms::{default_levels, MmsCase, TauRule};
use crate::pulse::{PulseConfig, PulseModel, ScaleMode};
use crate::stepper::{step_count, PhysicalParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot parse configuration: {0}")]
    Parse(String),
    #[error("mesh size h = {h} does not tile a length of {length}; pick h dividing both Ω and the collar")]
    NonTilingSpacing { h: f64, length: f64 },
    #[error("time step tau = {tau} does not divide the final time T = {t_end}")]
    TauDoesNotDivideT { tau: f64, t_end: f64 },
    #[error("kernel horizon {horizon} exceeds the collar width {collar}; widen [domain].collar")]
    HorizonExceedsCollar { horizon: f64, collar: f64 },
    #[error("Neumann constraints need a finite-horizon kernel, got {0}")]
    InfiniteHorizonNeumann(String),
    #[error("rate {name} = {value} must be finite and nonnegative")]
    NegativeRate { name: &'static str, value: f64 },
    #[error("unknown case {0:?} (known: dirichlet1, neumann1)")]
    UnknownCase(String),
    #[error("missing setting {0}")]
    Missing(&'static str),
    #[error("invalid setting: {0}")]
    Invalid(String),
}

impl ConfigError {
    /// Stable identifier of the violation class.
    pub fn code(&self) -> &'static str {
        match self {
            ConfigError::Parse(_) => "parse",
            ConfigError::NonTilingSpacing { .. } => "non_tiling_h",
            ConfigError::TauDoesNotDivideT { .. } => "tau_not_dividing_t",
            ConfigError::HorizonExceedsCollar { .. } => "horizon_exceeds_collar",
            ConfigError::InfiniteHorizonNeumann(_) => "infinite_horizon_neumann",
            ConfigError::NegativeRate { .. } => "negative_rate",
            ConfigError::UnknownCase(_) => "unknown_case",
            ConfigError::Missing(_) => "missing",
            ConfigError::Invalid(_) => "invalid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Mms,
    Pulse,
    Oracle,
    Single,
}

/// Initial data for `single` runs without a manufactured case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialData {
    /// `u = 1 - 0.3 e^{-10x²}`, `v = e^{-10x²}`.
    #[default]
    Pulse,
    /// The homogeneous state `(1, 0)`.
    Trivial,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub mode: Option<Mode>,
    pub case: Option<String>,
    pub out: Option<PathBuf>,
    pub t_end: Option<f64>,
    pub tol: Option<f64>,
    pub max_steps: Option<usize>,
    pub scale: Option<ScaleMode>,
    pub a_values: Option<Vec<f64>>,
    pub include_local: Option<bool>,
    pub initial: Option<InitialData>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub collar: Option<f64>,
    pub bc: Option<BcMode>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub d_u: Option<f64>,
    pub d_v: Option<f64>,
    pub f: Option<f64>,
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Mesh size (the coarsest level for refinement studies).
    pub h: Option<f64>,
    pub levels: Option<usize>,
    pub tau: Option<f64>,
    /// `τ = tau_factor · h`.
    pub tau_factor: Option<f64>,
    /// Spectral modes at the coarsest oracle level.
    pub modes: Option<usize>,
}

/// The file format, mirrored by command-line overrides.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub domain: DomainSection,
    pub kernel: Option<KernelSpec>,
    #[serde(default)]
    pub params: ParamsSection,
    #[serde(default)]
    pub grid: GridSection,
}

/// Command-line flags that override file values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub case: Option<String>,
    pub levels: Option<usize>,
    pub a: Option<Vec<f64>>,
    pub h: Option<f64>,
    pub tau: Option<f64>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always serializable")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(c) = &o.case {
            self.run.case = Some(c.clone());
        }
        if let Some(l) = o.levels {
            self.grid.levels = Some(l);
        }
        if let Some(a) = &o.a {
            self.run.a_values = Some(a.clone());
        }
        if let Some(h) = o.h {
            self.grid.h = Some(h);
        }
        if let Some(t) = o.tau {
            self.grid.tau = Some(t);
            self.grid.tau_factor = None;
        }
        if let Some(out) = &o.out {
            self.run.out = Some(out.clone());
        }
    }

    fn params_over(&self, base: PhysicalParams) -> Result<PhysicalParams, ConfigError> {
        let p = &self.params;
        let params = PhysicalParams::new(
            p.d_u.unwrap_or(base.d_u),
            p.d_v.unwrap_or(base.d_v),
            p.f.unwrap_or(base.f),
            p.kappa.unwrap_or(base.kappa),
        );
        for (name, value) in [
            ("d_u", params.d_u),
            ("d_v", params.d_v),
            ("f", params.f),
            ("kappa", params.kappa),
        ] {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(ConfigError::NegativeRate { name, value });
            }
        }
        Ok(params)
    }

    fn case(&self) -> Result<MmsCase, ConfigError> {
        let name = self.run.case.as_deref().ok_or(ConfigError::Missing("run.case"))?;
        let mut case = MmsCase::by_name(name).ok_or_else(|| ConfigError::UnknownCase(name.into()))?;
        case.params = self.params_over(case.params)?;
        Ok(case)
    }

    fn levels(&self, case: &MmsCase, default_count: usize) -> Result<Vec<f64>, ConfigError> {
        let count = self.grid.levels.unwrap_or(default_count);
        if count == 0 {
            return Err(ConfigError::Invalid("grid.levels must be at least 1".into()));
        }
        Ok(match self.grid.h {
            Some(h0) => (0..count).map(|k| h0 / 2f64.powi(k as i32)).collect(),
            None => default_levels(case, count),
        })
    }

    fn tau_rule(&self, case: &MmsCase) -> TauRule {
        match (self.grid.tau, self.grid.tau_factor) {
            (Some(t), _) => TauRule::Fixed(t),
            (None, Some(c)) => TauRule::Proportional(c),
            (None, None) => TauRule::default_for(case),
        }
    }

    /// Validate and resolve into a plan. Mode defaults to `mms`.
    pub fn resolve(&self) -> Result<Plan, ConfigError> {
        let mode = self.run.mode.unwrap_or(Mode::Mms);
        let out = self
            .run
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("runs/{}", mode_name(mode))));
        let job = match mode {
            Mode::Mms => {
                let case = self.case()?;
                let levels = self.levels(&case, 5)?;
                let tau_rule = self.tau_rule(&case);
                for &h in &levels {
                    check_grid(case.omega, case.collar, h)?;
                    check_time(case.t_end, tau_rule.tau(h))?;
                }
                check_kernel(&case.kernel, case.bc, case.collar)?;
                Job::Converge {
                    case,
                    levels,
                    tau_rule,
                }
            }
            Mode::Oracle => {
                let case = self.case()?;
                if case.bc != BcMode::Dirichlet {
                    return Err(ConfigError::Invalid(format!(
                        "the spectral oracle is Dirichlet-only; case {} is Neumann",
                        case.name
                    )));
                }
                let count = self.grid.levels.unwrap_or(3);
                let h0 = self.grid.h.unwrap_or(0.05);
                let m0 = self.grid.modes.unwrap_or(11);
                if m0.is_multiple_of(2) {
                    return Err(ConfigError::Invalid(format!("grid.modes must be odd, got {m0}")));
                }
                let tau_rule = self.tau_rule(&case);
                let mut levels = Vec::new();
                for k in 0..count {
                    let h = h0 / 2f64.powi(k as i32);
                    let tau = tau_rule.tau(h);
                    check_grid(case.omega, case.collar, h)?;
                    check_time(case.t_end, tau)?;
                    // modes roughly double with each halving: 11, 21, 41, ...
                    levels.push(OracleLevel {
                        h,
                        tau,
                        modes: (m0 - 1) * 2usize.pow(k as u32) + 1,
                    });
                }
                if levels.is_empty() {
                    return Err(ConfigError::Invalid("grid.levels must be at least 1".into()));
                }
                Job::Oracle { case, levels }
            }
            Mode::Pulse => {
                let cfg = self.pulse_config()?;
                let a_values = self.run.a_values.clone().unwrap_or_else(|| match &self.kernel {
                    Some(KernelSpec::DispersalExp { a, .. }) => vec![*a],
                    _ => vec![3.0, 5.0, 7.0, 9.0],
                });
                let mut models = Vec::new();
                for &a in &a_values {
                    if !(a > 0.0) || !a.is_finite() {
                        return Err(ConfigError::NegativeRate { name: "a", value: a });
                    }
                    let kernel = KernelSpec::dispersal_exp(a, cfg.horizon);
                    check_kernel(&kernel, BcMode::Neumann, cfg.collar)?;
                    models.push(PulseModel::Nonlocal { a });
                }
                if self.run.include_local.unwrap_or(true) {
                    models.push(PulseModel::Local);
                }
                Job::Pulse { cfg, models }
            }
            Mode::Single => self.single()?,
        };
        Ok(Plan {
            mode,
            out,
            config: self.clone(),
            job,
        })
    }

    fn pulse_config(&self) -> Result<PulseConfig, ConfigError> {
        let base = PulseConfig::default();
        let horizon = match &self.kernel {
            None => base.horizon,
            Some(KernelSpec::DispersalExp { horizon, .. }) => *horizon,
            Some(k) if !k.horizon().is_finite() => {
                return Err(ConfigError::InfiniteHorizonNeumann(k.name().into()))
            }
            Some(k) => {
                return Err(ConfigError::Invalid(format!(
                    "pulse runs use the dispersal_exp kernel, got {}",
                    k.name()
                )))
            }
        };
        if self.domain.bc == Some(BcMode::Dirichlet) {
            return Err(ConfigError::Invalid("pulse runs are posed with Neumann constraints".into()));
        }
        let cfg = PulseConfig {
            omega: Interval::new(
                self.domain.lo.unwrap_or(base.omega.lo),
                self.domain.hi.unwrap_or(base.omega.hi),
            ),
            collar: self.domain.collar.unwrap_or(base.collar),
            horizon,
            h: self.grid.h.unwrap_or(base.h),
            tau: self.grid.tau.unwrap_or(base.tau),
            tol: self.run.tol.unwrap_or(base.tol),
            max_steps: self.run.max_steps.unwrap_or(base.max_steps),
            params: self.params_over(base.params)?,
            scale: self.run.scale.unwrap_or(base.scale),
        };
        check_domain(cfg.omega)?;
        check_grid(cfg.omega, cfg.collar, cfg.h)?;
        if !(cfg.tau > 0.0) || !cfg.tau.is_finite() {
            return Err(ConfigError::Invalid(format!("grid.tau must be positive, got {}", cfg.tau)));
        }
        if !(cfg.tol > 0.0) {
            return Err(ConfigError::Invalid(format!("run.tol must be positive, got {}", cfg.tol)));
        }
        if horizon > cfg.collar {
            return Err(ConfigError::HorizonExceedsCollar {
                horizon,
                collar: cfg.collar,
            });
        }
        Ok(cfg)
    }

    fn single(&self) -> Result<Job, ConfigError> {
        if self.run.case.is_some() {
            let case = self.case()?;
            let h = self.grid.h.unwrap_or(default_levels(&case, 1)[0]);
            let tau = self.tau_rule(&case).tau(h);
            check_grid(case.omega, case.collar, h)?;
            check_time(case.t_end, tau)?;
            check_kernel(&case.kernel, case.bc, case.collar)?;
            return Ok(Job::SingleCase { case, h, tau });
        }
        let d = &self.domain;
        let omega = Interval::new(
            d.lo.ok_or(ConfigError::Missing("domain.lo"))?,
            d.hi.ok_or(ConfigError::Missing("domain.hi"))?,
        );
        check_domain(omega)?;
        let collar = d.collar.unwrap_or(0.0);
        let bc = d.bc.unwrap_or(if collar > 0.0 {
            BcMode::Neumann
        } else {
            BcMode::Dirichlet
        });
        let kernel = self.kernel.ok_or(ConfigError::Missing("kernel"))?;
        check_kernel(&kernel, bc, collar)?;
        let params = self.params_over(PhysicalParams::new(1.0, 0.01, 0.01, 0.0977))?;
        let h = self.grid.h.ok_or(ConfigError::Missing("grid.h"))?;
        let tau = self.grid.tau.ok_or(ConfigError::Missing("grid.tau"))?;
        let t_end = self.run.t_end.unwrap_or(1.0);
        check_grid(omega, collar, h)?;
        check_time(t_end, tau)?;
        let scale_c = match self.run.scale.unwrap_or(ScaleMode::None) {
            ScaleMode::None => 1.0,
            mode => mode
                .scale_for(&kernel)
                .map_err(|e| ConfigError::Invalid(e.to_string()))?,
        };
        Ok(Job::Single(SingleRun {
            omega,
            collar,
            bc,
            kernel,
            params: params.with_scale(scale_c),
            h,
            tau,
            t_end,
            initial: self.run.initial.unwrap_or_default(),
        }))
    }
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Mms => "converge",
        Mode::Pulse => "pulse",
        Mode::Oracle => "oracle",
        Mode::Single => "single",
    }
}

fn check_domain(omega: Interval) -> Result<(), ConfigError> {
    if !(omega.hi > omega.lo) || !omega.lo.is_finite() || !omega.hi.is_finite() {
        return Err(ConfigError::Invalid(format!(
            "domain [{}, {}] is empty or unbounded",
            omega.lo, omega.hi
        )));
    }
    Ok(())
}

fn check_grid(omega: Interval, collar: f64, h: f64) -> Result<(), ConfigError> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(ConfigError::Invalid(format!("grid.h must be positive, got {h}")));
    }
    if !(collar >= 0.0) {
        return Err(ConfigError::Invalid(format!("domain.collar must be nonnegative, got {collar}")));
    }
    check_spacing(omega, collar, h).map_err(|e| match e {
        crate::mesh::MeshError::NonDivisibleSpacing { h, length } => {
            ConfigError::NonTilingSpacing { h, length }
        }
        other => ConfigError::Invalid(other.to_string()),
    })
}

fn check_time(t_end: f64, tau: f64) -> Result<(), ConfigError> {
    step_count(t_end, tau).map(|_| ()).map_err(|e| match e {
        crate::stepper::StepError::NonIntegralSteps { t_end, tau } => {
            ConfigError::TauDoesNotDivideT { tau, t_end }
        }
        other => ConfigError::Invalid(other.to_string()),
    })
}

fn check_kernel(kernel: &KernelSpec, bc: BcMode, collar: f64) -> Result<(), ConfigError> {
    let usage = match bc {
        BcMode::Dirichlet => KernelUse::Dirichlet,
        BcMode::Neumann => KernelUse::Neumann,
    };
    let violations = kernel.validate(usage);
    if violations.contains(&KernelViolation::InfiniteHorizon) {
        return Err(ConfigError::InfiniteHorizonNeumann(kernel.name().into()));
    }
    if let Some(v) = violations.first() {
        return Err(ConfigError::Invalid(v.to_string()));
    }
    match bc {
        BcMode::Neumann if kernel.horizon() > collar => Err(ConfigError::HorizonExceedsCollar {
            horizon: kernel.horizon(),
            collar,
        }),
        BcMode::Dirichlet if collar != 0.0 => Err(ConfigError::Invalid(format!(
            "Dirichlet problems have no collar (got {collar})"
        ))),
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleLevel {
    pub h: f64,
    pub tau: f64,
    pub modes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleRun {
    pub omega: Interval,
    pub collar: f64,
    pub bc: BcMode,
    pub kernel: KernelSpec,
    pub params: PhysicalParams,
    pub h: f64,
    pub tau: f64,
    pub t_end: f64,
    pub initial: InitialData,
}

#[derive(Debug, Clone)]
pub enum Job {
    Converge {
        case: MmsCase,
        levels: Vec<f64>,
        tau_rule: TauRule,
    },
    Oracle {
        case: MmsCase,
        levels: Vec<OracleLevel>,
    },
    Pulse {
        cfg: PulseConfig,
        models: Vec<PulseModel>,
    },
    SingleCase {
        case: MmsCase,
        h: f64,
        tau: f64,
    },
    Single(SingleRun),
}

/// A validated, ready-to-run configuration.
#[derive(Debug, Clone)]
pub struct Plan {
    pub mode: Mode,
    pub out: PathBuf,
    /// The effective configuration after overrides.
    pub config: RunConfig,
    pub job: Job,
}
