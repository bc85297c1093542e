//! Experiment orchestration: config files, artifact emission, sweeps.
//!
//! Experiments are described by a small TOML document (all rates in units of
//! g, times in 1/g):
//!
//! ```toml
//! mode = "single"        # single | network | sweep-gamma | sweep-ramp | formulas
//! seed = 0               # accepted and ignored: every run is deterministic
//!
//! [params]
//! g = 1.0
//! delta = 50.0
//! ramp = 0.01
//! gamma = 0.1
//! epsilon = 1000.0
//! frame = "rwa"          # rwa | lab
//! noise = "super"        # super | lab | none
//!
//! [params_right]         # network mode only; defaults to [params]
//!
//! [sweep]                # sweep modes only
//! variable = "gamma"     # gamma | ramp
//! start = 0.0
//! stop = 1.0
//! count = 11
//! scale = "linear"       # linear | log
//!
//! [integrator]
//! tolerance = 1e-9
//! max_halvings = 12
//! record_stride = 1000
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Missing keys fall back to the reference parameter sets: single-transfer
//! modes use delta = 50, network modes delta = 70, both with ramp = 0.01 and
//! gamma = 0.1. Every emitted number goes through one fixed 12-significant-
//! digit formatter, so artifacts are byte-stable across runs and machines.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use crate::dynamics::{
    fidelity_bound, fmt12, perturbative_fidelity, run_single_transfer, IntegratorConfig,
    Trajectory,
};
use crate::error::{Error, Result};
use crate::frames::{adiabatic_eigensystem, max_excited_population};
use crate::model::{Frame, NoiseModel, SystemParams};
use crate::network::run_entanglement_generation;

/// What the run computes and which artifacts it leaves behind.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// One node, one transfer: trajectory CSV plus final populations.
    Single,
    /// Two nodes from the shared-photon state: trajectory CSV plus Bell fidelity.
    Network,
    /// Bell fidelity versus dephasing rate, both noise models per point.
    SweepGamma,
    /// Perturbative infidelity and bound versus sweep rate.
    SweepRamp,
    /// Closed-form report: eigenvalues, peak excited population, fidelity
    /// estimate and bound.
    Formulas,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Single => "single",
            Mode::Network => "network",
            Mode::SweepGamma => "sweep-gamma",
            Mode::SweepRamp => "sweep-ramp",
            Mode::Formulas => "formulas",
        }
    }

    pub fn parse(s: &str) -> Result<Mode> {
        match s {
            "single" => Ok(Mode::Single),
            "network" => Ok(Mode::Network),
            "sweep-gamma" => Ok(Mode::SweepGamma),
            "sweep-ramp" => Ok(Mode::SweepRamp),
            "formulas" => Ok(Mode::Formulas),
            other => Err(Error::config(
                "mode",
                format!("unknown mode `{other}` (single | network | sweep-gamma | sweep-ramp | formulas)"),
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
pub enum SweepVariable {
    #[serde(rename = "gamma")]
    Gamma,
    #[serde(rename = "ramp")]
    Ramp,
}

impl SweepVariable {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepVariable::Gamma => "gamma",
            SweepVariable::Ramp => "ramp",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
pub enum SweepScale {
    #[serde(rename = "linear")]
    Linear,
    #[serde(rename = "log")]
    Log,
}

/// Grid specification for a one-dimensional parameter sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub scale: SweepScale,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(Error::config("sweep.start", "sweep bounds must be finite".to_string()));
        }
        if self.start > self.stop {
            return Err(Error::config(
                "sweep.start",
                format!("start {} exceeds stop {}", self.start, self.stop),
            ));
        }
        if self.count < 2 {
            return Err(Error::config("sweep.count", "need at least 2 sweep points".to_string()));
        }
        if self.scale == SweepScale::Log && self.start <= 0.0 {
            return Err(Error::config(
                "sweep.scale",
                "log spacing requires a positive start".to_string(),
            ));
        }
        let min = self.start;
        match self.variable {
            SweepVariable::Gamma if min < 0.0 => {
                Err(Error::config("sweep.start", "gamma must be nonnegative".to_string()))
            }
            SweepVariable::Ramp if min <= 0.0 => {
                Err(Error::config("sweep.start", "ramp must be positive".to_string()))
            }
            _ => Ok(()),
        }
    }

    /// Grid points, endpoints exact.
    pub fn values(&self) -> Vec<f64> {
        let n = self.count;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let f = i as f64 / (n - 1) as f64;
            out.push(match self.scale {
                SweepScale::Linear => self.start + f * (self.stop - self.start),
                SweepScale::Log => (self.start.ln() + f * (self.stop.ln() - self.start.ln())).exp(),
            });
        }
        out[0] = self.start;
        out[n - 1] = self.stop;
        out
    }
}

/// A fully resolved experiment description.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub params: SystemParams,
    /// Second node for network mode; `None` means both nodes identical.
    pub params_right: Option<SystemParams>,
    pub sweep: Option<SweepSpec>,
    pub integrator: IntegratorConfig,
    /// Directory receiving all artifacts.
    pub out_dir: PathBuf,
    /// Sweep worker count; `None` uses all available cores.
    pub jobs: Option<usize>,
}

fn default_sweep(mode: Mode) -> Option<SweepSpec> {
    match mode {
        Mode::SweepGamma => Some(SweepSpec {
            variable: SweepVariable::Gamma,
            start: 0.0,
            stop: 1.0,
            count: 11,
            scale: SweepScale::Linear,
        }),
        Mode::SweepRamp => Some(SweepSpec {
            variable: SweepVariable::Ramp,
            start: 0.002,
            stop: 0.02,
            count: 4,
            scale: SweepScale::Log,
        }),
        _ => None,
    }
}

impl ExperimentConfig {
    /// Reference setup for a mode: the figure parameters with an empty
    /// output config.
    pub fn for_mode(mode: Mode) -> Self {
        let params = match mode {
            Mode::Network | Mode::SweepGamma => SystemParams::network_defaults(),
            _ => SystemParams::single_defaults(),
        };
        ExperimentConfig {
            mode,
            params,
            params_right: None,
            sweep: default_sweep(mode),
            integrator: IntegratorConfig::default(),
            out_dir: PathBuf::from("out"),
            jobs: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if let Some(pr) = &self.params_right {
            pr.validate()?;
        }
        self.integrator.validate()?;
        if matches!(self.mode, Mode::SweepGamma | Mode::SweepRamp) {
            let spec = self.sweep.as_ref().ok_or_else(|| {
                Error::config("sweep", "sweep mode requires a sweep specification".to_string())
            })?;
            let want = match self.mode {
                Mode::SweepGamma => SweepVariable::Gamma,
                _ => SweepVariable::Ramp,
            };
            if spec.variable != want {
                return Err(Error::config(
                    "sweep.variable",
                    format!("mode {} sweeps `{}`", self.mode.as_str(), want.as_str()),
                ));
            }
            spec.validate()?;
        }
        if let Some(jobs) = self.jobs {
            if jobs == 0 {
                return Err(Error::config("jobs", "worker count must be positive".to_string()));
            }
        }
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mode: Option<String>,
    #[allow(dead_code)]
    seed: Option<u64>,
    params: Option<RawParams>,
    params_right: Option<RawParams>,
    sweep: Option<RawSweep>,
    integrator: Option<RawIntegrator>,
    output: Option<RawOutput>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    g: Option<f64>,
    delta: Option<f64>,
    ramp: Option<f64>,
    gamma: Option<f64>,
    epsilon: Option<f64>,
    frame: Option<Frame>,
    noise: Option<NoiseModel>,
}

impl RawParams {
    fn apply(&self, base: &mut SystemParams) {
        if let Some(v) = self.g {
            base.g = v;
        }
        if let Some(v) = self.delta {
            base.delta = v;
        }
        if let Some(v) = self.ramp {
            base.ramp = v;
        }
        if let Some(v) = self.gamma {
            base.gamma = v;
        }
        if let Some(v) = self.epsilon {
            base.epsilon = v;
        }
        if let Some(v) = self.frame {
            base.frame = v;
        }
        if let Some(v) = self.noise {
            base.noise = v;
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    variable: Option<SweepVariable>,
    start: Option<f64>,
    stop: Option<f64>,
    count: Option<usize>,
    scale: Option<SweepScale>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIntegrator {
    base_step: Option<f64>,
    tolerance: Option<f64>,
    max_halvings: Option<u32>,
    record_stride: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
}

/// Loads and validates an experiment config, applying mode defaults for
/// every key the document omits. An empty document is the reference
/// single-transfer experiment.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let raw = parse_raw(path)?;
    let mode = match &raw.mode {
        Some(s) => Mode::parse(s)?,
        None => Mode::Single,
    };
    resolve_raw(raw, mode)
}

/// Same as [`load_config`] but with the mode fixed by the caller (the CLI
/// subcommand); any `mode` key in the document is ignored.
pub fn load_config_for_mode(path: &Path, mode: Mode) -> Result<ExperimentConfig> {
    resolve_raw(parse_raw(path)?, mode)
}

fn parse_raw(path: &Path) -> Result<RawConfig> {
    let text = fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::config("config", format!("{}: {e}", path.display())))
}

fn resolve_raw(raw: RawConfig, mode: Mode) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::for_mode(mode);
    if let Some(p) = &raw.params {
        p.apply(&mut cfg.params);
    }
    if let Some(p) = &raw.params_right {
        let mut pr = cfg.params;
        p.apply(&mut pr);
        cfg.params_right = Some(pr);
    }
    if let Some(s) = &raw.sweep {
        let mut spec = cfg.sweep.unwrap_or_else(|| {
            default_sweep(Mode::SweepGamma).expect("gamma sweep default exists")
        });
        if let Some(v) = s.variable {
            spec.variable = v;
        }
        if let Some(v) = s.start {
            spec.start = v;
        }
        if let Some(v) = s.stop {
            spec.stop = v;
        }
        if let Some(v) = s.count {
            spec.count = v;
        }
        if let Some(v) = s.scale {
            spec.scale = v;
        }
        cfg.sweep = Some(spec);
    }
    if let Some(i) = &raw.integrator {
        if i.base_step.is_some() {
            cfg.integrator.base_step = i.base_step;
        }
        if let Some(v) = i.tolerance {
            cfg.integrator.tolerance = v;
        }
        if let Some(v) = i.max_halvings {
            cfg.integrator.max_halvings = v;
        }
        if let Some(v) = i.record_stride {
            cfg.integrator.record_stride = v;
        }
    }
    if let Some(o) = &raw.output {
        if let Some(dir) = &o.dir {
            cfg.out_dir = dir.clone();
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Ordered sweep output: one row per grid value.
#[derive(Clone, Debug)]
pub struct SweepResult {
    pub variable: String,
    pub values: Vec<f64>,
    /// Named scalar output columns, each aligned with `values`.
    pub columns: Vec<(String, Vec<f64>)>,
    /// One integration summary per grid value.
    pub diagnostics: Vec<String>,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut s = self.variable.clone();
        for (name, _) in &self.columns {
            s.push(',');
            s.push_str(name);
        }
        s.push('\n');
        for (i, v) in self.values.iter().enumerate() {
            s.push_str(&fmt12(*v));
            for (_, col) in &self.columns {
                s.push(',');
                s.push_str(&fmt12(col[i]));
            }
            s.push('\n');
        }
        s
    }
}

/// Input to [`emit_plot_data`].
pub enum PlotInput<'a> {
    Trajectory(&'a Trajectory),
    Sweep(&'a SweepResult),
}

/// Writes a plot-ready text file: a `#` header block naming the columns,
/// then whitespace-separated column data. Byte-stable for identical inputs.
pub fn emit_plot_data(result: PlotInput<'_>, path: &Path) -> Result<()> {
    let mut s = String::new();
    match result {
        PlotInput::Trajectory(traj) => {
            s.push_str("# population trajectory\n");
            s.push_str(&format!("# basis: {:?}\n", traj.basis));
            s.push_str("# columns: t");
            for label in traj.basis.labels() {
                s.push(' ');
                s.push_str(label);
            }
            s.push('\n');
            s.push_str(&format!("# records: {}\n", traj.times.len()));
            for (t, pops) in traj.times.iter().zip(&traj.populations) {
                s.push_str(&fmt12(*t));
                for p in pops {
                    s.push(' ');
                    s.push_str(&fmt12(*p));
                }
                s.push('\n');
            }
        }
        PlotInput::Sweep(sweep) => {
            s.push_str("# sweep result\n");
            s.push_str(&format!("# columns: {}", sweep.variable));
            for (name, _) in &sweep.columns {
                s.push(' ');
                s.push_str(name);
            }
            s.push('\n');
            s.push_str(&format!("# records: {}\n", sweep.values.len()));
            for (i, v) in sweep.values.iter().enumerate() {
                s.push_str(&fmt12(*v));
                for (_, col) in &sweep.columns {
                    s.push(' ');
                    s.push_str(&fmt12(col[i]));
                }
                s.push('\n');
            }
        }
    }
    fs::write(path, s)?;
    Ok(())
}

/// Stdout summary plus the list of files the run produced.
#[derive(Clone, Debug, Default)]
pub struct ExperimentSummary {
    pub lines: Vec<String>,
    pub artifacts: Vec<PathBuf>,
}

fn diag_line(traj: &Trajectory) -> String {
    let d = &traj.diagnostics;
    format!(
        "steps accepted = {}, rejected = {}, min step = {}, max trace drift = {}",
        d.steps_accepted,
        d.steps_rejected,
        fmt12(d.min_step),
        fmt12(d.max_trace_drift)
    )
}

/// Least-squares slope of ln(y) against ln(x); `None` when any point is
/// outside the positive quadrant.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    (den > 0.0).then(|| num / den)
}

fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

fn run_single_mode(cfg: &ExperimentConfig, summary: &mut ExperimentSummary) -> Result<()> {
    let traj = run_single_transfer(&cfg.params, &cfg.integrator)?;
    summary.artifacts.push(write_artifact(&cfg.out_dir, "trajectory.csv", &traj.to_csv())?);
    let plot = cfg.out_dir.join("populations.dat");
    emit_plot_data(PlotInput::Trajectory(&traj), &plot)?;
    summary.artifacts.push(plot);
    let fp = traj.final_populations();
    summary.lines.push(format!(
        "single: P0(T) = {}, P1(T) = {}, Pe(T) = {}",
        fmt12(fp[0]),
        fmt12(fp[1]),
        fmt12(fp[2])
    ));
    summary.lines.push(diag_line(&traj));
    Ok(())
}

fn run_network_mode(cfg: &ExperimentConfig, summary: &mut ExperimentSummary) -> Result<()> {
    let pr = cfg.params_right.unwrap_or(cfg.params);
    let run = run_entanglement_generation(&cfg.params, &pr, &cfg.integrator)?;
    summary
        .artifacts
        .push(write_artifact(&cfg.out_dir, "trajectory.csv", &run.trajectory.to_csv())?);
    let plot = cfg.out_dir.join("populations.dat");
    emit_plot_data(PlotInput::Trajectory(&run.trajectory), &plot)?;
    summary.artifacts.push(plot);
    summary.lines.push(format!("network: bell fidelity F = {}", fmt12(run.bell_fidelity)));
    summary.lines.push(diag_line(&run.trajectory));
    Ok(())
}

/// One gamma sweep point: Bell fidelity under the superadiabatic collective
/// model and under the lab-frame projector model.
fn gamma_point(
    base: &SystemParams,
    gamma: f64,
    integrator: &IntegratorConfig,
) -> Result<(f64, f64, String)> {
    let mut ps = *base;
    ps.gamma = gamma;
    ps.frame = Frame::RotatingRwa;
    ps.noise = NoiseModel::SuperadiabaticProjector;
    let sup = run_entanglement_generation(&ps, &ps, integrator)?;
    let mut pl = *base;
    pl.gamma = gamma;
    pl.frame = Frame::Lab;
    pl.noise = NoiseModel::LabExcitedProjector;
    let lab = run_entanglement_generation(&pl, &pl, integrator)?;
    let diag = format!(
        "super {}; lab {}",
        diag_line(&sup.trajectory),
        diag_line(&lab.trajectory)
    );
    Ok((sup.bell_fidelity, lab.bell_fidelity, diag))
}

fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match jobs {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::config("jobs", e.to_string()))?
            .install(f),
    }
}

fn run_sweep_gamma(cfg: &ExperimentConfig, summary: &mut ExperimentSummary) -> Result<()> {
    let spec = cfg.sweep.as_ref().expect("validated");
    let values = spec.values();
    let base = cfg.params;
    let integrator = cfg.integrator;
    // points are independent; collect preserves grid order
    let rows: Vec<(f64, f64, String)> = with_pool(cfg.jobs, || {
        values
            .par_iter()
            .map(|&gamma| gamma_point(&base, gamma, &integrator))
            .collect::<Result<Vec<_>>>()
    })?;
    let result = SweepResult {
        variable: "gamma".to_string(),
        values: values.clone(),
        columns: vec![
            ("F_super".to_string(), rows.iter().map(|r| r.0).collect()),
            ("F_lab".to_string(), rows.iter().map(|r| r.1).collect()),
        ],
        diagnostics: rows.iter().map(|r| r.2.clone()).collect(),
    };
    summary
        .artifacts
        .push(write_artifact(&cfg.out_dir, "fidelity_curve.csv", &result.to_csv())?);
    let plot = cfg.out_dir.join("fidelity_curve.dat");
    emit_plot_data(PlotInput::Sweep(&result), &plot)?;
    summary.artifacts.push(plot);
    summary.lines.push(format!(
        "sweep-gamma: {} points on [{}, {}]",
        values.len(),
        fmt12(spec.start),
        fmt12(spec.stop)
    ));
    for (i, v) in values.iter().enumerate() {
        summary.lines.push(format!(
            "gamma = {}: F_super = {}, F_lab = {}",
            fmt12(*v),
            fmt12(result.columns[0].1[i]),
            fmt12(result.columns[1].1[i])
        ));
    }
    Ok(())
}

fn run_sweep_ramp(cfg: &ExperimentConfig, summary: &mut ExperimentSummary) -> Result<()> {
    let spec = cfg.sweep.as_ref().expect("validated");
    let values = spec.values();
    let mut infid = Vec::with_capacity(values.len());
    let mut bounds = Vec::with_capacity(values.len());
    let mut diags = Vec::with_capacity(values.len());
    for &a in &values {
        let mut p = cfg.params;
        p.ramp = a;
        let pf = perturbative_fidelity(&p)?;
        let fb = fidelity_bound(&p, None)?;
        infid.push(1.0 - pf.fidelity);
        bounds.push(fb.bound);
        diags.push(format!("integral = {}", fmt12(pf.integral)));
    }
    let result = SweepResult {
        variable: "ramp".to_string(),
        values: values.clone(),
        columns: vec![
            ("infidelity".to_string(), infid.clone()),
            ("bound".to_string(), bounds.clone()),
        ],
        diagnostics: diags,
    };
    summary.artifacts.push(write_artifact(&cfg.out_dir, "scaling.csv", &result.to_csv())?);
    let plot = cfg.out_dir.join("scaling.dat");
    emit_plot_data(PlotInput::Sweep(&result), &plot)?;
    summary.artifacts.push(plot);
    summary.lines.push(format!(
        "sweep-ramp: {} points on [{}, {}]",
        values.len(),
        fmt12(spec.start),
        fmt12(spec.stop)
    ));
    if let Some(slope) = loglog_slope(&values, &infid) {
        summary.lines.push(format!("log-log slope of infidelity vs ramp = {}", fmt12(slope)));
    }
    Ok(())
}

fn run_formulas(cfg: &ExperimentConfig, summary: &mut ExperimentSummary) -> Result<()> {
    let p = cfg.params;
    let mut lines = Vec::new();
    lines.push("formulas report".to_string());
    lines.push(format!(
        "params: g = {}, delta = {}, ramp = {}, gamma = {}",
        fmt12(p.g),
        fmt12(p.delta),
        fmt12(p.ramp),
        fmt12(p.gamma)
    ));
    let (eigs, _) = adiabatic_eigensystem(&p, 0.0)?;
    lines.push(format!(
        "adiabatic eigenvalues at t = 0: {}, {}, {}",
        fmt12(eigs.0),
        fmt12(eigs.1),
        fmt12(eigs.2)
    ));
    let pe = max_excited_population(&p)?;
    lines.push(format!(
        "max excited population: closed form = {} at t = {}",
        fmt12(pe.closed_form),
        fmt12(pe.closed_form_time)
    ));
    lines.push(format!(
        "max excited population: numeric    = {} at t = {}",
        fmt12(pe.numeric),
        fmt12(pe.numeric_time)
    ));
    if pe.regime_warning {
        lines.push(format!(
            "warning: g/delta = {} outside the perturbative regime (> 0.1)",
            fmt12(p.g / p.delta)
        ));
    }
    let pf = perturbative_fidelity(&p)?;
    lines.push(format!("dephasing integral = {}", fmt12(pf.integral)));
    lines.push(format!("perturbative fidelity estimate = {}", fmt12(pf.fidelity)));
    let fb = fidelity_bound(&p, None)?;
    lines.push(format!(
        "fidelity bound = {} (scaling coefficient = {})",
        fmt12(fb.bound),
        fmt12(fb.scaling_coefficient)
    ));
    let mut report = lines.join("\n");
    report.push('\n');
    summary.artifacts.push(write_artifact(&cfg.out_dir, "report.txt", &report)?);
    summary.lines.extend(lines);
    Ok(())
}

/// Runs the configured experiment, writing artifacts under `cfg.out_dir` and
/// returning the stdout summary. Identical configs produce byte-identical
/// artifacts.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentSummary> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out_dir)?;
    let mut summary = ExperimentSummary::default();
    match cfg.mode {
        Mode::Single => run_single_mode(cfg, &mut summary)?,
        Mode::Network => run_network_mode(cfg, &mut summary)?,
        Mode::SweepGamma => run_sweep_gamma(cfg, &mut summary)?,
        Mode::SweepRamp => run_sweep_ramp(cfg, &mut summary)?,
        Mode::Formulas => run_formulas(cfg, &mut summary)?,
    }
    Ok(summary)
}
