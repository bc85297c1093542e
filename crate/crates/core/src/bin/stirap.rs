//! Command-line driver for the transfer/entanglement experiments.
//!
//! Precedence: mode defaults < config file < flags. Exit status: 0 success,
//! 1 configuration error, 2 integration failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use stirap_core::harness::{
    load_config, load_config_for_mode, run_experiment, ExperimentConfig, Mode,
};
use stirap_core::{Error, Frame, NoiseModel};

#[derive(Parser)]
#[command(
    name = "stirap",
    version,
    about = "Deterministic dark-state transfer and remote entanglement generation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One node: drive the |1> -> |0> transfer and record populations
    Single(CommonArgs),
    /// Two nodes: generate the Bell state from a shared photon
    Network(CommonArgs),
    /// Sweep gamma (Bell fidelity) or ramp (infidelity scaling)
    Sweep(SweepArgs),
    /// Print the closed-form report for the configured parameters
    Formulas(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment config file (TOML); flags override its values
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Atom-cavity coupling rate (the frequency unit)
    #[arg(long)]
    g: Option<f64>,
    /// Peak classical drive amplitude
    #[arg(long)]
    delta: Option<f64>,
    /// Envelope sweep rate a; the protocol lasts pi/(2a)
    #[arg(long)]
    ramp: Option<f64>,
    /// Excited-state dephasing rate
    #[arg(long)]
    gamma: Option<f64>,
    /// Carrier frequency for lab-frame runs
    #[arg(long)]
    epsilon: Option<f64>,
    /// Reference frame of the dynamics
    #[arg(long, value_enum)]
    frame: Option<FrameArg>,
    /// Dephasing model
    #[arg(long, value_enum)]
    noise: Option<NoiseArg>,
    /// Sweep worker threads (default: all cores)
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    /// Artifact directory
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Which parameter to sweep
    #[arg(long = "sweep-var", value_enum)]
    sweep_var: Option<SweepVarArg>,
    /// Sweep grid as START:STOP:COUNT
    #[arg(long = "sweep-range", value_name = "START:STOP:COUNT")]
    sweep_range: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FrameArg {
    Rwa,
    Lab,
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseArg {
    Super,
    Lab,
    None,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepVarArg {
    Gamma,
    Ramp,
}

impl From<FrameArg> for Frame {
    fn from(v: FrameArg) -> Frame {
        match v {
            FrameArg::Rwa => Frame::RotatingRwa,
            FrameArg::Lab => Frame::Lab,
        }
    }
}

impl From<NoiseArg> for NoiseModel {
    fn from(v: NoiseArg) -> NoiseModel {
        match v {
            NoiseArg::Super => NoiseModel::SuperadiabaticProjector,
            NoiseArg::Lab => NoiseModel::LabExcitedProjector,
            NoiseArg::None => NoiseModel::None,
        }
    }
}

fn parse_sweep_range(s: &str) -> Result<(f64, f64, usize), Error> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::config(
            "sweep-range",
            format!("expected START:STOP:COUNT, got `{s}`"),
        ));
    }
    let start: f64 = parts[0]
        .parse()
        .map_err(|_| Error::config("sweep-range", format!("bad start `{}`", parts[0])))?;
    let stop: f64 = parts[1]
        .parse()
        .map_err(|_| Error::config("sweep-range", format!("bad stop `{}`", parts[1])))?;
    let count: usize = parts[2]
        .parse()
        .map_err(|_| Error::config("sweep-range", format!("bad count `{}`", parts[2])))?;
    Ok((start, stop, count))
}

/// Resolve the config for a fixed-mode subcommand.
fn base_config(common: &CommonArgs, mode: Mode) -> Result<ExperimentConfig, Error> {
    match &common.config {
        Some(path) => load_config_for_mode(path, mode),
        None => Ok(ExperimentConfig::for_mode(mode)),
    }
}

fn apply_common(cfg: &mut ExperimentConfig, a: &CommonArgs) {
    // explicit flags apply to both nodes; per-node asymmetry lives in the file
    let mut nodes: Vec<&mut stirap_core::SystemParams> = vec![&mut cfg.params];
    if let Some(pr) = cfg.params_right.as_mut() {
        nodes.push(pr);
    }
    for p in nodes {
        if let Some(v) = a.g {
            p.g = v;
        }
        if let Some(v) = a.delta {
            p.delta = v;
        }
        if let Some(v) = a.ramp {
            p.ramp = v;
        }
        if let Some(v) = a.gamma {
            p.gamma = v;
        }
        if let Some(v) = a.epsilon {
            p.epsilon = v;
        }
        if let Some(v) = a.frame {
            p.frame = v.into();
        }
        if let Some(v) = a.noise {
            p.noise = v.into();
        }
    }
    if let Some(v) = a.jobs {
        cfg.jobs = Some(v);
    }
    if let Some(out) = &a.out {
        cfg.out_dir = out.clone();
    }
}

fn resolve(cli: &Command) -> Result<ExperimentConfig, Error> {
    match cli {
        Command::Single(common) => {
            let mut cfg = base_config(common, Mode::Single)?;
            apply_common(&mut cfg, common);
            Ok(cfg)
        }
        Command::Network(common) => {
            let mut cfg = base_config(common, Mode::Network)?;
            apply_common(&mut cfg, common);
            Ok(cfg)
        }
        Command::Formulas(common) => {
            let mut cfg = base_config(common, Mode::Formulas)?;
            apply_common(&mut cfg, common);
            Ok(cfg)
        }
        Command::Sweep(args) => {
            // the flag picks the variable; otherwise a sweep-mode config
            // file keeps its choice; otherwise sweep gamma
            let mode = match args.sweep_var {
                Some(SweepVarArg::Gamma) => Mode::SweepGamma,
                Some(SweepVarArg::Ramp) => Mode::SweepRamp,
                None => match &args.common.config {
                    Some(path) => match load_config(path)?.mode {
                        m @ (Mode::SweepGamma | Mode::SweepRamp) => m,
                        _ => Mode::SweepGamma,
                    },
                    None => Mode::SweepGamma,
                },
            };
            let mut cfg = base_config(&args.common, mode)?;
            apply_common(&mut cfg, &args.common);
            if let Some(range) = &args.sweep_range {
                let (start, stop, count) = parse_sweep_range(range)?;
                let spec = cfg.sweep.as_mut().expect("sweep mode always carries a spec");
                spec.start = start;
                spec.stop = stop;
                spec.count = count;
            }
            Ok(cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version land here too; real usage errors are config errors
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = resolve(&cli.command).and_then(|cfg| run_experiment(&cfg));
    match result {
        Ok(summary) => {
            for line in &summary.lines {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
