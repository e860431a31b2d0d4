//! Command-line front end: every experiment writes its artifacts and a
//! `manifest.json` into one output directory and can be replayed from it.

pub mod commands;
pub mod config;
pub mod manifest;

use clap::{Args, Parser, Subcommand, ValueEnum};
use config::Common;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    /// Artifacts were written but a numerical diagnostic failed.
    #[error("diagnostic failure: {0}")]
    Diagnostic(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Diagnostic(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "sqg", version, about = "Reproducible experiments for the stochastic SQG toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Symbol tables, negative sector, subcriticality threshold.
    #[command(subcommand)]
    Structure(StructureCmd),
    /// Kernel order fits, dyadic pieces, mollified bounds.
    #[command(subcommand)]
    Kernel(KernelCmd),
    #[command(subcommand)]
    Noise(NoiseCmd),
    #[command(subcommand)]
    Model(ModelCmd),
    /// Integrate the regularized equation.
    Solve(SolveArgs),
    /// Coupled ε sequence on one noise realization.
    Converge(Common),
    /// Verify the artifact checksums recorded in a manifest.
    Check { dir: PathBuf },
    /// Re-run a manifest and compare checksums.
    Replay {
        dir: PathBuf,
        /// Defaults to `<dir>/replay`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare two manifests.
    Diff { a: PathBuf, b: PathBuf },
}

#[derive(Subcommand, Debug)]
pub enum StructureCmd {
    Generate(Common),
    Negatives(Common),
    Threshold(Common),
}

#[derive(Subcommand, Debug)]
pub enum KernelCmd {
    Order(Common),
    Dyadic(Common),
    Mollify(Common),
    Convolve(Common),
}

#[derive(Subcommand, Debug)]
pub enum NoiseCmd {
    Sample(Common),
    Regularity(Common),
}

#[derive(Subcommand, Debug)]
pub enum ModelCmd {
    Pi(Common),
    RenormConst(Common),
    Scaling(Common),
    TimeReg(Common),
    Covariance(Common),
    Reconstruct(Common),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum OnOff {
    On,
    Off,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum)]
    pub noise: Option<OnOff>,
    /// `zero`, `mode:K1,K2[,AMP]` or `random:SEED[,KMAX[,AMP]]`.
    #[arg(long)]
    pub init: Option<String>,
}

/// Parses and runs one command line; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    use commands::Task;
    let (task, common, solve) = match cmd {
        Command::Structure(c) => match c {
            StructureCmd::Generate(a) => (Task::StructureGenerate, a, None),
            StructureCmd::Negatives(a) => (Task::StructureNegatives, a, None),
            StructureCmd::Threshold(a) => (Task::StructureThreshold, a, None),
        },
        Command::Kernel(c) => match c {
            KernelCmd::Order(a) => (Task::KernelOrder, a, None),
            KernelCmd::Dyadic(a) => (Task::KernelDyadic, a, None),
            KernelCmd::Mollify(a) => (Task::KernelMollify, a, None),
            KernelCmd::Convolve(a) => (Task::KernelConvolve, a, None),
        },
        Command::Noise(c) => match c {
            NoiseCmd::Sample(a) => (Task::NoiseSample, a, None),
            NoiseCmd::Regularity(a) => (Task::NoiseRegularity, a, None),
        },
        Command::Model(c) => match c {
            ModelCmd::Pi(a) => (Task::ModelPi, a, None),
            ModelCmd::RenormConst(a) => (Task::ModelRenormConst, a, None),
            ModelCmd::Scaling(a) => (Task::ModelScaling, a, None),
            ModelCmd::TimeReg(a) => (Task::ModelTimeReg, a, None),
            ModelCmd::Covariance(a) => (Task::ModelCovariance, a, None),
            ModelCmd::Reconstruct(a) => (Task::ModelReconstruct, a, None),
        },
        Command::Solve(s) => (Task::Solve, s.common, Some((s.noise, s.init))),
        Command::Converge(a) => (Task::Converge, a, None),
        Command::Check { dir } => return manifest::check(&dir),
        Command::Replay { dir, out } => {
            let out = out.unwrap_or_else(|| dir.join("replay"));
            return manifest::replay(&dir, &out);
        }
        Command::Diff { a, b } => return manifest::diff(&a, &b),
    };
    let mut cfg = config::ExperimentConfig::resolve(&common)?;
    if let Some((noise, init)) = solve {
        if let Some(n) = noise {
            cfg.solver.noise = n == OnOff::On;
        }
        if let Some(i) = init {
            cfg.solver.init = config::parse_init(&i)?;
        }
    }
    commands::run_task(task, &cfg, &common.out)
}
