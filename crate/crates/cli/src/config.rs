//! Experiment configuration: a TOML file with global keys and one section per
//! module, overridden by command-line flags.

use crate::CliError;
use clap::Args;
use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use sqg_core::kernels::{Profile, DEFAULT_RADII};
use sqg_core::model::ScalingProbe;
use sqg_core::solver::{InitialData, MeanMode};
use sqg_core::structure::parse_rational;
use std::path::{Path, PathBuf};

/// Flags shared by every experiment command.
#[derive(Args, Clone, Debug, Default)]
pub struct Common {
    /// Fractional order; exact rationals like `9/10` are accepted.
    #[arg(long)]
    pub mu: Option<String>,
    #[arg(long)]
    pub kappa: Option<String>,
    /// One value or a comma-separated list.
    #[arg(long)]
    pub eps: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// `NX[xNY[xNT]]`.
    #[arg(long)]
    pub grid: Option<String>,
    /// Decimal or fraction.
    #[arg(long = "T", value_parser = parse_number)]
    pub t_end: Option<f64>,
    #[arg(long, default_value = "sqg-out")]
    pub out: PathBuf,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long = "lambda-list")]
    pub lambda_list: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub mu: String,
    pub kappa: String,
    /// Empty: each command uses its own default.
    pub eps: Vec<f64>,
    /// `[nx, ny, nt]`, when given.
    pub grid: Option<[usize; 3]>,
    pub t_end: Option<f64>,
    pub samples: Option<usize>,
    pub lambdas: Vec<f64>,
    pub structure: StructureSection,
    pub kernel: KernelSection,
    pub noise: NoiseSection,
    pub model: ModelSection,
    pub solver: SolverSection,
    pub converge: ConvergeSection,
    pub norms: NormsSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            mu: "9/10".into(),
            kappa: "1/100".into(),
            eps: Vec::new(),
            grid: None,
            t_end: None,
            samples: None,
            lambdas: Vec::new(),
            structure: Default::default(),
            kernel: Default::default(),
            noise: Default::default(),
            model: Default::default(),
            solver: Default::default(),
            converge: Default::default(),
            norms: Default::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StructureSection {
    pub depth: usize,
    /// Truncation level; absent means no truncation and no polynomial decorations.
    pub gamma: Option<String>,
    /// μ values checked by `structure threshold`.
    pub check_mu: Vec<String>,
}

impl Default for StructureSection {
    fn default() -> Self {
        Self {
            depth: 2,
            gamma: None,
            check_mu: ["1/2", "2/3", "7/10", "1"].iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelSection {
    pub radii: Vec<f64>,
    pub profile: Profile,
    pub nu: f64,
    pub max_spread: f64,
    pub levels: usize,
    pub resolution: usize,
    pub degree: u32,
    /// Side of the KRN1 kernel dumps.
    pub dump_grid: usize,
}

impl Default for KernelSection {
    fn default() -> Self {
        Self {
            radii: DEFAULT_RADII.to_vec(),
            profile: Profile::Bump,
            nu: 0.5,
            max_spread: 3.0,
            levels: 6,
            resolution: 256,
            degree: 2,
            dump_grid: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub profile: Profile,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self { profile: Profile::Bump }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub symbol: String,
    pub profile: Profile,
    pub probe: ScalingProbe,
    /// Time since the noise was switched on; `None` for the stationary law.
    pub horizon: Option<f64>,
    pub centres: usize,
    /// Time-regularity test function scale.
    pub lambda: f64,
    pub lags: Vec<f64>,
    pub delta: f64,
    /// Centres per axis of the reconstruction check.
    pub side: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            symbol: "R1[I[Xi]]*I[Xi]".into(),
            profile: Profile::Bump,
            probe: ScalingProbe::Dipole,
            horizon: Some(1.0),
            centres: 16,
            lambda: 0.25,
            lags: Vec::new(),
            delta: 0.3,
            side: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub dealias: f64,
    pub init: InitialData,
    pub mean_mode: MeanMode,
    pub noise: bool,
    pub snapshots: usize,
    pub blowup_cap: f64,
    pub profile: Profile,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            dealias: 2.0 / 3.0,
            init: InitialData::Zero,
            mean_mode: MeanMode::Project,
            noise: true,
            snapshots: 16,
            blowup_cap: 1e6,
            profile: Profile::Bump,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergeSection {
    pub t_star_frac: f64,
    pub second_profile: Option<Profile>,
    pub weighted: bool,
}

impl Default for ConvergeSection {
    fn default() -> Self {
        Self {
            t_star_frac: 0.25,
            second_profile: Some(Profile::QuarticBump),
            weighted: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormsSection {
    pub centres: usize,
    pub lambdas: Vec<f64>,
}

impl Default for NormsSection {
    fn default() -> Self {
        Self {
            centres: 64,
            lambdas: (1..=6).map(|j| 0.5f64.powi(j)).collect(),
        }
    }
}

fn config_err(m: impl Into<String>) -> CliError {
    CliError::Config(m.into())
}

fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|v| {
            let v = v.trim();
            match parse_rational(v) {
                Ok(r) => Ok(*r.numer() as f64 / *r.denom() as f64),
                Err(_) => v.parse::<f64>().map_err(|_| config_err(format!("bad number '{v}'"))),
            }
        })
        .collect()
}

fn parse_number(s: &str) -> Result<f64, String> {
    match parse_list(s).map_err(|e| e.to_string())?.as_slice() {
        [v] => Ok(*v),
        _ => Err(format!("expected one number, got '{s}'")),
    }
}

/// `NX[xNY[xNT]]`; missing `NY` copies `NX`.
pub fn parse_grid(s: &str) -> Result<(usize, Option<usize>, Option<usize>), CliError> {
    let parts: Vec<&str> = s.split('x').collect();
    let num = |p: &str| p.trim().parse::<usize>().map_err(|_| config_err(format!("bad grid '{s}'")));
    match parts.as_slice() {
        [nx] => Ok((num(nx)?, None, None)),
        [nx, ny] => Ok((num(nx)?, Some(num(ny)?), None)),
        [nx, ny, nt] => Ok((num(nx)?, Some(num(ny)?), Some(num(nt)?))),
        _ => Err(config_err(format!("bad grid '{s}', expected NX[xNY[xNT]]"))),
    }
}

pub fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

impl ExperimentConfig {
    /// Config file (if any) with flag overrides applied.
    pub fn resolve(c: &Common) -> Result<Self, CliError> {
        let mut cfg = match &c.config {
            Some(p) => load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(m) = &c.mu {
            cfg.mu = m.clone();
        }
        if let Some(k) = &c.kappa {
            cfg.kappa = k.clone();
        }
        if let Some(e) = &c.eps {
            cfg.eps = parse_list(e)?;
        }
        if let Some(s) = c.seed {
            cfg.seed = s;
        }
        if let Some(g) = &c.grid {
            let (nx, ny, nt) = parse_grid(g)?;
            let old = cfg.grid.unwrap_or([nx, nx, 0]);
            cfg.grid = Some([nx, ny.unwrap_or(nx), nt.unwrap_or(old[2])]);
        }
        if let Some(t) = c.t_end {
            cfg.t_end = Some(t);
        }
        if let Some(n) = c.samples {
            cfg.samples = Some(n);
        }
        if let Some(l) = &c.lambda_list {
            cfg.lambdas = parse_list(l)?;
        }
        cfg.validate()?;
        warn_decimal(&cfg.mu, "mu");
        warn_decimal(&cfg.kappa, "kappa");
        // stored in exact form so `0.9` and `9/10` give the same provenance
        cfg.mu = cfg.mu_exact()?.to_string();
        cfg.kappa = cfg.kappa_exact()?.to_string();
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.mu_exact()?;
        self.kappa_exact()?;
        if self.eps.iter().chain(&self.lambdas).any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(config_err("ε and λ values must be positive"));
        }
        if let Some(t) = self.t_end {
            if !(t > 0.0) {
                return Err(config_err("T must be positive"));
            }
        }
        Ok(())
    }

    pub fn mu_exact(&self) -> Result<Rational64, CliError> {
        exact(&self.mu, "mu")
    }

    pub fn kappa_exact(&self) -> Result<Rational64, CliError> {
        exact(&self.kappa, "kappa")
    }

    pub fn mu(&self) -> f64 {
        to_f64(self.mu_exact().expect("validated"))
    }

    pub fn kappa(&self) -> f64 {
        to_f64(self.kappa_exact().expect("validated"))
    }

    pub fn eps_or(&self, default: &[f64]) -> Vec<f64> {
        if self.eps.is_empty() {
            default.to_vec()
        } else {
            self.eps.clone()
        }
    }

    pub fn lambdas_or(&self, default: &[f64]) -> Vec<f64> {
        if self.lambdas.is_empty() {
            default.to_vec()
        } else {
            self.lambdas.clone()
        }
    }

    pub fn samples_or(&self, default: usize) -> usize {
        self.samples.unwrap_or(default)
    }

    /// `(nx, ny, nt)` with defaults for missing entries.
    pub fn grid_or(&self, default: [usize; 3]) -> [usize; 3] {
        match self.grid {
            Some([nx, ny, nt]) => [nx, ny, if nt == 0 { default[2] } else { nt }],
            None => default,
        }
    }
}

fn exact(s: &str, what: &str) -> Result<Rational64, CliError> {
    parse_rational(s).map_err(|e| config_err(format!("{what}: {e}")))
}

fn warn_decimal(s: &str, what: &str) {
    if s.contains('.') {
        if let Ok(r) = parse_rational(s) {
            eprintln!("warning: {what} = {s} taken as the exact rational {r}");
        }
    }
}

pub fn to_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// `zero`, `mode:K1,K2[,AMP]` or `random:SEED[,KMAX[,AMP]]`.
pub fn parse_init(s: &str) -> Result<InitialData, CliError> {
    let bad = || config_err(format!("bad initial data '{s}'"));
    let (kind, args) = s.split_once(':').unwrap_or((s, ""));
    let nums: Vec<&str> = args.split(',').filter(|a| !a.is_empty()).collect();
    match (kind, nums.as_slice()) {
        ("zero", []) => Ok(InitialData::Zero),
        ("mode", [a, b, rest @ ..]) if rest.len() <= 1 => Ok(InitialData::Mode {
            k1: a.trim().parse().map_err(|_| bad())?,
            k2: b.trim().parse().map_err(|_| bad())?,
            amp: rest.first().map_or(Ok(1.0), |v| v.trim().parse()).map_err(|_| bad())?,
        }),
        ("random", [seed, rest @ ..]) if rest.len() <= 2 => Ok(InitialData::Random {
            seed: seed.trim().parse().map_err(|_| bad())?,
            kmax: rest.first().map_or(Ok(4), |v| v.trim().parse()).map_err(|_| bad())?,
            amp: rest.get(1).map_or(Ok(1.0), |v| v.trim().parse()).map_err(|_| bad())?,
        }),
        _ => Err(bad()),
    }
}
