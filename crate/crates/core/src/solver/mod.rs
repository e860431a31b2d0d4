//! Pseudo-spectral exponential integrator for the mollified SQG equation
//! `∂_tθ + (−Δ)^μθ = −div(θR^⊥θ) + ξ_ε`, and the ε-convergence experiment.

use crate::field::{PeriodicField, Spectrum};
use crate::kernels::{lambda, MollifierSpec, Profile};
use crate::fit::ScalingFit;
use crate::model::{phi1, reconstruction_defect, CanonicalModel, ModelError, ModelledDistribution, TestFunction};
use crate::structure::{generate, GenerateError, GenerateParams, Symbol};
use num_rational::Rational64;
use crate::noise::{mollify, sample, MollifiedNoise, NoiseError, NoiseGrid, NoiseRealization};
use crate::norms::{besov_norm, weighted_time_norm, NormError, NormParams, WeightedNorm};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Structure(#[from] GenerateError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MeanMode {
    /// Drop the spatial mean of the noise.
    #[default]
    Project,
    Keep,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    Zero,
    /// `amp·cos(2π(k1x + k2y))`.
    Mode { k1: i64, k2: i64, amp: f64 },
    /// Random Fourier modes with `|k|∞ ≤ kmax`, amplitude decaying like `|k|^{-2}`.
    Random { seed: u64, kmax: i64, amp: f64 },
}

impl InitialData {
    pub fn field(&self, n: usize) -> PeriodicField {
        match *self {
            InitialData::Zero => PeriodicField::zeros(n, n),
            InitialData::Mode { k1, k2, amp } => {
                PeriodicField::from_fn(n, n, |x, y| amp * (2.0 * PI * (k1 as f64 * x + k2 as f64 * y)).cos())
            }
            InitialData::Random { seed, kmax, amp } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut terms = Vec::new();
                for k1 in -kmax..=kmax {
                    for k2 in -kmax..=kmax {
                        if (k1, k2) > (0, 0) {
                            let r2 = (k1 * k1 + k2 * k2) as f64;
                            terms.push((k1, k2, rng.gen_range(-1.0..1.0) / r2, rng.gen_range(0.0..2.0 * PI)));
                        }
                    }
                }
                PeriodicField::from_fn(n, n, |x, y| {
                    amp * terms
                        .iter()
                        .map(|&(k1, k2, a, p)| a * (2.0 * PI * (k1 as f64 * x + k2 as f64 * y) + p).cos())
                        .sum::<f64>()
                })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub mu: f64,
    pub eps: f64,
    #[serde(default = "default_profile")]
    pub profile: Profile,
    pub t_end: f64,
    /// Time steps; a power of two so the noise grid matches.
    pub nt: usize,
    pub n: usize,
    #[serde(default = "default_dealias")]
    pub dealias: f64,
    pub seed: u64,
    #[serde(default = "default_init")]
    pub init: InitialData,
    #[serde(default)]
    pub mean_mode: MeanMode,
    #[serde(default = "yes")]
    pub noise: bool,
    /// Number of evenly spaced snapshots after `t = 0`.
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
    /// Sup-norm cap of the blow-up detector.
    #[serde(default = "default_cap")]
    pub blowup_cap: f64,
}

fn default_profile() -> Profile {
    Profile::Bump
}
fn default_dealias() -> f64 {
    2.0 / 3.0
}
fn default_init() -> InitialData {
    InitialData::Zero
}
fn yes() -> bool {
    true
}
fn default_snapshots() -> usize {
    16
}
fn default_cap() -> f64 {
    1e6
}

impl SolverConfig {
    pub fn new(mu: f64, eps: f64, t_end: f64, nt: usize, n: usize, seed: u64) -> Self {
        Self {
            mu,
            eps,
            profile: Profile::Bump,
            t_end,
            nt,
            n,
            dealias: default_dealias(),
            seed,
            init: InitialData::Zero,
            mean_mode: MeanMode::Project,
            noise: true,
            snapshots: default_snapshots(),
            blowup_cap: default_cap(),
        }
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.nt as f64
    }

    pub fn noise_grid(&self) -> Result<NoiseGrid, SolverError> {
        Ok(NoiseGrid::new(self.nt, self.n, self.n, self.t_end)?)
    }

    /// Stiffness ratio `dt·(2π n/2)^{2μ}`, recorded but not enforced: the
    /// linear part is integrated exactly.
    pub fn cfl(&self) -> f64 {
        self.dt() * (PI * self.n as f64).powf(2.0 * self.mu)
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::Config(m.into()));
        if !(self.mu > 2.0 / 3.0 && self.mu <= 1.0) {
            return bad("μ must lie in (2/3, 1]");
        }
        if !(self.dealias > 0.5 && self.dealias <= 1.0) {
            return bad("dealias fraction must lie in (1/2, 1]");
        }
        if !(self.t_end > 0.0) || self.nt == 0 || self.n < 8 || !self.n.is_power_of_two() {
            return bad("need T > 0, nt ≥ 1 and a power-of-two grid ≥ 8");
        }
        if self.snapshots == 0 || self.snapshots > self.nt || self.nt % self.snapshots != 0 {
            return bad("snapshots must divide nt");
        }
        if self.noise {
            if !self.nt.is_power_of_two() {
                return bad("nt must be a power of two when noise is on");
            }
            if !(self.eps > 0.0) {
                return bad("ε must be positive");
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub fields: Vec<PeriodicField>,
    /// Time at which the sup norm exceeded the cap, if it did.
    pub blowup: Option<f64>,
    pub steps: usize,
    pub max_divergence: f64,
    pub max_imag: f64,
}

impl Trajectory {
    pub fn last(&self) -> &PeriodicField {
        self.fields.last().unwrap()
    }

    /// Snapshot closest to `t`.
    pub fn at(&self, t: f64) -> &PeriodicField {
        let q = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .unwrap()
            .0;
        &self.fields[q]
    }
}

/// Dealiased `−div(θR^⊥θ)` with `R^⊥θ = (−R2θ, R1θ)`.
pub fn nonlinearity(theta: &Spectrum, dealias: f64) -> Spectrum {
    let th = theta.dealias(dealias);
    let f = th.to_field();
    let u1 = th.riesz(2).scale(-1.0).to_field();
    let u2 = th.riesz(1).to_field();
    let d1 = f.mul(&u1).spectrum().deriv(1);
    let d2 = f.mul(&u2).spectrum().deriv(2);
    d1.add(&d2).scale(-1.0).dealias(dealias)
}

/// Advective form `−R^⊥θ·∇θ`, for comparison.
pub fn advective(theta: &Spectrum, dealias: f64) -> Spectrum {
    let th = theta.dealias(dealias);
    let u1 = th.riesz(2).scale(-1.0).to_field();
    let u2 = th.riesz(1).to_field();
    let g1 = th.deriv(1).to_field();
    let g2 = th.deriv(2).to_field();
    u1.mul(&g1).add(&u2.mul(&g2)).spectrum().scale(-1.0).dealias(dealias)
}

/// `max_k |k·û(k)|` of the velocity off the Nyquist lines, which the
/// dealiased transport never reads.
pub fn divergence_residue(theta: &Spectrum) -> f64 {
    let u1 = theta.riesz(2).scale(-1.0);
    let u2 = theta.riesz(1);
    (0..theta.coeffs.len())
        .filter(|&idx| theta.nyquist(idx) == (false, false))
        .map(|idx| {
            let (k1, k2) = theta.k(idx);
            (u1.coeffs[idx] * k1 as f64 + u2.coeffs[idx] * k2 as f64).norm()
        })
        .fold(0.0, f64::max)
}

fn phi2(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        0.5 - z / 6.0 + z * z / 24.0
    } else {
        (z - 1.0 + (-z).exp()) / (z * z)
    }
}

/// Mollified noise for a configuration, drawn from the coupled realization.
pub fn config_noise(cfg: &SolverConfig, xi: &NoiseRealization) -> Result<MollifiedNoise, SolverError> {
    let m = MollifierSpec::new(cfg.profile, cfg.eps).build(cfg.mu);
    Ok(mollify(xi, &m)?)
}

/// ETDRK2 with the noise frozen on each step (exact through `φ1`).
pub fn solve(cfg: &SolverConfig, noise: Option<&MollifiedNoise>) -> Result<Trajectory, SolverError> {
    cfg.validate()?;
    let n = cfg.n;
    if let Some(xi) = noise {
        if xi.grid.nx != n || xi.grid.ny != n || xi.grid.nt != cfg.nt {
            return Err(SolverError::Config("noise grid does not match the solver grid".into()));
        }
    }
    let dt = cfg.dt();
    let len = n * n;
    let (e1, p1, p2): (Vec<f64>, Vec<f64>, Vec<f64>) = {
        let s = Spectrum::zeros(n, n);
        let mut a = Vec::with_capacity(len);
        let mut b = Vec::with_capacity(len);
        let mut c = Vec::with_capacity(len);
        for idx in 0..len {
            let (k1, k2) = s.k(idx);
            let z = dt * lambda(cfg.mu, k1, k2);
            a.push((-z).exp());
            b.push(dt * phi1(z));
            c.push(dt * phi2(z));
        }
        (a, b, c)
    };
    let mut theta = cfg.init.field(n).spectrum();
    let every = cfg.nt / cfg.snapshots;
    let mut times = vec![0.0];
    let mut fields = vec![theta.to_field()];
    let mut max_div: f64 = 0.0;
    let mut max_imag: f64 = 0.0;
    let mut blowup = None;
    let mut steps = 0;
    for step in 0..cfg.nt {
        let forcing = match noise {
            Some(xi) => {
                let mut f = xi.slices[step].spectrum();
                if cfg.mean_mode == MeanMode::Project {
                    f.coeffs[0] = Complex64::default();
                }
                Some(f)
            }
            None => None,
        };
        let n0 = nonlinearity(&theta, cfg.dealias);
        let mut a = theta.clone();
        for idx in 0..len {
            let f = n0.coeffs[idx] + forcing.as_ref().map_or(Complex64::default(), |f| f.coeffs[idx]);
            a.coeffs[idx] = theta.coeffs[idx] * e1[idx] + f * p1[idx];
        }
        let na = nonlinearity(&a, cfg.dealias);
        for idx in 0..len {
            a.coeffs[idx] += (na.coeffs[idx] - n0.coeffs[idx]) * p2[idx];
        }
        theta = a;
        steps += 1;
        max_div = max_div.max(divergence_residue(&theta));
        let t = (step + 1) as f64 * dt;
        let sup = theta.to_field().max_abs();
        if !sup.is_finite() || sup > cfg.blowup_cap {
            blowup = Some(t);
            times.push(t);
            fields.push(theta.to_field());
            break;
        }
        if (step + 1) % every == 0 {
            max_imag = max_imag.max(theta.imag_residue());
            times.push(t);
            fields.push(theta.to_field());
        }
    }
    Ok(Trajectory {
        times,
        fields,
        blowup,
        steps,
        max_divergence: max_div,
        max_imag,
    })
}

/// `‖θ‖²` and `‖(−Δ)^{μ/2}θ‖²`.
pub fn energy(theta: &PeriodicField, mu: f64) -> (f64, f64) {
    let s = theta.spectrum();
    let mut e = 0.0;
    let mut d = 0.0;
    for (idx, c) in s.coeffs.iter().enumerate() {
        let (k1, k2) = s.k(idx);
        e += c.norm_sqr();
        d += lambda(mu, k1, k2) * c.norm_sqr();
    }
    (e, d)
}

/// Relative residual of `½‖θ(T)‖² − ½‖θ(0)‖² + ∫_0^T ‖(−Δ)^{μ/2}θ‖²` with
/// Simpson's rule over the snapshots (an even number of intervals).
pub fn energy_residual(traj: &Trajectory, mu: f64) -> f64 {
    let k = traj.fields.len() - 1;
    assert!(k >= 2 && k % 2 == 0, "Simpson needs an even number of intervals");
    let h = traj.times[1] - traj.times[0];
    let ds: Vec<f64> = traj.fields.iter().map(|f| energy(f, mu).1).collect();
    let integral = h / 3.0
        * (0..=k)
            .map(|q| {
                let w = if q == 0 || q == k {
                    1.0
                } else if q % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                w * ds[q]
            })
            .sum::<f64>();
    let e0 = energy(&traj.fields[0], mu).0;
    let e1 = energy(traj.last(), mu).0;
    (0.5 * (e1 - e0) + integral).abs() / (0.5 * e0).max(1e-300)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub eps: f64,
    /// `‖θ_{ε_{k+1}} − θ_{ε_k}‖_{C^α}` at `t*`; `None` on the last row.
    pub diff_norm: Option<f64>,
    pub alpha: f64,
    pub t_star: f64,
    pub blowup: Option<f64>,
    pub weighted: Option<WeightedNorm>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub strictly_decreasing: bool,
    /// `‖θ^{ρ1}_ε − θ^{ρ2}_ε‖` at the smallest ε, if a second profile was given.
    pub mollifier_gap: Option<f64>,
    pub delta_bar: f64,
}

impl ConvergenceReport {
    pub fn diffs(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.diff_norm).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("eps,diff_norm,alpha,t_star\n");
        for r in &self.rows {
            if let Some(d) = r.diff_norm {
                s += &format!("{},{},{},{}\n", r.eps, d, r.alpha, r.t_star);
            }
        }
        s
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvergenceParams {
    pub kappa: f64,
    /// `t*` as a fraction of `T`.
    pub t_star_frac: f64,
    pub norm: NormParams,
    pub second_profile: Option<Profile>,
    /// Compute the weighted time norm of each trajectory.
    pub weighted: bool,
}

impl Default for ConvergenceParams {
    fn default() -> Self {
        Self {
            kappa: 0.01,
            t_star_frac: 0.25,
            norm: NormParams::default(),
            second_profile: Some(Profile::QuarticBump),
            weighted: false,
        }
    }
}

/// Runs the base configuration for each ε on one shared noise realization.
pub fn eps_convergence(base: &SolverConfig, eps: &[f64], p: &ConvergenceParams) -> Result<ConvergenceReport, SolverError> {
    if eps.len() < 2 || eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(SolverError::Config("ε sequence must be strictly decreasing with at least two entries".into()));
    }
    let xi = sample(base.seed, base.noise_grid()?)?;
    let mu = base.mu;
    let alpha = -2.0 + 2.0 * mu - 2.0 * p.kappa;
    let t_star = p.t_star_frac * base.t_end;
    let delta_bar = 0.5 * (3.0 * mu - 2.0 - p.kappa);
    let run = |e: f64, profile: Profile| -> Result<Trajectory, SolverError> {
        let cfg = SolverConfig { eps: e, profile, ..base.clone() };
        let noise = config_noise(&cfg, &xi)?;
        solve(&cfg, Some(&noise))
    };
    let trajs = eps.iter().map(|&e| run(e, base.profile)).collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    for (q, &e) in eps.iter().enumerate() {
        let diff_norm = match trajs.get(q + 1) {
            Some(next) if trajs[q].blowup.is_none() && next.blowup.is_none() => {
                Some(besov_norm(&next.at(t_star).sub(trajs[q].at(t_star)), alpha, &p.norm)?.value)
            }
            _ => None,
        };
        let weighted = if p.weighted {
            let tr = &trajs[q];
            Some(weighted_time_norm(
                &tr.times,
                &tr.fields,
                mu,
                delta_bar,
                alpha,
                -1.0 + mu - 2.0 * p.kappa,
                base.t_end,
                &p.norm,
            )?)
        } else {
            None
        };
        rows.push(ConvergenceRow {
            eps: e,
            diff_norm,
            alpha,
            t_star,
            blowup: trajs[q].blowup,
            weighted,
        });
    }
    let d: Vec<f64> = rows.iter().filter_map(|r| r.diff_norm).collect();
    let strictly_decreasing = d.len() + 1 == rows.len() && d.windows(2).all(|w| w[1] < w[0]);
    let mollifier_gap = match p.second_profile {
        Some(pr) => {
            let e = *eps.last().unwrap();
            let other = run(e, pr)?;
            Some(besov_norm(&other.at(t_star).sub(trajs.last().unwrap().at(t_star)), alpha, &p.norm)?.value)
        }
        None => None,
    };
    Ok(ConvergenceReport {
        rows,
        strictly_decreasing,
        mollifier_gap,
        delta_bar,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RefinementReport {
    pub coarse: usize,
    pub fine: usize,
    /// `max |θ_fine − θ_coarse|` at the coarse grid points, final time.
    pub max_diff: f64,
    pub relative: f64,
}

/// Solves at fixed ε on the configured grid and on one twice as fine, with the
/// fine noise block-averaged onto the coarse grid, and compares the final fields
/// at the coarse points.
pub fn grid_self_convergence(cfg: &SolverConfig) -> Result<RefinementReport, SolverError> {
    let fine_cfg = SolverConfig { n: 2 * cfg.n, ..cfg.clone() };
    let fine_xi = sample(cfg.seed, fine_cfg.noise_grid()?)?;
    let coarse_xi = fine_xi.coarsen_space(2)?;
    let run = |c: &SolverConfig, xi: &NoiseRealization| -> Result<PeriodicField, SolverError> {
        let noise = if c.noise { Some(config_noise(c, xi)?) } else { None };
        let tr = solve(c, noise.as_ref())?;
        if let Some(t) = tr.blowup {
            return Err(SolverError::Config(format!("blow-up at t = {t}")));
        }
        Ok(tr.last().clone())
    };
    let a = run(cfg, &coarse_xi)?;
    let b = run(&fine_cfg, &fine_xi)?;
    let n = cfg.n;
    let restricted = PeriodicField::from_values(
        n,
        n,
        (0..n * n).map(|idx| b.values[(2 * (idx / n)) * 2 * n + 2 * (idx % n)]).collect(),
    );
    let max_diff = restricted.sub(&a).max_abs();
    Ok(RefinementReport {
        coarse: n,
        fine: 2 * n,
        max_diff,
        relative: max_diff / a.max_abs().max(1e-300),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DefectReport {
    pub lambdas: Vec<f64>,
    /// RMS of the local defect over the centres, per `λ`.
    pub rms: Vec<f64>,
    pub fit: Option<ScalingFit>,
    /// `γ = 1 + 2κ − μ`.
    pub gamma: f64,
    pub t: f64,
    pub centres: usize,
}

impl DefectReport {
    pub fn slope(&self) -> f64 {
        self.fit.as_ref().map_or(f64::NAN, |f| f.slope)
    }
}

/// Local defect `⟨θ(t) − Π_x Θ(x), φ^λ_x⟩` of the truncated expansion
/// `Θ = I[Ξ] + I_1[R_2I[Ξ]·I[Ξ]] − I_2[R_1I[Ξ]·I[Ξ]] + (θ − Z)·1` at the final
/// time, where `θ` is the solver output and `Z` the model's `I[Ξ]`, both driven
/// by the same mollified noise. Centres form a `side × side` lattice of grid
/// points.
pub fn expansion_defect(cfg: &SolverConfig, kappa: f64, lambdas: &[f64], side: usize) -> Result<DefectReport, SolverError> {
    cfg.validate()?;
    if !cfg.noise || cfg.init != InitialData::Zero {
        return Err(SolverError::Config("the expansion check needs noise on and zero initial data".into()));
    }
    let xi = sample(cfg.seed, cfg.noise_grid()?)?;
    let noise = config_noise(cfg, &xi)?;
    let traj = solve(cfg, Some(&noise))?;
    if traj.blowup.is_some() {
        return Err(SolverError::Config("solution left the blow-up cap".into()));
    }
    let model = CanonicalModel::new(cfg.mu, kappa, noise, [0.0, 0.0]).with_mean(cfg.mean_mode == MeanMode::Keep);
    let q = |v: f64| Rational64::approximate_float(v).unwrap_or_default();
    // keep the quadratic integrals in the basis: they sit just above γ
    let space = generate(&GenerateParams::new(q(cfg.mu), q(kappa), 2).with_gamma(Rational64::from_integer(1)))?;
    let n = cfg.nt;
    let z = model.slice(&Symbol::XiIntegral, n)?;
    let ones = PeriodicField::zeros(cfg.n, cfg.n).map(|_| 1.0);
    let sym = |t: &str| t.parse::<Symbol>().map_err(|e| SolverError::Config(format!("{e}")));
    let f = ModelledDistribution {
        coeffs: vec![
            (Symbol::XiIntegral, ones.clone()),
            (sym("I1[R2[I[Xi]]*I[Xi]]")?, ones.clone()),
            (sym("I2[R1[I[Xi]]*I[Xi]]")?, ones.scale(-1.0)),
            (Symbol::one(), traj.last().sub(&z)),
        ],
    };
    let mut rms = Vec::new();
    for &l in lambdas {
        let mut acc = 0.0;
        for c in 0..side * side {
            let centre = [
                ((2 * (c / side) + 1) * cfg.n / (2 * side)) as f64 / cfg.n as f64,
                ((2 * (c % side) + 1) * cfg.n / (2 * side)) as f64 / cfg.n as f64,
            ];
            let d = reconstruction_defect(&space, &f, &model, n, &TestFunction::new(centre, l))?;
            acc += d * d;
        }
        rms.push((acc / (side * side) as f64).sqrt());
    }
    Ok(DefectReport {
        lambdas: lambdas.to_vec(),
        fit: ScalingFit::fit(lambdas, &rms),
        rms,
        gamma: 1.0 + 2.0 * kappa - cfg.mu,
        t: cfg.t_end,
        centres: side * side,
    })
}
