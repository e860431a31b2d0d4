//! Discrete estimators for negative Hölder norms and the weighted
//! time-Hölder norm of a trajectory.

use crate::field::PeriodicField;
use crate::model::test_function::{profile, wrap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

#[derive(Debug, thiserror::Error)]
pub enum NormError {
    #[error("need at least {need} trajectory samples, got {got}")]
    InsufficientSamples { need: usize, got: usize },
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("every λ is under-resolved on this grid")]
    Unresolved,
}

/// Probe shapes: the bump and its partial derivatives up to order 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Probe {
    Bump,
    D1,
    D2,
    D11,
    D12,
    D22,
}

pub const PROBES: [Probe; 6] = [Probe::Bump, Probe::D1, Probe::D2, Probe::D11, Probe::D12, Probe::D22];

impl Probe {
    fn raw(self, y: [f64; 2]) -> f64 {
        let s = 1.0 - y[0] * y[0] - y[1] * y[1];
        if s <= 0.0 {
            return 0.0;
        }
        let p = profile(y);
        let d = |i: usize| -2.0 * y[i] * p / (s * s);
        let dd = |i: usize, j: usize| {
            let delta = if i == j { 1.0 } else { 0.0 };
            -2.0 * delta * p / (s * s) + 4.0 * y[i] * y[j] * p / s.powi(4) - 8.0 * y[i] * y[j] * p / s.powi(3)
        };
        match self {
            Probe::Bump => p,
            Probe::D1 => d(0),
            Probe::D2 => d(1),
            Probe::D11 => dd(0, 0),
            Probe::D12 => dd(0, 1),
            Probe::D22 => dd(1, 1),
        }
    }

    /// Max over derivatives of order ≤ 2 of the raw probe, by finite
    /// differences on a fine grid.
    fn c2_norm(self) -> f64 {
        static NORMS: OnceLock<Vec<f64>> = OnceLock::new();
        let norms = NORMS.get_or_init(|| {
            PROBES
                .iter()
                .map(|p| {
                    let m = 400;
                    let h = 2.0 / m as f64;
                    let mut sup: f64 = 0.0;
                    for a in 0..=m {
                        for b in 0..=m {
                            let y = [-1.0 + a as f64 * h, -1.0 + b as f64 * h];
                            let f = |dx: f64, dy: f64| p.raw([y[0] + dx, y[1] + dy]);
                            let e = 1e-4;
                            let v = [
                                f(0.0, 0.0),
                                (f(e, 0.0) - f(-e, 0.0)) / (2.0 * e),
                                (f(0.0, e) - f(0.0, -e)) / (2.0 * e),
                                (f(e, 0.0) - 2.0 * f(0.0, 0.0) + f(-e, 0.0)) / (e * e),
                                (f(0.0, e) - 2.0 * f(0.0, 0.0) + f(0.0, -e)) / (e * e),
                                (f(e, e) - f(e, -e) - f(-e, e) + f(-e, -e)) / (4.0 * e * e),
                            ];
                            sup = v.iter().fold(sup, |m, x| m.max(x.abs()));
                        }
                    }
                    sup
                })
                .collect()
        });
        norms[PROBES.iter().position(|&q| q == self).unwrap()]
    }

    /// Probe normalized to `‖φ‖_{C²} ≤ 1`.
    pub fn value(self, y: [f64; 2]) -> f64 {
        self.raw(y) / self.c2_norm()
    }

    /// `⟨f, φ^λ_x⟩` by grid quadrature over the support.
    pub fn pair(self, f: &PeriodicField, x: [f64; 2], lambda: f64) -> f64 {
        let (nx, ny) = (f.nx as i64, f.ny as i64);
        let ri = (lambda * nx as f64).ceil() as i64 + 1;
        let rj = (lambda * ny as f64).ceil() as i64 + 1;
        let ci = (x[0] * nx as f64).floor() as i64;
        let cj = (x[1] * ny as f64).floor() as i64;
        let (ilo, ihi) = if 2 * ri + 1 >= nx { (0, nx - 1) } else { (ci - ri, ci + ri) };
        let (jlo, jhi) = if 2 * rj + 1 >= ny { (0, ny - 1) } else { (cj - rj, cj + rj) };
        let mut s = 0.0;
        for i in ilo..=ihi {
            let ii = i.rem_euclid(nx);
            let dx = wrap(ii as f64 / nx as f64 - x[0]) / lambda;
            for j in jlo..=jhi {
                let jj = j.rem_euclid(ny);
                let dy = wrap(jj as f64 / ny as f64 - x[1]) / lambda;
                if dx * dx + dy * dy < 1.0 {
                    s += self.value([dx, dy]) * f.values[(ii * ny + jj) as usize];
                }
            }
        }
        s * f.cell_area() / (lambda * lambda)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormParams {
    pub lambdas: Vec<f64>,
    /// Random centres per `λ`.
    pub centres: usize,
    pub seed: u64,
    pub probes: Vec<Probe>,
}

impl Default for NormParams {
    fn default() -> Self {
        Self {
            lambdas: (1..=6).map(|j| 0.5f64.powi(j)).collect(),
            centres: 64,
            seed: 0,
            probes: PROBES.to_vec(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct NormEstimate {
    pub alpha: f64,
    pub value: f64,
    /// `(λ, sup_{x,φ} |⟨f, φ^λ_x⟩|)` before the `λ^{−α}` weight.
    pub per_scale: Vec<(f64, f64)>,
    /// Scales dropped for covering fewer than four grid cells.
    pub excluded: Vec<f64>,
}

/// Raw per-scale suprema, shared by every `α`.
pub fn probe_suprema(f: &PeriodicField, p: &NormParams) -> Result<(Vec<(f64, f64)>, Vec<f64>), NormError> {
    if p.lambdas.iter().any(|&l| !(l > 0.0 && l <= 1.0)) || p.centres == 0 || p.probes.is_empty() {
        return Err(NormError::Param("λ ∈ (0, 1], at least one centre and probe".into()));
    }
    let n = f.nx.min(f.ny) as f64;
    let (kept, excluded): (Vec<f64>, Vec<f64>) = p.lambdas.iter().partition(|&&l| l * n >= 4.0);
    if kept.is_empty() {
        return Err(NormError::Unresolved);
    }
    let per = kept
        .par_iter()
        .enumerate()
        .map(|(q, &l)| {
            let mut rng = ChaCha8Rng::seed_from_u64(p.seed ^ (q as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let mut sup: f64 = 0.0;
            for _ in 0..p.centres {
                let x = [rng.gen::<f64>(), rng.gen::<f64>()];
                for pr in &p.probes {
                    sup = sup.max(pr.pair(f, x, l).abs());
                }
            }
            (l, sup)
        })
        .collect();
    Ok((per, excluded))
}

/// `max λ^{−α}|⟨f, φ^λ_x⟩|` over the sampled family.
pub fn besov_norm(f: &PeriodicField, alpha: f64, p: &NormParams) -> Result<NormEstimate, NormError> {
    let (per_scale, excluded) = probe_suprema(f, p)?;
    Ok(estimate_from(alpha, per_scale, excluded))
}

pub fn estimate_from(alpha: f64, per_scale: Vec<(f64, f64)>, excluded: Vec<f64>) -> NormEstimate {
    let value = per_scale.iter().map(|&(l, s)| l.powf(-alpha) * s).fold(0.0, f64::max);
    NormEstimate {
        alpha,
        value,
        per_scale,
        excluded,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightedNorm {
    pub delta: f64,
    pub alpha: f64,
    pub eta: f64,
    pub value: f64,
    /// `sup_t |t|₀^{−η}‖ξ(t)‖_{C^α}`.
    pub level_term: f64,
    /// `sup_{s≠t} ‖ξ(t)−ξ(s)‖_{C^{α−δ}} / (|t,s|₀^η |t−s|^{δ/s0})`.
    pub increment_term: f64,
}

/// `|t|₀ = |t|^{1/s0}` and `|t,s|₀ = |t|₀ ∧ |s|₀ ∧ 1`.
fn t0(t: f64, s0: f64) -> f64 {
    t.abs().powf(1.0 / s0)
}

/// Discrete weighted norm over the sampled times; the denominator weight
/// `|t,s|₀^η` is taken as written.
pub fn weighted_time_norm(
    times: &[f64],
    traj: &[PeriodicField],
    mu: f64,
    delta: f64,
    alpha: f64,
    eta: f64,
    t_end: f64,
    p: &NormParams,
) -> Result<WeightedNorm, NormError> {
    if times.len() != traj.len() {
        return Err(NormError::Param("times and trajectory lengths differ".into()));
    }
    let inside: Vec<usize> = (0..times.len()).filter(|&q| times[q] > 0.0 && times[q] <= t_end).collect();
    if inside.len() < 8 {
        return Err(NormError::InsufficientSamples { need: 8, got: inside.len() });
    }
    if !(delta > 0.0 && eta <= 0.0) {
        return Err(NormError::Param("need δ > 0 and η ≤ 0".into()));
    }
    let s0 = 2.0 * mu;
    let mut level: f64 = 0.0;
    for &q in &inside {
        let n = besov_norm(&traj[q], alpha, p)?.value;
        level = level.max(t0(times[q], s0).powf(-eta) * n);
    }
    let pairs: Vec<(usize, usize)> = inside
        .iter()
        .flat_map(|&a| inside.iter().filter(move |&&b| b < a).map(move |&b| (a, b)))
        .collect();
    let incs = pairs
        .iter()
        .map(|&(a, b)| {
            let (t, s) = (times[a], times[b]);
            let ts0 = t0(t, s0).min(t0(s, s0)).min(1.0);
            let d = traj[a].sub(&traj[b]);
            let n = besov_norm(&d, alpha - delta, p)?.value;
            Ok(n / (ts0.powf(eta) * (t - s).abs().powf(delta / s0)))
        })
        .collect::<Result<Vec<f64>, NormError>>()?;
    let increment = incs.into_iter().fold(0.0, f64::max);
    Ok(WeightedNorm {
        delta,
        alpha,
        eta,
        value: level + increment,
        level_term: level,
        increment_term: increment,
    })
}
