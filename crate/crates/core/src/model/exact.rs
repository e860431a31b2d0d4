//! Exact-law Monte Carlo for the model at a fixed time.
//!
//! Each Fourier mode of `W = K_ε∗ξ` is an independent complex Gaussian with
//! variance `b̂(εk)²∫g(u,λ_k)²du`, so `W` and `R_iW` can be
//! sampled directly on a grid without time-marching. Two-noise symbols are
//! formed pointwise from the same sample.

use super::test_function::{profile, TestFunction};
use super::{McRow, ModelError, ScalingReport};
use crate::field::{wavenumber, Fft2, PeriodicField};
use crate::kernels::{lambda, Mollifier, MollifierSpec};
use crate::noise::rng::gaussian;
use crate::noise::{realizations, McStats};
use crate::quad::{integrate, RadialTable};
use crate::structure::Symbol;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Symbols covered by the exact-law route.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LawSymbol {
    Xi,
    RieszXi(u8),
    /// `(R_iI[Ξ])·I[Ξ]`, renormalized.
    Product(u8),
    /// `X^{(0,k1,k2)}`, deterministic.
    Poly(u32, u32),
}

impl LawSymbol {
    pub fn from_symbol(s: &Symbol) -> Result<Self, ModelError> {
        let unsupported = || ModelError::Unsupported(format!("exact-law route does not cover {s}"));
        match s {
            Symbol::XiIntegral => Ok(LawSymbol::Xi),
            Symbol::Poly(k) if k.k0 == 0 => Ok(LawSymbol::Poly(k.k1, k.k2)),
            Symbol::Riesz(i, c) if **c == Symbol::XiIntegral => Ok(LawSymbol::RieszXi(*i)),
            Symbol::Product(fs) if fs.len() == 2 => match (&fs[0], &fs[1]) {
                (Symbol::Riesz(i, c), Symbol::XiIntegral) | (Symbol::XiIntegral, Symbol::Riesz(i, c))
                    if **c == Symbol::XiIntegral =>
                {
                    Ok(LawSymbol::Product(*i))
                }
                _ => Err(unsupported()),
            },
            _ => Err(unsupported()),
        }
    }
}

/// Per-mode variances of `K_ε∗ξ` on an `n × n` grid, `horizon` after the
/// noise is switched on (`∞`: stationary, zero mode dropped).
pub struct StationaryLaw {
    pub mu: f64,
    pub n: usize,
    pub horizon: f64,
    pub mollifier: Mollifier,
    /// Variance per grid mode; Nyquist lines are zero.
    pub variance: Vec<f64>,
}

/// `∫_{−τ}^{h} g(u,λ)²du`: quadrature on the mollifier window, the exact
/// exponential tail beyond it.
pub fn horizon_weight(m: &Mollifier, l: f64, h: f64) -> f64 {
    if h.is_infinite() {
        return m.stationary_weight(l);
    }
    let tau = m.tau;
    let inner = integrate(-tau, tau, 16, 16, |u| m.time_factor(u, l).powi(2));
    let g = m.time_factor(tau, l);
    let span = (h - tau).max(0.0);
    let tail = if l * span < 1e-12 { span } else { -(-2.0 * l * span).exp_m1() / (2.0 * l) };
    inner + g * g * tail
}

/// `ln ∫g²` tabulated in `ln λ`; the integrand is smooth in `λ`.
fn weight_table(m: &Mollifier, lmin: f64, lmax: f64, h: f64) -> impl Fn(f64) -> f64 {
    let (a, b) = (lmin.ln() - 0.1, lmax.ln() + 0.1);
    let t = RadialTable::new(b - a, 1.0 / 32.0, |s| horizon_weight(m, (a + s).exp(), h).ln());
    move |l: f64| t.eval(l.ln() - a).exp()
}

impl StationaryLaw {
    pub fn new(mu: f64, mollifier: &MollifierSpec, n: usize) -> Self {
        Self::at_horizon(mu, mollifier, n, f64::INFINITY)
    }

    pub fn at_horizon(mu: f64, mollifier: &MollifierSpec, n: usize, horizon: f64) -> Self {
        let m = mollifier.build(mu);
        let half = (n / 2) as i64;
        let w = weight_table(&m, lambda(mu, 1, 0), lambda(mu, half, half), horizon);
        let w0 = if horizon.is_finite() { horizon_weight(&m, 0.0, horizon) } else { 0.0 };
        let variance = (0..n * n)
            .map(|idx| {
                let (i, j) = (idx / n, idx % n);
                let (k1, k2) = (wavenumber(i, n), wavenumber(j, n));
                if k1 == -half || k2 == -half {
                    0.0
                } else if k1 == 0 && k2 == 0 {
                    w0
                } else {
                    m.space_multiplier(k1, k2).powi(2) * w(lambda(mu, k1, k2))
                }
            })
            .collect();
        Self { mu, n, horizon, mollifier: m, variance }
    }

    /// `(W, R_iW)` of one realization; `i = 0` skips the Riesz part.
    pub fn sample(&self, seed: u64, i: u8) -> (PeriodicField, PeriodicField) {
        let n = self.n;
        let mut a = vec![Complex64::default(); n * n];
        for idx in 0..n * n {
            let (p, q) = (idx / n, idx % n);
            let v = self.variance[idx];
            if v == 0.0 {
                continue;
            }
            let (k1, k2) = (wavenumber(p, n), wavenumber(q, n));
            if k1 == 0 && k2 == 0 {
                a[0] = Complex64::new(gaussian(seed, 0) * v.sqrt(), 0.0);
                continue;
            }
            // one representative of each ±k pair draws, the other conjugates
            if (k1, k2) < (-k1, -k2) {
                continue;
            }
            let s = (v / 2.0).sqrt();
            let w = Complex64::new(gaussian(seed, 2 * idx as u64) * s, gaussian(seed, 2 * idx as u64 + 1) * s);
            let r = match i {
                1 | 2 => {
                    let ki = if i == 1 { k1 } else { k2 };
                    Complex64::new(0.0, ki as f64 / ((k1 * k1 + k2 * k2) as f64).sqrt())
                }
                _ => Complex64::default(),
            };
            // W + i·R_iW packed into one transform; both fields are real
            let mi = ((n - p) % n) * n + (n - q) % n;
            a[idx] = w + Complex64::i() * r * w;
            a[mi] = w.conj() + Complex64::i() * (r * w).conj();
        }
        Fft2::get(n, n).inverse(&mut a);
        (
            PeriodicField::from_values(n, n, a.iter().map(|c| c.re).collect()),
            PeriodicField::from_values(n, n, a.iter().map(|c| c.im).collect()),
        )
    }

    /// `E[(R_iW)(y)W(y)]`, the renormalization constant of the product.
    pub fn product_mean(&self, i: u8) -> f64 {
        // the Riesz multiplier is purely imaginary, so only real parts survive
        let n = self.n;
        (0..n * n)
            .map(|idx| {
                let (k1, k2) = (wavenumber(idx / n, n), wavenumber(idx % n, n));
                let ki = if i == 1 { k1 } else { k2 };
                let m = Complex64::new(0.0, ki as f64 / ((k1 * k1 + k2 * k2) as f64).sqrt().max(1.0));
                m.re * self.variance[idx]
            })
            .sum()
    }
}

/// Test function shape used by the scaling estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingProbe {
    /// The unit-mass bump.
    Bump,
    /// `∂_1` of the bump: mean zero, so the lowest torus modes drop out.
    #[default]
    Dipole,
}

impl ScalingProbe {
    pub fn value(self, y: [f64; 2]) -> f64 {
        match self {
            ScalingProbe::Bump => profile(y),
            ScalingProbe::Dipole => {
                let q = 1.0 - y[0] * y[0] - y[1] * y[1];
                if q <= 0.0 {
                    0.0
                } else {
                    -2.0 * y[0] / (q * q) * profile(y)
                }
            }
        }
    }
}

/// Grid-aligned test function weights reused across centres.
pub struct Stencil {
    offsets: Vec<(i64, i64, f64)>,
}

impl Stencil {
    pub fn new(lambda: f64, n: usize) -> Self {
        Self::with_probe(lambda, n, ScalingProbe::Bump)
    }

    pub fn with_probe(lambda: f64, n: usize, probe: ScalingProbe) -> Self {
        let h = 1.0 / n as f64;
        let r = (lambda * n as f64).ceil() as i64;
        let mut offsets = Vec::new();
        for a in -r..=r {
            for b in -r..=r {
                let v = probe.value([a as f64 * h / lambda, b as f64 * h / lambda]) / (lambda * lambda);
                if v != 0.0 {
                    offsets.push((a, b, v * h * h));
                }
            }
        }
        Self { offsets }
    }

    pub fn pair(&self, f: &PeriodicField, ci: i64, cj: i64) -> f64 {
        let n = f.nx as i64;
        self.offsets
            .iter()
            .map(|&(a, b, w)| w * f.values[((ci + a).rem_euclid(n) * n + (cj + b).rem_euclid(n)) as usize])
            .sum()
    }

    pub fn mass(&self) -> f64 {
        self.offsets.iter().map(|o| o.2).sum()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingParams {
    pub mu: f64,
    pub mollifier: MollifierSpec,
    pub lambdas: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
    /// Grid size; must resolve `ε` with at least four points.
    pub grid: usize,
    /// Centres per realization (a square lattice).
    pub centres: usize,
    /// Time since the noise was switched on; `∞` samples the stationary law
    /// without the spatial mean.
    pub horizon: f64,
    pub probe: ScalingProbe,
}

impl ScalingParams {
    pub fn new(mu: f64, mollifier: MollifierSpec, lambdas: Vec<f64>, n_samples: usize, seed: u64) -> Self {
        let grid = ((4.0 / mollifier.eps).ceil() as usize).next_power_of_two().max(64);
        Self {
            mu,
            mollifier,
            lambdas,
            n_samples,
            seed,
            grid,
            centres: 16,
            horizon: 1.0,
            probe: ScalingProbe::Dipole,
        }
    }

    fn validate(&self) -> Result<(), ModelError> {
        let lmin = self.lambdas.iter().copied().fold(f64::INFINITY, f64::min);
        if self.lambdas.len() < 2 || self.lambdas.iter().any(|&l| !(l >= 1.0 / 64.0 - 1e-15 && l <= 0.5)) {
            return Err(ModelError::Param("λ must lie in [2^-6, 2^-1], at least two values".into()));
        }
        if self.mollifier.eps > lmin / 4.0 + 1e-15 {
            return Err(ModelError::Param(format!("ε = {} exceeds min λ/4 = {}", self.mollifier.eps, lmin / 4.0)));
        }
        if !(self.horizon > 0.0) {
            return Err(ModelError::Param("horizon must be positive".into()));
        }
        if (self.grid as f64) * self.mollifier.eps < 4.0 - 1e-12 {
            return Err(ModelError::Param("grid does not resolve ε".into()));
        }
        Ok(())
    }
}

fn rows_and_fit(target: f64, lambdas: &[f64], per: Vec<Vec<f64>>, mu: f64, eps: f64, name: String) -> ScalingReport {
    let rows: Vec<McRow> = lambdas
        .iter()
        .zip(per)
        .map(|(&l, v)| {
            let s = McStats::from_samples(&v);
            McRow {
                x: l,
                mean_sq: s.mean,
                stderr: s.mean_stderr,
                n: s.n,
            }
        })
        .collect();
    ScalingReport::new(name, mu, eps, target, rows, lambdas)
}

/// Second moments `E|⟨Π̂τ, φ^λ_x⟩|²` versus `λ`, target slope `2|τ|(μ,0)`.
pub fn scaling_mc(symbol: &Symbol, p: &ScalingParams) -> Result<ScalingReport, ModelError> {
    p.validate()?;
    let law_sym = LawSymbol::from_symbol(symbol)?;
    let target = 2.0 * symbol.homogeneity().eval_f64(p.mu, 0.0);
    if let LawSymbol::Poly(a, b) = law_sym {
        // deterministic: (y−x)^k against a centred test function
        let per = p
            .lambdas
            .iter()
            .map(|&l| {
                let v = integrate(-l, l, 8, 16, |x| {
                    integrate(-l, l, 8, 16, |y| {
                        p.probe.value([x / l, y / l]) / (l * l) * x.powi(a as i32) * y.powi(b as i32)
                    })
                });
                vec![v * v]
            })
            .collect();
        return Ok(rows_and_fit(target, &p.lambdas, per, p.mu, p.mollifier.eps, symbol.to_string()));
    }
    let law = StationaryLaw::at_horizon(p.mu, &p.mollifier, p.grid, p.horizon);
    let i = match law_sym {
        LawSymbol::RieszXi(i) | LawSymbol::Product(i) => i,
        _ => 0,
    };
    let c = law.product_mean(i.max(1));
    let stencils: Vec<Stencil> = p.lambdas.iter().map(|&l| Stencil::with_probe(l, p.grid, p.probe)).collect();
    let side = (p.centres as f64).sqrt().round().max(1.0) as usize;
    let n = p.grid as i64;
    let centres: Vec<(i64, i64)> = (0..side * side)
        .map(|q| (((2 * (q / side) + 1) as i64 * n) / (2 * side as i64), ((2 * (q % side) + 1) as i64 * n) / (2 * side as i64)))
        .collect();
    let samples = realizations(p.seed, p.n_samples, |s| {
        let (w, rw) = law.sample(s, i);
        let f = match law_sym {
            LawSymbol::Xi => w,
            LawSymbol::RieszXi(_) => rw,
            _ => rw.mul(&w),
        };
        stencils
            .iter()
            .map(|st| {
                let shift = if matches!(law_sym, LawSymbol::Product(_)) { c * st.mass() } else { 0.0 };
                centres.iter().map(|&(a, b)| (st.pair(&f, a, b) - shift).powi(2)).sum::<f64>() / centres.len() as f64
            })
            .collect::<Vec<f64>>()
    });
    let per = (0..p.lambdas.len()).map(|q| samples.iter().map(|s| s[q]).collect()).collect();
    Ok(rows_and_fit(target, &p.lambdas, per, p.mu, p.mollifier.eps, symbol.to_string()))
}

/// Mean of the renormalized product pairing at one `(x, λ)` with its stderr.
pub fn renormalized_mean(p: &ScalingParams, lambda: f64, i: u8) -> (f64, f64) {
    let law = StationaryLaw::at_horizon(p.mu, &p.mollifier, p.grid, p.horizon);
    let c = law.product_mean(i);
    let st = Stencil::new(lambda, p.grid);
    let c0 = (p.grid / 2) as i64;
    let v = realizations(p.seed, p.n_samples, |s| {
        let (w, rw) = law.sample(s, i);
        st.pair(&rw.mul(&w), c0, c0) - c * st.mass()
    });
    let s = McStats::from_samples(&v);
    (s.mean, s.mean_stderr)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TimeRegularityParams {
    pub mu: f64,
    pub mollifier: MollifierSpec,
    pub lambda: f64,
    /// Time lags `|t − s|`, each at most `λ^{s0}`.
    pub lags: Vec<f64>,
    pub delta: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// `c(h) = ∫ g(u+h)g(u) du` over `u > −τ`; exact exponential tail beyond `τ`.
fn lag_covariance(m: &Mollifier, l: f64, tau: f64, h: f64) -> f64 {
    let inner = integrate(-tau, tau, 32, 16, |u| m.time_factor(u + h, l) * m.time_factor(u, l));
    let g = m.time_factor(tau, l);
    inner + g * m.time_factor(tau + h, l) / (2.0 * l)
}

/// `E|⟨Π^tI[Ξ] − Π^sI[Ξ], φ^λ_x⟩|²` versus `|t−s|`, target slope `2δ/s0`.
pub fn time_regularity_mc(symbol: &Symbol, p: &TimeRegularityParams) -> Result<ScalingReport, ModelError> {
    if LawSymbol::from_symbol(symbol)? != LawSymbol::Xi {
        return Err(ModelError::Unsupported(format!("time regularity is implemented for I[Xi], not {symbol}")));
    }
    let s0 = 2.0 * p.mu;
    if !(p.delta > 0.0 && p.delta < 2.0 * p.mu - 1.0) {
        return Err(ModelError::Param("δ must lie in (0, 2μ−1)".into()));
    }
    let top = p.lambda.powf(s0);
    if p.lags.iter().any(|&h| !(h >= 0.0 && h <= top * (1.0 + 1e-12))) {
        return Err(ModelError::Param("lags must satisfy 0 ≤ |t−s| ≤ λ^{s0}".into()));
    }
    if p.mollifier.eps > p.lambda / 4.0 + 1e-15 {
        return Err(ModelError::Param("ε exceeds λ/4".into()));
    }
    let m = p.mollifier.build(p.mu);
    let tau = p.mollifier.tau(p.mu);
    // modes where the test function is not negligible
    let kmax = (24.0 / p.lambda).ceil() as i64;
    let psi = TestFunction::new([0.5, 0.5], p.lambda);
    let mut modes = Vec::new();
    for k1 in 0..=kmax {
        for k2 in -kmax..=kmax {
            if (k1 == 0 && k2 <= 0) || k1 * k1 + k2 * k2 > kmax * kmax {
                continue;
            }
            modes.push((k1, k2));
        }
    }
    // increment variance 2(c(0) − c(h)) per lag, tabulated in ln λ
    let (a, b) = (lambda(p.mu, 1, 0).ln() - 0.1, lambda(p.mu, kmax, kmax).ln() + 0.1);
    let tables: Vec<Option<RadialTable>> = p
        .lags
        .par_iter()
        .map(|&h| {
            (h > 0.0).then(|| {
                RadialTable::new(b - a, 1.0 / 32.0, |x| {
                    let l = (a + x).exp();
                    (2.0 * (lag_covariance(&m, l, tau, 0.0) - lag_covariance(&m, l, tau, h))).max(1e-300).ln()
                })
            })
        })
        .collect();
    let var: Vec<Vec<f64>> = modes
        .iter()
        .map(|&(k1, k2)| {
            let x = lambda(p.mu, k1, k2).ln() - a;
            let b2 = m.space_multiplier(k1, k2).powi(2);
            tables.iter().map(|t| t.as_ref().map_or(0.0, |t| b2 * t.eval(x).exp())).collect()
        })
        .collect();
    let coef: Vec<Complex64> = modes.iter().map(|&(k1, k2)| psi.fourier(k1, k2)).collect();
    let samples = realizations(p.seed, p.n_samples, |s| {
        p.lags
            .iter()
            .enumerate()
            .map(|(q, _)| {
                // ⟨f, φ⟩ = Σ_k f̂_k φ-coef; the ±k pair contributes 2 Re
                let v: f64 = modes
                    .iter()
                    .enumerate()
                    .map(|(idx, _)| {
                        let sd = (var[idx][q] / 2.0).sqrt();
                        let z = Complex64::new(gaussian(s, 2 * idx as u64), gaussian(s, 2 * idx as u64 + 1)) * sd;
                        2.0 * (z * coef[idx]).re
                    })
                    .sum();
                v * v
            })
            .collect::<Vec<f64>>()
    });
    let per: Vec<Vec<f64>> = (0..p.lags.len()).map(|q| samples.iter().map(|s| s[q]).collect()).collect();
    let mut rep = rows_and_fit(2.0 * p.delta / s0, &p.lags, per, p.mu, p.mollifier.eps, symbol.to_string());
    rep.abscissa = "lag".into();
    Ok(rep)
}
