//! Dyadic decomposition `K = Σ_n K_n` subordinate to parabolic annuli.

use super::spectral::Slice;
use super::{KernelError, KernelSpec};
use crate::fit::ScalingFit;
use crate::structure::MultiIndex;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

const TIME_POINTS: usize = 16;

fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / u).exp();
        let b = (-1.0 / (1.0 - u)).exp();
        a / (a + b)
    }
}

fn smooth_step_deriv(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        return 0.0;
    }
    let a = (-1.0 / u).exp();
    let b = (-1.0 / (1.0 - u)).exp();
    let (da, db) = (a / (u * u), -b / ((1.0 - u) * (1.0 - u)));
    (da * (a + b) - a * (da + db)) / ((a + b) * (a + b))
}

/// `1` on `r ≤ 1`, `0` on `r ≥ 2`.
fn phi0(r: f64) -> f64 {
    smooth_step(2.0 - r)
}

fn phi0_deriv(r: f64) -> f64 {
    -smooth_step_deriv(2.0 - r)
}

/// Smooth parabolic norm `(t² + |x|₂^{2s0})^{1/(2s0)}`.
fn smooth_norm(s0: f64, t: f64, x: [f64; 2]) -> f64 {
    (t * t + (x[0] * x[0] + x[1] * x[1]).powf(s0)).powf(0.5 / s0)
}

/// `χ_n = ψ(2^n N)` with `ψ(r) = φ0(r) − φ0(2r)`, and its spatial gradient.
fn cutoff(s0: f64, n: usize, t: f64, x: [f64; 2]) -> (f64, [f64; 2]) {
    let nn = smooth_norm(s0, t, x);
    let sc = (1u64 << n) as f64;
    let r = sc * nn;
    let v = phi0(r) - phi0(2.0 * r);
    let dpsi = phi0_deriv(r) - 2.0 * phi0_deriv(2.0 * r);
    let rho2 = x[0] * x[0] + x[1] * x[1];
    if nn == 0.0 || rho2 == 0.0 || dpsi == 0.0 {
        return (v, [0.0, 0.0]);
    }
    // ∂N/∂x_i = N^{1−2s0} |x|^{2s0−2} x_i
    let g = nn.powf(1.0 - 2.0 * s0) * rho2.powf(s0 - 1.0);
    (v, [sc * dpsi * g * x[0], sc * dpsi * g * x[1]])
}

/// `Σ_{n ≤ n_max} χ_n(t, x)`.
pub fn partition_weight(mu: f64, n_max: usize, t: f64, x: [f64; 2]) -> f64 {
    (0..=n_max).map(|n| cutoff(2.0 * mu, n, t, x).0).sum()
}

#[derive(Clone, Debug, Serialize)]
pub struct DyadicPiece {
    pub level: usize,
    pub support_radius: f64,
    pub times: Vec<f64>,
    /// Minimal periodic displacements of the sampled grid points.
    pub points: Vec<[f64; 2]>,
    /// `K·χ_n` on `times × points`, time-major.
    pub raw: Vec<f64>,
    /// `raw` after subtracting the polynomial-moment projection.
    pub corrected: Vec<f64>,
    /// `∂_1(K χ_n)`, `∂_2(K χ_n)`.
    pub grad: [Vec<f64>; 2],
    /// Moments of `corrected` in units rescaled to the unit annulus.
    pub residual_moments: Vec<f64>,
    /// Same moments before correction.
    pub raw_moments: Vec<f64>,
}

impl DyadicPiece {
    pub fn sup_raw(&self) -> f64 {
        self.raw.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sup_corrected(&self) -> f64 {
        self.corrected.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sup_grad(&self) -> f64 {
        self.grad.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `‖z‖_s` among samples where the raw piece is non-zero.
    pub fn max_active_radius(&self, mu: f64) -> f64 {
        let p = super::ParabolicScaling::new(mu);
        let np = self.points.len();
        let mut m: f64 = 0.0;
        for (q, &t) in self.times.iter().enumerate() {
            for (i, x) in self.points.iter().enumerate() {
                if self.raw[q * np + i] != 0.0 {
                    m = m.max(p.norm(t, *x));
                }
            }
        }
        m
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DyadicDecomposition {
    pub mu: f64,
    pub n_max: usize,
    pub resolution: usize,
    pub degree: u32,
    pub pieces: Vec<DyadicPiece>,
}

impl DyadicDecomposition {
    /// Slope of `log sup|K_n|` against `n log 2` over `levels`.
    pub fn bound_fit(&self, levels: std::ops::RangeInclusive<usize>, corrected: bool) -> Option<ScalingFit> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = self
            .pieces
            .iter()
            .filter(|p| levels.contains(&p.level))
            .map(|p| ((1u64 << p.level) as f64, if corrected { p.sup_corrected() } else { p.sup_raw() }))
            .unzip();
        ScalingFit::fit(&xs, &ys)
    }

    pub fn gradient_fit(&self, levels: std::ops::RangeInclusive<usize>) -> Option<ScalingFit> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = self
            .pieces
            .iter()
            .filter(|p| levels.contains(&p.level))
            .map(|p| ((1u64 << p.level) as f64, p.sup_grad()))
            .unzip();
        ScalingFit::fit(&xs, &ys)
    }
}

/// Monomial exponents `(b0, b1, b2)` with `s0·b0 + b1 + b2 ≤ degree`.
fn monomials(s0: f64, degree: u32) -> Vec<[u32; 3]> {
    let mut v = Vec::new();
    for b0 in 0..=degree {
        for b1 in 0..=degree {
            for b2 in 0..=degree {
                if s0 * b0 as f64 + (b1 + b2) as f64 <= degree as f64 + 1e-12 {
                    v.push([b0, b1, b2]);
                }
            }
        }
    }
    v
}

fn min_disp(i: usize, r: usize) -> f64 {
    let d = if i > r / 2 { i as f64 - r as f64 } else { i as f64 };
    d / r as f64
}

/// Splits a heat-type kernel into pieces sampled at grid resolution
/// `resolution`, with polynomial moments up to scaled degree `degree`
/// approximately removed.
pub fn dyadic_decompose(
    spec: &KernelSpec,
    n_max: usize,
    resolution: usize,
    degree: u32,
) -> Result<DyadicDecomposition, KernelError> {
    let mu = match spec {
        KernelSpec::FractionalHeat { mu } | KernelSpec::HeatDeriv { mu, .. } => *mu,
        _ => return Err(KernelError::Unsupported("dyadic decomposition needs FractionalHeat or HeatDeriv".into())),
    };
    if !resolution.is_power_of_two() || resolution < 8 {
        return Err(KernelError::Param("resolution must be a power of two ≥ 8".into()));
    }
    let log2r = resolution.trailing_zeros() as usize;
    let s0 = 2.0 * mu;
    let mut pieces = Vec::new();
    for n in 0..=n_max {
        let rad = 0.5f64.powi(n as i32 - 1);
        let across = if rad >= 0.5 { resolution } else { (2.0 * rad * resolution as f64).floor() as usize + 1 };
        if across < 4 {
            return Err(KernelError::Resolution { level: n, points: across });
        }
        if n + 2 > log2r {
            return Err(KernelError::Param(format!("n_max = {n_max} exceeds log2(resolution) − 2")));
        }
        pieces.push(build_piece(spec, mu, s0, n, rad, resolution, degree)?);
    }
    Ok(DyadicDecomposition {
        mu,
        n_max,
        resolution,
        degree,
        pieces,
    })
}

fn build_piece(
    spec: &KernelSpec,
    _mu: f64,
    s0: f64,
    n: usize,
    rad: f64,
    res: usize,
    degree: u32,
) -> Result<DyadicPiece, KernelError> {
    let idx: Vec<(usize, usize)> = (0..res)
        .flat_map(|i| (0..res).map(move |j| (i, j)))
        .filter(|&(i, j)| min_disp(i, res).abs().max(min_disp(j, res).abs()) <= rad)
        .collect();
    let points: Vec<[f64; 2]> = idx.iter().map(|&(i, j)| [min_disp(i, res), min_disp(j, res)]).collect();
    let tmax = rad.powf(s0);
    let ht = tmax / TIME_POINTS as f64;
    let times: Vec<f64> = (0..TIME_POINTS).map(|q| (q as f64 + 0.5) * ht).collect();
    let np = points.len();
    let mut raw = Vec::with_capacity(np * TIME_POINTS);
    let mut g1 = Vec::with_capacity(np * TIME_POINTS);
    let mut g2 = Vec::with_capacity(np * TIME_POINTS);
    for &t in &times {
        let k = Slice::kernel(spec, t, MultiIndex::default())?.sample_grid(res);
        let k1 = Slice::kernel(spec, t, MultiIndex { k0: 0, k1: 1, k2: 0 })?.sample_grid(res);
        let k2 = Slice::kernel(spec, t, MultiIndex { k0: 0, k1: 0, k2: 1 })?.sample_grid(res);
        for (p, &(i, j)) in idx.iter().enumerate() {
            let (chi, dchi) = cutoff(s0, n, t, points[p]);
            let kv = k.values[i * res + j];
            raw.push(kv * chi);
            g1.push(k1.values[i * res + j] * chi + kv * dchi[0]);
            g2.push(k2.values[i * res + j] * chi + kv * dchi[1]);
        }
    }
    // moment correction in coordinates rescaled to the unit annulus
    let sc = (1u64 << n) as f64;
    let mons = monomials(s0, degree);
    let nm = mons.len();
    let mut pvals = vec![0.0; nm * np * TIME_POINTS];
    let mut bump = vec![0.0; np * TIME_POINTS];
    for (q, &t) in times.iter().enumerate() {
        let tt = sc.powf(s0) * t;
        for (p, x) in points.iter().enumerate() {
            let y = [sc * x[0], sc * x[1]];
            let z = q * np + p;
            let nn = smooth_norm(s0, tt, y);
            bump[z] = if nn < 1.0 { (-1.0 / (1.0 - nn * nn)).exp() } else { 0.0 };
            for (b, m) in mons.iter().enumerate() {
                pvals[b * np * TIME_POINTS + z] = tt.powi(m[0] as i32) * y[0].powi(m[1] as i32) * y[1].powi(m[2] as i32);
            }
        }
    }
    let nz = np * TIME_POINTS;
    let vol = ht * sc.powf(s0) * (sc / res as f64).powi(2);
    let moments = |f: &[f64]| -> Vec<f64> {
        (0..nm).map(|b| vol * (0..nz).map(|z| f[z] * pvals[b * nz + z]).sum::<f64>()).collect()
    };
    let raw_moments = moments(&raw);
    let gram = DMatrix::from_fn(nm, nm, |a, b| {
        vol * (0..nz).map(|z| pvals[a * nz + z] * pvals[b * nz + z] * bump[z]).sum::<f64>()
    });
    let coef = gram
        .lu()
        .solve(&DVector::from_vec(raw_moments.clone()))
        .ok_or_else(|| KernelError::Param(format!("moment system singular at level {n}")))?;
    let corrected: Vec<f64> = (0..nz)
        .map(|z| raw[z] - (0..nm).map(|b| coef[b] * pvals[b * nz + z]).sum::<f64>() * bump[z])
        .collect();
    let residual_moments = moments(&corrected);
    Ok(DyadicPiece {
        level: n,
        support_radius: rad,
        times,
        points,
        raw,
        corrected,
        grad: [g1, g2],
        residual_moments,
        raw_moments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_of_unity_between_scales() {
        let p = super::super::ParabolicScaling::new(0.9);
        let nmax = 6;
        for &(t, x) in &[(1e-3, [0.05, 0.0]), (0.2, [0.1, 0.3]), (1e-4, [0.03, -0.02]), (0.01, [0.0, 0.0])] {
            let r = p.norm(t, x);
            if r >= 0.5f64.powi(nmax as i32 - 1) && r <= 0.5 {
                assert!((partition_weight(0.9, nmax, t, x) - 1.0).abs() < 1e-12, "z=({t},{x:?})");
            }
        }
    }

    #[test]
    fn cutoff_gradient_matches_finite_difference() {
        let (t, x) = (2e-3, [0.11, -0.07]);
        let (_, g) = cutoff(1.8, 2, t, x);
        let h = 1e-6;
        let fd = (cutoff(1.8, 2, t, [x[0] + h, x[1]]).0 - cutoff(1.8, 2, t, [x[0] - h, x[1]]).0) / (2.0 * h);
        assert!((g[0] - fd).abs() < 1e-5 * fd.abs().max(1.0));
    }

    #[test]
    fn pieces_bounds_support_and_moments() {
        let d = dyadic_decompose(&KernelSpec::heat(0.9), 6, 256, 2).unwrap();
        for p in &d.pieces {
            assert!(p.max_active_radius(0.9) <= p.support_radius + 1e-12);
            let scale = p.raw_moments.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let res = p.residual_moments.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(res < 1e-8 * scale.max(1.0), "level {}: {res} vs {scale}", p.level);
        }
        let f = d.bound_fit(2..=6, true).unwrap();
        assert!((f.slope - 2.0).abs() < 0.2, "slope {}", f.slope);
        let g = d.gradient_fit(2..=6).unwrap();
        assert!((g.slope - 3.0).abs() < 0.3, "gradient slope {}", g.slope);
    }

    #[test]
    fn resolution_errors() {
        assert!(dyadic_decompose(&KernelSpec::heat(0.9), 4, 16, 2).is_err());
        assert!(dyadic_decompose(&KernelSpec::RieszHeat { i: 1, mu: 0.9 }, 2, 64, 2).is_err());
    }
}
