//! Radial order fits `log sup_{‖z‖_s = r}|D^kK(z)|` against `log r`.

use super::spectral::{heat_cut, Slice};
use super::{lambda, KernelError, KernelSpec, ParabolicScaling};
use crate::fit::ScalingFit;
use crate::quad::gauss_legendre;
use crate::structure::MultiIndex;
use num_complex::Complex64;

pub const DEFAULT_RADII: [f64; 5] = [0.125, 0.0625, 0.03125, 0.015625, 0.0078125];

/// Sample points on the parabolic sphere of radius `r` with `t > 0`: the full
/// time face `t = r^{s0}` and the spatial faces `|x|_∞ = r` at smaller times.
pub fn sphere_template(mu: f64, r: f64) -> Vec<(f64, Vec<[f64; 2]>)> {
    let s0 = 2.0 * mu;
    let top = r.powf(s0);
    let m = 8;
    let face: Vec<[f64; 2]> = (0..=m)
        .flat_map(|i| (0..=m).map(move |j| [r * (2.0 * i as f64 / m as f64 - 1.0), r * (2.0 * j as f64 / m as f64 - 1.0)]))
        .collect();
    let rim: Vec<[f64; 2]> = face.iter().copied().filter(|x| x[0].abs().max(x[1].abs()) >= r * (1.0 - 1e-12)).collect();
    let mut out = vec![(top, face)];
    for f in [0.5, 0.25, 0.125] {
        out.push((f * top, rim.clone()));
    }
    out
}

/// Fit with an arbitrary evaluator `eval(t, points)`.
pub fn order_fit_with(
    mu: f64,
    radii: &[f64],
    eval: impl Fn(f64, &[[f64; 2]]) -> Result<Vec<f64>, KernelError>,
) -> Result<ScalingFit, KernelError> {
    if radii.len() < 4 || radii.iter().any(|&r| !(r > 0.0 && r <= 0.5)) {
        return Err(KernelError::Param("need at least 4 radii in (0, 1/2]".into()));
    }
    let mut sups = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut sup: f64 = 0.0;
        let mut bad = false;
        for (t, pts) in sphere_template(mu, r) {
            for v in eval(t, &pts)? {
                if v.is_finite() {
                    sup = sup.max(v.abs());
                } else {
                    bad = true;
                }
            }
        }
        sups.push(if bad { f64::NAN } else { sup });
    }
    ScalingFit::fit(radii, &sups).ok_or_else(|| KernelError::Param("fewer than two usable radii".into()))
}

/// Order of `D^k K`; compare the slope with `ζ − |k|_s`.
pub fn kernel_order_fit(spec: &KernelSpec, k: MultiIndex, radii: &[f64]) -> Result<ScalingFit, KernelError> {
    let mu = spec.mu().ok_or_else(|| KernelError::Unsupported("order fit needs a heat-type kernel".into()))?;
    order_fit_with(mu, radii, |t, pts| Ok(Slice::kernel(spec, t, k)?.eval_points(pts)))
}

fn heat_parts(spec: &KernelSpec) -> Result<f64, KernelError> {
    match spec {
        KernelSpec::FractionalHeat { mu } | KernelSpec::HeatDeriv { mu, .. } | KernelSpec::RieszHeat { mu, .. } => Ok(*mu),
        _ => Err(KernelError::Unsupported(format!("convolution of {spec:?}"))),
    }
}

/// Space-time convolution `(K_a ∗ K_b)(t, ·)` as a slice; the time integral of
/// the multiplier product is taken by Gauss–Legendre on `[0, t]`.
pub fn convolution_slice(a: &KernelSpec, b: &KernelSpec, t: f64) -> Result<Slice, KernelError> {
    let mu = heat_parts(a)?;
    if (heat_parts(b)? - mu).abs() > 0.0 {
        return Err(KernelError::Param("convolved kernels must share μ".into()));
    }
    if t <= 0.0 {
        return Err(KernelError::NonPositiveTime(t));
    }
    let rule = gauss_legendre(16);
    let (a, b) = (a.clone(), b.clone());
    Ok(Slice::from_fn(heat_cut(mu, t), move |k1, k2| {
        let l = lambda(mu, k1, k2);
        let time: f64 = rule
            .iter()
            .map(|&(y, w)| {
                let s = 0.5 * t * (y + 1.0);
                0.5 * t * w * (-(t - s) * l).exp() * (-s * l).exp()
            })
            .sum();
        a.symbol(k1, k2) * b.symbol(k1, k2) * Complex64::new(time, 0.0)
    }))
}

/// Which two-kernel construction to fit.
#[derive(Clone, Debug)]
pub enum ConvolutionSpec {
    Convolution(KernelSpec, KernelSpec),
    Product(KernelSpec, KernelSpec),
}

/// Order of `K_a ∗ K_b`; compare with `ζ_a + ζ_b + |s|`.
pub fn convolution_order_fit(a: &KernelSpec, b: &KernelSpec, radii: &[f64]) -> Result<ScalingFit, KernelError> {
    let mu = heat_parts(a)?;
    order_fit_with(mu, radii, |t, pts| Ok(convolution_slice(a, b, t)?.eval_points(pts)))
}

/// Order of the pointwise product `K_a·K_b`; compare with `ζ_a + ζ_b`.
pub fn product_order_fit(a: &KernelSpec, b: &KernelSpec, radii: &[f64]) -> Result<ScalingFit, KernelError> {
    let mu = heat_parts(a)?;
    let k = MultiIndex::default();
    order_fit_with(mu, radii, |t, pts| {
        let va = Slice::kernel(a, t, k)?.eval_points(pts);
        let vb = Slice::kernel(b, t, k)?.eval_points(pts);
        Ok(va.iter().zip(&vb).map(|(x, y)| x * y).collect())
    })
}

impl ConvolutionSpec {
    pub fn fit(&self, radii: &[f64]) -> Result<ScalingFit, KernelError> {
        match self {
            ConvolutionSpec::Convolution(a, b) => convolution_order_fit(a, b, radii),
            ConvolutionSpec::Product(a, b) => product_order_fit(a, b, radii),
        }
    }
}

/// Declared order of a convolution.
pub fn convolution_order(a: &KernelSpec, b: &KernelSpec) -> f64 {
    let p = ParabolicScaling::new(a.mu().unwrap_or(1.0));
    a.zeta() + b.zeta() + p.total()
}
