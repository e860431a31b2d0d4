//! Uniform-in-ε bounds for mollified kernels.

use super::order::sphere_template;
use super::spectral::Slice;
use super::{KernelError, KernelSpec, MollifierSpec, ParabolicScaling};
use crate::structure::MultiIndex;
use serde::Serialize;

const GRID: usize = 1024;

#[derive(Clone, Debug, Serialize)]
pub struct MollifiedRow {
    pub eps: f64,
    /// `sup |K_ε(z)|·(‖z‖_s+ε)^{−ζ}`
    pub bound_ratio: f64,
    /// `sup |K(z)−K_ε(z)|·ε^{−ν}‖z‖_s^{ν−ζ}`
    pub difference_ratio: f64,
    /// `|K(z₀) − K_ε(z₀)|` at the fixed probe point.
    pub pointwise_difference: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MollifiedReport {
    pub zeta: f64,
    pub nu: f64,
    pub probe_point: (f64, [f64; 2]),
    pub rows: Vec<MollifiedRow>,
    pub bound_spread: f64,
    pub difference_spread: f64,
    pub pointwise_monotone: bool,
    pub max_spread: f64,
    /// Set when either spread exceeds `max_spread`.
    pub violation: bool,
}

fn spread(v: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = v.fold((f64::INFINITY, 0.0f64), |(l, h), x| (l.min(x), h.max(x)));
    hi / lo
}

/// Samples `K` and `K_ε = K∗ρ_ε` on parabolic spheres of radii `2^{-1}…2^{-8}`
/// (grid points of a `1024²` mesh) and reports both ratio suprema per ε.
pub fn mollified_kernel_check(
    spec: &KernelSpec,
    profile: super::Profile,
    eps: &[f64],
    nu: f64,
    max_spread: f64,
) -> Result<MollifiedReport, KernelError> {
    let mu = match spec {
        KernelSpec::FractionalHeat { mu } | KernelSpec::HeatDeriv { mu, .. } | KernelSpec::RieszHeat { mu, .. } => *mu,
        _ => return Err(KernelError::Unsupported("mollified check needs a heat-type kernel".into())),
    };
    let zeta = spec.zeta();
    if !(zeta > -(2.0 + 2.0 * mu) && zeta < 0.0) || !(nu > 0.0 && nu <= 1.0) {
        return Err(KernelError::Param("need ζ ∈ (−|s|, 0) and ν ∈ (0, 1]".into()));
    }
    let p = ParabolicScaling::new(mu);
    let k0 = MultiIndex::default();
    let radii: Vec<f64> = (1..=8).map(|j| 0.5f64.powi(j)).collect();
    let mut slices: Vec<(f64, Vec<(usize, f64)>)> = Vec::new();
    for &r in &radii {
        for (t, pts) in sphere_template(mu, r) {
            let idx = pts
                .iter()
                .map(|x| {
                    let i = (x[0] * GRID as f64).round() as i64;
                    let j = (x[1] * GRID as f64).round() as i64;
                    let g = GRID as i64;
                    (i.rem_euclid(g) as usize * GRID + j.rem_euclid(g) as usize, p.norm(t, *x))
                })
                .collect();
            slices.push((t, idx));
        }
    }
    let exact: Vec<Vec<f64>> = slices
        .iter()
        .map(|(t, idx)| {
            let f = Slice::kernel(spec, *t, k0).map(|s| s.sample_grid(GRID))?;
            Ok(idx.iter().map(|&(i, _)| f.values[i]).collect())
        })
        .collect::<Result<_, KernelError>>()?;
    let z0 = (0.2, [0.2, 0.0]);
    let k_z0 = Slice::kernel(spec, z0.0, k0)?.eval(z0.1);
    let mut rows = Vec::new();
    for &e in eps {
        let ms = MollifierSpec::new(profile, e);
        let mspec = KernelSpec::mollified(spec.clone(), ms);
        let (mut b, mut d) = (0.0f64, 0.0f64);
        for ((t, idx), ex) in slices.iter().zip(&exact) {
            let f = Slice::kernel(&mspec, *t, k0)?.sample_grid(GRID);
            for (&(i, nz), &kv) in idx.iter().zip(ex) {
                let v = f.values[i];
                b = b.max(v.abs() * (nz + e).powf(-zeta));
                d = d.max((kv - v).abs() * e.powf(-nu) * nz.powf(nu - zeta));
            }
        }
        let pd = (Slice::kernel(&mspec, z0.0, k0)?.eval(z0.1) - k_z0).abs();
        rows.push(MollifiedRow {
            eps: e,
            bound_ratio: b,
            difference_ratio: d,
            pointwise_difference: pd,
        });
    }
    let bound_spread = spread(rows.iter().map(|r| r.bound_ratio));
    let difference_spread = spread(rows.iter().map(|r| r.difference_ratio));
    let mut sorted: Vec<&MollifiedRow> = rows.iter().collect();
    sorted.sort_by(|a, b| b.eps.partial_cmp(&a.eps).unwrap());
    let pointwise_monotone = sorted.windows(2).all(|w| w[1].pointwise_difference <= w[0].pointwise_difference);
    Ok(MollifiedReport {
        zeta,
        nu,
        probe_point: z0,
        rows,
        bound_spread,
        difference_spread,
        pointwise_monotone,
        max_spread,
        violation: bound_spread > max_spread || difference_spread > max_spread,
    })
}
