//! Evaluation of multiplier kernels at points and on grids.

use super::{lambda, KernelError, KernelSpec};
use crate::field::{Fft2, PeriodicField};
use crate::quad::RadialTable;
use crate::structure::MultiIndex;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

type Coeff = dyn Fn(i64, i64) -> Complex64 + Send + Sync;

/// Largest table materialized for point evaluation, in modes.
const TABLE_LIMIT: usize = 1 << 22;

/// A fixed-time kernel slice `Σ_{|k_i|≤cut} m(k) e^{2πik·x}`.
pub struct Slice {
    pub cut: i64,
    f: Box<Coeff>,
}

/// Mode radius beyond which `e^{−tλ}` is below `e^{−46}`.
pub fn heat_cut(mu: f64, t: f64) -> i64 {
    ((46.0 / t).powf(1.0 / (2.0 * mu)) / (2.0 * PI)).ceil() as i64 + 2
}

impl Slice {
    pub fn from_fn(cut: i64, f: impl Fn(i64, i64) -> Complex64 + Send + Sync + 'static) -> Self {
        Self { cut, f: Box::new(f) }
    }

    /// `D^k K(t, ·)` for `spec`, with `k0` time derivatives taken through the
    /// heat factor.
    pub fn kernel(spec: &KernelSpec, t: f64, k: MultiIndex) -> Result<Slice, KernelError> {
        let spatial = move |k1: i64, k2: i64| {
            Complex64::new(0.0, 2.0 * PI * k1 as f64).powu(k.k1) * Complex64::new(0.0, 2.0 * PI * k2 as f64).powu(k.k2)
        };
        match spec {
            KernelSpec::RieszComponent { .. } => {
                if k.k0 > 0 {
                    return Err(KernelError::Unsupported("time derivative of a Riesz multiplier".into()));
                }
                Err(KernelError::Unsupported("Riesz multiplier has no finite mode cut; use riesz_apply".into()))
            }
            KernelSpec::FractionalHeat { mu } | KernelSpec::HeatDeriv { mu, .. } | KernelSpec::RieszHeat { mu, .. } => {
                if t <= 0.0 {
                    return Err(KernelError::NonPositiveTime(t));
                }
                let (mu, s) = (*mu, spec.clone());
                let cut = heat_cut(mu, t) + (k.k1 + k.k2 + 2 * k.k0) as i64;
                Ok(Slice::from_fn(cut, move |k1, k2| {
                    let l = lambda(mu, k1, k2);
                    s.symbol(k1, k2) * spatial(k1, k2) * (-t * l).exp() * (-l).powi(k.k0 as i32)
                }))
            }
            KernelSpec::Mollified { base, mollifier } => {
                if k.k0 > 0 {
                    return Err(KernelError::Unsupported("time derivative of a mollified kernel".into()));
                }
                let mu = base.mu().ok_or_else(|| KernelError::Unsupported("mollified bare Riesz multiplier".into()))?;
                if matches!(**base, KernelSpec::Mollified { .. }) {
                    return Err(KernelError::Unsupported("nested mollification".into()));
                }
                let m = mollifier.build(mu);
                let mut cut = m.kcut();
                if t > 1.0001 * m.tau {
                    cut = cut.min(heat_cut(mu, t - m.tau) + 2);
                }
                let rmax = cut as f64 * 2f64.sqrt() + 1.0;
                let g = RadialTable::new(rmax, 0.125, |r| {
                    let l = if r == 0.0 { 0.0 } else { (2.0 * PI * r).powf(2.0 * mu) };
                    m.time_factor(t, l)
                });
                let b = base.clone();
                Ok(Slice::from_fn(cut, move |k1, k2| {
                    let r = ((k1 * k1 + k2 * k2) as f64).sqrt();
                    b.symbol(k1, k2) * spatial(k1, k2) * (m.space_multiplier(k1, k2) * g.eval(r))
                }))
            }
        }
    }

    #[inline]
    pub fn coeff(&self, k1: i64, k2: i64) -> Complex64 {
        (self.f)(k1, k2)
    }

    fn table(&self) -> Vec<Complex64> {
        let c = self.cut;
        (-c..=c)
            .into_par_iter()
            .flat_map_iter(|k1| (-c..=c).map(move |k2| (k1, k2)))
            .map(|(k1, k2)| self.coeff(k1, k2))
            .collect()
    }

    /// Values at arbitrary points by direct summation.
    pub fn eval_points(&self, pts: &[[f64; 2]]) -> Vec<f64> {
        let c = self.cut;
        let w = (2 * c + 1) as usize;
        let table = if w * w <= TABLE_LIMIT { Some(self.table()) } else { None };
        pts.par_iter()
            .map(|x| {
                let e2: Vec<Complex64> = (-c..=c).map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 * x[1])).collect();
                let mut s = 0.0;
                for (r, k1) in (-c..=c).enumerate() {
                    let e1 = Complex64::from_polar(1.0, 2.0 * PI * k1 as f64 * x[0]);
                    let row = match &table {
                        Some(t) => t[r * w..(r + 1) * w].iter().zip(&e2).map(|(a, b)| a * b).sum::<Complex64>(),
                        None => (-c..=c).zip(&e2).map(|(k2, b)| self.coeff(k1, k2) * b).sum(),
                    };
                    s += (e1 * row).re;
                }
                s
            })
            .collect()
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        self.eval_points(&[x])[0]
    }

    /// Exact samples on the `m × m` grid: all modes are folded onto their
    /// aliases before one inverse FFT.
    pub fn sample_grid(&self, m: usize) -> PeriodicField {
        let c = self.cut;
        let mi = m as i64;
        let rows: Vec<Vec<Complex64>> = (0..mi)
            .into_par_iter()
            .map(|r1| {
                let mut row = vec![Complex64::default(); m];
                let mut k1 = -c + (r1 - (-c)).rem_euclid(mi);
                while k1 <= c {
                    for k2 in -c..=c {
                        row[k2.rem_euclid(mi) as usize] += self.coeff(k1, k2);
                    }
                    k1 += mi;
                }
                row
            })
            .collect();
        let mut data: Vec<Complex64> = rows.into_iter().flatten().collect();
        Fft2::get(m, m).inverse(&mut data);
        PeriodicField::from_values(m, m, data.iter().map(|z| z.re).collect())
    }
}

/// `Σ_{|k|≤mode_cut} e^{−t(2π|k|)^{2μ}} e^{2πik·x}`.
pub fn heat_kernel_eval(mu: f64, t: f64, x: [f64; 2], mode_cut: i64) -> Result<f64, KernelError> {
    if t <= 0.0 {
        return Err(KernelError::NonPositiveTime(t));
    }
    if mode_cut < 1 {
        return Err(KernelError::Param("mode_cut must be ≥ 1".into()));
    }
    let c2 = mode_cut * mode_cut;
    let s = Slice::from_fn(mode_cut, move |k1, k2| {
        if k1 * k1 + k2 * k2 > c2 {
            Complex64::default()
        } else {
            Complex64::new((-t * lambda(mu, k1, k2)).exp(), 0.0)
        }
    });
    Ok(s.eval(x))
}

/// `R_i f` with `R_i = ∂_i(−Δ)^{−1/2}`.
pub fn riesz_apply(i: u8, f: &PeriodicField) -> PeriodicField {
    f.riesz(i)
}
