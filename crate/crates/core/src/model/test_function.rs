//! Scaled test functions `φ^λ_x(y) = λ^{-2}φ((y−x)/λ)`.

use crate::field::PeriodicField;
use crate::kernels::bessel_j0;
use crate::quad::{integrate, RadialTable};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::OnceLock;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    #[default]
    Spatial,
    /// Time scaled by `λ^{s0}` as well.
    SpaceTime,
}

fn raw(r2: f64) -> f64 {
    if r2 >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r2)).exp()
    }
}

fn mass() -> f64 {
    static M: OnceLock<f64> = OnceLock::new();
    *M.get_or_init(|| 2.0 * PI * integrate(0.0, 1.0, 16, 32, |r| raw(r * r) * r))
}

/// Unit-mass radial bump supported in the unit disc.
pub fn profile(y: [f64; 2]) -> f64 {
    raw(y[0] * y[0] + y[1] * y[1]) / mass()
}

/// Radial Fourier transform `Φ(|ξ|) = ∫ φ(y) e^{−2πiξ·y} dy`.
pub fn profile_hat(xi: f64) -> f64 {
    static T: OnceLock<RadialTable> = OnceLock::new();
    let t = T.get_or_init(|| {
        RadialTable::new(80.0, 1.0 / 64.0, |q| {
            2.0 * PI * integrate(0.0, 1.0, 16, 32, |r| raw(r * r) * bessel_j0(2.0 * PI * q * r) * r) / mass()
        })
    });
    if xi >= 80.0 {
        0.0
    } else {
        t.eval(xi)
    }
}

/// Minimal periodic displacement on the unit circle.
#[inline]
pub fn wrap(d: f64) -> f64 {
    d - d.round()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub center: [f64; 2],
    pub lambda: f64,
    #[serde(default)]
    pub variant: Variant,
    /// Time centre for the space-time variant.
    #[serde(default)]
    pub t_center: f64,
}

impl TestFunction {
    pub fn new(center: [f64; 2], lambda: f64) -> Self {
        assert!(lambda > 0.0 && lambda <= 1.0, "λ must lie in (0, 1]");
        Self {
            center,
            lambda,
            variant: Variant::Spatial,
            t_center: 0.0,
        }
    }

    pub fn value(&self, y: [f64; 2]) -> f64 {
        let l = self.lambda;
        profile([wrap(y[0] - self.center[0]) / l, wrap(y[1] - self.center[1]) / l]) / (l * l)
    }

    /// Space-time value with time scaled by `λ^{s0}` (the time factor is the
    /// one-dimensional bump of unit mass).
    pub fn value_st(&self, mu: f64, t: f64, y: [f64; 2]) -> f64 {
        let lt = self.lambda.powf(2.0 * mu);
        crate::kernels::Profile::Bump.value((t - self.t_center) / lt) / lt * self.value(y)
    }

    /// `e^{2πik·x} Φ(λ|k|)`, the coefficient paired with `f̂(k)`.
    pub fn fourier(&self, k1: i64, k2: i64) -> num_complex::Complex64 {
        let r = ((k1 * k1 + k2 * k2) as f64).sqrt();
        let ph = 2.0 * PI * (k1 as f64 * self.center[0] + k2 as f64 * self.center[1]);
        num_complex::Complex64::from_polar(profile_hat(self.lambda * r), ph)
    }

    pub fn sample(&self, nx: usize, ny: usize) -> PeriodicField {
        PeriodicField::from_fn(nx, ny, |x, y| self.value([x, y]))
    }

    /// Grid quadrature of `∫ f φ^λ_x`, touching only the support.
    pub fn pair(&self, f: &PeriodicField) -> f64 {
        let (nx, ny) = (f.nx as i64, f.ny as i64);
        let ri = (self.lambda * nx as f64).ceil() as i64 + 1;
        let rj = (self.lambda * ny as f64).ceil() as i64 + 1;
        let ci = (self.center[0] * nx as f64).round() as i64;
        let cj = (self.center[1] * ny as f64).round() as i64;
        let mut s = 0.0;
        let (ilo, ihi) = if 2 * ri + 1 >= nx { (0, nx - 1) } else { (ci - ri, ci + ri) };
        let (jlo, jhi) = if 2 * rj + 1 >= ny { (0, ny - 1) } else { (cj - rj, cj + rj) };
        for i in ilo..=ihi {
            let ii = i.rem_euclid(nx);
            for j in jlo..=jhi {
                let jj = j.rem_euclid(ny);
                let w = self.value([ii as f64 / nx as f64, jj as f64 / ny as f64]);
                if w != 0.0 {
                    s += w * f.values[(ii * ny + jj) as usize];
                }
            }
        }
        s * f.cell_area()
    }

    /// `⟨1, φ⟩` on the grid.
    pub fn grid_mass(&self, nx: usize, ny: usize) -> f64 {
        self.pair(&PeriodicField::from_fn(nx, ny, |_, _| 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_mass_and_transform() {
        let phi = TestFunction::new([0.3, 0.6], 0.2);
        assert!((phi.grid_mass(256, 256) - 1.0).abs() < 1e-6);
        assert!((profile_hat(0.0) - 1.0).abs() < 1e-10);
        // transform against a direct grid sum
        let f = phi.sample(256, 256);
        let sp = f.spectrum();
        for &(k1, k2) in &[(1i64, 0i64), (3, -2), (5, 5)] {
            let idx = (k1.rem_euclid(256) * 256 + k2.rem_euclid(256)) as usize;
            let want = phi.fourier(k1, k2).conj();
            assert!((sp.coeffs[idx] - want).norm() < 1e-6, "{:?} vs {:?}", sp.coeffs[idx], want);
        }
    }

    #[test]
    fn pairing_wraps_around_the_torus() {
        let phi = TestFunction::new([0.02, 0.98], 0.1);
        let f = PeriodicField::from_fn(128, 128, |x, _| (2.0 * PI * x).cos());
        let direct: f64 = f.inner(&phi.sample(128, 128));
        assert!((phi.pair(&f) - direct).abs() < 1e-12);
    }
}
