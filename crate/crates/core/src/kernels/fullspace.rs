//! The fractional heat kernel on the whole plane, by Hankel quadrature.

use crate::quad::integrate;
use std::f64::consts::PI;

/// `J₀(z) = (1/π)∫_0^π cos(z cos φ) dφ` by the trapezoid rule, which converges
/// geometrically for this periodic integrand once the node count exceeds `z`.
pub fn bessel_j0(z: f64) -> f64 {
    let n = (z.abs() as usize + 32).max(32);
    let h = PI / n as f64;
    let mut s = z.cos();
    for q in 1..n {
        s += (z * (q as f64 * h).cos()).cos();
    }
    s / n as f64
}

/// `K(t,x) = (1/2π)∫_0^∞ e^{−t s^{2μ}} J₀(s|x|) s ds` on `ℝ²`.
pub fn full_space_kernel(mu: f64, t: f64, x: [f64; 2]) -> f64 {
    assert!(t > 0.0, "t must be positive");
    let r = x[0].hypot(x[1]);
    let smax = (46.0 / t).powf(1.0 / (2.0 * mu));
    // resolve both the oscillation of J₀ and the decay of the exponential
    let panels = ((smax * r / PI).ceil() as usize + 16).min(4096);
    integrate(0.0, smax, panels, 24, |s| (-t * s.powf(2.0 * mu)).exp() * bessel_j0(s * r) * s) / (2.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j0_reference_values() {
        assert!((bessel_j0(0.0) - 1.0).abs() < 1e-15);
        assert!((bessel_j0(1.0) - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((bessel_j0(10.0) - (-0.245_935_764_451_348_3)).abs() < 1e-13);
    }

    #[test]
    fn gaussian_at_mu_one() {
        for &(t, x) in &[(0.05f64, [0.1f64, 0.2]), (0.01, [0.05, 0.0])] {
            let r2 = x[0] * x[0] + x[1] * x[1];
            let g = (-r2 / (4.0 * t)).exp() / (4.0 * PI * t);
            assert!((full_space_kernel(1.0, t, x) - g).abs() < 1e-9 * g);
        }
    }

    #[test]
    fn scaling_law() {
        let mu = 0.9;
        for &t in &[0.01, 0.03, 0.1] {
            for &x in &[[0.0, 0.0], [0.05, 0.02], [0.1, -0.08]] {
                let lhs = full_space_kernel(mu, t, x);
                let s = t.powf(-1.0 / (2.0 * mu));
                let rhs = t.powf(-1.0 / mu) * full_space_kernel(mu, 1.0, [s * x[0], s * x[1]]);
                assert!((lhs - rhs).abs() < 0.01 * lhs.abs(), "t={t} x={x:?}: {lhs} vs {rhs}");
            }
        }
    }
}
