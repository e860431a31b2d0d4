//! Space-time mollifiers `ρ_ε(t,x) = τ^{-1}b(t/τ)·ε^{-2}b(x₁/ε)b(x₂/ε)` and
//! their action on heat-type multipliers.

use crate::quad::gauss_legendre;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

/// One-dimensional even bump profile on `[-1, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// `exp(−1/(1−y²))`
    Bump,
    /// `exp(−1/(1−y⁴))`, flatter top and steeper edge.
    QuarticBump,
}

/// How the time scale follows ε.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TimeScaling {
    /// `τ = ε^{2μ}`, consistent with the parabolic scaling.
    #[default]
    Parabolic,
    /// `τ = ε²`, the literal `ε^{-4}ρ(ε^{-2}t, ε^{-1}x)` reading.
    Literal,
}

const HAT_NODES: usize = 512;
const TIME_CELLS: usize = 256;
const HAT_FLOOR: f64 = 1e-9;

impl Profile {
    fn raw(self, y: f64) -> f64 {
        let p = match self {
            Profile::Bump => y * y,
            Profile::QuarticBump => y.powi(4),
        };
        if p >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - p)).exp()
        }
    }

    fn mass(self) -> f64 {
        static M: [OnceLock<f64>; 2] = [OnceLock::new(), OnceLock::new()];
        *M[self as usize].get_or_init(|| gauss_legendre(HAT_NODES).iter().map(|&(y, w)| w * self.raw(y)).sum())
    }

    /// Unit-mass profile value.
    pub fn value(self, y: f64) -> f64 {
        self.raw(y) / self.mass()
    }

    /// `b̂(u) = ∫ b(y) e^{−2πiuy} dy` (real, even).
    pub fn hat(self, u: f64) -> f64 {
        gauss_legendre(HAT_NODES)
            .iter()
            .map(|&(y, w)| w * self.raw(y) * (2.0 * PI * u * y).cos())
            .sum::<f64>()
            / self.mass()
    }

    /// Frequency beyond which `|b̂|` stays below `1e-9`.
    pub fn hat_cut(self) -> f64 {
        static C: [OnceLock<f64>; 2] = [OnceLock::new(), OnceLock::new()];
        *C[self as usize].get_or_init(|| {
            let mut last = 1.0;
            let mut u = 0.0;
            while u <= 96.0 {
                if self.hat(u).abs() > HAT_FLOOR {
                    last = u;
                }
                u += 0.25;
            }
            last + 0.5
        })
    }
}

/// Serializable description of a mollifier.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MollifierSpec {
    pub profile: Profile,
    pub eps: f64,
    #[serde(default)]
    pub time_scaling: TimeScaling,
}

impl MollifierSpec {
    pub fn new(profile: Profile, eps: f64) -> Self {
        Self {
            profile,
            eps,
            time_scaling: TimeScaling::Parabolic,
        }
    }

    pub fn tau(&self, mu: f64) -> f64 {
        match self.time_scaling {
            TimeScaling::Parabolic => self.eps.powf(2.0 * mu),
            TimeScaling::Literal => self.eps * self.eps,
        }
    }

    pub fn build(&self, mu: f64) -> Mollifier {
        Mollifier::new(*self, mu)
    }
}

/// A mollifier with precomputed spectral tables.
#[derive(Clone, Debug)]
pub struct Mollifier {
    pub spec: MollifierSpec,
    pub mu: f64,
    pub tau: f64,
    hat: Arc<Vec<f64>>,
    /// `b_τ` at the nodes `−τ + qh`, rescaled so the piecewise-linear
    /// interpolant has unit mass exactly.
    nodes: Arc<Vec<f64>>,
}

impl Mollifier {
    pub fn new(spec: MollifierSpec, mu: f64) -> Self {
        let tau = spec.tau(mu);
        let kc = spec.kcut();
        let hat = (0..=kc).map(|k| spec.profile.hat(spec.eps * k as f64)).collect();
        let h = 2.0 * tau / TIME_CELLS as f64;
        let mut nodes: Vec<f64> = (0..=TIME_CELLS)
            .map(|q| spec.profile.value(-1.0 + q as f64 * 2.0 / TIME_CELLS as f64) / tau)
            .collect();
        let mass: f64 = nodes.windows(2).map(|w| 0.5 * h * (w[0] + w[1])).sum();
        nodes.iter_mut().for_each(|v| *v /= mass);
        Self {
            spec,
            mu,
            tau,
            hat: Arc::new(hat),
            nodes: Arc::new(nodes),
        }
    }

    pub fn eps(&self) -> f64 {
        self.spec.eps
    }

    /// Per-axis spectral cut `|k_i| ≤ kcut`.
    pub fn kcut(&self) -> i64 {
        self.spec.kcut()
    }

    /// `b̂(εk)`; zero beyond the cut.
    #[inline]
    pub fn space_hat(&self, k: i64) -> f64 {
        self.hat.get(k.unsigned_abs() as usize).copied().unwrap_or(0.0)
    }

    /// Fourier coefficient of the periodized spatial factor.
    #[inline]
    pub fn space_multiplier(&self, k1: i64, k2: i64) -> f64 {
        self.space_hat(k1) * self.space_hat(k2)
    }

    /// Space-time density on the plane.
    pub fn density(&self, t: f64, x: [f64; 2]) -> f64 {
        let e = self.spec.eps;
        let p = self.spec.profile;
        p.value(t / self.tau) / self.tau * p.value(x[0] / e) * p.value(x[1] / e) / (e * e)
    }

    /// Time profile `b_τ(s)`, unit mass.
    pub fn time_density(&self, s: f64) -> f64 {
        self.spec.profile.value(s / self.tau) / self.tau
    }

    /// Time-only weights for a uniform grid of step `dt`, centred at 0:
    /// returns `(offset, weights)` with weights summing to 1.
    pub fn time_weights(&self, dt: f64) -> Vec<(i64, f64)> {
        let m = (self.tau / dt).floor() as i64;
        let mut w: Vec<(i64, f64)> = (-m..=m).map(|q| (q, self.time_density(q as f64 * dt))).collect();
        let s: f64 = w.iter().map(|p| p.1).sum();
        if s > 0.0 {
            w.iter_mut().for_each(|p| p.1 /= s);
            w.retain(|p| p.1 > 0.0);
            w
        } else {
            vec![(0, 1.0)]
        }
    }

    /// `g(t,λ) = ∫_{s<t} e^{−(t−s)λ} b_τ(s) ds`, exact for the piecewise-linear
    /// interpolant of `b_τ`.
    pub fn time_factor(&self, t: f64, lambda: f64) -> f64 {
        let tau = self.tau;
        if t <= -tau {
            return 0.0;
        }
        let h = 2.0 * tau / TIME_CELLS as f64;
        let f = &self.nodes;
        // number of complete cells left of t
        let full = (((t + tau) / h).floor() as usize).min(TIME_CELLS);
        let mut acc = 0.0;
        let mut decay; // e^{−(t−b)λ} for the current cell end b
        if full < TIME_CELLS {
            let a = -tau + full as f64 * h;
            let hp = t - a;
            if hp > 0.0 {
                let fb = f[full] + (f[full + 1] - f[full]) * hp / h;
                let (e0, e1) = exp_moments(hp, lambda);
                acc += fb * e0 + (f[full] - fb) / hp * e1;
            }
            decay = (-(hp) * lambda).exp();
        } else {
            decay = (-(t - tau) * lambda).exp();
        }
        if full == 0 {
            return acc;
        }
        let (e0, e1) = exp_moments(h, lambda);
        let step = (-h * lambda).exp();
        for c in (0..full).rev() {
            if decay == 0.0 {
                break;
            }
            acc += decay * (f[c + 1] * e0 + (f[c] - f[c + 1]) / h * e1);
            decay *= step;
        }
        acc
    }

    /// `∫ g(u,λ)² du` over `u ∈ (−τ, ∞)`, the variance weight of one mode of
    /// `K_ε∗ξ` at stationarity; integrated exactly beyond `τ`.
    pub fn stationary_weight(&self, lambda: f64) -> f64 {
        let tau = self.tau;
        let inner = crate::quad::integrate(-tau, tau, 16, 16, |u| self.time_factor(u, lambda).powi(2));
        let g = self.time_factor(tau, lambda);
        let tail = if lambda > 0.0 { g * g / (2.0 * lambda) } else { f64::INFINITY };
        inner + tail
    }
}

impl MollifierSpec {
    fn kcut(&self) -> i64 {
        (self.profile.hat_cut() / self.eps).ceil() as i64
    }
}

/// `(∫_0^h e^{−vλ}dv, ∫_0^h v e^{−vλ}dv)`.
fn exp_moments(h: f64, lambda: f64) -> (f64, f64) {
    let z = h * lambda;
    if z < 1e-2 {
        let e0 = 1.0 - z / 2.0 + z * z / 6.0 - z.powi(3) / 24.0 + z.powi(4) / 120.0;
        let e1 = 0.5 - z / 3.0 + z * z / 8.0 - z.powi(3) / 30.0 + z.powi(4) / 144.0;
        (h * e0, h * h * e1)
    } else {
        let ez = (-z).exp();
        (h * (-(-z).exp_m1()) / z, h * h * (1.0 - ez * (1.0 + z)) / (z * z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;

    #[test]
    fn profiles_have_unit_mass_and_are_even() {
        for p in [Profile::Bump, Profile::QuarticBump] {
            let m = integrate(-1.0, 1.0, 8, 64, |y| p.value(y));
            assert!((m - 1.0).abs() < 1e-8, "{p:?} mass {m}");
            assert_eq!(p.value(0.3), p.value(-0.3));
            assert!((p.hat(0.0) - 1.0).abs() < 1e-12);
            assert_eq!(p.value(1.0), 0.0);
        }
    }

    #[test]
    fn hat_matches_direct_quadrature_and_decays() {
        let p = Profile::Bump;
        let u = 1.7;
        let direct = integrate(-1.0, 1.0, 64, 32, |y| p.value(y) * (2.0 * PI * u * y).cos());
        assert!((p.hat(u) - direct).abs() < 1e-10);
        assert!(p.hat(p.hat_cut() + 1.0).abs() < 1e-8);
        assert!(p.hat_cut() < 96.0);
    }

    #[test]
    fn time_factor_matches_quadrature() {
        let m = MollifierSpec::new(Profile::Bump, 0.25).build(0.9);
        let tau = m.tau;
        for &(t, lam) in &[(0.3 * tau, 0.0), (-0.5 * tau, 40.0), (0.2 * tau, 3e4), (2.0 * tau, 500.0), (0.9, 7.0)] {
            let lo = -tau;
            let hi = t.min(tau);
            let direct = integrate(lo, hi, 64, 32, |s| (-(t - s) * lam).exp() * m.time_density(s));
            let g = m.time_factor(t, lam);
            assert!((g - direct).abs() < 1e-5 * direct.abs().max(1e-3), "t={t} λ={lam}: {g} vs {direct}");
        }
        assert!((m.time_factor(2.0 * tau, 0.0) - 1.0).abs() < 1e-14);
        assert_eq!(m.time_factor(-tau, 1.0), 0.0);
    }

    #[test]
    fn time_weights_are_normalized_and_symmetric() {
        let m = MollifierSpec::new(Profile::QuarticBump, 0.125).build(0.9);
        let w = m.time_weights(m.tau / 5.0);
        let s: f64 = w.iter().map(|p| p.1).sum();
        assert!((s - 1.0).abs() < 1e-14);
        let n = w.len();
        for i in 0..n {
            assert!((w[i].1 - w[n - 1 - i].1).abs() < 1e-15);
        }
    }

    #[test]
    fn literal_scaling_uses_eps_squared() {
        let mut s = MollifierSpec::new(Profile::Bump, 0.1);
        s.time_scaling = TimeScaling::Literal;
        assert!((s.tau(0.9) - 0.01).abs() < 1e-15);
    }
}
