//! Fractional heat kernels, Riesz kernels and their mollified versions as
//! Fourier multipliers on the torus, with order and bound checks.

mod dyadic;
mod fullspace;
mod mollified;
mod mollifier;
mod order;
mod spectral;

pub use dyadic::{dyadic_decompose, partition_weight, DyadicDecomposition, DyadicPiece};
pub use fullspace::{bessel_j0, full_space_kernel};
pub use mollified::{mollified_kernel_check, MollifiedReport, MollifiedRow};
pub use mollifier::{Mollifier, MollifierSpec, Profile, TimeScaling};
pub use order::{
    convolution_order, convolution_order_fit, convolution_slice, kernel_order_fit, order_fit_with, product_order_fit,
    sphere_template, ConvolutionSpec,
    DEFAULT_RADII,
};
pub use spectral::{heat_cut, heat_kernel_eval, riesz_apply, Slice};

use crate::structure::MultiIndex;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    #[error("kernel evaluated at t = {0} ≤ 0")]
    NonPositiveTime(f64),
    #[error("unsupported kernel for this operation: {0}")]
    Unsupported(String),
    #[error("resolution insufficient: piece {level} has {points} grid points across its support")]
    Resolution { level: usize, points: usize },
    #[error("invalid parameter: {0}")]
    Param(String),
}

/// Parabolic scaling `(2μ, 1, 1)` on `ℝ × T²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParabolicScaling {
    pub mu: f64,
}

impl ParabolicScaling {
    pub fn new(mu: f64) -> Self {
        Self { mu }
    }

    pub fn s0(&self) -> f64 {
        2.0 * self.mu
    }

    /// `|s| = 2μ + 2`.
    pub fn total(&self) -> f64 {
        2.0 * self.mu + 2.0
    }

    /// `max(|t|^{1/s0}, |x|_∞)`.
    pub fn norm(&self, t: f64, x: [f64; 2]) -> f64 {
        t.abs().powf(1.0 / self.s0()).max(x[0].abs()).max(x[1].abs())
    }

    /// `(λ^{s0} t, λ x)`.
    pub fn dilate(&self, lambda: f64, t: f64, x: [f64; 2]) -> (f64, [f64; 2]) {
        (lambda.powf(self.s0()) * t, [lambda * x[0], lambda * x[1]])
    }

    /// Scaled degree `s0·k0 + k1 + k2`.
    pub fn degree(&self, k: MultiIndex) -> f64 {
        self.s0() * k.k0 as f64 + (k.k1 + k.k2) as f64
    }
}

/// The kernels used by the model and solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    FractionalHeat { mu: f64 },
    /// `∂_j K`.
    HeatDeriv { j: u8, mu: f64 },
    /// The bare Riesz multiplier `i k_i/|k|`, no time dependence.
    RieszComponent { i: u8 },
    /// `R_i K`.
    RieszHeat { i: u8, mu: f64 },
    /// `K ∗ ρ_ε` for a heat-type base kernel.
    Mollified { base: Box<KernelSpec>, mollifier: MollifierSpec },
}

impl KernelSpec {
    pub fn heat(mu: f64) -> Self {
        KernelSpec::FractionalHeat { mu }
    }

    pub fn mollified(base: KernelSpec, mollifier: MollifierSpec) -> Self {
        KernelSpec::Mollified {
            base: Box::new(base),
            mollifier,
        }
    }

    pub fn mu(&self) -> Option<f64> {
        match self {
            KernelSpec::FractionalHeat { mu } | KernelSpec::HeatDeriv { mu, .. } | KernelSpec::RieszHeat { mu, .. } => {
                Some(*mu)
            }
            KernelSpec::RieszComponent { .. } => None,
            KernelSpec::Mollified { base, .. } => base.mu(),
        }
    }

    /// Smoothing order β.
    pub fn beta(&self) -> f64 {
        match self {
            KernelSpec::FractionalHeat { mu } | KernelSpec::RieszHeat { mu, .. } => 2.0 * mu,
            KernelSpec::HeatDeriv { mu, .. } => 2.0 * mu - 1.0,
            KernelSpec::RieszComponent { .. } => 0.0,
            KernelSpec::Mollified { base, .. } => base.beta(),
        }
    }

    /// Declared order `ζ = −|s| + β`; for the bare Riesz multiplier the
    /// spatial dimension plays the role of `|s|`.
    pub fn zeta(&self) -> f64 {
        match self {
            KernelSpec::RieszComponent { .. } => -2.0,
            _ => -(2.0 * self.mu().unwrap() + 2.0) + self.beta(),
        }
    }

    /// Spatial symbol `σ(k)` multiplying the heat factor.
    pub(crate) fn symbol(&self, k1: i64, k2: i64) -> num_complex::Complex64 {
        use num_complex::Complex64 as C;
        match self {
            KernelSpec::FractionalHeat { .. } => C::new(1.0, 0.0),
            KernelSpec::HeatDeriv { j, .. } => {
                let kj = if *j == 1 { k1 } else { k2 };
                C::new(0.0, 2.0 * PI * kj as f64)
            }
            KernelSpec::RieszComponent { i } | KernelSpec::RieszHeat { i, .. } => {
                if k1 == 0 && k2 == 0 {
                    return C::new(0.0, 0.0);
                }
                let ki = if *i == 1 { k1 } else { k2 };
                C::new(0.0, ki as f64 / ((k1 * k1 + k2 * k2) as f64).sqrt())
            }
            KernelSpec::Mollified { base, .. } => base.symbol(k1, k2),
        }
    }

    /// Whether the kernel is odd in `x`.
    pub fn is_odd(&self) -> bool {
        match self {
            KernelSpec::FractionalHeat { .. } => false,
            KernelSpec::HeatDeriv { .. } | KernelSpec::RieszComponent { .. } | KernelSpec::RieszHeat { .. } => true,
            KernelSpec::Mollified { base, .. } => base.is_odd(),
        }
    }
}

/// `λ(k) = (2π|k|)^{2μ}`.
#[inline]
pub fn lambda(mu: f64, k1: i64, k2: i64) -> f64 {
    let q = (k1 * k1 + k2 * k2) as f64;
    if q == 0.0 {
        0.0
    } else {
        (4.0 * PI * PI * q).powf(mu)
    }
}
