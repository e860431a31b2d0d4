//! Canonical and renormalized models, their stochastic bounds, and
//! reconstruction for continuous models.

mod canonical;
mod chaos;
mod exact;
mod polynomial;
mod renorm;
pub mod test_function;

pub use canonical::{
    etd_step, phi1, reconstruct_continuous, reconstruction_defect, CanonicalModel, ModelledDistribution,
};
pub use chaos::{chaos_consistency, ChaosReport};
pub use exact::{
    renormalized_mean, scaling_mc, time_regularity_mc, LawSymbol, ScalingParams, ScalingProbe, StationaryLaw, Stencil,
    TimeRegularityParams,
};
pub use polynomial::{polynomial_model_identities, Poly, PolyIdentityReport};
pub use renorm::{covariance_order, renorm_constant, CovarianceReport, RenormParams, RenormalizationConstant};
pub use test_function::{TestFunction, Variant};

use crate::fit::ScalingFit;
use crate::kernels::KernelError;
use crate::noise::NoiseError;
use crate::structure::Symbol;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("symbol {0} is not in the model space")]
    Basis(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// True for `(R_iI[Ξ])·I[Ξ]`, the only symbol the renormalization touches.
pub fn is_renormalized_product(t: &Symbol) -> Option<u8> {
    match t {
        Symbol::Product(fs) if fs.len() == 2 => match (&fs[0], &fs[1]) {
            (Symbol::Riesz(i, c), Symbol::XiIntegral) | (Symbol::XiIntegral, Symbol::Riesz(i, c))
                if **c == Symbol::XiIntegral =>
            {
                Some(*i)
            }
            _ => None,
        },
        _ => None,
    }
}

/// `⟨Π̂τ, ψ⟩ = ⟨Πτ, ψ⟩ − C⟨1, ψ⟩` on the product symbol, identity elsewhere.
pub fn renorm_pair(t: &Symbol, value: f64, c: f64, psi_mass: f64) -> f64 {
    if is_renormalized_product(t).is_some() {
        value - c * psi_mass
    } else {
        value
    }
}

/// Renormalize a batch of evaluations `(symbol, ⟨Πτ,ψ⟩, ⟨1,ψ⟩)`.
pub fn renormalize(evals: &[(Symbol, f64, f64)], c: &RenormalizationConstant) -> Vec<f64> {
    evals.iter().map(|(t, v, m)| renorm_pair(t, *v, c.value, *m)).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct McRow {
    /// `λ` or the time lag.
    pub x: f64,
    pub mean_sq: f64,
    pub stderr: f64,
    pub n: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingReport {
    pub symbol: String,
    pub mu: f64,
    pub eps: f64,
    pub abscissa: String,
    pub rows: Vec<McRow>,
    pub fit: Option<ScalingFit>,
    pub target_slope: f64,
    pub warnings: Vec<String>,
}

impl ScalingReport {
    fn new(symbol: String, mu: f64, eps: f64, target: f64, rows: Vec<McRow>, xs: &[f64]) -> Self {
        let ys: Vec<f64> = rows.iter().map(|r| r.mean_sq).collect();
        let warnings = rows
            .iter()
            .filter(|r| r.stderr > 0.2 * r.mean_sq.abs())
            .map(|r| format!("low statistical power at {}: stderr {:.3e} vs mean {:.3e}", r.x, r.stderr, r.mean_sq))
            .collect();
        Self {
            symbol,
            mu,
            eps,
            abscissa: "lambda".into(),
            fit: ScalingFit::fit(xs, &ys),
            rows,
            target_slope: target,
            warnings,
        }
    }

    pub fn slope(&self) -> f64 {
        self.fit.as_ref().map_or(f64::NAN, |f| f.slope)
    }

    /// `slope ≥ target − tol`.
    pub fn satisfies(&self, tol: f64) -> bool {
        self.slope() >= self.target_slope - tol
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{},mean_sq,stderr,n\n", self.abscissa);
        for r in &self.rows {
            s += &format!("{},{},{},{}\n", r.x, r.mean_sq, r.stderr, r.n);
        }
        s
    }
}
