//! Wick decomposition of the renormalized product pairing.

use super::canonical::CanonicalModel;
use super::test_function::TestFunction;
use super::ModelError;
use crate::kernels::MollifierSpec;
use crate::noise::{mollify, sample, wick_pairing, NoiseGrid, NoiseRealization};
use crate::structure::Symbol;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChaosReport {
    pub seeds: Vec<u64>,
    pub direct: Vec<f64>,
    pub chaos: Vec<f64>,
    pub max_difference: f64,
    /// `E[(R_iW)(y)W(y)]`, uniform in `y` up to rounding.
    pub constant: f64,
}

/// Compares `⟨(R_iW)W − E[(R_iW)W], ψ⟩` with `I₂(f)` where
/// `f(c1,c2) = Σ_y ψ(y) A_R(y,c1) A(y,c2)` and `A`, `A_R` are the linear maps
/// from cell integrals of the noise to `W`, `R_iW` at the last step.
pub fn chaos_consistency(
    grid: NoiseGrid,
    mollifier: &MollifierSpec,
    mu: f64,
    i: u8,
    psi: &TestFunction,
    seeds: &[u64],
) -> Result<ChaosReport, ModelError> {
    grid.validate()?;
    let m = mollifier.build(mu);
    let cells = grid.cells();
    let vol = grid.cell_volume();
    let n = grid.nt;
    let xi = Symbol::xi();
    let rxi = Symbol::riesz(i, Symbol::xi()).ok_or_else(|| ModelError::Param("bad Riesz index".into()))?;
    // impulse responses: W_c = 1 for one cell
    let responses: Vec<(Vec<f64>, Vec<f64>)> = (0..cells)
        .into_par_iter()
        .map(|c| {
            let mut values = vec![0.0; cells];
            values[c] = 1.0 / vol;
            let r = NoiseRealization { seed: 0, grid, values };
            let model = CanonicalModel::new(mu, 0.0, mollify(&r, &m)?, [0.0, 0.0]);
            Ok((model.slice(&xi, n)?.values, model.slice(&rxi, n)?.values))
        })
        .collect::<Result<_, ModelError>>()?;
    let pts = grid.nx * grid.ny;
    let w = psi.sample(grid.nx, grid.ny);
    let area = 1.0 / pts as f64;
    let mut f = vec![0.0; cells * cells];
    f.par_chunks_mut(cells).enumerate().for_each(|(c1, row)| {
        for (c2, v) in row.iter_mut().enumerate() {
            *v = (0..pts).map(|y| w.values[y] * responses[c1].1[y] * responses[c2].0[y]).sum::<f64>() * area;
        }
    });
    let cy: Vec<f64> = (0..pts).map(|y| (0..cells).map(|c| responses[c].1[y] * responses[c].0[y] * vol).sum()).collect();
    let mut direct = Vec::new();
    let mut chaos = Vec::new();
    for &s in seeds {
        let r = sample(s, grid)?;
        let model = CanonicalModel::new(mu, 0.0, mollify(&r, &m)?, [0.0, 0.0]);
        let a = model.slice(&xi, n)?;
        let b = model.slice(&rxi, n)?;
        let d: f64 = (0..pts).map(|y| w.values[y] * (b.values[y] * a.values[y] - cy[y])).sum::<f64>() * area;
        direct.push(d);
        chaos.push(wick_pairing(&r, &f));
    }
    let max_difference = direct.iter().zip(&chaos).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(ChaosReport {
        seeds: seeds.to_vec(),
        direct,
        chaos,
        max_difference,
        constant: cy.iter().sum::<f64>() / pts as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Profile;

    #[test]
    fn direct_pairing_equals_the_second_chaos_form() {
        let grid = NoiseGrid::new(8, 16, 16, 0.125).unwrap();
        let psi = TestFunction::new([0.5, 0.5], 0.3);
        let r = chaos_consistency(grid, &MollifierSpec::new(Profile::Bump, 0.25), 0.9, 1, &psi, &[1, 2, 3]).unwrap();
        let scale = r.direct.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(scale > 0.0);
        assert!(r.max_difference < 1e-10 * scale.max(1.0), "{r:?}");
        assert!(r.constant.abs() < 1e-12);
    }
}
