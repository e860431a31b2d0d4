//! Discrete space-time white noise, its mollification, and Monte Carlo
//! estimators for first and second Wiener chaos.

pub mod haar;
pub mod rng;

pub use crate::kernels::{Mollifier, MollifierSpec, Profile, TimeScaling};

use crate::field::{Fft2, PeriodicField};
use crate::fit::ScalingFit;
use crate::krn1::Krn1;
use crate::quad::gauss_legendre;
use haar::{analyze3, coefficients, pack, synthesize3, Axis};
use num_complex::Complex64;
use rayon::prelude::*;
use rng::{gaussian, realization_seed};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NoiseError {
    #[error("grid dimensions must be powers of two ≥ 2, got {0:?}")]
    Grid((usize, usize, usize)),
    #[error("mollifier ε = {eps} under-resolved: need ε ≥ 2·max(Δt^(1/s0), Δx) = {need}")]
    UnderResolved { eps: f64, need: f64 },
    #[error("invalid parameter: {0}")]
    Param(String),
}

/// Uniform cell grid on `[0, T] × T²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseGrid {
    pub nt: usize,
    pub nx: usize,
    pub ny: usize,
    pub t_len: f64,
}

impl NoiseGrid {
    pub fn new(nt: usize, nx: usize, ny: usize, t_len: f64) -> Result<Self, NoiseError> {
        let g = Self { nt, nx, ny, t_len };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        let ok = |n: usize| n >= 2 && n.is_power_of_two() && n < (1 << 21);
        if !(ok(self.nt) && ok(self.nx) && ok(self.ny)) {
            return Err(NoiseError::Grid((self.nt, self.nx, self.ny)));
        }
        if !(self.t_len > 0.0) {
            return Err(NoiseError::Param("T must be positive".into()));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.t_len / self.nt as f64
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.nx as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.dt() / (self.nx * self.ny) as f64
    }

    pub fn cells(&self) -> usize {
        self.nt * self.nx * self.ny
    }

    pub fn axes(&self) -> [Axis; 3] {
        let lv = |n: usize| n.trailing_zeros();
        [Axis::full(lv(self.nt), self.t_len), Axis::full(lv(self.nx), 1.0), Axis::full(lv(self.ny), 1.0)]
    }

    /// Cell midpoint `(t, x, y)` of flat index `c`.
    pub fn midpoint(&self, c: usize) -> (f64, f64, f64) {
        let q = c / (self.nx * self.ny);
        let i = (c / self.ny) % self.nx;
        let j = c % self.ny;
        ((q as f64 + 0.5) * self.dt(), (i as f64 + 0.5) / self.nx as f64, (j as f64 + 0.5) / self.ny as f64)
    }
}

/// Cell values `ξ_c` with variance `1/|c|`, layout `[q][i][j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseRealization {
    pub seed: u64,
    pub grid: NoiseGrid,
    pub values: Vec<f64>,
}

/// Draws the realization `seed` on `grid`.
pub fn sample(seed: u64, grid: NoiseGrid) -> Result<NoiseRealization, NoiseError> {
    grid.validate()?;
    let axes = grid.axes();
    let w = synthesize3(&axes, &coefficients(seed, &axes));
    let v = 1.0 / grid.cell_volume();
    Ok(NoiseRealization {
        seed,
        grid,
        values: w.into_iter().map(|x| x * v).collect(),
    })
}

impl NoiseRealization {
    pub fn zero(grid: NoiseGrid) -> Self {
        Self {
            seed: 0,
            grid,
            values: vec![0.0; grid.cells()],
        }
    }

    /// Time slice `q` as a spatial field.
    pub fn slice(&self, q: usize) -> PeriodicField {
        let n = self.grid.nx * self.grid.ny;
        PeriodicField::from_values(self.grid.nx, self.grid.ny, self.values[q * n..(q + 1) * n].to_vec())
    }

    /// `⟨ξ, φ⟩ = Σ_c ξ_c φ_c |c|` for cell weights `φ_c`.
    pub fn pair(&self, phi: &[f64]) -> f64 {
        self.values.iter().zip(phi).map(|(a, b)| a * b).sum::<f64>() * self.grid.cell_volume()
    }

    /// Spatial cell averages over `f × f` blocks: the same white noise seen on a
    /// coarser grid.
    pub fn coarsen_space(&self, f: usize) -> Result<NoiseRealization, NoiseError> {
        let g = self.grid;
        let grid = NoiseGrid::new(g.nt, g.nx / f.max(1), g.ny / f.max(1), g.t_len)?;
        if f == 0 || grid.nx * f != g.nx || grid.ny * f != g.ny {
            return Err(NoiseError::Param(format!("cannot coarsen {}×{} by {f}", g.nx, g.ny)));
        }
        let mut values = vec![0.0; grid.cells()];
        for q in 0..g.nt {
            for i in 0..g.nx {
                for j in 0..g.ny {
                    values[(q * grid.nx + i / f) * grid.ny + j / f] += self.values[(q * g.nx + i) * g.ny + j];
                }
            }
        }
        let w = 1.0 / (f * f) as f64;
        values.iter_mut().for_each(|v| *v *= w);
        Ok(NoiseRealization { seed: self.seed, grid, values })
    }

    pub fn linear_combination(&self, a: f64, other: &NoiseRealization, b: f64) -> NoiseRealization {
        NoiseRealization {
            seed: self.seed,
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect(),
        }
    }

    pub fn to_krn1(&self, mu: f64) -> Krn1 {
        Krn1 {
            nt: self.grid.nt,
            nx: self.grid.nx,
            ny: self.grid.ny,
            mu,
            data: self.values.clone(),
        }
    }
}

/// Coefficient weights `P` with `⟨ξ, φ⟩ = Σ_a Z_a P_a` on the full grid.
pub fn pairing_weights(grid: &NoiseGrid, phi: &[f64]) -> Vec<f64> {
    analyze3(&grid.axes(), phi)
}

/// `⟨ξ, φ⟩` for realization `seed` from precomputed pairing weights.
pub fn pair_with_weights(seed: u64, grid: &NoiseGrid, weights: &[f64]) -> f64 {
    let axes = grid.axes();
    let mut s = 0.0;
    let mut k = 0;
    for &a in &axes[0].basis {
        for &b in &axes[1].basis {
            for &d in &axes[2].basis {
                s += gaussian(seed, pack(a, b, d)) * weights[k];
                k += 1;
            }
        }
    }
    s
}

/// A separable test function seen through a sub-box of a fine grid; pairs
/// with the realization without materializing the grid.
#[derive(Clone, Debug)]
pub struct LocalProbe {
    axes: [Axis; 3],
    weights: [Vec<f64>; 3],
    /// `Σ_c u_c² |c|`, the exact variance of the pairing.
    pub variance: f64,
}

impl LocalProbe {
    /// `cell_avg[k]` are the cell averages of the axis factor over cells
    /// `[i0, i0 + len)` of a `2^levels` grid.
    pub fn new(levels: [u32; 3], lens: [f64; 3], starts: [usize; 3], cell_avg: [Vec<f64>; 3]) -> Self {
        let axes: [Axis; 3] = std::array::from_fn(|k| Axis::new(levels[k], lens[k], starts[k], starts[k] + cell_avg[k].len()));
        let mut variance = 1.0;
        let weights = std::array::from_fn(|k| {
            let ax = &axes[k];
            let h = ax.cell_width();
            // u_c W_c with W_c = ξ_c|c|: pairing weight per cell integral is the average
            let mut p = vec![0.0; ax.basis.len()];
            ax.analyze(&cell_avg[k], &mut p);
            variance *= cell_avg[k].iter().map(|u| u * u * h).sum::<f64>();
            p
        });
        Self { axes, weights, variance }
    }

    pub fn pair(&self, seed: u64) -> f64 {
        let [pt, px, py] = &self.weights;
        let mut s = 0.0;
        for (ia, &a) in self.axes[0].basis.iter().enumerate() {
            let mut sa = 0.0;
            for (ib, &b) in self.axes[1].basis.iter().enumerate() {
                let mut sb = 0.0;
                for (id, &d) in self.axes[2].basis.iter().enumerate() {
                    sb += gaussian(seed, pack(a, b, d)) * py[id];
                }
                sa += sb * px[ib];
            }
            s += sa * pt[ia];
        }
        s
    }
}

/// Monte Carlo summary with fixed-order reductions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McStats {
    pub mean: f64,
    pub second_moment: f64,
    /// Standard error of `second_moment`.
    pub stderr: f64,
    /// Standard error of `mean`.
    pub mean_stderr: f64,
    pub n: usize,
}

impl McStats {
    pub fn from_samples(v: &[f64]) -> Self {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let m2 = v.iter().map(|x| x * x).sum::<f64>() / n;
        let var1 = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        let var2 = v.iter().map(|x| (x * x - m2).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        Self {
            mean,
            second_moment: m2,
            stderr: (var2 / n).sqrt(),
            mean_stderr: (var1 / n).sqrt(),
            n: v.len(),
        }
    }
}

/// `f(r)` for realizations `r = 0..n`, evaluated in parallel and returned in order.
pub fn realizations<T: Send>(seed: u64, n: usize, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    (0..n as u64).into_par_iter().map(|r| f(realization_seed(seed, r))).collect()
}

/// Mollified noise `ξ_ε = ρ_ε ∗ ξ` on the cell grid, one field per time cell.
#[derive(Clone, Debug)]
pub struct MollifiedNoise {
    pub grid: NoiseGrid,
    pub eps: f64,
    pub slices: Vec<PeriodicField>,
}

/// Resolution requirement `ε ≥ 2·max(Δt^{1/s0}, Δx)`.
pub fn check_resolution(grid: &NoiseGrid, eps: f64, mu: f64) -> Result<(), NoiseError> {
    let need = 2.0 * grid.dt().powf(1.0 / (2.0 * mu)).max(grid.dx()).max(1.0 / grid.ny as f64);
    if eps < need {
        return Err(NoiseError::UnderResolved { eps, need });
    }
    Ok(())
}

/// Spatial factor by its Fourier multiplier `b̂(εk₁)b̂(εk₂)`; time factor by
/// normalized discrete weights, periodically extended in time.
pub fn mollify(xi: &NoiseRealization, m: &Mollifier) -> Result<MollifiedNoise, NoiseError> {
    let g = xi.grid;
    check_resolution(&g, m.eps(), m.mu)?;
    let fft = Fft2::get(g.nx, g.ny);
    let n = g.nx * g.ny;
    let spatial: Vec<Vec<f64>> = (0..g.nt)
        .into_par_iter()
        .map(|q| {
            let mut c: Vec<Complex64> = xi.values[q * n..(q + 1) * n].iter().map(|&v| Complex64::new(v, 0.0)).collect();
            fft.forward(&mut c);
            for (idx, z) in c.iter_mut().enumerate() {
                let k1 = crate::field::wavenumber(idx / g.ny, g.nx);
                let k2 = crate::field::wavenumber(idx % g.ny, g.ny);
                *z *= m.space_multiplier(k1, k2);
            }
            fft.inverse(&mut c);
            c.into_iter().map(|z| z.re).collect()
        })
        .collect();
    let w = m.time_weights(g.dt());
    let nt = g.nt as i64;
    let slices = (0..g.nt)
        .map(|q| {
            let mut v = vec![0.0; n];
            for &(o, wo) in &w {
                let src = &spatial[(q as i64 - o).rem_euclid(nt) as usize];
                v.iter_mut().zip(src).for_each(|(a, b)| *a += wo * b);
            }
            PeriodicField::from_values(g.nx, g.ny, v)
        })
        .collect();
    Ok(MollifiedNoise {
        grid: g,
        eps: m.eps(),
        slices,
    })
}

impl MollifiedNoise {
    /// Space-time mean `Σ_q ∫ ξ_ε(q) dx · Δt / T`.
    pub fn mean(&self) -> f64 {
        self.slices.iter().map(|s| s.mean()).sum::<f64>() / self.slices.len() as f64
    }
}

/// `I₂(f) = Σ_{c,c'} f(c,c') W_c W_{c'} − Σ_c f(c,c)|c|` with `W_c = ξ_c|c|`,
/// for `f` sampled on cell pairs (row-major `N×N`).
pub fn wick_pairing(xi: &NoiseRealization, f: &[f64]) -> f64 {
    let vol = xi.grid.cell_volume();
    let n = xi.values.len();
    assert_eq!(f.len(), n * n);
    let w: Vec<f64> = xi.values.iter().map(|v| v * vol).collect();
    let mut s = 0.0;
    for c in 0..n {
        let row = &f[c * n..(c + 1) * n];
        s += w[c] * row.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() - row[c] * vol;
    }
    s
}

/// Monte Carlo statistics of `I₂(f)` over `n_samples` realizations.
pub fn chaos_i2_estimate(grid: NoiseGrid, f: &[f64], n_samples: usize, seed: u64) -> Result<McStats, NoiseError> {
    grid.validate()?;
    if f.len() != grid.cells() * grid.cells() {
        return Err(NoiseError::Param("f must be sampled on grid × grid".into()));
    }
    let v = realizations(seed, n_samples, |s| wick_pairing(&sample(s, grid).unwrap(), f));
    Ok(McStats::from_samples(&v))
}

/// `‖f‖²` and `2‖f̃‖² = ‖f‖² + ⟨f, fᵀ⟩` in the cell-pair measure.
pub fn chaos_norms(grid: &NoiseGrid, f: &[f64]) -> (f64, f64) {
    let n = grid.cells();
    let v2 = grid.cell_volume().powi(2);
    let mut nf = 0.0;
    let mut cross = 0.0;
    for a in 0..n {
        for b in 0..n {
            nf += f[a * n + b].powi(2);
            cross += f[a * n + b] * f[b * n + a];
        }
    }
    (nf * v2, (nf + cross) * v2)
}

/// One row of a noise-regularity sweep.
#[derive(Clone, Debug, Serialize)]
pub struct RegularityRow {
    pub lambda: f64,
    pub mean_sq: f64,
    pub stderr: f64,
    pub exact: f64,
    pub n: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegularityReport {
    pub mu: f64,
    pub eps: f64,
    pub rows: Vec<RegularityRow>,
    pub fit: ScalingFit,
    pub target_slope: f64,
}

fn bump(y: f64) -> f64 {
    Profile::Bump.value(y)
}

/// Cell averages of `y ↦ ∫ b_w(v) h(y − v) dv` over cells `[i0, i0+len)` of
/// width `h`, where `b_w` is the unit-mass bump of half-width `w` (skipped
/// when `w = 0`) and `h` is the test factor.
fn mollified_cell_averages(i0: usize, len: usize, width: f64, w: f64, f: impl Fn(f64) -> f64) -> Vec<f64> {
    let cell_rule = gauss_legendre(4);
    let conv_rule = gauss_legendre(32);
    let g = |y: f64| -> f64 {
        if w == 0.0 {
            return f(y);
        }
        conv_rule.iter().map(|&(v, wt)| wt * bump(v) * f(y - w * v)).sum()
    };
    (i0..i0 + len)
        .map(|i| {
            let a = i as f64 * width;
            cell_rule.iter().map(|&(y, wt)| 0.5 * wt * g(a + 0.5 * width * (y + 1.0))).sum()
        })
        .collect()
}

/// Second moments of `⟨ξ_ε, φ^λ⟩` for the space-time bump `φ = b⊗b⊗b`
/// centred at `(T/2, 1/2, 1/2)` with `T = 1`, each λ read on a local grid
/// with at least 16 cells across the support.
pub fn regularity_fit(
    mu: f64,
    eps: f64,
    lambdas: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<RegularityReport, NoiseError> {
    let s0 = 2.0 * mu;
    let tau = eps.powf(s0);
    let (t_len, t0, x0) = (1.0, 0.5, 0.5);
    let mut rows = Vec::new();
    for &lam in lambdas {
        let lt = lam.powf(s0);
        if lam > 0.5 {
            return Err(NoiseError::Param(format!("λ = {lam} exceeds 1/2")));
        }
        let jt = (8.0 * t_len / lt).log2().ceil().max(1.0) as u32;
        let jx = (8.0 / lam).log2().ceil().max(1.0) as u32;
        let (ht, hx) = (t_len / (1u64 << jt) as f64, 1.0 / (1u64 << jx) as f64);
        let range = |c: f64, half: f64, h: f64| {
            let i0 = ((c - half) / h).floor() as i64;
            let i1 = ((c + half) / h).ceil() as i64;
            (i0, (i1 - i0) as usize)
        };
        let (qt0, nt) = range(t0, lt + tau, ht);
        let (qx0, nx) = range(x0, lam + eps, hx);
        if qt0 < 0 || (qt0 as usize + nt) as f64 * ht > t_len {
            return Err(NoiseError::Param(format!("λ = {lam} too large for the unit time window")));
        }
        let ft = |t: f64| bump((t - t0) / lt) / lt;
        let fx = |x: f64| bump((x - x0) / lam) / lam;
        let ut = mollified_cell_averages(qt0 as usize, nt, ht, tau, ft);
        // spatial factor periodized onto the torus when the window wraps
        let ncx = 1usize << jx;
        let (sx, ux) = if qx0 >= 0 && qx0 as usize + nx <= ncx {
            (qx0 as usize, mollified_cell_averages(qx0 as usize, nx, hx, eps, fx))
        } else {
            let mut u = vec![0.0; ncx];
            for i in qx0..qx0 + nx as i64 {
                let c = i as f64 * hx;
                let v = mollified_cell_averages(0, 1, hx, eps, |x| fx(x + c))[0];
                u[i.rem_euclid(ncx as i64) as usize] += v;
            }
            (0, u)
        };
        let qt0 = qt0 as usize;
        let qx0 = sx;
        let probe = LocalProbe::new([jt, jx, jx], [t_len, 1.0, 1.0], [qt0, qx0, qx0], [ut, ux.clone(), ux]);
        let v = realizations(seed, n_samples, |s| probe.pair(s));
        let st = McStats::from_samples(&v);
        rows.push(RegularityRow {
            lambda: lam,
            mean_sq: st.second_moment,
            stderr: st.stderr,
            exact: probe.variance,
            n: n_samples,
        });
    }
    let fit = ScalingFit::fit(
        &rows.iter().map(|r| r.lambda).collect::<Vec<_>>(),
        &rows.iter().map(|r| r.mean_sq).collect::<Vec<_>>(),
    )
    .ok_or_else(|| NoiseError::Param("need at least two λ values".into()))?;
    Ok(RegularityReport {
        mu,
        eps,
        rows,
        fit,
        target_slope: -(2.0 + s0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> NoiseGrid {
        NoiseGrid::new(4, 8, 8, 0.5).unwrap()
    }

    #[test]
    fn coarsening_is_the_nested_sample() {
        let fine = sample(9, NoiseGrid::new(4, 16, 16, 0.5).unwrap()).unwrap();
        let coarse = fine.coarsen_space(2).unwrap();
        let direct = sample(9, NoiseGrid::new(4, 8, 8, 0.5).unwrap()).unwrap();
        let err = coarse.values.iter().zip(&direct.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
        assert!(fine.coarsen_space(3).is_err());
    }

    #[test]
    fn sampling_is_deterministic_and_scaled() {
        let a = sample(3, grid()).unwrap();
        assert_eq!(a, sample(3, grid()).unwrap());
        // pooled variance of cells × |c| ≈ 1
        let g = NoiseGrid::new(16, 64, 64, 1.0).unwrap();
        let x = sample(9, g).unwrap();
        let v: f64 = x.values.iter().map(|v| v * v).sum::<f64>() / x.values.len() as f64 * g.cell_volume();
        assert!((v - 1.0).abs() < 0.02, "{v}");
        assert!(NoiseGrid::new(3, 8, 8, 1.0).is_err());
    }

    #[test]
    fn pairing_weights_reproduce_pairing() {
        let g = grid();
        let phi: Vec<f64> = (0..g.cells()).map(|c| (c as f64 * 0.3).sin()).collect();
        let w = pairing_weights(&g, &phi);
        for s in [1, 2, 3] {
            let direct = sample(s, g).unwrap().pair(&phi);
            assert!((pair_with_weights(s, &g, &w) - direct).abs() < 1e-10 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn local_probe_matches_full_grid() {
        let g = NoiseGrid::new(8, 16, 16, 1.0).unwrap();
        let ut: Vec<f64> = (0..3).map(|i| 1.0 + i as f64).collect();
        let ux: Vec<f64> = (0..5).map(|i| (i as f64).cos()).collect();
        let uy: Vec<f64> = (0..4).map(|i| 0.5 - i as f64).collect();
        let probe = LocalProbe::new([3, 4, 4], [1.0, 1.0, 1.0], [2, 7, 1], [ut.clone(), ux.clone(), uy.clone()]);
        let mut phi = vec![0.0; g.cells()];
        for (a, vt) in ut.iter().enumerate() {
            for (b, vx) in ux.iter().enumerate() {
                for (d, vy) in uy.iter().enumerate() {
                    phi[((2 + a) * 16 + 7 + b) * 16 + 1 + d] = vt * vx * vy;
                }
            }
        }
        let x = sample(11, g).unwrap();
        assert!((probe.pair(11) - x.pair(&phi)).abs() < 1e-10);
    }

    #[test]
    fn mollify_zero_linear_and_mean_preserving() {
        let g = NoiseGrid::new(64, 32, 32, 0.25).unwrap();
        let m = MollifierSpec::new(Profile::Bump, 0.125).build(0.9);
        assert!(mollify(&NoiseRealization::zero(g), &m).unwrap().slices.iter().all(|s| s.max_abs() == 0.0));
        let (a, b) = (sample(1, g).unwrap(), sample(2, g).unwrap());
        let ma = mollify(&a, &m).unwrap();
        let mb = mollify(&b, &m).unwrap();
        let mab = mollify(&a.linear_combination(2.0, &b, -0.5), &m).unwrap();
        for q in 0..g.nt {
            let lin = ma.slices[q].scale(2.0).add(&mb.slices[q].scale(-0.5));
            assert!(lin.sub(&mab.slices[q]).max_abs() < 1e-9 * lin.max_abs());
        }
        let raw_mean = a.values.iter().sum::<f64>() / a.values.len() as f64;
        assert!((ma.mean() - raw_mean).abs() < 1e-10 * raw_mean.abs().max(1.0));
        let m2 = MollifierSpec::new(Profile::Bump, 0.01).build(0.9);
        assert!(matches!(mollify(&a, &m2), Err(NoiseError::UnderResolved { .. })));
    }

    #[test]
    fn wick_square_identity() {
        let g = NoiseGrid::new(2, 4, 4, 1.0).unwrap();
        let n = g.cells();
        let phi: Vec<f64> = (0..n).map(|c| 1.0 + (c as f64).sin()).collect();
        let f: Vec<f64> = (0..n * n).map(|k| phi[k / n] * phi[k % n]).collect();
        let var: f64 = phi.iter().map(|p| p * p).sum::<f64>() * g.cell_volume();
        for s in 0..5 {
            let x = sample(s, g).unwrap();
            let p = x.pair(&phi);
            assert!((wick_pairing(&x, &f) - (p * p - var)).abs() < 1e-10 * (p * p).max(1.0));
        }
    }

    #[test]
    fn chaos_is_centred_and_isometric() {
        let g = NoiseGrid::new(2, 4, 4, 1.0).unwrap();
        let n = g.cells();
        let f: Vec<f64> = (0..n * n).map(|k| ((k / n) as f64 * 0.2).cos() * ((k % n) as f64 * 0.5).sin()).collect();
        let st = chaos_i2_estimate(g, &f, 4000, 5).unwrap();
        assert!(st.mean.abs() < 3.0 * st.mean_stderr);
        let (_, sym) = chaos_norms(&g, &f);
        assert!((st.second_moment - sym).abs() < 4.0 * st.stderr, "{} vs {}", st.second_moment, sym);
    }
}
