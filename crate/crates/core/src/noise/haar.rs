//! Tensor Haar representation of white noise on `[0,L_t] × [0,1]²`.
//!
//! The realization is the sequence of i.i.d. coefficients of white noise in
//! the tensor Haar basis. A grid of `2^J` cells per axis sees the levels
//! `< J`; cell integrals on a coarse grid are exact sums of those on a finer
//! one, so all grids and all local probes read the same realization.

use super::rng::gaussian;

/// One axis restricted to the cells `[i0, i1)` of a `2^levels` grid.
#[derive(Clone, Debug)]
pub struct Axis {
    pub levels: u32,
    pub len: f64,
    pub i0: usize,
    pub i1: usize,
    /// Start of each level's coefficient block inside the local basis.
    offsets: Vec<usize>,
    /// Global basis indices in local order.
    pub basis: Vec<u64>,
}

impl Axis {
    pub fn new(levels: u32, len: f64, i0: usize, i1: usize) -> Self {
        assert!(i0 < i1 && i1 <= 1usize << levels);
        let mut offsets = Vec::with_capacity(levels as usize + 1);
        let mut basis = vec![0u64];
        for j in 0..levels {
            offsets.push(basis.len());
            let (lo, hi) = Self::range(levels, i0, i1, j);
            basis.extend((lo..hi).map(|m| (1u64 << j) + m as u64));
        }
        offsets.push(basis.len());
        Self {
            levels,
            len,
            i0,
            i1,
            offsets,
            basis,
        }
    }

    pub fn full(levels: u32, len: f64) -> Self {
        Self::new(levels, len, 0, 1 << levels)
    }

    fn range(levels: u32, i0: usize, i1: usize, j: u32) -> (usize, usize) {
        let sh = levels - j;
        (i0 >> sh, ((i1 - 1) >> sh) + 1)
    }

    pub fn cells(&self) -> usize {
        self.i1 - self.i0
    }

    pub fn cell_width(&self) -> f64 {
        self.len / (1u64 << self.levels) as f64
    }

    fn half_step(&self, j: u32) -> f64 {
        self.len.sqrt() * 0.5f64.powf(j as f64 / 2.0) / 2.0
    }

    /// Coefficients (local order) → cell integrals over `[i0, i1)`.
    pub fn synthesize(&self, c: &[f64], out: &mut [f64]) {
        let mut v = vec![c[0] * self.len.sqrt()];
        for j in 0..self.levels {
            let (rlo, _) = Self::range(self.levels, self.i0, self.i1, j);
            let (nlo, nhi) = Self::range(self.levels, self.i0, self.i1, j + 1);
            let s = self.half_step(j);
            let off = self.offsets[j as usize];
            let mut nv = Vec::with_capacity(nhi - nlo);
            for i in nlo..nhi {
                let m = i >> 1;
                let w = s * c[off + m - rlo];
                let p = 0.5 * v[m - rlo];
                nv.push(if i & 1 == 0 { p + w } else { p - w });
            }
            v = nv;
        }
        out.copy_from_slice(&v);
    }

    /// Adjoint of [`Axis::synthesize`].
    pub fn analyze(&self, u: &[f64], p: &mut [f64]) {
        p.iter_mut().for_each(|x| *x = 0.0);
        let mut cur = u.to_vec();
        for j in (0..self.levels).rev() {
            let (rlo, rhi) = Self::range(self.levels, self.i0, self.i1, j);
            let (nlo, nhi) = Self::range(self.levels, self.i0, self.i1, j + 1);
            let s = self.half_step(j);
            let off = self.offsets[j as usize];
            let mut nv = vec![0.0; rhi - rlo];
            for i in nlo..nhi {
                let m = i >> 1;
                let x = cur[i - nlo];
                nv[m - rlo] += 0.5 * x;
                p[off + m - rlo] += if i & 1 == 0 { s * x } else { -s * x };
            }
            cur = nv;
        }
        p[0] = self.len.sqrt() * cur[0];
    }
}

/// Global index of the tensor coefficient `(a, b, d)`.
#[inline]
pub fn pack(a: u64, b: u64, d: u64) -> u64 {
    a | (b << 21) | (d << 42)
}

/// Hashed coefficients on the local tensor basis, layout `[a][b][d]`.
pub fn coefficients(seed: u64, axes: &[Axis; 3]) -> Vec<f64> {
    let mut z = Vec::with_capacity(axes[0].basis.len() * axes[1].basis.len() * axes[2].basis.len());
    for &a in &axes[0].basis {
        for &b in &axes[1].basis {
            for &d in &axes[2].basis {
                z.push(gaussian(seed, pack(a, b, d)));
            }
        }
    }
    z
}

/// Applies `f(axis, line_in, line_out)` along one axis of a 3D array.
fn along(data: &[f64], dims: [usize; 3], axis: usize, out_len: usize, f: impl Fn(&[f64], &mut [f64])) -> (Vec<f64>, [usize; 3]) {
    let mut nd = dims;
    nd[axis] = out_len;
    let mut out = vec![0.0; nd[0] * nd[1] * nd[2]];
    let stride = |d: [usize; 3]| [d[1] * d[2], d[2], 1];
    let (si, so) = (stride(dims), stride(nd));
    let others: Vec<usize> = (0..3).filter(|&k| k != axis).collect();
    let mut lin = vec![0.0; dims[axis]];
    let mut lout = vec![0.0; out_len];
    for p in 0..dims[others[0]] {
        for q in 0..dims[others[1]] {
            let base_i = p * si[others[0]] + q * si[others[1]];
            let base_o = p * so[others[0]] + q * so[others[1]];
            for (k, x) in lin.iter_mut().enumerate() {
                *x = data[base_i + k * si[axis]];
            }
            f(&lin, &mut lout);
            for (k, x) in lout.iter().enumerate() {
                out[base_o + k * so[axis]] = *x;
            }
        }
    }
    (out, nd)
}

/// Tensor synthesis: coefficients `[a][b][d]` → cell integrals `[q][i][j]`.
pub fn synthesize3(axes: &[Axis; 3], z: &[f64]) -> Vec<f64> {
    let mut dims = [axes[0].basis.len(), axes[1].basis.len(), axes[2].basis.len()];
    let mut data = z.to_vec();
    for k in (0..3).rev() {
        let (d, nd) = along(&data, dims, k, axes[k].cells(), |i, o| axes[k].synthesize(i, o));
        data = d;
        dims = nd;
    }
    data
}

/// Tensor analysis: cell weights `[q][i][j]` → coefficient weights `[a][b][d]`.
pub fn analyze3(axes: &[Axis; 3], u: &[f64]) -> Vec<f64> {
    let mut dims = [axes[0].cells(), axes[1].cells(), axes[2].cells()];
    let mut data = u.to_vec();
    for k in 0..3 {
        let (d, nd) = along(&data, dims, k, axes[k].basis.len(), |i, o| axes[k].analyze(i, o));
        data = d;
        dims = nd;
    }
    data
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthesis_is_orthonormal_up_to_cell_scaling() {
        // Σ_a A(c,a)A(c',a) = |c| δ_{cc'}
        let ax = Axis::full(3, 2.0);
        let n = 8;
        let mut gram = vec![0.0; n * n];
        for a in 0..n {
            let mut e = vec![0.0; n];
            e[a] = 1.0;
            let mut col = vec![0.0; n];
            ax.synthesize(&e, &mut col);
            for c in 0..n {
                for c2 in 0..n {
                    gram[c * n + c2] += col[c] * col[c2];
                }
            }
        }
        for c in 0..n {
            for c2 in 0..n {
                let want = if c == c2 { ax.cell_width() } else { 0.0 };
                assert!((gram[c * n + c2] - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn local_synthesis_matches_full() {
        let full = Axis::full(5, 1.0);
        let local = Axis::new(5, 1.0, 9, 14);
        let c: Vec<f64> = (0..32).map(|k| ((k * 7 % 11) as f64) - 5.0).collect();
        let mut fo = vec![0.0; 32];
        full.synthesize(&c, &mut fo);
        let lc: Vec<f64> = local.basis.iter().map(|&b| c[b as usize]).collect();
        let mut lo = vec![0.0; 5];
        local.synthesize(&lc, &mut lo);
        for i in 0..5 {
            assert!((lo[i] - fo[9 + i]).abs() < 1e-13);
        }
    }

    #[test]
    fn analysis_is_adjoint() {
        let ax = Axis::new(6, 0.5, 20, 41);
        let c: Vec<f64> = (0..ax.basis.len()).map(|k| (k as f64 * 0.37).sin()).collect();
        let u: Vec<f64> = (0..ax.cells()).map(|k| (k as f64 * 1.1).cos()).collect();
        let mut s = vec![0.0; ax.cells()];
        ax.synthesize(&c, &mut s);
        let mut p = vec![0.0; ax.basis.len()];
        ax.analyze(&u, &mut p);
        let lhs: f64 = s.iter().zip(&u).map(|(a, b)| a * b).sum();
        let rhs: f64 = c.iter().zip(&p).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn coarse_cells_aggregate_fine_cells() {
        let fine = [Axis::full(3, 1.0), Axis::full(3, 1.0), Axis::full(2, 1.0)];
        let coarse = [Axis::full(2, 1.0), Axis::full(1, 1.0), Axis::full(2, 1.0)];
        let wf = synthesize3(&fine, &coefficients(5, &fine));
        let wc = synthesize3(&coarse, &coefficients(5, &coarse));
        // coarse cell (q,i,j) = sum of fine cells (2q..2q+2, 4i..4i+4, j)
        for q in 0..4 {
            for i in 0..2 {
                for j in 0..4 {
                    let mut s = 0.0;
                    for qq in 2 * q..2 * q + 2 {
                        for ii in 4 * i..4 * i + 4 {
                            s += wf[(qq * 8 + ii) * 4 + j];
                        }
                    }
                    assert!((s - wc[(q * 2 + i) * 4 + j]).abs() < 1e-12);
                }
            }
        }
    }
}
