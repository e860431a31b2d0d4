//! Real fields on the uniform torus grid with a Fourier-coefficient view.
//!
//! Coefficients follow `f(x) = Σ_k f̂(k) e^{2πik·x}`, i.e. the forward
//! transform carries the `1/N` factor. Index `m` maps to wavenumber `m` for
//! `m < n/2` and `m − n` otherwise, so the Nyquist index reads as `−n/2`.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

pub struct Fft2 {
    nx: usize,
    ny: usize,
    fx: Arc<dyn Fft<f64>>,
    fy: Arc<dyn Fft<f64>>,
    ix: Arc<dyn Fft<f64>>,
    iy: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(nx: usize, ny: usize) -> Self {
        let mut p = FftPlanner::new();
        Self {
            nx,
            ny,
            fx: p.plan_fft_forward(nx),
            fy: p.plan_fft_forward(ny),
            ix: p.plan_fft_inverse(nx),
            iy: p.plan_fft_inverse(ny),
        }
    }

    /// Shared plan for an `nx × ny` grid.
    pub fn get(nx: usize, ny: usize) -> Arc<Fft2> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Fft2>>>> = OnceLock::new();
        let m = CACHE.get_or_init(Default::default);
        m.lock()
            .unwrap()
            .entry((nx, ny))
            .or_insert_with(|| Arc::new(Fft2::new(nx, ny)))
            .clone()
    }

    fn run(&self, data: &mut [Complex64], fx: &Arc<dyn Fft<f64>>, fy: &Arc<dyn Fft<f64>>) {
        let (nx, ny) = (self.nx, self.ny);
        assert_eq!(data.len(), nx * ny);
        let mut scratch = vec![Complex64::default(); fx.get_inplace_scratch_len().max(fy.get_inplace_scratch_len())];
        fy.process_with_scratch(data, &mut scratch);
        let mut t = vec![Complex64::default(); nx * ny];
        for i in 0..nx {
            for j in 0..ny {
                t[j * nx + i] = data[i * ny + j];
            }
        }
        fx.process_with_scratch(&mut t, &mut scratch);
        for j in 0..ny {
            for i in 0..nx {
                data[i * ny + j] = t[j * nx + i];
            }
        }
    }

    /// Physical values → Fourier coefficients (normalized by `1/N`).
    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.fx.clone(), &self.fy.clone());
        let s = 1.0 / (self.nx * self.ny) as f64;
        data.iter_mut().for_each(|c| *c *= s);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.ix.clone(), &self.iy.clone());
    }
}

/// Signed wavenumber of FFT index `m` on an `n`-point axis.
#[inline]
pub fn wavenumber(m: usize, n: usize) -> i64 {
    if m < n / 2 || (n % 2 == 1 && m == n / 2) {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

#[inline]
pub fn is_nyquist(m: usize, n: usize) -> bool {
    n % 2 == 0 && m == n / 2
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicField {
    pub nx: usize,
    pub ny: usize,
    /// Row-major, `values[i*ny + j]` at `(i/nx, j/ny)`.
    pub values: Vec<f64>,
}

/// Fourier coefficients on the same index layout as [`PeriodicField`].
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub nx: usize,
    pub ny: usize,
    pub coeffs: Vec<Complex64>,
}

impl PeriodicField {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        Self {
            nx,
            ny,
            values: vec![0.0; nx * ny],
        }
    }

    pub fn from_fn(nx: usize, ny: usize, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut v = Vec::with_capacity(nx * ny);
        for i in 0..nx {
            for j in 0..ny {
                v.push(f(i as f64 / nx as f64, j as f64 / ny as f64));
            }
        }
        Self { nx, ny, values: v }
    }

    pub fn from_values(nx: usize, ny: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), nx * ny);
        Self { nx, ny, values }
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.nx as f64
    }

    pub fn cell_area(&self) -> f64 {
        1.0 / (self.nx * self.ny) as f64
    }

    pub fn spectrum(&self) -> Spectrum {
        let mut c: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Fft2::get(self.nx, self.ny).forward(&mut c);
        Spectrum {
            nx: self.nx,
            ny: self.ny,
            coeffs: c,
        }
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// `∫ f g` by the grid rule.
    pub fn inner(&self, o: &PeriodicField) -> f64 {
        self.values.iter().zip(&o.values).map(|(a, b)| a * b).sum::<f64>() * self.cell_area()
    }

    pub fn l2(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_values(self.nx, self.ny, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip(&self, o: &PeriodicField, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!((self.nx, self.ny), (o.nx, o.ny));
        Self::from_values(
            self.nx,
            self.ny,
            self.values.iter().zip(&o.values).map(|(&a, &b)| f(a, b)).collect(),
        )
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn add(&self, o: &PeriodicField) -> Self {
        self.zip(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &PeriodicField) -> Self {
        self.zip(o, |a, b| a - b)
    }

    pub fn mul(&self, o: &PeriodicField) -> Self {
        self.zip(o, |a, b| a * b)
    }

    /// Applies `m(k1, k2)` to the coefficients.
    pub fn apply_multiplier(&self, m: impl Fn(i64, i64) -> Complex64) -> Self {
        self.spectrum().multiply(m).to_field()
    }

    pub fn riesz(&self, i: u8) -> Self {
        self.spectrum().riesz(i).to_field()
    }

    pub fn deriv(&self, i: u8) -> Self {
        self.spectrum().deriv(i).to_field()
    }

    /// Trigonometric interpolant `Σ f̂(k)(2πik)^a e^{2πik·x}` at an arbitrary point.
    pub fn eval_at(&self, x: [f64; 2], a: (u32, u32)) -> f64 {
        self.spectrum().eval_at(x, a)
    }

    /// Periodic shift by whole grid cells.
    pub fn roll(&self, di: isize, dj: isize) -> Self {
        let (nx, ny) = (self.nx as isize, self.ny as isize);
        let mut out = vec![0.0; self.values.len()];
        for i in 0..nx {
            for j in 0..ny {
                let si = (i - di).rem_euclid(nx);
                let sj = (j - dj).rem_euclid(ny);
                out[(i * ny + j) as usize] = self.values[(si * ny + sj) as usize];
            }
        }
        Self::from_values(self.nx, self.ny, out)
    }
}

impl Spectrum {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        Self {
            nx,
            ny,
            coeffs: vec![Complex64::default(); nx * ny],
        }
    }

    #[inline]
    pub fn k(&self, idx: usize) -> (i64, i64) {
        (wavenumber(idx / self.ny, self.nx), wavenumber(idx % self.ny, self.ny))
    }

    #[inline]
    pub fn nyquist(&self, idx: usize) -> (bool, bool) {
        (is_nyquist(idx / self.ny, self.nx), is_nyquist(idx % self.ny, self.ny))
    }

    pub fn to_field(&self) -> PeriodicField {
        let mut c = self.coeffs.clone();
        Fft2::get(self.nx, self.ny).inverse(&mut c);
        PeriodicField::from_values(self.nx, self.ny, c.iter().map(|z| z.re).collect())
    }

    /// Largest imaginary part after inversion; a reality diagnostic.
    pub fn imag_residue(&self) -> f64 {
        let mut c = self.coeffs.clone();
        Fft2::get(self.nx, self.ny).inverse(&mut c);
        c.iter().fold(0.0, |m, z| m.max(z.im.abs()))
    }

    pub fn multiply(&self, m: impl Fn(i64, i64) -> Complex64) -> Self {
        let mut out = self.clone();
        for (idx, c) in out.coeffs.iter_mut().enumerate() {
            let (k1, k2) = self.k(idx);
            *c *= m(k1, k2);
        }
        out
    }

    /// `R_i = ∂_i(−Δ)^{−1/2}`: multiplier `i k_i/|k|`, zero at `k=0` and on
    /// the Nyquist line of axis `i` (where the sampled transform vanishes).
    pub fn riesz(&self, i: u8) -> Self {
        let mut out = self.clone();
        for (idx, c) in out.coeffs.iter_mut().enumerate() {
            let (k1, k2) = self.k(idx);
            let (n1, n2) = self.nyquist(idx);
            let (ki, nyq) = if i == 1 { (k1, n1) } else { (k2, n2) };
            if (k1 == 0 && k2 == 0) || nyq {
                *c = Complex64::default();
            } else {
                let r = ((k1 * k1 + k2 * k2) as f64).sqrt();
                *c *= Complex64::new(0.0, ki as f64 / r);
            }
        }
        out
    }

    pub fn deriv(&self, i: u8) -> Self {
        let mut out = self.clone();
        for (idx, c) in out.coeffs.iter_mut().enumerate() {
            let (k1, k2) = self.k(idx);
            let (n1, n2) = self.nyquist(idx);
            let (ki, nyq) = if i == 1 { (k1, n1) } else { (k2, n2) };
            *c *= if nyq {
                Complex64::default()
            } else {
                Complex64::new(0.0, 2.0 * PI * ki as f64)
            };
        }
        out
    }

    /// Keeps modes with `|k_i| ≤ ⌊frac·n_i/2⌋` on both axes.
    pub fn dealias(&self, frac: f64) -> Self {
        let kx = (frac * self.nx as f64 / 2.0).floor() as i64;
        let ky = (frac * self.ny as f64 / 2.0).floor() as i64;
        let mut out = self.clone();
        for (idx, c) in out.coeffs.iter_mut().enumerate() {
            let (k1, k2) = self.k(idx);
            if k1.abs() > kx || k2.abs() > ky || self.nyquist(idx) != (false, false) {
                *c = Complex64::default();
            }
        }
        out
    }

    pub fn eval_at(&self, x: [f64; 2], a: (u32, u32)) -> f64 {
        let mut s = Complex64::default();
        for (idx, c) in self.coeffs.iter().enumerate() {
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let (n1, n2) = self.nyquist(idx);
            if (n1 && a.0 > 0) || (n2 && a.1 > 0) {
                continue;
            }
            let (k1, k2) = self.k(idx);
            let w1 = Complex64::new(0.0, 2.0 * PI * k1 as f64).powu(a.0);
            let w2 = Complex64::new(0.0, 2.0 * PI * k2 as f64).powu(a.1);
            let ph = 2.0 * PI * (k1 as f64 * x[0] + k2 as f64 * x[1]);
            // Nyquist modes are real cosines on the grid
            let e = if n1 || n2 {
                Complex64::new(ph.cos(), 0.0)
            } else {
                Complex64::from_polar(1.0, ph)
            };
            s += c * w1 * w2 * e;
        }
        s.re
    }

    pub fn add(&self, o: &Spectrum) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().zip(&o.coeffs).for_each(|(a, b)| *a += b);
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|a| *a *= s);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(n: usize, seed: u64) -> PeriodicField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PeriodicField::from_values(n, n, (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect())
    }

    #[test]
    fn round_trip() {
        let f = random_field(32, 1);
        let g = f.spectrum().to_field();
        let err = f.sub(&g).max_abs();
        assert!(err < 1e-12, "{err}");
        assert!(f.spectrum().imag_residue() < 1e-12);
    }

    #[test]
    fn coefficients_of_a_cosine() {
        let f = PeriodicField::from_fn(16, 8, |x, y| (2.0 * PI * (2.0 * x + y)).cos());
        let s = f.spectrum();
        for (idx, c) in s.coeffs.iter().enumerate() {
            let k = s.k(idx);
            let want = if k == (2, 1) || k == (-2, -1) { 0.5 } else { 0.0 };
            assert!((c.re - want).abs() < 1e-13 && c.im.abs() < 1e-13, "{k:?} {c}");
        }
    }

    #[test]
    fn riesz_of_constant_vanishes() {
        let f = PeriodicField::from_fn(16, 16, |_, _| 3.0);
        assert!(f.riesz(1).max_abs() < 1e-14);
    }

    #[test]
    fn riesz_squares_sum_to_minus_identity_off_nyquist() {
        // Nyquist modes are annihilated (their sampled Riesz transform is 0),
        // so the identity is checked on the complementary subspace
        let n = 64;
        let f = random_field(n, 7);
        let f = f.spectrum().dealias(1.0 - 1e-9).to_field();
        let f = f.map(|v| v).sub(&PeriodicField::from_fn(n, n, |_, _| f.mean()));
        let s = f.riesz(1).riesz(1).add(&f.riesz(2).riesz(2));
        let err = s.add(&f).max_abs();
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn perp_velocity_is_divergence_free() {
        let f = random_field(64, 3);
        let u1 = f.riesz(2).scale(-1.0).spectrum();
        let u2 = f.riesz(1).spectrum();
        let mut worst: f64 = 0.0;
        for idx in 0..u1.coeffs.len() {
            // the discrete divergence sees Nyquist wavenumbers as 0
            let (k1, k2) = u1.k(idx);
            let (n1, n2) = u1.nyquist(idx);
            let (k1, k2) = (if n1 { 0 } else { k1 }, if n2 { 0 } else { k2 });
            let d = u1.coeffs[idx] * k1 as f64 + u2.coeffs[idx] * k2 as f64;
            worst = worst.max(d.norm());
        }
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn derivative_and_point_evaluation() {
        let f = PeriodicField::from_fn(32, 32, |x, y| (2.0 * PI * x).sin() * (4.0 * PI * y).cos());
        let d = f.deriv(1);
        let want = PeriodicField::from_fn(32, 32, |x, y| 2.0 * PI * (2.0 * PI * x).cos() * (4.0 * PI * y).cos());
        assert!(d.sub(&want).max_abs() < 1e-10);
        let p = [0.123, 0.377];
        let v = f.eval_at(p, (0, 1));
        let w = -(2.0 * PI * p[0]).sin() * 4.0 * PI * (4.0 * PI * p[1]).sin();
        assert!((v - w).abs() < 1e-10);
    }

    #[test]
    fn dealias_keeps_two_thirds() {
        let s = random_field(12, 5).spectrum().dealias(2.0 / 3.0);
        for (idx, c) in s.coeffs.iter().enumerate() {
            let (k1, k2) = s.k(idx);
            if k1.abs() > 4 || k2.abs() > 4 {
                assert_eq!(c.norm(), 0.0);
            }
        }
    }
}
