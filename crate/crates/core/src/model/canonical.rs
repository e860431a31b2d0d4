//! Grid route for the canonical model: every symbol is realized as a history
//! of spatial slices `Π_x^{t_n}τ`, `t_n = nΔt`, marched on the noise grid.

use super::{renorm_pair, ModelError};
use crate::field::{PeriodicField, Spectrum};
use crate::kernels::lambda;
use crate::noise::MollifiedNoise;
use crate::structure::{ModelSpace, MultiIndex, Symbol};
use num_complex::Complex64;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use super::test_function::{wrap, TestFunction};

/// `(1 − e^{−z})/z`.
pub fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-8 {
        1.0 - z / 2.0
    } else {
        -(-z).exp_m1() / z
    }
}

/// One exponential-integrator step of `∂_t v = −Λv + D f` with `f` frozen on
/// the step: `v̂ ← e^{−Δtλ}v̂ + Δt φ1(Δtλ) m(k) f̂`.
pub fn etd_step(v: &mut Spectrum, f: &Spectrum, mu: f64, dt: f64, m: impl Fn(i64, i64) -> Complex64) {
    for idx in 0..v.coeffs.len() {
        let (k1, k2) = v.k(idx);
        let z = dt * lambda(mu, k1, k2);
        v.coeffs[idx] = v.coeffs[idx] * (-z).exp() + f.coeffs[idx] * m(k1, k2) * (dt * phi1(z));
    }
}

type History = Arc<Vec<PeriodicField>>;

/// Canonical model `Π^ε` built from one mollified noise path, based at a
/// spatial point `x`. Histories that do not depend on `x` are cached and
/// shared by every rebased copy.
#[derive(Clone)]
pub struct CanonicalModel {
    pub mu: f64,
    pub kappa: f64,
    pub base: [f64; 2],
    /// Drop the spatial mean of the forcing (same policy as the solver).
    pub project_mean: bool,
    noise: Arc<MollifiedNoise>,
    cache: Arc<Mutex<HashMap<Symbol, History>>>,
}

impl CanonicalModel {
    pub fn new(mu: f64, kappa: f64, noise: MollifiedNoise, base: [f64; 2]) -> Self {
        Self {
            mu,
            kappa,
            base,
            project_mean: true,
            noise: Arc::new(noise),
            cache: Default::default(),
        }
    }

    pub fn with_mean(mut self, keep: bool) -> Self {
        self.project_mean = !keep;
        self.cache = Default::default();
        self
    }

    pub fn rebased(&self, base: [f64; 2]) -> Self {
        Self { base, ..self.clone() }
    }

    pub fn noise(&self) -> &MollifiedNoise {
        &self.noise
    }

    pub fn steps(&self) -> usize {
        self.noise.grid.nt
    }

    pub fn dt(&self) -> f64 {
        self.noise.grid.dt()
    }

    fn dims(&self) -> (usize, usize) {
        (self.noise.grid.nx, self.noise.grid.ny)
    }

    fn hom(&self, t: &Symbol) -> f64 {
        t.homogeneity().eval_f64(self.mu, self.kappa)
    }

    /// Jet order bound for a node: Taylor terms with `|k̄| < order` are removed.
    fn jet_order(&self, t: &Symbol) -> f64 {
        match t {
            Symbol::IntDeriv(_, c) => self.hom(c) + 2.0 * self.mu - 1.0,
            Symbol::Riesz(_, c) => self.hom(c),
            _ => f64::NEG_INFINITY,
        }
    }

    /// True when `Π_xτ` depends on the base point.
    pub fn depends_on_base(&self, t: &Symbol) -> bool {
        match t {
            Symbol::XiIntegral => false,
            Symbol::Poly(k) => !k.is_zero(),
            Symbol::IntDeriv(_, c) | Symbol::Riesz(_, c) => self.jet_order(t) > 0.0 || self.depends_on_base(c),
            Symbol::Product(fs) => fs.iter().any(|f| self.depends_on_base(f)),
        }
    }

    /// `Π_x^{t_n}τ` for `n = 0..=steps`.
    pub fn history(&self, t: &Symbol) -> Result<History, ModelError> {
        let shared = !self.depends_on_base(t);
        if shared {
            if let Some(h) = self.cache.lock().unwrap().get(t) {
                return Ok(h.clone());
            }
        }
        let h: History = Arc::new(match t {
            Symbol::XiIntegral => self.march(None, |n| self.forcing(n))?,
            Symbol::Poly(k) => {
                let p = self.poly(*k);
                vec![p; self.steps() + 1]
            }
            Symbol::Product(fs) => {
                let hs = fs.iter().map(|f| self.history(f)).collect::<Result<Vec<_>, _>>()?;
                (0..=self.steps())
                    .map(|n| hs[1..].iter().fold(hs[0][n].clone(), |acc, h| acc.mul(&h[n])))
                    .collect()
            }
            Symbol::IntDeriv(j, c) => {
                let ch = self.history(c)?;
                let raw = self.march(Some(*j), |n| ch[n].spectrum())?;
                self.subtract_jets(t, raw)
            }
            Symbol::Riesz(i, c) => {
                let ch = self.history(c)?;
                let raw = ch.iter().map(|f| f.riesz(*i)).collect();
                self.subtract_jets(t, raw)
            }
        });
        if shared {
            self.cache.lock().unwrap().insert(t.clone(), h.clone());
        }
        Ok(h)
    }

    pub fn slice(&self, t: &Symbol, n: usize) -> Result<PeriodicField, ModelError> {
        if n > self.steps() {
            return Err(ModelError::Param(format!("step {n} beyond the noise horizon")));
        }
        Ok(self.history(t)?[n].clone())
    }

    /// `⟨Π_x^{t_n}τ, ψ⟩` by grid quadrature.
    pub fn pair(&self, t: &Symbol, n: usize, psi: &TestFunction) -> Result<f64, ModelError> {
        Ok(psi.pair(&self.slice(t, n)?))
    }

    /// Renormalized pairing `⟨Π̂_x^{t_n}τ, ψ⟩` with constant `c`.
    pub fn pair_renormalized(&self, t: &Symbol, n: usize, psi: &TestFunction, c: f64) -> Result<f64, ModelError> {
        let (nx, ny) = self.dims();
        Ok(renorm_pair(t, self.pair(t, n, psi)?, c, psi.grid_mass(nx, ny)))
    }

    fn forcing(&self, n: usize) -> Spectrum {
        let mut s = self.noise.slices[n].spectrum();
        if self.project_mean {
            s.coeffs[0] = Complex64::default();
        }
        s
    }

    fn poly(&self, k: MultiIndex) -> PeriodicField {
        let (nx, ny) = self.dims();
        if k.k0 > 0 {
            return PeriodicField::zeros(nx, ny);
        }
        let b = self.base;
        PeriodicField::from_fn(nx, ny, |x, y| wrap(x - b[0]).powi(k.k1 as i32) * wrap(y - b[1]).powi(k.k2 as i32))
    }

    /// `v_0 = 0`, `v_{n+1} = e^{−Δtλ}v_n + Δtφ1 m f_n`; `m = 2πik_j` or 1.
    fn march(&self, j: Option<u8>, f: impl Fn(usize) -> Spectrum) -> Result<Vec<PeriodicField>, ModelError> {
        let (nx, ny) = self.dims();
        let mut v = Spectrum::zeros(nx, ny);
        let mut out = Vec::with_capacity(self.steps() + 1);
        out.push(PeriodicField::zeros(nx, ny));
        let m = |k1: i64, k2: i64| match j {
            None => Complex64::new(1.0, 0.0),
            Some(j) => {
                let (nq1, nq2) = (2 * k1.abs() == nx as i64, 2 * k2.abs() == ny as i64);
                let (k, nyq) = if j == 1 { (k1, nq1) } else { (k2, nq2) };
                if nyq {
                    Complex64::default()
                } else {
                    Complex64::new(0.0, 2.0 * PI * k as f64)
                }
            }
        };
        for n in 0..self.steps() {
            etd_step(&mut v, &f(n), self.mu, self.dt(), m);
            out.push(v.to_field());
        }
        Ok(out)
    }

    fn subtract_jets(&self, t: &Symbol, raw: Vec<PeriodicField>) -> Vec<PeriodicField> {
        let order = self.jet_order(t);
        if order <= 0.0 {
            return raw;
        }
        let idx: Vec<(u32, u32)> = (0..order.ceil() as u32)
            .flat_map(|d| (0..=d).map(move |a| (a, d - a)))
            .filter(|&(a, b)| ((a + b) as f64) < order)
            .collect();
        let (nx, ny) = self.dims();
        let b = self.base;
        let monomials: Vec<(PeriodicField, f64)> = idx
            .iter()
            .map(|&(a, c)| {
                let p = PeriodicField::from_fn(nx, ny, |x, y| wrap(x - b[0]).powi(a as i32) * wrap(y - b[1]).powi(c as i32));
                (p, 1.0 / (factorial(a) * factorial(c)))
            })
            .collect();
        raw.into_iter()
            .map(|f| {
                let s = f.spectrum();
                let mut out = f;
                for (&(a, c), (p, w)) in idx.iter().zip(&monomials) {
                    let d = s.eval_at(b, (a, c)) * w;
                    if d != 0.0 {
                        out = out.sub(&p.scale(d));
                    }
                }
                out
            })
            .collect()
    }

    /// `(Π_xτ)(x)` as a function of `x` on the grid.
    fn diagonal(&self, t: &Symbol, n: usize) -> Result<PeriodicField, ModelError> {
        let (nx, ny) = self.dims();
        if !self.depends_on_base(t) {
            return self.slice(t, n);
        }
        match t {
            Symbol::Poly(k) => Ok(PeriodicField::zeros(nx, ny).map(|_| if k.is_zero() { 1.0 } else { 0.0 })),
            // the k̄ = 0 jet term cancels the value at the base point
            Symbol::IntDeriv(..) | Symbol::Riesz(..) if self.jet_order(t) > 0.0 => Ok(PeriodicField::zeros(nx, ny)),
            Symbol::Product(fs) => {
                let mut acc = PeriodicField::from_fn(nx, ny, |_, _| 1.0);
                for f in fs {
                    acc = acc.mul(&self.diagonal(f, n)?);
                }
                Ok(acc)
            }
            _ => Err(ModelError::Unsupported(format!("diagonal of {t} depends on the base point"))),
        }
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Grid samples of a modelled distribution: one coefficient field per symbol.
#[derive(Clone, Debug, Default)]
pub struct ModelledDistribution {
    pub coeffs: Vec<(Symbol, PeriodicField)>,
}

impl ModelledDistribution {
    pub fn check_basis(&self, space: &ModelSpace) -> Result<(), ModelError> {
        for (s, _) in &self.coeffs {
            if !space.contains(s) && !s.is_polynomial() {
                return Err(ModelError::Basis(s.to_string()));
            }
        }
        Ok(())
    }
}

/// `(R F)(x) = (Π_x F(x))(x)` on the grid at step `n`.
pub fn reconstruct_continuous(
    space: &ModelSpace,
    f: &ModelledDistribution,
    model: &CanonicalModel,
    n: usize,
) -> Result<PeriodicField, ModelError> {
    f.check_basis(space)?;
    let (nx, ny) = model.dims();
    let mut out = PeriodicField::zeros(nx, ny);
    for (s, c) in &f.coeffs {
        out = out.add(&c.mul(&model.diagonal(s, n)?));
    }
    Ok(out)
}

/// `(R F − Π_x F(x))(φ^λ_x)` at the test function's centre, which must be a
/// grid point.
pub fn reconstruction_defect(
    space: &ModelSpace,
    f: &ModelledDistribution,
    model: &CanonicalModel,
    n: usize,
    psi: &TestFunction,
) -> Result<f64, ModelError> {
    let rf = reconstruct_continuous(space, f, model, n)?;
    let m = model.rebased(psi.center);
    let (nx, ny) = model.dims();
    let (i, j) = ((psi.center[0] * nx as f64).round() as usize % nx, (psi.center[1] * ny as f64).round() as usize % ny);
    let mut local = PeriodicField::zeros(nx, ny);
    for (s, c) in &f.coeffs {
        local = local.add(&m.slice(s, n)?.scale(c.values[i * ny + j]));
    }
    Ok(psi.pair(&rf.sub(&local)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{MollifierSpec, Profile};
    use crate::noise::{mollify, sample, NoiseGrid};
    use crate::structure::{generate, GenerateParams};
    use num_rational::Rational64;

    fn model(seed: u64) -> CanonicalModel {
        let g = NoiseGrid::new(64, 32, 32, 0.25).unwrap();
        let m = MollifierSpec::new(Profile::Bump, 0.125).build(0.9);
        let xi = mollify(&sample(seed, g).unwrap(), &m).unwrap();
        CanonicalModel::new(0.9, 0.01, xi, [0.25, 0.5])
    }

    fn s(t: &str) -> Symbol {
        t.parse().unwrap()
    }

    #[test]
    fn time_polynomials_vanish_and_products_are_pointwise() {
        let m = model(1);
        assert_eq!(m.slice(&Symbol::x(1, 0, 0), 5).unwrap().max_abs(), 0.0);
        let a = m.slice(&s("R1[I[Xi]]"), 20).unwrap();
        let b = m.slice(&s("I[Xi]"), 20).unwrap();
        let p = m.slice(&s("R1[I[Xi]]*I[Xi]"), 20).unwrap();
        for idx in [0, 17, 301, 555, 1023] {
            assert!((p.values[idx] - a.values[idx] * b.values[idx]).abs() < 1e-12);
        }
    }

    #[test]
    fn xi_integral_matches_exponential_sum() {
        // direct sum of the exact solution for frozen forcing
        let m = model(3);
        let n = 12;
        let w = m.slice(&Symbol::xi(), n).unwrap().spectrum();
        let dt = m.dt();
        for &(k1, k2) in &[(1i64, 0i64), (2, -3), (0, 5)] {
            let l = lambda(0.9, k1, k2);
            let idx = (k1.rem_euclid(32) * 32 + k2.rem_euclid(32)) as usize;
            let want: Complex64 = (0..n)
                .map(|q| m.forcing(q).coeffs[idx] * ((-(l * dt * (n - q - 1) as f64)).exp() * (1.0 - (-l * dt).exp()) / l))
                .sum();
            assert!((w.coeffs[idx] - want).norm() < 1e-12 * (1.0 + want.norm()));
        }
    }

    #[test]
    fn jets_vanish_at_the_base_point() {
        let m = model(5);
        let t = s("I1[R2[I[Xi]]*I[Xi]]");
        let f = m.slice(&t, 30).unwrap();
        assert!(f.eval_at(m.base, (0, 0)).abs() < 1e-10);
        let raw = m.march(Some(1), |n| m.slice(&s("R2[I[Xi]]*I[Xi]"), n).unwrap().spectrum()).unwrap();
        assert!(raw[30].eval_at(m.base, (0, 0)).abs() > 1e-6);
    }

    #[test]
    fn linear_in_the_test_function() {
        let m = model(7);
        let t = s("R1[I[Xi]]*I[Xi]");
        let f = m.slice(&t, 32).unwrap();
        let a = TestFunction::new([0.5, 0.5], 0.25).sample(32, 32);
        let b = TestFunction::new([0.25, 0.75], 0.125).sample(32, 32);
        let lhs = f.inner(&a.scale(2.0).add(&b.scale(-3.0)));
        let rhs = 2.0 * f.inner(&a) - 3.0 * f.inner(&b);
        assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn reconstruction_of_noise_and_polynomial_lifts() {
        let m = model(9);
        let space = generate(&GenerateParams::new(Rational64::new(9, 10), Rational64::new(1, 100), 3)).unwrap();
        let n = 32;
        let one = PeriodicField::from_fn(32, 32, |_, _| 1.0);
        let f = ModelledDistribution { coeffs: vec![(Symbol::xi(), one)] };
        let r = reconstruct_continuous(&space, &f, &m, n).unwrap();
        assert!(r.sub(&m.slice(&Symbol::xi(), n).unwrap()).max_abs() < 1e-14);
        // Taylor lift of a smooth function reproduces it
        let g = |x: f64, y: f64| (2.0 * PI * x).sin() * (2.0 * PI * y).cos();
        let lift = ModelledDistribution {
            coeffs: vec![
                (Symbol::one(), PeriodicField::from_fn(32, 32, g)),
                (Symbol::x(0, 1, 0), PeriodicField::from_fn(32, 32, |x, y| 2.0 * PI * (2.0 * PI * x).cos() * (2.0 * PI * y).cos())),
            ],
        };
        let r = reconstruct_continuous(&space, &lift, &m, n).unwrap();
        assert!(r.sub(&PeriodicField::from_fn(32, 32, g)).max_abs() < 1e-14);
        let bad = ModelledDistribution { coeffs: vec![(s("I1[I2[R1[I[Xi]]*I[Xi]]*I[Xi]]"), PeriodicField::zeros(32, 32))] };
        assert!(matches!(reconstruct_continuous(&space, &bad, &m, n), Err(ModelError::Basis(_))));
    }
}
