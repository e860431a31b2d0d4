//! Small quadrature helpers on top of `gauss-quad`.

use gauss_quad::legendre::GaussLegendre;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, cached by degree.
pub fn gauss_legendre(n: usize) -> Arc<Vec<(f64, f64)>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<(f64, f64)>>>>> = OnceLock::new();
    let c = CACHE.get_or_init(Default::default);
    c.lock()
        .unwrap()
        .entry(n)
        .or_insert_with(|| {
            let rule = GaussLegendre::new(n.max(2)).expect("degree ≥ 2");
            let mut v: Vec<(f64, f64)> = rule.iter().map(|(x, w)| (*x, *w)).collect();
            v.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            Arc::new(v)
        })
        .clone()
}

/// Composite Gauss–Legendre on `[a, b]` with `panels` equal panels.
pub fn integrate(a: f64, b: f64, panels: usize, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let rule = gauss_legendre(n);
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for &(x, w) in rule.iter() {
            s += w * f(lo + 0.5 * h * (x + 1.0));
        }
    }
    0.5 * h * s
}

/// Samples `f` on a uniform grid of `r ∈ [0, rmax]` and interpolates with
/// Catmull–Rom cubics; used for radial multipliers evaluated on many modes.
pub struct RadialTable {
    step: f64,
    vals: Vec<f64>,
}

impl RadialTable {
    pub fn new(rmax: f64, step: f64, f: impl Fn(f64) -> f64) -> Self {
        let n = (rmax / step).ceil() as usize + 3;
        Self {
            step,
            vals: (0..n).map(|i| f(i as f64 * step)).collect(),
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        let u = r / self.step;
        let i = u.floor() as usize;
        let f = u - i as f64;
        if f == 0.0 {
            return self.vals[i];
        }
        let p0 = if i == 0 { self.vals[0] } else { self.vals[i - 1] };
        let (p1, p2, p3) = (self.vals[i], self.vals[i + 1], self.vals[(i + 2).min(self.vals.len() - 1)]);
        let f2 = f * f;
        let f3 = f2 * f;
        0.5 * (2.0 * p1 + (-p0 + p2) * f + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * f2 + (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * f3)
    }
}
