//! The polynomial sector in exact rational arithmetic: `Γ_h`, `Σ^{st}` and
//! `Π_x`, with every structural identity checked on a rational grid.

use crate::structure::MultiIndex;
use num_rational::Rational64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

type Q = Rational64;

/// Polynomial in `(X_0, X_1, X_2)` with rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Poly(pub BTreeMap<MultiIndex, Q>);

fn binom(n: u32, k: u32) -> i64 {
    (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i + 1) as i64)
}

impl Poly {
    pub fn monomial(k: MultiIndex) -> Self {
        Poly([(k, Q::one())].into_iter().collect())
    }

    fn add_term(&mut self, k: MultiIndex, c: Q) {
        let e = self.0.entry(k).or_insert_with(Q::zero);
        *e += c;
        if e.is_zero() {
            self.0.remove(&k);
        }
    }

    /// Substitutes `X_a → X_a + h_a` for `a = 0, 1, 2`.
    pub fn shift(&self, h: [Q; 3]) -> Self {
        let mut out = Poly::default();
        for (k, c) in &self.0 {
            let e = [k.k0, k.k1, k.k2];
            for a0 in 0..=e[0] {
                for a1 in 0..=e[1] {
                    for a2 in 0..=e[2] {
                        let coef = *c
                            * Q::from(binom(e[0], a0) * binom(e[1], a1) * binom(e[2], a2))
                            * pow(h[0], e[0] - a0)
                            * pow(h[1], e[1] - a1)
                            * pow(h[2], e[2] - a2);
                        out.add_term(MultiIndex::new(a0, a1, a2), coef);
                    }
                }
            }
        }
        out
    }

    /// `Γ^t_{xy} P(X) = P(X + (0, x−y))`.
    pub fn gamma(&self, x: [Q; 2], y: [Q; 2]) -> Self {
        self.shift([Q::zero(), x[0] - y[0], x[1] - y[1]])
    }

    /// `Σ^{st}_x P(X) = P(X + (s−t, 0))`.
    pub fn sigma(&self, s: Q, t: Q) -> Self {
        self.shift([s - t, Q::zero(), Q::zero()])
    }

    /// `(Π^t_x P)(z) = Σ_{k0=0} c_k (z−x)^k̄`.
    pub fn pi(&self, x: [Q; 2], z: [Q; 2]) -> Q {
        self.0
            .iter()
            .filter(|(k, _)| k.k0 == 0)
            .map(|(k, c)| *c * pow(z[0] - x[0], k.k1) * pow(z[1] - x[1], k.k2))
            .sum()
    }
}

fn pow(q: Q, e: u32) -> Q {
    (0..e).fold(Q::one(), |a, _| a * q)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolyIdentityReport {
    pub checks: usize,
    pub failures: Vec<String>,
}

impl PolyIdentityReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.checks > 0
    }
}

/// Checks `Γ_xx = 1`, `Γ_xyΓ_yz = Γ_xz`, `Σ^{tt} = 1`, `Σ^{sr}Σ^{rt} = Σ^{st}`,
/// `Σ^{st}Γ_xy = Γ_xyΣ^{st}` and `Π_xΓ_xy = Π_y` on
/// every monomial of scaled degree `≤ degree`.
pub fn polynomial_model_identities(times: &[Q], points: &[[Q; 2]], degree: u32) -> PolyIdentityReport {
    let mut checks = 0;
    let mut failures = Vec::new();
    let mut check = |ok: bool, what: String| {
        checks += 1;
        if !ok {
            failures.push(what);
        }
    };
    let monomials: Vec<MultiIndex> = (0..=degree)
        .flat_map(|a| (0..=degree).flat_map(move |b| (0..=degree).map(move |c| MultiIndex::new(a, b, c))))
        .filter(|k| k.k0 + k.k1 + k.k2 <= degree)
        .collect();
    for k in &monomials {
        let p = Poly::monomial(*k);
        for x in points {
            check(p.gamma(*x, *x) == p, format!("Γ_xx on {k:?}"));
            for y in points {
                let gxy = p.gamma(*x, *y);
                for z in points {
                    check(gxy.pi(*x, *z) == p.pi(*y, *z), format!("Π_xΓ_xy = Π_y on {k:?}"));
                    check(p.gamma(*y, *z).gamma(*x, *y) == p.gamma(*x, *z), format!("Γ cocycle on {k:?}"));
                }
                for s in times {
                    for t in times {
                        check(
                            p.gamma(*x, *y).sigma(*s, *t) == p.sigma(*s, *t).gamma(*x, *y),
                            format!("Σ–Γ exchange on {k:?}"),
                        );
                    }
                }
            }
        }
        for t in times {
            check(p.sigma(*t, *t) == p, format!("Σ^tt on {k:?}"));
            for s in times {
                for r in times {
                    check(p.sigma(*r, *t).sigma(*s, *r) == p.sigma(*s, *t), format!("Σ cocycle on {k:?}"));
                }
            }
        }
    }
    PolyIdentityReport { checks, failures }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Q {
        Q::new(n, d)
    }

    #[test]
    fn gamma_on_x1() {
        let x = [q(1, 3), q(2, 5)];
        let y = [q(-1, 7), q(1, 2)];
        let g = Poly::monomial(MultiIndex::new(0, 1, 0)).gamma(x, y);
        let mut want = Poly::monomial(MultiIndex::new(0, 1, 0));
        want.add_term(MultiIndex::default(), x[0] - y[0]);
        assert_eq!(g, want);
        let z = [q(3, 4), q(0, 1)];
        assert_eq!(g.pi(x, z), z[0] - y[0]);
    }

    #[test]
    fn sigma_cocycle_on_time_monomial() {
        let p = Poly::monomial(MultiIndex::new(1, 0, 0));
        let (s, r, t) = (q(1, 2), q(1, 5), q(-1, 3));
        assert_eq!(p.sigma(r, t).sigma(s, r), p.sigma(s, t));
        assert_eq!(p.sigma(t, t), p);
    }

    #[test]
    fn full_identity_sweep() {
        let times = [q(0, 1), q(1, 4), q(2, 3)];
        let pts = [[q(0, 1), q(1, 3)], [q(1, 2), q(-1, 5)], [q(3, 7), q(2, 9)]];
        let r = polynomial_model_identities(&times, &pts, 3);
        assert!(r.passed(), "{:?}", r.failures);
        assert!(r.checks > 1000);
    }

    proptest! {
        #[test]
        fn reexpansion_holds_for_random_points(a in -20i64..20, b in -20i64..20, c in -20i64..20, d in -20i64..20,
                                               k1 in 0u32..4, k2 in 0u32..4) {
            let p = Poly::monomial(MultiIndex::new(0, k1, k2));
            let x = [q(a, 7), q(b, 11)];
            let y = [q(c, 13), q(d, 3)];
            let z = [q(a + d, 5), q(b - c, 9)];
            prop_assert_eq!(p.gamma(x, y).pi(x, z), p.pi(y, z));
        }
    }
}
