use super::homogeneity::Homogeneity;
use super::symbol::{MultiIndex, Symbol};
use num_rational::Rational64;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Polynomial sector `X^k`.
    Poly,
    /// `F̄_n`: images of `I_j`.
    Bar,
    /// `F̃_n`: Riesz images, products, polynomial decorations.
    Tilde,
}

#[derive(Clone, Debug, Serialize)]
pub struct Entry {
    pub symbol: Symbol,
    pub homogeneity: Homogeneity,
    pub level: usize,
    pub family: Family,
    /// `|τ| ≥ γ`: kept only as a generator needed to reach lower symbols.
    pub truncated: bool,
    /// Contains `X^k` with `k0 > 0` (annihilated by the polynomial model).
    pub time_polynomial: bool,
}

#[derive(Clone, Debug)]
pub struct GenerateParams {
    pub mu: Rational64,
    pub kappa: Rational64,
    pub depth: usize,
    /// `None` disables truncation and polynomial decorations.
    pub gamma: Option<Rational64>,
    pub depth_cap: usize,
    pub max_symbols: usize,
}

impl GenerateParams {
    pub fn new(mu: Rational64, kappa: Rational64, depth: usize) -> Self {
        Self {
            mu,
            kappa,
            depth,
            gamma: Some(default_gamma(mu, kappa)),
            depth_cap: 4,
            max_symbols: 10_000,
        }
    }

    pub fn untruncated(mut self) -> Self {
        self.gamma = None;
        self
    }

    pub fn with_gamma(mut self, g: Rational64) -> Self {
        self.gamma = Some(g);
        self
    }
}

/// `γ = 1 + 2κ − μ`.
pub fn default_gamma(mu: Rational64, kappa: Rational64) -> Rational64 {
    Rational64::from_integer(1) + kappa * 2 - mu
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenerateError {
    #[error("parameter out of range: {0}")]
    Param(String),
    #[error("depth {depth} exceeds the cap {cap}")]
    DepthCap { depth: usize, cap: usize },
    #[error("symbol count exceeded the cap {0}")]
    SymbolCap(usize),
}

#[derive(Clone, Debug)]
pub struct ModelSpace {
    pub params: GenerateParams,
    pub entries: Vec<Entry>,
    pub diagnostics: Vec<String>,
}

fn eval(h: &Homogeneity, p: &GenerateParams) -> Rational64 {
    h.eval(p.mu, p.kappa)
}

/// Multi-indices `k ≠ 0` with `lo + |k|_s < γ`.
fn decorations(lo: Rational64, p: &GenerateParams) -> Vec<MultiIndex> {
    let Some(g) = p.gamma else { return vec![] };
    let room = g - lo;
    if room <= Rational64::zero() {
        return vec![];
    }
    let s0 = p.mu * 2;
    let max_sp = room.ceil().to_integer().max(0) as u32;
    let max_t = (room / s0).ceil().to_integer().max(0) as u32;
    let mut out = Vec::new();
    for k0 in 0..=max_t {
        for k1 in 0..=max_sp {
            for k2 in 0..=max_sp - k1.min(max_sp) {
                let k = MultiIndex::new(k0, k1, k2);
                if !k.is_zero() && eval(&k.homogeneity(), p) < room {
                    out.push(k);
                }
            }
        }
    }
    out
}

pub fn generate(p: &GenerateParams) -> Result<ModelSpace, GenerateError> {
    let zero = Rational64::zero();
    let one = Rational64::from_integer(1);
    if p.mu <= zero || p.mu > one {
        return Err(GenerateError::Param(format!("μ = {} not in (0,1]", p.mu)));
    }
    if p.kappa < zero {
        return Err(GenerateError::Param(format!("κ = {} is negative", p.kappa)));
    }
    if p.depth > p.depth_cap {
        return Err(GenerateError::DepthCap {
            depth: p.depth,
            cap: p.depth_cap,
        });
    }
    let below = |h: Rational64| p.gamma.map_or(true, |g| h < g);
    let xi_h = eval(&Symbol::xi().homogeneity(), p);
    let min_bar = xi_h.min(zero);

    let mut seen: BTreeMap<Symbol, usize> = BTreeMap::new();
    let mut entries = Vec::new();
    let mut push = |s: Symbol, level: usize, family: Family, entries: &mut Vec<Entry>| -> Result<bool, GenerateError> {
        if seen.contains_key(&s) {
            return Ok(false);
        }
        if seen.len() >= p.max_symbols {
            return Err(GenerateError::SymbolCap(p.max_symbols));
        }
        seen.insert(s.clone(), level);
        let h = s.homogeneity();
        entries.push(Entry {
            truncated: !below(eval(&h, p)),
            time_polynomial: s.has_time_polynomial(),
            symbol: s,
            homogeneity: h,
            level,
            family,
        });
        Ok(true)
    };

    // polynomial sector
    push(Symbol::one(), 0, Family::Poly, &mut entries)?;
    for k in decorations(zero, p) {
        push(Symbol::Poly(k), 0, Family::Poly, &mut entries)?;
    }

    // bars[l] = generators of F̄_l kept for further use
    let mut bars: Vec<Vec<Symbol>> = vec![vec![Symbol::xi()]];
    push(Symbol::xi(), 0, Family::Bar, &mut entries)?;
    let mut diagnostics = Vec::new();
    let mut last_new_negative = xi_h < zero;

    for n in 1..=p.depth {
        let mut tilde: BTreeSet<Symbol> = BTreeSet::new();
        let pool: Vec<Symbol> = bars.iter().flatten().cloned().collect();
        for tau in &bars[n - 1] {
            let ht = eval(&tau.homogeneity(), p);
            for i in 1..=2u8 {
                let r = Symbol::riesz(i, tau.clone()).expect("F̄ lies in the Riesz sector");
                tilde.insert(r.clone());
                for tb in &pool {
                    tilde.insert(Symbol::product([r.clone(), tb.clone()]));
                }
                if entries.len() + tilde.len() > p.max_symbols {
                    return Err(GenerateError::SymbolCap(p.max_symbols));
                }
                for k in decorations(ht, p) {
                    tilde.insert(Symbol::product([r.clone(), Symbol::Poly(k)]));
                }
            }
            for k in decorations(ht, p) {
                tilde.insert(Symbol::product([tau.clone(), Symbol::Poly(k)]));
            }
        }
        let mut next_bar = Vec::new();
        last_new_negative = false;
        for s in tilde {
            let h = eval(&s.homogeneity(), p);
            if !below(h) {
                continue;
            }
            if h < zero {
                last_new_negative = true;
            }
            for j in 1..=2u8 {
                if let Some(b) = Symbol::int_deriv(j, s.clone()) {
                    let hb = eval(&b.homogeneity(), p);
                    // keep a generator while one more product could pull it below γ
                    if below(hb + min_bar) {
                        if hb < zero {
                            last_new_negative = true;
                        }
                        next_bar.push(b);
                    }
                }
            }
            push(s, n, Family::Tilde, &mut entries)?;
        }
        for b in &next_bar {
            push(b.clone(), n, Family::Bar, &mut entries)?;
        }
        bars.push(next_bar);
    }
    if last_new_negative {
        diagnostics.push(format!(
            "depth limit {} reached while new symbols of negative homogeneity are still produced; \
             the negative sector may be incomplete (non-subcritical regime if this persists)",
            p.depth
        ));
    }
    Ok(ModelSpace {
        params: p.clone(),
        entries,
        diagnostics,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ShapeCount {
    pub shape: String,
    pub homogeneity: Homogeneity,
    pub multiplicity: usize,
}

impl ModelSpace {
    pub fn level(&self, family: Family, n: usize) -> impl Iterator<Item = &Entry> {
        self.entries
            .iter()
            .filter(move |e| e.family == family && e.level == n)
    }

    /// Non-truncated entries (the basis of `T_{<γ}`).
    pub fn basis(&self) -> impl Iterator<Item = &Entry> {
        self.entries.iter().filter(|e| !e.truncated)
    }

    pub fn contains(&self, s: &Symbol) -> bool {
        self.basis().any(|e| &e.symbol == s)
    }

    pub fn min_homogeneity(&self) -> Rational64 {
        let p = &self.params;
        self.basis()
            .map(|e| eval(&e.homogeneity, p))
            .min()
            .expect("model space always contains 1")
    }

    /// Index-collapsed shapes of the given symbols with multiplicities,
    /// ordered by (homogeneity, shape text).
    pub fn shapes<'a, I: Iterator<Item = &'a Entry>>(&self, it: I, display: bool) -> Vec<ShapeCount> {
        let mut m: BTreeMap<Symbol, (Homogeneity, usize)> = BTreeMap::new();
        for e in it {
            let s = if display { e.symbol.display_shape() } else { e.symbol.shape() };
            m.entry(s).or_insert((e.homogeneity, 0)).1 += 1;
        }
        let mut v: Vec<_> = m
            .into_iter()
            .map(|(s, (h, c))| ShapeCount {
                shape: s.to_string(),
                homogeneity: h,
                multiplicity: c,
            })
            .collect();
        let p = &self.params;
        v.sort_by(|a, b| {
            eval(&a.homogeneity, p)
                .cmp(&eval(&b.homogeneity, p))
                .then_with(|| a.shape.cmp(&b.shape))
        });
        v
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.entries
                .iter()
                .map(|e| {
                    serde_json::json!({
                        "symbol": e.symbol,
                        "homogeneity": e.homogeneity,
                        "level": e.level,
                        "family": e.family,
                        "truncated": e.truncated,
                        "time_polynomial": e.time_polynomial,
                        "value": eval(&e.homogeneity, &self.params).to_f64(),
                    })
                })
                .collect(),
        )
    }
}

/// Negative-homogeneity symbols sorted by homogeneity at `(μ,κ)`, ties by
/// canonical symbol order.
pub fn negative_symbols(space: &ModelSpace) -> Vec<(Symbol, Homogeneity)> {
    let p = &space.params;
    let mut v: Vec<_> = space
        .basis()
        .filter(|e| eval(&e.homogeneity, p).is_negative())
        .map(|e| (e.symbol.clone(), e.homogeneity))
        .collect();
    v.sort_by(|a, b| eval(&a.1, p).cmp(&eval(&b.1, p)).then_with(|| a.0.cmp(&b.0)));
    v
}

/// Three views of `F₋`: every indexed symbol, the display granularity
/// (Riesz index kept only on two-noise products), and fully collapsed shapes.
#[derive(Clone, Debug, Serialize)]
pub struct NegativeReport {
    pub indexed: Vec<(Symbol, Homogeneity)>,
    pub display: Vec<ShapeCount>,
    pub shapes: Vec<ShapeCount>,
    pub min_homogeneity: String,
}

pub fn negative_report(space: &ModelSpace) -> NegativeReport {
    let p = &space.params;
    let neg = |e: &&Entry| !e.truncated && eval(&e.homogeneity, p).is_negative();
    NegativeReport {
        indexed: negative_symbols(space),
        display: space.shapes(space.entries.iter().filter(neg), true),
        shapes: space.shapes(space.entries.iter().filter(neg), false),
        min_homogeneity: space.min_homogeneity().to_string(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Subcriticality {
    pub subcritical: bool,
    /// Per-cycle increment as a linear form (κ-term kept for reference).
    pub increment: Homogeneity,
    /// Increment evaluated at `κ = 0`.
    pub increment_value: Rational64,
}

/// One generation cycle multiplies by the lowest sector symbol `I[Ξ]` and
/// integrates once; the increment is the sum of those two shifts.
pub fn cycle_increment() -> Homogeneity {
    let xi = Symbol::xi();
    let prod = Symbol::product([Symbol::riesz(1, xi.clone()).unwrap(), xi.clone()]);
    let integrated = Symbol::int_deriv(1, prod.clone()).unwrap();
    // (|I_j[R I · I]| − |R I|): one factor of I[Ξ] plus one integration
    integrated.homogeneity() - Symbol::riesz(1, xi).unwrap().homogeneity()
}

pub fn is_subcritical(mu: Rational64) -> Subcriticality {
    let inc = cycle_increment();
    let v = inc.eval(mu, Rational64::zero());
    Subcriticality {
        subcritical: v.is_positive(),
        increment: inc,
        increment_value: v,
    }
}

/// The critical μ at which the cycle increment vanishes (κ = 0).
pub fn critical_mu() -> Rational64 {
    let inc = cycle_increment();
    -inc.c / inc.mu
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    fn forms(v: &[ShapeCount]) -> Vec<String> {
        v.iter().map(|s| s.homogeneity.pretty()).collect()
    }

    #[test]
    fn level_zero() {
        let sp = generate(&GenerateParams::new(r(9, 10), r(1, 100), 0).untruncated()).unwrap();
        let bar0: Vec<_> = sp.level(Family::Bar, 0).map(|e| e.symbol.to_string()).collect();
        assert_eq!(bar0, vec!["I[Xi]"]);
        assert_eq!(sp.diagnostics.len(), 1);
    }

    #[test]
    fn displayed_levels() {
        let sp = generate(&GenerateParams::new(r(9, 10), r(1, 100), 2).untruncated()).unwrap();
        let t1 = sp.shapes(sp.level(Family::Tilde, 1), false);
        assert_eq!(
            t1.iter().map(|s| s.shape.as_str()).collect::<Vec<_>>(),
            vec!["R[I[Xi]]*I[Xi]", "R[I[Xi]]"]
        );
        assert_eq!(forms(&t1), vec!["-2-2κ+2μ", "-1-κ+μ"]);
        let b1 = sp.shapes(sp.level(Family::Bar, 1), false);
        assert_eq!(forms(&b1), vec!["-3-2κ+4μ", "-2-κ+3μ"]);
        let t2 = sp.shapes(sp.level(Family::Tilde, 2), false);
        let mut got = forms(&t2);
        got.sort();
        let mut want: Vec<String> = [
            "-2-κ+3μ", "-3-2κ+4μ", "-3-2κ+4μ", "-4-3κ+5μ", "-4-2κ+6μ", "-5-3κ+7μ", "-5-3κ+7μ", "-6-4κ+8μ",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn negatives_at_nine_tenths() {
        let sp = generate(&GenerateParams::new(r(9, 10), r(1, 100), 3)).unwrap();
        let rep = negative_report(&sp);
        assert_eq!(rep.indexed.len(), 5);
        assert_eq!(rep.shapes.len(), 3);
        assert_eq!(rep.display.len(), 4);
        let hs: Vec<_> = rep.display.iter().map(|s| s.homogeneity.pretty()).collect();
        assert_eq!(hs, vec!["-2-2κ+2μ", "-2-2κ+2μ", "-1-κ+μ", "-1-κ+μ"]);
        assert_eq!(sp.min_homogeneity(), r(-2, 1) + r(9, 5) - r(2, 100));
        assert!(sp.diagnostics.is_empty());
    }

    #[test]
    fn no_negative_polynomial_symbols() {
        for depth in 1..=2 {
            let sp = generate(&GenerateParams::new(r(9, 10), r(1, 100), depth).with_gamma(r(2, 1))).unwrap();
            assert!(sp.entries.iter().any(|e| e.symbol.contains_polynomial()));
            for (s, _) in negative_symbols(&sp) {
                assert!(!s.contains_polynomial(), "{s}");
            }
        }
    }

    #[test]
    fn time_polynomials_flagged() {
        let sp = generate(&GenerateParams::new(r(9, 10), r(1, 100), 1).with_gamma(r(2, 1))).unwrap();
        let e = sp.entries.iter().find(|e| e.symbol == Symbol::x(1, 0, 0)).unwrap();
        assert!(e.time_polynomial);
    }

    #[test]
    fn threshold() {
        assert_eq!(critical_mu(), r(2, 3));
        assert_eq!(cycle_increment(), Homogeneity::new(-2, 3, -1));
        let w = is_subcritical(r(7, 10));
        assert!(w.subcritical);
        assert_eq!(w.increment_value, r(1, 10));
        assert!(!is_subcritical(r(2, 3)).subcritical);
        assert!(!is_subcritical(r(1, 2)).subcritical);
        assert!(is_subcritical(r(1, 1)).subcritical);
    }

    #[test]
    fn caps() {
        let mut p = GenerateParams::new(r(9, 10), r(1, 100), 5);
        assert!(matches!(generate(&p), Err(GenerateError::DepthCap { .. })));
        p.depth = 4;
        p.gamma = None;
        p.max_symbols = 50;
        assert!(matches!(generate(&p), Err(GenerateError::SymbolCap(50))));
    }

    #[test]
    fn low_mu_reports_non_termination() {
        let sp = generate(&GenerateParams::new(r(1, 2), r(0, 1), 2)).unwrap();
        assert!(!sp.diagnostics.is_empty());
        assert!(matches!(
            generate(&GenerateParams::new(r(1, 2), r(0, 1), 4)),
            Err(GenerateError::SymbolCap(_))
        ));
    }

    #[test]
    fn every_generated_symbol_obeys_shift_rules() {
        let sp = generate(&GenerateParams::new(r(9, 10), r(1, 100), 2).untruncated()).unwrap();
        for e in &sp.entries {
            match &e.symbol {
                Symbol::IntDeriv(_, c) => assert_eq!(e.homogeneity, c.homogeneity() + Homogeneity::new(-1, 2, 0)),
                Symbol::Riesz(_, c) => assert_eq!(e.homogeneity, c.homogeneity()),
                Symbol::Product(fs) => {
                    let s = fs.iter().fold(Homogeneity::zero(), |a, f| a + f.homogeneity());
                    assert_eq!(e.homogeneity, s)
                }
                _ => {}
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn negative_sector_stabilizes(mu_n in 801i64..=1000, kfrac in 0i64..8) {
            let mu = r(mu_n, 1000);
            let kappa = (mu * 3 - 2) / 8 * r(kfrac, 8);
            let at = |d| {
                let sp = generate(&GenerateParams::new(mu, kappa, d)).unwrap();
                let neg: Vec<_> = negative_symbols(&sp).into_iter().map(|x| x.0).collect();
                (neg, sp.diagnostics.len())
            };
            let (n3, _) = at(3);
            let (n4, d4) = at(4);
            prop_assert_eq!(n3, n4);
            prop_assert_eq!(d4, 0);
        }

        #[test]
        fn negative_sector_grows_monotonically(mu_n in 700i64..=1000, kfrac in 0i64..8) {
            let mu = r(mu_n, 1000);
            let kappa = (mu * 3 - 2) / 8 * r(kfrac, 8);
            let mut prev: Vec<Symbol> = vec![];
            for depth in 0..=3 {
                // near criticality the symbol cap ends the sweep early
                let Ok(sp) = generate(&GenerateParams::new(mu, kappa, depth)) else { break };
                let neg: Vec<_> = negative_symbols(&sp).into_iter().map(|x| x.0).collect();
                for s in &prev {
                    prop_assert!(neg.contains(s));
                }
                for e in sp.basis() {
                    prop_assert!(e.homogeneity.eval(mu, kappa) >= sp.min_homogeneity());
                }
                prev = neg;
            }
        }
    }
}
