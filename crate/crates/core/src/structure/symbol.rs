use super::homogeneity::Homogeneity;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Time exponent `k0` and space exponents `k1, k2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct MultiIndex {
    pub k0: u32,
    pub k1: u32,
    pub k2: u32,
}

impl MultiIndex {
    pub const fn new(k0: u32, k1: u32, k2: u32) -> Self {
        Self { k0, k1, k2 }
    }

    pub fn is_zero(&self) -> bool {
        self.k0 == 0 && self.k1 == 0 && self.k2 == 0
    }

    /// Scaled degree `|k|_s = s0·k0 + k1 + k2`.
    pub fn homogeneity(&self) -> Homogeneity {
        Homogeneity::new((self.k1 + self.k2) as i64, 2 * self.k0 as i64, 0)
    }

    pub fn spatial_degree(&self) -> u32 {
        self.k1 + self.k2
    }

    pub fn add(&self, o: &MultiIndex) -> MultiIndex {
        MultiIndex::new(self.k0 + o.k0, self.k1 + o.k1, self.k2 + o.k2)
    }
}

/// Decorated tree over the SQG generators.
///
/// `Product` factors are kept flattened and sorted so that products are
/// commutative and associative at the level of stored values. Index 0 on
/// `IntDeriv`/`Riesz` is reserved for index-collapsed shapes.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Symbol {
    XiIntegral,
    Poly(MultiIndex),
    IntDeriv(u8, Box<Symbol>),
    Riesz(u8, Box<Symbol>),
    Product(Vec<Symbol>),
}

impl Symbol {
    pub fn xi() -> Symbol {
        Symbol::XiIntegral
    }

    pub fn one() -> Symbol {
        Symbol::Poly(MultiIndex::default())
    }

    pub fn x(k0: u32, k1: u32, k2: u32) -> Symbol {
        Symbol::Poly(MultiIndex::new(k0, k1, k2))
    }

    /// `I_j[τ]`; `None` is the zero symbol (integration kills polynomials).
    pub fn int_deriv(j: u8, child: Symbol) -> Option<Symbol> {
        if child.is_polynomial() {
            None
        } else {
            Some(Symbol::IntDeriv(j, Box::new(child)))
        }
    }

    /// `R_i[τ]`, defined only on the sector spanned by `I[Ξ]` and `I_j[·]`.
    pub fn riesz(i: u8, child: Symbol) -> Option<Symbol> {
        match child {
            Symbol::XiIntegral | Symbol::IntDeriv(..) => Some(Symbol::Riesz(i, Box::new(child))),
            _ => None,
        }
    }

    /// Commutative product with `τ·1 = τ`.
    pub fn product<I: IntoIterator<Item = Symbol>>(factors: I) -> Symbol {
        let mut flat = Vec::new();
        for f in factors {
            match f {
                Symbol::Product(inner) => flat.extend(inner),
                Symbol::Poly(k) if k.is_zero() => {}
                other => flat.push(other),
            }
        }
        // merge polynomial factors: X^a X^b = X^{a+b}
        let mut poly: Option<MultiIndex> = None;
        flat.retain(|f| {
            if let Symbol::Poly(k) = f {
                poly = Some(poly.map_or(*k, |p| p.add(k)));
                false
            } else {
                true
            }
        });
        if let Some(k) = poly {
            flat.push(Symbol::Poly(k));
        }
        flat.sort();
        match flat.len() {
            0 => Symbol::one(),
            1 => flat.pop().unwrap(),
            _ => Symbol::Product(flat),
        }
    }

    pub fn homogeneity(&self) -> Homogeneity {
        match self {
            Symbol::XiIntegral => Homogeneity::new(-1, 1, -1),
            Symbol::Poly(k) => k.homogeneity(),
            Symbol::IntDeriv(_, c) => c.homogeneity() + Homogeneity::new(-1, 2, 0),
            Symbol::Riesz(_, c) => c.homogeneity(),
            Symbol::Product(fs) => fs.iter().fold(Homogeneity::zero(), |a, f| a + f.homogeneity()),
        }
    }

    pub fn is_polynomial(&self) -> bool {
        matches!(self, Symbol::Poly(_))
    }

    /// True if any `X^k` with `k ≠ 0` occurs in the tree.
    pub fn contains_polynomial(&self) -> bool {
        match self {
            Symbol::XiIntegral => false,
            Symbol::Poly(k) => !k.is_zero(),
            Symbol::IntDeriv(_, c) | Symbol::Riesz(_, c) => c.contains_polynomial(),
            Symbol::Product(fs) => fs.iter().any(|f| f.contains_polynomial()),
        }
    }

    /// True if some `X^k` with `k0 > 0` occurs (annihilated by the model).
    pub fn has_time_polynomial(&self) -> bool {
        match self {
            Symbol::XiIntegral => false,
            Symbol::Poly(k) => k.k0 > 0,
            Symbol::IntDeriv(_, c) | Symbol::Riesz(_, c) => c.has_time_polynomial(),
            Symbol::Product(fs) => fs.iter().any(|f| f.has_time_polynomial()),
        }
    }

    pub fn noise_count(&self) -> usize {
        match self {
            Symbol::XiIntegral => 1,
            Symbol::Poly(_) => 0,
            Symbol::IntDeriv(_, c) | Symbol::Riesz(_, c) => c.noise_count(),
            Symbol::Product(fs) => fs.iter().map(|f| f.noise_count()).sum(),
        }
    }

    /// Same tree with every `I_j`/`R_i` index erased.
    pub fn shape(&self) -> Symbol {
        match self {
            Symbol::XiIntegral | Symbol::Poly(_) => self.clone(),
            Symbol::IntDeriv(_, c) => Symbol::IntDeriv(0, Box::new(c.shape())),
            Symbol::Riesz(_, c) => Symbol::Riesz(0, Box::new(c.shape())),
            Symbol::Product(fs) => Symbol::product(fs.iter().map(|f| f.shape())),
        }
    }

    /// Erases indices except the index of a Riesz factor sitting directly in a
    /// product. This is the usual display granularity of `F₋`, which
    /// keeps `(R₁I[Ξ])I[Ξ]` and `(R₂I[Ξ])I[Ξ]` apart but writes `R_iI[Ξ]` once.
    pub fn display_shape(&self) -> Symbol {
        match self {
            Symbol::Product(fs) => Symbol::product(fs.iter().map(|f| match f {
                Symbol::Riesz(i, c) => Symbol::Riesz(*i, Box::new(c.shape())),
                other => other.shape(),
            })),
            other => other.shape(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Symbol::XiIntegral | Symbol::Poly(_) => 0,
            Symbol::IntDeriv(_, c) | Symbol::Riesz(_, c) => 1 + c.depth(),
            Symbol::Product(fs) => fs.iter().map(|f| f.depth()).max().unwrap_or(0),
        }
    }
}

impl Symbol {
    // Riesz-rooted factors print first, matching `R2[I[Xi]]*I[Xi]`.
    fn rank(&self) -> u8 {
        match self {
            Symbol::Riesz(..) => 0,
            Symbol::IntDeriv(..) => 1,
            Symbol::Product(_) => 2,
            Symbol::XiIntegral => 3,
            Symbol::Poly(_) => 4,
        }
    }
}

impl Ord for Symbol {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        use Symbol::*;
        self.rank().cmp(&o.rank()).then_with(|| match (self, o) {
            (Poly(a), Poly(b)) => a.cmp(b),
            (IntDeriv(i, a), IntDeriv(j, b)) | (Riesz(i, a), Riesz(j, b)) => i.cmp(j).then_with(|| a.cmp(b)),
            (Product(a), Product(b)) => a.cmp(b),
            _ => std::cmp::Ordering::Equal,
        })
    }
}

impl PartialOrd for Symbol {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let idx = |i: &u8| if *i == 0 { String::new() } else { i.to_string() };
        match self {
            Symbol::XiIntegral => write!(f, "I[Xi]"),
            Symbol::Poly(k) => write!(f, "X^({},{},{})", k.k0, k.k1, k.k2),
            Symbol::IntDeriv(j, c) => write!(f, "I{}[{}]", idx(j), c),
            Symbol::Riesz(i, c) => write!(f, "R{}[{}]", idx(i), c),
            Symbol::Product(fs) => {
                for (n, x) in fs.iter().enumerate() {
                    if n > 0 {
                        f.write_str("*")?;
                    }
                    write!(f, "{x}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse symbol at byte {pos}: {msg}")]
pub struct ParseSymbolError {
    pub pos: usize,
    pub msg: String,
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err<T>(&self, msg: &str) -> Result<T, ParseSymbolError> {
        Err(ParseSymbolError {
            pos: self.pos,
            msg: msg.to_string(),
        })
    }

    fn eat(&mut self, lit: &str) -> bool {
        if self.s[self.pos..].starts_with(lit.as_bytes()) {
            self.pos += lit.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, lit: &str) -> Result<(), ParseSymbolError> {
        if self.eat(lit) {
            Ok(())
        } else {
            self.err(&format!("expected '{lit}'"))
        }
    }

    fn number(&mut self) -> Result<u32, ParseSymbolError> {
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.s[start..self.pos])
            .unwrap()
            .parse()
            .or_else(|_| self.err("expected integer"))
    }

    fn index(&mut self) -> Result<u8, ParseSymbolError> {
        match self.s.get(self.pos) {
            Some(b'1') => {
                self.pos += 1;
                Ok(1)
            }
            Some(b'2') => {
                self.pos += 1;
                Ok(2)
            }
            Some(b'[') => Ok(0),
            _ => self.err("expected index 1 or 2"),
        }
    }

    fn expr(&mut self) -> Result<Symbol, ParseSymbolError> {
        let mut fs = vec![self.factor()?];
        while self.eat("*") {
            fs.push(self.factor()?);
        }
        Ok(Symbol::product(fs))
    }

    fn factor(&mut self) -> Result<Symbol, ParseSymbolError> {
        if self.eat("I[Xi]") {
            return Ok(Symbol::XiIntegral);
        }
        if self.eat("X^(") {
            let k0 = self.number()?;
            self.expect(",")?;
            let k1 = self.number()?;
            self.expect(",")?;
            let k2 = self.number()?;
            self.expect(")")?;
            return Ok(Symbol::x(k0, k1, k2));
        }
        if self.eat("1") {
            return Ok(Symbol::one());
        }
        let at = self.pos;
        if self.eat("I") {
            let j = self.index()?;
            self.expect("[")?;
            let c = self.expr()?;
            self.expect("]")?;
            return match c {
                Symbol::Poly(_) => {
                    self.pos = at;
                    self.err("integration of a polynomial is the zero symbol")
                }
                c => Ok(Symbol::IntDeriv(j, Box::new(c))),
            };
        }
        if self.eat("R") {
            let i = self.index()?;
            self.expect("[")?;
            let c = self.expr()?;
            self.expect("]")?;
            return Symbol::riesz(i, c).map_or_else(
                || {
                    self.pos = at;
                    self.err("Riesz applies only to I[Xi] or I_j[..]")
                },
                Ok,
            );
        }
        self.err("unexpected input")
    }
}

impl FromStr for Symbol {
    type Err = ParseSymbolError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = Parser { s: s.as_bytes(), pos: 0 };
        let v = p.expr()?;
        if p.pos != s.len() {
            return p.err("trailing input");
        }
        Ok(v)
    }
}

impl Serialize for Symbol {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Symbol {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ri(i: u8) -> Symbol {
        Symbol::riesz(i, Symbol::xi()).unwrap()
    }

    #[test]
    fn canonical_text() {
        let s = Symbol::int_deriv(1, Symbol::product([Symbol::xi(), Symbol::riesz(2, Symbol::xi()).unwrap()])).unwrap();
        assert_eq!(s.to_string(), "I1[R2[I[Xi]]*I[Xi]]");
        assert_eq!(Symbol::x(0, 1, 0).to_string(), "X^(0,1,0)");
        assert_eq!("I1[R2[I[Xi]]*I[Xi]]".parse::<Symbol>().unwrap(), s);
    }

    #[test]
    fn homogeneity_table() {
        assert_eq!(Symbol::xi().homogeneity(), Homogeneity::new(-1, 1, -1));
        assert_eq!(Symbol::one().homogeneity(), Homogeneity::zero());
        let s: Symbol = "I2[R1[I[Xi]]*I[Xi]]".parse().unwrap();
        assert_eq!(s.homogeneity(), Homogeneity::new(-3, 4, -2));
        assert_eq!(Symbol::x(1, 2, 0).homogeneity(), Homogeneity::new(2, 2, 0));
    }

    #[test]
    fn product_is_commutative_and_unital() {
        let a = Symbol::product([ri(1), Symbol::xi()]);
        let b = Symbol::product([Symbol::xi(), ri(1)]);
        assert_eq!(a, b);
        assert_eq!(Symbol::product([Symbol::xi(), Symbol::one()]), Symbol::xi());
        assert_eq!(
            Symbol::product([Symbol::x(0, 1, 0), Symbol::xi(), Symbol::x(0, 0, 1)]),
            Symbol::product([Symbol::xi(), Symbol::x(0, 1, 1)])
        );
    }

    #[test]
    fn integration_kills_polynomials_and_riesz_is_sector_restricted() {
        assert!(Symbol::int_deriv(1, Symbol::x(0, 1, 0)).is_none());
        assert!(Symbol::riesz(1, Symbol::product([ri(1), Symbol::xi()])).is_none());
        assert!("I1[X^(0,1,0)]".parse::<Symbol>().is_err());
        assert!("R1[R2[I[Xi]]]".parse::<Symbol>().is_err());
    }

    #[test]
    fn shapes() {
        let s: Symbol = "I2[R1[I[Xi]]*I[Xi]]".parse().unwrap();
        assert_eq!(s.shape().to_string(), "I[R[I[Xi]]*I[Xi]]");
        let p: Symbol = "R2[I[Xi]]*I[Xi]".parse().unwrap();
        assert_eq!(p.display_shape().to_string(), "R2[I[Xi]]*I[Xi]");
        assert_eq!(ri(2).display_shape().to_string(), "R[I[Xi]]");
    }

    fn arb_symbol() -> impl Strategy<Value = Symbol> {
        let leaf = prop_oneof![
            Just(Symbol::xi()),
            (0u32..2, 0u32..3, 0u32..3).prop_map(|(a, b, c)| Symbol::x(a, b, c)),
        ];
        leaf.prop_recursive(4, 24, 3, |inner| {
            prop_oneof![
                (1u8..3, inner.clone()).prop_map(|(j, c)| Symbol::int_deriv(j, c).unwrap_or(Symbol::xi())),
                (1u8..3, inner.clone()).prop_map(|(i, c)| {
                    let c = Symbol::int_deriv(1, c).unwrap_or(Symbol::xi());
                    Symbol::riesz(i, c).unwrap()
                }),
                prop::collection::vec(inner, 2..4).prop_map(Symbol::product),
            ]
        })
    }

    proptest! {
        #[test]
        fn text_round_trip(s in arb_symbol()) {
            let t = s.to_string();
            prop_assert_eq!(t.parse::<Symbol>().unwrap(), s);
        }

        #[test]
        fn homogeneity_is_additive(a in arb_symbol(), b in arb_symbol()) {
            let p = Symbol::product([a.clone(), b.clone()]);
            prop_assert_eq!(p.homogeneity(), a.homogeneity() + b.homogeneity());
            prop_assert_eq!(p, Symbol::product([b, a]));
        }

        #[test]
        fn shape_preserves_homogeneity(s in arb_symbol()) {
            prop_assert_eq!(s.shape().homogeneity(), s.homogeneity());
        }
    }
}
