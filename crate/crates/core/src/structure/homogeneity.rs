use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Neg, Sub};

/// Linear form `c + mu_coeff·μ + kappa_coeff·κ` with rational coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Homogeneity {
    pub c: Rational64,
    pub mu: Rational64,
    pub kappa: Rational64,
}

impl Homogeneity {
    pub fn new(c: i64, mu: i64, kappa: i64) -> Self {
        Self {
            c: c.into(),
            mu: mu.into(),
            kappa: kappa.into(),
        }
    }

    pub fn zero() -> Self {
        Self::new(0, 0, 0)
    }

    pub fn eval(&self, mu: Rational64, kappa: Rational64) -> Rational64 {
        self.c + self.mu * mu + self.kappa * kappa
    }

    pub fn eval_f64(&self, mu: f64, kappa: f64) -> f64 {
        self.c.to_f64().unwrap() + self.mu.to_f64().unwrap() * mu + self.kappa.to_f64().unwrap() * kappa
    }

    /// Human form, constant first, e.g. `-2-2κ+2μ`.
    pub fn pretty(&self) -> String {
        let mut s = String::new();
        let mut push = |coef: Rational64, sym: &str| {
            if coef.is_zero() {
                return;
            }
            let neg = coef < Rational64::zero();
            let mag = if neg { -coef } else { coef };
            if neg {
                s.push('-');
            } else if !s.is_empty() {
                s.push('+');
            }
            let one = Rational64::from_integer(1);
            if sym.is_empty() || mag != one {
                s.push_str(&mag.to_string());
            }
            s.push_str(sym);
        };
        push(self.c, "");
        push(self.kappa, "κ");
        push(self.mu, "μ");
        if s.is_empty() {
            s.push('0');
        }
        s
    }
}

impl Add for Homogeneity {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            c: self.c + o.c,
            mu: self.mu + o.mu,
            kappa: self.kappa + o.kappa,
        }
    }
}

impl Sub for Homogeneity {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Neg for Homogeneity {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            c: -self.c,
            mu: -self.mu,
            kappa: -self.kappa,
        }
    }
}

impl fmt::Display for Homogeneity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pretty())
    }
}

// JSON as {c, mu, kappa} with rationals rendered "p/q".
#[derive(Serialize, Deserialize)]
struct HomogeneityRepr {
    c: String,
    mu: String,
    kappa: String,
}

impl Serialize for Homogeneity {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        HomogeneityRepr {
            c: self.c.to_string(),
            mu: self.mu.to_string(),
            kappa: self.kappa.to_string(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Homogeneity {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = HomogeneityRepr::deserialize(d)?;
        let p = |v: &str| parse_rational(v).map_err(serde::de::Error::custom);
        Ok(Self {
            c: p(&r.c)?,
            mu: p(&r.mu)?,
            kappa: p(&r.kappa)?,
        })
    }
}

/// Parses `p/q`, an integer, or a terminating decimal such as `0.9` exactly.
pub fn parse_rational(s: &str) -> Result<Rational64, String> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| format!("bad rational '{s}'"))?;
        let d: i64 = d.trim().parse().map_err(|_| format!("bad rational '{s}'"))?;
        if d == 0 {
            return Err(format!("zero denominator in '{s}'"));
        }
        return Ok(Rational64::new(n, d));
    }
    if let Some((ip, fp)) = s.split_once('.') {
        if fp.len() > 15 || !fp.chars().all(|c| c.is_ascii_digit()) {
            return Err(format!("bad decimal '{s}'"));
        }
        let neg = ip.starts_with('-');
        let ip_abs = ip.trim_start_matches('-');
        let ip_v: i64 = if ip_abs.is_empty() {
            0
        } else {
            ip_abs.parse().map_err(|_| format!("bad decimal '{s}'"))?
        };
        let den = 10i64.pow(fp.len() as u32);
        let fp_v: i64 = if fp.is_empty() { 0 } else { fp.parse().unwrap() };
        let v = Rational64::new(ip_v * den + fp_v, den);
        return Ok(if neg { -v } else { v });
    }
    s.parse::<i64>()
        .map(Rational64::from_integer)
        .map_err(|_| format!("bad rational '{s}'"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn pretty_puts_constant_first() {
        assert_eq!(Homogeneity::new(-2, 2, -2).pretty(), "-2-2κ+2μ");
        assert_eq!(Homogeneity::new(-1, 1, -1).pretty(), "-1-κ+μ");
        assert_eq!(Homogeneity::zero().pretty(), "0");
    }

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rational("9/10").unwrap(), r(9, 10));
        assert_eq!(parse_rational("0.9").unwrap(), r(9, 10));
        assert_eq!(parse_rational("-0.25").unwrap(), r(-1, 4));
        assert_eq!(parse_rational("1").unwrap(), r(1, 1));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn json_round_trip() {
        let h = Homogeneity::new(-3, 4, -2);
        let j = serde_json::to_string(&h).unwrap();
        assert_eq!(j, r#"{"c":"-3","mu":"4","kappa":"-2"}"#);
        let back: Homogeneity = serde_json::from_str(&j).unwrap();
        assert_eq!(back, h);
    }
}
