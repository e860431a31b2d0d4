//! `KRN1` dumps: one ASCII header line `KRN1 <nt> <nx> <ny> <mu>` followed by
//! little-endian `f64` values in row-major `(t, x, y)` order.

use std::io::{self, BufRead, Read, Write};

#[derive(Clone, Debug, PartialEq)]
pub struct Krn1 {
    pub nt: usize,
    pub nx: usize,
    pub ny: usize,
    pub mu: f64,
    pub data: Vec<f64>,
}

impl Krn1 {
    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        assert_eq!(self.data.len(), self.nt * self.nx * self.ny);
        writeln!(w, "KRN1 {} {} {} {}", self.nt, self.nx, self.ny, self.mu)?;
        let mut buf = Vec::with_capacity(self.data.len() * 8);
        for v in &self.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut v = Vec::new();
        self.write_to(&mut v).expect("writing to a Vec cannot fail");
        v
    }

    pub fn read_from<R: Read>(r: R) -> io::Result<Krn1> {
        let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
        let mut r = io::BufReader::new(r);
        let mut header = String::new();
        r.read_line(&mut header)?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 5 || parts[0] != "KRN1" {
            return Err(bad("missing KRN1 header"));
        }
        let dim = |s: &str| s.parse::<usize>().map_err(|_| bad("bad dimension"));
        let (nt, nx, ny) = (dim(parts[1])?, dim(parts[2])?, dim(parts[3])?);
        let mu: f64 = parts[4].parse().map_err(|_| bad("bad mu"))?;
        let n = nt
            .checked_mul(nx)
            .and_then(|v| v.checked_mul(ny))
            .ok_or_else(|| bad("dimension overflow"))?;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != n * 8 {
            return Err(bad(&format!("expected {} payload bytes, found {}", n * 8, bytes.len())));
        }
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Krn1 { nt, nx, ny, mu, data })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_header() {
        let k = Krn1 {
            nt: 2,
            nx: 3,
            ny: 1,
            mu: 0.9,
            data: vec![1.0, -2.5, 3.25, 0.0, f64::MIN_POSITIVE, 7.0],
        };
        let b = k.to_bytes();
        assert!(b.starts_with(b"KRN1 2 3 1 0.9\n"));
        assert_eq!(Krn1::read_from(&b[..]).unwrap(), k);
        assert!(Krn1::read_from(&b[..b.len() - 1]).is_err());
        assert!(Krn1::read_from(&b"KRN2 1 1 1 1\n"[..]).is_err());
    }
}
