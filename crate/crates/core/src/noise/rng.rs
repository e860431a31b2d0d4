//! Stateless counter-based Gaussians: every coefficient is a pure function of
//! `(seed, index)`, so any subset of a realization can be regenerated in any
//! order.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of realization `r` derived from a base seed.
#[inline]
pub fn realization_seed(seed: u64, r: u64) -> u64 {
    splitmix64(seed ^ r.wrapping_mul(GOLDEN))
}

#[inline]
fn unit(h: u64) -> f64 {
    ((h >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal for `(seed, index)` by Box–Muller on two hashed uniforms.
#[inline]
pub fn gaussian(seed: u64, index: u64) -> f64 {
    let h1 = splitmix64(seed ^ splitmix64(index));
    let h2 = splitmix64(h1 ^ 0xD1B5_4A32_D192_ED03);
    (-2.0 * unit(h1).ln()).sqrt() * (std::f64::consts::TAU * unit(h2)).cos()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_of_hashed_gaussians() {
        let n = 200_000u64;
        let (mut s1, mut s2, mut s4) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let z = gaussian(7, i);
            s1 += z;
            s2 += z * z;
            s4 += z.powi(4);
        }
        let nf = n as f64;
        assert!((s1 / nf).abs() < 0.01);
        assert!((s2 / nf - 1.0).abs() < 0.01);
        assert!((s4 / nf - 3.0).abs() < 0.06);
        assert_eq!(gaussian(7, 3), gaussian(7, 3));
        assert_ne!(gaussian(7, 3), gaussian(8, 3));
    }

    #[test]
    fn neighbouring_indices_are_uncorrelated() {
        let n = 100_000u64;
        let c: f64 = (0..n).map(|i| gaussian(1, i) * gaussian(1, i + 1)).sum::<f64>() / n as f64;
        assert!(c.abs() < 0.015);
    }
}
