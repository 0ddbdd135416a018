//! Seedable counter-based random streams.
//!
//! Every component draws from its own derived stream, identified by a label
//! and an index hashed into the ChaCha stream id. Parallelizing over cells or
//! batches therefore never changes the numbers any single consumer sees.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic stream derived from a master seed, a component label and an
/// index within that component.
pub fn stream(seed: u64, label: &str, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(label_hash(label) ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    rng
}

// FNV-1a; only has to separate the handful of component labels we use.
fn label_hash(label: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// One draw from N(0, 1) via Box-Muller.
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u1: f64 = rng.random();
        if u1 > f64::MIN_POSITIVE {
            let u2: f64 = rng.random();
            return (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
        }
    }
}

/// Circularly-symmetric complex Gaussian with total variance `var`
/// (`var / 2` per real dimension).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    Complex64::new(s * standard_normal(rng), s * standard_normal(rng))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_deterministic_and_distinct() {
        let a: Vec<f64> = (0..8).map(|_| standard_normal(&mut stream(7, "x", 0))).collect();
        let b: Vec<f64> = (0..8).map(|_| standard_normal(&mut stream(7, "x", 0))).collect();
        assert_eq!(a, b);
        let mut r1 = stream(7, "x", 0);
        let mut r2 = stream(7, "x", 1);
        let mut r3 = stream(7, "y", 0);
        assert_ne!(standard_normal(&mut r1), standard_normal(&mut r2));
        assert_ne!(standard_normal(&mut stream(7, "x", 0)), standard_normal(&mut r3));
    }

    #[test]
    fn normal_moments() {
        let mut rng = stream(1, "moments", 0);
        let n = 200_000;
        let (mut m1, mut m2) = (0.0, 0.0);
        for _ in 0..n {
            let x = standard_normal(&mut rng);
            m1 += x;
            m2 += x * x;
        }
        m1 /= n as f64;
        m2 /= n as f64;
        assert!(m1.abs() < 0.01, "mean {m1}");
        assert!((m2 - 1.0).abs() < 0.02, "second moment {m2}");
    }

    #[test]
    fn complex_normal_variance() {
        let mut rng = stream(2, "cn", 0);
        let n = 200_000;
        let mut p = 0.0;
        for _ in 0..n {
            p += complex_normal(&mut rng, 3.0).norm_sqr();
        }
        assert!((p / n as f64 - 3.0).abs() < 0.05);
    }
}
