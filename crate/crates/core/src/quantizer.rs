//! Optimal uniform scalar quantizers for Gaussian inputs.
//!
//! Step sizes and distortion factors are the tabulated optima for a unit
//! variance Gaussian source; all thresholds and levels scale with the input
//! standard deviation. Quantization is applied element-wise to the real and
//! imaginary parts independently. The straight-through mask is the clipped
//! pass-through surrogate used when back-propagating through a quantizer.

use crate::error::{Error, Result};
use crate::rng;
use rand::Rng;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Resolution {
    OneBit,
    Ternary,
    TwoBit,
    ThreeBit,
    FourBit,
}

impl Resolution {
    pub fn bits(&self) -> Option<u32> {
        match self {
            Resolution::OneBit => Some(1),
            Resolution::Ternary => None,
            Resolution::TwoBit => Some(2),
            Resolution::ThreeBit => Some(3),
            Resolution::FourBit => Some(4),
        }
    }
}

/// (step size, distortion factor) of the optimal uniform quantizer for a
/// unit-variance Gaussian input.
pub fn quantizer_table(resolution: Resolution) -> (f64, f64) {
    match resolution {
        Resolution::OneBit => ((8.0 / PI).sqrt(), 1.0 - 2.0 / PI),
        Resolution::Ternary => (1.224, 0.1902),
        Resolution::TwoBit => (0.996, 0.1188),
        Resolution::ThreeBit => (0.586, 0.0374),
        Resolution::FourBit => (0.335, 0.0115),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerSpec {
    pub resolution: Resolution,
    /// Step size for a unit-variance input.
    pub delta: f64,
    /// Distortion factor eta in (0, 1).
    pub eta: f64,
    /// Input standard deviation per real dimension.
    pub sigma: f64,
}

impl QuantizerSpec {
    pub fn new(resolution: Resolution, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::Precondition(format!("sigma = {sigma} must be positive")));
        }
        let (delta, eta) = quantizer_table(resolution);
        Ok(Self { resolution, delta, eta, sigma })
    }

    /// Largest unsaturated magnitude; the STE passes gradient inside it.
    pub fn clip(&self) -> f64 {
        let ds = self.delta * self.sigma;
        match self.resolution {
            Resolution::OneBit => self.sigma,
            Resolution::Ternary => 1.5 * ds,
            Resolution::TwoBit => 2.0 * ds,
            Resolution::ThreeBit => 4.0 * ds,
            Resolution::FourBit => 8.0 * ds,
        }
    }

    fn quantize_scalar(&self, y: f64) -> (f64, i32) {
        let ds = self.delta * self.sigma;
        match self.resolution {
            // sign(0) := +1 for determinism
            Resolution::OneBit => {
                let c = if y < 0.0 { -1 } else { 1 };
                (c as f64, c)
            }
            Resolution::Ternary => {
                let c = if y > ds / 2.0 {
                    1
                } else if y < -ds / 2.0 {
                    -1
                } else {
                    0
                };
                (c as f64 * ds, c)
            }
            _ => {
                let max_code = (1i32 << self.resolution.bits().unwrap()) - 1;
                let c = (2.0 * (y / ds).floor() + 1.0).clamp(-(max_code as f64), max_code as f64);
                let c = c as i32;
                (c as f64 * ds / 2.0, c)
            }
        }
    }

    /// Reconstruction level used when measuring distortion; the optimal level
    /// for the code under the Gaussian input model.
    pub fn optimal_level(&self, code: i32) -> f64 {
        let ds = self.delta * self.sigma;
        match self.resolution {
            Resolution::OneBit => code as f64 * ds / 2.0,
            Resolution::Ternary => code as f64 * ds,
            _ => code as f64 * ds / 2.0,
        }
    }
}

/// Element-wise quantization; returns reconstruction values and integer codes.
///
/// One-bit values are the signs themselves; ternary values are
/// {-delta sigma, 0, delta sigma}; multi-bit values are code * delta sigma / 2
/// with codes clamped to the odd set {..., -3, -1, 1, 3, ...} up to 2^b - 1.
pub fn quantize(y: &[f64], spec: &QuantizerSpec) -> Result<(Vec<f64>, Vec<i32>)> {
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("quantizer input contains NaN/Inf".into()));
    }
    let mut values = Vec::with_capacity(y.len());
    let mut codes = Vec::with_capacity(y.len());
    for &v in y {
        let (val, code) = spec.quantize_scalar(v);
        values.push(val);
        codes.push(code);
    }
    Ok((values, codes))
}

/// STE gradient mask: 1 where |y| <= clip, else 0.
pub fn ste_mask(y: &[f64], spec: &QuantizerSpec) -> Vec<f64> {
    let clip = spec.clip();
    y.iter().map(|&v| if v.abs() <= clip { 1.0 } else { 0.0 }).collect()
}

/// Monte-Carlo estimate of the normalized distortion E[(y - Q(y))^2] / E[y^2]
/// for y ~ N(0, sigma^2), using the optimal reconstruction levels.
pub fn empirical_distortion<R: Rng + ?Sized>(
    spec: &QuantizerSpec,
    n_samples: usize,
    rng: &mut R,
) -> Result<f64> {
    if n_samples < 100_000 {
        return Err(Error::Precondition(format!("n_samples = {n_samples} must be >= 1e5")));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for _ in 0..n_samples {
        let y = spec.sigma * rng::standard_normal(rng);
        let (_, code) = spec.quantize_scalar(y);
        let q = spec.optimal_level(code);
        num += (y - q) * (y - q);
        den += y * y;
    }
    Ok(num / den)
}

/// Standard deviation of the quantizer input per real dimension,
/// sqrt((K rho + N0) / 2).
pub fn input_sigma(k: usize, rho: f64, n0: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::Precondition("K must be >= 1".into()));
    }
    if rho < 0.0 || !(n0 > 0.0) {
        return Err(Error::Precondition(format!("need rho >= 0 (got {rho}), N0 > 0 (got {n0})")));
    }
    Ok(((k as f64 * rho + n0) / 2.0).sqrt())
}

pub const ALL_RESOLUTIONS: [Resolution; 5] = [
    Resolution::OneBit,
    Resolution::Ternary,
    Resolution::TwoBit,
    Resolution::ThreeBit,
    Resolution::FourBit,
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn table_values() {
        assert_eq!(quantizer_table(Resolution::TwoBit), (0.996, 0.1188));
        assert_eq!(quantizer_table(Resolution::FourBit), (0.335, 0.0115));
        let (d, e) = quantizer_table(Resolution::OneBit);
        assert_relative_eq!(d, (8.0 / PI).sqrt(), epsilon = 1e-15);
        assert_relative_eq!(e, 1.0 - 2.0 / PI, epsilon = 1e-15);
    }

    #[test]
    fn one_bit_sign() {
        let spec = QuantizerSpec::new(Resolution::OneBit, 1.0).unwrap();
        let (v, c) = quantize(&[0.7, -0.2, 0.0], &spec).unwrap();
        assert_eq!(v, vec![1.0, -1.0, 1.0]);
        assert_eq!(c, vec![1, -1, 1]);
    }

    #[test]
    fn two_bit_examples() {
        let spec = QuantizerSpec::new(Resolution::TwoBit, 1.0).unwrap();
        let (v, c) = quantize(&[0.3, 10.0, -10.0], &spec).unwrap();
        assert_eq!(c, vec![1, 3, -3]);
        assert_relative_eq!(v[0], 0.498, epsilon = 1e-12);
        assert_relative_eq!(v[1], 1.494, epsilon = 1e-12);
        assert_relative_eq!(v[2], -1.494, epsilon = 1e-12);
    }

    #[test]
    fn ternary_dead_zone() {
        let spec = QuantizerSpec::new(Resolution::Ternary, 1.0).unwrap();
        let (v, c) = quantize(&[0.4, 0.7, -0.7], &spec).unwrap();
        assert_eq!(c, vec![0, 1, -1]);
        assert_eq!(v[0], 0.0);
        assert_relative_eq!(v[1], 1.224, epsilon = 1e-12);
    }

    #[test]
    fn non_finite_input_is_error() {
        let spec = QuantizerSpec::new(Resolution::OneBit, 1.0).unwrap();
        assert!(matches!(quantize(&[f64::NAN], &spec), Err(Error::NonFinite(_))));
    }

    #[test]
    fn ste_mask_examples() {
        let spec = QuantizerSpec::new(Resolution::OneBit, 1.0).unwrap();
        assert_eq!(ste_mask(&[0.2, 3.0], &spec), vec![1.0, 0.0]);
        let spec = QuantizerSpec::new(Resolution::TwoBit, 1.0).unwrap();
        // saturation boundary 2 * 0.996 = 1.992
        assert_eq!(ste_mask(&[1.0, 1.991, 1.993], &spec), vec![1.0, 1.0, 0.0]);
    }

    #[test]
    fn input_sigma_values() {
        assert_relative_eq!(input_sigma(4, 1.0, 1.0).unwrap(), (2.5f64).sqrt(), epsilon = 1e-15);
        assert_relative_eq!(input_sigma(1, 0.0, 2.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(input_sigma(2, 0.5, 1.0).unwrap(), 1.0, epsilon = 1e-15);
        assert!(input_sigma(0, 1.0, 1.0).is_err());
    }

    #[test]
    fn distortion_matches_table() {
        // acceptance runs all rows at 1e6; here a quick smoke at 2e5
        let mut rng = stream(77, "dist", 0);
        let spec = QuantizerSpec::new(Resolution::OneBit, 1.3).unwrap();
        let eta = empirical_distortion(&spec, 200_000, &mut rng).unwrap();
        assert!((eta - spec.eta).abs() / spec.eta < 0.03, "eta = {eta}");
    }

    #[test]
    fn quantize_is_idempotent_on_values() {
        let mut rng = stream(8, "idem", 0);
        for res in ALL_RESOLUTIONS {
            let spec = QuantizerSpec::new(res, 0.8).unwrap();
            let y: Vec<f64> = (0..200).map(|_| 3.0 * rng::standard_normal(&mut rng)).collect();
            let (v1, _) = quantize(&y, &spec).unwrap();
            let (v2, _) = quantize(&v1, &spec).unwrap();
            assert_eq!(v1, v2, "{res:?}");
        }
    }

    proptest! {
        #[test]
        fn prop_symmetry_and_codes(y in -6.0f64..6.0, sigma in 0.5f64..2.0) {
            for res in ALL_RESOLUTIONS {
                let spec = QuantizerSpec::new(res, sigma).unwrap();
                let ds = spec.delta * spec.sigma;
                // stay off decision boundaries where symmetry is convention-bound
                let boundary = match res {
                    Resolution::OneBit => y.abs() < 1e-9,
                    Resolution::Ternary => (y.abs() - ds / 2.0).abs() < 1e-9,
                    _ => (y / ds - (y / ds).round()).abs() < 1e-9,
                };
                prop_assume!(!boundary);
                let (v, c) = quantize(&[y, -y], &spec).unwrap();
                prop_assert!((v[0] + v[1]).abs() < 1e-12, "{res:?}: {v:?}");
                prop_assert_eq!(c[0], -c[1]);
                match res {
                    Resolution::OneBit => prop_assert!(c[0] == 1 || c[0] == -1),
                    Resolution::Ternary => prop_assert!((-1..=1).contains(&c[0])),
                    _ => {
                        let max = (1 << res.bits().unwrap()) - 1;
                        prop_assert!(c[0].abs() <= max && c[0] % 2 != 0);
                    }
                }
            }
        }

        #[test]
        fn prop_monotonic(a in -6.0f64..6.0, b in -6.0f64..6.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            for res in ALL_RESOLUTIONS {
                let spec = QuantizerSpec::new(res, 1.0).unwrap();
                let (v, _) = quantize(&[lo, hi], &spec).unwrap();
                prop_assert!(v[0] <= v[1]);
            }
        }
    }
}
