//! Channel realizations and their statistics.
//!
//! Two models: i.i.d. Rayleigh fading (circularly-symmetric complex Gaussian
//! entries, unit variance) and a line-of-sight uniform linear array model
//! whose columns are steering vectors. Both have per-entry second moment 1
//! and identity covariance, so the same estimator formulas apply to both.

use crate::error::{Error, Result};
use crate::rng;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    RayleighIid,
    Los,
}

#[derive(Debug, Clone, Copy)]
pub struct ChannelModel {
    pub kind: ChannelKind,
    /// Receive antennas.
    pub m: usize,
    /// Transmit antennas / users.
    pub k: usize,
}

impl ChannelModel {
    pub fn new(kind: ChannelKind, m: usize, k: usize) -> Result<Self> {
        if m == 0 || k == 0 {
            return Err(Error::Dimension(format!("channel dims M={m}, K={k} must be >= 1")));
        }
        Ok(Self { kind, m, k })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DMatrix<Complex64> {
        match self.kind {
            ChannelKind::RayleighIid => sample_rayleigh(self.m, self.k, rng).unwrap(),
            ChannelKind::Los => sample_los(self.m, self.k, rng).unwrap(),
        }
    }

    /// Channel covariance C_h; identity of size MK for both supported kinds.
    pub fn covariance(&self) -> DMatrix<Complex64> {
        DMatrix::identity(self.m * self.k, self.m * self.k)
    }
}

/// Draw an M x K matrix of i.i.d. CN(0, 1) entries.
pub fn sample_rayleigh<R: Rng + ?Sized>(m: usize, k: usize, rng: &mut R) -> Result<DMatrix<Complex64>> {
    if m == 0 || k == 0 {
        return Err(Error::Dimension(format!("rayleigh dims M={m}, K={k} must be >= 1")));
    }
    Ok(DMatrix::from_fn(m, k, |_, _| rng::complex_normal(rng, 1.0)))
}

/// Per-user geometry of one LoS realization.
#[derive(Debug, Clone, Copy)]
pub struct LosUserGeometry {
    /// Angle of arrival, uniform over [-pi/3, pi/3].
    pub theta: f64,
    /// Spatial frequency pi * sin(theta) for half-wavelength spacing.
    pub omega: f64,
    /// Phase shift, uniform over [0, 2 pi).
    pub phi: f64,
    /// Amplitude; must satisfy E[a^2] = 1 over its law.
    pub a: f64,
}

impl LosUserGeometry {
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, amplitude: fn(&mut R) -> f64) -> Self {
        let theta = (rng.random::<f64>() * 2.0 - 1.0) * PI / 3.0;
        Self {
            theta,
            omega: PI * theta.sin(),
            phi: rng.random::<f64>() * 2.0 * PI,
            a: amplitude(rng),
        }
    }

    /// Steering-vector column a * e^{j phi} * [1, e^{j omega}, ..., e^{j (M-1) omega}].
    pub fn column(&self, m: usize) -> Vec<Complex64> {
        (0..m)
            .map(|i| Complex64::from_polar(self.a, self.phi + i as f64 * self.omega))
            .collect()
    }
}

/// Draw an M x K LoS channel with deterministic unit amplitudes.
pub fn sample_los<R: Rng + ?Sized>(m: usize, k: usize, rng: &mut R) -> Result<DMatrix<Complex64>> {
    sample_los_with_amplitude(m, k, rng, |_| 1.0)
}

/// LoS sampler with a caller-supplied amplitude law (must have E[a^2] = 1).
pub fn sample_los_with_amplitude<R: Rng + ?Sized>(
    m: usize,
    k: usize,
    rng: &mut R,
    amplitude: fn(&mut R) -> f64,
) -> Result<DMatrix<Complex64>> {
    if m == 0 || k == 0 {
        return Err(Error::Dimension(format!("los dims M={m}, K={k} must be >= 1")));
    }
    let mut h = DMatrix::zeros(m, k);
    for col in 0..k {
        let geo = LosUserGeometry::sample(rng, amplitude);
        for (row, v) in geo.column(m).into_iter().enumerate() {
            h[(row, col)] = v;
        }
    }
    Ok(h)
}

/// Column-major stacking vec(H).
pub fn vectorize(h: &DMatrix<Complex64>) -> Vec<Complex64> {
    h.as_slice().to_vec()
}

/// Inverse of [`vectorize`].
pub fn unvectorize(h: &[Complex64], m: usize, k: usize) -> Result<DMatrix<Complex64>> {
    if h.len() != m * k {
        return Err(Error::Dimension(format!("vector length {} != M*K = {}", h.len(), m * k)));
    }
    Ok(DMatrix::from_column_slice(m, k, h))
}

/// Real stacking [Re(h); Im(h)].
pub fn real_stack(h: &[Complex64]) -> Vec<f64> {
    h.iter().map(|z| z.re).chain(h.iter().map(|z| z.im)).collect()
}

/// Inverse of [`real_stack`].
pub fn complex_unstack(x: &[f64]) -> Result<Vec<Complex64>> {
    if x.len() % 2 != 0 {
        return Err(Error::Dimension(format!("stacked length {} is odd", x.len())));
    }
    let n = x.len() / 2;
    Ok((0..n).map(|i| Complex64::new(x[i], x[n + i])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use approx::assert_relative_eq;

    #[test]
    fn rayleigh_scalar_second_moment() {
        let mut rng = stream(11, "ray1", 0);
        let n = 1_000_000;
        let mut p = 0.0;
        for _ in 0..n {
            p += sample_rayleigh(1, 1, &mut rng).unwrap()[(0, 0)].norm_sqr();
        }
        let m2 = p / n as f64;
        assert!((m2 - 1.0).abs() < 0.01, "mean |h|^2 = {m2}");
    }

    #[test]
    fn rayleigh_re_im_uncorrelated() {
        let mut rng = stream(12, "ray2", 0);
        let n = 1_000_000usize;
        // correlation between real and imaginary part of one entry of a 2x3 draw
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for _ in 0..n / 6 {
            let h = sample_rayleigh(2, 3, &mut rng).unwrap();
            for z in h.iter() {
                sxy += z.re * z.im;
                sxx += z.re * z.re;
                syy += z.im * z.im;
            }
        }
        let corr = sxy / (sxx.sqrt() * syy.sqrt());
        assert!(corr.abs() < 0.01, "corr = {corr}");
    }

    #[test]
    fn zero_dimension_is_error() {
        let mut rng = stream(0, "z", 0);
        assert!(sample_rayleigh(0, 1, &mut rng).is_err());
        assert!(sample_los(1, 0, &mut rng).is_err());
        assert!(ChannelModel::new(ChannelKind::Los, 0, 4).is_err());
    }

    #[test]
    fn los_steering_vector_values() {
        // theta = 0 -> all-ones column
        let geo = LosUserGeometry { theta: 0.0, omega: 0.0, phi: 0.0, a: 1.0 };
        for v in geo.column(4) {
            assert_relative_eq!(v.re, 1.0, epsilon = 1e-15);
            assert_relative_eq!(v.im, 0.0, epsilon = 1e-15);
        }
        // theta = pi/6 -> omega = pi/2 -> [1, j, -1, -j]
        let th = PI / 6.0;
        let geo = LosUserGeometry { theta: th, omega: PI * th.sin(), phi: 0.0, a: 1.0 };
        let col = geo.column(4);
        let expect = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, -1.0),
        ];
        for (v, e) in col.iter().zip(expect.iter()) {
            assert_relative_eq!(v.re, e.re, epsilon = 1e-12);
            assert_relative_eq!(v.im, e.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn los_unit_modulus_and_second_moment() {
        let mut rng = stream(13, "los", 0);
        let h = sample_los(5, 3, &mut rng).unwrap();
        for z in h.iter() {
            assert_relative_eq!(z.norm(), 1.0, epsilon = 1e-12);
        }
        // per-entry second moment 1 at 10^6 samples
        let n = 1_000_000usize;
        let mut p = 0.0;
        for _ in 0..n {
            p += sample_los(1, 1, &mut rng).unwrap()[(0, 0)].norm_sqr();
        }
        assert!((p / n as f64 - 1.0).abs() < 0.01);
    }

    #[test]
    fn los_fourth_moment_is_non_gaussian() {
        // Re(h) = cos(uniform phase): E[Re^4] = 3/8, versus 3/4 for CN(0,1).
        let mut rng = stream(14, "los4", 0);
        let n = 1_000_000usize;
        let mut m4 = 0.0;
        for _ in 0..n {
            let re = sample_los(1, 1, &mut rng).unwrap()[(0, 0)].re;
            m4 += re.powi(4);
        }
        m4 /= n as f64;
        assert!((m4 - 0.375).abs() / 0.375 < 0.02, "E[Re^4] = {m4}");
    }

    #[test]
    fn covariance_is_identity() {
        let model = ChannelModel::new(ChannelKind::RayleighIid, 2, 2).unwrap();
        assert_eq!(model.covariance(), DMatrix::identity(4, 4));
        let model = ChannelModel::new(ChannelKind::Los, 4, 8).unwrap();
        assert_eq!(model.covariance(), DMatrix::identity(32, 32));
        let model = ChannelModel::new(ChannelKind::RayleighIid, 1, 1).unwrap();
        assert_eq!(model.covariance(), DMatrix::identity(1, 1));
    }

    #[test]
    fn vectorize_is_column_major() {
        let h = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 2.0),
                Complex64::new(3.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 1.0),
            ],
        );
        let v = vectorize(&h);
        assert_eq!(
            v,
            vec![
                Complex64::new(1.0, 2.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(3.0, 0.0),
                Complex64::new(0.0, 1.0),
            ]
        );
        assert_eq!(unvectorize(&v, 2, 2).unwrap(), h);
    }

    #[test]
    fn real_stack_round_trip() {
        let h = vec![Complex64::new(1.0, 2.0)];
        assert_eq!(real_stack(&h), vec![1.0, 2.0]);
        assert_eq!(complex_unstack(&[1.0, 2.0]).unwrap(), h);
        let mut rng = stream(3, "rt", 0);
        let h = vectorize(&sample_rayleigh(3, 2, &mut rng).unwrap());
        assert_eq!(complex_unstack(&real_stack(&h)).unwrap(), h);
    }
}
