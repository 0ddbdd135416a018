//! Closed-form linear channel estimators.
//!
//! Unquantized LMMSE with its error covariance, the Bussgang linearization of
//! a few-bit quantizer, the exact arcsine-law covariance for 1-bit receivers,
//! the approximate multi-bit covariance, and the simplified orthogonal-pilot
//! BLMMSE. Hermitian systems are solved by Cholesky; a singular factorization
//! is reported with a condition diagnostic, never silently pseudo-inverted.

use crate::error::{Error, Result};
use crate::pilot::{dense_effective, effective_adjoint, PilotMatrix};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub enum NoiseModel {
    /// C_n = N0 * I.
    White { n0: f64 },
    /// Arbitrary Hermitian positive definite C_n.
    General(DMatrix<Complex64>),
}

impl NoiseModel {
    pub fn covariance(&self, n: usize) -> DMatrix<Complex64> {
        match self {
            NoiseModel::White { n0 } => DMatrix::identity(n, n) * Complex64::from(*n0),
            NoiseModel::General(c) => c.clone(),
        }
    }

    pub fn trace(&self, n: usize) -> f64 {
        match self {
            NoiseModel::White { n0 } => n0 * n as f64,
            NoiseModel::General(c) => c.diagonal().iter().map(|z| z.re).sum(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EstimatorReport {
    pub estimate: Vec<Complex64>,
    pub error_cov: Option<DMatrix<Complex64>>,
    /// Tr{C_eps}.
    pub total_mse: f64,
}

/// Bussgang split r = (1 - eta) y + e of a quantized observation.
#[derive(Debug, Clone, Copy)]
pub struct BussgangModel {
    pub gain: f64,
    pub residual_cov_kind: ResidualCovKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualCovKind {
    /// Exact arcsine-law covariance (1-bit only).
    ArcsineExact,
    /// Approximate covariance (1-eta)((1-eta) C_y + eta diag(C_y)).
    Approximate,
}

impl BussgangModel {
    pub fn new(eta: f64, residual_cov_kind: ResidualCovKind) -> Result<Self> {
        let gain = 1.0 - eta;
        if !(gain > 0.0 && gain < 1.0) {
            return Err(Error::Precondition(format!("Bussgang gain 1-eta = {gain} not in (0,1)")));
        }
        Ok(Self { gain, residual_cov_kind })
    }
}

fn is_identity(m: &DMatrix<Complex64>) -> bool {
    m.is_square()
        && m.iter().enumerate().all(|(idx, z)| {
            let (r, c) = (idx % m.nrows(), idx / m.nrows());
            let expect = if r == c { 1.0 } else { 0.0 };
            (z - Complex64::from(expect)).norm() < 1e-12
        })
}

fn chol_solve_mat(
    a: &DMatrix<Complex64>,
    rhs: &DMatrix<Complex64>,
    what: &str,
) -> Result<DMatrix<Complex64>> {
    match a.clone().cholesky() {
        Some(ch) => Ok(ch.solve(rhs)),
        None => Err(numerical_failure(a, what)),
    }
}

fn chol_solve_vec(
    a: &DMatrix<Complex64>,
    rhs: &DVector<Complex64>,
    what: &str,
) -> Result<DVector<Complex64>> {
    match a.clone().cholesky() {
        Some(ch) => Ok(ch.solve(rhs)),
        None => Err(numerical_failure(a, what)),
    }
}

fn numerical_failure(a: &DMatrix<Complex64>, what: &str) -> Error {
    let diag: Vec<f64> = a.diagonal().iter().map(|z| z.re).collect();
    let dmax = diag.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let dmin = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    Error::Numerical(format!(
        "Cholesky of {what} ({}x{}) failed; diagonal range [{dmin:.3e}, {dmax:.3e}], ratio {:.3e}",
        a.nrows(),
        a.ncols(),
        dmax / dmin.max(f64::MIN_POSITIVE)
    ))
}

/// rho from the SNR definition SNR = rho tau Tr{C_h} / (K Tr{C_n}).
pub fn snr_to_rho(snr_linear: f64, c_h_trace: f64, c_n_trace: f64, k: usize, tau: usize) -> f64 {
    snr_linear * k as f64 * c_n_trace / (tau as f64 * c_h_trace)
}

/// LMMSE estimate of h from the unquantized observation y, using the MK x MK
/// form (Phi_bar^H C_n^-1 Phi_bar + C_h^-1)^-1 Phi_bar^H C_n^-1 y.
///
/// With white noise, identity C_h and orthogonal pilots this collapses to
/// Phi_bar^H y / (rho tau + N0); the fast path is taken automatically.
pub fn lmmse_estimate(
    y: &[Complex64],
    pilot: &PilotMatrix,
    rho: f64,
    c_h: &DMatrix<Complex64>,
    noise: &NoiseModel,
    m: usize,
) -> Result<EstimatorReport> {
    let (tau, k) = (pilot.tau(), pilot.k());
    let mk = m * k;
    if y.len() != m * tau {
        return Err(Error::Dimension(format!("y length {} != M*tau = {}", y.len(), m * tau)));
    }
    if rho == 0.0 {
        return Ok(EstimatorReport {
            estimate: vec![Complex64::ZERO; mk],
            total_mse: c_h.diagonal().iter().map(|z| z.re).sum(),
            error_cov: Some(c_h.clone()),
        });
    }
    if let NoiseModel::White { n0 } = noise {
        if is_identity(c_h) && pilot.is_orthogonal() {
            let denom = rho * tau as f64 + n0;
            let est = effective_adjoint(pilot, rho, y, m)?
                .into_iter()
                .map(|z| z / denom)
                .collect();
            let var = n0 / denom;
            return Ok(EstimatorReport {
                estimate: est,
                error_cov: Some(DMatrix::identity(mk, mk) * Complex64::from(var)),
                total_mse: var * mk as f64,
            });
        }
    }
    let phi_bar = dense_effective(pilot, rho, m);
    let c_n = noise.covariance(m * tau);
    let cn_inv_phi = chol_solve_mat(&c_n, &phi_bar, "C_n")?;
    let ch_inv = chol_solve_mat(c_h, &DMatrix::identity(mk, mk), "C_h")?;
    let a = phi_bar.adjoint() * &cn_inv_phi + ch_inv;
    let c_eps = chol_solve_mat(&a, &DMatrix::identity(mk, mk), "information matrix")?;
    let yv = DVector::from_column_slice(y);
    let cn_inv_y = chol_solve_vec(&c_n, &yv, "C_n")?;
    let est = &c_eps * (phi_bar.adjoint() * cn_inv_y);
    let total_mse = c_eps.diagonal().iter().map(|z| z.re).sum();
    Ok(EstimatorReport {
        estimate: est.as_slice().to_vec(),
        error_cov: Some(c_eps),
        total_mse,
    })
}

/// Tr{C_eps} of the LMMSE estimator without forming an estimate.
pub fn lmmse_total_mse(
    pilot: &PilotMatrix,
    rho: f64,
    c_h: &DMatrix<Complex64>,
    noise: &NoiseModel,
    m: usize,
) -> Result<f64> {
    let (tau, k) = (pilot.tau(), pilot.k());
    let mk = m * k;
    if rho == 0.0 {
        return Ok(c_h.diagonal().iter().map(|z| z.re).sum());
    }
    if let NoiseModel::White { n0 } = noise {
        if is_identity(c_h) && pilot.is_orthogonal() {
            return Ok(mk as f64 / (1.0 + rho * tau as f64 / n0));
        }
    }
    let phi_bar = dense_effective(pilot, rho, m);
    let c_n = noise.covariance(m * tau);
    let cn_inv_phi = chol_solve_mat(&c_n, &phi_bar, "C_n")?;
    let ch_inv = chol_solve_mat(c_h, &DMatrix::identity(mk, mk), "C_h")?;
    let a = phi_bar.adjoint() * &cn_inv_phi + ch_inv;
    let c_eps = chol_solve_mat(&a, &DMatrix::identity(mk, mk), "information matrix")?;
    Ok(c_eps.diagonal().iter().map(|z| z.re).sum())
}

/// Exact arcsine-law covariance of 1-bit quantized jointly Gaussian signals:
/// with D = diag(C_y)^{-1/2},
/// C_r = (2/pi) [arcsin(D Re(C_y) D) + j arcsin(D Im(C_y) D)] element-wise.
/// The result has unit diagonal and is invariant to positive diagonal
/// rescaling of C_y.
pub fn arcsine_cov_r(c_y: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let n = c_y.nrows();
    if !c_y.is_square() {
        return Err(Error::Dimension("C_y must be square".into()));
    }
    let diag: Vec<f64> = c_y.diagonal().iter().map(|z| z.re).collect();
    if diag.iter().any(|&d| d <= 0.0) {
        return Err(Error::Numerical("C_y has a non-positive diagonal entry".into()));
    }
    let d: Vec<f64> = diag.iter().map(|v| 1.0 / v.sqrt()).collect();
    let mut out = DMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            if r == c {
                // unit by definition; asin is too steep at 1 to round-trip
                out[(r, c)] = Complex64::from(1.0);
                continue;
            }
            let z = c_y[(r, c)] * Complex64::from(d[r] * d[c]);
            // clamp against fp drift just outside [-1, 1]
            out[(r, c)] = Complex64::new(
                z.re.clamp(-1.0, 1.0).asin(),
                z.im.clamp(-1.0, 1.0).asin(),
            ) * Complex64::from(2.0 / PI);
        }
    }
    Ok(out)
}

/// Approximate covariance of a b-bit quantized observation:
/// C_r = (1 - eta) ((1 - eta) C_y + eta diag(C_y)).
pub fn approx_cov_r(c_y: &DMatrix<Complex64>, eta: f64) -> DMatrix<Complex64> {
    let n = c_y.nrows();
    let mut out = c_y * Complex64::from(1.0 - eta);
    for i in 0..n {
        out[(i, i)] += c_y[(i, i)] * Complex64::from(eta);
    }
    out * Complex64::from(1.0 - eta)
}

/// Bussgang-based LMMSE with a caller-supplied residual covariance:
/// h_hat = (1 - eta) C_h Phi_bar^H C_r^-1 r,
/// C_eps = C_h - (1 - eta)^2 C_h Phi_bar^H C_r^-1 Phi_bar C_h.
pub fn blmmse_general(
    r: &[Complex64],
    pilot: &PilotMatrix,
    rho: f64,
    c_h: &DMatrix<Complex64>,
    c_r: &DMatrix<Complex64>,
    eta: f64,
    m: usize,
) -> Result<EstimatorReport> {
    let tau = pilot.tau();
    if r.len() != m * tau {
        return Err(Error::Dimension(format!("r length {} != M*tau = {}", r.len(), m * tau)));
    }
    let gain = 1.0 - eta;
    let phi_bar = dense_effective(pilot, rho, m);
    let rv = DVector::from_column_slice(r);
    let cr_inv_r = chol_solve_vec(c_r, &rv, "C_r")?;
    let est = c_h * (phi_bar.adjoint() * cr_inv_r) * Complex64::from(gain);
    let cr_inv_phi = chol_solve_mat(c_r, &phi_bar, "C_r")?;
    let c_eps =
        c_h - (c_h * phi_bar.adjoint() * cr_inv_phi * c_h) * Complex64::from(gain * gain);
    let total_mse = c_eps.diagonal().iter().map(|z| z.re).sum();
    Ok(EstimatorReport {
        estimate: est.as_slice().to_vec(),
        error_cov: Some(c_eps),
        total_mse,
    })
}

/// Simplified BLMMSE for orthogonal pilots, identity C_h and white noise:
/// h_hat = Phi_bar^H r / (rho tau + N0 + rho eta (K - tau)).
pub fn blmmse_orthogonal(
    r: &[Complex64],
    pilot: &PilotMatrix,
    rho: f64,
    n0: f64,
    eta: f64,
    m: usize,
) -> Result<Vec<Complex64>> {
    if !pilot.is_orthogonal() {
        return Err(Error::Precondition("pilot is not column-orthogonal".into()));
    }
    let (tau, k) = (pilot.tau() as f64, pilot.k() as f64);
    let denom = rho * tau + n0 + rho * eta * (k - tau);
    if denom <= 0.0 {
        return Err(Error::Numerical(format!("BLMMSE denominator {denom} <= 0")));
    }
    Ok(effective_adjoint(pilot, rho, r, m)?.into_iter().map(|z| z / denom).collect())
}

/// Linear weights W for the exact 1-bit BLMMSE on raw sign codes
/// c = sign(Re y) + j sign(Im y), assuming identity C_h and white noise:
/// h_hat = W c with W = (1/sqrt(pi)) Phi_bar^H D A^-1, where
/// A = arcsine covariance of C_y and D = diag(C_y)^{-1/2}.
///
/// This folds the Bussgang cross-covariance of the sign codes
/// (C_hc = sqrt(2/pi) C_hy D sqrt(2), C_c = 2 A) into one matrix so the
/// per-trial cost is a single matrix-vector product.
pub fn one_bit_blmmse_weights(
    pilot: &PilotMatrix,
    rho: f64,
    n0: f64,
    m: usize,
) -> Result<DMatrix<Complex64>> {
    let tau = pilot.tau();
    let n = m * tau;
    let phi_bar = dense_effective(pilot, rho, m);
    let c_y = &phi_bar * phi_bar.adjoint() + DMatrix::identity(n, n) * Complex64::from(n0);
    let a = arcsine_cov_r(&c_y)?;
    let d: Vec<f64> = c_y.diagonal().iter().map(|z| 1.0 / z.re.sqrt()).collect();
    // rows of Phi_bar^H scaled by D on the right
    let mut phd = phi_bar.adjoint();
    for c in 0..n {
        let s = Complex64::from(d[c]);
        phd.column_mut(c).iter_mut().for_each(|z| *z *= s);
    }
    // W = (1/sqrt(pi)) (A^-H (D Phi_bar))^H = (1/sqrt(pi)) Phi_bar^H D A^-1
    let a_inv = chol_solve_mat(&a, &DMatrix::identity(n, n), "arcsine C_r")?;
    Ok(phd * a_inv * Complex64::from(1.0 / PI.sqrt()))
}
