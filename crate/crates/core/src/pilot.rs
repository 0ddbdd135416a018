//! Pilot matrix construction, power constraints, and real embeddings.
//!
//! The effective training map is Phi_bar = sqrt(rho) * Phi (x) I_M; it is
//! never materialized. [`effective_apply`] and [`effective_adjoint`] run the
//! structured multiply in O(tau * M * K).

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::TAU;
use std::io::{BufRead, Write};
use std::path::Path;

const POWER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct PilotMatrix {
    /// tau x K complex pilot.
    pub phi: DMatrix<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerConstraint {
    /// Per-column (per-user) limit: [Phi]_i^H [Phi]_i <= tau.
    PerColumn,
    /// Sum-power limit: Tr{Phi^H Phi} <= tau * K.
    SumPower,
}

/// Real views of a complex pilot.
#[derive(Debug, Clone, PartialEq)]
pub struct RealEmbedding {
    /// 2 tau x K stacking [Re(Phi); Im(Phi)].
    pub phi_re: DMatrix<f64>,
    /// 2 tau x 2K block operator [[Re, -Im], [Im, Re]].
    pub phi_reim: DMatrix<f64>,
}

impl PilotMatrix {
    pub fn new(phi: DMatrix<Complex64>) -> Result<Self> {
        if phi.nrows() == 0 || phi.ncols() == 0 {
            return Err(Error::Dimension("pilot must have tau >= 1, K >= 1".into()));
        }
        if phi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("pilot entries must be finite".into()));
        }
        Ok(Self { phi })
    }

    pub fn tau(&self) -> usize {
        self.phi.nrows()
    }

    pub fn k(&self) -> usize {
        self.phi.ncols()
    }

    /// True iff Phi^H Phi = tau I_K within 1e-9 relative.
    pub fn is_orthogonal(&self) -> bool {
        let tau = self.tau() as f64;
        let g = self.phi.adjoint() * &self.phi;
        for i in 0..self.k() {
            for j in 0..self.k() {
                let expect = if i == j { tau } else { 0.0 };
                if (g[(i, j)] - Complex64::from(expect)).norm() > 1e-9 * tau {
                    return false;
                }
            }
        }
        true
    }
}

/// Pilot whose columns are the selected columns of a tau x tau DFT matrix,
/// entry (m, n) = e^{-j 2 pi m n / tau}, unit amplitude.
pub fn dft_pilot(tau: usize, column_indices: &[usize]) -> Result<PilotMatrix> {
    if tau == 0 || column_indices.is_empty() {
        return Err(Error::Dimension("dft pilot needs tau >= 1 and at least one column".into()));
    }
    let mut seen = vec![false; tau];
    for &c in column_indices {
        if c >= tau {
            return Err(Error::InvalidSelection(format!("column {c} out of range [0, {tau})")));
        }
        if seen[c] {
            return Err(Error::InvalidSelection(format!("column {c} selected twice")));
        }
        seen[c] = true;
    }
    let phi = DMatrix::from_fn(tau, column_indices.len(), |m, i| {
        let n = column_indices[i];
        Complex64::from_polar(1.0, -TAU * (m * n) as f64 / tau as f64)
    });
    PilotMatrix::new(phi)
}

/// Check a power constraint within 1e-9 relative tolerance.
pub fn validate_power(pilot: &PilotMatrix, constraint: PowerConstraint) -> bool {
    let tau = pilot.tau() as f64;
    match constraint {
        PowerConstraint::PerColumn => (0..pilot.k())
            .all(|i| pilot.phi.column(i).norm_squared() <= tau * (1.0 + POWER_TOL)),
        PowerConstraint::SumPower => {
            let limit = tau * pilot.k() as f64;
            pilot.phi.norm_squared() <= limit * (1.0 + POWER_TOL)
        }
    }
}

/// Euclidean projection onto the power constraint: rescale to the boundary
/// only where the limit is exceeded. Idempotent.
pub fn project_power(pilot: &PilotMatrix, constraint: PowerConstraint) -> PilotMatrix {
    let tau = pilot.tau() as f64;
    let mut phi = pilot.phi.clone();
    match constraint {
        PowerConstraint::PerColumn => {
            for i in 0..phi.ncols() {
                let n2 = phi.column(i).norm_squared();
                if n2 > tau * (1.0 + POWER_TOL) {
                    let s = Complex64::from((tau / n2).sqrt());
                    phi.column_mut(i).iter_mut().for_each(|z| *z *= s);
                }
            }
        }
        PowerConstraint::SumPower => {
            let limit = tau * phi.ncols() as f64;
            let n2 = phi.norm_squared();
            if n2 > limit * (1.0 + POWER_TOL) {
                phi *= Complex64::from((limit / n2).sqrt());
            }
        }
    }
    PilotMatrix { phi }
}

/// Both real views of the pilot.
pub fn real_embedding(pilot: &PilotMatrix) -> RealEmbedding {
    let (tau, k) = (pilot.tau(), pilot.k());
    let phi_re = DMatrix::from_fn(2 * tau, k, |r, c| {
        if r < tau {
            pilot.phi[(r, c)].re
        } else {
            pilot.phi[(r - tau, c)].im
        }
    });
    RealEmbedding { phi_reim: reim_from_stacked(&phi_re), phi_re }
}

/// Build the 2 tau x 2K operator [[Re, -Im], [Im, Re]] from the stacked
/// [Re; Im] parameterization.
pub fn reim_from_stacked(phi_re: &DMatrix<f64>) -> DMatrix<f64> {
    let tau = phi_re.nrows() / 2;
    let k = phi_re.ncols();
    DMatrix::from_fn(2 * tau, 2 * k, |r, c| {
        let re = |t: usize, u: usize| phi_re[(t, u)];
        let im = |t: usize, u: usize| phi_re[(tau + t, u)];
        match (r < tau, c < k) {
            (true, true) => re(r, c),
            (true, false) => -im(r, c - k),
            (false, true) => im(r - tau, c),
            (false, false) => re(r - tau, c - k),
        }
    })
}

/// Reassemble the complex pilot from its stacked [Re; Im] parameterization.
pub fn pilot_from_stacked(phi_re: &DMatrix<f64>) -> Result<PilotMatrix> {
    if phi_re.nrows() % 2 != 0 {
        return Err(Error::Dimension("stacked pilot must have an even row count".into()));
    }
    let tau = phi_re.nrows() / 2;
    let phi = DMatrix::from_fn(tau, phi_re.ncols(), |r, c| {
        Complex64::new(phi_re[(r, c)], phi_re[(tau + r, c)])
    });
    PilotMatrix::new(phi)
}

/// (sqrt(rho) Phi (x) I_M) h without materializing the Kronecker product.
///
/// `h` has length M*K (column-major vec of the M x K channel); the result has
/// length tau*M.
pub fn effective_apply(
    pilot: &PilotMatrix,
    rho: f64,
    h: &[Complex64],
    m: usize,
) -> Result<Vec<Complex64>> {
    let (tau, k) = (pilot.tau(), pilot.k());
    if h.len() != m * k {
        return Err(Error::Dimension(format!("h length {} != M*K = {}", h.len(), m * k)));
    }
    if rho < 0.0 {
        return Err(Error::Precondition(format!("rho = {rho} must be >= 0")));
    }
    let s = rho.sqrt();
    let mut y = vec![Complex64::ZERO; tau * m];
    for t in 0..tau {
        for kk in 0..k {
            let w = pilot.phi[(t, kk)] * s;
            let hcol = &h[kk * m..(kk + 1) * m];
            let ycol = &mut y[t * m..(t + 1) * m];
            for (yo, hi) in ycol.iter_mut().zip(hcol) {
                *yo += w * hi;
            }
        }
    }
    Ok(y)
}

/// Adjoint map Phi_bar^H r = (sqrt(rho) Phi^H (x) I_M) r; input length tau*M,
/// output length M*K.
pub fn effective_adjoint(
    pilot: &PilotMatrix,
    rho: f64,
    r: &[Complex64],
    m: usize,
) -> Result<Vec<Complex64>> {
    let (tau, k) = (pilot.tau(), pilot.k());
    if r.len() != m * tau {
        return Err(Error::Dimension(format!("r length {} != M*tau = {}", r.len(), m * tau)));
    }
    let s = rho.sqrt();
    let mut out = vec![Complex64::ZERO; m * k];
    for kk in 0..k {
        for t in 0..tau {
            let w = pilot.phi[(t, kk)].conj() * s;
            let rcol = &r[t * m..(t + 1) * m];
            let ocol = &mut out[kk * m..(kk + 1) * m];
            for (oo, ri) in ocol.iter_mut().zip(rcol) {
                *oo += w * ri;
            }
        }
    }
    Ok(out)
}

/// Dense Mtau x MK matrix sqrt(rho) Phi (x) I_M. Used by the general LMMSE /
/// BLMMSE paths and as an oracle for the structured multiplies.
pub fn dense_effective(pilot: &PilotMatrix, rho: f64, m: usize) -> DMatrix<Complex64> {
    let (tau, k) = (pilot.tau(), pilot.k());
    let s = rho.sqrt();
    DMatrix::from_fn(tau * m, k * m, |r, c| {
        let (t, mr) = (r / m, r % m);
        let (kk, mc) = (c / m, c % m);
        if mr == mc {
            pilot.phi[(t, kk)] * s
        } else {
            Complex64::ZERO
        }
    })
}

/// Export as CSV with columns (row, col, re, im); rows in column-major order.
pub fn export_csv(pilot: &PilotMatrix, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "row,col,re,im")?;
    for c in 0..pilot.k() {
        for r in 0..pilot.tau() {
            let z = pilot.phi[(r, c)];
            writeln!(f, "{r},{c},{:e},{:e}", z.re, z.im)?;
        }
    }
    Ok(())
}

/// Import a pilot previously written by [`export_csv`].
pub fn import_csv(path: &Path) -> Result<PilotMatrix> {
    let f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut entries = Vec::new();
    let (mut tau, mut k) = (0usize, 0usize);
    for (i, line) in f.lines().enumerate() {
        let line = line?;
        if i == 0 {
            if line.trim() != "row,col,re,im" {
                return Err(Error::Config(format!("unexpected pilot CSV header: {line}")));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 4 {
            return Err(Error::Config(format!("bad pilot CSV line: {line}")));
        }
        let parse = |s: &str| -> Result<f64> {
            s.trim().parse().map_err(|e| Error::Config(format!("bad number {s}: {e}")))
        };
        let r: usize =
            parts[0].trim().parse().map_err(|e| Error::Config(format!("bad row: {e}")))?;
        let c: usize =
            parts[1].trim().parse().map_err(|e| Error::Config(format!("bad col: {e}")))?;
        tau = tau.max(r + 1);
        k = k.max(c + 1);
        entries.push((r, c, Complex64::new(parse(parts[2])?, parse(parts[3])?)));
    }
    let mut phi = DMatrix::zeros(tau, k);
    for (r, c, z) in entries {
        phi[(r, c)] = z;
    }
    PilotMatrix::new(phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{real_stack, sample_rayleigh};
    use crate::rng::stream;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn random_pilot(tau: usize, k: usize, seed: u64) -> PilotMatrix {
        let mut rng = stream(seed, "pilot", 0);
        PilotMatrix::new(sample_rayleigh(tau, k, &mut rng).unwrap()).unwrap()
    }

    #[test]
    fn dft_orthogonality() {
        let p = dft_pilot(4, &[0, 2]).unwrap();
        let g = p.phi.adjoint() * &p.phi;
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 4.0 } else { 0.0 };
                assert_relative_eq!(g[(i, j)].re, expect, epsilon = 1e-12);
                assert_relative_eq!(g[(i, j)].im, 0.0, epsilon = 1e-12);
            }
        }
        assert!(p.is_orthogonal());
    }

    #[test]
    fn dft_tau2_values() {
        let p = dft_pilot(2, &[0, 1]).unwrap();
        let expect = [[1.0, 1.0], [1.0, -1.0]];
        for r in 0..2 {
            for c in 0..2 {
                assert_relative_eq!(p.phi[(r, c)].re, expect[r][c], epsilon = 1e-12);
                assert_relative_eq!(p.phi[(r, c)].im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn dft_invalid_selection() {
        assert!(matches!(dft_pilot(4, &[1, 1]), Err(Error::InvalidSelection(_))));
        assert!(matches!(dft_pilot(4, &[0, 4]), Err(Error::InvalidSelection(_))));
    }

    #[test]
    fn power_validation() {
        let p = dft_pilot(4, &[0, 1]).unwrap();
        assert!(validate_power(&p, PowerConstraint::PerColumn));
        assert!(validate_power(&p, PowerConstraint::SumPower));
        let scaled = PilotMatrix::new(&p.phi * Complex64::from(2.0)).unwrap();
        assert!(!validate_power(&scaled, PowerConstraint::PerColumn));
        assert!(!validate_power(&scaled, PowerConstraint::SumPower));
    }

    #[test]
    fn projection_scales_to_boundary() {
        let tau = 4usize;
        let p = dft_pilot(tau, &[0, 1]).unwrap();
        let scaled = PilotMatrix::new(&p.phi * Complex64::from(2.0)).unwrap();
        let proj = project_power(&scaled, PowerConstraint::PerColumn);
        for i in 0..2 {
            assert_relative_eq!(proj.phi.column(i).norm_squared(), tau as f64, epsilon = 1e-9);
        }
        // idempotence
        assert_eq!(project_power(&proj, PowerConstraint::PerColumn), proj);
        // feasible pilot untouched
        assert_eq!(project_power(&p, PowerConstraint::PerColumn), p);

        let proj = project_power(&scaled, PowerConstraint::SumPower);
        assert_relative_eq!(proj.phi.norm_squared(), (tau * 2) as f64, epsilon = 1e-9);
    }

    #[test]
    fn projection_output_is_feasible() {
        let p = random_pilot(5, 3, 42);
        let big = PilotMatrix::new(&p.phi * Complex64::from(10.0)).unwrap();
        for c in [PowerConstraint::PerColumn, PowerConstraint::SumPower] {
            let proj = project_power(&big, c);
            assert!(validate_power(&proj, c));
            assert_eq!(project_power(&proj, c), proj);
        }
    }

    #[test]
    fn embedding_unit_cases() {
        let p = PilotMatrix::new(DMatrix::from_element(1, 1, Complex64::new(0.0, 1.0))).unwrap();
        let e = real_embedding(&p);
        assert_eq!(e.phi_reim, DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]));
        let p = PilotMatrix::new(DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0))).unwrap();
        assert_eq!(real_embedding(&p).phi_reim, DMatrix::identity(2, 2));
    }

    #[test]
    fn embedding_matches_complex_multiply() {
        for seed in 0..20 {
            let p = random_pilot(4, 3, seed);
            let e = real_embedding(&p);
            let mut rng = stream(seed, "x", 1);
            let x = sample_rayleigh(3, 1, &mut rng).unwrap();
            let xs = nalgebra::DVector::from_vec(real_stack(x.as_slice()));
            let got = &e.phi_reim * xs;
            let want = real_stack((&p.phi * &x).as_slice());
            for (g, w) in got.iter().zip(want.iter()) {
                assert_relative_eq!(g, w, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn stacked_round_trip() {
        let p = random_pilot(3, 2, 7);
        let e = real_embedding(&p);
        assert_eq!(pilot_from_stacked(&e.phi_re).unwrap(), p);
        assert_eq!(reim_from_stacked(&e.phi_re), e.phi_reim);
    }

    #[test]
    fn effective_apply_identity_pilot() {
        let k = 3;
        let p = PilotMatrix::new(DMatrix::identity(k, k)).unwrap();
        let mut rng = stream(1, "h", 0);
        let h: Vec<Complex64> = sample_rayleigh(2, k, &mut rng).unwrap().as_slice().to_vec();
        let y = effective_apply(&p, 4.0, &h, 2).unwrap();
        for (yi, hi) in y.iter().zip(h.iter()) {
            assert_relative_eq!((yi - hi * Complex64::from(2.0)).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn effective_apply_m1_is_plain_multiply() {
        let p = random_pilot(4, 2, 3);
        let mut rng = stream(2, "h", 0);
        let h = sample_rayleigh(2, 1, &mut rng).unwrap();
        let hv: Vec<Complex64> = h.as_slice().to_vec();
        let rho = 2.5;
        let y = effective_apply(&p, rho, &hv, 1).unwrap();
        let want = &p.phi * &h * Complex64::from(rho.sqrt());
        for (a, b) in y.iter().zip(want.iter()) {
            assert_relative_eq!((a - b).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn effective_apply_matches_dense_kronecker() {
        let p = random_pilot(3, 2, 9);
        let (m, rho) = (2usize, 1.7);
        let mut rng = stream(4, "h", 0);
        let h: Vec<Complex64> = sample_rayleigh(m, 2, &mut rng).unwrap().as_slice().to_vec();
        let dense = dense_effective(&p, rho, m);
        let hv = nalgebra::DVector::from_vec(h.clone());
        let want = &dense * &hv;
        let got = effective_apply(&p, rho, &h, m).unwrap();
        for (a, b) in got.iter().zip(want.iter()) {
            assert_relative_eq!((a - b).norm(), 0.0, epsilon = 1e-12);
        }
        // adjoint against dense as well
        let r: Vec<Complex64> = sample_rayleigh(p.tau() * m, 1, &mut rng).unwrap().as_slice().to_vec();
        let rv = nalgebra::DVector::from_vec(r.clone());
        let want = dense.adjoint() * &rv;
        let got = effective_adjoint(&p, rho, &r, m).unwrap();
        for (a, b) in got.iter().zip(want.iter()) {
            assert_relative_eq!((a - b).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn dft_apply_then_adjoint_is_rho_tau_scaling() {
        let p = dft_pilot(8, &[0, 3, 5]).unwrap();
        let (m, rho) = (2usize, 0.9);
        let mut rng = stream(5, "h", 0);
        let h: Vec<Complex64> = sample_rayleigh(m, 3, &mut rng).unwrap().as_slice().to_vec();
        let y = effective_apply(&p, rho, &h, m).unwrap();
        let back = effective_adjoint(&p, rho, &y, m).unwrap();
        let scale = rho * p.tau() as f64;
        for (b, hi) in back.iter().zip(h.iter()) {
            assert!((b - hi * Complex64::from(scale)).norm() <= 1e-9 * scale);
        }
    }

    #[test]
    fn effective_apply_length_mismatch() {
        let p = dft_pilot(4, &[0, 1]).unwrap();
        let h = vec![Complex64::ZERO; 3];
        assert!(matches!(effective_apply(&p, 1.0, &h, 2), Err(Error::Dimension(_))));
    }

    #[test]
    fn csv_round_trip() {
        let p = random_pilot(4, 3, 21);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pilot.csv");
        export_csv(&p, &path).unwrap();
        let q = import_csv(&path).unwrap();
        assert_eq!(p, q);
    }

    proptest! {
        #[test]
        fn prop_embedding_equivalence(seed in 0u64..500, tau in 1usize..6, k in 1usize..5) {
            let p = random_pilot(tau, k, seed);
            let e = real_embedding(&p);
            let mut rng = stream(seed, "px", 2);
            let x = sample_rayleigh(k, 1, &mut rng).unwrap();
            let xs = nalgebra::DVector::from_vec(real_stack(x.as_slice()));
            let got = &e.phi_reim * xs;
            let want = real_stack((&p.phi * &x).as_slice());
            for (g, w) in got.iter().zip(want.iter()) {
                prop_assert!((g - w).abs() < 1e-12);
            }
        }

        #[test]
        fn prop_project_then_validate(seed in 0u64..200, scale in 0.1f64..5.0) {
            let p = random_pilot(4, 3, seed);
            let scaled = PilotMatrix::new(&p.phi * Complex64::from(scale)).unwrap();
            for c in [PowerConstraint::PerColumn, PowerConstraint::SumPower] {
                let proj = project_power(&scaled, c);
                prop_assert!(validate_power(&proj, c));
                prop_assert_eq!(project_power(&proj, c), proj);
            }
        }
    }
}
