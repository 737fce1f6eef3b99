//! Dense log-determinants and the limiting-law standardizations.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensembles::HermitianMatrix;
use crate::error::{Error, Result};

/// Relative tolerance below which an eigenvalue or pivot counts as zero.
pub const SINGULAR_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Spectral,
    Lu,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogDetResult {
    /// `log|det|`, or `-inf` for a singular matrix.
    pub log_abs: f64,
    /// Sign of a real determinant; `0` iff singular. For LU on complex input
    /// the phase is not tracked and a nonsingular result reports `+1`.
    pub sign: i8,
    pub method: Method,
}

impl LogDetResult {
    fn singular(method: Method) -> Self {
        Self { log_abs: f64::NEG_INFINITY, sign: 0, method }
    }

    pub fn is_singular(&self) -> bool {
        self.sign == 0
    }
}

/// Eigenvalues of a Hermitian matrix (unsorted).
pub fn hermitian_eigenvalues(h: &HermitianMatrix) -> Vec<f64> {
    h.matrix().clone().symmetric_eigenvalues().iter().copied().collect()
}

pub fn logdet_from_spectrum(eigs: &[f64]) -> LogDetResult {
    let scale = eigs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 || eigs.iter().any(|x| x.abs() <= SINGULAR_RTOL * scale) {
        return LogDetResult::singular(Method::Spectral);
    }
    let negatives = eigs.iter().filter(|&&x| x < 0.0).count();
    LogDetResult {
        log_abs: eigs.iter().map(|x| x.abs().ln()).sum(),
        sign: if negatives % 2 == 0 { 1 } else { -1 },
        method: Method::Spectral,
    }
}

/// `log|det H|` from the spectrum; sign is `(-1)^{#negative eigenvalues}`.
pub fn logdet_hermitian(h: &HermitianMatrix) -> LogDetResult {
    logdet_from_spectrum(&hermitian_eigenvalues(h))
}

/// `log|det A|` by LU with partial pivoting.
pub fn logdet_lu(a: &DMatrix<Complex64>) -> Result<LogDetResult> {
    if !a.is_square() {
        return Err(Error::ShapeMismatch(format!("{}x{} is not square", a.nrows(), a.ncols())));
    }
    let real = a.iter().all(|z| z.im == 0.0);
    if real {
        let lu = a.map(|z| z.re).lu();
        let diag: Vec<f64> = lu.u().diagonal().iter().copied().collect();
        let scale = diag.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if scale == 0.0 || diag.iter().any(|x| x.abs() <= SINGULAR_RTOL * scale) {
            return Ok(LogDetResult::singular(Method::Lu));
        }
        let negatives = diag.iter().filter(|&&x| x < 0.0).count();
        let parity: f64 = lu.p().determinant();
        let sign = if negatives % 2 == 0 { 1.0 } else { -1.0 } * parity;
        return Ok(LogDetResult {
            log_abs: diag.iter().map(|x| x.abs().ln()).sum(),
            sign: sign as i8,
            method: Method::Lu,
        });
    }
    let lu = a.clone().lu();
    let diag: Vec<f64> = lu.u().diagonal().iter().map(|z| z.norm()).collect();
    let scale = diag.iter().fold(0.0f64, |m, x| m.max(*x));
    if scale == 0.0 || diag.iter().any(|x| *x <= SINGULAR_RTOL * scale) {
        return Ok(LogDetResult::singular(Method::Lu));
    }
    Ok(LogDetResult { log_abs: diag.iter().map(|x| x.ln()).sum(), sign: 1, method: Method::Lu })
}

/// `log|det(M - sqrt(n) z0)| = (n/2) log n + sum_i log|lambda_i(M/sqrt n) - z0|`.
pub fn logdet_shifted(m: &HermitianMatrix, z0: Complex64) -> f64 {
    if z0.im == 0.0 {
        let sq = (m.n() as f64).sqrt();
        return logdet_hermitian(&m.shifted(-sq * z0.re)).log_abs;
    }
    logdet_shifted_from_spectrum(&hermitian_eigenvalues(m), z0)
}

/// As [`logdet_shifted`], given the eigenvalues of the unnormalized `M`.
pub fn logdet_shifted_from_spectrum(eigs: &[f64], z0: Complex64) -> f64 {
    let n = eigs.len() as f64;
    let sq = n.sqrt();
    if z0.im == 0.0 {
        // Same singularity rule as logdet_hermitian(M - sqrt(n) E).
        let shifted: Vec<f64> = eigs.iter().map(|x| x - sq * z0.re).collect();
        return logdet_from_spectrum(&shifted).log_abs;
    }
    0.5 * n * n.ln() + eigs.iter().map(|&x| (Complex64::new(x / sq, 0.0) - z0).norm().ln()).sum::<f64>()
}

/// `log n! = sum_{k <= n} log k`.
pub fn log_factorial(n: u64) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Which central limit law a log-determinant sample is standardized against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Law {
    Gue,
    Goe,
    IidReal,
    IidComplex,
}

impl Law {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gue" => Ok(Law::Gue),
            "goe" => Ok(Law::Goe),
            "iid-real" => Ok(Law::IidReal),
            "iid-complex" => Ok(Law::IidComplex),
            other => Err(Error::InvalidArgument(format!("unknown law `{other}`"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Law::Gue => "gue",
            Law::Goe => "goe",
            Law::IidReal => "iid-real",
            Law::IidComplex => "iid-complex",
        }
    }

    pub fn center(self, n: u64) -> f64 {
        let ln = (n as f64).ln();
        let half_lf = 0.5 * log_factorial(n);
        match self {
            Law::Gue | Law::Goe | Law::IidComplex => half_lf - 0.25 * ln,
            Law::IidReal => half_lf - 0.5 * ln,
        }
    }

    pub fn scale(self, n: u64) -> f64 {
        let ln = (n as f64).ln();
        match self {
            Law::Gue | Law::IidReal => (0.5 * ln).sqrt(),
            Law::Goe => ln.sqrt(),
            Law::IidComplex => (0.25 * ln).sqrt(),
        }
    }
}

/// `(L - center(n)) / scale(n)`.
pub fn standardize_logdet(log_abs: f64, n: u64, law: Law) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument("standardization needs n >= 2".into()));
    }
    Ok((log_abs - law.center(n)) / law.scale(n))
}

/// Standardizes many samples with one evaluation of the centering.
pub fn standardize_all(samples: &[f64], n: u64, law: Law) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidArgument("standardization needs n >= 2".into()));
    }
    let (c, s) = (law.center(n), law.scale(n));
    Ok(samples.iter().map(|x| (x - c) / s).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{make_ensemble, sample_hermitian, EnsembleKind};
    use crate::tridiag::householder_tridiagonalize;

    fn diag(d: &[f64]) -> HermitianMatrix {
        HermitianMatrix::from_real(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d))).unwrap()
    }

    #[test]
    fn small_hermitian_cases() {
        let r = logdet_hermitian(&diag(&[1.0, 1.0, 1.0]));
        assert!(r.log_abs.abs() < 1e-15 && r.sign == 1);
        let r = logdet_hermitian(&diag(&[2.0, -3.0]));
        assert!((r.log_abs - 6f64.ln()).abs() < 1e-14 && r.sign == -1);
        let r = logdet_hermitian(&diag(&[2.0, 0.0]));
        assert_eq!((r.log_abs, r.sign), (f64::NEG_INFINITY, 0));
    }

    #[test]
    fn lu_matches_spectral_and_handles_signs() {
        let h = sample_hermitian(&make_ensemble(EnsembleKind::Goe), 12, 4).unwrap();
        let s = logdet_hermitian(&h);
        let l = logdet_lu(h.matrix()).unwrap();
        assert!((s.log_abs - l.log_abs).abs() < 1e-10);
        assert_eq!(s.sign, l.sign);
        let z = DMatrix::<Complex64>::zeros(3, 3);
        assert!(logdet_lu(&z).unwrap().is_singular());
    }

    #[test]
    fn spectral_agrees_with_householder_route() {
        let h = sample_hermitian(&make_ensemble(EnsembleKind::Gue), 64, 8).unwrap();
        let (l, s) = householder_tridiagonalize(&h).logdet();
        let r = logdet_hermitian(&h);
        assert!((l - r.log_abs).abs() < 1e-8);
        assert_eq!(s, r.sign);
    }

    #[test]
    fn shifted_special_cases() {
        let zero = diag(&[0.0]);
        assert!(logdet_shifted(&zero, Complex64::new(0.0, 1.0)).abs() < 1e-15);

        let h = sample_hermitian(&make_ensemble(EnsembleKind::Gue), 10, 2).unwrap();
        let e = 0.37;
        let direct = logdet_hermitian(&h.shifted(-(10f64).sqrt() * e)).log_abs;
        assert_eq!(logdet_shifted(&h, Complex64::new(e, 0.0)), direct);
        let eigs = hermitian_eigenvalues(&h);
        assert!((logdet_shifted_from_spectrum(&eigs, Complex64::new(e, 0.0)) - direct).abs() < 1e-10);
    }

    #[test]
    fn shifted_matches_complex_lu() {
        let n = 16;
        let h = sample_hermitian(&make_ensemble(EnsembleKind::Gue), n, 6).unwrap();
        let z0 = Complex64::new(0.3, 0.1);
        let mut m = h.matrix().clone();
        for i in 0..n {
            m[(i, i)] -= z0 * (n as f64).sqrt();
        }
        let lu = logdet_lu(&m).unwrap().log_abs;
        assert!((logdet_shifted(&h, z0) - lu).abs() < 1e-10);
    }

    #[test]
    fn log_factorial_values() {
        assert_eq!(log_factorial(0), 0.0);
        assert_eq!(log_factorial(1), 0.0);
        assert!((log_factorial(5) - 120f64.ln()).abs() < 1e-14);
        // Stirling series with four correction terms.
        let n = 1.0e6f64;
        let stirling = n * n.ln() - n + 0.5 * (2.0 * std::f64::consts::PI * n).ln() + 1.0 / (12.0 * n)
            - 1.0 / (360.0 * n.powi(3));
        assert!(((log_factorial(1_000_000) - stirling) / stirling).abs() < 1e-9);
    }

    #[test]
    fn standardization_is_affine() {
        for law in [Law::Gue, Law::Goe, Law::IidReal, Law::IidComplex] {
            for n in [2u64, 10, 4096] {
                assert!(standardize_logdet(law.center(n), n, law).unwrap().abs() < 1e-12);
                let z1 = standardize_logdet(law.center(n) + 1.0, n, law).unwrap();
                assert!((z1 - 1.0 / law.scale(n)).abs() < 1e-12);
                assert!(law.scale(n) > 0.0);
            }
        }
        assert!(standardize_logdet(0.0, 1, Law::Gue).is_err());
    }

    #[test]
    fn gue_scale_is_one_at_e_squared() {
        // scale(n) = sqrt(log(n)/2) = 1 exactly when log n = 2.
        let s = (0.5f64 * 2.0).sqrt();
        assert_eq!(s, 1.0);
        assert!((Law::Gue.scale(7) - (0.5 * 7f64.ln()).sqrt()).abs() < 1e-15);
    }
}
