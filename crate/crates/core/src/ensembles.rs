//! Atom distributions and matrix ensembles.
//!
//! A Wigner Hermitian matrix has independent upper-triangular entries: the
//! off-diagonal ones drawn from a [`ComplexAtom`] of unit total variance and
//! the diagonal ones from a real [`AtomDistribution`] of variance `sigma2`.
//! The iid-square family draws every entry (diagonal included) from the
//! off-diagonal atom.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

const MOMENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AtomKind {
    GaussianReal { variance: f64 },
    DiscreteReal { points: Vec<f64>, probs: Vec<f64> },
}

/// A centered real law with its first four raw moments precomputed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomDistribution {
    kind: AtomKind,
    moments: [f64; 4],
}

impl AtomDistribution {
    pub fn gaussian(variance: f64) -> Result<Self> {
        if !(variance.is_finite() && variance >= 0.0) {
            return Err(Error::InvalidDistribution(format!("gaussian variance {variance}")));
        }
        Ok(Self {
            kind: AtomKind::GaussianReal { variance },
            moments: [0.0, variance, 0.0, 3.0 * variance * variance],
        })
    }

    pub fn discrete(points: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != probs.len() {
            return Err(Error::InvalidDistribution(
                "points and probs must be non-empty and of equal length".into(),
            ));
        }
        if probs.iter().any(|&p| !(p >= 0.0)) || points.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidDistribution("negative probability or non-finite point".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MOMENT_TOL {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {total}")));
        }
        let mut moments = [0.0; 4];
        for (k, m) in moments.iter_mut().enumerate() {
            *m = points.iter().zip(&probs).map(|(x, p)| p * x.powi(k as i32 + 1)).sum();
        }
        if moments[0].abs() > MOMENT_TOL {
            return Err(Error::InvalidDistribution(format!("mean {} is not zero", moments[0])));
        }
        Ok(Self { kind: AtomKind::DiscreteReal { points, probs }, moments })
    }

    /// Point mass at zero; used for the imaginary part of real entries.
    pub fn zero() -> Self {
        Self::discrete(vec![0.0], vec![1.0]).expect("point mass is valid")
    }

    /// Symmetric two-point law `±s`.
    pub fn rademacher(s: f64) -> Self {
        Self::discrete(vec![-s, s], vec![0.5, 0.5]).expect("two-point law is valid")
    }

    /// Symmetric three-point law on `{-s, 0, s}` with second moment `m2` and
    /// fourth moment `m4`. Requires `m4 >= m2^2`.
    pub fn three_point(m2: f64, m4: f64) -> Result<Self> {
        if !(m2 > 0.0 && m4 >= m2 * m2) {
            return Err(Error::InvalidDistribution(format!(
                "no symmetric three-point law with m2 = {m2}, m4 = {m4}"
            )));
        }
        // 2p s^2 = m2 and 2p s^4 = m4.
        let s2 = m4 / m2;
        let p = m2 / (2.0 * s2);
        let s = s2.sqrt();
        Self::discrete(vec![-s, 0.0, s], vec![p, 1.0 - 2.0 * p, p])
    }

    pub fn kind(&self) -> &AtomKind {
        &self.kind
    }

    /// Raw moments `E X^1 .. E X^4`.
    pub fn moments(&self) -> [f64; 4] {
        self.moments
    }

    /// `E X^k` for `0 <= k <= 4`.
    pub fn moment(&self, k: usize) -> f64 {
        match k {
            0 => 1.0,
            1..=4 => self.moments[k - 1],
            _ => panic!("moments are tabulated up to order 4"),
        }
    }

    pub fn variance(&self) -> f64 {
        self.moments[1] - self.moments[0] * self.moments[0]
    }

    pub fn is_degenerate_zero(&self) -> bool {
        matches!(&self.kind, AtomKind::DiscreteReal { points, .. } if points.iter().all(|&x| x == 0.0))
            || matches!(self.kind, AtomKind::GaussianReal { variance } if variance == 0.0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            AtomKind::GaussianReal { variance } => {
                let z: f64 = rng.sample(StandardNormal);
                variance.sqrt() * z
            }
            AtomKind::DiscreteReal { points, probs } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (x, p) in points.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *x;
                    }
                }
                *points.last().expect("non-empty support")
            }
        }
    }
}

/// Complex atom with independent real and imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexAtom {
    pub re: AtomDistribution,
    pub im: AtomDistribution,
}

impl ComplexAtom {
    pub fn new(re: AtomDistribution, im: AtomDistribution) -> Self {
        Self { re, im }
    }

    pub fn real(re: AtomDistribution) -> Self {
        Self { re, im: AtomDistribution::zero() }
    }

    pub fn total_variance(&self) -> f64 {
        self.re.variance() + self.im.variance()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_degenerate_zero()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        let re = self.re.sample(rng);
        let im = if self.is_real() { 0.0 } else { self.im.sample(rng) };
        Complex64::new(re, im)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    WignerHermitian,
    IidSquare,
}

/// Catalog of named ensembles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleKind {
    Gue,
    Goe,
    BernoulliComplex,
    BernoulliSymmetric,
    IidGaussianReal,
    IidGaussianComplex,
    GueMatchedThreepoint,
    GoeMatchedThreepoint,
}

impl EnsembleKind {
    pub const ALL: [EnsembleKind; 8] = [
        EnsembleKind::Gue,
        EnsembleKind::Goe,
        EnsembleKind::BernoulliComplex,
        EnsembleKind::BernoulliSymmetric,
        EnsembleKind::IidGaussianReal,
        EnsembleKind::IidGaussianComplex,
        EnsembleKind::GueMatchedThreepoint,
        EnsembleKind::GoeMatchedThreepoint,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EnsembleKind::Gue => "gue",
            EnsembleKind::Goe => "goe",
            EnsembleKind::BernoulliComplex => "bernoulli-complex",
            EnsembleKind::BernoulliSymmetric => "bernoulli-symmetric",
            EnsembleKind::IidGaussianReal => "iid-gaussian-real",
            EnsembleKind::IidGaussianComplex => "iid-gaussian-complex",
            EnsembleKind::GueMatchedThreepoint => "gue-matched-threepoint",
            EnsembleKind::GoeMatchedThreepoint => "goe-matched-threepoint",
        }
    }

    pub fn catalog_names() -> Vec<&'static str> {
        Self::ALL.iter().map(|k| k.as_str()).collect()
    }
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnsembleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::UnknownEnsemble(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub family: Family,
    pub offdiag: ComplexAtom,
    pub diag: AtomDistribution,
    pub sigma2: f64,
    pub label: String,
}

impl EnsembleSpec {
    /// Checks the unit off-diagonal variance and `var(diag) = sigma2`.
    pub fn validate(&self) -> Result<()> {
        let v = self.offdiag.total_variance();
        if (v - 1.0).abs() > MOMENT_TOL {
            return Err(Error::InvalidDistribution(format!("off-diagonal variance {v} != 1")));
        }
        let d = self.diag.variance();
        if (d - self.sigma2).abs() > MOMENT_TOL {
            return Err(Error::InvalidDistribution(format!("diagonal variance {d} != sigma2 {}", self.sigma2)));
        }
        Ok(())
    }

    pub fn is_real(&self) -> bool {
        self.offdiag.is_real()
    }
}

pub fn make_ensemble(kind: EnsembleKind) -> EnsembleSpec {
    let g = |v: f64| AtomDistribution::gaussian(v).expect("catalog variance is valid");
    let (family, offdiag, diag, sigma2) = match kind {
        EnsembleKind::Gue => (Family::WignerHermitian, ComplexAtom::new(g(0.5), g(0.5)), g(1.0), 1.0),
        EnsembleKind::Goe => (Family::WignerHermitian, ComplexAtom::real(g(1.0)), g(2.0), 2.0),
        EnsembleKind::BernoulliComplex => {
            let s = 0.5f64.sqrt();
            (
                Family::WignerHermitian,
                ComplexAtom::new(AtomDistribution::rademacher(s), AtomDistribution::rademacher(s)),
                AtomDistribution::rademacher(1.0),
                1.0,
            )
        }
        EnsembleKind::BernoulliSymmetric => (
            Family::WignerHermitian,
            ComplexAtom::real(AtomDistribution::rademacher(1.0)),
            AtomDistribution::rademacher(1.0),
            1.0,
        ),
        EnsembleKind::IidGaussianReal => (Family::IidSquare, ComplexAtom::real(g(1.0)), g(1.0), 1.0),
        EnsembleKind::IidGaussianComplex => (Family::IidSquare, ComplexAtom::new(g(0.5), g(0.5)), g(1.0), 1.0),
        EnsembleKind::GueMatchedThreepoint => {
            let part = AtomDistribution::three_point(0.5, 0.75).expect("matched law exists");
            (Family::WignerHermitian, ComplexAtom::new(part.clone(), part), AtomDistribution::rademacher(1.0), 1.0)
        }
        EnsembleKind::GoeMatchedThreepoint => {
            let part = AtomDistribution::three_point(1.0, 3.0).expect("matched law exists");
            (Family::WignerHermitian, ComplexAtom::real(part), AtomDistribution::rademacher(2f64.sqrt()), 2.0)
        }
    };
    EnsembleSpec { family, offdiag, diag, sigma2, label: kind.as_str().to_string() }
}

/// Looks up a catalog ensemble by name.
pub fn ensemble_by_name(name: &str) -> Result<EnsembleSpec> {
    Ok(make_ensemble(name.parse()?))
}

/// Dense Hermitian matrix. The constructor enforces Hermitian symmetry.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(DMatrix<Complex64>);

impl HermitianMatrix {
    pub const SYMMETRY_TOL: f64 = 1e-14;

    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::ShapeMismatch(format!("{}x{} is not square", m.nrows(), m.ncols())));
        }
        let n = m.nrows();
        let scale = m.iter().map(|z| z.norm()).fold(1.0f64, f64::max);
        for i in 0..n {
            if m[(i, i)].im.abs() > Self::SYMMETRY_TOL * scale {
                return Err(Error::InvalidArgument(format!("diagonal entry {i} is not real")));
            }
            for j in (i + 1)..n {
                if (m[(i, j)] - m[(j, i)].conj()).norm() > Self::SYMMETRY_TOL * scale {
                    return Err(Error::InvalidArgument(format!("entry ({i},{j}) breaks Hermitian symmetry")));
                }
            }
        }
        Ok(Self(m))
    }

    pub fn from_real(m: DMatrix<f64>) -> Result<Self> {
        Self::new(m.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<Complex64> {
        self.0
    }

    /// `M + shift * I` (shift real).
    pub fn shifted(&self, shift: f64) -> Self {
        let mut m = self.0.clone();
        for i in 0..self.n() {
            m[(i, i)] += shift;
        }
        Self(m)
    }

    /// `M / sqrt(n)`.
    pub fn normalized(&self) -> Self {
        let s = 1.0 / (self.n() as f64).sqrt();
        Self(self.0.map(|z| z * s))
    }

    pub fn is_real(&self) -> bool {
        self.0.iter().all(|z| z.im == 0.0)
    }
}

/// Output of [`sample_matrix`].
#[derive(Debug, Clone, PartialEq)]
pub enum RandomMatrix {
    Hermitian(HermitianMatrix),
    General(DMatrix<Complex64>),
}

impl RandomMatrix {
    pub fn as_dense(&self) -> &DMatrix<Complex64> {
        match self {
            RandomMatrix::Hermitian(h) => h.matrix(),
            RandomMatrix::General(m) => m,
        }
    }

    pub fn into_hermitian(self) -> Option<HermitianMatrix> {
        match self {
            RandomMatrix::Hermitian(h) => Some(h),
            RandomMatrix::General(_) => None,
        }
    }
}

/// Samples an `n x n` matrix. Entry `(i, j)` depends only on `(spec, seed, i, j)`.
pub fn sample_matrix(spec: &EnsembleSpec, n: usize, seed: u64) -> Result<RandomMatrix> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    match spec.family {
        Family::WignerHermitian => {
            for i in 0..n {
                let mut rng = seed::row_rng(seed, i);
                seed::seek_entry(&mut rng, i);
                m[(i, i)] = Complex64::new(spec.diag.sample(&mut rng), 0.0);
                for j in (i + 1)..n {
                    seed::seek_entry(&mut rng, j);
                    let z = spec.offdiag.sample(&mut rng);
                    m[(i, j)] = z;
                    m[(j, i)] = z.conj();
                }
            }
            Ok(RandomMatrix::Hermitian(HermitianMatrix(m)))
        }
        Family::IidSquare => {
            for i in 0..n {
                let mut rng = seed::row_rng(seed, i);
                for j in 0..n {
                    seed::seek_entry(&mut rng, j);
                    m[(i, j)] = spec.offdiag.sample(&mut rng);
                }
            }
            Ok(RandomMatrix::General(m))
        }
    }
}

/// Samples a Hermitian matrix; fails for the iid-square family.
pub fn sample_hermitian(spec: &EnsembleSpec, n: usize, seed: u64) -> Result<HermitianMatrix> {
    sample_matrix(spec, n, seed)?
        .into_hermitian()
        .ok_or_else(|| Error::InvalidArgument(format!("ensemble `{}` is not Hermitian", spec.label)))
}

/// Mixed moments `E (Re z)^a (Im z)^b` for `a + b <= order`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    pub order: usize,
    /// `(a, b, value)` in lexicographic order of `(a + b, a)`.
    pub entries: Vec<(usize, usize, f64)>,
}

impl MomentTable {
    pub fn get(&self, a: usize, b: usize) -> Option<f64> {
        self.entries.iter().find(|e| e.0 == a && e.1 == b).map(|e| e.2)
    }
}

pub fn atom_moments(atom: &ComplexAtom, order: usize) -> Result<MomentTable> {
    if !(1..=4).contains(&order) {
        return Err(Error::InvalidArgument(format!("moment order {order} not in 1..=4")));
    }
    let mut entries = Vec::new();
    for total in 0..=order {
        for a in (0..=total).rev() {
            let b = total - a;
            entries.push((a, b, atom.re.moment(a) * atom.im.moment(b)));
        }
    }
    Ok(MomentTable { order, entries })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub order: usize,
    /// `(a, b, |E_a - E_b|)`.
    pub discrepancies: Vec<(usize, usize, f64)>,
    pub max_discrepancy: f64,
    pub matched: bool,
}

pub fn verify_matching(a: &ComplexAtom, b: &ComplexAtom, order: usize) -> Result<MatchReport> {
    let ta = atom_moments(a, order)?;
    let tb = atom_moments(b, order)?;
    let discrepancies: Vec<_> = ta
        .entries
        .iter()
        .zip(&tb.entries)
        .map(|(x, y)| (x.0, x.1, (x.2 - y.2).abs()))
        .collect();
    let max_discrepancy = discrepancies.iter().map(|d| d.2).fold(0.0, f64::max);
    Ok(MatchReport { order, discrepancies, max_discrepancy, matched: max_discrepancy <= MOMENT_TOL })
}

/// Second-order diagonal matching check between two real atoms.
pub fn verify_diag_matching(a: &AtomDistribution, b: &AtomDistribution, order: usize) -> Result<MatchReport> {
    verify_matching(&ComplexAtom::real(a.clone()), &ComplexAtom::real(b.clone()), order)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12
    }

    #[test]
    fn catalog_variances_are_exact() {
        for kind in EnsembleKind::ALL {
            let spec = make_ensemble(kind);
            spec.validate().unwrap_or_else(|e| panic!("{kind}: {e}"));
            assert_eq!(spec.label, kind.as_str());
        }
    }

    #[test]
    fn gue_and_goe_parameters() {
        let gue = make_ensemble(EnsembleKind::Gue);
        assert_eq!(gue.offdiag.re.kind(), &AtomKind::GaussianReal { variance: 0.5 });
        assert_eq!(gue.offdiag.im.kind(), &AtomKind::GaussianReal { variance: 0.5 });
        assert_eq!(gue.diag.kind(), &AtomKind::GaussianReal { variance: 1.0 });
        assert_eq!(gue.sigma2, 1.0);

        let goe = make_ensemble(EnsembleKind::Goe);
        assert!(goe.offdiag.is_real());
        assert_eq!(goe.offdiag.re.kind(), &AtomKind::GaussianReal { variance: 1.0 });
        assert_eq!(goe.diag.kind(), &AtomKind::GaussianReal { variance: 2.0 });
        assert_eq!(goe.sigma2, 2.0);
    }

    #[test]
    fn gue_matched_threepoint_support() {
        let spec = make_ensemble(EnsembleKind::GueMatchedThreepoint);
        let s = 1.5f64.sqrt();
        match spec.offdiag.re.kind() {
            AtomKind::DiscreteReal { points, probs } => {
                assert!(close(points[0], -s) && points[1] == 0.0 && close(points[2], s));
                assert!(close(probs[0], 1.0 / 6.0) && close(probs[1], 2.0 / 3.0) && close(probs[2], 1.0 / 6.0));
            }
            k => panic!("unexpected {k:?}"),
        }
        assert_eq!(spec.diag, AtomDistribution::rademacher(1.0));
    }

    #[test]
    fn moment_tables() {
        let gue = make_ensemble(EnsembleKind::Gue);
        let t = atom_moments(&gue.offdiag, 4).unwrap();
        assert!(close(t.get(2, 0).unwrap(), 0.5));
        assert!(close(t.get(4, 0).unwrap(), 0.75));
        assert!(close(t.get(2, 2).unwrap(), 0.25));
        assert!(close(t.get(0, 0).unwrap(), 1.0));
        assert_eq!(t.entries.len(), 15);

        let b = AtomDistribution::rademacher(1.0);
        assert!(close(b.moment(2), 1.0) && close(b.moment(4), 1.0));

        let m = make_ensemble(EnsembleKind::GueMatchedThreepoint);
        assert!(close(m.offdiag.re.moment(2), 0.5) && close(m.offdiag.re.moment(4), 0.75));
    }

    #[test]
    fn matching_reports() {
        let gue = make_ensemble(EnsembleKind::Gue);
        let r = verify_matching(&gue.offdiag, &gue.offdiag, 4).unwrap();
        assert!(r.matched && r.max_discrepancy == 0.0);

        for (base, matched) in [
            (EnsembleKind::Gue, EnsembleKind::GueMatchedThreepoint),
            (EnsembleKind::Goe, EnsembleKind::GoeMatchedThreepoint),
        ] {
            let a = make_ensemble(base);
            let b = make_ensemble(matched);
            assert!(verify_matching(&a.offdiag, &b.offdiag, 4).unwrap().matched);
            assert!(verify_diag_matching(&a.diag, &b.diag, 2).unwrap().matched);
        }

        let bern = make_ensemble(EnsembleKind::BernoulliComplex);
        let r = verify_matching(&gue.offdiag, &bern.offdiag, 4).unwrap();
        assert!(!r.matched);
        // 3/4 vs 1/4 in each part's fourth moment.
        assert!(close(r.max_discrepancy, 0.5));
        assert!(verify_matching(&gue.offdiag, &bern.offdiag, 3).unwrap().matched);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(AtomDistribution::discrete(vec![1.0, -1.0], vec![0.5, 0.4]).is_err());
        assert!(AtomDistribution::discrete(vec![1.0, 0.0], vec![0.5, 0.5]).is_err());
        assert!(AtomDistribution::discrete(vec![1.0, -1.0], vec![1.5, -0.5]).is_err());
        assert!(atom_moments(&ComplexAtom::real(AtomDistribution::zero()), 5).is_err());
        assert!(matches!("gaussian".parse::<EnsembleKind>(), Err(Error::UnknownEnsemble(_))));
        assert!(sample_matrix(&make_ensemble(EnsembleKind::Gue), 0, 1).is_err());
    }

    #[test]
    fn one_by_one_is_a_diagonal_draw() {
        let spec = make_ensemble(EnsembleKind::BernoulliSymmetric);
        let m = sample_hermitian(&spec, 1, 11).unwrap();
        let x = m.matrix()[(0, 0)];
        assert_eq!(x.im, 0.0);
        assert_eq!(x.re.abs(), 1.0);
    }

    #[test]
    fn sampling_is_deterministic_and_hermitian() {
        for kind in EnsembleKind::ALL {
            let spec = make_ensemble(kind);
            let a = sample_matrix(&spec, 9, 42).unwrap();
            let b = sample_matrix(&spec, 9, 42).unwrap();
            assert_eq!(a, b);
            if let RandomMatrix::Hermitian(h) = &a {
                HermitianMatrix::new(h.matrix().clone()).unwrap();
            }
            let c = sample_matrix(&spec, 9, 43).unwrap();
            assert_ne!(a, c);
        }
    }

    #[test]
    fn entries_do_not_depend_on_matrix_size() {
        let spec = make_ensemble(EnsembleKind::Gue);
        let small = sample_hermitian(&spec, 5, 3).unwrap();
        let big = sample_hermitian(&spec, 8, 3).unwrap();
        assert_eq!(small.matrix(), &big.matrix().view((0, 0), (5, 5)).clone_owned());
    }
}
