//! Resolvents, single-entry perturbation expansions, the log-determinant
//! integral identity, spectral diagnostics and the entry-swap experiment.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dense::{hermitian_eigenvalues, logdet_lu, logdet_shifted};
use crate::ensembles::{sample_hermitian, EnsembleSpec, HermitianMatrix};
use crate::error::{Error, Result};
use crate::seed::derive_seed;
use crate::CMatrix;

/// `(q, p)` for the `l^p -> l^q` operator norm `||A||_{(q,p)}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormPair {
    InfOne,
    InfTwo,
    TwoTwo,
    TwoOne,
}

impl NormPair {
    pub const ALL: [NormPair; 4] = [NormPair::InfOne, NormPair::InfTwo, NormPair::TwoTwo, NormPair::TwoOne];
}

fn max_row_norm(a: &CMatrix) -> f64 {
    a.row_iter().map(|r| r.norm()).fold(0.0, f64::max)
}

pub fn opnorm(a: &CMatrix, pair: NormPair) -> f64 {
    match pair {
        NormPair::InfOne => a.iter().map(|z| z.norm()).fold(0.0, f64::max),
        NormPair::InfTwo => max_row_norm(a),
        NormPair::TwoTwo => {
            if a.is_empty() {
                0.0
            } else {
                a.clone().singular_values().max()
            }
        }
        NormPair::TwoOne => max_row_norm(&a.adjoint()),
    }
}

/// Rank-one or rank-two Hermitian perturbation direction (0-indexed).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ElementaryMatrix {
    /// `e_a e_a^*`
    Diagonal(usize),
    /// `e_a e_b^* + e_b e_a^*`
    Symmetric(usize, usize),
    /// `i e_a e_b^* - i e_b e_a^*`
    Antisymmetric(usize, usize),
}

impl ElementaryMatrix {
    pub fn validate(self, n: usize) -> Result<()> {
        let ok = match self {
            Self::Diagonal(a) => a < n,
            Self::Symmetric(a, b) | Self::Antisymmetric(a, b) => a < n && b < n && a != b,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("{self:?} is not an elementary matrix of size {n}")))
        }
    }

    pub fn to_matrix(self, n: usize) -> Result<CMatrix> {
        self.validate(n)?;
        let mut v = CMatrix::zeros(n, n);
        match self {
            Self::Diagonal(a) => v[(a, a)] = Complex64::new(1.0, 0.0),
            Self::Symmetric(a, b) => {
                v[(a, b)] = Complex64::new(1.0, 0.0);
                v[(b, a)] = Complex64::new(1.0, 0.0);
            }
            Self::Antisymmetric(a, b) => {
                v[(a, b)] = Complex64::new(0.0, 1.0);
                v[(b, a)] = Complex64::new(0.0, -1.0);
            }
        }
        Ok(v)
    }
}

/// Distance from `z` to the spectrum below which a real `z` counts as an eigenvalue.
pub const SPECTRUM_TOL: f64 = 1e-12;

/// `(W - z)^{-1}`.
pub fn resolvent(w: &HermitianMatrix, z: Complex64) -> Result<CMatrix> {
    let n = w.n();
    if z.im == 0.0 && hermitian_eigenvalues(w).iter().any(|l| (l - z.re).abs() <= SPECTRUM_TOL) {
        return Err(Error::Singular);
    }
    let mut a = w.matrix().clone();
    for i in 0..n {
        a[(i, i)] -= z;
    }
    a.try_inverse().ok_or(Error::Singular)
}

/// `||R R^* - (R - R^*) / (2 i eta)||_{(inf,1)} / ||R R^*||_{(inf,1)}`.
pub fn resolvent_identity_residual(r: &CMatrix, eta: f64) -> f64 {
    let rr = r * r.adjoint();
    let rhs = (r - r.adjoint()) / Complex64::new(0.0, 2.0 * eta);
    opnorm(&(&rr - rhs), NormPair::InfOne) / opnorm(&rr, NormPair::InfOne)
}

/// `s(z) = (1/n) tr (W - z)^{-1}` for `Im z > 0`.
pub fn stieltjes(w: &HermitianMatrix, z: Complex64) -> Result<Complex64> {
    if !(z.im > 0.0) {
        return Err(Error::InvalidArgument(format!("Stieltjes transform needs Im z > 0, got {z}")));
    }
    Ok(resolvent(w, z)?.trace() / w.n() as f64)
}

/// `W + (t / sqrt n) V`.
pub fn perturbed(w: &HermitianMatrix, v: ElementaryMatrix, t: f64) -> Result<HermitianMatrix> {
    let n = w.n();
    let vm = v.to_matrix(n)?;
    HermitianMatrix::new(w.matrix() + vm * Complex64::new(t / (n as f64).sqrt(), 0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorCoefficients {
    /// `c_1, .., c_k`.
    pub coeffs: Vec<Complex64>,
    /// Largest relative gap between `tr((R V)^j R)` and `tr(V (R V)^{j-1} R^2)`.
    pub cyclic_residual: f64,
}

/// `c_j = (-1)^j (1/n) tr((R_0 V)^j R_0)` for `j = 1..=k`, so that
/// `s_t = s_0 + sum_j c_j (t / sqrt n)^j`.
pub fn taylor_coefficients(r0: &CMatrix, v: ElementaryMatrix, k: usize) -> Result<TaylorCoefficients> {
    if k == 0 {
        return Err(Error::InvalidArgument("expansion order must be at least 1".into()));
    }
    let n = r0.nrows();
    let vm = v.to_matrix(n)?;
    let rv = r0 * &vm;
    let r0_sq = r0 * r0;
    let mut power = rv.clone(); // (R V)^j
    let mut prev_power = CMatrix::identity(n, n); // (R V)^{j-1}
    let mut coeffs = Vec::with_capacity(k);
    let mut cyclic_residual = 0.0f64;
    for j in 1..=k {
        let direct = (&power * r0).trace();
        let cyclic = (&vm * &prev_power * &r0_sq).trace();
        let scale = direct.norm().max(f64::MIN_POSITIVE);
        cyclic_residual = cyclic_residual.max((direct - cyclic).norm() / scale);
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        coeffs.push(direct * (sign / n as f64));
        prev_power = power.clone();
        power = &power * &rv;
    }
    Ok(TaylorCoefficients { coeffs, cyclic_residual })
}

/// `K ||R_0||^j_{(inf,1)} min(||R_0||_{(inf,1)}, 1/(n eta))`.
pub fn coefficient_envelope(norm_inf1: f64, j: usize, n: usize, eta: f64, k_const: f64) -> f64 {
    k_const * norm_inf1.powi(j as i32) * norm_inf1.min(1.0 / (n as f64 * eta))
}

fn check_neumann(r0: &CMatrix, t: f64) -> Result<()> {
    let lhs = t.abs() * opnorm(r0, NormPair::InfOne);
    let rhs = (r0.nrows() as f64).sqrt() / 2.0;
    if lhs < rhs {
        Ok(())
    } else {
        Err(Error::DivergenceRisk { lhs, rhs })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeumannSum {
    pub sum: CMatrix,
    /// `||(t/sqrt n)^j (R_0 V)^j R_0||_{(inf,1)}` for `j = 0..=k`.
    pub term_norms: Vec<f64>,
}

/// `sum_{j=0}^k (-t/sqrt n)^j (R_0 V)^j R_0`.
pub fn neumann_sum(r0: &CMatrix, v: ElementaryMatrix, t: f64, k: usize) -> Result<NeumannSum> {
    check_neumann(r0, t)?;
    let n = r0.nrows();
    let step = &(r0 * v.to_matrix(n)?) * Complex64::new(-t / (n as f64).sqrt(), 0.0);
    let mut term = r0.clone();
    let mut sum = r0.clone();
    let mut term_norms = vec![opnorm(&term, NormPair::InfOne)];
    for _ in 1..=k {
        term = &step * &term;
        sum += &term;
        term_norms.push(opnorm(&term, NormPair::InfOne));
    }
    Ok(NeumannSum { sum, term_norms })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemainderProbe {
    pub z: Complex64,
    pub t: f64,
    pub k: usize,
    pub direct: Complex64,
    pub truncated: Complex64,
    pub remainder: Complex64,
    pub coeffs: Vec<Complex64>,
    pub norm_inf1: f64,
    /// `K (|t|/sqrt n)^{k+1} ||R_0||^{k+1}_{(inf,1)} min(||R_0||_{(inf,1)}, 1/(n eta))`.
    pub remainder_envelope: f64,
    pub within_envelope: bool,
}

/// Compares `s_t` computed directly with its order-`k` expansion around `t = 0`.
pub fn expansion_remainder_probe(
    w0: &HermitianMatrix,
    v: ElementaryMatrix,
    z: Complex64,
    t: f64,
    k: usize,
    k_const: f64,
) -> Result<RemainderProbe> {
    let n = w0.n();
    let r0 = resolvent(w0, z)?;
    check_neumann(&r0, t)?;
    let s0 = r0.trace() / n as f64;
    let coeffs = if k == 0 { Vec::new() } else { taylor_coefficients(&r0, v, k)?.coeffs };
    let x = t / (n as f64).sqrt();
    let truncated = coeffs.iter().enumerate().fold(s0, |acc, (i, c)| acc + c * x.powi(i as i32 + 1));
    let direct = resolvent(&perturbed(w0, v, t)?, z)?.trace() / n as f64;
    let remainder = direct - truncated;
    let norm_inf1 = opnorm(&r0, NormPair::InfOne);
    let remainder_envelope = coefficient_envelope(norm_inf1, k + 1, n, z.im, k_const) * x.abs().powi(k as i32 + 1);
    Ok(RemainderProbe {
        z,
        t,
        k,
        direct,
        truncated,
        remainder,
        coeffs,
        norm_inf1,
        remainder_envelope,
        within_envelope: remainder.norm() <= remainder_envelope,
    })
}

/// Adaptive Simpson on `[a, b]` with absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<(f64, usize)> {
    const MAX_DEPTH: u32 = 48;
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        (a, fa): (f64, f64),
        (m, fm): (f64, f64),
        (b, fb): (f64, f64),
        whole: f64,
        tol: f64,
        depth: u32,
        evals: &mut usize,
    ) -> std::result::Result<f64, f64> {
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        *evals += 2;
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        if depth >= MAX_DEPTH {
            return Err(delta.abs() / 15.0);
        }
        let l = rec(f, (a, fa), (lm, flm), (m, fm), left, tol / 2.0, depth + 1, evals)?;
        let r = rec(f, (m, fm), (rm, frm), (b, fb), right, tol / 2.0, depth + 1, evals)?;
        Ok(l + r)
    }
    if a == b {
        return Ok((0.0, 0));
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut evals = 3;
    rec(f, (a, fa), (m, fm), (b, fb), whole, tol, 0, &mut evals)
        .map(|v| (v, evals))
        .map_err(|err| Error::Quadrature { tol, err })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FtcResult {
    pub log_abs_det_z0: f64,
    pub log_abs_det_top: f64,
    /// `n Im int_{eta0}^{T} s(E + i eta) d eta`.
    pub integral: f64,
    pub residual: f64,
    pub evaluations: usize,
}

/// Checks `log|det(W - z0)| = log|det(W - E - iT)| - n Im int_{eta0}^T s(E + i eta) d eta`.
/// The integral is taken in `u = log eta`.
pub fn ftc_logdet_identity(w: &HermitianMatrix, z0: Complex64, top: f64, quad_tol: f64) -> Result<FtcResult> {
    let (e, eta0) = (z0.re, z0.im);
    if eta0 < 0.0 || top < eta0 {
        return Err(Error::InvalidArgument(format!("need 0 <= eta0 <= T, got eta0 = {eta0}, T = {top}")));
    }
    let eigs = hermitian_eigenvalues(w);
    let gap = eigs.iter().map(|l| (l - e).abs()).fold(f64::INFINITY, f64::min);
    if eta0 == 0.0 && gap <= SPECTRUM_TOL {
        return Err(Error::Singular);
    }
    let shifted = |eta: f64| {
        let mut a = w.matrix().clone();
        for i in 0..w.n() {
            a[(i, i)] -= Complex64::new(e, eta);
        }
        a
    };
    let log_abs_det_z0 = logdet_lu(&shifted(eta0))?.log_abs;
    let log_abs_det_top = logdet_lu(&shifted(top))?.log_abs;

    // n Im s(E + i eta) d eta = sum eta^2 / ((l - E)^2 + eta^2) du.
    let integrand = |u: f64| {
        let eta = u.exp();
        let eta2 = eta * eta;
        eigs.iter().map(|l| eta2 / ((l - e) * (l - e) + eta2)).sum::<f64>()
    };
    let tol = quad_tol / 10.0;
    let (lower, head) = if eta0 > 0.0 {
        (eta0.ln(), 0.0)
    } else {
        // The part below eta_c is at most n eta_c^2 / (2 gap^2); take its midpoint value.
        let eta_c = (tol * gap * gap / eigs.len() as f64).sqrt().min(top);
        let head_bound = eigs.len() as f64 * eta_c * eta_c / (2.0 * gap * gap);
        (eta_c.ln(), 0.5 * head_bound)
    };
    let (body, evaluations) = if top == eta0 { (0.0, 0) } else { adaptive_simpson(&integrand, lower, top.ln(), tol)? };
    let integral = head + body;
    Ok(FtcResult {
        log_abs_det_z0,
        log_abs_det_top,
        integral,
        residual: (log_abs_det_z0 - log_abs_det_top + integral).abs(),
        evaluations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalCount {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralDiagnostics {
    pub n: usize,
    pub min_gap: f64,
    pub interval_counts: Vec<IntervalCount>,
    /// `max_i ||u_i||_inf` over unit eigenvectors.
    pub deloc: f64,
}

/// Eigenvalue gap at `e`, counts in `[lo, hi]`, and eigenvector sup-norms of `W`.
pub fn spectral_diagnostics(w: &HermitianMatrix, e: f64, intervals: &[(f64, f64)]) -> SpectralDiagnostics {
    let eig = w.matrix().clone().symmetric_eigen();
    let vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let deloc = eig.eigenvectors.iter().map(|z| z.norm()).fold(0.0, f64::max);
    SpectralDiagnostics {
        n: w.n(),
        min_gap: vals.iter().map(|l| (l - e).abs()).fold(f64::INFINITY, f64::min),
        interval_counts: intervals
            .iter()
            .map(|&(lo, hi)| IntervalCount { lo, hi, count: vals.iter().filter(|&&l| lo <= l && l <= hi).count() })
            .collect(),
        deloc,
    }
}

/// Smooth bounded test functions with derivatives of order `0..=5` at most 1 in sup norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestFunction {
    /// `exp(-(x / 2.5)^2)`
    Bump,
    /// `cos x`
    Cosine,
    /// `1 / (1 + exp(-x))`
    Logistic,
}

impl TestFunction {
    pub const ALL: [TestFunction; 3] = [TestFunction::Bump, TestFunction::Cosine, TestFunction::Logistic];
    pub const BUMP_WIDTH: f64 = 2.5;

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "bump" => Ok(Self::Bump),
            "cosine" => Ok(Self::Cosine),
            "logistic" => Ok(Self::Logistic),
            other => Err(Error::InvalidArgument(format!("unknown test function `{other}`"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Bump => "bump",
            Self::Cosine => "cosine",
            Self::Logistic => "logistic",
        }
    }

    /// Value at `x`; `-inf` maps to 0.
    pub fn eval(self, x: f64) -> f64 {
        if x == f64::NEG_INFINITY {
            return 0.0;
        }
        match self {
            Self::Bump => (-(x / Self::BUMP_WIDTH).powi(2)).exp(),
            Self::Cosine => x.cos(),
            Self::Logistic => 1.0 / (1.0 + (-x).exp()),
        }
    }
}

/// Logarithmic potential of the semicircle law,
/// `g(z) = z^2/4 - z sqrt(z^2-4)/4 + log((z + sqrt(z^2-4))/2) - 1/2`,
/// with the branch `sqrt(z^2-4) = sqrt(z-2) sqrt(z+2)`. Its real part is
/// `int log|x - z| d rho_sc(x)`.
pub fn semicircle_log_potential(z: Complex64) -> Complex64 {
    let root = (z - 2.0).sqrt() * (z + 2.0).sqrt();
    z * z / 4.0 - z * root / 4.0 + ((z + root) / 2.0).ln() - 0.5
}

/// `(n/2) log n + n Re g(z0)`, the leading order of `log|det(M - sqrt(n) z0)|`.
pub fn swap_center(n: usize, z0: Complex64) -> f64 {
    let nf = n as f64;
    0.5 * nf * nf.ln() + nf * semicircle_log_potential(z0).re
}

pub fn swap_scale(n: usize) -> f64 {
    (0.5 * (n as f64).ln()).sqrt()
}

/// `log|det(M - sqrt(n) z0)|` for both ensembles, replicate `r` seeded by
/// `derive_seed(seed, r)` in each.
pub fn swap_logdets(
    ens_a: &EnsembleSpec,
    ens_b: &EnsembleSpec,
    n: usize,
    z0: Complex64,
    replicates: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let pairs: Vec<(f64, f64)> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let s = derive_seed(seed, r);
            let a = logdet_shifted(&sample_hermitian(ens_a, n, s)?, z0);
            let b = logdet_shifted(&sample_hermitian(ens_b, n, s)?, z0);
            Ok((a, b))
        })
        .collect::<Result<_>>()?;
    Ok(pairs.into_iter().unzip())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapResult {
    pub g: TestFunction,
    pub mean_a: f64,
    pub mean_b: f64,
    pub diff: f64,
    pub pooled_stderr: f64,
    pub singular_a: usize,
    pub singular_b: usize,
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (m, x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0))
}

/// `E G((L - center)/scale)` under both ensembles from precomputed log-dets `L`.
pub fn swap_statistic(la: &[f64], lb: &[f64], n: usize, z0: Complex64, g: TestFunction) -> Result<SwapResult> {
    if la.len() < 2 || lb.len() < 2 {
        return Err(Error::TooFewSamples { need: 2, got: la.len().min(lb.len()) });
    }
    let (c, s) = (swap_center(n, z0), swap_scale(n));
    let ga: Vec<f64> = la.iter().map(|l| g.eval((l - c) / s)).collect();
    let gb: Vec<f64> = lb.iter().map(|l| g.eval((l - c) / s)).collect();
    let ((ma, va), (mb, vb)) = (mean_var(&ga), mean_var(&gb));
    Ok(SwapResult {
        g,
        mean_a: ma,
        mean_b: mb,
        diff: ma - mb,
        pooled_stderr: (va / ga.len() as f64 + vb / gb.len() as f64).sqrt(),
        singular_a: la.iter().filter(|l| **l == f64::NEG_INFINITY).count(),
        singular_b: lb.iter().filter(|l| **l == f64::NEG_INFINITY).count(),
    })
}

#[allow(clippy::too_many_arguments)]
pub fn swap_experiment(
    ens_a: &EnsembleSpec,
    ens_b: &EnsembleSpec,
    n: usize,
    z0: Complex64,
    g: TestFunction,
    replicates: usize,
    seed: u64,
) -> Result<SwapResult> {
    let (la, lb) = swap_logdets(ens_a, ens_b, n, z0, replicates, seed)?;
    swap_statistic(&la, &lb, n, z0, g)
}
