//! Trotter tridiagonal model, determinant recursions and Householder reduction.
//!
//! The tridiagonal matrix has diagonal `a_1..a_n` and off-diagonal
//! `b_1..b_{n-1}`. Its leading minors obey
//!
//! ```text
//! D_i = a_i D_{i-1} - b_{i-1}^2 D_{i-2},    D_0 = 1, D_{-1} = 0.
//! ```
//!
//! With `E_i = D_i / sqrt(i!)` and `F_j = E_{2j}^2 + E_{2j-1}^2`, the pair
//! `(E_{2j}, E_{2j-1}) = (-1)^j sqrt(F_j) (cos theta_j, sin theta_j)`.
//! Both recursions are run on a unit vector with a separately accumulated
//! log-magnitude, so nothing overflows for any practical `n`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::decomposition::h_value;
use crate::dense::log_factorial;
use crate::ensembles::HermitianMatrix;
use crate::error::{Error, Result};

/// Dyson index of the tridiagonal model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Beta {
    /// GOE-like: real chi off-diagonal, `N(0, 2)` diagonal.
    #[serde(rename = "1")]
    One,
    /// GUE-like: complex chi off-diagonal, `N(0, 1)` diagonal.
    #[serde(rename = "2")]
    Two,
}

impl Beta {
    pub fn from_int(beta: u32) -> Result<Self> {
        match beta {
            1 => Ok(Beta::One),
            2 => Ok(Beta::Two),
            b => Err(Error::InvalidArgument(format!("beta must be 1 or 2, got {b}"))),
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Beta::One => 1.0,
            Beta::Two => 2.0,
        }
    }

    /// Variance of the diagonal entries `a_i` and of the `c_i`.
    pub fn entry_variance(self) -> f64 {
        2.0 / self.value()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TridiagonalModel {
    /// `None` for matrices produced by [`householder_tridiagonalize`].
    pub beta: Option<Beta>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl TridiagonalModel {
    pub fn new(beta: Option<Beta>, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.is_empty() || b.len() + 1 != a.len() {
            return Err(Error::ShapeMismatch(format!("|a| = {}, |b| = {}", a.len(), b.len())));
        }
        if let Some(i) = b.iter().position(|&x| !(x >= 0.0)) {
            return Err(Error::InvalidArgument(format!("b_{} = {} is negative", i + 1, b[i])));
        }
        Ok(Self { beta, a, b })
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.a[i];
        }
        for (i, &b) in self.b.iter().enumerate() {
            m[(i, i + 1)] = b;
            m[(i + 1, i)] = b;
        }
        m
    }

    /// `(log|D_n|, sign D_n)`; valid for odd and even `n`.
    pub fn logdet(&self) -> (f64, i8) {
        *det_recursion_exact(self).last().expect("n >= 1")
    }

    /// CSV with columns `i,a,b` (1-based; `b` empty on the last row).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,a,b\n");
        for i in 0..self.n() {
            let b = self.b.get(i).map(|x| format!("{x:e}")).unwrap_or_default();
            writeln!(out, "{},{:e},{}", i + 1, self.a[i], b).unwrap();
        }
        out
    }
}

/// Draws `a_i ~ N(0, 2/beta)` and `b_i^2 ~ Gamma(beta i / 2, 2 / beta)`.
pub fn sample_tridiagonal<R: Rng + ?Sized>(n: usize, beta: Beta, rng: &mut R) -> Result<TridiagonalModel> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let sd = beta.entry_variance().sqrt();
    let a: Vec<f64> = (0..n)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            sd * z
        })
        .collect();
    let scale = 2.0 / beta.value();
    let b = (1..n)
        .map(|i| {
            let shape = beta.value() * i as f64 / 2.0;
            Gamma::new(shape, scale).expect("positive shape and scale").sample(rng).sqrt()
        })
        .collect();
    Ok(TridiagonalModel { beta: Some(beta), a, b })
}

/// `c_i = (b_i^2 - i) / sqrt(i)` for `i = 1..n-1`.
pub fn c_sequence(t: &TridiagonalModel) -> Vec<f64> {
    t.b.iter()
        .enumerate()
        .map(|(k, &b)| {
            let i = (k + 1) as f64;
            (b * b - i) / i.sqrt()
        })
        .collect()
}

/// `(log|D_i|, sign D_i)` for `i = 1..n`. A vanishing minor is reported as
/// `(-inf, 0)`.
pub fn det_recursion_exact(t: &TridiagonalModel) -> Vec<(f64, i8)> {
    let n = t.n();
    let mut out = Vec::with_capacity(n);
    // (cur, prev) = (D_i, D_{i-1}) * exp(-log_scale)
    let (mut cur, mut prev, mut log_scale) = (1.0f64, 0.0f64, 0.0f64);
    for i in 0..n {
        let next = if i == 0 {
            t.a[0] * cur
        } else {
            let b = t.b[i - 1];
            t.a[i] * cur - b * b * prev
        };
        prev = cur;
        cur = next;
        let m = cur.abs().max(prev.abs());
        if m > 0.0 && m.is_finite() {
            cur /= m;
            prev /= m;
            log_scale += m.ln();
        }
        if cur == 0.0 {
            out.push((f64::NEG_INFINITY, 0));
        } else {
            out.push((log_scale + cur.abs().ln(), if cur > 0.0 { 1 } else { -1 }));
        }
    }
    out
}

/// Per-step record of the paired normalized determinant recursion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterminantTrace {
    pub n: usize,
    /// First recorded pair index.
    pub m: usize,
    /// `log F_j`, `j = m..=n/2`.
    pub log_f: Vec<f64>,
    /// `theta_j` in `(-pi, pi]`, `j = m..=n/2`.
    pub theta: Vec<f64>,
    /// `h_j`, `j = m+1..=n/2`, evaluated at `theta_{j-1}`.
    pub h: Vec<f64>,
    pub log_abs_dn: f64,
    pub sign_n: i8,
    pub log_abs_en: f64,
}

impl DeterminantTrace {
    pub fn last_j(&self) -> usize {
        self.n / 2
    }

    pub fn log_f_at(&self, j: usize) -> f64 {
        self.log_f[j - self.m]
    }

    pub fn theta_at(&self, j: usize) -> f64 {
        self.theta[j - self.m]
    }

    pub fn h_at(&self, j: usize) -> f64 {
        self.h[j - self.m - 1]
    }

    /// CSV with columns `j,logF,theta,h` (`h` empty at `j = m`).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,logF,theta,h\n");
        for (k, (lf, th)) in self.log_f.iter().zip(&self.theta).enumerate() {
            let h = if k == 0 { String::new() } else { format!("{:e}", self.h[k - 1]) };
            writeln!(out, "{},{:e},{:e},{}", self.m + k, lf, th, h).unwrap();
        }
        out
    }
}

/// `floor(log log log n)`, clamped to at least 1.
pub fn default_start_index(n: usize) -> usize {
    let lll = (n as f64).ln().ln().ln();
    if lll.is_finite() && lll >= 1.0 {
        lll.floor() as usize
    } else {
        1
    }
}

fn wrap_angle(theta: f64) -> f64 {
    if theta <= -PI {
        theta + 2.0 * PI
    } else {
        theta
    }
}

/// Runs the exact normalized recursion
/// `E_i = (a_i / sqrt i) E_{i-1} - (b_{i-1}^2 / sqrt(i (i-1))) E_{i-2}`
/// and records `log F_j`, `theta_j` and `h_j` from `j = m` on.
pub fn logdet_trace(t: &TridiagonalModel, m: usize) -> Result<DeterminantTrace> {
    let n = t.n();
    if !n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("paired trace needs even n, got {n}")));
    }
    let half = n / 2;
    if m < 1 || m > half {
        return Err(Error::InvalidArgument(format!("start index {m} not in 1..={half}")));
    }
    let c = c_sequence(t);
    let len = half - m + 1;
    let mut log_f = Vec::with_capacity(len);
    let mut theta = Vec::with_capacity(len);
    let mut h = Vec::with_capacity(len - 1);

    // (x, y) = (E_i, E_{i-1}) / exp(log_norm), kept on the unit circle.
    let (mut x, mut y, mut log_norm) = (1.0f64, 0.0f64, 0.0f64);
    for i in 1..=n {
        let fi = i as f64;
        let next = if i == 1 {
            t.a[0] * x
        } else {
            let b = t.b[i - 2];
            (t.a[i - 1] / fi.sqrt()) * x - (b * b / (fi * (fi - 1.0)).sqrt()) * y
        };
        y = x;
        x = next;
        let norm = x.hypot(y);
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::DegenerateTrace { j: i.div_ceil(2) });
        }
        x /= norm;
        y /= norm;
        log_norm += norm.ln();

        if i % 2 == 0 {
            let j = i / 2;
            if j >= m {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                let th = wrap_angle((s * y).atan2(s * x));
                if j > m {
                    let prev = *theta.last().expect("theta_{j-1} recorded");
                    // a_{2j}, a_{2j-1}, c_{2j-1}, c_{2j-2} with 1-based indices.
                    h.push(h_value(prev, t.a[2 * j - 1], t.a[2 * j - 2], c[2 * j - 2], c[2 * j - 3]));
                }
                log_f.push(2.0 * log_norm);
                theta.push(th);
            }
        }
    }
    let log_abs_en = log_norm + x.abs().ln();
    Ok(DeterminantTrace {
        n,
        m,
        log_f,
        theta,
        h,
        log_abs_dn: log_abs_en + 0.5 * log_factorial(n as u64),
        sign_n: if x > 0.0 {
            1
        } else if x < 0.0 {
            -1
        } else {
            0
        },
        log_abs_en,
    })
}

/// Reduces a Hermitian matrix to real symmetric tridiagonal form by unitary
/// conjugation, working from the last column upwards: each step fixes the
/// trailing basis vectors and maps the remaining part of the current column to
/// `b e_{k-1}` with `b >= 0`.
pub fn householder_tridiagonalize(h: &HermitianMatrix) -> TridiagonalModel {
    let n = h.n();
    let mut a = h.matrix().clone();
    let mut b = vec![0.0; n.saturating_sub(1)];
    for k in (1..n).rev() {
        // Column k above the diagonal lives in the leading k x k block's frame.
        let x: Vec<Complex64> = (0..k).map(|i| a[(i, k)]).collect();
        let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        b[k - 1] = norm;
        if norm == 0.0 {
            continue;
        }
        let last = x[k - 1];
        let head_is_zero = x[..k - 1].iter().all(|z| *z == Complex64::new(0.0, 0.0));
        // Unit phase that turns the final reflected coordinate into +norm.
        let phase = if head_is_zero {
            // Only a diagonal phase is needed: e_{k-1} -> conj(last/|last|) e_{k-1}.
            last.conj() / last.norm()
        } else {
            let omega = if last.norm() > 0.0 { last / last.norm() } else { Complex64::new(1.0, 0.0) };
            // v = x + omega |x| e_{k-1};  P = I - tau v v^*;  P x = -omega |x| e_{k-1}.
            let mut v = x.clone();
            v[k - 1] += omega * norm;
            let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            let tau = 2.0 / vnorm2;
            // p = tau A v ; w = p - (tau/2)(v^* p) v ; A <- A - v w^* - w v^*
            let p: Vec<Complex64> = (0..k)
                .map(|i| (0..k).map(|j| a[(i, j)] * v[j]).sum::<Complex64>() * tau)
                .collect();
            let vp: Complex64 = v.iter().zip(&p).map(|(vi, pi)| vi.conj() * pi).sum();
            let kk = vp * (tau / 2.0);
            let w: Vec<Complex64> = p.iter().zip(&v).map(|(pi, vi)| pi - kk * vi).collect();
            for j in 0..k {
                for i in 0..k {
                    a[(i, j)] -= v[i] * w[j].conj() + w[i] * v[j].conj();
                }
            }
            -omega.conj()
        };
        // Diagonal unitary D = diag(1, .., 1, phase) on the leading block.
        for j in 0..k {
            a[(k - 1, j)] *= phase;
        }
        for i in 0..k {
            a[(i, k - 1)] *= phase.conj();
        }
        for i in 0..k - 1 {
            a[(i, k)] = Complex64::new(0.0, 0.0);
            a[(k, i)] = Complex64::new(0.0, 0.0);
        }
        a[(k - 1, k)] = Complex64::new(norm, 0.0);
        a[(k, k - 1)] = Complex64::new(norm, 0.0);
    }
    let diag = (0..n).map(|i| a[(i, i)].re).collect();
    TridiagonalModel { beta: None, a: diag, b }
}
