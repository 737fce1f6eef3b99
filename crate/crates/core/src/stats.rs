//! Kolmogorov-Smirnov tests, summary moments, ECDF and histogram tables.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reference {
    StdNormal,
}

impl Reference {
    pub fn cdf(self, x: f64) -> f64 {
        match self {
            Reference::StdNormal => std_normal_cdf(x),
        }
    }
}

pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    /// Sup-distance between the distribution functions.
    pub d: f64,
    /// Asymptotic Kolmogorov p-value.
    pub p_approx: f64,
    pub n: usize,
    /// Second sample size for the two-sample test.
    pub m: Option<usize>,
}

/// Survival function of the Kolmogorov distribution,
/// `Q(l) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 l^2)`, first 100 terms.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        // The alternating series has not settled here; Q differs from 1 by < 1e-15.
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-300 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn check_finite(x: &[f64]) -> Result<()> {
    match x.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(()),
    }
}

fn sorted(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn ks_one_sample(x: &[f64], reference: Reference) -> Result<KsResult> {
    if x.len() < 5 {
        return Err(Error::TooFewSamples { need: 5, got: x.len() });
    }
    check_finite(x)?;
    let xs = sorted(x);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = reference.cdf(v);
            ((i as f64 + 1.0) / n - f).abs().max((f - i as f64 / n).abs())
        })
        .fold(0.0, f64::max);
    Ok(KsResult { d, p_approx: kolmogorov_survival(n.sqrt() * d), n: xs.len(), m: None })
}

pub fn ks_two_sample(x: &[f64], y: &[f64]) -> Result<KsResult> {
    for s in [x, y] {
        if s.len() < 5 {
            return Err(Error::TooFewSamples { need: 5, got: s.len() });
        }
        check_finite(s)?;
    }
    let (xs, ys) = (sorted(x), sorted(y));
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < n && j < m {
        // Step past every copy of the smallest remaining value in both samples.
        let v = xs[i].min(ys[j]);
        while i < n && xs[i] <= v {
            i += 1;
        }
        while j < m && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let eff = (n * m) as f64 / (n + m) as f64;
    Ok(KsResult { d, p_approx: kolmogorov_survival(eff.sqrt() * d), n, m: Some(m) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    pub mean_se: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub variance_se: f64,
    pub skewness: f64,
    pub skewness_se: f64,
    pub excess_kurtosis: f64,
    pub excess_kurtosis_se: f64,
}

pub fn summary(x: &[f64]) -> Result<SummaryStats> {
    if x.len() < 2 {
        return Err(Error::TooFewSamples { need: 2, got: x.len() });
    }
    check_finite(x)?;
    let n = x.len() as f64;
    // Sum in sorted order so the result does not depend on sample order.
    let xs = sorted(x);
    let mean = xs.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in &xs {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let variance = m2 * n / (n - 1.0);
    let (skewness, excess_kurtosis) = if m2 > 0.0 { (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0) } else { (0.0, 0.0) };
    Ok(SummaryStats {
        n: x.len(),
        mean,
        mean_se: (variance / n).sqrt(),
        variance,
        variance_se: ((m4 - m2 * m2).max(0.0) / n).sqrt(),
        skewness,
        skewness_se: (6.0 / n).sqrt(),
        excess_kurtosis,
        excess_kurtosis_se: (24.0 / n).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcdfRow {
    pub x: f64,
    pub f: f64,
}

/// Empirical CDF `#{x_i <= g} / N` at each grid point.
pub fn ecdf_table(x: &[f64], grid: &[f64]) -> Result<Vec<EcdfRow>> {
    if x.is_empty() {
        return Err(Error::TooFewSamples { need: 1, got: 0 });
    }
    let xs = sorted(x);
    let n = xs.len() as f64;
    Ok(grid
        .iter()
        .map(|&g| EcdfRow { x: g, f: xs.partition_point(|&v| v <= g) as f64 / n })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Equal-width histogram over `[min, max]`; the last bin is closed.
pub fn histogram(x: &[f64], bins: usize) -> Result<Vec<HistogramBin>> {
    if x.is_empty() {
        return Err(Error::TooFewSamples { need: 1, got: 0 });
    }
    if bins == 0 {
        return Err(Error::InvalidArgument("histogram needs at least one bin".into()));
    }
    check_finite(x)?;
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for &v in x {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| HistogramBin { lo: lo + k as f64 * width, hi: lo + (k + 1) as f64 * width, count })
        .collect())
}

pub fn ecdf_csv(rows: &[EcdfRow]) -> String {
    let mut out = String::from("x,ecdf\n");
    for r in rows {
        out.push_str(&format!("{:e},{:e}\n", r.x, r.f));
    }
    out
}

pub fn histogram_csv(bins: &[HistogramBin]) -> String {
    let mut out = String::from("lo,hi,count\n");
    for b in bins {
        out.push_str(&format!("{:e},{:e},{}\n", b.lo, b.hi, b.count));
    }
    out
}
