//! Martingale increments `h_j`, phase statistics and the diagnostics built on them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tridiag::{Beta, DeterminantTrace};

/// `h_j` given the previous phase `theta_{j-1}` and the fresh entries
/// `a_{2j}, a_{2j-1}, c_{2j-1}, c_{2j-2}`.
pub fn h_value(theta_prev: f64, a_2j: f64, a_2jm1: f64, c_2jm1: f64, c_2jm2: f64) -> f64 {
    let (s, c) = theta_prev.sin_cos();
    -c_2jm1 * c * c - c_2jm2 * s * s + (a_2jm1 - a_2j) * c * s
}

/// Exact conditional `(mean, second moment)` of `h_value` at a fixed angle,
/// averaging over the laws of the fresh entries.
///
/// `c_i` has mean 0 and variance `2/beta`; `a_{2j-1} - a_{2j}` has variance `4/beta`.
pub fn h_conditional_moments(theta_prev: f64, beta: Beta) -> (f64, f64) {
    let (s, c) = theta_prev.sin_cos();
    let (c2, s2) = (c * c, s * s);
    let v = beta.entry_variance();
    (0.0, v * (c2 * c2 + s2 * s2) + 2.0 * v * c2 * s2)
}

/// `|log F_{n/2} - log F_m - sum_j (log F_j - log F_{j-1})|`.
pub fn telescoping_check(trace: &DeterminantTrace) -> f64 {
    let increments: f64 = trace.log_f.windows(2).map(|w| w[1] - w[0]).sum();
    let first = trace.log_f[0];
    let last = *trace.log_f.last().expect("trace has at least one entry");
    (last - first - increments).abs()
}

/// `sum_{j=m+1}^{n/2} 1/j`, the variance proxy for the `beta = 2` martingale.
pub fn sn2_proxy(n: usize, m: usize) -> f64 {
    (m + 1..=n / 2).map(|j| 1.0 / j as f64).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepMoments {
    pub j: usize,
    pub mean: f64,
    pub mean_se: f64,
    pub second_moment: f64,
    pub second_moment_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleReport {
    pub n: usize,
    pub m: usize,
    pub replicates: usize,
    pub per_j: Vec<StepMoments>,
    pub pooled_mean: f64,
    pub pooled_mean_se: f64,
    pub pooled_second_moment: f64,
    pub pooled_second_moment_se: f64,
    pub epsilon: f64,
    /// Estimated `s_n^2 = sum_j E T_j^2` with `T_j = h_j / sqrt j`.
    pub sn2: f64,
    pub lindeberg: f64,
    /// Fraction of steps whose second moment lies in `[0.8, 1.2] * target`.
    pub frac_second_moment_in_band: f64,
    pub band_target: f64,
}

fn mean_and_se(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let count = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / count;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (count - 1.0);
    (mean, (var / count).sqrt())
}

/// Pools `h_j` across replicate traces. `band_target` is the expected second
/// moment (1 for `beta = 2`, 2 for `beta = 1`).
pub fn martingale_report(traces: &[DeterminantTrace], epsilon: f64, band_target: f64) -> Result<MartingaleReport> {
    if traces.len() < 2 {
        return Err(Error::TooFewSamples { need: 2, got: traces.len() });
    }
    let (n, m) = (traces[0].n, traces[0].m);
    if let Some(t) = traces.iter().find(|t| t.n != n || t.m != m) {
        return Err(Error::ShapeMismatch(format!("trace (n={}, m={}) differs from (n={n}, m={m})", t.n, t.m)));
    }
    if n / 2 <= m {
        return Err(Error::InvalidArgument("traces contain no increments".into()));
    }
    let r = traces.len();
    let mut per_j = Vec::with_capacity(n / 2 - m);
    let mut sn2 = 0.0;
    for j in m + 1..=n / 2 {
        let hs = traces.iter().map(move |t| t.h_at(j));
        let (mean, mean_se) = mean_and_se(hs.clone());
        let (second_moment, second_moment_se) = mean_and_se(hs.map(|h| h * h));
        sn2 += second_moment / j as f64;
        per_j.push(StepMoments { j, mean, mean_se, second_moment, second_moment_se });
    }
    let all = traces.iter().flat_map(|t| t.h.iter().copied());
    let (pooled_mean, pooled_mean_se) = mean_and_se(all.clone());
    let (pooled_second_moment, pooled_second_moment_se) = mean_and_se(all.map(|h| h * h));

    let cut = epsilon * sn2.sqrt();
    let mut tail = 0.0;
    for j in m + 1..=n / 2 {
        let scale = (j as f64).sqrt();
        let sum: f64 = traces
            .iter()
            .map(|t| t.h_at(j) / scale)
            .filter(|tj| tj.abs() >= cut)
            .map(|tj| tj * tj)
            .sum();
        tail += sum / r as f64;
    }
    let in_band = per_j
        .iter()
        .filter(|s| (0.8 * band_target..=1.2 * band_target).contains(&s.second_moment))
        .count();
    Ok(MartingaleReport {
        n,
        m,
        replicates: r,
        frac_second_moment_in_band: in_band as f64 / per_j.len() as f64,
        per_j,
        pooled_mean,
        pooled_mean_se,
        pooled_second_moment,
        pooled_second_moment_se,
        epsilon,
        sn2,
        lindeberg: tail / sn2,
        band_target,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeylEstimate {
    pub k: i64,
    pub mean: Complex64,
    pub abs_mean: f64,
    /// `sqrt(s_re^2 + s_im^2) / sqrt(N)`.
    pub stderr: f64,
    pub n: usize,
}

/// Sample mean of `exp(i k theta)`.
pub fn weyl_sum(thetas: &[f64], k: i64) -> Result<WeylEstimate> {
    if k == 0 {
        return Err(Error::InvalidArgument("Weyl frequency must be nonzero".into()));
    }
    if thetas.len() < 2 {
        return Err(Error::TooFewSamples { need: 2, got: thetas.len() });
    }
    let kf = k as f64;
    let (re_mean, re_se) = mean_and_se(thetas.iter().map(|t| (kf * t).cos()));
    let (im_mean, im_se) = mean_and_se(thetas.iter().map(|t| (kf * t).sin()));
    let mean = Complex64::new(re_mean, im_mean);
    Ok(WeylEstimate { k, mean, abs_mean: mean.norm(), stderr: re_se.hypot(im_se), n: thetas.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use crate::tridiag::{logdet_trace, sample_tridiagonal};
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::{Distribution, Gamma, StandardNormal};
    use std::f64::consts::PI;

    #[test]
    fn h_value_at_axes() {
        assert_eq!(h_value(0.0, 0.3, -0.2, 1.5, 7.0), -1.5);
        assert!((h_value(PI / 2.0, 0.3, -0.2, 1.5, 7.0) + 7.0).abs() < 1e-15);
    }

    #[test]
    fn conditional_second_moment_closed_form() {
        let mut rng = rng_from_seed(3);
        for _ in 0..100 {
            let th = rng.random_range(-PI..PI);
            let (mean, m2) = h_conditional_moments(th, Beta::Two);
            assert_eq!(mean, 0.0);
            assert!((m2 - 1.0).abs() <= 4.0 * f64::EPSILON, "{m2}");
            assert!((h_conditional_moments(th, Beta::One).1 - 2.0).abs() <= 8.0 * f64::EPSILON);
        }
    }

    #[test]
    fn conditional_moments_by_sampling() {
        let mut rng = rng_from_seed(11);
        let th = 0.7;
        let i: f64 = 40.0;
        let gamma = Gamma::new(i, 1.0).unwrap();
        let gamma2 = Gamma::new(i - 1.0, 1.0).unwrap();
        let n = 200_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let a1: f64 = StandardNormal.sample(&mut rng);
            let a2: f64 = StandardNormal.sample(&mut rng);
            let c1 = (gamma.sample(&mut rng) - i) / i.sqrt();
            let c2 = (gamma2.sample(&mut rng) - (i - 1.0)) / (i - 1.0).sqrt();
            let h = h_value(th, a2, a1, c1, c2);
            s1 += h;
            s2 += h * h;
        }
        let mean = s1 / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt());
        assert!((var - 1.0).abs() < 0.02, "{var}");
    }

    #[test]
    fn telescoping_on_traces() {
        let mut rng = rng_from_seed(5);
        let t = sample_tridiagonal(1024, Beta::Two, &mut rng).unwrap();
        let tr = logdet_trace(&t, 2).unwrap();
        assert!(telescoping_check(&tr) < 1e-12);
        let t = sample_tridiagonal(6, Beta::Two, &mut rng).unwrap();
        assert_eq!(telescoping_check(&logdet_trace(&t, 2).unwrap()), 0.0);
    }

    fn synthetic(n: usize, m: usize, seed: u64) -> DeterminantTrace {
        let mut rng = rng_from_seed(seed);
        let len = n / 2 - m + 1;
        DeterminantTrace {
            n,
            m,
            log_f: vec![0.0; len],
            theta: vec![0.0; len],
            h: (0..len - 1).map(|_| rng.sample(StandardNormal)).collect(),
            log_abs_dn: 0.0,
            sign_n: 1,
            log_abs_en: 0.0,
        }
    }

    #[test]
    fn report_on_iid_normal_increments() {
        let traces: Vec<_> = (0..200).map(|s| synthetic(64, 2, s)).collect();
        let rep = martingale_report(&traces, 0.1, 1.0).unwrap();
        assert!(rep.pooled_mean.abs() < 3.0 * rep.pooled_mean_se);
        assert!((rep.pooled_second_moment - 1.0).abs() < 3.0 * rep.pooled_second_moment_se);
        assert!(rep.per_j.iter().all(|s| s.mean_se >= 0.0));
        assert_eq!(rep.per_j.len(), 30);

        let mut bad = traces[..2].to_vec();
        bad.push(synthetic(32, 2, 9));
        assert!(matches!(martingale_report(&bad, 0.1, 1.0), Err(Error::ShapeMismatch(_))));
        assert!(martingale_report(&traces[..1], 0.1, 1.0).is_err());
    }

    #[test]
    fn weyl_sums() {
        let w = weyl_sum(&[0.0; 10], 3).unwrap();
        assert_eq!(w.mean, Complex64::new(1.0, 0.0));
        assert!(weyl_sum(&[0.0; 10], 0).is_err());
        let mut rng = rng_from_seed(1);
        let th: Vec<f64> = (0..10_000).map(|_| rng.random_range(-PI..PI)).collect();
        let w = weyl_sum(&th, 1).unwrap();
        assert!(w.abs_mean <= 3.0 / 100.0 + 0.01);
    }

    #[test]
    fn sn2_tracks_log() {
        for p in 2..=20 {
            let n = 1usize << p;
            let m = crate::tridiag::default_start_index(n);
            let s = sn2_proxy(n, m);
            assert!((s - (n as f64 / 2.0).ln() + (m as f64).ln()).abs() <= 2.0);
        }
    }

    proptest! {
        #[test]
        fn h_value_pi_periodic(th in -10.0f64..10.0, a in -3.0f64..3.0, b in -3.0f64..3.0,
                               c1 in -3.0f64..3.0, c2 in -3.0f64..3.0) {
            prop_assert!((h_value(th, a, b, c1, c2) - h_value(th + PI, a, b, c1, c2)).abs() < 1e-12);
        }
    }
}
