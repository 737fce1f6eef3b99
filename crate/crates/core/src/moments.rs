//! Exact determinant moments from the Leibniz expansion, with brute-force
//! enumeration and Monte Carlo cross-checks.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::dense::{log_factorial, logdet_hermitian};
use crate::ensembles::{sample_hermitian, EnsembleKind, EnsembleSpec};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from_seed};
use crate::tridiag::{sample_tridiagonal, Beta};

/// Largest `n` for the double enumeration over `S_n x S_n`.
pub const PAIR_ENUMERATION_MAX: usize = 7;
/// Largest `n` for single enumerations over `S_n`.
pub const SINGLE_ENUMERATION_MAX: usize = 8;
const MASK_BITS: usize = 128;

/// A bijection of `{0, .., n-1}`. Displayed and constructed 1-indexed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self { images: (0..n).collect() }
    }

    /// From 1-indexed images `p(1), .., p(n)`.
    pub fn from_images(images: &[usize]) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        let mut out = Vec::with_capacity(n);
        for &v in images {
            if v == 0 || v > n || seen[v - 1] {
                return Err(Error::InvalidArgument(format!("{images:?} is not a permutation of 1..={n}")));
            }
            seen[v - 1] = true;
            out.push(v - 1);
        }
        Ok(Self { images: out })
    }

    /// From disjoint 1-indexed cycles; unlisted points are fixed.
    pub fn from_cycles(n: usize, cycles: &[&[usize]]) -> Result<Self> {
        let mut images: Vec<usize> = (1..=n).collect();
        let mut used = vec![false; n];
        for cyc in cycles {
            for (k, &a) in cyc.iter().enumerate() {
                if a == 0 || a > n || used[a - 1] {
                    return Err(Error::InvalidArgument(format!("bad cycle {cyc:?} for n = {n}")));
                }
                used[a - 1] = true;
                images[a - 1] = cyc[(k + 1) % cyc.len()];
            }
        }
        Self::from_images(&images)
    }

    pub fn n(&self) -> usize {
        self.images.len()
    }

    /// 0-indexed image of the 0-indexed point `i`.
    pub fn apply(&self, i: usize) -> usize {
        self.images[i]
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.n()];
        for (i, &v) in self.images.iter().enumerate() {
            inv[v] = i;
        }
        Self { images: inv }
    }

    /// Disjoint cycles (0-indexed), each starting at its smallest point,
    /// ordered by that point.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n()];
        let mut out = Vec::new();
        for start in 0..self.n() {
            if seen[start] {
                continue;
            }
            let mut cyc = vec![start];
            seen[start] = true;
            let mut i = self.images[start];
            while i != start {
                seen[i] = true;
                cyc.push(i);
                i = self.images[i];
            }
            out.push(cyc);
        }
        out
    }

    pub fn cycle_type(&self) -> CycleType {
        let mut counts = vec![0; self.n()];
        for c in self.cycles() {
            counts[c.len() - 1] += 1;
        }
        CycleType { counts }
    }

    pub fn sign(&self) -> i8 {
        let transpositions: usize = self.cycles().iter().map(|c| c.len() - 1).sum();
        if transpositions.is_multiple_of(2) {
            1
        } else {
            -1
        }
    }

    /// All of `S_n` in lexicographic order.
    pub fn all(n: usize) -> Vec<Permutation> {
        let mut p: Vec<usize> = (0..n).collect();
        let mut out = vec![Self { images: p.clone() }];
        loop {
            let Some(i) = (1..n).rev().find(|&i| p[i - 1] < p[i]) else {
                return out;
            };
            let j = (i..n).rev().find(|&j| p[j] > p[i - 1]).expect("pivot has a successor");
            p.swap(i - 1, j);
            p[i..].reverse();
            out.push(Self { images: p.clone() });
        }
    }
}

impl fmt::Display for Permutation {
    /// Cycle notation with 1-indexed points, fixed points omitted.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let long: Vec<_> = self.cycles().into_iter().filter(|c| c.len() > 1).collect();
        if long.is_empty() {
            return write!(f, "()");
        }
        for c in long {
            let pts: Vec<String> = c.iter().map(|i| (i + 1).to_string()).collect();
            write!(f, "({})", pts.join(" "))?;
        }
        Ok(())
    }
}

/// `counts[k-1] = C_k`, the number of `k`-cycles.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CycleType {
    pub counts: Vec<usize>,
}

impl CycleType {
    pub fn c(&self, k: usize) -> usize {
        self.counts.get(k - 1).copied().unwrap_or(0)
    }

    pub fn n(&self) -> usize {
        self.counts.iter().enumerate().map(|(i, c)| (i + 1) * c).sum()
    }

    /// Number of cycles of length at least 3.
    pub fn long_cycles(&self) -> usize {
        self.counts.iter().skip(2).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymmetryClass {
    Goe,
    Gue,
}

impl SymmetryClass {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "goe" => Ok(Self::Goe),
            "gue" => Ok(Self::Gue),
            other => Err(Error::InvalidArgument(format!("unknown class `{other}`; expected goe or gue"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Goe => "goe",
            Self::Gue => "gue",
        }
    }

    pub fn beta(self) -> Beta {
        match self {
            Self::Goe => Beta::One,
            Self::Gue => Beta::Two,
        }
    }
}

/// Cycle data precomputed once per permutation for repeated pair evaluation.
#[derive(Debug, Clone)]
struct Signature {
    images: Vec<usize>,
    inverse: Vec<usize>,
    fixed: u128,
    two_support: u128,
    long: Vec<Vec<usize>>,
    sign: i8,
    c1: u32,
}

impl Signature {
    fn new(p: &Permutation) -> Self {
        let (mut fixed, mut two_support, mut long) = (0u128, 0u128, Vec::new());
        for c in p.cycles() {
            match c.len() {
                1 => fixed |= 1 << c[0],
                2 => two_support |= (1 << c[0]) | (1 << c[1]),
                _ => long.push(c),
            }
        }
        Self {
            images: p.images.clone(),
            inverse: p.inverse().images,
            fixed,
            two_support,
            long,
            sign: p.sign(),
            c1: fixed.count_ones(),
        }
    }
}

/// Signed `E[I_sigma conj(I_rho)]` from the cycle rules; both signatures must
/// have the same `n`.
fn pair_value(s: &Signature, r: &Signature, class: SymmetryClass) -> i128 {
    if s.fixed != r.fixed || s.two_support != r.two_support {
        return 0;
    }
    for cyc in &s.long {
        let forward = cyc.iter().all(|&a| r.images[a] == s.images[a]);
        let reversed = class == SymmetryClass::Goe && cyc.iter().all(|&a| r.images[a] == s.inverse[a]);
        if !(forward || reversed) {
            return 0;
        }
    }
    let mut common_two = 0u32;
    let mut mask = s.two_support;
    while mask != 0 {
        let a = mask.trailing_zeros() as usize;
        mask &= mask - 1;
        if s.images[a] == r.images[a] {
            common_two += 1;
        }
    }
    let c = common_two / 2;
    let magnitude: i128 = match class {
        SymmetryClass::Goe => (1i128 << s.c1) * 3i128.pow(c),
        SymmetryClass::Gue => 1i128 << c,
    };
    i128::from(s.sign * r.sign) * magnitude
}

fn check_mask_size(n: usize) -> Result<()> {
    if n > MASK_BITS {
        return Err(Error::SizeTooLarge { n, max: MASK_BITS });
    }
    Ok(())
}

/// `E[I_sigma conj(I_rho)]` with `I_sigma = sgn(sigma) prod_i zeta_{i sigma(i)}`.
///
/// GOE: every cycle of length other than 2 must occur in the other permutation
/// up to reversal, the supports of the 2-cycles must agree, and the value is
/// `2^{C_1} 3^c` with `c` the number of shared 2-cycles. GUE: long cycles must
/// occur exactly and the value is `2^c`.
pub fn pair_expectation(sigma: &Permutation, rho: &Permutation, class: SymmetryClass) -> Result<BigInt> {
    if sigma.n() != rho.n() {
        return Err(Error::ShapeMismatch(format!("permutations of {} and {} points", sigma.n(), rho.n())));
    }
    check_mask_size(sigma.n())?;
    Ok(BigInt::from(pair_value(&Signature::new(sigma), &Signature::new(rho), class)))
}

/// `E[I_sigma]`: nonzero exactly for fixed-point-free involutions, where every
/// factor is `E|zeta_ij|^2 = 1`.
pub fn single_expectation(sigma: &Permutation) -> i64 {
    if sigma.cycles().iter().all(|c| c.len() == 2) {
        i64::from(sigma.sign())
    } else {
        0
    }
}

fn factorial(n: usize) -> BigInt {
    (2..=n).fold(BigInt::one(), |acc, k| acc * k)
}

fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// `(2m - 1)!!`, with the empty product for `m = 0`.
fn odd_double_factorial(m: usize) -> BigInt {
    (1..=m).fold(BigInt::one(), |acc, k| acc * (2 * k - 1))
}

/// Perfect matchings of `n` points: `n! / ((n/2)! 2^{n/2})`, zero for odd `n`.
pub fn perfect_matching_count(n: usize) -> BigInt {
    if n % 2 == 1 {
        BigInt::zero()
    } else {
        odd_double_factorial(n / 2)
    }
}

pub fn first_moment_exact(n: usize) -> BigInt {
    let count = perfect_matching_count(n);
    if n % 4 == 2 {
        -count
    } else {
        count
    }
}

/// Sum of [`single_expectation`] over `S_n`.
pub fn first_moment_bruteforce(n: usize) -> Result<BigInt> {
    if n > SINGLE_ENUMERATION_MAX {
        return Err(Error::SizeTooLarge { n, max: SINGLE_ENUMERATION_MAX });
    }
    Ok(BigInt::from(Permutation::all(n).iter().map(single_expectation).sum::<i64>()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentOrder {
    First,
    Second,
}

impl MomentOrder {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(Self::First),
            "second" => Ok(Self::Second),
            other => Err(Error::InvalidArgument(format!("unknown moment `{other}`; expected first or second"))),
        }
    }
}

fn bigint_as_string<S: Serializer>(v: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactMoment {
    #[serde(serialize_with = "bigint_as_string")]
    pub value: BigInt,
    pub n: usize,
    pub which: MomentOrder,
    pub class: SymmetryClass,
}

/// `E|det M_n|^2` as the full double sum of [`pair_expectation`] over `S_n x S_n`.
pub fn second_moment_bruteforce(n: usize, class: SymmetryClass) -> Result<ExactMoment> {
    if n > PAIR_ENUMERATION_MAX {
        return Err(Error::SizeTooLarge { n, max: PAIR_ENUMERATION_MAX });
    }
    let sigs: Vec<Signature> = Permutation::all(n).iter().map(Signature::new).collect();
    // Split by sigma; exact integer partial sums are merged in index order.
    let rows: Vec<i128> = sigs
        .par_iter()
        .map(|s| sigs.iter().map(|r| pair_value(s, r, class)).sum())
        .collect();
    Ok(ExactMoment { value: BigInt::from(rows.into_iter().sum::<i128>()), n, which: MomentOrder::Second, class })
}

/// `E|det|^2` for the tridiagonal model, which has the law of the dense
/// ensemble's determinant:
/// `E D_i^2 = (2/beta) E D_{i-1}^2 + E b_{i-1}^4 E D_{i-2}^2`,
/// with `E b_k^4 = k(k+1)` for `beta = 2` and `k(k+2)` for `beta = 1`.
pub fn second_moment_recursion(n: usize, class: SymmetryClass) -> BigInt {
    let (mut prev, mut cur) = (BigInt::zero(), BigInt::one());
    for i in 1..=n {
        let k = i - 1;
        let (a2, b4) = match class {
            SymmetryClass::Gue => (1usize, k * (k + 1)),
            SymmetryClass::Goe => (2, k * (k + 2)),
        };
        let next = &cur * a2 + &prev * b4;
        prev = cur;
        cur = next;
    }
    cur
}

/// `(enumerated, formula)` counts of `rho` with nonzero pair expectation.
pub fn compatible_count(sigma: &Permutation, class: SymmetryClass) -> Result<(u64, u64)> {
    let n = sigma.n();
    if n > SINGLE_ENUMERATION_MAX {
        return Err(Error::SizeTooLarge { n, max: SINGLE_ENUMERATION_MAX });
    }
    let s = Signature::new(sigma);
    let rhos: Vec<Signature> = Permutation::all(n).iter().map(Signature::new).collect();
    Ok((count_compatible(&s, &rhos, class), compatible_formula(&sigma.cycle_type(), class)))
}

fn count_compatible(s: &Signature, rhos: &[Signature], class: SymmetryClass) -> u64 {
    rhos.iter().filter(|r| pair_value(s, r, class) != 0).count() as u64
}

/// [`compatible_count`] for every `sigma` in `S_n`, in lexicographic order.
pub fn compatible_counts_all(n: usize, class: SymmetryClass) -> Result<Vec<(Permutation, u64, u64)>> {
    if n > PAIR_ENUMERATION_MAX {
        return Err(Error::SizeTooLarge { n, max: PAIR_ENUMERATION_MAX });
    }
    let perms = Permutation::all(n);
    let sigs: Vec<Signature> = perms.iter().map(Signature::new).collect();
    Ok(perms
        .into_par_iter()
        .zip(sigs.par_iter())
        .map(|(p, s)| {
            let formula = compatible_formula(&p.cycle_type(), class);
            (p, count_compatible(s, &sigs, class), formula)
        })
        .collect())
}

/// `(2 C_2)! / (C_2! 2^{C_2})`, times `prod_{k>=3} 2^{C_k}` for GOE.
pub fn compatible_formula(ct: &CycleType, class: SymmetryClass) -> u64 {
    let matchings = (1..=ct.c(2) as u64).fold(1u64, |acc, k| acc * (2 * k - 1));
    match class {
        SymmetryClass::Goe => matchings << ct.long_cycles(),
        SymmetryClass::Gue => matchings,
    }
}

/// Upper bound for `sum_rho E[I_sigma conj(I_rho)]` (GOE) obtained by counting
/// every matching of the 2-cycle support:
/// `2^{C_1} sum_c 3^c binom(C_2, c) (2(C_2-c))!/((C_2-c)! 2^{C_2-c}) prod_{k>=3} 2^{C_k}`.
pub fn row_sum_bound(ct: &CycleType) -> BigInt {
    let c2 = ct.c(2);
    let inner: BigInt = (0..=c2)
        .map(|c| BigInt::from(3).pow(c as u32) * binomial(c2, c) * odd_double_factorial(c2 - c))
        .sum();
    (BigInt::one() << (ct.c(1) + ct.long_cycles())) * inner
}

/// Matchings of `2m` points sharing no pair with a fixed perfect matching:
/// `sum_k (-1)^k binom(m, k) (2(m-k)-1)!!`.
pub fn avoiding_matchings(m: usize) -> BigInt {
    (0..=m)
        .map(|k| {
            let term = binomial(m, k) * odd_double_factorial(m - k);
            if k % 2 == 0 {
                term
            } else {
                -term
            }
        })
        .sum()
}

/// Exact `sum_rho E[I_sigma conj(I_rho)]` (GOE): the shared 2-cycles are chosen
/// first and the remaining support must be re-matched without reusing a pair.
pub fn row_sum_exact(ct: &CycleType) -> BigInt {
    let c2 = ct.c(2);
    let inner: BigInt = (0..=c2)
        .map(|c| BigInt::from(3).pow(c as u32) * binomial(c2, c) * avoiding_matchings(c2 - c))
        .sum();
    (BigInt::one() << (ct.c(1) + ct.long_cycles())) * inner
}

/// `sum_rho E[I_sigma conj(I_rho)]` by enumeration.
pub fn row_sum_enumerated(sigma: &Permutation, class: SymmetryClass) -> Result<BigInt> {
    let n = sigma.n();
    if n > SINGLE_ENUMERATION_MAX {
        return Err(Error::SizeTooLarge { n, max: SINGLE_ENUMERATION_MAX });
    }
    let s = Signature::new(sigma);
    Ok(BigInt::from(Permutation::all(n).iter().map(|r| pair_value(&s, &Signature::new(r), class)).sum::<i128>()))
}

/// `E[I_sigma I_rho]` for iid real `N(0,1)` entries: the product of
/// `E zeta^m = (m-1)!!` over the multiplicities of the ordered entries.
pub fn iid_pair_expectation(sigma: &Permutation, rho: &Permutation) -> Result<BigInt> {
    if sigma.n() != rho.n() {
        return Err(Error::ShapeMismatch(format!("permutations of {} and {} points", sigma.n(), rho.n())));
    }
    Ok(BigInt::from(iid_pair_value(sigma, rho)))
}

/// Entries `(i, sigma(i))` and `(i, rho(i))` share row `i` only, so each row
/// contributes `E zeta^2 = 1` when the two coincide and `E zeta = 0` otherwise.
fn iid_pair_value(sigma: &Permutation, rho: &Permutation) -> i64 {
    if (0..sigma.n()).all(|i| sigma.apply(i) == rho.apply(i)) {
        i64::from(sigma.sign() * rho.sign())
    } else {
        0
    }
}

/// `(sum_{sigma, rho} E[I_sigma I_rho], n!)` for the iid model.
pub fn turan_check(n: usize) -> Result<(BigInt, BigInt)> {
    if n > PAIR_ENUMERATION_MAX {
        return Err(Error::SizeTooLarge { n, max: PAIR_ENUMERATION_MAX });
    }
    let perms = Permutation::all(n);
    let total: i64 = perms.par_iter().map(|s| perms.iter().map(|r| iid_pair_value(s, r)).sum::<i64>()).sum();
    Ok((BigInt::from(total), factorial(n)))
}

/// `|E det| / (n^{-1/4} sqrt(n!))` evaluated in log space; tends to `(2/pi)^{1/4}`.
pub fn stirling_ratio(n: usize) -> f64 {
    if n % 2 == 1 {
        return 0.0;
    }
    let nu = n as u64;
    let log_matchings = log_factorial(nu) - log_factorial(nu / 2) - (n / 2) as f64 * std::f64::consts::LN_2;
    (log_matchings + 0.25 * (n as f64).ln() - 0.5 * log_factorial(nu)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingPath {
    Dense,
    Tridiagonal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McMoment {
    /// Estimate of `E[X] / exp(log_scale)`.
    pub estimate: f64,
    pub stderr: f64,
    pub log_scale: f64,
    pub n: usize,
    pub replicates: usize,
    pub path: SamplingPath,
}

/// Monte Carlo estimate of `E det` or `E|det|^2`, divided by `exp(log_scale)`.
/// Replicate `r` uses `derive_seed(seed, r)`. The tridiagonal path is available
/// for `gue` and `goe`.
pub fn moment_mc(
    spec: &EnsembleSpec,
    n: usize,
    which: MomentOrder,
    replicates: usize,
    seed: u64,
    path: SamplingPath,
    log_scale: f64,
) -> Result<McMoment> {
    if replicates < 2 {
        return Err(Error::TooFewSamples { need: 2, got: replicates });
    }
    let beta = match path {
        SamplingPath::Dense => None,
        SamplingPath::Tridiagonal => match spec.label.parse::<EnsembleKind>() {
            Ok(EnsembleKind::Gue) => Some(Beta::Two),
            Ok(EnsembleKind::Goe) => Some(Beta::One),
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "tridiagonal sampling needs gue or goe, got `{}`",
                    spec.label
                )))
            }
        },
    };
    let draws: Vec<(f64, i8)> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let s = derive_seed(seed, r);
            match beta {
                Some(b) => {
                    let mut rng = rng_from_seed(s);
                    Ok(sample_tridiagonal(n, b, &mut rng)?.logdet())
                }
                None => {
                    let d = logdet_hermitian(&sample_hermitian(spec, n, s)?);
                    Ok((d.log_abs, d.sign))
                }
            }
        })
        .collect::<Result<_>>()?;
    let values: Vec<f64> = draws
        .iter()
        .map(|&(log_abs, sign)| match which {
            MomentOrder::First => f64::from(sign) * (log_abs - log_scale).exp(),
            MomentOrder::Second if sign == 0 => 0.0,
            MomentOrder::Second => (2.0 * log_abs - log_scale).exp(),
        })
        .collect();
    let count = values.len() as f64;
    let mean = values.iter().sum::<f64>() / count;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (count - 1.0);
    Ok(McMoment { estimate: mean, stderr: (var / count).sqrt(), log_scale, n, replicates, path })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::make_ensemble;
    use proptest::prelude::*;
    use std::collections::HashMap;

    fn cyc(n: usize, cycles: &[&[usize]]) -> Permutation {
        Permutation::from_cycles(n, cycles).unwrap()
    }

    /// Independent oracle: Gaussian moments of the entry multiplicities.
    fn wick(sigma: &Permutation, rho: &Permutation, class: SymmetryClass) -> i128 {
        let n = sigma.n();
        // (i, j) with i < j -> (count of zeta_ij, count of conj zeta_ij); diagonal counts.
        let mut off: HashMap<(usize, usize), (u32, u32)> = HashMap::new();
        let mut diag = vec![0u32; n];
        let mut push = |i: usize, j: usize, conj: bool| {
            if i == j {
                diag[i] += 1;
                return;
            }
            let upper = i < j;
            let e = off.entry((i.min(j), i.max(j))).or_default();
            if upper != conj {
                e.0 += 1;
            } else {
                e.1 += 1;
            }
        };
        for i in 0..n {
            push(i, sigma.apply(i), false);
            push(i, rho.apply(i), true);
        }
        let dfact = |m: u32| -> i128 { (1..=m as i128).filter(|k| k % 2 == 1).product() };
        let mut v: i128 = 1;
        for &(p, q) in off.values() {
            v *= match class {
                SymmetryClass::Goe if (p + q) % 2 == 0 => dfact(p + q - 1),
                SymmetryClass::Gue if p == q => (1..=p as i128).product(),
                _ => 0,
            };
        }
        for &d in &diag {
            v *= match (class, d % 2) {
                (_, 1) => 0,
                (SymmetryClass::Goe, _) => (1i128 << (d / 2)) * dfact(d.saturating_sub(1)),
                (SymmetryClass::Gue, _) => dfact(d.saturating_sub(1)),
            };
        }
        i128::from(sigma.sign() * rho.sign()) * v
    }

    #[test]
    fn cycle_types() {
        assert_eq!(Permutation::identity(4).cycle_type().c(1), 4);
        assert_eq!(cyc(2, &[&[1, 2]]).cycle_type().c(2), 1);
        let ct = cyc(3, &[&[1, 2, 3]]).cycle_type();
        assert_eq!((ct.c(1), ct.c(3), ct.n()), (0, 1, 3));
        assert_eq!(cyc(5, &[&[1, 3], &[2, 4, 5]]).to_string(), "(1 3)(2 4 5)");
        assert!(Permutation::from_images(&[1, 1]).is_err());
        assert_eq!(Permutation::all(5).len(), 120);
    }

    #[test]
    fn pair_expectation_examples() {
        let id2 = Permutation::identity(2);
        let t = cyc(2, &[&[1, 2]]);
        assert_eq!(pair_expectation(&id2, &id2, SymmetryClass::Goe).unwrap(), BigInt::from(4));
        assert_eq!(pair_expectation(&t, &t, SymmetryClass::Goe).unwrap(), BigInt::from(3));
        let c = cyc(3, &[&[1, 2, 3]]);
        let c_rev = cyc(3, &[&[1, 3, 2]]);
        assert_eq!(pair_expectation(&c, &c_rev, SymmetryClass::Gue).unwrap(), BigInt::zero());
        assert_eq!(pair_expectation(&c, &c_rev, SymmetryClass::Goe).unwrap(), BigInt::one());
        assert!(pair_expectation(&c, &id2, SymmetryClass::Goe).is_err());
    }

    #[test]
    fn rules_agree_with_wick_oracle() {
        for n in 1..=5 {
            let perms = Permutation::all(n);
            for s in &perms {
                for r in &perms {
                    for class in [SymmetryClass::Goe, SymmetryClass::Gue] {
                        let rule = pair_value(&Signature::new(s), &Signature::new(r), class);
                        assert_eq!(rule, wick(s, r, class), "{s} {r} {class:?}");
                        assert!(rule >= 0);
                    }
                }
            }
        }
    }

    #[test]
    fn matchings_and_first_moment() {
        let counts: Vec<BigInt> = [2, 4, 6, 3].iter().map(|&n| perfect_matching_count(n)).collect();
        assert_eq!(counts, vec![1.into(), 3.into(), 15.into(), BigInt::zero()]);
        assert_eq!(first_moment_exact(3), BigInt::zero());
        assert_eq!(first_moment_exact(2), BigInt::from(-1));
        assert_eq!(first_moment_exact(4), BigInt::from(3));
        for n in 0..=8 {
            assert_eq!(first_moment_bruteforce(n).unwrap(), first_moment_exact(n));
        }
        assert!(first_moment_bruteforce(9).is_err());
    }

    #[test]
    fn second_moment_small_cases() {
        let v = |n, c| second_moment_bruteforce(n, c).unwrap().value;
        assert_eq!(v(2, SymmetryClass::Goe), BigInt::from(7));
        assert_eq!(v(2, SymmetryClass::Gue), BigInt::from(3));
        assert_eq!(v(1, SymmetryClass::Goe), BigInt::from(2));
        assert!(second_moment_bruteforce(8, SymmetryClass::Goe).is_err());
        for n in 0..=6 {
            for class in [SymmetryClass::Goe, SymmetryClass::Gue] {
                assert_eq!(v(n, class), second_moment_recursion(n, class), "n={n} {class:?}");
            }
        }
    }

    #[test]
    fn compatible_counts() {
        let s = cyc(4, &[&[1, 2], &[3, 4]]);
        assert_eq!(compatible_count(&s, SymmetryClass::Goe).unwrap(), (3, 3));
        assert_eq!(compatible_count(&Permutation::identity(3), SymmetryClass::Goe).unwrap(), (1, 1));
        assert_eq!(compatible_count(&cyc(3, &[&[1, 2, 3]]), SymmetryClass::Goe).unwrap(), (2, 2));
        for class in [SymmetryClass::Goe, SymmetryClass::Gue] {
            for (p, e, f) in compatible_counts_all(6, class).unwrap() {
                assert_eq!(e, f, "{p}");
            }
        }
        let s = cyc(5, &[&[1, 4], &[2, 3, 5]]);
        let all = compatible_counts_all(5, SymmetryClass::Goe).unwrap();
        let row = all.iter().find(|(p, _, _)| *p == s).unwrap();
        assert_eq!((row.1, row.2), compatible_count(&s, SymmetryClass::Goe).unwrap());
    }

    #[test]
    fn row_sums() {
        assert_eq!(avoiding_matchings(0), BigInt::one());
        assert_eq!(avoiding_matchings(1), BigInt::zero());
        assert_eq!(avoiding_matchings(2), BigInt::from(2));
        let s = cyc(4, &[&[1, 2], &[3, 4]]);
        assert_eq!(row_sum_enumerated(&s, SymmetryClass::Goe).unwrap(), BigInt::from(11));
        assert_eq!(row_sum_bound(&s.cycle_type()), BigInt::from(18));
        for n in 1..=6 {
            for p in Permutation::all(n) {
                let got = row_sum_enumerated(&p, SymmetryClass::Goe).unwrap();
                assert_eq!(got, row_sum_exact(&p.cycle_type()), "{p}");
                assert!(got <= row_sum_bound(&p.cycle_type()));
            }
        }
    }

    #[test]
    fn iid_rule_matches_entry_multiplicities() {
        for n in 1..=4 {
            let perms = Permutation::all(n);
            for s in &perms {
                for r in &perms {
                    let mut mult = HashMap::new();
                    for i in 0..n {
                        *mult.entry((i, s.apply(i))).or_insert(0u32) += 1;
                        *mult.entry((i, r.apply(i))).or_insert(0u32) += 1;
                    }
                    // E zeta^2 = 1 and E zeta = 0 for N(0,1) entries.
                    let v = if mult.values().all(|&m| m == 2) { i64::from(s.sign() * r.sign()) } else { 0 };
                    assert_eq!(iid_pair_expectation(s, r).unwrap(), BigInt::from(v));
                }
            }
        }
    }

    #[test]
    fn turan() {
        for (n, f) in [(1, 1), (3, 6), (6, 720)] {
            let (v, r) = turan_check(n).unwrap();
            assert_eq!((v.clone(), r), (BigInt::from(f), BigInt::from(f)));
        }
    }

    #[test]
    fn stirling_limit() {
        let limit = (2.0 / std::f64::consts::PI).powf(0.25);
        let mut prev = f64::INFINITY;
        for n in (2..=400).step_by(2) {
            let gap = (stirling_ratio(n) - limit).abs();
            assert!(gap < prev, "n={n}");
            prev = gap;
        }
        assert!(prev / limit < 0.01);
        assert_eq!(stirling_ratio(7), 0.0);
    }

    #[test]
    fn monte_carlo_small_n() {
        let goe = make_ensemble(EnsembleKind::Goe);
        let m = moment_mc(&goe, 4, MomentOrder::First, 20_000, 1, SamplingPath::Dense, 0.0).unwrap();
        assert!((m.estimate - 3.0).abs() < 3.0 * m.stderr, "{m:?}");
        let m = moment_mc(&goe, 3, MomentOrder::Second, 20_000, 2, SamplingPath::Tridiagonal, 0.0).unwrap();
        let exact = second_moment_recursion(3, SymmetryClass::Goe).to_string().parse::<f64>().unwrap();
        assert!((m.estimate - exact).abs() < 3.0 * m.stderr, "{m:?} vs {exact}");
        let bern = make_ensemble(EnsembleKind::BernoulliSymmetric);
        assert!(moment_mc(&bern, 4, MomentOrder::First, 10, 0, SamplingPath::Tridiagonal, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn pair_expectation_symmetric(a in 0usize..720, b in 0usize..720) {
            let perms = Permutation::all(6);
            for class in [SymmetryClass::Goe, SymmetryClass::Gue] {
                prop_assert_eq!(
                    pair_expectation(&perms[a], &perms[b], class).unwrap(),
                    pair_expectation(&perms[b], &perms[a], class).unwrap()
                );
            }
        }
    }
}
