//! Configured experiment runs and their JSON reports.
//!
//! Replicate `r` of every Monte Carlo run draws from `derive_seed(seed, r)`.
//! Replicates are computed on a worker pool and collected in index order, so a
//! report does not depend on the number of workers.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::decomposition::{martingale_report, sn2_proxy, telescoping_check, weyl_sum};
use crate::dense::{logdet_hermitian, logdet_lu, standardize_all, Law};
use crate::ensembles::{ensemble_by_name, sample_matrix, EnsembleKind, EnsembleSpec, Family, RandomMatrix};
use crate::error::{Error, Result};
use crate::moments::{
    first_moment_exact, moment_mc, second_moment_bruteforce, second_moment_recursion, MomentOrder, SamplingPath,
    SymmetryClass, PAIR_ENUMERATION_MAX,
};
use crate::resolvent::{
    coefficient_envelope, expansion_remainder_probe, ftc_logdet_identity, neumann_sum, opnorm, resolvent,
    resolvent_identity_residual, swap_logdets, swap_statistic, ElementaryMatrix, NormPair, TestFunction,
};
use crate::seed::{derive_seed, rng_from_seed};
use crate::stats::{ks_one_sample, ks_two_sample, summary, Reference};
use crate::tridiag::{default_start_index, logdet_trace, sample_tridiagonal, Beta, DeterminantTrace};

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Clt,
    TrotterCheck,
    Moments,
    Phase,
    Martingale,
    Resolvent,
    Ftc,
    Swap,
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Statistic {
    /// `log|det M_n|`
    Logdet,
    /// `(log F_{n/2} + (1/2) log n) / sqrt(2 log n)`
    LogF,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub ensemble: String,
    /// Second ensemble of a swap run.
    pub ensemble_b: Option<String>,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    pub law: Option<Law>,
    pub beta: Option<u32>,
    pub class: Option<SymmetryClass>,
    pub moment: MomentOrder,
    pub path: Option<SamplingPath>,
    pub statistic: Statistic,
    pub z0: Complex64,
    /// Expansion order for resolvent probes.
    pub k: usize,
    /// Perturbation size for resolvent probes.
    pub t: f64,
    /// Weyl frequencies for phase runs.
    pub frequencies: Vec<i64>,
    /// First pair index of traces; `floor(log log log n)` when absent.
    pub start_index: Option<usize>,
    pub epsilon: f64,
    pub test_function: Option<TestFunction>,
    /// Upper integration limit for the log-determinant identity.
    pub top: Option<f64>,
    pub tolerance: Option<f64>,
    pub format: OutputFormat,
    /// 0 selects the default pool size.
    pub workers: usize,
    pub records: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            command: Command::Clt,
            ensemble: "gue".into(),
            ensemble_b: None,
            n: 64,
            replicates: 100,
            seed: 0,
            law: None,
            beta: None,
            class: None,
            moment: MomentOrder::Second,
            path: None,
            statistic: Statistic::Logdet,
            z0: Complex64::new(0.0, 0.0),
            k: 4,
            t: 0.5,
            frequencies: vec![1, 2, 3],
            start_index: None,
            epsilon: 0.1,
            test_function: None,
            top: None,
            tolerance: None,
            format: OutputFormat::Json,
            workers: 0,
            records: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidArgument("replicates must be at least 1".into()));
        }
        ensemble_by_name(&self.ensemble)?;
        if let Some(b) = &self.ensemble_b {
            ensemble_by_name(b)?;
        }
        if let Some(b) = self.beta {
            Beta::from_int(b)?;
        }
        Ok(())
    }

    fn spec(&self) -> Result<EnsembleSpec> {
        ensemble_by_name(&self.ensemble)
    }

    /// Dyson index from `beta`, else from a `gue`/`goe` ensemble.
    fn resolved_beta(&self) -> Result<Beta> {
        if let Some(b) = self.beta {
            return Beta::from_int(b);
        }
        match self.ensemble.parse::<EnsembleKind>()? {
            EnsembleKind::Gue => Ok(Beta::Two),
            EnsembleKind::Goe => Ok(Beta::One),
            other => Err(Error::InvalidArgument(format!("no tridiagonal model for `{}`; pass beta", other.as_str()))),
        }
    }

    fn resolved_law(&self, spec: &EnsembleSpec) -> Law {
        self.law.unwrap_or(match (spec.family, spec.is_real()) {
            (Family::WignerHermitian, false) => Law::Gue,
            (Family::WignerHermitian, true) => Law::Goe,
            (Family::IidSquare, true) => Law::IidReal,
            (Family::IidSquare, false) => Law::IidComplex,
        })
    }

    fn start_index(&self) -> usize {
        self.start_index.unwrap_or_else(|| default_start_index(self.n))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: ExperimentConfig,
    pub summary: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub records: Option<Value>,
    /// `Some(false)` when a checked residual exceeded its tolerance.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub within_tolerance: Option<bool>,
    /// CSV body for table outputs.
    #[serde(skip)]
    pub csv: Option<String>,
}

impl Report {
    /// Pretty JSON with keys in sorted order.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("report is serializable");
        serde_json::to_string_pretty(&value).expect("value is serializable") + "\n"
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report fields are serializable")
}

/// `log|det|` of `replicates` tridiagonal draws.
pub fn tridiagonal_logdets(n: usize, beta: Beta, replicates: usize, seed: u64) -> Result<Vec<f64>> {
    (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_from_seed(derive_seed(seed, r));
            Ok(sample_tridiagonal(n, beta, &mut rng)?.logdet().0)
        })
        .collect()
}

/// Determinant traces of `replicates` tridiagonal draws, same streams as
/// [`tridiagonal_logdets`].
pub fn tridiagonal_traces(n: usize, beta: Beta, m: usize, replicates: usize, seed: u64) -> Result<Vec<DeterminantTrace>> {
    (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_from_seed(derive_seed(seed, r));
            logdet_trace(&sample_tridiagonal(n, beta, &mut rng)?, m)
        })
        .collect()
}

/// `log|det|` of `replicates` dense draws; LU for the iid family.
pub fn dense_logdets(spec: &EnsembleSpec, n: usize, replicates: usize, seed: u64) -> Result<Vec<f64>> {
    (0..replicates as u64)
        .into_par_iter()
        .map(|r| match sample_matrix(spec, n, derive_seed(seed, r))? {
            RandomMatrix::Hermitian(h) => Ok(logdet_hermitian(&h).log_abs),
            RandomMatrix::General(m) => Ok(logdet_lu(&m)?.log_abs),
        })
        .collect()
}

/// `(log F_{n/2} + (1/2) log n) / sqrt(2 log n)` from each trace.
pub fn standardized_log_f(traces: &[DeterminantTrace]) -> Vec<f64> {
    traces
        .iter()
        .map(|t| {
            let ln = (t.n as f64).ln();
            (t.log_f_at(t.last_j()) + 0.5 * ln) / (2.0 * ln).sqrt()
        })
        .collect()
}

fn distribution_summary(x: &[f64]) -> Result<Value> {
    Ok(json!({
        "summary": to_value(&summary(x)?),
        "ks": to_value(&ks_one_sample(x, Reference::StdNormal)?),
    }))
}

/// Runs the configured experiment on a pool of `config.workers` threads.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if config.workers > 0 {
        builder = builder.num_threads(config.workers);
    }
    let pool = builder.build().map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    pool.install(|| dispatch(config))
}

fn dispatch(cfg: &ExperimentConfig) -> Result<Report> {
    let mut report = Report {
        tool: TOOL_NAME,
        version: TOOL_VERSION,
        config: cfg.clone(),
        summary: Value::Null,
        records: None,
        within_tolerance: None,
        csv: None,
    };
    match cfg.command {
        Command::Clt => run_clt(cfg, &mut report)?,
        Command::TrotterCheck => run_trotter(cfg, &mut report)?,
        Command::Moments => run_moments(cfg, &mut report)?,
        Command::Phase => run_phase(cfg, &mut report)?,
        Command::Martingale => run_martingale(cfg, &mut report)?,
        Command::Resolvent => run_resolvent(cfg, &mut report)?,
        Command::Ftc => run_ftc(cfg, &mut report)?,
        Command::Swap => run_swap(cfg, &mut report)?,
        Command::Sample => run_sample(cfg, &mut report)?,
    }
    Ok(report)
}

fn run_clt(cfg: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let spec = cfg.spec()?;
    let (values, law, path) = match cfg.statistic {
        Statistic::LogF => {
            let traces = tridiagonal_traces(cfg.n, cfg.resolved_beta()?, cfg.start_index(), cfg.replicates, cfg.seed)?;
            (standardized_log_f(&traces), None, SamplingPath::Tridiagonal)
        }
        Statistic::Logdet => {
            let law = cfg.resolved_law(&spec);
            let path = cfg.path.unwrap_or(if cfg.resolved_beta().is_ok() && spec.family == Family::WignerHermitian {
                SamplingPath::Tridiagonal
            } else {
                SamplingPath::Dense
            });
            let raw = match path {
                SamplingPath::Tridiagonal => tridiagonal_logdets(cfg.n, cfg.resolved_beta()?, cfg.replicates, cfg.seed)?,
                SamplingPath::Dense => dense_logdets(&spec, cfg.n, cfg.replicates, cfg.seed)?,
            };
            (standardize_all(&raw, cfg.n as u64, law)?, Some(law), path)
        }
    };
    let mut summary = distribution_summary(&values)?;
    summary["law"] = to_value(&law);
    summary["path"] = to_value(&path);
    report.summary = summary;
    if cfg.records {
        report.records = Some(to_value(&values));
    }
    Ok(())
}

fn run_trotter(cfg: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let beta = cfg.resolved_beta()?;
    let spec = cfg.spec()?;
    // Dense replicates use indices 0..R, tridiagonal ones R..2R.
    let dense = dense_logdets(&spec, cfg.n, cfg.replicates, cfg.seed)?;
    let tri: Vec<f64> = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_from_seed(derive_seed(cfg.seed, cfg.replicates as u64 + r));
            Ok(sample_tridiagonal(cfg.n, beta, &mut rng)?.logdet().0)
        })
        .collect::<Result<_>>()?;
    report.summary = json!({
        "ks": to_value(&ks_two_sample(&dense, &tri)?),
        "dense": to_value(&summary(&dense)?),
        "tridiagonal": to_value(&summary(&tri)?),
    });
    Ok(())
}

fn run_moments(cfg: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let class = cfg.class.unwrap_or(match cfg.ensemble.parse::<EnsembleKind>() {
        Ok(EnsembleKind::Gue) => SymmetryClass::Gue,
        _ => SymmetryClass::Goe,
    });
    let n = cfg.n;
    let (exact, method) = match cfg.moment {
        MomentOrder::First => (first_moment_exact(n), "matching-count"),
        MomentOrder::Second if n <= PAIR_ENUMERATION_MAX => (second_moment_bruteforce(n, class)?.value, "enumeration"),
        MomentOrder::Second => (second_moment_recursion(n, class), "tridiagonal-recursion"),
    };
    let spec = ensemble_by_name(class.as_str())?;
    let path = cfg.path.unwrap_or(SamplingPath::Dense);
    let mc = if cfg.replicates >= 2 {
        Some(moment_mc(&spec, n, cfg.moment, cfg.replicates, cfg.seed, path, 0.0)?)
    } else {
        None
    };
    report.summary = json!({
        "n": n,
        "class": class,
        "moment": cfg.moment,
        "exact": exact.to_string(),
        "exact_method": method,
        "mc_estimate": mc.as_ref().map(|m| m.estimate),
        "mc_stderr": mc.as_ref().map(|m| m.stderr),
        "mc_path": path,
    });
    let est = mc.as_ref().map(|m| format!("{:e},{:e}", m.estimate, m.stderr)).unwrap_or_else(|| ",".into());
    report.csv = Some(format!("n,class,exact,mc_estimate,mc_stderr\n{n},{},{exact},{est}\n", class.as_str()));
    Ok(())
}

fn run_phase(cfg: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let traces = tridiagonal_traces(cfg.n, cfg.resolved_beta()?, cfg.start_index(), cfg.replicates, cfg.seed)?;
    let thetas: Vec<f64> = traces.iter().map(|t| t.theta_at(t.last_j())).collect();
    let weyl = cfg.frequencies.iter().map(|&k| weyl_sum(&thetas, k)).collect::<Result<Vec<_>>>()?;
    let bound = 4.0 / (thetas.len() as f64).sqrt();
    report.summary = json!({
        "weyl": to_value(&weyl),
        "bound_4_over_sqrt_n": bound,
        "all_within_bound": weyl.iter().all(|w| w.abs_mean <= bound),
    });
    if cfg.records {
        report.records = Some(to_value(&thetas));
    }
    Ok(())
}

fn run_martingale(cfg: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let beta = cfg.resolved_beta()?;
    let m = cfg.start_index();
    let traces = tridiagonal_traces(cfg.n, beta, m, cfg.replicates, cfg.seed)?;
    let rep = martingale_report(&traces, cfg.epsilon, beta.entry_variance())?;
    let telescoping = traces.iter().map(telescoping_check).fold(0.0, f64::max);
    let tol = cfg.tolerance.unwrap_or(1e-12);
    report.within_tolerance = Some(telescoping < tol);
    report.summary = json!({
        "report": to_value(&rep),
        "max_telescoping_residual": telescoping,
        "sn2_proxy": sn2_proxy(cfg.n, m),
    });
    Ok(())
}

fn random_gue_like(cfg: &ExperimentConfig) -> Result<crate::ensembles::HermitianMatrix> {
    let spec = cfg.spec()?;
    match sample_matrix(&spec, cfg.n, cfg.seed)? {
        RandomMatrix::Hermitian(h) => Ok(h.normalized()),
        RandomMatrix::General(_) => Err(Error::InvalidArgument(format!("`{}` is not a Hermitian ensemble", spec.label))),
    }
}

fn run_resolvent(cfg: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let w = random_gue_like(cfg)?;
    let n = cfg.n;
    if n < 2 {
        return Err(Error::InvalidArgument("resolvent probe needs n >= 2".into()));
    }
    let z = if cfg.z0.im > 0.0 { cfg.z0 } else { Complex64::new(cfg.z0.re, 0.1) };
    let v = ElementaryMatrix::Symmetric(0, 1);
    let r0 = resolvent(&w, z)?;
    let norm_inf1 = opnorm(&r0, NormPair::InfOne);
    let tc = crate::resolvent::taylor_coefficients(&r0, v, cfg.k.max(1))?;
    let envelope: Vec<f64> = (1..=tc.coeffs.len()).map(|j| coefficient_envelope(norm_inf1, j, n, z.im, 16.0)).collect();
    let rt = resolvent(&crate::resolvent::perturbed(&w, v, cfg.t)?, z)?;
    let neumann_errors: Vec<f64> = (0..=cfg.k)
        .map(|k| Ok(opnorm(&(&neumann_sum(&r0, v, cfg.t, k)?.sum - &rt), NormPair::InfOne)))
        .collect::<Result<_>>()?;
    let probe = expansion_remainder_probe(&w, v, z, cfg.t, cfg.k, 16.0)?;
    let half = expansion_remainder_probe(&w, v, z, cfg.t / 2.0, cfg.k, 16.0)?;
    let identity = resolvent_identity_residual(&r0, z.im);
    let tol = cfg.tolerance.unwrap_or(1e-12);
    report.within_tolerance = Some(identity < tol);
    report.summary = json!({
        "z": z,
        "elementary": v,
        "norm_inf1": norm_inf1,
        "identity_residual": identity,
        "coefficients": to_value(&tc.coeffs),
        "coefficient_envelope_k16": envelope,
        "cyclic_residual": tc.cyclic_residual,
        "neumann_errors": neumann_errors,
        "remainder": to_value(&probe),
        "halving_ratio": probe.remainder.norm() / half.remainder.norm(),
    });
    Ok(())
}

fn run_ftc(cfg: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let w = random_gue_like(cfg)?;
    let wnorm = opnorm(w.matrix(), NormPair::TwoTwo);
    let top = cfg.top.unwrap_or(100.0 * (wnorm + cfg.z0.re.abs() + 1.0));
    let tol = cfg.tolerance.unwrap_or(1e-6);
    let res = ftc_logdet_identity(&w, cfg.z0, top, tol)?;
    report.within_tolerance = Some(res.residual <= tol);
    report.summary = json!({ "top": top, "result": to_value(&res) });
    Ok(())
}

fn run_swap(cfg: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let a = cfg.spec()?;
    let b = ensemble_by_name(cfg.ensemble_b.as_deref().unwrap_or("gue-matched-threepoint"))?;
    let (la, lb) = swap_logdets(&a, &b, cfg.n, cfg.z0, cfg.replicates, cfg.seed)?;
    let gs: Vec<TestFunction> = match cfg.test_function {
        Some(g) => vec![g],
        None => TestFunction::ALL.to_vec(),
    };
    let results = gs.iter().map(|&g| swap_statistic(&la, &lb, cfg.n, cfg.z0, g)).collect::<Result<Vec<_>>>()?;
    report.summary = json!({
        "ensemble_a": a.label,
        "ensemble_b": b.label,
        "results": to_value(&results),
    });
    Ok(())
}

fn run_sample(cfg: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let mut csv;
    if let Some(b) = cfg.beta {
        let mut rng = rng_from_seed(cfg.seed);
        let t = sample_tridiagonal(cfg.n, Beta::from_int(b)?, &mut rng)?;
        csv = t.to_csv();
        report.summary = json!({ "kind": "tridiagonal", "a": t.a, "b": t.b });
    } else {
        let m = sample_matrix(&cfg.spec()?, cfg.n, cfg.seed)?;
        let dense = m.as_dense();
        csv = String::from("i,j,re,im\n");
        let mut entries = Vec::with_capacity(cfg.n * cfg.n);
        for i in 0..cfg.n {
            for j in 0..cfg.n {
                let z = dense[(i, j)];
                csv.push_str(&format!("{},{},{:e},{:e}\n", i + 1, j + 1, z.re, z.im));
                entries.push([z.re, z.im]);
            }
        }
        report.summary = json!({ "kind": "dense", "entries_row_major": entries });
    }
    report.csv = Some(csv);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reports_do_not_depend_on_workers() {
        let base = ExperimentConfig { n: 32, replicates: 40, seed: 7, records: true, ..Default::default() };
        let one = run_experiment(&ExperimentConfig { workers: 1, ..base.clone() }).unwrap().to_json();
        let three = run_experiment(&ExperimentConfig { workers: 3, ..base.clone() }).unwrap().to_json();
        // Only the echoed worker count differs.
        assert_eq!(one.replace("\"workers\": 1", "\"workers\": 3"), three);
    }

    #[test]
    fn moments_report_exact_value() {
        let cfg = ExperimentConfig {
            command: Command::Moments,
            n: 2,
            class: Some(SymmetryClass::Goe),
            replicates: 10,
            ..Default::default()
        };
        let rep = run_experiment(&cfg).unwrap();
        assert_eq!(rep.summary["exact"], "7");
    }

    #[test]
    fn invalid_configs() {
        assert!(run_experiment(&ExperimentConfig { n: 0, ..Default::default() }).is_err());
        assert!(run_experiment(&ExperimentConfig { ensemble: "nope".into(), ..Default::default() }).is_err());
        let cfg = ExperimentConfig { command: Command::Phase, ensemble: "bernoulli-symmetric".into(), ..Default::default() };
        assert!(run_experiment(&cfg).is_err());
    }

    #[test]
    fn every_command_runs() {
        for command in [
            Command::Clt,
            Command::TrotterCheck,
            Command::Moments,
            Command::Phase,
            Command::Martingale,
            Command::Resolvent,
            Command::Ftc,
            Command::Swap,
            Command::Sample,
        ] {
            let cfg = ExperimentConfig { command, n: 16, replicates: 12, seed: 3, ..Default::default() };
            let rep = run_experiment(&cfg).unwrap_or_else(|e| panic!("{command:?}: {e}"));
            assert_ne!(rep.summary, Value::Null);
            assert_ne!(rep.within_tolerance, Some(false), "{command:?}");
        }
    }
}
