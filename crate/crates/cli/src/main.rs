use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use wigner_logdet::dense::Law;
use wigner_logdet::experiment::{run_experiment, Command, ExperimentConfig, OutputFormat, Statistic};
use wigner_logdet::moments::{MomentOrder, SamplingPath, SymmetryClass};
use wigner_logdet::resolvent::TestFunction;
use wigner_logdet::Error;

const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "wlogdet", version, about = "Log-determinant experiments for Wigner random matrices")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Standardized log-determinant (or log F) sample against N(0,1)
    Clt(Opts),
    /// Two-sample KS between dense and tridiagonal log-determinants
    TrotterCheck(Opts),
    /// Exact and Monte Carlo determinant moments
    Moments(Opts),
    /// Weyl sums of the final phase
    Phase(Opts),
    /// Martingale increment diagnostics
    Martingale(Opts),
    /// Resolvent and perturbation-expansion probes on one draw
    Resolvent(Opts),
    /// Log-determinant as an integral of the Stieltjes transform
    Ftc(Opts),
    /// Compare E G(log|det|) between two ensembles
    Swap(Opts),
    /// Emit one sampled matrix
    Sample(Opts),
}

#[derive(Clone, Copy, ValueEnum)]
enum LawArg {
    Gue,
    Goe,
    IidReal,
    IidComplex,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassArg {
    Goe,
    Gue,
}

#[derive(Clone, Copy, ValueEnum)]
enum MomentArg {
    First,
    Second,
}

#[derive(Clone, Copy, ValueEnum)]
enum PathArg {
    Dense,
    Tridiagonal,
}

#[derive(Clone, Copy, ValueEnum)]
enum StatisticArg {
    Logdet,
    LogF,
}

#[derive(Clone, Copy, ValueEnum)]
enum TestFunctionArg {
    Bump,
    Cosine,
    Logistic,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Args)]
struct Opts {
    #[arg(long, default_value = "gue")]
    ensemble: String,
    /// Second ensemble for `swap`
    #[arg(long)]
    ensemble_b: Option<String>,
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    replicates: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum)]
    law: Option<LawArg>,
    #[arg(long)]
    beta: Option<u32>,
    #[arg(long, value_enum)]
    class: Option<ClassArg>,
    #[arg(long, value_enum, default_value = "second")]
    moment: MomentArg,
    #[arg(long, value_enum)]
    path: Option<PathArg>,
    #[arg(long, value_enum, default_value = "logdet")]
    statistic: StatisticArg,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    z0_re: f64,
    #[arg(long, default_value_t = 0.0)]
    z0_im: f64,
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    t: f64,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3", allow_negative_numbers = true)]
    frequencies: Vec<i64>,
    #[arg(long)]
    start_index: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long = "g", value_enum)]
    test_function: Option<TestFunctionArg>,
    /// Upper integration limit for `ftc`
    #[arg(long)]
    top: Option<f64>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
    /// Worker threads; 0 uses all cores
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Include per-replicate values
    #[arg(long)]
    records: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

impl Opts {
    fn into_config(self, command: Command) -> (ExperimentConfig, Option<PathBuf>) {
        let config = ExperimentConfig {
            command,
            ensemble: self.ensemble,
            ensemble_b: self.ensemble_b,
            n: self.n,
            replicates: self.replicates,
            seed: self.seed,
            law: self.law.map(|l| match l {
                LawArg::Gue => Law::Gue,
                LawArg::Goe => Law::Goe,
                LawArg::IidReal => Law::IidReal,
                LawArg::IidComplex => Law::IidComplex,
            }),
            beta: self.beta,
            class: self.class.map(|c| match c {
                ClassArg::Goe => SymmetryClass::Goe,
                ClassArg::Gue => SymmetryClass::Gue,
            }),
            moment: match self.moment {
                MomentArg::First => MomentOrder::First,
                MomentArg::Second => MomentOrder::Second,
            },
            path: self.path.map(|p| match p {
                PathArg::Dense => SamplingPath::Dense,
                PathArg::Tridiagonal => SamplingPath::Tridiagonal,
            }),
            statistic: match self.statistic {
                StatisticArg::Logdet => Statistic::Logdet,
                StatisticArg::LogF => Statistic::LogF,
            },
            z0: wigner_logdet::num_complex::Complex64::new(self.z0_re, self.z0_im),
            k: self.k,
            t: self.t,
            frequencies: self.frequencies,
            start_index: self.start_index,
            epsilon: self.epsilon,
            test_function: self.test_function.map(|g| match g {
                TestFunctionArg::Bump => TestFunction::Bump,
                TestFunctionArg::Cosine => TestFunction::Cosine,
                TestFunctionArg::Logistic => TestFunction::Logistic,
            }),
            top: self.top,
            tolerance: self.tolerance,
            format: match self.format {
                FormatArg::Json => OutputFormat::Json,
                FormatArg::Csv => OutputFormat::Csv,
            },
            workers: self.workers,
            records: self.records,
        };
        (config, self.output)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, opts) = match cli.command {
        Cmd::Clt(o) => (Command::Clt, o),
        Cmd::TrotterCheck(o) => (Command::TrotterCheck, o),
        Cmd::Moments(o) => (Command::Moments, o),
        Cmd::Phase(o) => (Command::Phase, o),
        Cmd::Martingale(o) => (Command::Martingale, o),
        Cmd::Resolvent(o) => (Command::Resolvent, o),
        Cmd::Ftc(o) => (Command::Ftc, o),
        Cmd::Swap(o) => (Command::Swap, o),
        Cmd::Sample(o) => (Command::Sample, o),
    };
    let (config, output) = opts.into_config(command);
    let report = match run_experiment(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_USAGE });
        }
    };
    let body = match config.format {
        OutputFormat::Json => report.to_json(),
        OutputFormat::Csv => match &report.csv {
            Some(csv) => csv.clone(),
            None => {
                eprintln!("error: {}", Error::InvalidArgument("this command has no CSV output".into()));
                return ExitCode::from(EXIT_USAGE);
            }
        },
    };
    match output {
        Some(path) => {
            if let Err(e) = fs::write(&path, body) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(EXIT_USAGE);
            }
        }
        None => print!("{body}"),
    }
    if report.within_tolerance == Some(false) {
        eprintln!("error: residual exceeded tolerance");
        return ExitCode::from(EXIT_NUMERICAL);
    }
    ExitCode::SUCCESS
}
