use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use sqrtnuc::harness::{run_experiment, verify_suite, ExperimentConfig, Mode, VerifyOptions, SUITES};

#[derive(Parser)]
#[command(name = "sqrtnuc", version, about = "Square-root nuclear-norm estimators: simulation, estimation and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Seeded Monte Carlo runs with a generated truth.
    Simulate {
        problem: Problem,
        #[command(flatten)]
        flags: Flags,
    },
    /// Estimate from data files.
    Estimate {
        problem: Problem,
        #[command(flatten)]
        flags: Flags,
    },
    /// Run a named verification suite; exits nonzero if it fails.
    Verify {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(SUITES))]
        suite: String,
        #[command(flatten)]
        flags: Flags,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Problem {
    Completion,
    Regression,
}

/// Every flag is optional; unset flags keep the value from `--config` or the default.
#[derive(Args)]
struct Flags {
    /// `key=value` file applied before the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    m1: Option<String>,
    #[arg(long)]
    m2: Option<String>,
    #[arg(long)]
    l: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    rank: Option<String>,
    #[arg(long)]
    sigma: Option<String>,
    /// gaussian, rademacher or uniform.
    #[arg(long)]
    noise: Option<String>,
    #[arg(long)]
    a: Option<String>,
    /// theory, oracle or manual:<x>.
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    cstar: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    rho: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    threads: Option<String>,
    /// CSV output; stdout when absent.
    #[arg(long)]
    out: Option<String>,
    /// Observations as `row,col,value` lines.
    #[arg(long)]
    obs: Option<String>,
    /// True matrix, for reporting the estimation error.
    #[arg(long)]
    truth: Option<String>,
    /// Design matrix for regression.
    #[arg(long)]
    v: Option<String>,
    /// Response matrix for regression.
    #[arg(long)]
    u: Option<String>,
    /// Where to write the estimated matrix.
    #[arg(long)]
    estimate: Option<String>,
}

impl Flags {
    fn pairs(&self) -> [(&'static str, &Option<String>); 22] {
        [
            ("m1", &self.m1),
            ("m2", &self.m2),
            ("l", &self.l),
            ("n", &self.n),
            ("rank", &self.rank),
            ("sigma", &self.sigma),
            ("noise", &self.noise),
            ("a", &self.a),
            ("lambda", &self.lambda),
            ("cstar", &self.cstar),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("rho", &self.rho),
            ("trials", &self.trials),
            ("seed", &self.seed),
            ("threads", &self.threads),
            ("out", &self.out),
            ("obs", &self.obs),
            ("truth", &self.truth),
            ("v", &self.v),
            ("u", &self.u),
            ("estimate", &self.estimate),
        ]
    }

    fn config(&self, mode: Mode) -> sqrtnuc::Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::new(mode);
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        for (key, value) in self.pairs() {
            if let Some(value) = value {
                cfg.set(key, value)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn emit(csv: &str, out: Option<&PathBuf>) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, csv).with_context(|| format!("cannot write {}", path.display())),
        None => std::io::stdout().write_all(csv.as_bytes()).context("cannot write to stdout"),
    }
}

fn run(command: Command) -> anyhow::Result<bool> {
    match command {
        Command::Simulate { problem, flags } => {
            let mode = match problem {
                Problem::Completion => Mode::SimulateCompletion,
                Problem::Regression => Mode::SimulateRegression,
            };
            experiment(&flags.config(mode)?)
        }
        Command::Estimate { problem, flags } => {
            let mode = match problem {
                Problem::Completion => Mode::EstimateCompletion,
                Problem::Regression => Mode::EstimateRegression,
            };
            experiment(&flags.config(mode)?)
        }
        Command::Verify { suite, flags } => {
            let cfg = flags.config(Mode::Verify)?;
            let default_trials = ExperimentConfig::new(Mode::Verify).trials;
            let opts = VerifyOptions {
                seed: cfg.seed,
                threads: cfg.threads,
                trials: (flags.trials.is_some() || cfg.trials != default_trials).then_some(cfg.trials),
            };
            let report = verify_suite(&suite, &opts)?;
            let verdict = if report.passed { "PASS" } else { "FAIL" };
            println!("[{verdict}] {}", report.name);
            for line in &report.lines {
                println!("  {line}");
            }
            if let Some(path) = &cfg.out {
                emit(&report.to_csv(), Some(path))?;
            }
            Ok(report.passed)
        }
    }
}

fn experiment(cfg: &ExperimentConfig) -> anyhow::Result<bool> {
    let output = run_experiment(cfg)?;
    output.write(cfg)?;
    if cfg.out.is_none() {
        emit(&output.to_csv(), None)?;
    } else {
        eprintln!("{}", output.summary.line());
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err:#}");
            match err.downcast_ref::<sqrtnuc::Error>() {
                Some(sqrtnuc::Error::Config(_)) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
