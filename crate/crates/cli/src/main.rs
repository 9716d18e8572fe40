use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod settings;

use settings::Settings;

#[derive(Parser)]
#[command(name = "fullmatch", version, about = "Optimal non-bipartite full matching")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a full (or pair) match and write subclasses.csv and report.json
    Match(Flags),
    /// Recompute the report for an existing subclasses.csv
    Evaluate(Flags),
    /// Randomization test on a clustered matched study
    Infer(Flags),
    /// Run a simulation experiment described by a config file
    Simulate(Flags),
}

#[derive(Clone, Copy, ValueEnum)]
enum AlternativeArg {
    Less,
    Greater,
}

#[derive(Args)]
struct Flags {
    /// Input CSV
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    dose_col: Option<String>,
    #[arg(long)]
    id_col: Option<String>,
    /// Comma-separated covariate columns (default: all other columns)
    #[arg(long)]
    covariates: Option<String>,
    /// Dose separation below which pairs are penalised
    #[arg(long)]
    tau0: Option<f64>,
    /// Penalty added to pairs closer than tau0 in dose
    #[arg(long = "C")]
    c_penalty: Option<f64>,
    /// Cost per unit of subclass size beyond two
    #[arg(long)]
    lambda: Option<f64>,
    /// Pair match instead of full match
    #[arg(long)]
    pairs: bool,
    /// Assignment file for `evaluate` (default: <out>/subclasses.csv)
    #[arg(long)]
    subclasses: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo draws for `infer`
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long, value_enum)]
    alternative: Option<AlternativeArg>,
    /// key = value settings file; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
    Infeasible(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Infeasible(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Infeasible(m) => m,
        }
    }
}

impl From<fullmatch::Error> for Failure {
    fn from(e: fullmatch::Error) -> Self {
        match e {
            e if e.is_infeasible() => Failure::Infeasible(e.to_string()),
            fullmatch::Error::InvalidParameter(_) => Failure::Usage(e.to_string()),
            e => Failure::Data(e.to_string()),
        }
    }
}

fn settings(f: Flags) -> Result<Settings, Failure> {
    let mut s = Settings::from_config(f.config.as_ref())?;
    s.set("input", f.input.map(|p| p.display().to_string()));
    s.set("dose-col", f.dose_col);
    s.set("id-col", f.id_col);
    s.set("covariates", f.covariates);
    s.set("tau0", f.tau0);
    s.set("C", f.c_penalty);
    s.set("lambda", f.lambda);
    s.set("pairs", f.pairs.then_some("true"));
    s.set("subclasses", f.subclasses.map(|p| p.display().to_string()));
    s.set("out", f.out.map(|p| p.display().to_string()));
    s.set("seed", f.seed);
    s.set("draws", f.draws);
    s.set(
        "alternative",
        f.alternative.map(|a| match a {
            AlternativeArg::Less => "less",
            AlternativeArg::Greater => "greater",
        }),
    );
    Ok(s)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Match(f) => commands::run_match(&settings(f)?),
        Command::Evaluate(f) => commands::evaluate(&settings(f)?),
        Command::Infer(f) => commands::infer(&settings(f)?),
        Command::Simulate(f) => commands::simulate(&settings(f)?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let line = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("{line}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message().replace('\n', " "));
            ExitCode::from(f.code())
        }
    }
}
