mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use chevlift::error::Error;
use commands::{Assertion, Outcome};
use config::{ConfigError, Flags, RunConfig};

const SCHEMA_VERSION: u32 = 1;

const EXIT_CONFIG: u8 = 3;
const EXIT_FAILED: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "chevlift", version, about = "Deformation and lifting checks for split Chevalley groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: FlagArgs,
}

#[derive(Args, Debug, Default)]
struct FlagArgs {
    /// key = value file with defaults for any flag below
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// comma-separated Cartan types, e.g. A1,B2,G2
    #[arg(long, global = true)]
    types: Option<String>,
    /// comma-separated primes
    #[arg(long, global = true)]
    p: Option<String>,
    /// comma-separated precisions (exponents of p)
    #[arg(long, global = true)]
    m: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    /// random instances per grid point
    #[arg(long, global = true)]
    samples: Option<String>,
    /// search budget per auxiliary prime
    #[arg(long, global = true)]
    budget: Option<String>,
    /// matrix size bound, or cyclic group order
    #[arg(long, global = true)]
    size: Option<String>,
    /// restrict to one root index
    #[arg(long, global = true)]
    alpha: Option<String>,
    /// largest local degree for the ordinary condition
    #[arg(long, global = true)]
    f_degree: Option<String>,
    /// auxiliary trivial prime for the tame model
    #[arg(long, global = true)]
    q: Option<String>,
    /// a6 or cyclic
    #[arg(long, global = true)]
    group: Option<String>,
    /// cohomological degree
    #[arg(long, global = true)]
    degree: Option<String>,
    /// directory of character tables
    #[arg(long, global = true)]
    tables: Option<String>,
    /// model file, looked up under <data dir>/models if not found as given
    #[arg(long, global = true)]
    model: Option<String>,
    #[arg(long, global = true)]
    max_precision: Option<String>,
    /// enumerate places instead of sampling in the doubling search
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    exhaustive: Option<String>,
    /// report file
    #[arg(long, global = true)]
    report: Option<String>,
    /// data directory holding atlas/ and models/
    #[arg(long, global = true, env = "CHEVLIFT_DATA_DIR")]
    data_dir: Option<String>,
}

impl FlagArgs {
    fn to_flags(&self) -> Flags {
        Flags {
            types: self.types.clone(),
            p: self.p.clone(),
            m: self.m.clone(),
            seed: self.seed.clone(),
            samples: self.samples.clone(),
            budget: self.budget.clone(),
            size: self.size.clone(),
            alpha: self.alpha.clone(),
            f_degree: self.f_degree.clone(),
            q: self.q.clone(),
            group: self.group.clone(),
            degree: self.degree.clone(),
            tables: self.tables.clone(),
            model: self.model.clone(),
            max_precision: self.max_precision.clone(),
            exhaustive: self.exhaustive.clone(),
            report: self.report.clone(),
            data_dir: self.data_dir.clone(),
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact verification suites
    #[command(subcommand)]
    Check(CheckCommand),
    /// Dimensions of the local condition spaces
    Spaces,
    /// Adjoint module restricted to the principal SL2
    Decompose,
    /// Cohomology of a finite group with permutation and trivial coefficients
    Cohomology,
    /// Oddness of the principal involution
    Oddness,
    /// Worked examples
    #[command(subcommand)]
    Examples(ExampleCommand),
    /// Torsion bound for closed subsystems and its certificate
    LeviBound,
    /// Synthetic global Selmer engine
    #[command(subcommand)]
    Selmer(SelmerCommand),
}

#[derive(Subcommand, Debug)]
enum CheckCommand {
    MatrixIdentity,
    Stability,
    Duality,
}

#[derive(Subcommand, Debug)]
enum ExampleCommand {
    F4,
    Sl2,
    Ntorus,
}

#[derive(Subcommand, Debug)]
enum SelmerCommand {
    Balance,
    Kill,
    Doubling,
    Lift,
}

impl Command {
    fn words(&self) -> Vec<String> {
        let w: &[&str] = match self {
            Command::Check(CheckCommand::MatrixIdentity) => &["check", "matrix-identity"],
            Command::Check(CheckCommand::Stability) => &["check", "stability"],
            Command::Check(CheckCommand::Duality) => &["check", "duality"],
            Command::Spaces => &["spaces"],
            Command::Decompose => &["decompose"],
            Command::Cohomology => &["cohomology"],
            Command::Oddness => &["oddness"],
            Command::Examples(ExampleCommand::F4) => &["examples", "f4"],
            Command::Examples(ExampleCommand::Sl2) => &["examples", "sl2"],
            Command::Examples(ExampleCommand::Ntorus) => &["examples", "ntorus"],
            Command::LeviBound => &["levi-bound"],
            Command::Selmer(SelmerCommand::Balance) => &["selmer", "balance"],
            Command::Selmer(SelmerCommand::Kill) => &["selmer", "kill"],
            Command::Selmer(SelmerCommand::Doubling) => &["selmer", "doubling"],
            Command::Selmer(SelmerCommand::Lift) => &["selmer", "lift"],
        };
        w.iter().map(|s| s.to_string()).collect()
    }
}

#[derive(Serialize)]
struct Report<'a> {
    schema_version: u32,
    command: String,
    config: Option<&'a RunConfig>,
    status: &'static str,
    error: Option<String>,
    passed: usize,
    failed: usize,
    assertions: &'a [Assertion],
    results: serde_json::Value,
}

fn dispatch(cfg: &RunConfig) -> chevlift::error::Result<Outcome> {
    let c: Vec<&str> = cfg.command.iter().map(String::as_str).collect();
    match c.as_slice() {
        ["check", "matrix-identity"] => commands::matrix_identity(cfg),
        ["check", "stability"] => commands::stability(cfg),
        ["check", "duality"] => commands::duality(cfg),
        ["spaces"] => commands::spaces(cfg),
        ["decompose"] => commands::decompose_adjoint(cfg),
        ["cohomology"] => commands::group_cohomology(cfg),
        ["oddness"] => commands::oddness(cfg),
        ["examples", "f4"] => commands::examples_f4(cfg),
        ["examples", "sl2"] => commands::examples_sl2(cfg),
        ["examples", "ntorus"] => commands::examples_ntorus(cfg),
        ["levi-bound"] => commands::levi(cfg),
        ["selmer", "balance"] => commands::selmer_balance(cfg),
        ["selmer", "kill"] => commands::selmer_kill(cfg),
        ["selmer", "doubling"] => commands::selmer_doubling(cfg),
        ["selmer", "lift"] => commands::selmer_lift(cfg),
        _ => unreachable!("clap admits only known subcommands"),
    }
}

/// Errors in the inputs themselves count as configuration errors.
fn is_input_error(e: &Error) -> bool {
    matches!(e, Error::Io(_) | Error::Parse(_) | Error::InvalidRing(_) | Error::Domain(_))
}

fn resolve(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut flags = cli.flags.to_flags();
    if let Some(path) = &cli.flags.config {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("config file {}: {e}", path.display())))?;
        flags.merge_file_text(&text)?;
    }
    RunConfig::resolve(cli.command.words(), &flags)
}

fn write_report(path: &std::path::Path, report: &Report) -> bool {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    match std::fs::write(path, text) {
        Ok(()) => true,
        Err(e) => {
            eprintln!("cannot write report {}: {e}", path.display());
            false
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = cli.command.words().join(" ");
    let cfg = match resolve(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("invalid configuration: {e}");
            let path = cli.flags.report.clone().unwrap_or_else(|| "chevlift-report.json".into());
            let report = Report {
                schema_version: SCHEMA_VERSION,
                command,
                config: None,
                status: "invalid-config",
                error: Some(e.to_string()),
                passed: 0,
                failed: 0,
                assertions: &[],
                results: serde_json::Value::Null,
            };
            write_report(path.as_ref(), &report);
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let (assertions, results, error, code) = match dispatch(&cfg) {
        Ok(Outcome { assertions, results }) => {
            let failed = assertions.iter().any(|a| !a.pass);
            (assertions, results, None, if failed { EXIT_FAILED } else { 0 })
        }
        Err(e) => {
            let code = if is_input_error(&e) { EXIT_CONFIG } else { EXIT_FAILED };
            (Vec::new(), serde_json::Value::Null, Some(e.to_string()), code)
        }
    };
    let failed = assertions.iter().filter(|a| !a.pass).count();
    let passed = assertions.len() - failed;
    let status = match code {
        0 => "pass",
        EXIT_CONFIG => "invalid-config",
        _ if error.is_some() => "error",
        _ => "fail",
    };
    for a in &assertions {
        println!("{} {}: {}", if a.pass { "PASS" } else { "FAIL" }, a.name, a.detail);
    }
    if let Some(e) = &error {
        eprintln!("{command}: {e}");
    }
    println!("{command}: {passed} passed, {failed} failed; report {}", cfg.report.display());
    let report = Report {
        schema_version: SCHEMA_VERSION,
        command,
        config: Some(&cfg),
        status,
        error,
        passed,
        failed,
        assertions: &assertions,
        results,
    };
    if !write_report(&cfg.report, &report) && code == 0 {
        return ExitCode::from(EXIT_FAILED);
    }
    ExitCode::from(code)
}
