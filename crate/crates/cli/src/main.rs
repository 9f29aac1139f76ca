//! `hypertest`: batch driver for the hypertest-core experiment suites.
//!
//! Two subcommands. `run` executes one named suite from a config file and
//! writes a JSON report (plus a CSV table of the checks on request); the
//! exit code is 0 when every check passed, 1 when one failed, 2 on usage
//! or configuration errors. `gen` writes deterministic instance files in
//! the text formats the core crate reads.

mod config;
mod gen;
mod report;
mod suites;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use hypertest_core::Limits;

/// Usage and configuration problems exit with 2; failed checks exit with 1
/// after the report is written.
#[derive(Debug)]
pub struct CliError {
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> CliError {
        CliError { message: message.into() }
    }

    pub fn config(line: usize, message: impl std::fmt::Display) -> CliError {
        CliError { message: format!("config line {line}: {message}") }
    }

    pub fn from_core(err: hypertest_core::Error) -> CliError {
        CliError { message: err.to_string() }
    }
}

#[derive(Parser)]
#[command(name = "hypertest", version, about = "Experiment harness for colored hypergraph parameters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    /// JSON report only.
    Json,
    /// JSON report plus a CSV table of the checks.
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment suite named in a config file.
    Run {
        /// Line-oriented config: `[section]` headers and `key = value` lines.
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed declared in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for report files (default: current directory).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Worker threads for experiment parallelism (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Write a deterministic instance file.
    Gen {
        /// random-hypergraph | random-kernel | blowup | planted-partition
        kind: String,
        /// Output path for the generated instance.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Generator parameters as `key=value`, repeatable.
        #[arg(short = 'p', long = "param")]
        params: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, seed, out_dir, jobs, format } => {
            run(config, seed, out_dir, jobs, format)
        }
        Command::Gen { kind, out, seed, params } => generate(&kind, &out, seed, &params),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("hypertest: {}", err.message);
            ExitCode::from(2)
        }
    }
}

fn run(
    config_path: PathBuf,
    seed_flag: Option<u64>,
    out_dir: Option<PathBuf>,
    jobs: Option<usize>,
    format: Format,
) -> Result<ExitCode, CliError> {
    let config_text = fs::read_to_string(&config_path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", config_path.display())))?;
    let cfg = config::Config::parse(&config_text)?;

    if let Some(jobs) = jobs {
        if jobs == 0 {
            return Err(CliError::usage("--jobs must be at least 1"));
        }
        // Ignore the error when a pool already exists (tests run in-process).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }

    let suite = cfg.get("suite", "name").unwrap_or("").to_string();
    let seed = match seed_flag {
        Some(s) => s,
        None => cfg.u64_or("suite", "seed", 0)?,
    };
    let limits = Limits {
        max_enumeration: cfg.u64_or("limits", "max_enumeration", Limits::default().max_enumeration)?,
        max_norm_classes: cfg.usize_or("limits", "max_norm_classes", Limits::default().max_norm_classes)?,
    };

    let outcome = if suite.is_empty() {
        suites::SuiteOutcome::default()
    } else {
        suites::run_suite(&suite, &cfg, seed, &limits)?
    };

    let mut inputs = Vec::new();
    for path in &outcome.inputs {
        let bytes = fs::read(path)
            .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
        inputs.push(report::InputDigest {
            path: path.display().to_string(),
            sha256: report::sha256_hex(&bytes),
        });
    }

    let all_pass = outcome.checks.iter().all(|c| c.pass);
    let rep = report::Report {
        tool: "hypertest",
        version: env!("CARGO_PKG_VERSION"),
        generated_unix: report::unix_now(),
        suite: suite.clone(),
        seed,
        config_sha256: report::sha256_hex(config_text.as_bytes()),
        config_text,
        params: outcome.params,
        inputs,
        checks: outcome.checks,
        all_pass,
    };

    let dir = out_dir.unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)
        .map_err(|e| CliError::usage(format!("cannot create {}: {e}", dir.display())))?;
    let stem = if suite.is_empty() { "report".to_string() } else { format!("report-{suite}") };
    let json_path = dir.join(format!("{stem}.json"));
    report::write_json(&rep, &json_path)?;
    if format == Format::Csv {
        report::write_csv(&rep, &dir.join(format!("{stem}.csv")))?;
    }

    for c in &rep.checks {
        let tag = if c.pass { "PASS" } else { "FAIL" };
        println!("{tag} {} ({})", c.name, c.detail);
    }
    println!("report: {}", json_path.display());

    if let Some(first) = rep.checks.iter().find(|c| !c.pass) {
        eprintln!("hypertest: check failed: {}: {}", first.name, first.detail);
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn generate(kind: &str, out: &PathBuf, seed: u64, raw_params: &[String]) -> Result<ExitCode, CliError> {
    let params = gen::Params::parse(raw_params)?;
    let text = gen::generate(kind, &params, seed)?;
    fs::write(out, &text)
        .map_err(|e| CliError::usage(format!("cannot write {}: {e}", out.display())))?;
    println!("wrote {} sha256={}", out.display(), report::sha256_hex(text.as_bytes()));
    Ok(ExitCode::SUCCESS)
}
