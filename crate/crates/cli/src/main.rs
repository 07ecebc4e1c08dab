//! Command-line front end for the experiment harness.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use hodge_curvature::harness::{self, describe, diff_reports, emit, render, ExperimentConfig, Format, RunReport, Suite};

#[derive(Parser)]
#[command(name = "hodgecurv", version, about = "Curvature of direct-image bundles over families of flat tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the suites of a configuration. Exit status 0 if every check passes, 1 otherwise.
    Run {
        /// Config file, or the name of a bundled config.
        #[arg(long)]
        config: String,
        /// Output file; defaults to the config's output paths, then to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_parser = parse_format)]
        format: Option<Format>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Multiplies every tolerance; recorded in the report.
        #[arg(long)]
        tolerance_scale: Option<f64>,
        /// Records per-suite wall-clock time in the report.
        #[arg(long)]
        timing: bool,
    },
    /// List the available suites and bundled configs.
    ListSuites,
    /// Print ranks and applicable evaluators of a configured family.
    DescribeFamily {
        #[arg(long)]
        config: String,
    },
    /// Compare two JSON reports check by check. Exit status 0 if identical, 1 otherwise.
    DiffReports { left: PathBuf, right: PathBuf },
}

fn parse_format(s: &str) -> std::result::Result<Format, String> {
    s.parse().map_err(|e: hodge_curvature::Error| e.to_string())
}

fn load_config(source: &str) -> Result<ExperimentConfig> {
    let path = Path::new(source);
    if path.exists() {
        return ExperimentConfig::load(path).with_context(|| format!("reading {source}"));
    }
    if harness::BUNDLED.iter().any(|(name, _)| *name == source) {
        return Ok(harness::bundled(source)?);
    }
    bail!("{source} is neither a config file nor a bundled config")
}

fn load_report(path: &Path) -> Result<RunReport> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    RunReport::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn format_of(path: &Path) -> Format {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => Format::Csv,
        _ => Format::Json,
    }
}

fn exit(passed: bool) -> ExitCode {
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn execute(command: Command) -> Result<ExitCode> {
    match command {
        Command::Run { config, out, format, seed, tolerance_scale, timing } => {
            let mut config = load_config(&config)?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            if let Some(scale) = tolerance_scale {
                config.tolerance_scale = scale;
            }
            config.timing |= timing;
            let report = harness::run(&config)?;
            match (out, format) {
                (Some(path), format) => emit(&report, format.unwrap_or_else(|| format_of(&path)), &path)?,
                (None, Some(format)) => print!("{}", render(&report, format)?),
                (None, None) => {
                    let targets = [(&config.output.json, Format::Json), (&config.output.csv, Format::Csv)];
                    let mut written = false;
                    for (path, format) in targets {
                        if let Some(path) = path {
                            emit(&report, format, path)?;
                            written = true;
                        }
                    }
                    if !written {
                        println!("{}", report.to_json()?);
                    }
                }
            }
            let checks = report.checks().count();
            let failures: Vec<_> = report.failures().collect();
            for (suite, check) in &failures {
                eprintln!("FAIL {} {}: {:?} (tolerance {:e}) {}", suite.name(), check.name, check.value, check.tolerance, check.note.as_deref().unwrap_or(""));
            }
            for s in report.suites.iter().filter(|s| s.error.is_some()) {
                eprintln!("ERROR {}: {}", s.suite.name(), s.error.as_deref().unwrap_or_default());
            }
            eprintln!("{}: {} checks, {} failed", report.name, checks, failures.len());
            Ok(exit(report.passed))
        }
        Command::ListSuites => {
            println!("suites:");
            for suite in Suite::ALL {
                println!("  {:<12} {}", suite.name(), suite.description());
            }
            println!("bundled configs:");
            for (name, _) in harness::BUNDLED {
                println!("  {name}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::DescribeFamily { config } => {
            let summary = describe(&load_config(&config)?)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::DiffReports { left, right } => {
            let diff = diff_reports(&load_report(&left)?, &load_report(&right)?);
            for d in &diff.deltas {
                let show = |c: &Option<harness::Check>| match c {
                    Some(c) => format!("{:?} pass={}", c.value, c.passed),
                    None => "absent".into(),
                };
                println!("{} {}: {} -> {}", d.suite.name(), d.name, show(&d.left), show(&d.right));
            }
            if diff.identical {
                println!("reports are identical");
            } else if diff.deltas.is_empty() {
                println!("checks agree; reports differ elsewhere");
            }
            Ok(exit(diff.identical))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
