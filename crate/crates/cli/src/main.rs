use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use radio_aqt::analysis::{lis_bounds, sis_bounds, sis_k_sequence, BoundParams};
use radio_aqt::oracle::{TransmitterArray, TransmitterVerdict};
use radio_aqt::rational::{display, floor_int, to_f64};
use radio_aqt::scenario::{transform, Overrides, Scenario, ScenarioFile};
use radio_aqt::Rate;

/// Adversarial routing simulator for multi-hop radio networks.
#[derive(Debug, Parser)]
#[command(name = "radio-aqt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and write trace, metrics and report to a directory.
    Run {
        file: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        horizon: Option<u64>,
    },
    /// Turn a wireline scenario into its equivalent radio scenario.
    Transform {
        file: PathBuf,
        /// Write the radio scenario here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that every row of a transmitter array is isolated in some column.
    VerifyTransmitter { file: PathBuf },
    /// Print the closed-form queue and delay bounds.
    Bounds {
        #[arg(long, value_enum)]
        policy: BoundPolicy,
        #[arg(long)]
        b: u64,
        /// Injection rate, e.g. `1/4`.
        #[arg(long)]
        r: Rate,
        #[arg(long)]
        h: u64,
        /// Number of edges on the longest simple path.
        #[arg(long)]
        d: u64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BoundPolicy {
    Sis,
    Lis,
}

/// Exit status 0 and 1 report verdicts; 2 is for invalid input and I/O
/// failures.
fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> anyhow::Result<bool> {
    match command {
        Command::Run { file, out, seed, horizon } => cmd_run(&file, &out, Overrides { seed, horizon }),
        Command::Transform { file, out } => cmd_transform(&file, out.as_deref()),
        Command::VerifyTransmitter { file } => cmd_verify_transmitter(&file),
        Command::Bounds { policy, b, r, h, d } => cmd_bounds(policy, BoundParams { b, r, h, d }),
    }
}

fn cmd_run(file: &Path, out: &Path, overrides: Overrides) -> anyhow::Result<bool> {
    let scenario = Scenario::load(file, overrides)?;
    let outcome = scenario.execute()?;
    outcome.write(out).with_context(|| format!("writing results to {}", out.display()))?;
    print!("{}", outcome.report.summary());
    Ok(outcome.report.passed)
}

fn cmd_transform(file: &Path, out: Option<&Path>) -> anyhow::Result<bool> {
    let src = fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    let wire = ScenarioFile::parse(&src, &file.display().to_string())?;
    // the source must be runnable before it is rewritten
    Scenario::from_source(&src, &file.display().to_string(), Overrides::default())?;
    let text = transform(&wire)?.to_toml()?;
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(true)
}

fn cmd_verify_transmitter(file: &Path) -> anyhow::Result<bool> {
    let src = fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    let array: TransmitterArray = src.parse().with_context(|| format!("parsing {}", file.display()))?;
    println!("transmitter: {} rows, length {}", array.node_count(), array.length());
    match array.verify() {
        TransmitterVerdict::Pass { witnesses } => {
            for (row, col) in witnesses.iter().enumerate() {
                println!("  row {row}: alone in column {col}");
            }
            println!("verdict: PASS");
            Ok(true)
        }
        TransmitterVerdict::Fail { row } => {
            println!("  row {row}: never alone in any column");
            println!("verdict: FAIL");
            Ok(false)
        }
    }
}

fn cmd_bounds(policy: BoundPolicy, p: BoundParams) -> anyhow::Result<bool> {
    if p.b == 0 || p.h == 0 || p.d == 0 {
        bail!("b, h and d must be positive");
    }
    let mut rows: Vec<(String, String, String)> = Vec::new();
    let mut exact = |name: String, x: &radio_aqt::rational::BigRational| {
        rows.push((name, display(x), format!("{:.6}", to_f64(x))));
    };
    let label = match policy {
        BoundPolicy::Sis => {
            let bounds = sis_bounds(p)?;
            for (i, k) in sis_k_sequence(p)?.iter().enumerate() {
                exact(format!("k_{}", i + 1), k);
            }
            exact("max queue".into(), &bounds.queue);
            exact("max delay".into(), &bounds.delay);
            "sis"
        }
        BoundPolicy::Lis => {
            let bounds = lis_bounds(p)?;
            exact("max queue".into(), &bounds.queue);
            exact("max delay".into(), &bounds.delay);
            let packets = floor_int(&bounds.queue).to_string();
            rows.insert(1, ("queue packets".into(), packets.clone(), packets));
            "lis"
        }
    };
    println!("{label} bounds for b = {}, r = {}, h = {}, d = {}", p.b, p.r, p.h, p.d);
    println!("{:<16} {:>20} {:>16}", "quantity", "exact", "decimal");
    for (name, exact, approx) in rows {
        println!("{name:<16} {exact:>20} {approx:>16}");
    }
    Ok(true)
}
