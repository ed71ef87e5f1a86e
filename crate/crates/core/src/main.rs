use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::Value;

use stablab::lab::acceptance::run_suite;
use stablab::lab::{default_floor, fit_decay, linearize_scenario, run_scenario, spectrum_scenario, Scenario, REPORT_FILE};
use stablab::{Error, Result};

/// Linearized-stability laboratory.
#[derive(Debug, Parser)]
#[command(name = "stablab", version)]
struct Cli {
    /// Scenario JSON (or CSV for `fit-decay`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for every random choice; overrides the scenario's own.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and write report.json, trajectory.csv and decay.svg.
    Simulate,
    /// Print the linearization at the base state as JSON.
    Linearize,
    /// Print eigenvalues, gap and kernel data as JSON.
    Spectrum,
    /// Fit an exponential decay rate to one column of a CSV file.
    FitDecay {
        /// Column holding the norms; defaults to the second column.
        #[arg(long)]
        column: Option<String>,
        /// Noise floor; defaults to 1e-12 times the first norm.
        #[arg(long)]
        floor: Option<f64>,
    },
    /// Run the acceptance suite and write report.json.
    Verify,
    /// Summarize the report.json in the output directory.
    Report,
}

enum Outcome {
    Pass,
    Fail,
    /// Reported already; exit as an error.
    Error,
}

/// `println!` that reports a closed stdout as an error instead of panicking.
macro_rules! out {
    ($($arg:tt)*) => {
        writeln!(std::io::stdout().lock(), $($arg)*)?
    };
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(2),
        Ok(Outcome::Error) => ExitCode::from(1),
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn config(cli: &Cli) -> Result<&Path> {
    cli.config
        .as_deref()
        .ok_or_else(|| Error::Config("--config is required for this command".into()))
}

fn load_scenario(cli: &Cli) -> Result<Scenario> {
    Scenario::parse(&fs::read_to_string(config(cli)?)?)
}

fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Simulate => {
            let report = run_scenario(config(cli)?, &cli.out, cli.seed)?;
            out!("{}: {}", report.scenario, report.status);
            if let Some(msg) = &report.message {
                out!("  {msg}");
            }
            for c in &report.checks {
                out!("  {} {}: {:e} (bound {:e})", if c.passed { "ok  " } else { "FAIL" }, c.name, c.value, c.bound);
            }
            out!("  written to {}", cli.out.display());
            match report.status.as_str() {
                "pass" => Ok(Outcome::Pass),
                "fail" => Ok(Outcome::Fail),
                _ => Ok(Outcome::Error),
            }
        }
        Command::Linearize => {
            let s = load_scenario(cli)?;
            print_json(&linearize_scenario(&s, cli.seed.or(s.seed).unwrap_or(0))?)
        }
        Command::Spectrum => {
            let s = load_scenario(cli)?;
            print_json(&spectrum_scenario(&s, cli.seed.or(s.seed).unwrap_or(0))?)
        }
        Command::FitDecay { column, floor } => {
            let (times, norms) = read_series(config(cli)?, column.as_deref())?;
            let fit = fit_decay(&times, &norms, floor.unwrap_or_else(|| default_floor(&norms)))?;
            print_json(&serde_json::to_value(fit)?)
        }
        Command::Verify => {
            let seed = cli.seed.unwrap_or(0);
            let (report, timed) = run_suite(seed, |t| {
                let _ = writeln!(std::io::stdout().lock(), "{}", t.line());
            });
            fs::create_dir_all(&cli.out)?;
            let mut json = serde_json::to_vec_pretty(&report)?;
            json.push(b'\n');
            let tmp = cli.out.join(format!(".{REPORT_FILE}.tmp"));
            fs::write(&tmp, json)?;
            fs::rename(&tmp, cli.out.join(REPORT_FILE))?;
            let ok = report.passed && timed.iter().all(|t| t.within_budget());
            Ok(if ok { Outcome::Pass } else { Outcome::Fail })
        }
        Command::Report => {
            let path = cli.out.join(REPORT_FILE);
            let v: Value = serde_json::from_str(&fs::read_to_string(&path)?)?;
            summarize(&v)
        }
    }
}

fn print_json(v: &Value) -> Result<Outcome> {
    writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(v)?)?;
    Ok(Outcome::Pass)
}

/// Reads the first column as time and `column` (or the second) as norms.
fn read_series(path: &Path, column: Option<&str>) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let idx = match column {
        Some(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("no column `{name}` in {}", path.display())))?,
        None => 1,
    };
    let mut times = Vec::new();
    let mut norms = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| Error::Config(format!("unreadable value in column {i} of {}", path.display())))
        };
        times.push(parse(0)?);
        norms.push(parse(idx)?);
    }
    Ok((times, norms))
}

fn summarize(v: &Value) -> Result<Outcome> {
    if let Some(criteria) = v.get("criteria").and_then(Value::as_array) {
        out!("acceptance report, seed {}", v["seed"]);
        for c in criteria {
            let mark = if c["passed"].as_bool() == Some(true) { "PASS" } else { "FAIL" };
            out!("{mark} {:>2}  {}", c["id"], c["title"].as_str().unwrap_or(""));
        }
        return Ok(if v["passed"].as_bool() == Some(true) { Outcome::Pass } else { Outcome::Fail });
    }
    let status = v["status"].as_str().unwrap_or("unknown");
    out!("scenario {} ({}): {status}", v["scenario"], v["model"]);
    for key in ["gap", "omega_fit", "weighted_k"] {
        if let Some(x) = v[key].as_f64() {
            out!("  {key} = {x}");
        }
    }
    if let Some(limit) = v.get("limit").filter(|l| !l.is_null()) {
        out!("  limit: {} {} (residual {})", limit["description"].as_str().unwrap_or(""), limit["coords"], limit["residual"]);
    }
    if let Some(checks) = v["checks"].as_array() {
        for c in checks {
            let mark = if c["passed"].as_bool() == Some(true) { "ok  " } else { "FAIL" };
            out!("  {mark} {}", c["name"].as_str().unwrap_or(""));
        }
    }
    Ok(match status {
        "pass" => Outcome::Pass,
        "fail" => Outcome::Fail,
        _ => Outcome::Error,
    })
}
