//! Batch runner for the verification suites.
//!
//! Exit status: 0 when every check passes, 1 when a check fails, 2 on a
//! configuration error.

use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;
use zflab::config::Config;
use zflab::suites::{run_suite_with_data, SUITES};
use zflab::Error;

#[derive(Parser, Debug)]
#[command(name = "zflab", version, about = "Run named verification suites and write JSON/CSV reports")]
struct Args {
    /// Suite to run (algebra, araki, conditions-f, conjecture-tm, logderiv, residues, analysis, summability, warped, all).
    #[arg(long, default_value = "all")]
    suite: String,
    /// Config file of `section.key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra `section.key=value` overrides, applied after the file and before the flags below.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides every per-check tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// JSON report path; `-` writes to stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Directory for CSV data tables.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    grid_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    grid_max: Option<f64>,
    #[arg(long)]
    grid_points: Option<usize>,
    #[arg(long)]
    nmax: Option<usize>,
    #[arg(long)]
    mass: Option<f64>,
    /// Scattering function spec such as `exponential:a=0.7`; repeatable.
    #[arg(long = "s")]
    s: Vec<String>,
    /// Summability exponents, comma separated.
    #[arg(long)]
    alpha: Option<String>,
    /// Deformation parameter of the warped suite.
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Only print the summary line.
    #[arg(long)]
    quiet: bool,
}

fn build_config(args: &Args) -> zflab::Result<Config> {
    let mut cfg = match &args.config {
        Some(p) => Config::from_file(p)?,
        None => Config::default(),
    };
    for kv in &args.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        cfg.set(k.trim(), v)?;
    }
    let num = |k: &str, v: Option<String>, cfg: &mut Config| v.map(|v| cfg.set(k, &v)).transpose();
    num("run.seed", args.seed.map(|x| x.to_string()), &mut cfg)?;
    num("run.tol", args.tol.map(|x| x.to_string()), &mut cfg)?;
    num("run.trials", args.trials.map(|x| x.to_string()), &mut cfg)?;
    num("grid.min", args.grid_min.map(|x| x.to_string()), &mut cfg)?;
    num("grid.max", args.grid_max.map(|x| x.to_string()), &mut cfg)?;
    num("grid.points", args.grid_points.map(|x| x.to_string()), &mut cfg)?;
    num("grid.mass", args.mass.map(|x| x.to_string()), &mut cfg)?;
    num("fock.nmax", args.nmax.map(|x| x.to_string()), &mut cfg)?;
    num("summability.alpha", args.alpha.clone(), &mut cfg)?;
    num("warped.a", args.a.map(|x| x.to_string()), &mut cfg)?;
    if !args.s.is_empty() {
        cfg.set("scattering.s", &args.s.join(";"))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    if !SUITES.contains(&args.suite.as_str()) {
        eprintln!("error: unknown suite '{}' (expected one of {})", args.suite, SUITES.join(", "));
        return ExitCode::from(2);
    }
    let cfg = match build_config(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let out = match run_suite_with_data(&args.suite, &cfg) {
        Ok(o) => o,
        Err(e @ (Error::Config(_) | Error::Precondition(_))) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let rep = &out.report;
    let to_stdout = args.report.as_deref().is_some_and(|p| p.as_os_str() == "-");
    if !args.quiet && !to_stdout {
        for c in &rep.checks {
            println!(
                "{} {:<48} residual {:>10.3e}  tol {:>9.2e}  [{}]",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.max_residual,
                c.tol,
                c.paper_anchor
            );
        }
    }
    if let Some(path) = &args.report {
        if to_stdout {
            println!("{}", rep.to_json());
        } else if let Err(e) = std::fs::write(path, rep.to_json()) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(2);
        }
    }
    if let Some(dir) = &args.data_dir {
        for t in &out.tables {
            if let Err(e) = t.write(dir) {
                eprintln!("error: cannot write table {} in {}: {e}", t.name, dir.display());
                return ExitCode::from(2);
            }
        }
    }
    let failed = rep.failures().count();
    let summary = format!("{}: {} checks, {} failed", rep.suite, rep.checks.len(), failed);
    if to_stdout {
        eprintln!("{summary}");
    } else {
        println!("{summary}");
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
