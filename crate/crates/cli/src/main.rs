use std::fs;
use std::hash::{BuildHasher, Hasher};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{ArgGroup, Parser, ValueEnum};

use smc_cli::{
    exit_code, load_model_file, parse_sweep, render_json, render_text, trace_file_path,
    write_trace_csv,
};
use smc_core::bltlc::{desugar_formula, parse_formula};
use smc_core::orchestrator::{estimate_probability, JobConfig, Mode};
use smc_core::stats::{wald_interval, ConfidenceSpec};

/// Statistical model checker for stochastic reaction networks: estimates the
/// probability that a temporal-logic property holds, from on-the-fly
/// verified stochastic simulations sized by the iterative Wilson procedure.
#[derive(Debug, Parser)]
#[command(name = "smc", version, about, max_term_width = 100)]
#[command(group(ArgGroup::new("property").required(true).args(["formula", "formula_file"])))]
struct Cli {
    /// Model file (JSON; see the repository README for the schema).
    #[arg(long, value_name = "PATH")]
    model: PathBuf,

    /// Property in concrete syntax, e.g. "(a <= 4) U[0,0.6] (y >= 5)".
    #[arg(long, value_name = "FORMULA")]
    formula: Option<String>,

    /// Read the property from a text file instead.
    #[arg(long, value_name = "PATH", conflicts_with = "formula")]
    formula_file: Option<PathBuf>,

    /// Simulation horizon in model-time units.
    #[arg(
        long,
        value_name = "REAL",
        required_unless_present = "sweep_tmax",
        conflicts_with = "sweep_tmax"
    )]
    tmax: Option<f64>,

    /// Confidence-interval semi-width.
    #[arg(long, value_name = "REAL", default_value_t = 0.025)]
    epsilon: f64,

    /// Confidence parameter; the confidence level is 1 - alpha.
    #[arg(long, value_name = "REAL", default_value_t = 0.01)]
    alpha: f64,

    /// Sample-size policy.
    #[arg(long, value_enum, default_value_t = ModeArg::Iterative)]
    mode: ModeArg,

    /// Replica count, required with --mode fixed.
    #[arg(long, value_name = "INT")]
    n: Option<u64>,

    /// Master seed for the replica seed stream. Random when omitted; always
    /// echoed in the report so any run can be reproduced exactly.
    #[arg(long, value_name = "UINT64")]
    seed: Option<u64>,

    /// Worker threads. Defaults to the host's available cores.
    #[arg(long, value_name = "INT")]
    workers: Option<usize>,

    /// Write the first replica traces as CSV to this path.
    #[arg(long, value_name = "PATH")]
    trace_out: Option<PathBuf>,

    /// How many replica traces to export with --trace-out.
    #[arg(long, value_name = "INT", default_value_t = 1)]
    trace_count: usize,

    /// Report format on stdout.
    #[arg(long, value_enum, default_value_t = ReportArg::Text)]
    report: ReportArg,

    /// Sweep the horizon over START:STOP:STEP and emit one CSV row
    /// "tmax,p_hat,lower,upper,n_total" per point.
    #[arg(long, value_name = "START:STOP:STEP")]
    sweep_tmax: Option<String>,

    /// Include the Wald interval in the report, for comparison.
    #[arg(long)]
    wald: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Iterative,
    Conservative,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportArg {
    Json,
    Text,
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(exit_code::USAGE as u8)
}

fn fail(code: i32, msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code as u8)
}

fn random_seed() -> u64 {
    std::collections::hash_map::RandomState::new()
        .build_hasher()
        .finish()
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let confidence = match ConfidenceSpec::new(cli.alpha, cli.epsilon) {
        Ok(c) => c,
        Err(e) => return usage_error(&e.to_string()),
    };
    let mode = match cli.mode {
        ModeArg::Iterative => Mode::Iterative,
        ModeArg::Conservative => Mode::Conservative,
        ModeArg::Fixed => match cli.n {
            Some(n) if n >= 1 => Mode::FixedN(n),
            Some(_) => return usage_error("--n must be at least 1"),
            None => return usage_error("--mode fixed requires --n"),
        },
    };
    if cli.n.is_some() && cli.mode != ModeArg::Fixed {
        return usage_error("--n only applies to --mode fixed");
    }

    let network = match load_model_file(&cli.model) {
        Ok(net) => net,
        Err(e) => return fail(e.exit_code(), &e.to_string()),
    };

    let formula_text = match (&cli.formula, &cli.formula_file) {
        (Some(text), None) => text.clone(),
        (None, Some(path)) => match fs::read_to_string(path) {
            Ok(text) => text,
            Err(e) => {
                return fail(
                    exit_code::IO,
                    &format!("cannot read {}: {e}", path.display()),
                )
            }
        },
        _ => unreachable!("clap group enforces exactly one"),
    };
    let formula = match parse_formula(formula_text.trim(), &network.symbol_table()) {
        Ok(f) => desugar_formula(f),
        Err(e) => return fail(exit_code::FORMULA, &format!("invalid formula: {e}")),
    };

    let master_seed = cli.seed.unwrap_or_else(random_seed);
    let worker_count = cli.workers.unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    });
    if worker_count == 0 {
        return usage_error("--workers must be at least 1");
    }
    let trace_capture = if cli.trace_out.is_some() {
        cli.trace_count.max(1)
    } else {
        0
    };

    let species_names: Vec<String> = network.species.iter().map(|s| s.name.clone()).collect();
    let mut cfg = JobConfig {
        network: Arc::new(network),
        formula,
        t_max: 0.0,
        confidence,
        master_seed,
        worker_count,
        mode,
        trace_capture,
    };

    if let Some(sweep) = &cli.sweep_tmax {
        let points = match parse_sweep(sweep) {
            Ok(p) => p,
            Err(e) => return usage_error(&e),
        };
        println!("tmax,p_hat,lower,upper,n_total");
        for t in points {
            cfg.t_max = t;
            match estimate_probability(&cfg) {
                Ok(out) => {
                    let r = &out.report;
                    println!("{t},{},{},{},{}", r.p_hat, r.lower, r.upper, r.n_total);
                }
                Err(e) => return fail(exit_code::RUNTIME, &e.to_string()),
            }
        }
        return ExitCode::from(exit_code::OK as u8);
    }

    let t_max = cli.tmax.expect("clap requires --tmax without --sweep-tmax");
    if !t_max.is_finite() || t_max <= 0.0 {
        return usage_error(&format!("--tmax must be positive and finite, got {t_max}"));
    }
    cfg.t_max = t_max;

    let outcome = match estimate_probability(&cfg) {
        Ok(out) => out,
        Err(e) => return fail(exit_code::RUNTIME, &e.to_string()),
    };
    let report = &outcome.report;

    if let Some(base) = &cli.trace_out {
        let total = outcome.traces.len();
        for (index, trace) in &outcome.traces {
            let path = trace_file_path(base, *index, total);
            let file = match fs::File::create(&path) {
                Ok(f) => f,
                Err(e) => {
                    return fail(
                        exit_code::IO,
                        &format!("cannot write {}: {e}", path.display()),
                    )
                }
            };
            if let Err(e) = write_trace_csv(std::io::BufWriter::new(file), trace, &species_names) {
                return fail(
                    exit_code::IO,
                    &format!("cannot write {}: {e}", path.display()),
                );
            }
        }
    }

    let wald = if cli.wald {
        match wald_interval(report.p_hat, report.n_total, report.alpha) {
            Ok(bounds) => Some(bounds),
            Err(e) => return fail(exit_code::RUNTIME, &e.to_string()),
        }
    } else {
        None
    };

    match cli.report {
        ReportArg::Json => match render_json(report, wald) {
            Ok(json) => println!("{json}"),
            Err(e) => return fail(exit_code::RUNTIME, &format!("cannot serialize report: {e}")),
        },
        ReportArg::Text => print!("{}", render_text(report, wald)),
    }
    ExitCode::from(exit_code::OK as u8)
}
