//! Model-file loading, report rendering and trace export for the `smc`
//! binary. Kept as a library so integration tests can drive the same paths.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use smc_core::model::{NetworkBuilder, ReactionNetwork, ValidationReport, Violation};
use smc_core::orchestrator::EstimationReport;
use smc_core::ssa::Trace;

/// Process exit codes, one per error class.
pub mod exit_code {
    pub const OK: i32 = 0;
    /// Bad command line (also used by clap's own usage errors).
    pub const USAGE: i32 = 2;
    pub const IO: i32 = 3;
    pub const MODEL_SYNTAX: i32 = 4;
    pub const MODEL_INVALID: i32 = 5;
    pub const FORMULA: i32 = 6;
    pub const RUNTIME: i32 = 7;
}

/// On-disk model description.
///
/// ```json
/// {
///   "species": [{"name": "x", "initial": 2}],
///   "parameters": {"k": 1.0},
///   "reactions": [
///     {"name": "decay", "reactants": {"x": 1}, "products": {}, "mass_action": 1.0},
///     {"name": "feed", "products": {"x": 1}, "rate": "k / 2"}
///   ]
/// }
/// ```
///
/// Each reaction carries exactly one of `mass_action` (a positive rate
/// constant) or `rate` (a propensity expression over species and
/// parameters). Omitted `reactants`/`products` mean "none".
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    species: Vec<SpeciesDef>,
    #[serde(default)]
    parameters: BTreeMap<String, f64>,
    reactions: Vec<ReactionDef>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpeciesDef {
    name: String,
    initial: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReactionDef {
    name: String,
    #[serde(default)]
    reactants: BTreeMap<String, u32>,
    #[serde(default)]
    products: BTreeMap<String, u32>,
    #[serde(default)]
    mass_action: Option<f64>,
    #[serde(default)]
    rate: Option<String>,
}

#[derive(Debug)]
pub enum LoadError {
    Io(PathBuf, std::io::Error),
    Json(PathBuf, serde_json::Error),
    Invalid(ValidationReport),
}

impl std::fmt::Display for LoadError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LoadError::Io(path, e) => write!(f, "cannot read {}: {e}", path.display()),
            LoadError::Json(path, e) => {
                write!(f, "{} is not a valid model file: {e}", path.display())
            }
            LoadError::Invalid(report) => {
                writeln!(f, "model validation failed:")?;
                write!(f, "{report}")
            }
        }
    }
}

impl std::error::Error for LoadError {}

impl LoadError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LoadError::Io(..) => exit_code::IO,
            LoadError::Json(..) => exit_code::MODEL_SYNTAX,
            LoadError::Invalid(..) => exit_code::MODEL_INVALID,
        }
    }
}

/// Loads and validates a model file. All validation violations are
/// collected and reported together.
pub fn load_model_file(path: &Path) -> Result<ReactionNetwork, LoadError> {
    let text = fs::read_to_string(path).map_err(|e| LoadError::Io(path.to_owned(), e))?;
    let file: ModelFile =
        serde_json::from_str(&text).map_err(|e| LoadError::Json(path.to_owned(), e))?;

    let mut builder = NetworkBuilder::new();
    for s in &file.species {
        builder = builder.species(&s.name, s.initial);
    }
    for (name, value) in &file.parameters {
        builder = builder.parameter(name, *value);
    }
    let mut rate_violations = Vec::new();
    for r in &file.reactions {
        let reactants: Vec<(&str, u32)> =
            r.reactants.iter().map(|(n, k)| (n.as_str(), *k)).collect();
        let products: Vec<(&str, u32)> = r.products.iter().map(|(n, k)| (n.as_str(), *k)).collect();
        match (&r.mass_action, &r.rate) {
            (Some(c), None) => {
                builder = builder.mass_action(&r.name, &reactants, &products, *c);
            }
            (None, Some(expr)) => {
                builder = builder.explicit_rate(&r.name, &reactants, &products, expr);
            }
            _ => {
                rate_violations.push(Violation::ExpressionSyntax {
                    reaction: r.name.clone(),
                    message: "exactly one of `mass_action` or `rate` is required".into(),
                });
            }
        }
    }
    match builder.build() {
        Ok(net) if rate_violations.is_empty() => Ok(net),
        Ok(_) => Err(LoadError::Invalid(ValidationReport {
            violations: rate_violations,
        })),
        Err(mut report) => {
            report.violations.extend(rate_violations);
            Err(LoadError::Invalid(report))
        }
    }
}

/// Human-readable report rendering.
pub fn render_text(report: &EstimationReport, wald: Option<(f64, f64)>) -> String {
    let mut out = String::new();
    let confidence = 100.0 * (1.0 - report.alpha);
    let _ = writeln!(out, "p_hat            {:.6}", report.p_hat);
    let _ = writeln!(
        out,
        "interval         [{:.6}, {:.6}]  ({confidence}% confidence, epsilon {})",
        report.lower, report.upper, report.epsilon
    );
    if let Some((wl, wu)) = wald {
        let _ = writeln!(
            out,
            "wald interval    [{wl:.6}, {wu:.6}]  (comparison only)"
        );
    }
    let _ = writeln!(out, "n_total          {}", report.n_total);
    let batches: Vec<String> = report
        .iterations
        .iter()
        .map(|it| format!("{}/{}", it.successes, it.trials))
        .collect();
    let _ = writeln!(
        out,
        "iterations       {} ({})",
        report.iterations.len(),
        batches.join(", ")
    );
    let _ = writeln!(out, "mean path length {:.2}", report.mean_path_length);
    let _ = writeln!(
        out,
        "mode             {}{}",
        report.mode,
        report
            .fixed_n
            .map(|n| format!(" (n = {n})"))
            .unwrap_or_default()
    );
    let _ = writeln!(out, "master seed      {}", report.master_seed);
    let _ = writeln!(out, "workers          {}", report.worker_count);
    if report.error_count > 0 {
        let _ = writeln!(out, "replica errors   {}", report.error_count);
    }
    let _ = writeln!(out, "wall time        {:.3} s", report.wall_time_seconds);
    out
}

/// JSON report, optionally extended with a comparison Wald interval.
pub fn render_json(
    report: &EstimationReport,
    wald: Option<(f64, f64)>,
) -> serde_json::Result<String> {
    let mut value = serde_json::to_value(report)?;
    if let Some((wl, wu)) = wald {
        let obj = value
            .as_object_mut()
            .expect("report serializes to an object");
        obj.insert("wald_lower".into(), serde_json::json!(wl));
        obj.insert("wald_upper".into(), serde_json::json!(wu));
    }
    serde_json::to_string_pretty(&value)
}

/// Writes one trace as CSV: `time,<species...>`, one row per trace point at
/// its entry time.
pub fn write_trace_csv(
    mut w: impl Write,
    trace: &Trace,
    species_names: &[String],
) -> std::io::Result<()> {
    write!(w, "time")?;
    for name in species_names {
        write!(w, ",{name}")?;
    }
    writeln!(w)?;
    for i in 0..trace.len() {
        write!(w, "{}", trace.entry_time(i))?;
        for &c in &trace.state(i).counts {
            write!(w, ",{c}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Target path for the `index`-th exported trace: the bare path when only
/// one trace is requested, otherwise the index is spliced in before the
/// extension.
pub fn trace_file_path(base: &Path, index: u64, total: usize) -> PathBuf {
    if total <= 1 {
        return base.to_owned();
    }
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
    let ext = base.extension().and_then(|s| s.to_str());
    let name = match ext {
        Some(ext) => format!("{stem}_{index:04}.{ext}"),
        None => format!("{stem}_{index:04}"),
    };
    base.with_file_name(name)
}

/// Parses a `start:stop:step` horizon sweep into its evaluation points
/// (inclusive of `stop` up to a step-relative tolerance).
pub fn parse_sweep(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected START:STOP:STEP, got `{spec}`"));
    }
    let parse = |s: &str, what: &str| -> Result<f64, String> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| format!("invalid {what} `{s}` in sweep"))
    };
    let start = parse(parts[0], "start")?;
    let stop = parse(parts[1], "stop")?;
    let step = parse(parts[2], "step")?;
    if !start.is_finite() || start <= 0.0 {
        return Err(format!("sweep start must be positive, got {start}"));
    }
    if !step.is_finite() || step <= 0.0 {
        return Err(format!("sweep step must be positive, got {step}"));
    }
    if stop < start {
        return Err(format!("sweep stop {stop} precedes start {start}"));
    }
    let mut points = Vec::new();
    let mut k = 0u32;
    loop {
        let t = start + step * k as f64;
        if t > stop + 1e-9 * step {
            break;
        }
        points.push(t);
        k += 1;
    }
    Ok(points)
}
