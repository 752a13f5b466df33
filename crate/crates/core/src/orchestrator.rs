//! Runs batches of simulate-verify replicas on an in-process worker pool and
//! wires batch counts into the sample-size loop.
//!
//! One seed authority scatters work by replica index: replica `i` always
//! receives `replica_seed(master_seed, i)`, regardless of worker count or
//! scheduling. Batch results are reductions over the deterministic index
//! set, so `(p_hat, interval, n_total)` is a pure function of the job
//! configuration minus `worker_count`.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bltlc::Formula;
use crate::checker::{finalize_verdict, simulate_verify, CheckError};
use crate::model::{validate_network, ReactionNetwork, ValidationReport};
use crate::ssa::{replica_seed, RngStream, Trace, RNG_ALGORITHM};
use crate::stats::{
    iterative_estimate, wilson_interval, wilson_sample_size, Abort, BatchCounts, ConfidenceSpec,
    Estimate, IterationRecord, StatsError,
};

/// How the total number of replicas is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Iterative sample-size determination starting from the extreme
    /// estimate.
    Iterative,
    /// One batch at the worst-case size for `p = 0.5`.
    Conservative,
    /// One batch of exactly `n` replicas.
    FixedN(u64),
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Iterative => "iterative",
            Mode::Conservative => "conservative",
            Mode::FixedN(_) => "fixed",
        }
    }
}

/// Everything needed to run one estimation job.
#[derive(Debug, Clone)]
pub struct JobConfig {
    pub network: Arc<ReactionNetwork>,
    /// Desugared formula (no F/G surface forms).
    pub formula: Formula,
    pub t_max: f64,
    pub confidence: ConfidenceSpec,
    pub master_seed: u64,
    pub worker_count: usize,
    pub mode: Mode,
    /// Keep the traces of the first `trace_capture` replicas (by global
    /// index) for export. Zero disables capture.
    pub trace_capture: usize,
}

/// Reduction of one batch of replicas. Replicas that errored are excluded
/// from `trials`.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    pub successes: u64,
    pub trials: u64,
    pub sum_path_length: u64,
    pub error_count: u64,
    /// `(replica index, trace)` pairs captured for export, ordered by index.
    pub captured: Vec<(u64, Trace)>,
}

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error("invalid network:\n{0}")]
    InvalidNetwork(ValidationReport),
    #[error("worker_count must be at least 1")]
    NoWorkers,
    #[error("fixed sample size must be at least 1")]
    EmptyFixedN,
    #[error("batch error fraction {errors}/{count} exceeds 1%: first error: {first}")]
    TooManyReplicaErrors {
        errors: u64,
        count: u64,
        first: String,
    },
    #[error("replica {replica}: {source}")]
    Replica { replica: u64, source: CheckError },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Default)]
struct WorkerTally {
    successes: u64,
    trials: u64,
    sum_path_length: u64,
    error_count: u64,
    first_error: Option<(u64, CheckError)>,
    captured: Vec<(u64, Trace)>,
}

/// Runs replicas `replica_offset .. replica_offset + count` and gathers
/// their outcomes. The reduction is index-deterministic: scheduling and
/// worker count cannot change the result.
pub fn run_batch(
    cfg: &JobConfig,
    replica_offset: u64,
    count: u64,
) -> Result<BatchResult, OrchestratorError> {
    if cfg.worker_count == 0 {
        return Err(OrchestratorError::NoWorkers);
    }
    let next = AtomicU64::new(0);
    let workers = cfg.worker_count.min(count.max(1) as usize);

    let tallies: Vec<WorkerTally> = std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(workers);
        for _ in 0..workers {
            handles.push(scope.spawn(|| {
                let mut tally = WorkerTally::default();
                loop {
                    let k = next.fetch_add(1, Ordering::Relaxed);
                    if k >= count {
                        break;
                    }
                    let index = replica_offset + k;
                    let seed = replica_seed(cfg.master_seed, index);
                    let rng = RngStream::seed_from(seed);
                    match simulate_verify(
                        &cfg.formula,
                        &cfg.network,
                        &cfg.network.initial_state(),
                        cfg.t_max,
                        rng,
                    ) {
                        Ok((verdict, trace)) => {
                            tally.trials += 1;
                            if finalize_verdict(verdict) {
                                tally.successes += 1;
                            }
                            tally.sum_path_length += trace.len() as u64;
                            if (index as usize) < cfg.trace_capture {
                                tally.captured.push((index, trace));
                            }
                        }
                        Err(e) => {
                            tally.error_count += 1;
                            if tally.first_error.is_none() {
                                tally.first_error = Some((index, e));
                            }
                        }
                    }
                }
                tally
            }));
        }
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    });

    let mut result = BatchResult {
        successes: 0,
        trials: 0,
        sum_path_length: 0,
        error_count: 0,
        captured: Vec::new(),
    };
    let mut first_error: Option<(u64, CheckError)> = None;
    for tally in tallies {
        result.successes += tally.successes;
        result.trials += tally.trials;
        result.sum_path_length += tally.sum_path_length;
        result.error_count += tally.error_count;
        result.captured.extend(tally.captured);
        if let Some((idx, err)) = tally.first_error {
            match &first_error {
                Some((best, _)) if *best <= idx => {}
                _ => first_error = Some((idx, err)),
            }
        }
    }
    result.captured.sort_by_key(|(idx, _)| *idx);

    if result.error_count * 100 > count {
        let (replica, source) = first_error.expect("error_count > 0");
        return Err(OrchestratorError::TooManyReplicaErrors {
            errors: result.error_count,
            count,
            first: OrchestratorError::Replica { replica, source }.to_string(),
        });
    }
    Ok(result)
}

/// Full estimation report. `wall_time_seconds` is the only field that is not
/// a pure function of the inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationReport {
    pub p_hat: f64,
    pub lower: f64,
    pub upper: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub n_total: u64,
    pub iterations: Vec<IterationRecord>,
    pub mean_path_length: f64,
    pub mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_n: Option<u64>,
    pub master_seed: u64,
    pub worker_count: usize,
    pub error_count: u64,
    pub wall_time_seconds: f64,
    pub rng_algorithm: String,
    pub tool_version: String,
}

/// Report plus any captured traces (kept out of the serialized report).
#[derive(Debug, Clone)]
pub struct EstimationOutcome {
    pub report: EstimationReport,
    pub traces: Vec<(u64, Trace)>,
}

/// Estimates the probability that the formula holds, sizing the replica
/// sample according to the configured mode.
pub fn estimate_probability(cfg: &JobConfig) -> Result<EstimationOutcome, OrchestratorError> {
    let started = Instant::now();
    let report = validate_network(&cfg.network);
    if !report.is_empty() {
        return Err(OrchestratorError::InvalidNetwork(report));
    }
    if cfg.worker_count == 0 {
        return Err(OrchestratorError::NoWorkers);
    }

    let alpha = cfg.confidence.alpha();
    let epsilon = cfg.confidence.epsilon();
    let mut sum_path_length = 0u64;
    let mut error_count = 0u64;
    let mut traces = Vec::new();

    let estimate: Estimate = match cfg.mode {
        Mode::Iterative => {
            // The cursor advances by the requested count even when replicas
            // errored, so a seed is never handed out twice.
            let mut offset = 0u64;
            iterative_estimate(
                |n| -> Result<BatchCounts, OrchestratorError> {
                    let batch = run_batch(cfg, offset, n)?;
                    offset += n;
                    sum_path_length += batch.sum_path_length;
                    error_count += batch.error_count;
                    traces.extend(batch.captured);
                    Ok(BatchCounts {
                        trials: batch.trials,
                        successes: batch.successes,
                    })
                },
                &cfg.confidence,
            )
            .map_err(|abort| match abort.error {
                Abort::Callback(e) => e,
                Abort::Stats(e) => OrchestratorError::Stats(e),
            })?
        }
        Mode::Conservative | Mode::FixedN(_) => {
            let n = match cfg.mode {
                Mode::Conservative => wilson_sample_size(0.5, epsilon, alpha)?,
                Mode::FixedN(n) => {
                    if n == 0 {
                        return Err(OrchestratorError::EmptyFixedN);
                    }
                    n
                }
                Mode::Iterative => unreachable!(),
            };
            let batch = run_batch(cfg, 0, n)?;
            sum_path_length += batch.sum_path_length;
            error_count += batch.error_count;
            traces.extend(batch.captured);
            let p_hat = batch.successes as f64 / batch.trials as f64;
            let (lower, upper) = wilson_interval(p_hat, batch.trials, alpha)?;
            Estimate {
                p_hat,
                n_total: batch.trials,
                lower,
                upper,
                iterations: vec![IterationRecord {
                    requested: n,
                    trials: batch.trials,
                    successes: batch.successes,
                }],
            }
        }
    };

    let report = EstimationReport {
        p_hat: estimate.p_hat,
        lower: estimate.lower,
        upper: estimate.upper,
        alpha,
        epsilon,
        n_total: estimate.n_total,
        iterations: estimate.iterations,
        mean_path_length: sum_path_length as f64 / estimate.n_total as f64,
        mode: cfg.mode.name().to_owned(),
        fixed_n: match cfg.mode {
            Mode::FixedN(n) => Some(n),
            _ => None,
        },
        master_seed: cfg.master_seed,
        worker_count: cfg.worker_count,
        error_count,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        rng_algorithm: RNG_ALGORITHM.to_owned(),
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
    };
    Ok(EstimationOutcome { report, traces })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bltlc::{desugar_formula, parse_formula};
    use crate::model::NetworkBuilder;

    fn death_cfg(x0: u64, formula: &str, t_max: f64, mode: Mode) -> JobConfig {
        let net = NetworkBuilder::new()
            .species("x", x0)
            .mass_action("decay", &[("x", 1)], &[], 1.0)
            .build()
            .unwrap();
        let f = desugar_formula(parse_formula(formula, &net.symbol_table()).unwrap());
        JobConfig {
            network: Arc::new(net),
            formula: f,
            t_max,
            confidence: ConfidenceSpec::new(0.01, 0.025).unwrap(),
            master_seed: 0xC0FFEE,
            worker_count: 4,
            mode,
            trace_capture: 0,
        }
    }

    #[test]
    fn batch_is_worker_count_invariant() {
        let mut cfg = death_cfg(2, "F[0,1](x == 0)", 1.0, Mode::FixedN(500));
        cfg.worker_count = 1;
        let one = run_batch(&cfg, 0, 500).unwrap();
        cfg.worker_count = 8;
        let eight = run_batch(&cfg, 0, 500).unwrap();
        assert_eq!(one, eight);
    }

    #[test]
    fn tautology_always_succeeds() {
        let cfg = death_cfg(5, "x >= 0", 1.0, Mode::FixedN(200));
        let batch = run_batch(&cfg, 0, 200).unwrap();
        assert_eq!(batch.successes, batch.trials);
        assert_eq!(batch.trials, 200);
        assert_eq!(batch.error_count, 0);
    }

    #[test]
    fn batch_frequency_matches_analytic_extinction() {
        let cfg = death_cfg(2, "F[0,1](x == 0)", 1.0, Mode::FixedN(10_000));
        let batch = run_batch(&cfg, 0, 10_000).unwrap();
        let expected = 1.0 - 2.0 * (-1.0f64).exp() + (-2.0f64).exp();
        let p = batch.successes as f64 / batch.trials as f64;
        let sigma = (expected * (1.0 - expected) / 10_000f64).sqrt();
        assert!(
            (p - expected).abs() < 3.0 * sigma,
            "batch frequency {p} departs from {expected}"
        );
    }

    #[test]
    fn conservative_mode_runs_exactly_2648() {
        let cfg = death_cfg(2, "F[0,1](x == 0)", 1.0, Mode::Conservative);
        let out = estimate_probability(&cfg).unwrap();
        assert_eq!(out.report.n_total, 2648);
        assert_eq!(out.report.iterations.len(), 1);
    }

    #[test]
    fn iterative_tautology_needs_two_batches() {
        // Hand-traced loop at p=1: 127 replicas, then a 177 top-up.
        let cfg = death_cfg(5, "x >= 0", 1.0, Mode::Iterative);
        let out = estimate_probability(&cfg).unwrap();
        assert_eq!(out.report.p_hat, 1.0);
        assert_eq!(out.report.n_total, 304);
        assert_eq!(
            out.report
                .iterations
                .iter()
                .map(|it| it.requested)
                .collect::<Vec<_>>(),
            vec![127, 177]
        );
    }

    #[test]
    fn reports_are_reproducible_modulo_wall_time() {
        let cfg = death_cfg(2, "F[0,1](x == 0)", 1.0, Mode::Iterative);
        let mut a = estimate_probability(&cfg).unwrap().report;
        let mut b = estimate_probability(&cfg).unwrap().report;
        a.wall_time_seconds = 0.0;
        b.wall_time_seconds = 0.0;
        assert_eq!(a, b);
    }

    #[test]
    fn estimation_is_worker_count_invariant() {
        let mut cfg = death_cfg(2, "F[0,1](x == 0)", 1.0, Mode::Iterative);
        let mut reports = Vec::new();
        for workers in [1usize, 4, 8] {
            cfg.worker_count = workers;
            let mut r = estimate_probability(&cfg).unwrap().report;
            r.wall_time_seconds = 0.0;
            r.worker_count = 0;
            reports.push(r);
        }
        assert_eq!(reports[0], reports[1]);
        assert_eq!(reports[1], reports[2]);
    }

    #[test]
    fn seeds_are_never_reused_across_iterations() {
        let cfg = death_cfg(2, "F[0,1](x == 0)", 1.0, Mode::Iterative);
        let out = estimate_probability(&cfg).unwrap();
        let total_requested: u64 = out.report.iterations.iter().map(|it| it.requested).sum();
        let seeds: Vec<u64> = (0..total_requested)
            .map(|i| replica_seed(cfg.master_seed, i))
            .collect();
        let mut dedup = seeds.clone();
        dedup.sort_unstable();
        dedup.dedup();
        assert_eq!(dedup.len(), seeds.len());
    }

    #[test]
    fn invalid_network_is_rejected_up_front() {
        let net = ReactionNetwork {
            species: vec![
                crate::model::Species {
                    name: "x".into(),
                    initial_count: 1,
                },
                crate::model::Species {
                    name: "x".into(),
                    initial_count: 2,
                },
            ],
            parameters: vec![],
            reactions: vec![],
        };
        let f = parse_formula("x >= 0", &net.symbol_table()).unwrap();
        let cfg = JobConfig {
            network: Arc::new(net),
            formula: f,
            t_max: 1.0,
            confidence: ConfidenceSpec::new(0.01, 0.025).unwrap(),
            master_seed: 1,
            worker_count: 1,
            mode: Mode::FixedN(1),
            trace_capture: 0,
        };
        assert!(matches!(
            estimate_probability(&cfg),
            Err(OrchestratorError::InvalidNetwork(_))
        ));
    }

    #[test]
    fn failing_replicas_beyond_one_percent_abort_the_batch() {
        // The atom divides by x, and every replica reaches x = 0 quickly.
        let net = NetworkBuilder::new()
            .species("x", 1)
            .mass_action("decay", &[("x", 1)], &[], 1.0)
            .build()
            .unwrap();
        let f = desugar_formula(parse_formula("G[0,50](1 / x >= 0)", &net.symbol_table()).unwrap());
        let cfg = JobConfig {
            network: Arc::new(net),
            formula: f,
            t_max: 50.0,
            confidence: ConfidenceSpec::new(0.01, 0.025).unwrap(),
            master_seed: 3,
            worker_count: 2,
            mode: Mode::FixedN(100),
            trace_capture: 0,
        };
        let err = run_batch(&cfg, 0, 100).unwrap_err();
        match err {
            OrchestratorError::TooManyReplicaErrors {
                errors,
                count,
                first,
            } => {
                assert_eq!(count, 100);
                assert!(errors > 1);
                assert!(first.contains("division by zero"), "{first}");
            }
            other => panic!("expected TooManyReplicaErrors, got {other:?}"),
        }
    }

    #[test]
    fn trace_capture_returns_first_replicas_in_order() {
        let mut cfg = death_cfg(3, "F[0,2](x == 0)", 2.0, Mode::FixedN(50));
        cfg.trace_capture = 5;
        let out = estimate_probability(&cfg).unwrap();
        let indices: Vec<u64> = out.traces.iter().map(|(i, _)| *i).collect();
        assert_eq!(indices, vec![0, 1, 2, 3, 4]);
    }
}
