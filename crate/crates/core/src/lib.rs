//! Statistical model checking for stochastic biochemical reaction networks.
//!
//! The crate estimates the probability that a temporal-logic property holds
//! of a continuous-time Markov chain given implicitly by a reaction network:
//!
//! * [`model`] — species, parameters, reactions, propensities and network
//!   validation; [`expr`] is the shared arithmetic expression language.
//! * [`ssa`] — exact trajectory sampling by the direct method, plus the
//!   deterministic seeding contract for reproducible parallel runs.
//! * [`bltlc`] — the temporal logic: parser, desugaring, and whole-trace
//!   reference semantics.
//! * [`checker`] — on-the-fly verification that generates a trajectory only
//!   as far as the formula verdict requires.
//! * [`stats`] — Wilson score intervals and the iterative sample-size loop.
//! * [`orchestrator`] — the worker pool tying replicas to the estimator.

pub mod bltlc;
pub mod checker;
pub mod expr;
pub mod model;
pub mod orchestrator;
pub mod ssa;
pub mod stats;

pub use bltlc::{check_trace_offline, desugar_formula, parse_formula, Formula, Interval};
pub use checker::{finalize_verdict, simulate_verify, Verdict};
pub use expr::{parse_expression, Expr, SymbolTable};
pub use model::{
    apply_stoichiometry, compute_propensity, validate_network, NetworkBuilder, ReactionNetwork,
    State,
};
pub use orchestrator::{
    estimate_probability, run_batch, EstimationOutcome, EstimationReport, JobConfig, Mode,
};
pub use ssa::{
    derive_seed_stream, next_event, replica_seed, simulate_to_time, RngStream, Trace, TraceError,
};
pub use stats::{
    iterative_estimate, normal_quantile, wilson_interval, wilson_sample_size, ConfidenceSpec,
    Estimate,
};
