//! On-the-fly verification driving simulation.
//!
//! The checker extends a single linear trace buffer one reaction event at a
//! time, and only while the formula verdict is still open. Sub-formula
//! evaluations share the buffer: a child may extend it, and the parent
//! resumes from its own position against the longer trace, so a point is
//! never regenerated and the trajectory never branches.
//!
//! Verdicts are three-valued. `Unknown` marks a sub-formula whose value
//! depends on states beyond the time horizon; it propagates through the
//! boolean connectives by Kleene logic and collapses to `false` only at the
//! top level. This keeps timeout pessimism sound under negation: a timeout
//! deep inside an `Until` must not flip into optimism when the enclosing
//! formula negates it.

use thiserror::Error;

use crate::bltlc::Formula;
use crate::model::{apply_stoichiometry, ModelError, ReactionNetwork, State};
use crate::ssa::{next_event_into, RngStream, StepOutcome, Trace};

/// Three-valued check outcome. `Unknown` only arises when the time horizon
/// cut generation before the formula resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    True,
    False,
    Unknown,
}

impl Verdict {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Verdict::True
        } else {
            Verdict::False
        }
    }

    pub fn negate(self) -> Self {
        match self {
            Verdict::True => Verdict::False,
            Verdict::False => Verdict::True,
            Verdict::Unknown => Verdict::Unknown,
        }
    }

    pub fn and(self, other: Self) -> Self {
        match (self, other) {
            (Verdict::False, _) | (_, Verdict::False) => Verdict::False,
            (Verdict::True, Verdict::True) => Verdict::True,
            _ => Verdict::Unknown,
        }
    }

    pub fn or(self, other: Self) -> Self {
        match (self, other) {
            (Verdict::True, _) | (_, Verdict::True) => Verdict::True,
            (Verdict::False, Verdict::False) => Verdict::False,
            _ => Verdict::Unknown,
        }
    }

    pub fn is_decided(self) -> bool {
        self != Verdict::Unknown
    }
}

/// Pessimistic top-level collapse: an unresolved formula counts as false,
/// so the reported frequency never overstates the true probability for
/// negation-free formulas.
pub fn finalize_verdict(v: Verdict) -> bool {
    v == Verdict::True
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CheckError {
    #[error("t_max must be positive and finite, got {0}")]
    InvalidTMax(f64),
    #[error("formula contains F/G surface forms; desugar it first")]
    SurfaceForm,
    #[error("initial state has {got} species, network declares {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Append-only trajectory buffer tied to the stream that generates it.
/// Points are only ever added at the tail.
struct TraceBuffer<'n> {
    net: &'n ReactionNetwork,
    params: Vec<f64>,
    states: Vec<State>,
    entry_times: Vec<f64>,
    absorbed: bool,
    rng: RngStream,
    scratch: Vec<f64>,
}

impl<'n> TraceBuffer<'n> {
    fn new(net: &'n ReactionNetwork, init: State, rng: RngStream) -> Self {
        Self {
            net,
            params: net.param_values(),
            states: vec![init],
            entry_times: vec![0.0],
            absorbed: false,
            rng,
            scratch: Vec::with_capacity(net.reactions.len()),
        }
    }

    fn last_index(&self) -> usize {
        self.states.len() - 1
    }

    fn entry(&self, i: usize) -> f64 {
        self.entry_times[i]
    }

    fn state(&self, i: usize) -> &State {
        &self.states[i]
    }

    /// Generates the next event at the tail. Returns `false` when the tail
    /// state turned out to be absorbing (nothing was appended).
    fn extend(&mut self) -> Result<bool, ModelError> {
        debug_assert!(!self.absorbed);
        let tail = self.states.last().unwrap();
        match next_event_into(
            tail,
            self.net,
            &self.params,
            &mut self.rng,
            &mut self.scratch,
        )? {
            StepOutcome::Absorbed => {
                self.absorbed = true;
                Ok(false)
            }
            StepOutcome::Event { reaction, delay } => {
                let next = apply_stoichiometry(tail, &self.net.reactions[reaction]);
                let t = *self.entry_times.last().unwrap() + delay;
                self.states.push(next);
                self.entry_times.push(t);
                Ok(true)
            }
        }
    }

    fn into_trace(self) -> Trace {
        let end = *self.entry_times.last().unwrap();
        Trace::from_parts(self.states, self.entry_times, end)
    }
}

struct Checker<'n> {
    buf: TraceBuffer<'n>,
    t_max: f64,
}

impl Checker<'_> {
    /// Ensures position `i + 1` exists, generating at most one event.
    /// Returns `false` when the tail is absorbing and no successor will
    /// ever exist.
    fn ensure_successor(&mut self, i: usize) -> Result<bool, ModelError> {
        if i < self.buf.last_index() {
            return Ok(true);
        }
        if self.buf.absorbed {
            return Ok(false);
        }
        self.buf.extend()
    }

    /// Recursive verdict evaluation at buffer position `i`. Callers only
    /// pass positions whose entry time is within the horizon.
    fn check(&mut self, f: &Formula, i: usize) -> Result<Verdict, CheckError> {
        match f {
            Formula::Atom { lhs, op, rhs } => {
                let counts = &self.buf.state(i).counts;
                let a = lhs.eval(counts, &self.buf.params).map_err(atom_error)?;
                let b = rhs.eval(counts, &self.buf.params).map_err(atom_error)?;
                Ok(Verdict::from_bool(op.holds(a, b)))
            }
            Formula::Not(p) => Ok(self.check(p, i)?.negate()),
            Formula::And(a, b) => {
                let ra = self.check(a, i)?;
                if ra == Verdict::False {
                    return Ok(Verdict::False);
                }
                Ok(ra.and(self.check(b, i)?))
            }
            Formula::Or(a, b) => {
                let ra = self.check(a, i)?;
                if ra == Verdict::True {
                    return Ok(Verdict::True);
                }
                Ok(ra.or(self.check(b, i)?))
            }
            Formula::Next(iv, p) => {
                if !self.ensure_successor(i)? {
                    // The current state is absorbing: no next point exists.
                    return Ok(Verdict::False);
                }
                let sojourn = self.buf.entry(i + 1) - self.buf.entry(i);
                if !iv.contains(sojourn) {
                    return Ok(Verdict::False);
                }
                if self.buf.entry(i + 1) > self.t_max {
                    // The successor lies beyond the verified window.
                    return Ok(Verdict::Unknown);
                }
                self.check(p, i + 1)
            }
            Formula::Until(iv, hold, target) => {
                let start = self.buf.entry(i);
                let mut k = i;
                loop {
                    let elapsed = self.buf.entry(k) - start;
                    if elapsed > iv.upper {
                        // Every remaining candidate witness is past the
                        // bound; earlier ones were already refuted.
                        return Ok(Verdict::False);
                    }
                    if self.buf.entry(k) > self.t_max {
                        return Ok(Verdict::Unknown);
                    }
                    if iv.contains(elapsed) {
                        match self.check(target, k)? {
                            Verdict::True => return Ok(Verdict::True),
                            Verdict::Unknown => return Ok(Verdict::Unknown),
                            Verdict::False => {}
                        }
                    }
                    match self.check(hold, k)? {
                        Verdict::False => return Ok(Verdict::False),
                        Verdict::Unknown => return Ok(Verdict::Unknown),
                        Verdict::True => {}
                    }
                    if !self.ensure_successor(k)? {
                        // Absorbing tail: the path has no further points, so
                        // no witness can ever appear.
                        return Ok(Verdict::False);
                    }
                    k += 1;
                }
            }
            Formula::Finally(..) | Formula::Globally(..) => Err(CheckError::SurfaceForm),
        }
    }
}

fn atom_error(e: crate::expr::EvalError) -> CheckError {
    CheckError::Model(ModelError::Eval {
        reaction: "<formula atom>".into(),
        source: e,
    })
}

/// Simulates a trajectory of `net` from `init` while verifying `formula`
/// (desugared), stopping as soon as the verdict is decided or the horizon
/// `t_max` is passed. Returns the verdict together with the trace generated
/// so far; evaluation errors abort the replica and are distinct from a
/// `False` verdict.
pub fn simulate_verify(
    formula: &Formula,
    net: &ReactionNetwork,
    init: &State,
    t_max: f64,
    rng: RngStream,
) -> Result<(Verdict, Trace), CheckError> {
    if !t_max.is_finite() || t_max <= 0.0 {
        return Err(CheckError::InvalidTMax(t_max));
    }
    if init.counts.len() != net.species.len() {
        return Err(CheckError::DimensionMismatch {
            got: init.counts.len(),
            expected: net.species.len(),
        });
    }
    if !formula.is_desugared() {
        return Err(CheckError::SurfaceForm);
    }
    let mut checker = Checker {
        buf: TraceBuffer::new(net, init.clone(), rng),
        t_max,
    };
    let verdict = checker.check(formula, 0)?;
    Ok((verdict, checker.buf.into_trace()))
}
