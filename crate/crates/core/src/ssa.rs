//! Direct-method stochastic simulation of a reaction network.
//!
//! Each step computes the total propensity `a0`, draws an exponential delay
//! with rate `a0`, and selects the firing reaction with probability
//! proportional to its propensity. The generator is a fixed, deterministic
//! pseudo-random stream so that a `(network, initial state, t_max, seed)`
//! tuple always reproduces the same trajectory, regardless of how many
//! workers run alongside.

use thiserror::Error;

use crate::model::{apply_stoichiometry, compute_propensity, ModelError, ReactionNetwork, State};

/// Algorithm identifier recorded in reports. Tests rely on the seeding
/// contract (determinism, prefix-stable seed derivation), not on the
/// algorithm identity, but pinning the name makes result files comparable
/// across builds.
pub const RNG_ALGORITHM: &str = "xoshiro256++/splitmix64";

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic pseudo-random stream (xoshiro256++ seeded via splitmix64).
///
/// Uniform draws are strictly inside (0, 1), so logarithms of draws are
/// always finite.
#[derive(Debug, Clone)]
pub struct RngStream {
    s: [u64; 4],
}

impl RngStream {
    pub fn seed_from(seed: u64) -> Self {
        let mut s = [0u64; 4];
        let mut z = seed;
        for slot in &mut s {
            z = z.wrapping_add(GOLDEN_GAMMA);
            *slot = splitmix64(z);
        }
        if s == [0, 0, 0, 0] {
            s[0] = 1;
        }
        Self { s }
    }

    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[0]
            .wrapping_add(self.s[3])
            .rotate_left(23)
            .wrapping_add(self.s[0]);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform real in the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }
}

/// The seed for replica `index` under `master_seed`. Independent of how many
/// replicas exist, so growing a job never reshuffles earlier replicas.
pub fn replica_seed(master_seed: u64, index: u64) -> u64 {
    // Counter-mixed hash: the mix function is a bijection and the counter
    // inputs are distinct, so seeds never collide for index < 2^64.
    splitmix64(master_seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// The first `count` replica seeds under `master_seed`.
pub fn derive_seed_stream(master_seed: u64, count: usize) -> Vec<u64> {
    (0..count as u64)
        .map(|i| replica_seed(master_seed, i))
        .collect()
}

/// A finite timed path: states with their entry times, closed at `end_time`.
///
/// The sojourn in the i-th state is the gap to the next entry time, or
/// `end_time - entry_time(last)` for the final state. Interior sojourns are
/// strictly positive; the closing sojourn may be zero for traces truncated
/// right at a jump.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    states: Vec<State>,
    entry_times: Vec<f64>,
    end_time: f64,
}

/// Why a hand-assembled trace was rejected.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("a trace needs at least one point")]
    Empty,
    #[error("states and entry times differ in length")]
    LengthMismatch,
    #[error("the first entry time must be 0")]
    NonZeroOrigin,
    #[error("entry times must be strictly increasing")]
    NonMonotonicTimes,
    #[error("end_time must not precede the last entry time")]
    EndBeforeLastEntry,
}

impl Trace {
    /// Assembles a trace from explicit points, for offline checking of
    /// externally produced trajectories.
    pub fn new(
        states: Vec<State>,
        entry_times: Vec<f64>,
        end_time: f64,
    ) -> Result<Self, TraceError> {
        if states.is_empty() {
            return Err(TraceError::Empty);
        }
        if states.len() != entry_times.len() {
            return Err(TraceError::LengthMismatch);
        }
        if entry_times[0] != 0.0 {
            return Err(TraceError::NonZeroOrigin);
        }
        if !entry_times.windows(2).all(|w| w[0] < w[1]) {
            return Err(TraceError::NonMonotonicTimes);
        }
        if end_time.is_nan() || end_time < *entry_times.last().unwrap() {
            return Err(TraceError::EndBeforeLastEntry);
        }
        Ok(Self {
            states,
            entry_times,
            end_time,
        })
    }

    pub(crate) fn from_parts(states: Vec<State>, entry_times: Vec<f64>, end_time: f64) -> Self {
        debug_assert_eq!(states.len(), entry_times.len());
        debug_assert!(!states.is_empty());
        debug_assert_eq!(entry_times[0], 0.0);
        debug_assert!(entry_times.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(end_time >= *entry_times.last().unwrap());
        Self {
            states,
            entry_times,
            end_time,
        }
    }

    /// Number of points in the path.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    /// Always false: a trace carries at least its initial point.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of reaction events (jumps) recorded.
    pub fn events(&self) -> usize {
        self.states.len() - 1
    }

    /// The state at position `i`.
    pub fn state(&self, i: usize) -> &State {
        &self.states[i]
    }

    /// Model time at which position `i` was entered; position 0 is time 0.
    pub fn entry_time(&self, i: usize) -> f64 {
        self.entry_times[i]
    }

    /// Time spent in position `i`.
    pub fn sojourn(&self, i: usize) -> f64 {
        if i + 1 < self.entry_times.len() {
            self.entry_times[i + 1] - self.entry_times[i]
        } else {
            self.end_time - self.entry_times[i]
        }
    }

    /// Total duration covered by the trace.
    pub fn total_time(&self) -> f64 {
        self.end_time
    }

    /// The state occupied at absolute time `t`, for `0 <= t <= total_time()`.
    pub fn state_at_time(&self, t: f64) -> Option<&State> {
        if t < 0.0 || t > self.end_time {
            return None;
        }
        let idx = self.entry_times.partition_point(|&e| e <= t);
        Some(&self.states[idx - 1])
    }
}

/// What the stochastic engine produced for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    /// Reaction `reaction` fires after waiting `delay`.
    Event { reaction: usize, delay: f64 },
    /// Total propensity is zero: no reaction can ever fire again.
    Absorbed,
}

/// Draws the next reaction event: delay from Exp(a0), channel selected by
/// cumulative-sum inversion with probability `a_j / a0`.
pub fn next_event(
    state: &State,
    net: &ReactionNetwork,
    params: &[f64],
    rng: &mut RngStream,
) -> Result<StepOutcome, ModelError> {
    let mut scratch = Vec::with_capacity(net.reactions.len());
    next_event_into(state, net, params, rng, &mut scratch)
}

pub(crate) fn next_event_into(
    state: &State,
    net: &ReactionNetwork,
    params: &[f64],
    rng: &mut RngStream,
    propensities: &mut Vec<f64>,
) -> Result<StepOutcome, ModelError> {
    propensities.clear();
    let mut a0 = 0.0;
    for r in &net.reactions {
        let a = compute_propensity(r, state, params)?;
        propensities.push(a);
        a0 += a;
    }
    if a0 <= 0.0 {
        return Ok(StepOutcome::Absorbed);
    }

    let delay = -rng.uniform().ln() / a0;
    let target = rng.uniform() * a0;
    let mut cumulative = 0.0;
    let mut selected = None;
    for (j, &a) in propensities.iter().enumerate() {
        cumulative += a;
        if target < cumulative {
            selected = Some(j);
            break;
        }
    }
    // Floating-point slack at the top of the cumulative sum: fall back to
    // the last channel that can actually fire.
    let reaction = selected.unwrap_or_else(|| {
        propensities
            .iter()
            .rposition(|&a| a > 0.0)
            .expect("a0 > 0 implies some positive propensity")
    });
    Ok(StepOutcome::Event { reaction, delay })
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("t_max must be positive and finite, got {0}")]
    InvalidTMax(f64),
    #[error("initial state has {got} species, network declares {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Simulates a full trajectory from `init` until passing `t_max` or reaching
/// absorption. The final sojourn is truncated so the trace always covers
/// exactly `[0, t_max]`; an absorbing state simply occupies the remainder of
/// the window.
pub fn simulate_to_time(
    net: &ReactionNetwork,
    init: &State,
    t_max: f64,
    rng: &mut RngStream,
) -> Result<Trace, SimError> {
    if !t_max.is_finite() || t_max <= 0.0 {
        return Err(SimError::InvalidTMax(t_max));
    }
    if init.counts.len() != net.species.len() {
        return Err(SimError::DimensionMismatch {
            got: init.counts.len(),
            expected: net.species.len(),
        });
    }
    let params = net.param_values();
    let mut scratch = Vec::with_capacity(net.reactions.len());
    let mut states = vec![init.clone()];
    let mut entry_times = vec![0.0];
    let mut t = 0.0;

    loop {
        let current = states.last().unwrap();
        match next_event_into(current, net, &params, rng, &mut scratch)? {
            StepOutcome::Absorbed => break,
            StepOutcome::Event { reaction, delay } => {
                let t_next = t + delay;
                if t_next > t_max {
                    break;
                }
                let next = apply_stoichiometry(current, &net.reactions[reaction]);
                states.push(next);
                entry_times.push(t_next);
                t = t_next;
            }
        }
    }

    Ok(Trace::from_parts(states, entry_times, t_max))
}
