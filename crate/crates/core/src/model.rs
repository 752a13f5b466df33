//! Reaction-network models: species, parameters, reactions with either
//! mass-action or explicit propensity expressions. A network defines a
//! continuous-time Markov chain implicitly through its propensities; no
//! generator matrix is ever materialized.

use std::fmt;

use thiserror::Error;

use crate::expr::{parse_expression, EvalError, Expr, Slot, SymbolTable};

/// A biochemical species with its initial molecule count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Species {
    pub name: String,
    pub initial_count: u64,
}

/// A named model constant usable in propensity expressions and formulas.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub value: f64,
}

/// How a reaction's propensity is computed.
#[derive(Debug, Clone, PartialEq)]
pub enum RateLaw {
    /// Stochastic mass-action with rate constant `c`: the propensity is
    /// `c` times the number of distinct reactant combinations,
    /// `prod_i C(x_i, k_i)` over reactants with stoichiometry `k_i`.
    MassAction(f64),
    /// The expression value is the propensity directly. Used for rates
    /// that are not mass-action (e.g. Michaelis-Menten forms).
    Explicit(Expr),
}

/// A reaction channel. Stoichiometries are stored as
/// `(species index, multiplicity)` pairs sorted by species index.
#[derive(Debug, Clone, PartialEq)]
pub struct Reaction {
    pub name: String,
    pub reactants: Vec<(usize, u32)>,
    pub products: Vec<(usize, u32)>,
    pub rate: RateLaw,
}

/// A population snapshot: one non-negative count per declared species.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct State {
    pub counts: Vec<u64>,
}

impl State {
    pub fn new(counts: Vec<u64>) -> Self {
        Self { counts }
    }

    pub fn count(&self, species: usize) -> u64 {
        self.counts[species]
    }
}

/// The model: species, parameters and reaction channels.
///
/// Immutable after validation and safe to share across worker threads;
/// [`State`] and traces are worker-local.
#[derive(Debug, Clone, PartialEq)]
pub struct ReactionNetwork {
    pub species: Vec<Species>,
    pub parameters: Vec<Parameter>,
    pub reactions: Vec<Reaction>,
}

impl ReactionNetwork {
    /// Symbol table binding species and parameter names to slots.
    /// On name collisions the first binding wins; `validate_network`
    /// reports the collision.
    pub fn symbol_table(&self) -> SymbolTable {
        let mut st = SymbolTable::new();
        for (i, s) in self.species.iter().enumerate() {
            st.bind(&s.name, Slot::Species(i));
        }
        for (i, p) in self.parameters.iter().enumerate() {
            st.bind(&p.name, Slot::Param(i));
        }
        st
    }

    /// Parameter values in slot order, for expression evaluation.
    pub fn param_values(&self) -> Vec<f64> {
        self.parameters.iter().map(|p| p.value).collect()
    }

    /// The initial state from the declared initial counts.
    pub fn initial_state(&self) -> State {
        State::new(self.species.iter().map(|s| s.initial_count).collect())
    }
}

/// Errors raised while computing propensities during simulation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("reaction `{reaction}`: {source}")]
    Eval { reaction: String, source: EvalError },
    #[error("reaction `{reaction}`: explicit rate evaluated to {value} with reactants available")]
    NegativePropensity { reaction: String, value: f64 },
    #[error("reaction `{reaction}`: propensity is not finite ({value})")]
    NonFinitePropensity { reaction: String, value: f64 },
}

/// Number of distinct unordered reactant tuples: `x (x-1) ... (x-k+1) / k!`.
/// Callers guarantee `x >= k`.
fn combinations(x: u64, k: u32) -> f64 {
    let mut c = 1.0;
    for j in 0..k as u64 {
        c *= (x - j) as f64;
        c /= (j + 1) as f64;
    }
    c
}

/// Propensity of `reaction` in `state`. Zero whenever any reactant count is
/// below its stoichiometric requirement, in both rate modes.
pub fn compute_propensity(
    reaction: &Reaction,
    state: &State,
    params: &[f64],
) -> Result<f64, ModelError> {
    for &(i, k) in &reaction.reactants {
        if state.counts[i] < k as u64 {
            return Ok(0.0);
        }
    }
    let a = match &reaction.rate {
        RateLaw::MassAction(c) => {
            let mut a = *c;
            for &(i, k) in &reaction.reactants {
                a *= combinations(state.counts[i], k);
            }
            a
        }
        RateLaw::Explicit(expr) => {
            let v = expr
                .eval(&state.counts, params)
                .map_err(|source| ModelError::Eval {
                    reaction: reaction.name.clone(),
                    source,
                })?;
            if v < 0.0 {
                return Err(ModelError::NegativePropensity {
                    reaction: reaction.name.clone(),
                    value: v,
                });
            }
            v
        }
    };
    if !a.is_finite() {
        return Err(ModelError::NonFinitePropensity {
            reaction: reaction.name.clone(),
            value: a,
        });
    }
    Ok(a)
}

/// Applies the net stoichiometric change of `reaction` to `state`.
///
/// Callers must have established `compute_propensity(reaction, state) > 0`;
/// the guard makes underflow impossible, and a violation is a logic error.
pub fn apply_stoichiometry(state: &State, reaction: &Reaction) -> State {
    let mut counts = state.counts.clone();
    for &(i, k) in &reaction.reactants {
        counts[i] = counts[i]
            .checked_sub(k as u64)
            .expect("stoichiometry applied without propensity guard");
    }
    for &(i, k) in &reaction.products {
        counts[i] += k as u64;
    }
    State::new(counts)
}

/// A single validation violation, with enough context to locate it.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DuplicateSpecies(String),
    DuplicateParameter(String),
    DuplicateReaction(String),
    NameCollision(String),
    InvalidName(String),
    UnknownSpecies { reaction: String, species: String },
    ZeroStoichiometry { reaction: String, species: String },
    NonPositiveRateConstant { reaction: String, value: f64 },
    ExpressionSyntax { reaction: String, message: String },
    UnknownIdentifier { reaction: String, name: String },
    NonFiniteParameter { parameter: String, value: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateSpecies(n) => write!(f, "duplicate species name `{n}`"),
            Violation::DuplicateParameter(n) => write!(f, "duplicate parameter name `{n}`"),
            Violation::DuplicateReaction(n) => write!(f, "duplicate reaction name `{n}`"),
            Violation::NameCollision(n) => {
                write!(f, "`{n}` is declared both as a species and as a parameter")
            }
            Violation::InvalidName(n) => write!(f, "`{n}` is not a valid identifier"),
            Violation::UnknownSpecies { reaction, species } => {
                write!(
                    f,
                    "reaction `{reaction}` references undeclared species `{species}`"
                )
            }
            Violation::ZeroStoichiometry { reaction, species } => {
                write!(
                    f,
                    "reaction `{reaction}` has zero stoichiometry for `{species}`"
                )
            }
            Violation::NonPositiveRateConstant { reaction, value } => {
                write!(
                    f,
                    "reaction `{reaction}` has non-positive rate constant {value}"
                )
            }
            Violation::ExpressionSyntax { reaction, message } => {
                write!(f, "reaction `{reaction}`: {message}")
            }
            Violation::UnknownIdentifier { reaction, name } => {
                write!(
                    f,
                    "reaction `{reaction}` references unknown identifier `{name}`"
                )
            }
            Violation::NonFiniteParameter { parameter, value } => {
                write!(f, "parameter `{parameter}` has non-finite value {value}")
            }
        }
    }
}

/// All violations found in a network, not just the first.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Checks name uniqueness, identifier validity, stoichiometry sanity,
/// rate-constant positivity and expression resolution. Returns every
/// violation found.
pub fn validate_network(net: &ReactionNetwork) -> ValidationReport {
    let mut violations = Vec::new();

    let mut seen = std::collections::HashSet::new();
    for s in &net.species {
        if !is_identifier(&s.name) {
            violations.push(Violation::InvalidName(s.name.clone()));
        }
        if !seen.insert(s.name.clone()) {
            violations.push(Violation::DuplicateSpecies(s.name.clone()));
        }
    }
    let mut seen_params = std::collections::HashSet::new();
    for p in &net.parameters {
        if !is_identifier(&p.name) {
            violations.push(Violation::InvalidName(p.name.clone()));
        }
        if !seen_params.insert(p.name.clone()) {
            violations.push(Violation::DuplicateParameter(p.name.clone()));
        }
        if seen.contains(&p.name) {
            violations.push(Violation::NameCollision(p.name.clone()));
        }
        if !p.value.is_finite() {
            violations.push(Violation::NonFiniteParameter {
                parameter: p.name.clone(),
                value: p.value,
            });
        }
    }

    let symbols = net.symbol_table();
    let mut seen_reactions = std::collections::HashSet::new();
    for r in &net.reactions {
        if !seen_reactions.insert(r.name.clone()) {
            violations.push(Violation::DuplicateReaction(r.name.clone()));
        }
        for &(i, k) in r.reactants.iter().chain(&r.products) {
            if i >= net.species.len() {
                violations.push(Violation::UnknownSpecies {
                    reaction: r.name.clone(),
                    species: format!("#{i}"),
                });
            } else if k == 0 {
                violations.push(Violation::ZeroStoichiometry {
                    reaction: r.name.clone(),
                    species: net.species[i].name.clone(),
                });
            }
        }
        match &r.rate {
            RateLaw::MassAction(c) => {
                if !c.is_finite() || *c <= 0.0 {
                    violations.push(Violation::NonPositiveRateConstant {
                        reaction: r.name.clone(),
                        value: *c,
                    });
                }
            }
            RateLaw::Explicit(expr) => {
                for (name, slot) in expr.variables() {
                    if symbols.resolve(name) != Some(slot) {
                        violations.push(Violation::UnknownIdentifier {
                            reaction: r.name.clone(),
                            name: name.to_owned(),
                        });
                    }
                }
            }
        }
    }

    ValidationReport { violations }
}

/// Convenience builder that assembles a network from name-keyed inputs,
/// resolving species references and parsing rate expressions. All problems
/// are collected into one [`ValidationReport`].
#[derive(Debug, Default)]
pub struct NetworkBuilder {
    species: Vec<Species>,
    parameters: Vec<Parameter>,
    raw_reactions: Vec<RawReaction>,
}

#[derive(Debug)]
struct RawReaction {
    name: String,
    reactants: Vec<(String, u32)>,
    products: Vec<(String, u32)>,
    rate: RawRate,
}

#[derive(Debug)]
enum RawRate {
    MassAction(f64),
    Expression(String),
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn species(mut self, name: &str, initial_count: u64) -> Self {
        self.species.push(Species {
            name: name.to_owned(),
            initial_count,
        });
        self
    }

    pub fn parameter(mut self, name: &str, value: f64) -> Self {
        self.parameters.push(Parameter {
            name: name.to_owned(),
            value,
        });
        self
    }

    pub fn mass_action(
        self,
        name: &str,
        reactants: &[(&str, u32)],
        products: &[(&str, u32)],
        c: f64,
    ) -> Self {
        self.push_reaction(name, reactants, products, RawRate::MassAction(c))
    }

    pub fn explicit_rate(
        self,
        name: &str,
        reactants: &[(&str, u32)],
        products: &[(&str, u32)],
        rate: &str,
    ) -> Self {
        self.push_reaction(
            name,
            reactants,
            products,
            RawRate::Expression(rate.to_owned()),
        )
    }

    fn push_reaction(
        mut self,
        name: &str,
        reactants: &[(&str, u32)],
        products: &[(&str, u32)],
        rate: RawRate,
    ) -> Self {
        let to_owned = |side: &[(&str, u32)]| {
            side.iter()
                .map(|(n, k)| ((*n).to_owned(), *k))
                .collect::<Vec<_>>()
        };
        self.raw_reactions.push(RawReaction {
            name: name.to_owned(),
            reactants: to_owned(reactants),
            products: to_owned(products),
            rate,
        });
        self
    }

    pub fn build(self) -> Result<ReactionNetwork, ValidationReport> {
        let mut violations = Vec::new();
        let mut net = ReactionNetwork {
            species: self.species,
            parameters: self.parameters,
            reactions: Vec::new(),
        };
        let symbols = net.symbol_table();
        let species_index = |name: &str| match symbols.resolve(name) {
            Some(Slot::Species(i)) => Some(i),
            _ => None,
        };

        for raw in self.raw_reactions {
            let mut resolve_side = |side: &[(String, u32)]| {
                let mut out: Vec<(usize, u32)> = Vec::new();
                for (name, k) in side {
                    match species_index(name) {
                        Some(i) => {
                            // Merge repeated mentions of the same species.
                            match out.iter_mut().find(|(j, _)| *j == i) {
                                Some((_, mult)) => *mult += k,
                                None => out.push((i, *k)),
                            }
                        }
                        None => violations.push(Violation::UnknownSpecies {
                            reaction: raw.name.clone(),
                            species: name.clone(),
                        }),
                    }
                }
                out.sort_by_key(|&(i, _)| i);
                out
            };
            let reactants = resolve_side(&raw.reactants);
            let products = resolve_side(&raw.products);
            let rate = match raw.rate {
                RawRate::MassAction(c) => RateLaw::MassAction(c),
                RawRate::Expression(text) => match parse_expression(&text, &symbols) {
                    Ok(expr) => RateLaw::Explicit(expr),
                    Err(e) => {
                        if e.message.starts_with("unknown identifier") {
                            let name = text[e.position..]
                                .split(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
                                .next()
                                .unwrap_or("")
                                .to_owned();
                            violations.push(Violation::UnknownIdentifier {
                                reaction: raw.name.clone(),
                                name,
                            });
                        } else {
                            violations.push(Violation::ExpressionSyntax {
                                reaction: raw.name.clone(),
                                message: e.to_string(),
                            });
                        }
                        continue;
                    }
                },
            };
            net.reactions.push(Reaction {
                name: raw.name,
                reactants,
                products,
                rate,
            });
        }

        let mut report = validate_network(&net);
        violations.append(&mut report.violations);
        if violations.is_empty() {
            Ok(net)
        } else {
            Err(ValidationReport { violations })
        }
    }
}
