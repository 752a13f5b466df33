//! Bounded linear-time temporal logic with numerical constraints.
//!
//! Formulas combine arithmetic atoms over species counts with boolean
//! connectives and time-interval-bounded temporal operators. The concrete
//! syntax is
//!
//! ```text
//! formula  := or
//! or       := until ('|' until)*
//! until    := and ('U' bound? until)?          right-associative
//! and      := unary ('&' unary)*
//! unary    := '!' unary
//!           | 'X' bound? unary | 'F' bound? unary | 'G' bound? unary
//!           | '(' formula ')'
//!           | expr cmp expr
//! cmp      := '<' | '<=' | '>=' | '>' | '==' | '!='
//! bound    := '[' number ',' (number | 'inf') (']' | ')')
//! ```
//!
//! An omitted bound means `[0, inf)`. `X`, `F`, `G` and `U` are reserved
//! words inside formulas; identifiers merely starting with those letters
//! (`X2`, `Ua`, ...) are ordinary variables.
//!
//! [`check_trace_offline`] implements the satisfaction relation literally on
//! a complete trace and serves as the reference the on-the-fly checker is
//! tested against. A trace that ends before a temporal operator resolves
//! counts as not satisfying it.

use std::fmt;

use crate::expr::{lex, parse_additive, Cursor, EvalError, Expr, ParseError, SymbolTable, Tok};
use crate::ssa::Trace;

/// A closed time interval `[lower, upper]` in model-time units; `upper` may
/// be infinite. The default bound is `[0, inf)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Result<Self, String> {
        if lower.is_nan() || lower < 0.0 {
            return Err(format!(
                "interval lower bound must be non-negative, got {lower}"
            ));
        }
        if upper.is_nan() || upper < lower {
            return Err(format!("interval [{lower}, {upper}] is empty"));
        }
        Ok(Self { lower, upper })
    }

    pub fn unbounded() -> Self {
        Self {
            lower: 0.0,
            upper: f64::INFINITY,
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.lower && t <= self.upper
    }

    pub fn is_unbounded(&self) -> bool {
        self.upper.is_infinite()
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.upper.is_infinite() {
            write!(f, "[{},inf)", self.lower)
        } else {
            write!(f, "[{},{}]", self.lower, self.upper)
        }
    }
}

/// Comparison operator of an atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Ge,
    Gt,
    Eq,
    Ne,
}

impl CmpOp {
    /// Exact comparison on reals. Species counts are integers, so equality
    /// atoms on counts are well-defined; beware of derived real values.
    pub fn holds(self, a: f64, b: f64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Ge => a >= b,
            CmpOp::Gt => a > b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }
}

/// Formula syntax tree. `Finally` and `Globally` are surface forms removed
/// by [`desugar_formula`].
#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    Atom { lhs: Expr, op: CmpOp, rhs: Expr },
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Next(Interval, Box<Formula>),
    Until(Interval, Box<Formula>, Box<Formula>),
    Finally(Interval, Box<Formula>),
    Globally(Interval, Box<Formula>),
}

impl Formula {
    /// True when no `Finally`/`Globally` node remains.
    pub fn is_desugared(&self) -> bool {
        match self {
            Formula::Atom { .. } => true,
            Formula::Not(p) => p.is_desugared(),
            Formula::And(a, b) | Formula::Or(a, b) => a.is_desugared() && b.is_desugared(),
            Formula::Next(_, p) => p.is_desugared(),
            Formula::Until(_, a, b) => a.is_desugared() && b.is_desugared(),
            Formula::Finally(..) | Formula::Globally(..) => false,
        }
    }
}

// Printing precedence: | = 1, U = 2, & = 3, unary = 4, atoms = 5.
fn fprec(f: &Formula) -> u8 {
    match f {
        Formula::Or(..) => 1,
        Formula::Until(..) => 2,
        Formula::And(..) => 3,
        Formula::Not(..) | Formula::Next(..) | Formula::Finally(..) | Formula::Globally(..) => 4,
        Formula::Atom { .. } => 5,
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, node: &Formula, min: u8) -> fmt::Result {
            if fprec(node) < min {
                write!(f, "({node})")
            } else {
                write!(f, "{node}")
            }
        }
        fn bound(f: &mut fmt::Formatter<'_>, iv: &Interval) -> fmt::Result {
            if *iv != Interval::unbounded() {
                write!(f, "{iv}")?;
            }
            Ok(())
        }
        match self {
            Formula::Atom { lhs, op, rhs } => write!(f, "{lhs} {} {rhs}", op.symbol()),
            Formula::Not(p) => {
                write!(f, "!")?;
                child(f, p, 4)
            }
            Formula::And(a, b) => {
                child(f, a, 3)?;
                write!(f, " & ")?;
                child(f, b, 4)
            }
            Formula::Or(a, b) => {
                child(f, a, 1)?;
                write!(f, " | ")?;
                child(f, b, 2)
            }
            Formula::Next(iv, p) => {
                write!(f, "X")?;
                bound(f, iv)?;
                write!(f, " ")?;
                child(f, p, 4)
            }
            Formula::Until(iv, a, b) => {
                child(f, a, 3)?;
                write!(f, " U")?;
                bound(f, iv)?;
                write!(f, " ")?;
                child(f, b, 2)
            }
            Formula::Finally(iv, p) => {
                write!(f, "F")?;
                bound(f, iv)?;
                write!(f, " ")?;
                child(f, p, 4)
            }
            Formula::Globally(iv, p) => {
                write!(f, "G")?;
                bound(f, iv)?;
                write!(f, " ")?;
                child(f, p, 4)
            }
        }
    }
}

fn is_keyword(tok: &Tok, kw: &str) -> bool {
    matches!(tok, Tok::Ident(name) if name == kw)
}

/// Parses a formula from its concrete syntax, resolving identifiers in atoms
/// against the symbol table.
pub fn parse_formula(text: &str, symbols: &SymbolTable) -> Result<Formula, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::new("empty formula", 0));
    }
    let toks = lex(text)?;
    let mut cur = Cursor::new(&toks, text.len());
    let formula = parse_or(&mut cur, symbols)?;
    if !cur.at_end() {
        return Err(ParseError::new("unexpected trailing input", cur.here()));
    }
    Ok(formula)
}

fn parse_or(cur: &mut Cursor, symbols: &SymbolTable) -> Result<Formula, ParseError> {
    let mut lhs = parse_until(cur, symbols)?;
    while cur.eat(&Tok::Pipe) {
        let rhs = parse_until(cur, symbols)?;
        lhs = Formula::Or(Box::new(lhs), Box::new(rhs));
    }
    Ok(lhs)
}

fn parse_until(cur: &mut Cursor, symbols: &SymbolTable) -> Result<Formula, ParseError> {
    let lhs = parse_and(cur, symbols)?;
    if matches!(cur.peek(), Some(t) if is_keyword(t, "U")) {
        cur.bump();
        let iv = parse_bound(cur)?;
        // Right-associative.
        let rhs = parse_until(cur, symbols)?;
        return Ok(Formula::Until(iv, Box::new(lhs), Box::new(rhs)));
    }
    Ok(lhs)
}

fn parse_and(cur: &mut Cursor, symbols: &SymbolTable) -> Result<Formula, ParseError> {
    let mut lhs = parse_funary(cur, symbols)?;
    while cur.eat(&Tok::Amp) {
        let rhs = parse_funary(cur, symbols)?;
        lhs = Formula::And(Box::new(lhs), Box::new(rhs));
    }
    Ok(lhs)
}

fn parse_funary(cur: &mut Cursor, symbols: &SymbolTable) -> Result<Formula, ParseError> {
    if cur.eat(&Tok::Bang) {
        let inner = parse_funary(cur, symbols)?;
        return Ok(Formula::Not(Box::new(inner)));
    }
    for (kw, make) in [
        ("X", Formula::Next as fn(Interval, Box<Formula>) -> Formula),
        (
            "F",
            Formula::Finally as fn(Interval, Box<Formula>) -> Formula,
        ),
        (
            "G",
            Formula::Globally as fn(Interval, Box<Formula>) -> Formula,
        ),
    ] {
        if matches!(cur.peek(), Some(t) if is_keyword(t, kw)) {
            cur.bump();
            let iv = parse_bound(cur)?;
            let inner = parse_funary(cur, symbols)?;
            return Ok(make(iv, Box::new(inner)));
        }
    }
    parse_primary(cur, symbols)
}

fn parse_primary(cur: &mut Cursor, symbols: &SymbolTable) -> Result<Formula, ParseError> {
    if cur.peek() == Some(&Tok::LParen) {
        // `(` may open a parenthesized formula or a parenthesized expression
        // inside an atom ("(x + 1) < 2"); try the formula reading first and
        // fall back on failure or when a comparison operator follows.
        let save = cur.pos;
        cur.bump();
        if let Ok(inner) = parse_or(cur, symbols) {
            if cur.eat(&Tok::RParen) && !peek_is_cmp(cur) {
                return Ok(inner);
            }
        }
        cur.pos = save;
    }
    parse_atom(cur, symbols)
}

fn peek_is_cmp(cur: &Cursor) -> bool {
    matches!(
        cur.peek(),
        Some(Tok::Lt | Tok::Le | Tok::Ge | Tok::Gt | Tok::EqEq | Tok::Ne)
    )
}

fn parse_atom(cur: &mut Cursor, symbols: &SymbolTable) -> Result<Formula, ParseError> {
    let lhs = parse_additive(cur, symbols)?;
    let op = match cur.bump() {
        Some(Tok::Lt) => CmpOp::Lt,
        Some(Tok::Le) => CmpOp::Le,
        Some(Tok::Ge) => CmpOp::Ge,
        Some(Tok::Gt) => CmpOp::Gt,
        Some(Tok::EqEq) => CmpOp::Eq,
        Some(Tok::Ne) => CmpOp::Ne,
        _ => return Err(ParseError::new("expected comparison operator", cur.here())),
    };
    let rhs = parse_additive(cur, symbols)?;
    Ok(Formula::Atom { lhs, op, rhs })
}

fn parse_bound(cur: &mut Cursor) -> Result<Interval, ParseError> {
    if !cur.eat(&Tok::LBracket) {
        return Ok(Interval::unbounded());
    }
    let at = cur.here();
    let lower = match cur.bump() {
        Some(Tok::Num(v)) => *v,
        _ => return Err(ParseError::new("expected bound lower limit", at)),
    };
    cur.expect(&Tok::Comma, "`,`")?;
    let at = cur.here();
    let upper = match cur.bump().cloned() {
        Some(Tok::Num(v)) => v,
        Some(Tok::Ident(name)) if name == "inf" => f64::INFINITY,
        _ => return Err(ParseError::new("expected bound upper limit or `inf`", at)),
    };
    // `[a,b]` and `[a,inf)` both occur; accept either closer.
    if !cur.eat(&Tok::RBracket) && !cur.eat(&Tok::RParen) {
        return Err(ParseError::new("expected `]` or `)`", cur.here()));
    }
    Interval::new(lower, upper).map_err(|msg| ParseError::new(msg, at))
}

/// The tautological atom `0 <= 0` used when lowering `F`.
pub fn true_atom() -> Formula {
    Formula::Atom {
        lhs: Expr::Lit(0.0),
        op: CmpOp::Le,
        rhs: Expr::Lit(0.0),
    }
}

/// Removes surface forms: `F_I p` becomes `tt U_I p` and `G_I p` becomes
/// `!(tt U_I !p)`. The result contains only atoms, boolean connectives,
/// `Next` and `Until`.
pub fn desugar_formula(f: Formula) -> Formula {
    match f {
        Formula::Atom { .. } => f,
        Formula::Not(p) => Formula::Not(Box::new(desugar_formula(*p))),
        Formula::And(a, b) => {
            Formula::And(Box::new(desugar_formula(*a)), Box::new(desugar_formula(*b)))
        }
        Formula::Or(a, b) => {
            Formula::Or(Box::new(desugar_formula(*a)), Box::new(desugar_formula(*b)))
        }
        Formula::Next(iv, p) => Formula::Next(iv, Box::new(desugar_formula(*p))),
        Formula::Until(iv, a, b) => Formula::Until(
            iv,
            Box::new(desugar_formula(*a)),
            Box::new(desugar_formula(*b)),
        ),
        Formula::Finally(iv, p) => {
            Formula::Until(iv, Box::new(true_atom()), Box::new(desugar_formula(*p)))
        }
        Formula::Globally(iv, p) => Formula::Not(Box::new(Formula::Until(
            iv,
            Box::new(true_atom()),
            Box::new(Formula::Not(Box::new(desugar_formula(*p)))),
        ))),
    }
}

/// Whole-trace satisfaction check at suffix position `i`.
///
/// Implements the satisfaction relation literally. `Until` holds at `i` when
/// some position `k >= i` satisfies the right operand with the elapsed time
/// from `i` to `k` inside the bound and the left operand holding at every
/// position strictly before `k`; elapsed time restarts at `i`. A trace that
/// ends before resolution yields `false`. `Finally`/`Globally` are checked
/// directly through their lowered readings.
pub fn check_trace_offline(
    f: &Formula,
    trace: &Trace,
    i: usize,
    params: &[f64],
) -> Result<bool, EvalError> {
    match f {
        Formula::Atom { lhs, op, rhs } => {
            let counts = &trace.state(i).counts;
            let a = lhs.eval(counts, params)?;
            let b = rhs.eval(counts, params)?;
            Ok(op.holds(a, b))
        }
        Formula::Not(p) => Ok(!check_trace_offline(p, trace, i, params)?),
        Formula::And(a, b) => {
            let ra = check_trace_offline(a, trace, i, params)?;
            let rb = check_trace_offline(b, trace, i, params)?;
            Ok(ra && rb)
        }
        Formula::Or(a, b) => {
            let ra = check_trace_offline(a, trace, i, params)?;
            let rb = check_trace_offline(b, trace, i, params)?;
            Ok(ra || rb)
        }
        Formula::Next(iv, p) => {
            if i + 1 >= trace.len() {
                return Ok(false);
            }
            if !iv.contains(trace.sojourn(i)) {
                return Ok(false);
            }
            check_trace_offline(p, trace, i + 1, params)
        }
        Formula::Until(iv, hold, target) => {
            let start = trace.entry_time(i);
            for k in i..trace.len() {
                let elapsed = trace.entry_time(k) - start;
                if elapsed > iv.upper {
                    return Ok(false);
                }
                if iv.contains(elapsed) && check_trace_offline(target, trace, k, params)? {
                    return Ok(true);
                }
                if !check_trace_offline(hold, trace, k, params)? {
                    return Ok(false);
                }
            }
            Ok(false)
        }
        Formula::Finally(iv, p) => {
            let start = trace.entry_time(i);
            for k in i..trace.len() {
                let elapsed = trace.entry_time(k) - start;
                if elapsed > iv.upper {
                    return Ok(false);
                }
                if iv.contains(elapsed) && check_trace_offline(p, trace, k, params)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        Formula::Globally(iv, p) => {
            let start = trace.entry_time(i);
            for k in i..trace.len() {
                let elapsed = trace.entry_time(k) - start;
                if elapsed > iv.upper {
                    return Ok(true);
                }
                if iv.contains(elapsed) && !check_trace_offline(p, trace, k, params)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Slot;
    use crate::model::State;

    fn symbols() -> SymbolTable {
        let mut st = SymbolTable::new();
        st.bind("a", Slot::Species(0));
        st.bind("y", Slot::Species(1));
        st.bind("x", Slot::Species(0));
        st.bind("x1", Slot::Species(0));
        st.bind("x2", Slot::Species(1));
        st.bind("x3", Slot::Species(2));
        st
    }

    /// Hand-built trace: one state per row of `counts`, each sojourn 0.1.
    fn toy_trace(counts: &[Vec<u64>]) -> Trace {
        let states: Vec<State> = counts.iter().map(|c| State::new(c.clone())).collect();
        let entries: Vec<f64> = (0..counts.len()).map(|i| i as f64 * 0.1).collect();
        let end = counts.len() as f64 * 0.1;
        Trace::from_parts(states, entries, end)
    }

    #[test]
    fn parses_unbounded_until_of_atoms() {
        let f = parse_formula("(x1 < sqrt(x2)) U (x2 >= 10 + x3)", &symbols()).unwrap();
        match f {
            Formula::Until(iv, lhs, rhs) => {
                assert_eq!(iv, Interval::unbounded());
                assert!(matches!(*lhs, Formula::Atom { op: CmpOp::Lt, .. }));
                assert!(matches!(*rhs, Formula::Atom { op: CmpOp::Ge, .. }));
            }
            other => panic!("expected Until, got {other:?}"),
        }
    }

    #[test]
    fn parses_time_bounded_until() {
        let f = parse_formula("(a <= 4) U[0,0.6] (y >= 5)", &symbols()).unwrap();
        match f {
            Formula::Until(iv, ..) => {
                assert_eq!(iv, Interval::new(0.0, 0.6).unwrap());
            }
            other => panic!("expected Until, got {other:?}"),
        }
    }

    #[test]
    fn parses_bounded_finally() {
        let f = parse_formula("F[0,1] (x == 0)", &symbols()).unwrap();
        match f {
            Formula::Finally(iv, p) => {
                assert_eq!(iv, Interval::new(0.0, 1.0).unwrap());
                assert!(matches!(*p, Formula::Atom { op: CmpOp::Eq, .. }));
            }
            other => panic!("expected Finally, got {other:?}"),
        }
    }

    #[test]
    fn parses_inf_bound_with_round_closer() {
        let f = parse_formula("G[0.5,inf) (x >= 0)", &symbols()).unwrap();
        match f {
            Formula::Globally(iv, _) => {
                assert_eq!(iv.lower, 0.5);
                assert!(iv.upper.is_infinite());
            }
            other => panic!("expected Globally, got {other:?}"),
        }
    }

    #[test]
    fn precedence_until_between_and_and_or() {
        // & binds tighter than U, U binds tighter than |.
        let f = parse_formula("a > 0 & y > 0 U x == 0 | a == 0", &symbols()).unwrap();
        match f {
            Formula::Or(lhs, rhs) => {
                assert!(matches!(*lhs, Formula::Until(..)));
                assert!(matches!(*rhs, Formula::Atom { .. }));
                if let Formula::Until(_, hold, _) = *lhs {
                    assert!(matches!(*hold, Formula::And(..)));
                }
            }
            other => panic!("expected Or at the root, got {other:?}"),
        }
    }

    #[test]
    fn until_is_right_associative() {
        let f = parse_formula("a > 0 U y > 0 U x == 0", &symbols()).unwrap();
        match f {
            Formula::Until(_, _, rhs) => assert!(matches!(*rhs, Formula::Until(..))),
            other => panic!("expected Until, got {other:?}"),
        }
    }

    #[test]
    fn parenthesized_expression_atoms() {
        let f = parse_formula("(x1 + 2) < 5", &symbols()).unwrap();
        assert!(matches!(f, Formula::Atom { op: CmpOp::Lt, .. }));
    }

    #[test]
    fn unknown_identifier_in_atom() {
        let err = parse_formula("zz > 0", &symbols()).unwrap_err();
        assert!(err.message.contains("unknown identifier `zz`"));
    }

    #[test]
    fn empty_and_backwards_bounds_are_rejected() {
        let err = parse_formula("F[2,1] (x == 0)", &symbols()).unwrap_err();
        assert!(err.message.contains("empty"), "{err}");
        let err = parse_formula("", &symbols()).unwrap_err();
        assert!(err.message.contains("empty formula"));
    }

    #[test]
    fn desugar_finally_to_until() {
        let f = parse_formula("F[0,1](x==0)", &symbols()).unwrap();
        let d = desugar_formula(f);
        let expected = parse_formula("(0 <= 0) U[0,1] (x == 0)", &symbols()).unwrap();
        assert_eq!(d, expected);
    }

    #[test]
    fn desugar_globally_to_negated_until() {
        let f = parse_formula("G(x >= 0)", &symbols()).unwrap();
        let d = desugar_formula(f);
        let expected = parse_formula("!((0 <= 0) U (!(x >= 0)))", &symbols()).unwrap();
        assert_eq!(d, expected);
        assert!(d.is_desugared());
    }

    #[test]
    fn desugar_leaves_atoms_alone() {
        let f = parse_formula("x >= 5", &symbols()).unwrap();
        assert_eq!(desugar_formula(f.clone()), f);
    }

    #[test]
    fn atom_checked_at_position_zero() {
        let f = parse_formula("x >= 5", &symbols()).unwrap();
        let trace = toy_trace(&[vec![7, 0, 0]]);
        assert!(check_trace_offline(&f, &trace, 0, &[]).unwrap());
    }

    #[test]
    fn until_needs_hold_only_strictly_before_witness() {
        // a: 0, 3, 5 and y: 0, 2, 6. The witness is k=2 (y=6 >= 5); a <= 4
        // must hold at j=0,1 only, so a=5 at the witness is irrelevant.
        let f = parse_formula("(a <= 4) U (y >= 5)", &symbols()).unwrap();
        let trace = toy_trace(&[vec![0, 0], vec![3, 2], vec![5, 6]]);
        assert!(check_trace_offline(&f, &trace, 0, &[]).unwrap());

        // Exhaustive cross-check of the satisfaction clauses.
        let mut witnessed = false;
        for k in 0..trace.len() {
            let elapsed = trace.entry_time(k) - trace.entry_time(0);
            let target = trace.state(k).counts[1] >= 5;
            let hold_before = (0..k).all(|j| trace.state(j).counts[0] <= 4);
            if target && (0.0..=f64::INFINITY).contains(&elapsed) && hold_before {
                witnessed = true;
            }
        }
        assert!(witnessed);
    }

    #[test]
    fn lower_bounded_until_rejects_instant_only_witness() {
        // Witness exists only at k=i where elapsed 0 is outside [0.5, 1.0].
        let f = parse_formula("(a >= 0) U[0.5,1.0] (y == 1)", &symbols()).unwrap();
        let trace = toy_trace(&[vec![0, 1], vec![0, 0], vec![0, 0]]);
        assert!(!check_trace_offline(&f, &trace, 0, &[]).unwrap());
    }

    #[test]
    fn next_tests_sojourn_and_successor() {
        let st = symbols();
        let trace = toy_trace(&[vec![1, 0], vec![2, 0]]);
        let inside = parse_formula("X[0.05,0.2] (x == 2)", &st).unwrap();
        assert!(check_trace_offline(&inside, &trace, 0, &[]).unwrap());
        let outside = parse_formula("X[0.2,0.3] (x == 2)", &st).unwrap();
        assert!(!check_trace_offline(&outside, &trace, 0, &[]).unwrap());
        // No successor at the final position.
        let at_end = parse_formula("X (x >= 0)", &st).unwrap();
        assert!(!check_trace_offline(&at_end, &trace, 1, &[]).unwrap());
    }

    #[test]
    fn globally_true_on_finite_trace_that_never_violates() {
        let f = parse_formula("G (x >= 0)", &symbols()).unwrap();
        let trace = toy_trace(&[vec![1, 0], vec![0, 0], vec![2, 0]]);
        assert!(check_trace_offline(&f, &trace, 0, &[]).unwrap());
        let d = desugar_formula(f);
        assert!(check_trace_offline(&d, &trace, 0, &[]).unwrap());
    }

    #[test]
    fn display_round_trips_structurally() {
        let st = symbols();
        for src in [
            "(x1 < sqrt(x2)) U (x2 >= 10 + x3)",
            "(a <= 4) U[0,0.6] (y >= 5)",
            "F[0,1] (x == 0)",
            "!(a > 1) & (y < 2 | x != 0)",
            "G[0,10] (x >= 0)",
            "X[0.1,0.2] X (a == 0)",
            "a > 0 U y > 0 U x == 0",
        ] {
            let f = parse_formula(src, &st).unwrap();
            let printed = f.to_string();
            let reparsed = parse_formula(&printed, &st).unwrap();
            assert_eq!(f, reparsed, "`{src}` printed as `{printed}`");
        }
    }
}
