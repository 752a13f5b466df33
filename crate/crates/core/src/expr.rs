//! Arithmetic expression language shared by reaction propensities and
//! formula atoms.
//!
//! Expressions are parsed against a symbol table, so every variable
//! reference is resolved to a species or parameter slot at parse time;
//! evaluation then reads counts and parameter values by index.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Where a variable reference points: a species count or a model parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Species(usize),
    Param(usize),
}

/// Maps declared names to their slots. Built from a [`crate::model::ReactionNetwork`].
#[derive(Debug, Clone, Default)]
pub struct SymbolTable {
    map: HashMap<String, Slot>,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns `false` if the name was already bound.
    pub fn bind(&mut self, name: &str, slot: Slot) -> bool {
        self.map.insert(name.to_owned(), slot).is_none()
    }

    pub fn resolve(&self, name: &str) -> Option<Slot> {
        self.map.get(name).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Built-in functions. `pow`, `min` and `max` are binary, the rest unary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Pow,
    Sqrt,
    Exp,
    Log,
    Abs,
    Min,
    Max,
    Floor,
    Ceil,
}

impl Func {
    pub fn arity(self) -> usize {
        match self {
            Func::Pow | Func::Min | Func::Max => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Pow => "pow",
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
            Func::Floor => "floor",
            Func::Ceil => "ceil",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        // Function names are matched case-insensitively; variables are not.
        match name.to_ascii_lowercase().as_str() {
            "pow" => Some(Func::Pow),
            "sqrt" => Some(Func::Sqrt),
            "exp" => Some(Func::Exp),
            "log" => Some(Func::Log),
            "abs" => Some(Func::Abs),
            "min" => Some(Func::Min),
            "max" => Some(Func::Max),
            "floor" => Some(Func::Floor),
            "ceil" => Some(Func::Ceil),
            _ => None,
        }
    }
}

/// Expression AST. Variable nodes keep the source name for printing and
/// diagnostics next to the evaluation slot.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Lit(f64),
    Var {
        name: String,
        slot: Slot,
    },
    Neg(Box<Expr>),
    Bin {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Call {
        func: Func,
        args: Vec<Expr>,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{message} at byte {position}")]
pub struct ParseError {
    pub message: String,
    pub position: usize,
}

impl ParseError {
    pub(crate) fn new(message: impl Into<String>, position: usize) -> Self {
        Self {
            message: message.into(),
            position,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("division by zero in `{0}`")]
    DivisionByZero(String),
    #[error("square root of negative value in `{0}`")]
    SqrtNegative(String),
    #[error("logarithm of non-positive value in `{0}`")]
    LogNonPositive(String),
    #[error("non-finite result in `{0}`")]
    NotANumber(String),
}

impl Expr {
    /// Evaluates the expression over a population snapshot and parameter
    /// values. Species counts are read as reals.
    pub fn eval(&self, counts: &[u64], params: &[f64]) -> Result<f64, EvalError> {
        match self {
            Expr::Lit(v) => Ok(*v),
            Expr::Var { slot, .. } => Ok(match slot {
                Slot::Species(i) => counts[*i] as f64,
                Slot::Param(i) => params[*i],
            }),
            Expr::Neg(inner) => Ok(-inner.eval(counts, params)?),
            Expr::Bin { op, lhs, rhs } => {
                let a = lhs.eval(counts, params)?;
                let b = rhs.eval(counts, params)?;
                match op {
                    BinOp::Add => Ok(a + b),
                    BinOp::Sub => Ok(a - b),
                    BinOp::Mul => Ok(a * b),
                    BinOp::Div => {
                        if b == 0.0 {
                            Err(EvalError::DivisionByZero(self.to_string()))
                        } else {
                            Ok(a / b)
                        }
                    }
                }
            }
            Expr::Call { func, args } => {
                let a = args[0].eval(counts, params)?;
                match func {
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(EvalError::SqrtNegative(self.to_string()));
                        }
                        Ok(a.sqrt())
                    }
                    Func::Exp => Ok(a.exp()),
                    Func::Log => {
                        if a <= 0.0 {
                            return Err(EvalError::LogNonPositive(self.to_string()));
                        }
                        Ok(a.ln())
                    }
                    Func::Abs => Ok(a.abs()),
                    Func::Floor => Ok(a.floor()),
                    Func::Ceil => Ok(a.ceil()),
                    Func::Pow | Func::Min | Func::Max => {
                        let b = args[1].eval(counts, params)?;
                        let v = match func {
                            Func::Pow => a.powf(b),
                            Func::Min => a.min(b),
                            _ => a.max(b),
                        };
                        if v.is_nan() {
                            Err(EvalError::NotANumber(self.to_string()))
                        } else {
                            Ok(v)
                        }
                    }
                }
            }
        }
    }

    /// Every variable reference in the expression, in source order.
    pub fn variables(&self) -> Vec<(&str, Slot)> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<(&'a str, Slot)>) {
        match self {
            Expr::Lit(_) => {}
            Expr::Var { name, slot } => out.push((name, *slot)),
            Expr::Neg(inner) => inner.collect_vars(out),
            Expr::Bin { lhs, rhs, .. } => {
                lhs.collect_vars(out);
                rhs.collect_vars(out);
            }
            Expr::Call { args, .. } => {
                for a in args {
                    a.collect_vars(out);
                }
            }
        }
    }
}

// Printer precedence: additive 1, multiplicative 2, unary 3, atoms 4.
fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Bin {
            op: BinOp::Add | BinOp::Sub,
            ..
        } => 1,
        Expr::Bin {
            op: BinOp::Mul | BinOp::Div,
            ..
        } => 2,
        Expr::Neg(_) => 3,
        _ => 4,
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
            if precedence(e) < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expr::Lit(v) => write!(f, "{v}"),
            Expr::Var { name, .. } => write!(f, "{name}"),
            Expr::Neg(inner) => {
                write!(f, "-")?;
                child(f, inner, 3)
            }
            Expr::Bin { op, lhs, rhs } => {
                let (prec, sym) = match op {
                    BinOp::Add => (1, "+"),
                    BinOp::Sub => (1, "-"),
                    BinOp::Mul => (2, "*"),
                    BinOp::Div => (2, "/"),
                };
                child(f, lhs, prec)?;
                write!(f, " {sym} ")?;
                // Right operand needs parens at equal precedence: - and / are
                // left-associative.
                child(f, rhs, prec + 1)
            }
            Expr::Call { func, args } => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Lexer, shared with the temporal-formula parser.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    Ne,
    Bang,
    Amp,
    Pipe,
}

pub(crate) fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => toks.push((Tok::Plus, start)),
            b'-' => toks.push((Tok::Minus, start)),
            b'*' => toks.push((Tok::Star, start)),
            b'/' => toks.push((Tok::Slash, start)),
            b'(' => toks.push((Tok::LParen, start)),
            b')' => toks.push((Tok::RParen, start)),
            b'[' => toks.push((Tok::LBracket, start)),
            b']' => toks.push((Tok::RBracket, start)),
            b',' => toks.push((Tok::Comma, start)),
            b'&' => toks.push((Tok::Amp, start)),
            b'|' => toks.push((Tok::Pipe, start)),
            b'<' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    i += 1;
                    toks.push((Tok::Le, start));
                } else {
                    toks.push((Tok::Lt, start));
                }
            }
            b'>' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    i += 1;
                    toks.push((Tok::Ge, start));
                } else {
                    toks.push((Tok::Gt, start));
                }
            }
            b'=' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    i += 1;
                    toks.push((Tok::EqEq, start));
                } else {
                    return Err(ParseError::new("expected `==`", start));
                }
            }
            b'!' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    i += 1;
                    toks.push((Tok::Ne, start));
                } else {
                    toks.push((Tok::Bang, start));
                }
            }
            b'0'..=b'9' => {
                let mut j = i;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                if j < bytes.len() && bytes[j] == b'.' {
                    j += 1;
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                    let mut k = j + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && bytes[k].is_ascii_digit() {
                        j = k;
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                    }
                }
                let s = &text[i..j];
                let v: f64 = s
                    .parse()
                    .map_err(|_| ParseError::new(format!("invalid number `{s}`"), start))?;
                toks.push((Tok::Num(v), start));
                i = j;
                continue;
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let mut j = i;
                while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                    j += 1;
                }
                toks.push((Tok::Ident(text[i..j].to_owned()), start));
                i = j;
                continue;
            }
            other => {
                return Err(ParseError::new(
                    format!("unexpected character `{}`", other as char),
                    start,
                ));
            }
        }
        i += 1;
    }
    Ok(toks)
}

/// Token cursor used by both the expression and the formula parser.
pub(crate) struct Cursor<'t> {
    toks: &'t [(Tok, usize)],
    pub(crate) pos: usize,
    end: usize,
}

impl<'t> Cursor<'t> {
    pub(crate) fn new(toks: &'t [(Tok, usize)], end: usize) -> Self {
        Self { toks, pos: 0, end }
    }

    pub(crate) fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    pub(crate) fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(_, p)| *p).unwrap_or(self.end)
    }

    pub(crate) fn bump(&mut self) -> Option<&Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, tok: &Tok, what: &str) -> Result<(), ParseError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(ParseError::new(format!("expected {what}"), self.here()))
        }
    }

    pub(crate) fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }
}

/// Parses an arithmetic expression, resolving every identifier against the
/// symbol table. Standard precedence: unary minus binds tighter than `*` `/`,
/// which bind tighter than `+` `-`; all binary operators are left-associative.
pub fn parse_expression(text: &str, symbols: &SymbolTable) -> Result<Expr, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::new("empty expression", 0));
    }
    let toks = lex(text)?;
    let mut cur = Cursor::new(&toks, text.len());
    let expr = parse_additive(&mut cur, symbols)?;
    if !cur.at_end() {
        return Err(ParseError::new("unexpected trailing input", cur.here()));
    }
    Ok(expr)
}

pub(crate) fn parse_additive(cur: &mut Cursor, symbols: &SymbolTable) -> Result<Expr, ParseError> {
    let mut lhs = parse_multiplicative(cur, symbols)?;
    loop {
        let op = match cur.peek() {
            Some(Tok::Plus) => BinOp::Add,
            Some(Tok::Minus) => BinOp::Sub,
            _ => break,
        };
        cur.bump();
        let rhs = parse_multiplicative(cur, symbols)?;
        lhs = Expr::Bin {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        };
    }
    Ok(lhs)
}

fn parse_multiplicative(cur: &mut Cursor, symbols: &SymbolTable) -> Result<Expr, ParseError> {
    let mut lhs = parse_unary(cur, symbols)?;
    loop {
        let op = match cur.peek() {
            Some(Tok::Star) => BinOp::Mul,
            Some(Tok::Slash) => BinOp::Div,
            _ => break,
        };
        cur.bump();
        let rhs = parse_unary(cur, symbols)?;
        lhs = Expr::Bin {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        };
    }
    Ok(lhs)
}

fn parse_unary(cur: &mut Cursor, symbols: &SymbolTable) -> Result<Expr, ParseError> {
    if cur.eat(&Tok::Minus) {
        let inner = parse_unary(cur, symbols)?;
        return Ok(Expr::Neg(Box::new(inner)));
    }
    parse_primary(cur, symbols)
}

fn parse_primary(cur: &mut Cursor, symbols: &SymbolTable) -> Result<Expr, ParseError> {
    let at = cur.here();
    match cur.bump().cloned() {
        Some(Tok::Num(v)) => Ok(Expr::Lit(v)),
        Some(Tok::LParen) => {
            let inner = parse_additive(cur, symbols)?;
            cur.expect(&Tok::RParen, "`)`")?;
            Ok(inner)
        }
        Some(Tok::Ident(name)) => {
            if cur.peek() == Some(&Tok::LParen) {
                // Function application.
                let func = Func::from_name(&name)
                    .ok_or_else(|| ParseError::new(format!("unknown function `{name}`"), at))?;
                cur.bump();
                let mut args = vec![parse_additive(cur, symbols)?];
                while cur.eat(&Tok::Comma) {
                    args.push(parse_additive(cur, symbols)?);
                }
                cur.expect(&Tok::RParen, "`)`")?;
                if args.len() != func.arity() {
                    return Err(ParseError::new(
                        format!(
                            "function `{}` takes {} argument{}, got {}",
                            func.name(),
                            func.arity(),
                            if func.arity() == 1 { "" } else { "s" },
                            args.len()
                        ),
                        at,
                    ));
                }
                Ok(Expr::Call { func, args })
            } else {
                let slot = symbols
                    .resolve(&name)
                    .ok_or_else(|| ParseError::new(format!("unknown identifier `{name}`"), at))?;
                Ok(Expr::Var { name, slot })
            }
        }
        Some(other) => Err(ParseError::new(format!("unexpected token `{other:?}`"), at)),
        None => Err(ParseError::new("unexpected end of input", at)),
    }
}
