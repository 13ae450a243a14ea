//! ATL*/CTL* formulas: abstract syntax, a concrete parser/printer, and the
//! formula transformations used by the verification pipeline (NNF rewriting,
//! negated-atom replacement, sub-formula extraction, substitution and the
//! strategic-to-path-quantifier translation).

use std::collections::{HashMap, HashSet};
use std::fmt;

use thiserror::Error;

/// A coalition of agents, referenced by name. Kept sorted and deduplicated so
/// that structural equality of formulas ignores the order coalitions were
/// written in.
pub type Coalition = Vec<String>;

/// State and path formulas share one AST. Which nodes are admissible where is
/// enforced by [`parse`] (temporal operators must sit below a strategic or
/// path quantifier).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    Atom(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    /// `<<G>> psi` — the coalition has a joint strategy enforcing `psi`.
    Strategic(Coalition, Box<Formula>),
    /// `[[G]] psi` — against every joint strategy of the coalition some
    /// outcome satisfies `psi`.
    StrategicDual(Coalition, Box<Formula>),
    /// CTL* universal path quantifier `A psi`.
    PathA(Box<Formula>),
    /// CTL* existential path quantifier `E psi`.
    PathE(Box<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Release(Box<Formula>, Box<Formula>),
    /// `F psi`, kept as sugar for `true U psi` until automata translation.
    Finally(Box<Formula>),
    /// `G psi`, kept as sugar for `false R psi` until automata translation.
    Globally(Box<Formula>),
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Self {
        Formula::Atom(name.into())
    }

    pub fn not(self) -> Self {
        Formula::Not(Box::new(self))
    }

    pub fn and(self, rhs: Formula) -> Self {
        Formula::And(Box::new(self), Box::new(rhs))
    }

    pub fn or(self, rhs: Formula) -> Self {
        Formula::Or(Box::new(self), Box::new(rhs))
    }

    pub fn strategic<I, S>(coalition: I, body: Formula) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Formula::Strategic(normalize_coalition(coalition), Box::new(body))
    }

    pub fn strategic_dual<I, S>(coalition: I, body: Formula) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Formula::StrategicDual(normalize_coalition(coalition), Box::new(body))
    }

    pub fn path_a(body: Formula) -> Self {
        Formula::PathA(Box::new(body))
    }

    pub fn path_e(body: Formula) -> Self {
        Formula::PathE(Box::new(body))
    }

    pub fn next(self) -> Self {
        Formula::Next(Box::new(self))
    }

    pub fn until(self, rhs: Formula) -> Self {
        Formula::Until(Box::new(self), Box::new(rhs))
    }

    pub fn release(self, rhs: Formula) -> Self {
        Formula::Release(Box::new(self), Box::new(rhs))
    }

    pub fn finally(self) -> Self {
        Formula::Finally(Box::new(self))
    }

    pub fn globally(self) -> Self {
        Formula::Globally(Box::new(self))
    }

    /// True when the formula is built from atoms and boolean connectives only.
    pub fn is_boolean(&self) -> bool {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => true,
            Formula::Not(x) => x.is_boolean(),
            Formula::And(a, b) | Formula::Or(a, b) => a.is_boolean() && b.is_boolean(),
            _ => false,
        }
    }

    /// Atom names occurring anywhere in the formula, in first-occurrence order.
    pub fn atoms(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        self.visit(&mut |f| {
            if let Formula::Atom(name) = f {
                if seen.insert(name.clone()) {
                    out.push(name.clone());
                }
            }
        });
        out
    }

    /// Number of distinct subformulas (the closure size used to bound oracle
    /// lasso lengths).
    pub fn closure_size(&self) -> usize {
        let mut seen = HashSet::new();
        self.visit(&mut |f| {
            seen.insert(f.clone());
        });
        seen.len()
    }

    fn visit(&self, f: &mut impl FnMut(&Formula)) {
        f(self);
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => {}
            Formula::Not(x)
            | Formula::Next(x)
            | Formula::Finally(x)
            | Formula::Globally(x)
            | Formula::PathA(x)
            | Formula::PathE(x)
            | Formula::Strategic(_, x)
            | Formula::StrategicDual(_, x) => x.visit(f),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(a, b) | Formula::Release(a, b) => {
                a.visit(f);
                b.visit(f);
            }
        }
    }

    /// True when no `Strategic`/`StrategicDual` node occurs.
    pub fn is_strategic_free(&self) -> bool {
        let mut free = true;
        self.visit(&mut |f| {
            if matches!(f, Formula::Strategic(..) | Formula::StrategicDual(..)) {
                free = false;
            }
        });
        free
    }

    /// True when no `PathA`/`PathE`/`Strategic`/`StrategicDual` node occurs,
    /// i.e. the formula is a pure LTL path formula over atoms.
    pub fn is_ltl(&self) -> bool {
        let mut ltl = true;
        self.visit(&mut |f| {
            if matches!(
                f,
                Formula::Strategic(..) | Formula::StrategicDual(..) | Formula::PathA(_) | Formula::PathE(_)
            ) {
                ltl = false;
            }
        });
        ltl
    }
}

fn normalize_coalition<I, S>(coalition: I) -> Coalition
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let mut names: Vec<String> = coalition.into_iter().map(Into::into).collect();
    names.sort();
    names.dedup();
    names
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("parse error at byte {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("malformed coalition at byte {pos}: {message}")]
    Arity { pos: usize, message: String },
    #[error("temporal operator `{op}` outside a strategic or path quantifier")]
    Scope { op: &'static str },
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    KwTrue,
    KwFalse,
    A,
    E,
    X,
    F,
    G,
    U,
    R,
    Not,
    And,
    Or,
    Implies,
    LParen,
    RParen,
    LAngle2, // <<
    RAngle2, // >>
    LBrack2, // [[
    RBrack2, // ]]
    Comma,
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

fn tokenize(input: &str) -> Result<Lexer, ParseError> {
    let bytes = input.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            '(' => {
                i += 1;
                Tok::LParen
            }
            ')' => {
                i += 1;
                Tok::RParen
            }
            ',' => {
                i += 1;
                Tok::Comma
            }
            '!' => {
                i += 1;
                Tok::Not
            }
            '&' => {
                i += 1;
                Tok::And
            }
            '|' => {
                i += 1;
                Tok::Or
            }
            '-' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    i += 2;
                    Tok::Implies
                } else {
                    return Err(ParseError::Syntax {
                        pos: i,
                        message: "expected `->`".into(),
                    });
                }
            }
            '<' => {
                if bytes.get(i + 1) == Some(&b'<') {
                    i += 2;
                    Tok::LAngle2
                } else {
                    return Err(ParseError::Syntax {
                        pos: i,
                        message: "expected `<<`".into(),
                    });
                }
            }
            '>' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    i += 2;
                    Tok::RAngle2
                } else {
                    return Err(ParseError::Syntax {
                        pos: i,
                        message: "expected `>>`".into(),
                    });
                }
            }
            '[' => {
                if bytes.get(i + 1) == Some(&b'[') {
                    i += 2;
                    Tok::LBrack2
                } else {
                    return Err(ParseError::Syntax {
                        pos: i,
                        message: "expected `[[`".into(),
                    });
                }
            }
            ']' => {
                if bytes.get(i + 1) == Some(&b']') {
                    i += 2;
                    Tok::RBrack2
                } else {
                    return Err(ParseError::Syntax {
                        pos: i,
                        message: "expected `]]`".into(),
                    });
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i + 1;
                while j < bytes.len() {
                    let d = bytes[j] as char;
                    if d.is_ascii_alphanumeric() || d == '_' {
                        j += 1;
                    } else {
                        break;
                    }
                }
                let word = &input[i..j];
                i = j;
                match word {
                    "true" => Tok::KwTrue,
                    "false" => Tok::KwFalse,
                    "A" => Tok::A,
                    "E" => Tok::E,
                    "X" => Tok::X,
                    "F" => Tok::F,
                    "G" => Tok::G,
                    "U" => Tok::U,
                    "R" => Tok::R,
                    _ => Tok::Ident(word.to_string()),
                }
            }
            other => {
                return Err(ParseError::Syntax {
                    pos: i,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        toks.push((tok, start));
    }
    Ok(Lexer {
        toks,
        pos: 0,
        end: input.len(),
    })
}

impl Lexer {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(_, p)| *p)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(ParseError::Syntax {
                pos: self.here(),
                message: format!("expected {what}"),
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

/// Parses the ASCII surface syntax into an AST.
///
/// Precedence, loosest to tightest: `->`, `|`, `&`, `U`/`R`, unary
/// (`!`, `X`, `F`, `G`). The quantifiers `<<..>>`, `[[..]]`, `A`, `E` take the
/// longest path formula up to (but not across) a boolean connective, so
/// `<<a>> p U q` reads as `<<a>> (p U q)` while `<<a>> p & q` reads as
/// `(<<a>> p) & q`. Implication `a -> b` is desugared to `!a | b`.
///
/// The result must be a state formula: a temporal operator with no enclosing
/// quantifier is a [`ParseError::Scope`].
pub fn parse(input: &str) -> Result<Formula, ParseError> {
    let mut lx = tokenize(input)?;
    let f = parse_implies(&mut lx)?;
    if lx.peek().is_some() {
        return Err(ParseError::Syntax {
            pos: lx.here(),
            message: "trailing input after formula".into(),
        });
    }
    validate_state(&f)?;
    Ok(f)
}

fn parse_implies(lx: &mut Lexer) -> Result<Formula, ParseError> {
    let lhs = parse_or(lx)?;
    if lx.peek() == Some(&Tok::Implies) {
        lx.bump();
        let rhs = parse_implies(lx)?;
        Ok(lhs.not().or(rhs))
    } else {
        Ok(lhs)
    }
}

fn parse_or(lx: &mut Lexer) -> Result<Formula, ParseError> {
    let mut lhs = parse_and(lx)?;
    while lx.peek() == Some(&Tok::Or) {
        lx.bump();
        let rhs = parse_and(lx)?;
        lhs = lhs.or(rhs);
    }
    Ok(lhs)
}

fn parse_and(lx: &mut Lexer) -> Result<Formula, ParseError> {
    let mut lhs = parse_until(lx)?;
    while lx.peek() == Some(&Tok::And) {
        lx.bump();
        let rhs = parse_until(lx)?;
        lhs = lhs.and(rhs);
    }
    Ok(lhs)
}

fn parse_until(lx: &mut Lexer) -> Result<Formula, ParseError> {
    let lhs = parse_unary(lx)?;
    match lx.peek() {
        Some(Tok::U) => {
            lx.bump();
            let rhs = parse_until(lx)?;
            Ok(lhs.until(rhs))
        }
        Some(Tok::R) => {
            lx.bump();
            let rhs = parse_until(lx)?;
            Ok(lhs.release(rhs))
        }
        _ => Ok(lhs),
    }
}

fn parse_unary(lx: &mut Lexer) -> Result<Formula, ParseError> {
    match lx.peek() {
        Some(Tok::Not) => {
            lx.bump();
            Ok(parse_unary(lx)?.not())
        }
        Some(Tok::X) => {
            lx.bump();
            Ok(parse_unary(lx)?.next())
        }
        Some(Tok::F) => {
            lx.bump();
            Ok(parse_unary(lx)?.finally())
        }
        Some(Tok::G) => {
            lx.bump();
            Ok(parse_unary(lx)?.globally())
        }
        Some(Tok::A) => {
            lx.bump();
            Ok(Formula::path_a(parse_until(lx)?))
        }
        Some(Tok::E) => {
            lx.bump();
            Ok(Formula::path_e(parse_until(lx)?))
        }
        Some(Tok::LAngle2) => {
            lx.bump();
            let coalition = parse_coalition(lx, Tok::RAngle2, "`>>`")?;
            let body = parse_until(lx)?;
            Ok(Formula::Strategic(coalition, Box::new(body)))
        }
        Some(Tok::LBrack2) => {
            lx.bump();
            let coalition = parse_coalition(lx, Tok::RBrack2, "`]]`")?;
            let body = parse_until(lx)?;
            Ok(Formula::StrategicDual(coalition, Box::new(body)))
        }
        Some(Tok::LParen) => {
            lx.bump();
            let f = parse_implies(lx)?;
            lx.expect(Tok::RParen, "`)`")?;
            Ok(f)
        }
        Some(Tok::KwTrue) => {
            lx.bump();
            Ok(Formula::True)
        }
        Some(Tok::KwFalse) => {
            lx.bump();
            Ok(Formula::False)
        }
        Some(Tok::Ident(_)) => {
            let Some(Tok::Ident(name)) = lx.bump() else {
                unreachable!()
            };
            Ok(Formula::Atom(name))
        }
        _ => Err(ParseError::Syntax {
            pos: lx.here(),
            message: "expected a formula".into(),
        }),
    }
}

fn parse_coalition(lx: &mut Lexer, close: Tok, close_name: &str) -> Result<Coalition, ParseError> {
    let start = lx.here();
    let mut names: Vec<String> = Vec::new();
    if lx.peek() == Some(&close) {
        lx.bump();
        return Ok(names);
    }
    loop {
        match lx.bump() {
            Some(Tok::Ident(name)) => names.push(name),
            _ => {
                return Err(ParseError::Arity {
                    pos: start,
                    message: "coalition members must be agent names".into(),
                })
            }
        }
        match lx.peek() {
            Some(Tok::Comma) => {
                lx.bump();
            }
            t if t == Some(&close) => {
                lx.bump();
                break;
            }
            _ => {
                return Err(ParseError::Syntax {
                    pos: lx.here(),
                    message: format!("expected `,` or {close_name} in coalition"),
                })
            }
        }
    }
    let mut sorted = names.clone();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != names.len() {
        return Err(ParseError::Arity {
            pos: start,
            message: "duplicate agent in coalition".into(),
        });
    }
    Ok(sorted)
}

fn validate_state(f: &Formula) -> Result<(), ParseError> {
    match f {
        Formula::True | Formula::False | Formula::Atom(_) => Ok(()),
        Formula::Not(x) => validate_state(x),
        Formula::And(a, b) | Formula::Or(a, b) => {
            validate_state(a)?;
            validate_state(b)
        }
        Formula::Strategic(_, body)
        | Formula::StrategicDual(_, body)
        | Formula::PathA(body)
        | Formula::PathE(body) => validate_path(body),
        Formula::Next(_) => Err(ParseError::Scope { op: "X" }),
        Formula::Until(..) => Err(ParseError::Scope { op: "U" }),
        Formula::Release(..) => Err(ParseError::Scope { op: "R" }),
        Formula::Finally(_) => Err(ParseError::Scope { op: "F" }),
        Formula::Globally(_) => Err(ParseError::Scope { op: "G" }),
    }
}

fn validate_path(f: &Formula) -> Result<(), ParseError> {
    match f {
        Formula::True | Formula::False | Formula::Atom(_) => Ok(()),
        Formula::Not(x) | Formula::Next(x) | Formula::Finally(x) | Formula::Globally(x) => validate_path(x),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(a, b) | Formula::Release(a, b) => {
            validate_path(a)?;
            validate_path(b)
        }
        Formula::Strategic(_, body)
        | Formula::StrategicDual(_, body)
        | Formula::PathA(body)
        | Formula::PathE(body) => validate_path(body),
    }
}

// ---------------------------------------------------------------------------
// Printer
// ---------------------------------------------------------------------------

const PREC_OR: u8 = 1;
const PREC_AND: u8 = 2;
const PREC_UNTIL: u8 = 3;
const PREC_UNARY: u8 = 4;
const PREC_ATOM: u8 = 5;

fn prec(f: &Formula) -> u8 {
    match f {
        Formula::True | Formula::False | Formula::Atom(_) => PREC_ATOM,
        Formula::Not(_) | Formula::Next(_) | Formula::Finally(_) | Formula::Globally(_) => PREC_UNARY,
        // Quantifier bodies extend to the U/R level, so as sub-terms these
        // bind like an until expression.
        Formula::Strategic(..) | Formula::StrategicDual(..) | Formula::PathA(_) | Formula::PathE(_) => PREC_UNTIL,
        Formula::Until(..) | Formula::Release(..) => PREC_UNTIL,
        Formula::And(..) => PREC_AND,
        Formula::Or(..) => PREC_OR,
    }
}

fn fmt_at(f: &Formula, ctx: u8, out: &mut fmt::Formatter<'_>) -> fmt::Result {
    let p = prec(f);
    let parens = p < ctx;
    if parens {
        write!(out, "(")?;
    }
    match f {
        Formula::True => write!(out, "true")?,
        Formula::False => write!(out, "false")?,
        Formula::Atom(name) => write!(out, "{name}")?,
        Formula::Not(x) => {
            write!(out, "!")?;
            fmt_at(x, PREC_UNARY, out)?;
        }
        Formula::Next(x) => {
            write!(out, "X ")?;
            fmt_at(x, PREC_UNARY, out)?;
        }
        Formula::Finally(x) => {
            write!(out, "F ")?;
            fmt_at(x, PREC_UNARY, out)?;
        }
        Formula::Globally(x) => {
            write!(out, "G ")?;
            fmt_at(x, PREC_UNARY, out)?;
        }
        Formula::And(a, b) => {
            fmt_at(a, PREC_AND, out)?;
            write!(out, " & ")?;
            fmt_at(b, PREC_AND + 1, out)?;
        }
        Formula::Or(a, b) => {
            fmt_at(a, PREC_OR, out)?;
            write!(out, " | ")?;
            fmt_at(b, PREC_OR + 1, out)?;
        }
        Formula::Until(a, b) => {
            fmt_at(a, PREC_UNARY, out)?;
            write!(out, " U ")?;
            fmt_at(b, PREC_UNTIL, out)?;
        }
        Formula::Release(a, b) => {
            fmt_at(a, PREC_UNARY, out)?;
            write!(out, " R ")?;
            fmt_at(b, PREC_UNTIL, out)?;
        }
        Formula::Strategic(coalition, body) => {
            write!(out, "<<{}>> ", coalition.join(","))?;
            fmt_at(body, PREC_UNTIL, out)?;
        }
        Formula::StrategicDual(coalition, body) => {
            write!(out, "[[{}]] ", coalition.join(","))?;
            fmt_at(body, PREC_UNTIL, out)?;
        }
        Formula::PathA(body) => {
            write!(out, "A ")?;
            fmt_at(body, PREC_UNTIL, out)?;
        }
        Formula::PathE(body) => {
            write!(out, "E ")?;
            fmt_at(body, PREC_UNTIL, out)?;
        }
    }
    if parens {
        write!(out, ")")?;
    }
    Ok(())
}

impl fmt::Display for Formula {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_at(self, 0, out)
    }
}

// ---------------------------------------------------------------------------
// Transformations
// ---------------------------------------------------------------------------

/// Rewrites a formula into negation normal form: negation is pushed down to
/// atoms through the classical dualities (`!<<G>>psi -> [[G]]!psi`,
/// `!X psi -> X !psi`, `!(a U b) -> !a R !b`, De Morgan, and the A/E duals).
pub fn to_nnf(f: &Formula) -> Formula {
    match f {
        Formula::True | Formula::False | Formula::Atom(_) => f.clone(),
        Formula::Not(x) => nnf_neg(x),
        Formula::And(a, b) => to_nnf(a).and(to_nnf(b)),
        Formula::Or(a, b) => to_nnf(a).or(to_nnf(b)),
        Formula::Strategic(c, body) => Formula::Strategic(c.clone(), Box::new(to_nnf(body))),
        Formula::StrategicDual(c, body) => Formula::StrategicDual(c.clone(), Box::new(to_nnf(body))),
        Formula::PathA(body) => Formula::path_a(to_nnf(body)),
        Formula::PathE(body) => Formula::path_e(to_nnf(body)),
        Formula::Next(x) => to_nnf(x).next(),
        Formula::Until(a, b) => to_nnf(a).until(to_nnf(b)),
        Formula::Release(a, b) => to_nnf(a).release(to_nnf(b)),
        Formula::Finally(x) => to_nnf(x).finally(),
        Formula::Globally(x) => to_nnf(x).globally(),
    }
}

fn nnf_neg(f: &Formula) -> Formula {
    match f {
        Formula::True => Formula::False,
        Formula::False => Formula::True,
        Formula::Atom(_) => f.clone().not(),
        Formula::Not(x) => to_nnf(x),
        Formula::And(a, b) => nnf_neg(a).or(nnf_neg(b)),
        Formula::Or(a, b) => nnf_neg(a).and(nnf_neg(b)),
        Formula::Strategic(c, body) => Formula::StrategicDual(c.clone(), Box::new(nnf_neg(body))),
        Formula::StrategicDual(c, body) => Formula::Strategic(c.clone(), Box::new(nnf_neg(body))),
        Formula::PathA(body) => Formula::path_e(nnf_neg(body)),
        Formula::PathE(body) => Formula::path_a(nnf_neg(body)),
        Formula::Next(x) => nnf_neg(x).next(),
        Formula::Until(a, b) => nnf_neg(a).release(nnf_neg(b)),
        Formula::Release(a, b) => nnf_neg(a).until(nnf_neg(b)),
        Formula::Finally(x) => nnf_neg(x).globally(),
        Formula::Globally(x) => nnf_neg(x).finally(),
    }
}

/// Collects the atoms occurring under a negation, in first-occurrence order.
/// The input must be in NNF, so every `Not` sits directly above an atom.
pub fn extract_negated_atoms(f: &Formula) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    f.visit(&mut |g| {
        if let Formula::Not(inner) = g {
            if let Formula::Atom(name) = inner.as_ref() {
                if seen.insert(name.clone()) {
                    out.push(name.clone());
                }
            }
        }
    });
    out
}

/// Replaces every `!p` with the (positive) atom `np`. On NNF input with all
/// negated atoms replaced the result is negation-free.
pub fn replace_negated_atom(f: &Formula, p: &str, np: &str) -> Formula {
    match f {
        Formula::Not(inner) => match inner.as_ref() {
            Formula::Atom(name) if name == p => Formula::atom(np),
            _ => replace_negated_atom(inner, p, np).not(),
        },
        Formula::True | Formula::False | Formula::Atom(_) => f.clone(),
        Formula::And(a, b) => replace_negated_atom(a, p, np).and(replace_negated_atom(b, p, np)),
        Formula::Or(a, b) => replace_negated_atom(a, p, np).or(replace_negated_atom(b, p, np)),
        Formula::Strategic(c, body) => {
            Formula::Strategic(c.clone(), Box::new(replace_negated_atom(body, p, np)))
        }
        Formula::StrategicDual(c, body) => {
            Formula::StrategicDual(c.clone(), Box::new(replace_negated_atom(body, p, np)))
        }
        Formula::PathA(body) => Formula::path_a(replace_negated_atom(body, p, np)),
        Formula::PathE(body) => Formula::path_e(replace_negated_atom(body, p, np)),
        Formula::Next(x) => replace_negated_atom(x, p, np).next(),
        Formula::Until(a, b) => replace_negated_atom(a, p, np).until(replace_negated_atom(b, p, np)),
        Formula::Release(a, b) => {
            replace_negated_atom(a, p, np).release(replace_negated_atom(b, p, np))
        }
        Formula::Finally(x) => replace_negated_atom(x, p, np).finally(),
        Formula::Globally(x) => replace_negated_atom(x, p, np).globally(),
    }
}

/// Union of the coalitions of all strategic operators, sorted by name.
pub fn coalition_agents(f: &Formula) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    f.visit(&mut |g| {
        if let Formula::Strategic(c, _) | Formula::StrategicDual(c, _) = g {
            names.extend(c.iter().cloned());
        }
    });
    names.sort();
    names.dedup();
    names
}

/// One extracted sub-formula: a formula containing exactly one strategic
/// operator (nested strategic sub-formulas already replaced by their atoms)
/// together with the fresh atom that stands for it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubformulaNode {
    /// 1-based index in extraction (post-order) order.
    pub id: usize,
    /// The sub-formula, with inner strategic operators atomized.
    pub formula: Formula,
    /// The fresh atom `atom_<id>` standing for this sub-formula.
    pub atom: String,
}

/// The decomposition of a formula into single-strategic-operator nodes plus
/// the residue connecting their atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubformulaTree {
    /// Leaves first, depth-first, left-to-right among siblings.
    pub nodes: Vec<SubformulaNode>,
    /// The input with every strategic sub-formula replaced by its atom.
    pub residue: Formula,
}

impl SubformulaTree {
    pub fn node_by_id(&self, id: usize) -> &SubformulaNode {
        &self.nodes[id - 1]
    }

    /// Substitutes the nodes back (last to first), reconstructing the input.
    pub fn reconstruct(&self) -> Formula {
        let mut f = self.residue.clone();
        for node in self.nodes.iter().rev() {
            f = update_formula(&f, &Formula::atom(node.atom.clone()), &node.formula);
        }
        f
    }
}

/// Extracts the sub-formula tree: every strategic sub-formula becomes a node
/// with a fresh atom `atom_k` (k assigned in post-order, so dependencies come
/// before dependents), and each node's own strategic children are already
/// replaced by their atoms. Structurally equal sub-formulas share one node.
pub fn subformulas(f: &Formula) -> SubformulaTree {
    let mut nodes: Vec<SubformulaNode> = Vec::new();
    let mut index: HashMap<Formula, usize> = HashMap::new();
    let residue = atomize(f, &mut nodes, &mut index);
    SubformulaTree { nodes, residue }
}

fn atomize(f: &Formula, nodes: &mut Vec<SubformulaNode>, index: &mut HashMap<Formula, usize>) -> Formula {
    match f {
        Formula::Strategic(..) | Formula::StrategicDual(..) => {
            let inner = match f {
                Formula::Strategic(c, body) => {
                    Formula::Strategic(c.clone(), Box::new(atomize(body, nodes, index)))
                }
                Formula::StrategicDual(c, body) => {
                    Formula::StrategicDual(c.clone(), Box::new(atomize(body, nodes, index)))
                }
                _ => unreachable!(),
            };
            let id = *index.entry(inner.clone()).or_insert_with(|| {
                let id = nodes.len() + 1;
                nodes.push(SubformulaNode {
                    id,
                    atom: format!("atom_{id}"),
                    formula: inner,
                });
                id
            });
            Formula::atom(nodes[id - 1].atom.clone())
        }
        Formula::True | Formula::False | Formula::Atom(_) => f.clone(),
        Formula::Not(x) => atomize(x, nodes, index).not(),
        Formula::And(a, b) => atomize(a, nodes, index).and(atomize(b, nodes, index)),
        Formula::Or(a, b) => atomize(a, nodes, index).or(atomize(b, nodes, index)),
        Formula::PathA(body) => Formula::path_a(atomize(body, nodes, index)),
        Formula::PathE(body) => Formula::path_e(atomize(body, nodes, index)),
        Formula::Next(x) => atomize(x, nodes, index).next(),
        Formula::Until(a, b) => atomize(a, nodes, index).until(atomize(b, nodes, index)),
        Formula::Release(a, b) => atomize(a, nodes, index).release(atomize(b, nodes, index)),
        Formula::Finally(x) => atomize(x, nodes, index).finally(),
        Formula::Globally(x) => atomize(x, nodes, index).globally(),
    }
}

/// Replaces every occurrence of `target` (by structural equality) with `with`.
pub fn update_formula(f: &Formula, target: &Formula, with: &Formula) -> Formula {
    if f == target {
        return with.clone();
    }
    match f {
        Formula::True | Formula::False | Formula::Atom(_) => f.clone(),
        Formula::Not(x) => update_formula(x, target, with).not(),
        Formula::And(a, b) => update_formula(a, target, with).and(update_formula(b, target, with)),
        Formula::Or(a, b) => update_formula(a, target, with).or(update_formula(b, target, with)),
        Formula::Strategic(c, body) => {
            Formula::Strategic(c.clone(), Box::new(update_formula(body, target, with)))
        }
        Formula::StrategicDual(c, body) => {
            Formula::StrategicDual(c.clone(), Box::new(update_formula(body, target, with)))
        }
        Formula::PathA(body) => Formula::path_a(update_formula(body, target, with)),
        Formula::PathE(body) => Formula::path_e(update_formula(body, target, with)),
        Formula::Next(x) => update_formula(x, target, with).next(),
        Formula::Until(a, b) => update_formula(a, target, with).until(update_formula(b, target, with)),
        Formula::Release(a, b) => {
            update_formula(a, target, with).release(update_formula(b, target, with))
        }
        Formula::Finally(x) => update_formula(x, target, with).finally(),
        Formula::Globally(x) => update_formula(x, target, with).globally(),
    }
}

/// Expands the `F`/`G` sugar into `U`/`R`. Used by the automata translators;
/// everything else keeps the sugared nodes for readable reporting.
pub fn expand_sugar(f: &Formula) -> Formula {
    match f {
        Formula::True | Formula::False | Formula::Atom(_) => f.clone(),
        Formula::Not(x) => expand_sugar(x).not(),
        Formula::And(a, b) => expand_sugar(a).and(expand_sugar(b)),
        Formula::Or(a, b) => expand_sugar(a).or(expand_sugar(b)),
        Formula::Strategic(c, body) => Formula::Strategic(c.clone(), Box::new(expand_sugar(body))),
        Formula::StrategicDual(c, body) => {
            Formula::StrategicDual(c.clone(), Box::new(expand_sugar(body)))
        }
        Formula::PathA(body) => Formula::path_a(expand_sugar(body)),
        Formula::PathE(body) => Formula::path_e(expand_sugar(body)),
        Formula::Next(x) => expand_sugar(x).next(),
        Formula::Until(a, b) => expand_sugar(a).until(expand_sugar(b)),
        Formula::Release(a, b) => expand_sugar(a).release(expand_sugar(b)),
        Formula::Finally(x) => Formula::True.until(expand_sugar(x)),
        Formula::Globally(x) => Formula::False.release(expand_sugar(x)),
    }
}

/// Which CTL* quantifier replaces the strategic operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtlVariant {
    /// Universal translation (the `n` variant, yielding `phi_A`).
    Universal,
    /// Existential translation (the `p` variant, yielding `phi_E`).
    Existential,
}

/// Replaces every strategic operator with a CTL* path quantifier: `A` for the
/// universal variant, `E` for the existential one.
pub fn atl_to_ctl(f: &Formula, variant: CtlVariant) -> Formula {
    let quant = |body: Formula| match variant {
        CtlVariant::Universal => Formula::path_a(body),
        CtlVariant::Existential => Formula::path_e(body),
    };
    match f {
        Formula::True | Formula::False | Formula::Atom(_) => f.clone(),
        Formula::Not(x) => atl_to_ctl(x, variant).not(),
        Formula::And(a, b) => atl_to_ctl(a, variant).and(atl_to_ctl(b, variant)),
        Formula::Or(a, b) => atl_to_ctl(a, variant).or(atl_to_ctl(b, variant)),
        Formula::Strategic(_, body) | Formula::StrategicDual(_, body) => quant(atl_to_ctl(body, variant)),
        Formula::PathA(body) => Formula::path_a(atl_to_ctl(body, variant)),
        Formula::PathE(body) => Formula::path_e(atl_to_ctl(body, variant)),
        Formula::Next(x) => atl_to_ctl(x, variant).next(),
        Formula::Until(a, b) => atl_to_ctl(a, variant).until(atl_to_ctl(b, variant)),
        Formula::Release(a, b) => atl_to_ctl(a, variant).release(atl_to_ctl(b, variant)),
        Formula::Finally(x) => atl_to_ctl(x, variant).finally(),
        Formula::Globally(x) => atl_to_ctl(x, variant).globally(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Formula {
        parse(s).unwrap()
    }

    #[test]
    fn parses_rover_phi1() {
        let oc_rm = Formula::atom("oc").and(Formula::atom("rm"));
        let pl_pr = Formula::atom("pl").or(Formula::atom("pr"));
        let body = oc_rm
            .clone()
            .and(pl_pr.and(oc_rm.finally()).finally())
            .finally();
        let expected = Formula::strategic(["rover"], body);
        assert_eq!(p("<<rover>> F ((oc & rm) & F ((pl | pr) & F (oc & rm)))"), expected);
    }

    #[test]
    fn parses_single_atom() {
        assert_eq!(p("q"), Formula::atom("q"));
    }

    #[test]
    fn rejects_bare_temporal_operator() {
        assert!(matches!(parse("X p"), Err(ParseError::Scope { op: "X" })));
        assert!(matches!(parse("p U q"), Err(ParseError::Scope { op: "U" })));
    }

    #[test]
    fn rejects_duplicate_coalition_member() {
        assert!(matches!(parse("<<a,a>> X p"), Err(ParseError::Arity { .. })));
    }

    #[test]
    fn parses_empty_coalition() {
        assert_eq!(p("<<>> X true"), Formula::strategic::<[&str; 0], &str>([], Formula::True.next()));
    }

    #[test]
    fn quantifier_scope_extends_to_until_but_not_and() {
        // <<G1>> X [[G2]] p U r & (<<G3>> X p | [[G4]] q R p)
        let psi2 = Formula::strategic_dual(["g2"], Formula::atom("p").until(Formula::atom("r")));
        let psi1 = Formula::strategic(["g1"], psi2.next());
        let psi3 = Formula::strategic(["g3"], Formula::atom("p").next());
        let psi4 = Formula::strategic_dual(["g4"], Formula::atom("q").release(Formula::atom("p")));
        let expected = psi1.and(psi3.or(psi4));
        assert_eq!(p("<<g1>> X [[g2]] p U r & (<<g3>> X p | [[g4]] q R p)"), expected);
    }

    #[test]
    fn precedence_unary_binds_tighter_than_until() {
        assert_eq!(
            p("<<a>> !p U q"),
            Formula::strategic(["a"], Formula::atom("p").not().until(Formula::atom("q")))
        );
        assert_eq!(
            p("<<a>> X p U q"),
            Formula::strategic(["a"], Formula::atom("p").next().until(Formula::atom("q")))
        );
    }

    #[test]
    fn implication_desugars() {
        assert_eq!(p("p -> q"), Formula::atom("p").not().or(Formula::atom("q")));
    }

    #[test]
    fn and_binds_tighter_than_or() {
        assert_eq!(
            p("p & q | r"),
            Formula::atom("p").and(Formula::atom("q")).or(Formula::atom("r"))
        );
    }

    #[test]
    fn parse_error_carries_position() {
        match parse("p & (q") {
            Err(ParseError::Syntax { pos, .. }) => assert_eq!(pos, 6),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn print_parse_round_trip_on_rover_formulas() {
        for text in [
            "<<rover>> F ((oc & rm) & F ((pl | pr) & F (oc & rm)))",
            "<<mechanic,rover>> F ((oc & rm) & <<rover>> F ((pl | pr) & F (oc & rm)))",
            "<<mechanic,rover>> F (rp & !ip & <<rover>> F ((pl | pr) & F (oc & rm)))",
            "[[a]] (p U q) & <<b>> X p",
            "A G (p -> q)",
            "E (p U q U r)",
        ] {
            let f = p(text);
            assert_eq!(p(&f.to_string()), f, "round trip failed for {text}");
        }
    }

    #[test]
    fn nnf_double_negation() {
        assert_eq!(to_nnf(&p("!!q")), Formula::atom("q"));
    }

    #[test]
    fn nnf_strategic_duality() {
        let f = p("!<<g>> X p");
        assert_eq!(
            to_nnf(&f),
            Formula::strategic_dual(["g"], Formula::atom("p").not().next())
        );
    }

    #[test]
    fn nnf_until_release_duality() {
        let f = to_nnf(&p("!<<g>> (p U q)"));
        assert_eq!(
            f,
            Formula::strategic_dual(
                ["g"],
                Formula::atom("p").not().release(Formula::atom("q").not())
            )
        );
    }

    #[test]
    fn nnf_is_idempotent_on_samples() {
        for text in [
            "!(p & !q)",
            "!<<a,b>> F (p | !q)",
            "![[a]] G (p -> q)",
            "!A X !E F p",
        ] {
            let once = to_nnf(&p(text));
            assert_eq!(to_nnf(&once), once, "not idempotent on {text}");
        }
    }

    #[test]
    fn extract_negated_atoms_from_phi3() {
        let phi3 = p("<<rover,mechanic>> F (rp & !ip & <<rover>> F ((pl | pr) & F (oc & rm)))");
        assert_eq!(extract_negated_atoms(&to_nnf(&phi3)), vec!["ip".to_string()]);
    }

    #[test]
    fn extract_negated_atoms_none_and_dedup() {
        let phi1 = p("<<rover>> F ((oc & rm) & F ((pl | pr) & F (oc & rm)))");
        assert!(extract_negated_atoms(&phi1).is_empty());
        assert_eq!(extract_negated_atoms(&p("!p & !p")), vec!["p".to_string()]);
    }

    #[test]
    fn replace_negated_atom_examples() {
        let f = p("!ip & rp");
        assert_eq!(replace_negated_atom(&f, "ip", "nip"), p("nip & rp"));
        let g = p("q & rp");
        assert_eq!(replace_negated_atom(&g, "ip", "nip"), g);
        assert_eq!(replace_negated_atom(&p("!p | !p"), "p", "np"), p("np | np"));
    }

    #[test]
    fn coalition_agents_examples() {
        let phi2 = p("<<rover,mechanic>> F ((oc & rm) & <<rover>> F ((pl | pr) & F (oc & rm)))");
        assert_eq!(coalition_agents(&phi2), vec!["mechanic".to_string(), "rover".to_string()]);
        assert!(coalition_agents(&p("q")).is_empty());
        assert_eq!(
            coalition_agents(&p("<<a>> X p & [[b]] G q")),
            vec!["a".to_string(), "b".to_string()]
        );
    }

    #[test]
    fn subformulas_order_matches_tree_example() {
        // phi_v from the <<G1>>X[[G2]]pUr & (<<G3>>Xp | [[G4]]qRp) pattern:
        // post-order extraction yields the inner [[G2]] node first.
        let f = p("<<g1>> X [[g2]] p U r & (<<g3>> X p | [[g4]] q R p)");
        let tree = subformulas(&f);
        assert_eq!(tree.nodes.len(), 4);
        assert_eq!(
            tree.nodes[0].formula,
            Formula::strategic_dual(["g2"], Formula::atom("p").until(Formula::atom("r")))
        );
        assert_eq!(
            tree.nodes[1].formula,
            Formula::strategic(["g1"], Formula::atom("atom_1").next())
        );
        assert_eq!(
            tree.nodes[2].formula,
            Formula::strategic(["g3"], Formula::atom("p").next())
        );
        assert_eq!(
            tree.nodes[3].formula,
            Formula::strategic_dual(["g4"], Formula::atom("q").release(Formula::atom("p")))
        );
        assert_eq!(
            tree.residue,
            Formula::atom("atom_2").and(Formula::atom("atom_3").or(Formula::atom("atom_4")))
        );
        assert_eq!(tree.reconstruct(), f);
    }

    #[test]
    fn subformulas_phi2_two_nodes() {
        let phi2 = p("<<rover,mechanic>> F ((oc & rm) & <<rover>> F ((pl | pr) & F (oc & rm)))");
        let tree = subformulas(&phi2);
        assert_eq!(tree.nodes.len(), 2);
        assert_eq!(
            tree.nodes[0].formula,
            p("<<rover>> F ((pl | pr) & F (oc & rm))")
        );
        assert_eq!(
            tree.nodes[1].formula,
            Formula::strategic(
                ["rover", "mechanic"],
                Formula::atom("oc")
                    .and(Formula::atom("rm"))
                    .and(Formula::atom("atom_1"))
                    .finally()
            )
        );
        assert_eq!(tree.residue, Formula::atom("atom_2"));
    }

    #[test]
    fn subformulas_of_plain_atom_is_empty() {
        let tree = subformulas(&p("q"));
        assert!(tree.nodes.is_empty());
        assert_eq!(tree.residue, Formula::atom("q"));
    }

    #[test]
    fn subformulas_dedupes_equal_nodes() {
        let f = p("<<a>> X p | <<a>> X p");
        let tree = subformulas(&f);
        assert_eq!(tree.nodes.len(), 1);
        assert_eq!(tree.residue, Formula::atom("atom_1").or(Formula::atom("atom_1")));
    }

    #[test]
    fn update_formula_examples() {
        let f = p("<<g>> X <<g>> p U q");
        let target = p("<<g>> p U q");
        let updated = update_formula(&f, &target, &Formula::atom("atom_1"));
        assert_eq!(updated, Formula::strategic(["g"], Formula::atom("atom_1").next()));

        let unchanged = update_formula(&p("p & q"), &target, &Formula::atom("atom_1"));
        assert_eq!(unchanged, p("p & q"));

        let whole = update_formula(&target, &target, &Formula::atom("atom_1"));
        assert_eq!(whole, Formula::atom("atom_1"));
    }

    #[test]
    fn atl_to_ctl_examples() {
        let f = Formula::strategic(
            ["rover", "mechanic"],
            Formula::atom("rp")
                .and(Formula::atom("nip"))
                .and(Formula::atom("natom_1"))
                .finally(),
        );
        let a = atl_to_ctl(&f, CtlVariant::Universal);
        assert_eq!(a.to_string(), "A F (rp & nip & natom_1)");
        let g = Formula::strategic(
            ["rover", "mechanic"],
            Formula::atom("rp")
                .and(Formula::atom("nip"))
                .and(Formula::atom("patom_1"))
                .finally(),
        );
        let e = atl_to_ctl(&g, CtlVariant::Existential);
        assert_eq!(e.to_string(), "E F (rp & nip & patom_1)");
        assert_eq!(atl_to_ctl(&p("q"), CtlVariant::Universal), p("q"));
    }

    #[test]
    fn atl_to_ctl_leaves_no_strategic_operators() {
        let f = p("<<a>> X ([[b]] p U q & <<c>> F r)");
        assert!(atl_to_ctl(&f, CtlVariant::Universal).is_strategic_free());
        assert!(atl_to_ctl(&f, CtlVariant::Existential).is_strategic_free());
    }
}

