//! Body-word grammar.
//!
//! A body word is either a plain vocabulary symbol (`send`) or a nested
//! expression over agent symbols, as used for proxy chains
//! (`P2(P1(S))∧(P3)`). A word may carry an actor qualifier (`B:send`),
//! which names the agent that would perform the behaviour.
//!
//! ```text
//! word   := [symbol ':'] conj
//! conj   := term (('∧' | '&') term)*
//! term   := '(' conj ')' | symbol ['(' conj (',' conj)* ')']
//! ```
//!
//! Canonical form has no whitespace, writes `∧` for conjunction and wraps
//! every conjunct after the first in parentheses.

use std::fmt;

use thiserror::Error;

const AND: char = '∧';

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed body word at offset {offset}: {reason}")]
pub struct ExprError {
    pub offset: usize,
    pub reason: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Sym(String),
    Apply { head: String, args: Vec<Expr> },
    /// Always holds at least two terms, none of which is itself an `And`.
    And(Vec<Expr>),
}

impl Expr {
    pub fn sym(s: impl Into<String>) -> Self {
        Expr::Sym(s.into())
    }

    pub fn apply(head: impl Into<String>, arg: Expr) -> Self {
        Expr::Apply {
            head: head.into(),
            args: vec![arg],
        }
    }

    /// Conjunction; flattens nested conjunctions and collapses singletons.
    pub fn and(terms: impl IntoIterator<Item = Expr>) -> Self {
        let mut flat = Vec::new();
        for t in terms {
            match t {
                Expr::And(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            Expr::And(flat)
        }
    }

    /// Number of symbol occurrences.
    pub fn size(&self) -> usize {
        match self {
            Expr::Sym(_) => 1,
            Expr::Apply { args, .. } => 1 + args.iter().map(Expr::size).sum::<usize>(),
            Expr::And(terms) => terms.iter().map(Expr::size).sum(),
        }
    }

    /// Terms this expression is declared to depend on: the arguments of an
    /// application, and every conjunct after the first.
    pub fn dependencies(&self) -> Vec<&Expr> {
        match self {
            Expr::Sym(_) => Vec::new(),
            Expr::Apply { args, .. } => args.iter().collect(),
            Expr::And(terms) => {
                let mut deps = terms[0].dependencies();
                deps.extend(terms[1..].iter());
                deps
            }
        }
    }

    /// Every symbol, in left-to-right order.
    pub fn symbols(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Sym(s) => out.push(s),
            Expr::Apply { head, args } => {
                out.push(head);
                for a in args {
                    a.collect_symbols(out);
                }
            }
            Expr::And(terms) => {
                for t in terms {
                    t.collect_symbols(out);
                }
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Sym(s) => f.write_str(s),
            Expr::Apply { head, args } => {
                write!(f, "{head}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Expr::And(terms) => {
                write!(f, "{}", terms[0])?;
                for t in &terms[1..] {
                    write!(f, "{AND}({t})")?;
                }
                Ok(())
            }
        }
    }
}

/// A parsed body word.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    pub actor: Option<String>,
    pub expr: Expr,
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(actor) = &self.actor {
            write!(f, "{actor}:")?;
        }
        write!(f, "{}", self.expr)
    }
}

/// Maximum nesting depth accepted by the parser.
pub const MAX_DEPTH: usize = 512;

pub fn parse_word(input: &str) -> Result<Word, ExprError> {
    let mut p = Parser {
        src: input,
        pos: 0,
        depth: 0,
    };
    p.skip_ws();
    let mut actor = None;
    // An actor qualifier is a bare symbol followed by ':'.
    let save = p.pos;
    if let Some(sym) = p.symbol() {
        p.skip_ws();
        if p.eat(':') {
            actor = Some(sym);
        } else {
            p.pos = save;
        }
    }
    let expr = p.conj()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(Word { actor, expr })
}

pub fn parse_expr(input: &str) -> Result<Expr, ExprError> {
    let w = parse_word(input)?;
    match w.actor {
        Some(_) => Err(ExprError {
            offset: 0,
            reason: "actor qualifier not allowed here",
        }),
        None => Ok(w.expr),
    }
}

/// Canonical spelling of a body word.
pub fn canonicalize(input: &str) -> Result<String, ExprError> {
    parse_word(input).map(|w| w.to_string())
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    depth: usize,
}

fn is_symbol_char(c: char) -> bool {
    !(c.is_whitespace() || matches!(c, '(' | ')' | ',' | ':' | '&' | AND))
}

impl Parser<'_> {
    fn err(&self, reason: &'static str) -> ExprError {
        ExprError {
            offset: self.pos,
            reason,
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn symbol(&mut self) -> Option<String> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if !is_symbol_char(c) {
                break;
            }
            self.pos += c.len_utf8();
        }
        (self.pos > start).then(|| self.src[start..self.pos].to_string())
    }

    fn conj(&mut self) -> Result<Expr, ExprError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.err("nesting too deep"));
        }
        let mut terms = vec![self.term()?];
        loop {
            self.skip_ws();
            if self.eat(AND) || self.eat('&') {
                terms.push(self.term()?);
            } else {
                break;
            }
        }
        self.depth -= 1;
        Ok(Expr::and(terms))
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        self.skip_ws();
        if self.eat('(') {
            let inner = self.conj()?;
            self.skip_ws();
            if !self.eat(')') {
                return Err(self.err("expected ')'"));
            }
            return Ok(inner);
        }
        let head = self.symbol().ok_or_else(|| self.err("expected symbol"))?;
        self.skip_ws();
        if !self.eat('(') {
            return Ok(Expr::Sym(head));
        }
        let mut args = vec![self.conj()?];
        loop {
            self.skip_ws();
            if self.eat(',') {
                args.push(self.conj()?);
            } else if self.eat(')') {
                break;
            } else {
                return Err(self.err("expected ',' or ')'"));
            }
        }
        Ok(Expr::Apply { head, args })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_word() {
        let w = parse_word("send").unwrap();
        assert_eq!(w.actor, None);
        assert_eq!(w.expr, Expr::sym("send"));
        assert_eq!(w.expr.size(), 1);
    }

    #[test]
    fn actor_qualifier() {
        let w = parse_word("B : send").unwrap();
        assert_eq!(w.actor.as_deref(), Some("B"));
        assert_eq!(w.to_string(), "B:send");
    }

    #[test]
    fn nested_chain_body() {
        let e = parse_expr("S(P1(P2(P3)))").unwrap();
        assert_eq!(e.size(), 4);
        assert_eq!(e.to_string(), "S(P1(P2(P3)))");
        let deps: Vec<String> = e.dependencies().iter().map(|d| d.to_string()).collect();
        assert_eq!(deps, ["P1(P2(P3))"]);
    }

    #[test]
    fn conjunction_canonical_form() {
        assert_eq!(canonicalize("P1(S) & P2(P3)").unwrap(), "P1(S)∧(P2(P3))");
        assert_eq!(canonicalize("P1(S) ∧ (P2(P3))").unwrap(), "P1(S)∧(P2(P3))");
        let e = parse_expr("P1(S)∧(P2(P3))").unwrap();
        assert_eq!(e.size(), 4);
        let deps: Vec<String> = e.dependencies().iter().map(|d| d.to_string()).collect();
        assert_eq!(deps, ["S", "P2(P3)"]);
    }

    #[test]
    fn nested_conjunctions_flatten() {
        assert_eq!(canonicalize("(a&b)&(c)").unwrap(), "a∧(b)∧(c)");
        assert_eq!(canonicalize("((x))").unwrap(), "x");
    }

    #[test]
    fn tensor_arguments() {
        let e = parse_expr("deal(A1,A2,A3)").unwrap();
        assert_eq!(e.size(), 4);
        assert_eq!(e.symbols(), ["deal", "A1", "A2", "A3"]);
    }

    #[test]
    fn malformed_inputs() {
        for bad in ["", "(", "a(", "a(b", "a)", "a,b", ":x", "a:b:c", "a(b,)", "&a"] {
            assert!(parse_word(bad).is_err(), "{bad:?} should not parse");
        }
    }

    #[test]
    fn deep_nesting_is_rejected_not_overflowed() {
        let deep = "(".repeat(10_000) + "x" + &")".repeat(10_000);
        assert!(parse_word(&deep).is_err());
    }
}
