//! System-definition DSL.
//!
//! ```text
//! system mm {
//!   states x1 = 1 x2 = 1;
//!   d x1 = -x1/(x1 + 2);
//!   d x2 = x1/(x1 + 2);
//!   output y = x2;
//! }
//! ```
//!
//! `d x1 = ...` may also be written `dx1 = ...`. Expressions use `+ - * / ^`
//! (non-negative integer powers), parentheses, decimal or integer literals and
//! declared names. `#` starts a line comment.

mod lexer;
mod system;

use std::collections::BTreeMap;

use num_rational::BigRational;
use thiserror::Error;

use crate::algebra::{parse_rational, Polynomial, RationalFunction, Role, Var, VarTable};

use lexer::{tokenize, Pos, Tok};
pub use system::{RationalSystem, SystemKind};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: found {found}, expected {expected}")]
    Syntax {
        line: usize,
        col: usize,
        found: String,
        expected: String,
    },
    #[error("undefined symbol `{name}` at {line}:{col}")]
    UndefinedSymbol { name: String, line: usize, col: usize },
    #[error("`{name}` defined twice (second definition at {line}:{col})")]
    Duplicate { name: String, line: usize, col: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("denominator of `{0}` vanishes at the initial state")]
    DenominatorZeroAtX0(String),
    #[error("division by zero at {line}:{col}")]
    DivisionByZero { line: usize, col: usize },
}

impl ParseError {
    fn syntax(pos: Pos, found: &Tok, expected: &str) -> Self {
        ParseError::Syntax {
            line: pos.line,
            col: pos.col,
            found: found.describe(),
            expected: expected.to_string(),
        }
    }
}

#[derive(Clone, Debug)]
enum Expr {
    Num(BigRational),
    Name(String, Pos),
    Neg(Box<Expr>),
    Bin(char, Box<Expr>, Box<Expr>, Pos),
    Pow(Box<Expr>, u32),
}

enum Decl {
    Params(Vec<(String, Option<BigRational>, Pos)>),
    States(Vec<(String, BigRational, Pos)>),
    Deriv(String, Pos, Expr),
    Output(String, Pos, Expr),
    Assume(Expr),
}

const KEYWORDS: [&str; 6] = ["system", "params", "states", "output", "assume", "d"];

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn next(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect_sym(&mut self, c: char) -> Result<Pos, ParseError> {
        let (t, p) = self.next();
        if t == Tok::Sym(c) {
            Ok(p)
        } else {
            Err(ParseError::syntax(p, &t, &format!("`{c}`")))
        }
    }

    fn expect_ident(&mut self) -> Result<(String, Pos), ParseError> {
        match self.next() {
            (Tok::Ident(s), p) if !KEYWORDS.contains(&s.as_str()) => Ok((s, p)),
            (t, p) => Err(ParseError::syntax(p, &t, "an identifier")),
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        match self.next() {
            (Tok::Ident(s), _) if s == kw => Ok(()),
            (t, p) => Err(ParseError::syntax(p, &t, &format!("`{kw}`"))),
        }
    }

    fn rational_literal(&mut self) -> Result<BigRational, ParseError> {
        let neg = if self.peek() == &Tok::Sym('-') {
            self.next();
            true
        } else {
            false
        };
        let (t, p) = self.next();
        let Tok::Number(n) = &t else {
            return Err(ParseError::syntax(p, &t, "a rational number"));
        };
        let mut value = parse_rational(n).ok_or_else(|| ParseError::syntax(p, &t, "a rational number"))?;
        if self.peek() == &Tok::Sym('/') {
            self.next();
            let (t, p) = self.next();
            let den = match &t {
                Tok::Number(d) => parse_rational(d),
                _ => None,
            }
            .ok_or_else(|| ParseError::syntax(p, &t, "a denominator"))?;
            if num_traits::Zero::is_zero(&den) {
                return Err(ParseError::DivisionByZero {
                    line: p.line,
                    col: p.col,
                });
            }
            value /= den;
        }
        Ok(if neg { -value } else { value })
    }

    fn system(&mut self) -> Result<(String, Vec<Decl>), ParseError> {
        self.expect_keyword("system")?;
        let (name, _) = self.expect_ident()?;
        self.expect_sym('{')?;
        let mut decls = Vec::new();
        while self.peek() != &Tok::Sym('}') {
            decls.push(self.decl()?);
        }
        self.expect_sym('}')?;
        match self.next() {
            (Tok::Eof, _) => Ok((name, decls)),
            (t, p) => Err(ParseError::syntax(p, &t, "end of input")),
        }
    }

    fn decl(&mut self) -> Result<Decl, ParseError> {
        let (t, p) = self.next();
        let Tok::Ident(word) = &t else {
            return Err(ParseError::syntax(p, &t, "a declaration"));
        };
        let decl = match word.as_str() {
            "params" => {
                let mut items = Vec::new();
                while matches!(self.peek(), Tok::Ident(_)) {
                    let (name, pos) = self.expect_ident()?;
                    let value = if self.peek() == &Tok::Sym('=') {
                        self.next();
                        Some(self.rational_literal()?)
                    } else {
                        None
                    };
                    items.push((name, value, pos));
                }
                if items.is_empty() {
                    let (t, p) = self.next();
                    return Err(ParseError::syntax(p, &t, "a parameter name"));
                }
                Decl::Params(items)
            }
            "states" => {
                let mut items = Vec::new();
                while matches!(self.peek(), Tok::Ident(_)) {
                    let (name, pos) = self.expect_ident()?;
                    self.expect_sym('=')?;
                    items.push((name, self.rational_literal()?, pos));
                }
                if items.is_empty() {
                    let (t, p) = self.next();
                    return Err(ParseError::syntax(p, &t, "a state name"));
                }
                Decl::States(items)
            }
            "output" => {
                let (name, pos) = self.expect_ident()?;
                self.expect_sym('=')?;
                Decl::Output(name, pos, self.expr()?)
            }
            "assume" => {
                let e = self.expr()?;
                match self.next() {
                    (Tok::NotEq, _) => {}
                    (t, p) => return Err(ParseError::syntax(p, &t, "`!=`")),
                }
                match self.next() {
                    (Tok::Number(n), _) if parse_rational(&n).is_some_and(|q| num_traits::Zero::is_zero(&q)) => {}
                    (t, p) => return Err(ParseError::syntax(p, &t, "`0`")),
                }
                Decl::Assume(e)
            }
            "d" => {
                let (name, pos) = self.expect_ident()?;
                self.expect_sym('=')?;
                Decl::Deriv(name, pos, self.expr()?)
            }
            w if w.len() > 1 && w.starts_with('d') && self.peek() == &Tok::Sym('=') => {
                let name = w[1..].to_string();
                self.next();
                Decl::Deriv(
                    name,
                    Pos {
                        line: p.line,
                        col: p.col + 1,
                    },
                    self.expr()?,
                )
            }
            _ => return Err(ParseError::syntax(p, &t, "a declaration")),
        };
        self.expect_sym(';')?;
        Ok(decl)
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Sym(c @ ('+' | '-')) => *c,
                _ => return Ok(lhs),
            };
            let (_, p) = self.next();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs), p);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Sym(c @ ('*' | '/')) => *c,
                _ => return Ok(lhs),
            };
            let (_, p) = self.next();
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs), p);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Tok::Sym('-') => {
                self.next();
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Tok::Sym('+') => {
                self.next();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.peek() != &Tok::Sym('^') {
            return Ok(base);
        }
        self.next();
        let parens = self.peek() == &Tok::Sym('(');
        if parens {
            self.next();
        }
        let (t, p) = self.next();
        let exp = match &t {
            Tok::Number(n) if n.chars().all(|c| c.is_ascii_digit()) => n.parse::<u32>().ok(),
            _ => None,
        }
        .ok_or_else(|| ParseError::syntax(p, &t, "a non-negative integer exponent"))?;
        if parens {
            self.expect_sym(')')?;
        }
        Ok(Expr::Pow(Box::new(base), exp))
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let (t, p) = self.next();
        match t {
            Tok::Number(n) => parse_rational(&n)
                .map(Expr::Num)
                .ok_or_else(|| ParseError::syntax(p, &Tok::Number(n.clone()), "a number")),
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => Ok(Expr::Name(s, p)),
            Tok::Sym('(') => {
                let e = self.expr()?;
                self.expect_sym(')')?;
                Ok(e)
            }
            t => Err(ParseError::syntax(p, &t, "an expression")),
        }
    }
}

fn lower(e: &Expr, vars: &VarTable) -> Result<RationalFunction, ParseError> {
    Ok(match e {
        Expr::Num(q) => RationalFunction::constant(q.clone()),
        Expr::Name(n, p) => match vars.lookup(n) {
            Some(v) => RationalFunction::var(v),
            None => {
                return Err(ParseError::UndefinedSymbol {
                    name: n.clone(),
                    line: p.line,
                    col: p.col,
                })
            }
        },
        Expr::Neg(a) => -&lower(a, vars)?,
        Expr::Pow(a, k) => lower(a, vars)?.pow(*k),
        Expr::Bin(op, a, b, p) => {
            let (a, b) = (lower(a, vars)?, lower(b, vars)?);
            match op {
                '+' => a.add(&b),
                '-' => a.sub(&b),
                '*' => a.mul(&b),
                _ => a.div(&b).map_err(|_| ParseError::DivisionByZero {
                    line: p.line,
                    col: p.col,
                })?,
            }
        }
    })
}

/// Parses DSL source into a fully resolved system.
pub fn parse(text: &str) -> Result<RationalSystem, ParseError> {
    let mut parser = Parser {
        toks: tokenize(text)?,
        at: 0,
    };
    let (name, decls) = parser.system()?;

    let mut vars = VarTable::new();
    let mut states = Vec::new();
    let mut x0 = Vec::new();
    let mut params = Vec::new();
    let duplicate = |name: &str, pos: Pos| ParseError::Duplicate {
        name: name.to_string(),
        line: pos.line,
        col: pos.col,
    };
    // States are numbered before parameters so that state variables rank
    // highest in the monomial orders.
    for d in &decls {
        if let Decl::States(items) = d {
            for (n, v, p) in items {
                let var = vars.push(n, Role::State).ok_or_else(|| duplicate(n, *p))?;
                states.push(var);
                x0.push(v.clone());
            }
        }
    }
    for d in &decls {
        if let Decl::Params(items) = d {
            for (n, v, p) in items {
                let var = vars.push(n, Role::Parameter).ok_or_else(|| duplicate(n, *p))?;
                params.push((var, v.clone()));
            }
        }
    }
    if states.is_empty() {
        return Err(ParseError::DimensionMismatch("no states declared".into()));
    }

    let mut f: BTreeMap<Var, RationalFunction> = BTreeMap::new();
    let mut outputs: Vec<(String, RationalFunction)> = Vec::new();
    let mut assumptions = Vec::new();
    for d in &decls {
        match d {
            Decl::Deriv(n, p, e) => {
                let v = match vars.lookup(n) {
                    Some(v) if vars.role(v) == Role::State => v,
                    _ => {
                        return Err(ParseError::UndefinedSymbol {
                            name: n.clone(),
                            line: p.line,
                            col: p.col,
                        })
                    }
                };
                if f.insert(v, lower(e, &vars)?).is_some() {
                    return Err(duplicate(&format!("d{n}"), *p));
                }
            }
            Decl::Output(n, p, e) => {
                if vars.lookup(n).is_some() || outputs.iter().any(|(o, _)| o == n) {
                    return Err(duplicate(n, *p));
                }
                outputs.push((n.clone(), lower(e, &vars)?));
            }
            Decl::Assume(e) => {
                let r = lower(e, &vars)?;
                if r.is_zero() {
                    return Err(ParseError::DimensionMismatch("assumption is identically zero".into()));
                }
                let (num, _) = r.into_parts();
                assumptions.push(num.primitive());
            }
            Decl::States(_) | Decl::Params(_) => {}
        }
    }
    let mut dynamics = Vec::with_capacity(states.len());
    for &s in &states {
        match f.remove(&s) {
            Some(r) => dynamics.push(r),
            None => {
                return Err(ParseError::DimensionMismatch(format!(
                    "state `{}` has no equation",
                    vars.name(s)
                )))
            }
        }
    }
    if outputs.is_empty() {
        return Err(ParseError::DimensionMismatch("no output declared".into()));
    }

    let mut sys = RationalSystem {
        name,
        vars,
        states,
        params,
        f: dynamics,
        outputs,
        x0,
        kind: SystemKind::Polynomial,
        assumptions,
    };
    sys.kind = sys.infer_kind();
    if let Some(label) = sys.denominator_zero_at_x0() {
        return Err(ParseError::DenominatorZeroAtX0(label));
    }
    Ok(sys)
}

/// Inverse of [`parse`] up to normalization.
pub fn render(sys: &RationalSystem) -> String {
    sys.render()
}

/// Parses one expression against an existing variable table.
pub fn parse_expr(text: &str, vars: &VarTable) -> Result<RationalFunction, ParseError> {
    let mut parser = Parser {
        toks: tokenize(text)?,
        at: 0,
    };
    let e = parser.expr()?;
    match parser.next() {
        (Tok::Eof, _) => lower(&e, vars),
        (t, p) => Err(ParseError::syntax(p, &t, "end of expression")),
    }
}

/// Parses a polynomial expression; fails if the result has a non-constant denominator.
pub fn parse_poly(text: &str, vars: &VarTable) -> Result<Polynomial, ParseError> {
    let r = parse_expr(text, vars)?;
    if !r.den().is_constant() {
        return Err(ParseError::DimensionMismatch(format!("`{text}` is not a polynomial")));
    }
    let c = r.den().constant_value().expect("constant");
    let (num, _) = r.into_parts();
    Ok(num.scale(&num_traits::Inv::inv(c)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rf_to_string;

    const MM: &str = "
        # Michaelis-Menten with a = b = c = e = 1, d = 2
        system mm {
          states x1 = 1 x2 = 1;
          d x1 = -x1 + (x1 + x1^2)/(x1 + 2);
          d x2 = x1/(x1 + 2);
          output y = x2;
        }";

    #[test]
    fn michaelis_menten() {
        let sys = parse(MM).unwrap();
        assert_eq!(sys.n(), 2);
        assert_eq!(sys.kind, SystemKind::Rational);
        assert_eq!(rf_to_string(&sys.f[0], &sys.vars), "-x1/(x1 + 2)");
        assert_eq!(rf_to_string(&sys.f[1], &sys.vars), "x1/(x1 + 2)");
        assert_eq!(sys.x0, vec![crate::algebra::rat(1), crate::algebra::rat(1)]);
    }

    #[test]
    fn compact_derivative_form() {
        let sys = parse("system s { states x1 = 0; dx1 = 0; output y = x1; }").unwrap();
        assert_eq!(sys.n(), 1);
        assert_eq!(sys.kind, SystemKind::Polynomial);
    }

    #[test]
    fn assumptions_are_kept() {
        let sys = parse(
            "system p { params a11 a12 a22; states x1 = 1 x2 = 1/2;
               d x1 = -a11*x1^3 + a12*x2; d x2 = -a22*x2; output y = x1;
               assume a12 != 0; }",
        )
        .unwrap();
        assert_eq!(sys.kind, SystemKind::Polynomial);
        assert_eq!(sys.assumptions.len(), 1);
        assert_eq!(sys.assumptions[0], Polynomial::var(sys.vars.lookup("a12").unwrap()));
    }

    #[test]
    fn error_kinds() {
        assert!(matches!(parse(""), Err(ParseError::Syntax { line: 1, col: 1, .. })));
        assert!(matches!(
            parse("system s { states x = 1; d x = z; output y = x; }"),
            Err(ParseError::UndefinedSymbol { .. })
        ));
        assert!(matches!(
            parse("system s { states x = 1 w = 2; d x = 1; output y = x; }"),
            Err(ParseError::DimensionMismatch(_))
        ));
        assert!(matches!(
            parse("system s { states x = 1; d x = 1/(x - 1); output y = x; }"),
            Err(ParseError::DenominatorZeroAtX0(_))
        ));
        assert!(matches!(
            parse("system s { states x = 1; d x = 1/(x - x); output y = x; }"),
            Err(ParseError::DivisionByZero { .. })
        ));
        assert!(matches!(
            parse("system s { states x = 1; d x = x^-1; output y = x; }"),
            Err(ParseError::Syntax { .. })
        ));
    }

    #[test]
    fn bound_parameters_checked_at_x0() {
        let r = parse("system s { params a = 1; states x = 1; d x = 1/(x - a); output y = x; }");
        assert!(matches!(r, Err(ParseError::DenominatorZeroAtX0(_))));
        let r = parse("system s { params a; states x = 1; d x = 1/(x - a); output y = x; }");
        assert!(r.is_ok());
    }

    #[test]
    fn render_round_trip() {
        let sys = parse(MM).unwrap();
        let again = parse(&render(&sys)).unwrap();
        assert_eq!(sys, again);
    }
}
