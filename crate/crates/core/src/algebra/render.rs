//! Stable plain-text rendering.
//!
//! Terms are listed in descending grevlex order, products use `*`, powers `^`,
//! and rational coefficients print as `p/q` in front of the monomial. The
//! output parses back through the system DSL expression grammar.

use std::fmt::Write;

use num_rational::BigRational;
use num_traits::{One, Signed};

use super::monomial::Monomial;
use super::poly::Polynomial;
use super::rational::RationalFunction;
use super::vars::VarTable;

pub fn rational_to_string(c: &BigRational) -> String {
    if c.denom().is_one() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

fn monomial_to_string(m: &Monomial, vars: &VarTable) -> String {
    let parts: Vec<String> = m
        .pairs()
        .map(|(v, e)| {
            if e == 1 {
                vars.name(v).to_string()
            } else {
                format!("{}^{}", vars.name(v), e)
            }
        })
        .collect();
    parts.join("*")
}

/// Renders one term without its sign.
fn term_abs(m: &Monomial, c: &BigRational, vars: &VarTable) -> String {
    let a = c.abs();
    if m.is_one() {
        return rational_to_string(&a);
    }
    let mono = monomial_to_string(m, vars);
    if a.is_one() {
        mono
    } else {
        format!("{}*{}", rational_to_string(&a), mono)
    }
}

pub fn poly_to_string(p: &Polynomial, vars: &VarTable) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, (m, c)) in p.terms_grevlex().into_iter().enumerate() {
        let neg = c.is_negative();
        if i == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let _ = write!(out, "{}", term_abs(m, c, vars));
    }
    out
}

/// A denominator can go bare after `/` only if it is a single factor.
fn bare_factor(p: &Polynomial) -> bool {
    match p.terms().next() {
        Some((m, c)) if p.len() == 1 => {
            (m.is_one() && c.is_positive() && c.denom().is_one()) || (c.is_one() && m.pairs().count() == 1)
        }
        _ => false,
    }
}

pub fn rf_to_string(r: &RationalFunction, vars: &VarTable) -> String {
    let num = poly_to_string(r.num(), vars);
    if r.den().is_one() {
        return num;
    }
    let num = if r.num().len() > 1 { format!("({num})") } else { num };
    let den = poly_to_string(r.den(), vars);
    if bare_factor(r.den()) {
        format!("{num}/{den}")
    } else {
        format!("{num}/({den})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::poly::rat;
    use crate::algebra::vars::{Role, Var};

    fn table() -> VarTable {
        let mut t = VarTable::new();
        t.push("x1", Role::State);
        t.push("x2", Role::State);
        t.push("a", Role::Parameter);
        t
    }

    #[test]
    fn renders_in_grevlex_order() {
        let t = table();
        let x1 = Polynomial::var(Var(0));
        let x2 = Polynomial::var(Var(1));
        let p = &(&x2 - &x1.pow(3).scale(&rat(3))) + &Polynomial::constant(BigRational::new(1.into(), 2.into()));
        assert_eq!(poly_to_string(&p, &t), "-3*x1^3 + x2 + 1/2");
        assert_eq!(poly_to_string(&Polynomial::zero(), &t), "0");
    }

    #[test]
    fn renders_quotients() {
        let t = table();
        let x1 = RationalFunction::var(Var(0));
        let r = x1.div(&x1.add(&RationalFunction::int(2))).unwrap();
        assert_eq!(rf_to_string(&r, &t), "x1/(x1 + 2)");
        let r = RationalFunction::int(1).div(&RationalFunction::var(Var(2))).unwrap();
        assert_eq!(rf_to_string(&r, &t), "1/a");
        let r = x1.div(&RationalFunction::var(Var(1)).scale(&rat(2))).unwrap();
        assert_eq!(rf_to_string(&r, &t), "1/2*x1/x2");
    }
}
