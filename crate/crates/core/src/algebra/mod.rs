//! Exact sparse multivariate polynomials and rational functions over Q.

mod eval;
mod gcd;
mod monomial;
mod poly;
mod rational;
mod render;
mod vars;

use thiserror::Error;

pub use eval::{from_f64, to_f64, CompiledPoly, CompiledRf};
pub use gcd::{content_in, gcd, squarefree_part};
pub use monomial::Monomial;
pub use poly::{pow_rat, rat, Polynomial};
pub use rational::RationalFunction;
pub use render::{poly_to_string, rational_to_string, rf_to_string};
pub use vars::{Role, Var, VarTable};

pub use num_rational::BigRational;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("denominator vanishes identically after substitution")]
    ZeroDenominatorAfterSubstitution,
    #[error("variable `{0}` has no value")]
    UnboundVariable(String),
}

/// Parses a plain rational literal such as `3`, `-2/5` or `0.125`.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest.trim_start()),
        None => (false, s),
    };
    let value = if let Some((n, d)) = body.split_once('/') {
        let n: num_bigint::BigInt = n.trim().parse().ok()?;
        let d: num_bigint::BigInt = d.trim().parse().ok()?;
        if num_traits::Zero::is_zero(&d) {
            return None;
        }
        BigRational::new(n, d)
    } else if let Some((i, f)) = body.split_once('.') {
        if i.is_empty() && f.is_empty() {
            return None;
        }
        if !i.chars().chain(f.chars()).all(|c| c.is_ascii_digit()) {
            return None;
        }
        let digits: num_bigint::BigInt = format!("{i}{f}").parse().ok()?;
        let scale = num_traits::pow(num_bigint::BigInt::from(10), f.len());
        BigRational::new(digits, scale)
    } else {
        if body.is_empty() || !body.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        BigRational::from_integer(body.parse().ok()?)
    };
    Some(if neg { -value } else { value })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_literals() {
        assert_eq!(parse_rational("3"), Some(rat(3)));
        assert_eq!(parse_rational("-2/4"), Some(BigRational::new((-1).into(), 2.into())));
        assert_eq!(parse_rational("0.125"), Some(BigRational::new(1.into(), 8.into())));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
    }
}
