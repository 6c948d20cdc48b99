use std::collections::{BTreeMap, BTreeSet};
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::monomial::Monomial;
use super::vars::Var;

/// Sparse multivariate polynomial over the rationals.
///
/// Terms are keyed by [`Monomial`] in lexicographic order, so the last entry is
/// the lex-leading term. Zero coefficients are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, BigRational>,
}

pub fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        let mut p = Self::zero();
        if !c.is_zero() {
            p.terms.insert(Monomial::one(), c);
        }
        p
    }

    pub fn int(n: i64) -> Self {
        Self::constant(rat(n))
    }

    pub fn var(v: Var) -> Self {
        Self::term(BigRational::one(), Monomial::var(v, 1))
    }

    pub fn term(c: BigRational, m: Monomial) -> Self {
        let mut p = Self::zero();
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, BigRational)>) -> Self {
        let mut p = Self::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.constant_value().is_some_and(|c| c.is_one())
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(Monomial::is_one)
    }

    /// The value of a constant polynomial (zero included).
    pub fn constant_value(&self) -> Option<BigRational> {
        if self.is_constant() {
            Some(self.constant_term())
        } else {
            None
        }
    }

    pub fn constant_term(&self) -> BigRational {
        self.terms
            .get(&Monomial::one())
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> BigRational {
        self.terms.get(m).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Lex-leading term.
    pub fn leading(&self) -> Option<(&Monomial, &BigRational)> {
        self.terms.iter().next_back()
    }

    /// Leading term under graded reverse lexicographic order.
    pub fn leading_grevlex(&self) -> Option<(&Monomial, &BigRational)> {
        self.terms.iter().max_by(|a, b| a.0.grevlex_cmp(b.0))
    }

    /// Terms sorted by descending graded reverse lexicographic order.
    pub fn terms_grevlex(&self) -> Vec<(&Monomial, &BigRational)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_by(|a, b| b.0.grevlex_cmp(a.0));
        v
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.terms.keys().flat_map(|m| m.vars()).collect()
    }

    pub fn contains_var(&self, v: Var) -> bool {
        self.terms.keys().any(|m| m.degree_in(v) > 0)
    }

    pub fn degree_in(&self, v: Var) -> u32 {
        self.terms.keys().map(|m| m.degree_in(v)).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn scale(&self, c: &BigRational) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero();
        }
        Polynomial {
            terms: self.terms.iter().map(|(m, a)| (m.clone(), a * c)).collect(),
        }
    }

    pub fn mul_monomial(&self, m: &Monomial, c: &BigRational) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero();
        }
        Polynomial {
            terms: self.terms.iter().map(|(k, a)| (k.mul(m), a * c)).collect(),
        }
    }

    pub fn pow(&self, mut k: u32) -> Polynomial {
        let mut base = self.clone();
        let mut acc = Polynomial::one();
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn partial(&self, v: Var) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m, c) in &self.terms {
            let (e, rest) = m.split_var(v);
            if e > 0 {
                let nm = rest.mul(&Monomial::var(v, e - 1));
                out.add_term(nm, c * rat(e as i64));
            }
        }
        out
    }

    /// Coefficients of `self` viewed as a univariate polynomial in `v`,
    /// indexed by degree.
    pub fn coeffs_in(&self, v: Var) -> Vec<Polynomial> {
        let d = self.degree_in(v) as usize;
        let mut out = vec![Polynomial::zero(); if self.is_zero() { 0 } else { d + 1 }];
        for (m, c) in &self.terms {
            let (e, rest) = m.split_var(v);
            out[e as usize].terms.insert(rest, c.clone());
        }
        out
    }

    pub fn from_coeffs_in(v: Var, coeffs: &[Polynomial]) -> Polynomial {
        let mut out = Polynomial::zero();
        for (k, c) in coeffs.iter().enumerate() {
            let vm = Monomial::var(v, k as u32);
            for (m, a) in &c.terms {
                out.terms.insert(m.mul(&vm), a.clone());
            }
        }
        out
    }

    /// Exact quotient `self / divisor`, or `None` if the division leaves a remainder.
    pub fn div_exact(&self, divisor: &Polynomial) -> Option<Polynomial> {
        if divisor.is_zero() {
            return None;
        }
        if let Some(c) = divisor.constant_value() {
            return Some(self.scale(&c.recip()));
        }
        let (lm, lc) = divisor.leading().map(|(m, c)| (m.clone(), c.clone()))?;
        let mut rem = self.clone();
        let mut quot = Polynomial::zero();
        while let Some((m, c)) = rem.leading().map(|(m, c)| (m.clone(), c.clone())) {
            let t = m.div(&lm)?;
            let q = c / &lc;
            for (dm, dc) in &divisor.terms {
                rem.add_term(dm.mul(&t), -(dc * &q));
            }
            quot.add_term(t, q);
        }
        Some(quot)
    }

    /// Evaluates at rational values; unbound variables yield `None`.
    pub fn eval(&self, values: &dyn Fn(Var) -> Option<BigRational>) -> Option<BigRational> {
        let mut acc = BigRational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (v, e) in m.pairs() {
                t *= pow_rat(&values(v)?, e);
            }
            acc += t;
        }
        Some(acc)
    }

    /// Replaces some variables by rational numbers, leaving the others symbolic.
    pub fn eval_partial(&self, values: &BTreeMap<Var, BigRational>) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m, c) in &self.terms {
            let mut coef = c.clone();
            let mut rest = Vec::new();
            for (v, e) in m.pairs() {
                match values.get(&v) {
                    Some(x) => coef *= pow_rat(x, e),
                    None => rest.push((v, e)),
                }
            }
            out.add_term(Monomial::from_pairs(rest), coef);
        }
        out
    }

    /// Renames variables; the map must be injective on the variables present.
    pub fn rename(&self, map: &dyn Fn(Var) -> Var) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m, c) in &self.terms {
            let nm = Monomial::from_pairs(m.pairs().map(|(v, e)| (map(v), e)));
            out.add_term(nm, c.clone());
        }
        out
    }

    /// Rational content: positive `c` such that `self / c` has coprime integer
    /// coefficients.
    pub fn rational_content(&self) -> BigRational {
        let mut num = BigInt::zero();
        let mut den = BigInt::one();
        for c in self.terms.values() {
            num = num.gcd(c.numer());
            den = den.lcm(c.denom());
        }
        if num.is_zero() {
            BigRational::one()
        } else {
            BigRational::new(num, den)
        }
    }

    /// Integer-primitive associate with positive lex-leading coefficient.
    pub fn primitive(&self) -> Polynomial {
        if self.is_zero() {
            return self.clone();
        }
        let mut c = self.rational_content();
        if self.leading().map(|(_, l)| l.is_negative()).unwrap_or(false) {
            c = -c;
        }
        self.scale(&c.recip())
    }

    /// Sum of coefficient bit sizes, used as a cheap size heuristic.
    pub fn coefficient_bits(&self) -> u64 {
        self.terms.values().map(|c| c.numer().bits() + c.denom().bits()).sum()
    }
}

pub fn pow_rat(x: &BigRational, e: u32) -> BigRational {
    num_traits::pow(x.clone(), e as usize)
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let (big, small) = if self.len() >= rhs.len() {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let mut out = big.clone();
        for (m, c) in &small.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        if let Some(c) = self.constant_value() {
            return rhs.scale(&c);
        }
        if let Some(c) = rhs.constant_value() {
            return self.scale(&c);
        }
        let mut out = Polynomial::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $f(self, rhs: Polynomial) -> Polynomial {
                (&self).$f(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Polynomial {
        Polynomial::var(Var(0))
    }
    fn y() -> Polynomial {
        Polynomial::var(Var(1))
    }

    #[test]
    fn ring_basics() {
        let p = &(&x() + &y()) * &(&x() - &y());
        let q = &x().pow(2) - &y().pow(2);
        assert_eq!(p, q);
        assert!((&p - &q).is_zero());
        assert_eq!(p.degree_in(Var(0)), 2);
    }

    #[test]
    fn exact_division() {
        let p = &x().pow(2) - &Polynomial::one();
        let d = &x() - &Polynomial::one();
        assert_eq!(p.div_exact(&d), Some(&x() + &Polynomial::one()));
        assert_eq!(p.div_exact(&y()), None);
        let q = &(&x() + &y()).pow(3) * &y();
        assert_eq!(q.div_exact(&(&x() + &y())), Some(&(&x() + &y()).pow(2) * &y()));
    }

    #[test]
    fn partial_derivative() {
        let p = &x().pow(3).scale(&rat(2)) + &(&x() * &y());
        assert_eq!(p.partial(Var(0)), &x().pow(2).scale(&rat(6)) + &y());
        assert!(Polynomial::int(5).partial(Var(0)).is_zero());
    }

    #[test]
    fn coefficient_view_round_trip() {
        let p = &(&x() + &y()).pow(3) + &Polynomial::int(7);
        let cs = p.coeffs_in(Var(0));
        assert_eq!(cs.len(), 4);
        assert_eq!(Polynomial::from_coeffs_in(Var(0), &cs), p);
    }

    #[test]
    fn primitive_part() {
        let p = &x().scale(&BigRational::new(4.into(), 3.into())) - &Polynomial::constant(rat(2));
        assert_eq!(p.primitive(), &x().scale(&rat(2)) - &Polynomial::int(3));
        assert_eq!((-&p).primitive(), p.primitive());
    }
}
