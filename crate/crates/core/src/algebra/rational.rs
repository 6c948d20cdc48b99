use std::collections::BTreeMap;
use std::ops::Neg;

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::gcd::gcd;
use super::poly::Polynomial;
use super::vars::Var;
use super::AlgebraError;

/// Quotient of two polynomials, kept in lowest terms.
///
/// Every constructor normalizes: `gcd(num, den) = 1` and the grevlex-leading
/// coefficient of `den` is 1. The derived `PartialEq` therefore compares
/// canonical forms; [`RationalFunction::equivalent`] is the cross-multiplication
/// test that does not rely on canonicity.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalFunction {
    num: Polynomial,
    den: Polynomial,
}

impl RationalFunction {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self, AlgebraError> {
        if den.is_zero() {
            return Err(AlgebraError::DivisionByZero);
        }
        Ok(Self::normalized(num, den))
    }

    fn normalized(num: Polynomial, den: Polynomial) -> Self {
        if num.is_zero() {
            return Self::zero();
        }
        let (num, den) = if den.is_constant() {
            (num, den)
        } else {
            let g = gcd(&num, &den);
            if g.is_constant() {
                (num, den)
            } else {
                (
                    num.div_exact(&g).expect("gcd divides numerator"),
                    den.div_exact(&g).expect("gcd divides denominator"),
                )
            }
        };
        let lc = den
            .leading_grevlex()
            .map(|(_, c)| c.clone())
            .expect("nonzero denominator");
        if lc.is_one() {
            Self { num, den }
        } else {
            let inv = lc.recip();
            Self {
                num: num.scale(&inv),
                den: den.scale(&inv),
            }
        }
    }

    pub fn zero() -> Self {
        Self {
            num: Polynomial::zero(),
            den: Polynomial::one(),
        }
    }

    pub fn one() -> Self {
        Self::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        Self {
            num: Polynomial::constant(c),
            den: Polynomial::one(),
        }
    }

    pub fn int(n: i64) -> Self {
        Self::from_poly(Polynomial::int(n))
    }

    pub fn var(v: Var) -> Self {
        Self::from_poly(Polynomial::var(v))
    }

    pub fn from_poly(p: Polynomial) -> Self {
        Self {
            num: p,
            den: Polynomial::one(),
        }
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn into_parts(self) -> (Polynomial, Polynomial) {
        (self.num, self.den)
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn constant_value(&self) -> Option<BigRational> {
        Some(self.num.constant_value()? / self.den.constant_value()?)
    }

    pub fn term_count(&self) -> usize {
        self.num.len() + self.den.len()
    }

    pub fn contains_var(&self, v: Var) -> bool {
        self.num.contains_var(v) || self.den.contains_var(v)
    }

    pub fn vars(&self) -> std::collections::BTreeSet<Var> {
        let mut s = self.num.vars();
        s.extend(self.den.vars());
        s
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        if self.den == other.den {
            return Self::normalized(&self.num + &other.num, self.den.clone());
        }
        // Henrici: only the common part of the denominators can cancel.
        let g = gcd(&self.den, &other.den);
        let b1 = self.den.div_exact(&g).expect("gcd divides");
        let d1 = other.den.div_exact(&g).expect("gcd divides");
        let num = &(&self.num * &d1) + &(&other.num * &b1);
        if num.is_zero() {
            return Self::zero();
        }
        let den = &b1 * &other.den;
        if g.is_constant() {
            return Self::scaled(num, den);
        }
        let g2 = gcd(&num, &g);
        if g2.is_constant() {
            Self::scaled(num, den)
        } else {
            Self::scaled(
                num.div_exact(&g2).expect("gcd divides"),
                den.div_exact(&g2).expect("gcd divides"),
            )
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&-other)
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let (a, b) = cancel(&self.num, &other.den);
        let (c, d) = cancel(&other.num, &self.den);
        Self::scaled(&a * &c, &d * &b)
    }

    pub fn div(&self, other: &Self) -> Result<Self, AlgebraError> {
        Ok(self.mul(&other.recip()?))
    }

    pub fn recip(&self) -> Result<Self, AlgebraError> {
        if self.is_zero() {
            return Err(AlgebraError::DivisionByZero);
        }
        Ok(Self::scaled(self.den.clone(), self.num.clone()))
    }

    pub fn pow(&self, k: u32) -> Self {
        Self {
            num: self.num.pow(k),
            den: self.den.pow(k),
        }
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    /// Coprime `num`/`den`: only the unit normalization is needed.
    fn scaled(num: Polynomial, den: Polynomial) -> Self {
        let lc = den
            .leading_grevlex()
            .map(|(_, c)| c.clone())
            .expect("nonzero denominator");
        if lc.is_one() {
            Self { num, den }
        } else {
            let inv = lc.recip();
            Self {
                num: num.scale(&inv),
                den: den.scale(&inv),
            }
        }
    }

    /// Partial derivative by the quotient rule.
    pub fn partial(&self, v: Var) -> Self {
        let dn = self.num.partial(v);
        if self.den.is_constant() {
            return Self::scaled(dn, self.den.clone());
        }
        let dd = self.den.partial(v);
        if dd.is_zero() {
            return Self::normalized(dn, self.den.clone());
        }
        let mut top = &(&dn * &self.den) - &(&self.num * &dd);
        if top.is_zero() {
            return Self::zero();
        }
        // With num/den coprime only factors of den can cancel. A prime left
        // in both top and the remaining denominator divides den, so the loop
        // ends with a coprime pair.
        let mut den = self.den.pow(2);
        loop {
            let h = gcd(&gcd(&top, &self.den), &den);
            if h.is_constant() {
                break;
            }
            top = top.div_exact(&h).expect("gcd divides");
            den = den.div_exact(&h).expect("gcd divides");
        }
        Self::scaled(top, den)
    }

    /// Cross-multiplication equality; needs no canonical form.
    pub fn equivalent(&self, other: &Self) -> bool {
        (&self.num * &other.den) == (&other.num * &self.den)
    }

    /// Composition: replaces each bound variable by its image.
    pub fn substitute(&self, bindings: &BTreeMap<Var, RationalFunction>) -> Result<Self, AlgebraError> {
        let (pn, pd) = substitute_poly(&self.num, bindings);
        let (qn, qd) = substitute_poly(&self.den, bindings);
        if qn.is_zero() {
            return Err(AlgebraError::ZeroDenominatorAfterSubstitution);
        }
        // pd and qd are products of binding denominators; cancel their
        // common part before the general normalization.
        let g = gcd(&pd, &qd);
        let (pd, qd) = if g.is_constant() {
            (pd, qd)
        } else {
            (
                pd.div_exact(&g).expect("gcd divides"),
                qd.div_exact(&g).expect("gcd divides"),
            )
        };
        Ok(Self::normalized(&pn * &qd, &pd * &qn))
    }

    /// Replaces variables by rational numbers, leaving others symbolic.
    pub fn eval_partial(&self, values: &BTreeMap<Var, BigRational>) -> Result<Self, AlgebraError> {
        let den = self.den.eval_partial(values);
        if den.is_zero() {
            return Err(AlgebraError::ZeroDenominatorAfterSubstitution);
        }
        Ok(Self::normalized(self.num.eval_partial(values), den))
    }

    /// Exact value at a rational point; `None` if a variable is unbound or the
    /// denominator vanishes.
    pub fn eval(&self, values: &dyn Fn(Var) -> Option<BigRational>) -> Option<BigRational> {
        let d = self.den.eval(values)?;
        if d.is_zero() {
            return None;
        }
        Some(self.num.eval(values)? / d)
    }

    pub fn rename(&self, map: &dyn Fn(Var) -> Var) -> Self {
        Self::scaled(self.num.rename(map), self.den.rename(map))
    }
}

impl Neg for &RationalFunction {
    type Output = RationalFunction;
    fn neg(self) -> RationalFunction {
        RationalFunction {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

impl From<Polynomial> for RationalFunction {
    fn from(p: Polynomial) -> Self {
        Self::from_poly(p)
    }
}

fn cancel(a: &Polynomial, b: &Polynomial) -> (Polynomial, Polynomial) {
    if a.is_constant() || b.is_constant() {
        return (a.clone(), b.clone());
    }
    let g = gcd(a, b);
    if g.is_constant() {
        (a.clone(), b.clone())
    } else {
        (
            a.div_exact(&g).expect("gcd divides"),
            b.div_exact(&g).expect("gcd divides"),
        )
    }
}

/// Substitutes into a polynomial, returning `(numerator, denominator)` over a
/// common denominator `prod d_v^(deg_v p)`.
fn substitute_poly(p: &Polynomial, bindings: &BTreeMap<Var, RationalFunction>) -> (Polynomial, Polynomial) {
    let present: Vec<Var> = p.vars().into_iter().filter(|v| bindings.contains_key(v)).collect();
    if present.is_empty() {
        return (p.clone(), Polynomial::one());
    }
    struct Powers {
        num: Vec<Polynomial>,
        den: Vec<Polynomial>,
        max: u32,
    }
    let mut powers: BTreeMap<Var, Powers> = BTreeMap::new();
    for &v in &present {
        let r = &bindings[&v];
        let max = p.degree_in(v);
        let mut num = vec![Polynomial::one()];
        let mut den = vec![Polynomial::one()];
        for k in 1..=max as usize {
            num.push(&num[k - 1] * &r.num);
            den.push(if r.den.is_one() {
                Polynomial::one()
            } else {
                &den[k - 1] * &r.den
            });
        }
        powers.insert(v, Powers { num, den, max });
    }
    let mut total = Polynomial::zero();
    for (m, c) in p.terms() {
        let mut free = Vec::new();
        let mut t = Polynomial::one();
        let mut seen: Vec<Var> = Vec::new();
        for (v, e) in m.pairs() {
            match powers.get(&v) {
                Some(pw) => {
                    t = &t * &pw.num[e as usize];
                    let rest = (pw.max - e) as usize;
                    if rest > 0 && !pw.den[rest].is_one() {
                        t = &t * &pw.den[rest];
                    }
                    seen.push(v);
                }
                None => free.push((v, e)),
            }
        }
        for (v, pw) in &powers {
            if !seen.contains(v) && !pw.den[pw.max as usize].is_one() {
                t = &t * &pw.den[pw.max as usize];
            }
        }
        let fm = super::Monomial::from_pairs(free);
        total = &total + &t.mul_monomial(&fm, c);
    }
    let mut den = Polynomial::one();
    for pw in powers.values() {
        den = &den * &pw.den[pw.max as usize];
    }
    (total, den)
}
