//! Double-precision evaluation of exact rational functions.

use num_rational::BigRational;
use num_traits::ToPrimitive;

use super::poly::Polynomial;
use super::rational::RationalFunction;
use super::vars::Var;
use super::AlgebraError;

/// Converts an exact rational to the nearest-ish `f64`, surviving huge
/// numerators and denominators.
pub fn to_f64(q: &BigRational) -> f64 {
    let (n, d) = (q.numer(), q.denom());
    match (n.to_f64(), d.to_f64()) {
        (Some(a), Some(b)) if a.is_finite() && b.is_finite() => a / b,
        _ => {
            let shift = n.bits().max(d.bits()).saturating_sub(900) as usize;
            let a = (n >> shift).to_f64().unwrap_or(f64::NAN);
            let b = (d >> shift).to_f64().unwrap_or(f64::NAN);
            a / b
        }
    }
}

/// Exact conversion of a finite `f64` to a rational.
pub fn from_f64(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

#[derive(Clone, Debug)]
pub struct CompiledPoly {
    terms: Vec<(f64, Vec<(usize, i32)>)>,
}

impl CompiledPoly {
    pub fn compile(
        p: &Polynomial,
        slot: &dyn Fn(Var) -> Option<usize>,
        name: &dyn Fn(Var) -> String,
    ) -> Result<Self, AlgebraError> {
        let mut terms = Vec::with_capacity(p.len());
        for (m, c) in p.terms() {
            let mut factors = Vec::new();
            for (v, e) in m.pairs() {
                let s = slot(v).ok_or_else(|| AlgebraError::UnboundVariable(name(v)))?;
                factors.push((s, e as i32));
            }
            terms.push((to_f64(c), factors));
        }
        Ok(Self { terms })
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (c, factors) in &self.terms {
            let mut t = *c;
            for &(s, e) in factors {
                t *= if e == 1 { x[s] } else { x[s].powi(e) };
            }
            acc += t;
        }
        acc
    }
}

/// A rational function compiled against a slot layout.
#[derive(Clone, Debug)]
pub struct CompiledRf {
    num: CompiledPoly,
    den: Option<CompiledPoly>,
}

impl CompiledRf {
    pub fn compile(
        r: &RationalFunction,
        slot: &dyn Fn(Var) -> Option<usize>,
        name: &dyn Fn(Var) -> String,
    ) -> Result<Self, AlgebraError> {
        let num = CompiledPoly::compile(r.num(), slot, name)?;
        let den = if r.den().is_one() {
            None
        } else {
            Some(CompiledPoly::compile(r.den(), slot, name)?)
        };
        Ok(Self { num, den })
    }

    /// Denominator value (1 for polynomials).
    #[inline]
    pub fn eval_den(&self, x: &[f64]) -> f64 {
        self.den.as_ref().map_or(1.0, |d| d.eval(x))
    }

    #[inline]
    pub fn eval_num(&self, x: &[f64]) -> f64 {
        self.num.eval(x)
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.num.eval(x) / self.eval_den(x)
    }
}
