//! Buchberger's algorithm over Q with normal pair selection, the product and
//! chain criteria, and a reduction-step budget.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{Monomial, Polynomial, Var};

pub const DEFAULT_STEP_BUDGET: usize = 200_000;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum GroebnerError {
    #[error("Groebner basis computation exceeded {0} reduction steps")]
    ResourceExceeded(usize),
    #[error("variable index {0} is not covered by the monomial order")]
    UncoveredVariable(u32),
    #[error("basis self-check failed: an S-polynomial does not reduce to zero")]
    SelfCheckFailed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderKind {
    Lex,
    Grevlex,
}

/// Monomial order over an explicit variable list, largest variable first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonomialOrder {
    pub kind: OrderKind,
    pub vars: Vec<Var>,
}

impl MonomialOrder {
    pub fn lex(vars: Vec<Var>) -> Self {
        Self {
            kind: OrderKind::Lex,
            vars,
        }
    }

    pub fn grevlex(vars: Vec<Var>) -> Self {
        Self {
            kind: OrderKind::Grevlex,
            vars,
        }
    }

    fn cmp_exp(&self, a: &[u32], b: &[u32]) -> Ordering {
        match self.kind {
            OrderKind::Lex => a.cmp(b),
            OrderKind::Grevlex => {
                let da: u32 = a.iter().sum();
                let db: u32 = b.iter().sum();
                da.cmp(&db).then_with(|| {
                    for (x, y) in a.iter().zip(b).rev() {
                        if x != y {
                            return y.cmp(x);
                        }
                    }
                    Ordering::Equal
                })
            }
        }
    }

    fn dense(&self, m: &Monomial, slot: &BTreeMap<Var, usize>) -> Result<Vec<u32>, GroebnerError> {
        let mut e = vec![0; self.vars.len()];
        for (v, k) in m.pairs() {
            let i = *slot.get(&v).ok_or(GroebnerError::UncoveredVariable(v.0))?;
            e[i] = k;
        }
        Ok(e)
    }

    pub fn cmp(&self, a: &Monomial, b: &Monomial) -> Ordering {
        let slot = self.slots();
        let ea = self.dense(a, &slot).expect("monomial covered by order");
        let eb = self.dense(b, &slot).expect("monomial covered by order");
        self.cmp_exp(&ea, &eb)
    }

    fn slots(&self) -> BTreeMap<Var, usize> {
        self.vars.iter().enumerate().map(|(i, v)| (*v, i)).collect()
    }
}

/// Terms in ascending order; the leading term is last.
#[derive(Clone, Debug)]
struct DPoly {
    terms: Vec<(Vec<u32>, BigRational)>,
}

impl DPoly {
    fn lm(&self) -> &[u32] {
        &self.terms.last().expect("nonzero").0
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn bits(&self) -> u64 {
        self.terms
            .iter()
            .map(|(_, c)| c.numer().bits() + c.denom().bits())
            .sum()
    }

    fn make_monic(&mut self) {
        let lc = self.terms.last().expect("nonzero").1.clone();
        if !lc.is_one() {
            for t in &mut self.terms {
                t.1 = &t.1 / &lc;
            }
        }
    }

    /// `self - c * x^shift * q`.
    fn sub_mul(&self, c: &BigRational, shift: &[u32], q: &DPoly, ord: &MonomialOrder) -> DPoly {
        let scaled: Vec<(Vec<u32>, BigRational)> = q.terms.iter().map(|(e, k)| (add_exp(e, shift), -(k * c))).collect();
        let mut out = Vec::with_capacity(self.terms.len() + scaled.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() && j < scaled.len() {
            match ord.cmp_exp(&self.terms[i].0, &scaled[j].0) {
                Ordering::Less => {
                    out.push(self.terms[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(scaled[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let s = &self.terms[i].1 + &scaled[j].1;
                    if !s.is_zero() {
                        out.push((self.terms[i].0.clone(), s));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.terms[i..]);
        out.extend_from_slice(&scaled[j..]);
        DPoly { terms: out }
    }
}

fn add_exp(a: &[u32], b: &[u32]) -> Vec<u32> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn lcm_exp(a: &[u32], b: &[u32]) -> Vec<u32> {
    a.iter().zip(b).map(|(x, y)| *x.max(y)).collect()
}

fn divides(a: &[u32], b: &[u32]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

fn coprime(a: &[u32], b: &[u32]) -> bool {
    a.iter().zip(b).all(|(x, y)| *x == 0 || *y == 0)
}

fn quotient(a: &[u32], b: &[u32]) -> Vec<u32> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

struct Engine<'a> {
    ord: &'a MonomialOrder,
    steps: usize,
    budget: usize,
}

impl Engine<'_> {
    fn spoly(&self, f: &DPoly, g: &DPoly) -> DPoly {
        let l = lcm_exp(f.lm(), g.lm());
        let zero = DPoly { terms: Vec::new() };
        let one = BigRational::one();
        let a = zero.sub_mul(&-one.clone(), &quotient(&l, f.lm()), f, self.ord);
        a.sub_mul(&one, &quotient(&l, g.lm()), g, self.ord)
    }

    /// Full reduction against monic `basis`.
    fn reduce(&mut self, p: DPoly, basis: &[&DPoly]) -> Result<DPoly, GroebnerError> {
        let mut p = p;
        let mut rest: Vec<(Vec<u32>, BigRational)> = Vec::new();
        while let Some((m, c)) = p.terms.last().cloned() {
            match basis.iter().find(|g| divides(g.lm(), &m)) {
                Some(g) => {
                    self.steps += 1;
                    if self.steps > self.budget {
                        return Err(GroebnerError::ResourceExceeded(self.budget));
                    }
                    p = p.sub_mul(&c, &quotient(&m, g.lm()), g, self.ord);
                }
                None => {
                    p.terms.pop();
                    rest.push((m, c));
                }
            }
        }
        rest.reverse();
        Ok(DPoly { terms: rest })
    }
}

/// Reduced Groebner basis, monic, sorted by ascending leading monomial.
#[derive(Clone, Debug)]
pub struct GroebnerBasis {
    pub generators: Vec<Polynomial>,
    pub order: MonomialOrder,
    dense: Vec<DPoly>,
    /// Reduction steps spent, including the self-check.
    pub steps: usize,
}

impl GroebnerBasis {
    pub fn normal_form(&self, p: &Polynomial) -> Result<Polynomial, GroebnerError> {
        let d = to_dense(p, &self.order)?;
        let mut eng = Engine {
            ord: &self.order,
            steps: 0,
            budget: usize::MAX,
        };
        let refs: Vec<&DPoly> = self.dense.iter().collect();
        let r = eng.reduce(d, &refs)?;
        Ok(from_dense(&r, &self.order))
    }

    pub fn contains(&self, p: &Polynomial) -> Result<bool, GroebnerError> {
        Ok(self.normal_form(p)?.is_zero())
    }

    pub fn is_unit_ideal(&self) -> bool {
        self.generators.len() == 1 && self.generators[0].is_one()
    }

    /// Every S-polynomial of a basis pair reduces to zero.
    pub fn verify(&self) -> bool {
        let mut eng = Engine {
            ord: &self.order,
            steps: 0,
            budget: usize::MAX,
        };
        let refs: Vec<&DPoly> = self.dense.iter().collect();
        for i in 0..self.dense.len() {
            for j in i + 1..self.dense.len() {
                if coprime(self.dense[i].lm(), self.dense[j].lm()) {
                    continue;
                }
                let s = eng.spoly(&self.dense[i], &self.dense[j]);
                match eng.reduce(s, &refs) {
                    Ok(r) if r.is_zero() => {}
                    _ => return false,
                }
            }
        }
        true
    }

    pub fn leading_monomial(&self, i: usize) -> Monomial {
        let d = &self.dense[i];
        Monomial::from_pairs(
            d.lm()
                .iter()
                .zip(&self.order.vars)
                .filter(|(e, _)| **e > 0)
                .map(|(e, v)| (*v, *e)),
        )
    }
}

fn to_dense(p: &Polynomial, ord: &MonomialOrder) -> Result<DPoly, GroebnerError> {
    let slot = ord.slots();
    let mut terms = p
        .terms()
        .map(|(m, c)| Ok((ord.dense(m, &slot)?, c.clone())))
        .collect::<Result<Vec<_>, GroebnerError>>()?;
    terms.sort_by(|a, b| ord.cmp_exp(&a.0, &b.0));
    Ok(DPoly { terms })
}

fn from_dense(d: &DPoly, ord: &MonomialOrder) -> Polynomial {
    Polynomial::from_terms(d.terms.iter().map(|(e, c)| {
        (
            Monomial::from_pairs(e.iter().zip(&ord.vars).filter(|(k, _)| **k > 0).map(|(k, v)| (*v, *k))),
            c.clone(),
        )
    }))
}

pub fn buchberger(generators: &[Polynomial], order: &MonomialOrder) -> Result<GroebnerBasis, GroebnerError> {
    buchberger_with_budget(generators, order, DEFAULT_STEP_BUDGET)
}

pub fn buchberger_with_budget(
    generators: &[Polynomial],
    order: &MonomialOrder,
    budget: usize,
) -> Result<GroebnerBasis, GroebnerError> {
    let mut eng = Engine {
        ord: order,
        steps: 0,
        budget,
    };
    let mut g: Vec<DPoly> = Vec::new();
    for p in generators {
        let mut d = to_dense(p, order)?;
        if !d.is_zero() {
            d.make_monic();
            g.push(d);
        }
    }
    let mut pending: BTreeSet<(usize, usize)> = BTreeSet::new();
    for j in 0..g.len() {
        for i in 0..j {
            pending.insert((i, j));
        }
    }
    while let Some(&(i, j)) = pending.iter().min_by(|a, b| {
        let la = lcm_exp(g[a.0].lm(), g[a.1].lm());
        let lb = lcm_exp(g[b.0].lm(), g[b.1].lm());
        order
            .cmp_exp(&la, &lb)
            .then_with(|| (g[a.0].bits() + g[a.1].bits()).cmp(&(g[b.0].bits() + g[b.1].bits())))
            .then_with(|| a.cmp(b))
    }) {
        pending.remove(&(i, j));
        if coprime(g[i].lm(), g[j].lm()) {
            continue;
        }
        let l = lcm_exp(g[i].lm(), g[j].lm());
        let key = |a: usize, b: usize| (a.min(b), a.max(b));
        let chain = (0..g.len()).any(|k| {
            k != i && k != j && divides(g[k].lm(), &l) && !pending.contains(&key(i, k)) && !pending.contains(&key(j, k))
        });
        if chain {
            continue;
        }
        let s = eng.spoly(&g[i], &g[j]);
        let refs: Vec<&DPoly> = g.iter().collect();
        let mut h = eng.reduce(s, &refs)?;
        if h.is_zero() {
            continue;
        }
        h.make_monic();
        let new = g.len();
        g.push(h);
        for k in 0..new {
            pending.insert((k, new));
        }
    }
    let reduced = interreduce(g, &mut eng)?;
    let steps = eng.steps;
    let basis = GroebnerBasis {
        generators: reduced.iter().map(|d| from_dense(d, order)).collect(),
        order: order.clone(),
        dense: reduced,
        steps,
    };
    if !basis.verify() {
        return Err(GroebnerError::SelfCheckFailed);
    }
    Ok(basis)
}

fn interreduce(g: Vec<DPoly>, eng: &mut Engine) -> Result<Vec<DPoly>, GroebnerError> {
    let mut minimal: Vec<DPoly> = Vec::new();
    for (i, p) in g.iter().enumerate() {
        let redundant = g
            .iter()
            .enumerate()
            .any(|(k, q)| k != i && divides(q.lm(), p.lm()) && (q.lm() != p.lm() || k < i));
        if !redundant {
            minimal.push(p.clone());
        }
    }
    let mut out = Vec::with_capacity(minimal.len());
    for i in 0..minimal.len() {
        let others: Vec<&DPoly> = minimal
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != i)
            .map(|(_, q)| q)
            .collect();
        let mut r = eng.reduce(minimal[i].clone(), &others)?;
        r.make_monic();
        out.push(r);
    }
    out.sort_by(|a, b| eng.ord.cmp_exp(a.lm(), b.lm()));
    Ok(out)
}
