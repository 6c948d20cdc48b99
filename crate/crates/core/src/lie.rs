//! Lie derivatives of the output map along the drift and the chain
//! `s_1 = h, s_{k+1} = (ds_k/dx) f` they generate.

use thiserror::Error;

use crate::algebra::{rf_to_string, RationalFunction};
use crate::parser::RationalSystem;

pub const DEFAULT_TERM_LIMIT: usize = 20_000;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum LieError {
    #[error("chain entry {index} has {terms} terms, above the limit of {limit}")]
    TermLimit { index: usize, terms: usize, limit: usize },
}

/// `L_f g = sum_j (dg/dx_j) f_j`.
pub fn lie_derivative(g: &RationalFunction, sys: &RationalSystem) -> RationalFunction {
    sys.states
        .iter()
        .zip(&sys.f)
        .fold(RationalFunction::zero(), |acc, (&x, fx)| {
            let d = g.partial(x);
            if d.is_zero() {
                acc
            } else {
                acc.add(&d.mul(fx))
            }
        })
}

/// Stacked Lie derivatives of the outputs, numbered block by block:
/// entries `0..m_y` are `h`, entries `k*m_y..(k+1)*m_y` are the `k`-th
/// derivatives.
#[derive(Clone, Debug)]
pub struct SChain {
    m_y: usize,
    entries: Vec<RationalFunction>,
    term_limit: usize,
}

impl SChain {
    pub fn new(sys: &RationalSystem) -> Self {
        Self::with_term_limit(sys, DEFAULT_TERM_LIMIT)
    }

    pub fn with_term_limit(sys: &RationalSystem, term_limit: usize) -> Self {
        Self {
            m_y: sys.m_y(),
            entries: sys.h(),
            term_limit,
        }
    }

    /// Number of complete blocks.
    pub fn order(&self) -> usize {
        self.entries.len() / self.m_y
    }

    pub fn m_y(&self) -> usize {
        self.m_y
    }

    pub fn entries(&self) -> &[RationalFunction] {
        &self.entries
    }

    /// First `m * m_y` entries.
    pub fn truncated(&self, m: usize) -> &[RationalFunction] {
        &self.entries[..m * self.m_y]
    }

    pub fn block(&self, k: usize) -> &[RationalFunction] {
        &self.entries[k * self.m_y..(k + 1) * self.m_y]
    }

    /// Grows the chain to at least `m` blocks, reusing existing entries.
    pub fn extend_to(&mut self, m: usize, sys: &RationalSystem) -> Result<(), LieError> {
        while self.order() < m {
            let start = self.entries.len() - self.m_y;
            for i in 0..self.m_y {
                let next = lie_derivative(&self.entries[start + i], sys);
                let terms = next.term_count();
                if terms > self.term_limit {
                    return Err(LieError::TermLimit {
                        index: self.entries.len() + 1,
                        terms,
                        limit: self.term_limit,
                    });
                }
                self.entries.push(next);
            }
        }
        Ok(())
    }

    pub fn render(&self, sys: &RationalSystem, m: usize) -> Vec<String> {
        self.truncated(m)
            .iter()
            .enumerate()
            .map(|(k, s)| format!("s{} = {}", k + 1, rf_to_string(s, &sys.vars)))
            .collect()
    }
}

/// Chain with `m` blocks.
pub fn build_s_chain(sys: &RationalSystem, m: usize) -> Result<SChain, LieError> {
    let mut chain = SChain::new(sys);
    chain.extend_to(m.max(1), sys)?;
    Ok(chain)
}
