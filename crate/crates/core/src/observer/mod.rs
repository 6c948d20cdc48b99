//! Observer by output injection:
//! `xo' = A_o xo + b_o(xo) + (k_o(xo) + K)(y - C_o xo)` with
//! `k_o = d b_o / d xo_{first block}` in the last block and zero elsewhere.

mod gains;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use crate::algebra::{rf_to_string, to_f64, CompiledRf, RationalFunction, Role, Var, VarTable};
use crate::parser::SystemKind;
use crate::realization::OutputRealization;
use crate::simulate::SimError;

pub use gains::{default_poles, gain_search, pole_place, GainSpec, GridSpec, SearchOutcome};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ObserverError {
    #[error("gain has shape {got:?}, expected {want:?}")]
    GainShape { got: (usize, usize), want: (usize, usize) },
    #[error("pair (A, C) is not observable")]
    UnobservablePair,
    #[error("pole placement needs a single output")]
    MultiOutput,
    #[error("invalid pole list: {0}")]
    InvalidPoles(String),
    #[error("no stable candidate in the gain grid")]
    NoStableCandidate,
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Clone, Debug)]
pub struct Observer {
    /// Realization table followed by the measured-output inputs.
    pub vars: VarTable,
    pub coords: Vec<Var>,
    pub inputs: Vec<Var>,
    pub n_o: usize,
    pub m_y: usize,
    pub f_or: Vec<RationalFunction>,
    pub b_o: Vec<RationalFunction>,
    /// `n_o x m_y`; rows outside the last block are zero.
    pub k_o: Vec<Vec<RationalFunction>>,
    /// Constant gain, `n_o x m_y`.
    pub gain: Vec<Vec<BigRational>>,
    /// Observer drift in `(xo, y)`.
    pub f_o: Vec<RationalFunction>,
    pub kind: SystemKind,
}

/// Closest rational with denominator `10^9`; keeps reports readable.
pub fn rationalize(x: f64) -> BigRational {
    let scaled = (x * 1e9).round();
    BigRational::new((scaled as i64).into(), 1_000_000_000i64.into())
}

pub fn make_observer(
    real: &OutputRealization,
    input_names: &[String],
    gain: Vec<Vec<BigRational>>,
) -> Result<Observer, ObserverError> {
    let (n_o, m_y) = (real.n_o, real.m_y);
    let shape = (gain.len(), gain.first().map_or(0, |r| r.len()));
    if shape != (n_o, m_y) || gain.iter().any(|r| r.len() != m_y) {
        return Err(ObserverError::GainShape {
            got: shape,
            want: (n_o, m_y),
        });
    }
    let mut vars = real.vars.clone();
    let inputs: Vec<Var> = input_names.iter().map(|n| vars.fresh(n, Role::Auxiliary)).collect();

    let last = n_o - m_y;
    let k_o: Vec<Vec<RationalFunction>> = (0..n_o)
        .map(|k| {
            (0..m_y)
                .map(|j| {
                    if k < last {
                        RationalFunction::zero()
                    } else {
                        real.b_o[k - last].partial(real.coords[j])
                    }
                })
                .collect()
        })
        .collect();

    let innovation: Vec<RationalFunction> = (0..m_y)
        .map(|j| RationalFunction::var(inputs[j]).sub(&RationalFunction::var(real.coords[j])))
        .collect();
    let f_o: Vec<RationalFunction> = (0..n_o)
        .map(|k| {
            (0..m_y).fold(real.f_or[k].clone(), |acc, j| {
                let g = k_o[k][j].add(&RationalFunction::constant(gain[k][j].clone()));
                if g.is_zero() {
                    acc
                } else {
                    acc.add(&g.mul(&innovation[j]))
                }
            })
        })
        .collect();

    let refs: Vec<&RationalFunction> = f_o.iter().collect();
    let kind = match real.kind {
        SystemKind::Polynomial => SystemKind::of(&refs, &vars),
        SystemKind::Rational => SystemKind::Rational,
    };
    Ok(Observer {
        vars,
        coords: real.coords.clone(),
        inputs,
        n_o,
        m_y,
        f_or: real.f_or.clone(),
        b_o: real.b_o.clone(),
        k_o,
        gain,
        f_o,
        kind,
    })
}

impl Observer {
    /// With `y = C_o xo` the observer reduces to the realization.
    pub fn check_injection(&self) -> Result<bool, crate::algebra::AlgebraError> {
        let at: BTreeMap<Var, RationalFunction> = self
            .inputs
            .iter()
            .zip(&self.coords)
            .map(|(&y, &x)| (y, RationalFunction::var(x)))
            .collect();
        for (fo, fr) in self.f_o.iter().zip(&self.f_or) {
            if !fo.substitute(&at)?.equivalent(fr) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `k_o` has the required sparsity and its last block equals the
    /// partials of `b_o`.
    pub fn check_k_o(&self) -> bool {
        let last = self.n_o - self.m_y;
        self.k_o.iter().enumerate().all(|(k, row)| {
            row.iter().enumerate().all(|(j, g)| {
                if k < last {
                    g.is_zero()
                } else {
                    g.equivalent(&self.b_o[k - last].partial(self.coords[j]))
                }
            })
        })
    }

    pub fn gain_f64(&self) -> Vec<Vec<f64>> {
        self.gain.iter().map(|r| r.iter().map(to_f64).collect()).collect()
    }

    pub fn render_f(&self) -> Vec<String> {
        self.f_o
            .iter()
            .enumerate()
            .map(|(k, f)| format!("d {} = {}", self.vars.name(self.coords[k]), rf_to_string(f, &self.vars)))
            .collect()
    }

    /// Nonzero rows of `k_o`, as `k_o[row][col] = expr` strings.
    pub fn render_k_o(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (k, row) in self.k_o.iter().enumerate() {
            for (j, g) in row.iter().enumerate() {
                if k >= self.n_o - self.m_y {
                    out.push(format!("k_o[{}][{}] = {}", k + 1, j + 1, rf_to_string(g, &self.vars)));
                }
            }
        }
        out
    }

    /// Error-dynamics linearization `A_o + db_o/dxo - (k_o + K) C_o` at
    /// zero error, evaluated at `at` (observer coordinates). `params` must
    /// bind every parameter left in the drift.
    pub fn error_matrix(
        &self,
        params: &BTreeMap<Var, BigRational>,
        at: &[f64],
        with_gain: bool,
    ) -> Result<DMatrix<f64>, ObserverError> {
        let a = structural_matrix(self.n_o, self.m_y, &self.b_o, &self.coords, &self.vars, params, at)?;
        if !with_gain {
            return Ok(a);
        }
        let mut a = a;
        for k in 0..self.n_o {
            for j in 0..self.m_y {
                a[(k, j)] -= to_f64(&self.gain[k][j]);
            }
        }
        Ok(a)
    }
}

/// `A_o + d b_o / d xo` with the first-block columns of the last block
/// zeroed, i.e. the linearized error dynamics before the constant gain.
pub fn structural_matrix(
    n_o: usize,
    m_y: usize,
    b_o: &[RationalFunction],
    coords: &[Var],
    vars: &VarTable,
    params: &BTreeMap<Var, BigRational>,
    at: &[f64],
) -> Result<DMatrix<f64>, ObserverError> {
    let mut a = DMatrix::zeros(n_o, n_o);
    let last = n_o - m_y;
    for k in 0..last {
        a[(k, k + m_y)] = 1.0;
    }
    let slot = |v: Var| coords.iter().position(|&c| c == v);
    let name = |v: Var| vars.name(v).to_string();
    for (i, b) in b_o.iter().enumerate() {
        let b = b.eval_partial(params).map_err(SimError::from)?;
        for j in m_y..n_o {
            let d = CompiledRf::compile(&b.partial(coords[j]), &slot, &name).map_err(SimError::from)?;
            let den = d.eval_den(at);
            if den == 0.0 {
                return Err(SimError::UndefinedAtPoint.into());
            }
            a[(last + i, j)] = d.eval_num(at) / den;
        }
    }
    Ok(a)
}

pub fn zero_gain(n_o: usize, m_y: usize) -> Vec<Vec<BigRational>> {
    vec![vec![BigRational::zero(); m_y]; n_o]
}
