//! Output-based realization: `f_or = (ds/dx f) o s^-1 = A_o xh + b_o(xh)`.

use std::collections::BTreeMap;

use num_rational::BigRational;
use thiserror::Error;

use crate::algebra::{rf_to_string, AlgebraError, CompiledRf, RationalFunction, Role, Var, VarTable};
use crate::inverse::{InverseMap, Observability};
use crate::lie::{LieError, SChain};
use crate::parser::{RationalSystem, SystemKind};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum RealizationError {
    #[error("shift structure violated at component {0}")]
    ShiftStructureViolation(usize),
    #[error("first chain block differs from the output map at component {0}")]
    OutputMismatch(usize),
    #[error("realization kind {real:?} differs from system kind {sys:?}")]
    KindMismatch { sys: SystemKind, real: SystemKind },
    #[error("chain entry s{0} has a vanishing denominator at x0")]
    DenominatorZeroAtX0(usize),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Lie(#[from] LieError),
}

/// System table extended by `xo1..xo{n_o}`. The indices coincide with the
/// tags of [`crate::inverse::tag_space`], so expressions in tags can be
/// rendered against this table directly.
pub fn observer_space(sys: &RationalSystem, n_o: usize) -> (VarTable, Vec<Var>) {
    let mut vars = sys.vars.clone();
    let xo = (1..=n_o).map(|k| vars.fresh(&format!("xo{k}"), Role::Tag)).collect();
    (vars, xo)
}

#[derive(Clone, Debug)]
pub struct OutputRealization {
    /// System variables followed by the realization coordinates.
    pub vars: VarTable,
    pub coords: Vec<Var>,
    pub n_o: usize,
    pub m_y: usize,
    /// Full drift; component `k < n_o - m_y` is `coords[k + m_y]`.
    pub f_or: Vec<RationalFunction>,
    /// Last block of `f_or`.
    pub b_o: Vec<RationalFunction>,
    /// `s(x0)`, symbolic in any unbound parameters.
    pub x0_hat: Vec<RationalFunction>,
    pub kind: SystemKind,
    /// Chain `s_1..s_{n_o}` at the working parameters.
    pub s: Vec<RationalFunction>,
    /// Parameter values the realization is specialized to, if any.
    pub instance: Option<BTreeMap<Var, BigRational>>,
}

impl OutputRealization {
    /// Row-major `n_o x m_y` selection of the first block.
    pub fn c_o(&self) -> Vec<Vec<i64>> {
        (0..self.m_y)
            .map(|i| (0..self.n_o).map(|j| i64::from(i == j)).collect())
            .collect()
    }

    pub fn render_f(&self) -> Vec<String> {
        self.f_or
            .iter()
            .enumerate()
            .map(|(k, f)| format!("d xo{} = {}", k + 1, rf_to_string(f, &self.vars)))
            .collect()
    }

    pub fn render_b(&self) -> Vec<String> {
        self.b_o.iter().map(|b| rf_to_string(b, &self.vars)).collect()
    }

    pub fn render_x0(&self) -> Vec<String> {
        self.x0_hat.iter().map(|x| rf_to_string(x, &self.vars)).collect()
    }
}

pub fn realize(sys: &RationalSystem, obs: &Observability) -> Result<OutputRealization, RealizationError> {
    let mut chain = obs.chain.clone();
    output_based_realization(sys, &mut chain, &obs.inverse)
}

/// Builds `f_or` from the chain and a verified inverse. Extends `chain` by
/// one block for `b_o`.
pub fn output_based_realization(
    sys: &RationalSystem,
    chain: &mut SChain,
    inv: &InverseMap,
) -> Result<OutputRealization, RealizationError> {
    let m_y = sys.m_y();
    let n_o = inv.n_tags();
    chain.extend_to(inv.m_used + 1, sys)?;
    let instance = inv.instance.clone();
    let at = |s: &RationalFunction| match &instance {
        Some(p) => s.eval_partial(p),
        None => Ok(s.clone()),
    };
    let s: Vec<RationalFunction> = chain.entries()[..n_o + m_y].iter().map(at).collect::<Result<_, _>>()?;
    let h: Vec<RationalFunction> = sys.h().iter().map(at).collect::<Result<_, _>>()?;
    for i in 0..m_y {
        if !s[i].equivalent(&h[i]) {
            return Err(RealizationError::OutputMismatch(i + 1));
        }
    }

    let r: BTreeMap<Var, RationalFunction> = sys.states.iter().copied().zip(inv.r.iter().cloned()).collect();
    let to_x: BTreeMap<Var, RationalFunction> = inv.tags.iter().copied().zip(s.iter().cloned()).collect();
    // Shift rows: s_{k+m_y} o r must agree with T_{k+m_y} on the image of s.
    for k in 0..n_o - m_y {
        let direct = s[k + m_y].substitute(&r)?;
        let ok = direct.equivalent(&RationalFunction::var(inv.tags[k + m_y]))
            || direct.substitute(&to_x)?.equivalent(&s[k + m_y]);
        if !ok {
            return Err(RealizationError::ShiftStructureViolation(k + 1));
        }
    }
    let b_o: Vec<RationalFunction> = s[n_o..n_o + m_y]
        .iter()
        .map(|sk| sk.substitute(&r))
        .collect::<Result<_, _>>()?;

    let (vars, coords) = observer_space(sys, n_o);
    debug_assert_eq!(coords, inv.tags);
    let mut f_or: Vec<RationalFunction> = coords[m_y..].iter().map(|&v| RationalFunction::var(v)).collect();
    f_or.extend(b_o.iter().cloned());

    // Polynomial drifts are rational too, so only the polynomial class can
    // be violated.
    let refs: Vec<&RationalFunction> = f_or.iter().collect();
    let drift = SystemKind::of(&refs, &vars);
    let kind = if inv.kind == sys.kind { sys.kind } else { drift };
    if kind == SystemKind::Polynomial && drift != SystemKind::Polynomial {
        return Err(RealizationError::KindMismatch {
            sys: sys.kind,
            real: drift,
        });
    }

    let x0 = sys.x0_map();
    let x0_hat = s[..n_o]
        .iter()
        .enumerate()
        .map(|(k, sk)| {
            sk.eval_partial(&x0)
                .map_err(|_| RealizationError::DenominatorZeroAtX0(k + 1))
        })
        .collect::<Result<_, _>>()?;

    Ok(OutputRealization {
        vars,
        coords,
        n_o,
        m_y,
        f_or,
        b_o,
        x0_hat,
        kind,
        s: s[..n_o].to_vec(),
        instance,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelfCheck {
    pub samples: usize,
    pub max_rel_deviation: f64,
    pub worst_time: f64,
}

/// Compares central differences of `s(x(t))` along sampled trajectory
/// points with `f_or(s(x(t)))`. Parameters must be bound by `params`.
pub fn realization_selfcheck(
    real: &OutputRealization,
    sys: &RationalSystem,
    params: &BTreeMap<Var, BigRational>,
    times: &[f64],
    states: &[Vec<f64>],
) -> Result<SelfCheck, RealizationError> {
    let fix = |r: &RationalFunction| r.eval_partial(params);
    let state_slot = |v: Var| sys.states.iter().position(|&x| x == v);
    let coord_slot = |v: Var| real.coords.iter().position(|&x| x == v);
    let name = |v: Var| real.vars.name(v).to_string();
    let s: Vec<CompiledRf> = real
        .s
        .iter()
        .map(|sk| Ok(CompiledRf::compile(&fix(sk)?, &state_slot, &name)?))
        .collect::<Result<_, RealizationError>>()?;
    let f: Vec<CompiledRf> = real
        .f_or
        .iter()
        .map(|fk| Ok(CompiledRf::compile(&fix(fk)?, &coord_slot, &name)?))
        .collect::<Result<_, RealizationError>>()?;
    let hat: Vec<Vec<f64>> = states.iter().map(|x| s.iter().map(|sk| sk.eval(x)).collect()).collect();
    let mut rows = Vec::new();
    for i in 1..times.len().saturating_sub(1) {
        let dt = times[i + 1] - times[i - 1];
        let fd: Vec<f64> = (0..real.n_o).map(|k| (hat[i + 1][k] - hat[i - 1][k]) / dt).collect();
        let model: Vec<f64> = f.iter().map(|fk| fk.eval(&hat[i])).collect();
        rows.push((times[i], fd, model));
    }
    let scale: Vec<f64> = (0..real.n_o)
        .map(|k| rows.iter().map(|r| r.2[k].abs()).fold(0.0, f64::max))
        .collect();
    let mut out = SelfCheck {
        samples: rows.len(),
        max_rel_deviation: 0.0,
        worst_time: 0.0,
    };
    for (t, fd, model) in &rows {
        for k in 0..real.n_o {
            let denom = model[k].abs().max(1e-3 * scale[k]).max(1e-12);
            let dev = (fd[k] - model[k]).abs() / denom;
            if dev > out.max_rel_deviation || dev.is_nan() {
                out.max_rel_deviation = dev;
                out.worst_time = *t;
            }
        }
    }
    Ok(out)
}
