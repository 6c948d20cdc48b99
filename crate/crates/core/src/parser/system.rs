use std::collections::BTreeMap;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    poly_to_string, rational_to_string, rf_to_string, AlgebraError, Polynomial, RationalFunction, Role, Var, VarTable,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    Polynomial,
    Rational,
}

impl SystemKind {
    /// Polynomial in the non-parameter variables: denominators may only
    /// involve parameters.
    pub fn of(items: &[&RationalFunction], vars: &VarTable) -> SystemKind {
        let ok = items
            .iter()
            .all(|r| r.den().vars().iter().all(|&v| vars.role(v) == Role::Parameter));
        if ok {
            SystemKind::Polynomial
        } else {
            SystemKind::Rational
        }
    }
}

/// A rational (or polynomial) system without inputs: `dx/dt = f(x)`,
/// `y = h(x)`, `x(0) = x0`, with symbolic parameters and nonvanishing
/// assumptions on them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalSystem {
    pub name: String,
    pub vars: VarTable,
    pub states: Vec<Var>,
    pub params: Vec<(Var, Option<BigRational>)>,
    pub f: Vec<RationalFunction>,
    pub outputs: Vec<(String, RationalFunction)>,
    pub x0: Vec<BigRational>,
    pub kind: SystemKind,
    pub assumptions: Vec<Polynomial>,
}

impl RationalSystem {
    pub fn n(&self) -> usize {
        self.states.len()
    }

    pub fn m_y(&self) -> usize {
        self.outputs.len()
    }

    pub fn h(&self) -> Vec<RationalFunction> {
        self.outputs.iter().map(|(_, h)| h.clone()).collect()
    }

    pub fn param_vars(&self) -> Vec<Var> {
        self.params.iter().map(|(v, _)| *v).collect()
    }

    /// Parameters that carry a numeric value in the source.
    pub fn bound_params(&self) -> BTreeMap<Var, BigRational> {
        self.params
            .iter()
            .filter_map(|(v, b)| b.clone().map(|b| (*v, b)))
            .collect()
    }

    pub fn unbound_params(&self) -> Vec<Var> {
        self.params
            .iter()
            .filter(|(_, b)| b.is_none())
            .map(|(v, _)| *v)
            .collect()
    }

    pub fn x0_map(&self) -> BTreeMap<Var, BigRational> {
        self.states.iter().copied().zip(self.x0.iter().cloned()).collect()
    }

    pub fn is_parameter_only(&self, p: &Polynomial) -> bool {
        p.vars().iter().all(|&v| self.vars.role(v) == Role::Parameter)
    }

    pub fn infer_kind(&self) -> SystemKind {
        let items: Vec<&RationalFunction> = self.f.iter().chain(self.outputs.iter().map(|(_, h)| h)).collect();
        SystemKind::of(&items, &self.vars)
    }

    /// Replaces the given parameters by numbers everywhere. Assumptions that
    /// become nonzero constants are dropped.
    pub fn instantiate(&self, values: &BTreeMap<Var, BigRational>) -> Result<RationalSystem, AlgebraError> {
        let f = self
            .f
            .iter()
            .map(|r| r.eval_partial(values))
            .collect::<Result<Vec<_>, _>>()?;
        let outputs = self
            .outputs
            .iter()
            .map(|(n, h)| Ok((n.clone(), h.eval_partial(values)?)))
            .collect::<Result<Vec<_>, AlgebraError>>()?;
        let mut assumptions = Vec::new();
        for a in &self.assumptions {
            let p = a.eval_partial(values);
            if p.is_zero() {
                return Err(AlgebraError::DivisionByZero);
            }
            if !p.is_constant() {
                assumptions.push(p);
            }
        }
        let params = self
            .params
            .iter()
            .map(|(v, b)| (*v, values.get(v).cloned().or_else(|| b.clone())))
            .collect();
        let mut sys = RationalSystem {
            name: self.name.clone(),
            vars: self.vars.clone(),
            states: self.states.clone(),
            params,
            f,
            outputs,
            x0: self.x0.clone(),
            kind: self.kind,
            assumptions,
        };
        sys.kind = sys.infer_kind();
        Ok(sys)
    }

    /// Checks that no denominator of `f` or `h` vanishes identically at `x0`
    /// (or numerically, once bound parameters are inserted). Returns the
    /// offending equation label.
    pub fn denominator_zero_at_x0(&self) -> Option<String> {
        let at = self.x0_map();
        let bound = self.bound_params();
        let labelled = self
            .states
            .iter()
            .zip(&self.f)
            .map(|(v, r)| (format!("d{}", self.vars.name(*v)), r))
            .chain(self.outputs.iter().map(|(n, h)| (format!("output {n}"), h)));
        for (label, r) in labelled {
            let d0 = r.den().eval_partial(&at);
            if d0.is_zero() {
                return Some(label);
            }
            let unbound_left = d0.vars().iter().any(|v| !bound.contains_key(v));
            if !unbound_left && d0.eval_partial(&bound).is_zero() {
                return Some(label);
            }
        }
        None
    }

    /// Source text in the system DSL; parsing it reproduces `self`.
    pub fn render(&self) -> String {
        let mut out = format!("system {} {{\n", self.name);
        if !self.params.is_empty() {
            let items: Vec<String> = self
                .params
                .iter()
                .map(|(v, b)| match b {
                    Some(b) => format!("{} = {}", self.vars.name(*v), rational_to_string(b)),
                    None => self.vars.name(*v).to_string(),
                })
                .collect();
            out.push_str(&format!("  params {};\n", items.join(" ")));
        }
        let items: Vec<String> = self
            .states
            .iter()
            .zip(&self.x0)
            .map(|(v, x)| format!("{} = {}", self.vars.name(*v), rational_to_string(x)))
            .collect();
        out.push_str(&format!("  states {};\n", items.join(" ")));
        for (v, r) in self.states.iter().zip(&self.f) {
            out.push_str(&format!(
                "  d {} = {};\n",
                self.vars.name(*v),
                rf_to_string(r, &self.vars)
            ));
        }
        for (n, h) in &self.outputs {
            out.push_str(&format!("  output {} = {};\n", n, rf_to_string(h, &self.vars)));
        }
        for a in &self.assumptions {
            out.push_str(&format!("  assume {} != 0;\n", poly_to_string(a, &self.vars)));
        }
        out.push_str("}\n");
        out
    }

    pub fn summary(&self) -> String {
        let kind = match self.kind {
            SystemKind::Polynomial => "polynomial",
            SystemKind::Rational => "rational",
        };
        format!(
            "{}: {} system, n = {}, m_y = {}, {} parameter(s)",
            self.name,
            kind,
            self.n(),
            self.m_y(),
            self.params.len()
        )
    }
}
