//! Inverses of the chain map `x -> s(x)`: a symbolic triangular solver, a
//! Groebner elimination at numeric parameters, the observability-index
//! search that combines them, and the Jacobi determinant test.

pub mod buchberger;
mod groebner;
mod jacobi;
mod triangular;

use std::collections::BTreeMap;

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{
    poly_to_string, rational_to_string, rf_to_string, AlgebraError, Polynomial, RationalFunction, Role, Var, VarTable,
};
use crate::lie::{LieError, SChain, DEFAULT_TERM_LIMIT};
use crate::parser::{RationalSystem, SystemKind};

pub use buchberger::{buchberger, buchberger_with_budget, GroebnerBasis, GroebnerError, MonomialOrder, OrderKind};
pub use groebner::groebner_inverse;
pub use jacobi::{determinant, jacobi_condition, JacobiStatus, JacobiVerdict};
pub use triangular::{parameter_content, triangular_inverse};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum InverseError {
    #[error("not triangular: equation {index} has degree profile {profile:?}")]
    NotTriangular { index: usize, profile: Vec<(String, u32)> },
    #[error("no rational expression for {state} from the first {m} chain blocks")]
    NotInvertibleAtOrder { m: usize, state: String },
    #[error("no inverse found up to order {0} (this does not prove unobservability)")]
    NotObservableUpTo(usize),
    #[error("resource budget of {0} reduction steps exceeded")]
    ResourceExceeded(usize),
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("map has a denominator depending on the state")]
    NonPolynomialMap,
    #[error("no admissible parameter values found")]
    NoAdmissibleParameters,
    #[error("internal check failed: {0}")]
    Internal(String),
}

impl InverseError {
    pub fn is_resource(&self) -> bool {
        matches!(
            self,
            InverseError::ResourceExceeded(_) | InverseError::Lie(LieError::TermLimit { .. })
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InverseMethod {
    Triangular,
    Groebner,
}

/// `x_i = r_i(T)` with `T_k` standing for `s_k(x)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InverseMap {
    /// System variables followed by the tags.
    pub vars: VarTable,
    pub tags: Vec<Var>,
    pub r: Vec<RationalFunction>,
    pub m_used: usize,
    pub side_conditions: Vec<Polynomial>,
    pub kind: SystemKind,
    pub method: InverseMethod,
    /// Parameter values the map was computed at, for the numeric path.
    pub instance: Option<BTreeMap<Var, BigRational>>,
}

/// System table extended by tags `T1..T{count}`. Deterministic, so every
/// stage that calls it agrees on the tag indices.
pub fn tag_space(sys: &RationalSystem, count: usize) -> (VarTable, Vec<Var>) {
    let mut vars = sys.vars.clone();
    let tags = (1..=count).map(|k| vars.fresh(&format!("T{k}"), Role::Tag)).collect();
    (vars, tags)
}

impl InverseMap {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn new(
        sys: &RationalSystem,
        vars: VarTable,
        tags: Vec<Var>,
        r: Vec<RationalFunction>,
        m_used: usize,
        side_conditions: Vec<Polynomial>,
        method: InverseMethod,
        instance: Option<BTreeMap<Var, BigRational>>,
    ) -> Self {
        let refs: Vec<&RationalFunction> = r.iter().collect();
        let kind = SystemKind::of(&refs, &vars);
        debug_assert!(sys.vars.is_prefix_of(&vars));
        Self {
            vars,
            tags,
            r,
            m_used,
            side_conditions,
            kind,
            method,
            instance,
        }
    }

    /// `r_i(s(x)) = x_i` symbolically, for the chain entries `s`.
    pub fn check_round_trip(&self, s: &[RationalFunction]) -> Result<(), InverseError> {
        let bind: BTreeMap<Var, RationalFunction> = self.tags.iter().copied().zip(s.iter().cloned()).collect();
        for (i, ri) in self.r.iter().enumerate() {
            let back = ri.substitute(&bind)?;
            let expected = self.state_var(i);
            if !back.equivalent(&RationalFunction::var(expected)) {
                return Err(InverseError::Internal(format!(
                    "round trip for {} gives {}",
                    self.vars.name(expected),
                    rf_to_string(&back, &self.vars)
                )));
            }
        }
        Ok(())
    }

    fn state_var(&self, i: usize) -> Var {
        self.vars.with_role(Role::State)[i]
    }

    pub fn n_tags(&self) -> usize {
        self.tags.len()
    }

    /// Exact value of `r` at tag values (and the instance or given parameters).
    pub fn eval(&self, tags: &[BigRational], params: &BTreeMap<Var, BigRational>) -> Option<Vec<BigRational>> {
        let mut at: BTreeMap<Var, BigRational> = self.tags.iter().copied().zip(tags.iter().cloned()).collect();
        at.extend(params.iter().map(|(k, v)| (*k, v.clone())));
        self.r.iter().map(|ri| ri.eval(&|v| at.get(&v).cloned())).collect()
    }

    pub fn render(&self) -> Vec<String> {
        self.vars
            .with_role(Role::State)
            .iter()
            .zip(&self.r)
            .map(|(x, ri)| format!("{} = {}", self.vars.name(*x), rf_to_string(ri, &self.vars)))
            .collect()
    }

    pub fn render_side_conditions(&self) -> Vec<String> {
        self.side_conditions
            .iter()
            .map(|p| format!("{} != 0", poly_to_string(p, &self.vars)))
            .collect()
    }

    pub fn render_instance(&self) -> Option<BTreeMap<String, String>> {
        self.instance.as_ref().map(|m| {
            m.iter()
                .map(|(v, q)| (self.vars.name(*v).to_string(), rational_to_string(q)))
                .collect()
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attempt {
    pub m: usize,
    pub method: String,
    pub outcome: String,
}

#[derive(Clone, Debug)]
pub struct Observability {
    pub m_o: usize,
    pub chain: SChain,
    pub inverse: InverseMap,
    pub attempts: Vec<Attempt>,
}

impl Observability {
    pub fn n_o(&self) -> usize {
        self.m_o * self.chain.m_y()
    }
}

#[derive(Clone, Debug)]
pub struct IndexConfig {
    /// Defaults to `max(2n, n + 2)`.
    pub m_max: Option<usize>,
    pub seed: u64,
    pub step_budget: usize,
    pub term_limit: usize,
    pub trials: usize,
}

impl Default for IndexConfig {
    fn default() -> Self {
        Self {
            m_max: None,
            seed: 0,
            step_budget: buchberger::DEFAULT_STEP_BUDGET,
            term_limit: DEFAULT_TERM_LIMIT,
            trials: 3,
        }
    }
}

pub fn default_m_max(n: usize) -> usize {
    (2 * n).max(n + 2)
}

/// Smallest order with an inverse: the triangular solver first, then
/// Groebner elimination at random admissible parameter values.
pub fn find_observability_index(sys: &RationalSystem, cfg: &IndexConfig) -> Result<Observability, InverseError> {
    let m_max = cfg.m_max.unwrap_or_else(|| default_m_max(sys.n()));
    let mut chain = SChain::with_term_limit(sys, cfg.term_limit);
    let mut attempts = Vec::new();
    for m in 1..=m_max {
        chain.extend_to(m, sys)?;
        if m * sys.m_y() < sys.n() {
            attempts.push(Attempt {
                m,
                method: "none".into(),
                outcome: "fewer chain entries than states".into(),
            });
            continue;
        }
        match triangular_inverse(sys, &chain, m) {
            Ok(inverse) => {
                attempts.push(Attempt {
                    m,
                    method: "triangular".into(),
                    outcome: "success".into(),
                });
                return Ok(Observability {
                    m_o: m,
                    chain,
                    inverse,
                    attempts,
                });
            }
            Err(e @ InverseError::NotTriangular { .. }) => attempts.push(Attempt {
                m,
                method: "triangular".into(),
                outcome: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
        match groebner_vote(sys, &chain, m, cfg) {
            Ok(inverse) => {
                attempts.push(Attempt {
                    m,
                    method: "groebner".into(),
                    outcome: "success".into(),
                });
                return Ok(Observability {
                    m_o: m,
                    chain,
                    inverse,
                    attempts,
                });
            }
            Err(e @ InverseError::NotInvertibleAtOrder { .. }) => attempts.push(Attempt {
                m,
                method: "groebner".into(),
                outcome: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    Err(InverseError::NotObservableUpTo(m_max))
}

/// Groebner inverse at `cfg.trials` random instances; succeeds on a strict
/// majority. Returns the map at the file's bindings when they cover every
/// parameter, otherwise the first successful instance.
fn groebner_vote(
    sys: &RationalSystem,
    chain: &SChain,
    m: usize,
    cfg: &IndexConfig,
) -> Result<InverseMap, InverseError> {
    if sys.params.is_empty() {
        return groebner_inverse(sys, chain, m, &BTreeMap::new(), cfg.step_budget);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(m as u64));
    let instances: Vec<BTreeMap<Var, BigRational>> = (0..cfg.trials)
        .map(|_| random_admissible(sys, chain.truncated(m), &mut rng).ok_or(InverseError::NoAdmissibleParameters))
        .collect::<Result<_, _>>()?;
    let results: Vec<Result<InverseMap, InverseError>> = instances
        .par_iter()
        .map(|p| groebner_inverse(sys, chain, m, p, cfg.step_budget))
        .collect();
    let wins = results.iter().filter(|r| r.is_ok()).count();
    log::info!("groebner at m = {m}: {wins}/{} trials invertible", results.len());
    if 2 * wins > results.len() {
        let bound = sys.bound_params();
        if sys.unbound_params().is_empty() && admissible(sys, chain.truncated(m), &bound) {
            if let Ok(inv) = groebner_inverse(sys, chain, m, &bound, cfg.step_budget) {
                return Ok(inv);
            }
        }
        return results
            .into_iter()
            .find(|r| r.is_ok())
            .expect("majority implies a success");
    }
    if let Some(e) = results
        .iter()
        .find_map(|r| r.as_ref().err().filter(|e| e.is_resource()))
    {
        return Err(e.clone());
    }
    results
        .into_iter()
        .find_map(|r| r.err())
        .map_or(Err(InverseError::NotObservableUpTo(m)), Err)
}

fn admissible(sys: &RationalSystem, entries: &[RationalFunction], values: &BTreeMap<Var, BigRational>) -> bool {
    sys.instantiate(values).is_ok() && entries.iter().all(|s| s.eval_partial(values).is_ok())
}

/// Random rationals in `[-10, 10]`, nonzero, avoiding zeros of the
/// assumptions and of every denominator in `entries`.
pub fn random_admissible(
    sys: &RationalSystem,
    entries: &[RationalFunction],
    rng: &mut impl Rng,
) -> Option<BTreeMap<Var, BigRational>> {
    for _ in 0..100 {
        let values: BTreeMap<Var, BigRational> = sys
            .param_vars()
            .into_iter()
            .map(|v| {
                let q: i64 = rng.gen_range(1..=7);
                let mut p: i64 = rng.gen_range(-10 * q..=10 * q);
                if p == 0 {
                    p = q;
                }
                (v, BigRational::new(p.into(), q.into()))
            })
            .collect();
        if admissible(sys, entries, &values) {
            return Some(values);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::build_s_chain;
    use crate::parser::{parse, parse_expr, parse_poly};

    fn sys(src: &str) -> RationalSystem {
        parse(src).unwrap()
    }

    fn polsys() -> RationalSystem {
        sys(include_str!("../../systems/polsys.rsys"))
    }

    fn higher() -> RationalSystem {
        sys(include_str!("../../systems/higher.rsys"))
    }

    #[test]
    fn polynomial_example_triangular() {
        let s = polsys();
        let chain = build_s_chain(&s, 2).unwrap();
        let inv = triangular_inverse(&s, &chain, 2).unwrap();
        assert!(inv.r[0].equivalent(&parse_expr("T1", &inv.vars).unwrap()));
        let x2 = parse_expr("a11/a12*T1^3 + 1/a12*T2", &inv.vars).unwrap();
        assert!(inv.r[1].equivalent(&x2));
        assert_eq!(inv.side_conditions, vec![parse_poly("a12", &inv.vars).unwrap()]);
        assert_eq!(inv.kind, SystemKind::Polynomial);
    }

    #[test]
    fn identity_output() {
        let s = sys("system id { states x1 = 1 x2 = 2; d x1 = x2; d x2 = -x1; output y1 = x1; output y2 = x2; }");
        let chain = build_s_chain(&s, 1).unwrap();
        let inv = triangular_inverse(&s, &chain, 1).unwrap();
        assert!(inv.side_conditions.is_empty());
        assert_eq!(inv.r[0], RationalFunction::var(inv.tags[0]));
        assert_eq!(inv.r[1], RationalFunction::var(inv.tags[1]));
    }

    #[test]
    fn higher_example_needs_three_blocks() {
        let s = higher();
        let chain = build_s_chain(&s, 3).unwrap();
        match triangular_inverse(&s, &chain, 2) {
            Err(InverseError::NotTriangular { index, profile }) => {
                assert_eq!(index, 2);
                assert_eq!(profile, vec![("x2".to_string(), 2)]);
            }
            other => panic!("{other:?}"),
        }
        let inv = triangular_inverse(&s, &chain, 3).unwrap();
        let c12 = parse_poly("a12*(a21*(a13 + a14) - 2*a22)", &inv.vars).unwrap();
        assert_eq!(inv.side_conditions, vec![c12.primitive()]);
    }

    #[test]
    fn index_search() {
        let p = find_observability_index(&polsys(), &IndexConfig::default()).unwrap();
        assert_eq!((p.m_o, p.n_o()), (2, 2));
        let h = find_observability_index(&higher(), &IndexConfig::default()).unwrap();
        assert_eq!((h.m_o, h.n_o()), (3, 3));
        let mm = find_observability_index(
            &sys(include_str!("../../systems/michaelis.rsys")),
            &IndexConfig::default(),
        )
        .unwrap();
        assert_eq!(mm.m_o, 2);
    }

    #[test]
    fn unobservable_up_to_bound() {
        let s = sys("system u { states x1 = 1 x2 = 1; d x1 = 0; d x2 = 0; output y = x1; }");
        let cfg = IndexConfig {
            m_max: Some(3),
            ..IndexConfig::default()
        };
        assert_eq!(
            find_observability_index(&s, &cfg).unwrap_err(),
            InverseError::NotObservableUpTo(3)
        );
    }

    #[test]
    fn solvers_agree_on_polynomial_example() {
        let s = polsys();
        let chain = build_s_chain(&s, 2).unwrap();
        let tri = triangular_inverse(&s, &chain, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let params = random_admissible(&s, chain.entries(), &mut rng).unwrap();
        let gro = groebner_inverse(&s, &chain, 2, &params, buchberger::DEFAULT_STEP_BUDGET).unwrap();
        for _ in 0..50 {
            let t: Vec<BigRational> = (0..2)
                .map(|_| BigRational::new(rng.gen_range(-50..=50).into(), rng.gen_range(1..=9).into()))
                .collect();
            assert_eq!(tri.eval(&t, &params), gro.eval(&t, &params));
        }
    }
}
