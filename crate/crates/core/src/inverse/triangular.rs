use std::collections::BTreeMap;

use crate::algebra::{gcd, squarefree_part, Monomial, Polynomial, RationalFunction, Role, Var, VarTable};
use crate::lie::SChain;
use crate::parser::RationalSystem;

use super::{tag_space, InverseError, InverseMap, InverseMethod};

/// Solves `T_k = s_k(x)` equation by equation, each time for a single
/// unsolved state that enters with degree one.
pub fn triangular_inverse(sys: &RationalSystem, chain: &SChain, m: usize) -> Result<InverseMap, InverseError> {
    let entries = chain.truncated(m);
    let (vars, tags) = tag_space(sys, entries.len());
    let mut solved: BTreeMap<Var, RationalFunction> = BTreeMap::new();
    let mut used = vec![false; entries.len()];
    let mut side: Vec<Polynomial> = Vec::new();

    loop {
        let mut progress = false;
        for (k, s) in entries.iter().enumerate() {
            if used[k] || solved.len() == sys.n() {
                continue;
            }
            let e = s.substitute(&solved)?;
            let eq = &(&Polynomial::var(tags[k]) * e.den()) - e.num();
            let open: Vec<Var> = sys
                .states
                .iter()
                .copied()
                .filter(|x| !solved.contains_key(x) && eq.contains_var(*x))
                .collect();
            if open.is_empty() {
                used[k] = true;
                continue;
            }
            if open.len() == 1 && eq.degree_in(open[0]) == 1 {
                let x = open[0];
                let c = eq.coeffs_in(x);
                let (b, a) = (&c[0], &c[1]);
                let cond = squarefree_part(&parameter_content(a, &vars));
                if !cond.is_constant() && !side.contains(&cond) {
                    side.push(cond);
                }
                let r = RationalFunction::new(-b, a.clone())?;
                solved = solved
                    .into_iter()
                    .map(|(v, q)| Ok((v, q.substitute(&BTreeMap::from([(x, r.clone())]))?)))
                    .collect::<Result<_, InverseError>>()?;
                solved.insert(x, r);
                used[k] = true;
                progress = true;
            }
        }
        if solved.len() == sys.n() {
            break;
        }
        if !progress {
            return Err(blocked(sys, entries, &solved, &used));
        }
    }

    let r: Vec<RationalFunction> = sys.states.iter().map(|x| solved[x].clone()).collect();
    let inv = InverseMap::new(sys, vars, tags, r, m, side, InverseMethod::Triangular, None);
    inv.check_round_trip(entries)?;
    Ok(inv)
}

/// First equation still mentioning an unsolved state, with its degree profile.
fn blocked(
    sys: &RationalSystem,
    entries: &[RationalFunction],
    solved: &BTreeMap<Var, RationalFunction>,
    used: &[bool],
) -> InverseError {
    let unsolved: Vec<Var> = sys.states.iter().copied().filter(|x| !solved.contains_key(x)).collect();
    for (k, s) in entries.iter().enumerate() {
        if used[k] {
            continue;
        }
        let Ok(e) = s.substitute(solved) else { continue };
        let profile: Vec<(String, u32)> = unsolved
            .iter()
            .map(|&x| {
                (
                    sys.vars.name(x).to_string(),
                    e.num().degree_in(x).max(e.den().degree_in(x)),
                )
            })
            .filter(|(_, d)| *d > 0)
            .collect();
        if !profile.is_empty() {
            return InverseError::NotTriangular { index: k + 1, profile };
        }
    }
    InverseError::NotTriangular {
        index: 0,
        profile: unsolved.iter().map(|&x| (sys.vars.name(x).to_string(), 0)).collect(),
    }
}

type Powers = Vec<(Var, u32)>;

/// Gcd of the coefficients of `p` viewed as a polynomial in its
/// non-parameter variables.
pub fn parameter_content(p: &Polynomial, vars: &VarTable) -> Polynomial {
    let mut groups: BTreeMap<Monomial, Polynomial> = BTreeMap::new();
    for (m, c) in p.terms() {
        let (par, rest): (Powers, Powers) = m.pairs().partition(|(v, _)| vars.role(*v) == Role::Parameter);
        groups
            .entry(Monomial::from_pairs(rest))
            .or_insert_with(Polynomial::zero)
            .add_term(Monomial::from_pairs(par), c.clone());
    }
    groups.values().fold(Polynomial::zero(), |acc, q| gcd(&acc, q))
}
