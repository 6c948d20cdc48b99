use std::collections::BTreeMap;

use num_rational::BigRational;

use crate::algebra::{Polynomial, RationalFunction, Role, Var};
use crate::lie::SChain;
use crate::parser::RationalSystem;

use super::buchberger::{buchberger_with_budget, GroebnerError, MonomialOrder};
use super::{tag_space, InverseError, InverseMap, InverseMethod};

/// Inverse at numeric parameter values by lex elimination in the ideal
/// `<q_k T_k - p_k, 1 - Z prod q_k>`: for each state `x_i` the basis is
/// searched for `c(T) x_i - d(T)` with `c` outside the ideal.
pub fn groebner_inverse(
    sys: &RationalSystem,
    chain: &SChain,
    m: usize,
    param_values: &BTreeMap<Var, BigRational>,
    budget: usize,
) -> Result<InverseMap, InverseError> {
    let entries: Vec<RationalFunction> = chain
        .truncated(m)
        .iter()
        .map(|s| s.eval_partial(param_values))
        .collect::<Result<_, _>>()?;
    let (inv_vars, tags) = tag_space(sys, entries.len());
    let mut vars = inv_vars.clone();
    let z = vars.fresh("Z", Role::Auxiliary);

    let mut gens: Vec<Polynomial> = entries
        .iter()
        .zip(&tags)
        .map(|(s, &t)| &(&Polynomial::var(t) * s.den()) - s.num())
        .collect();
    let den_product = entries.iter().fold(Polynomial::one(), |acc, s| &acc * s.den());
    let saturate = !den_product.is_constant();
    if saturate {
        gens.push(&Polynomial::one() - &(&Polynomial::var(z) * &den_product));
    }

    let mut r = Vec::with_capacity(sys.n());
    for &xi in &sys.states {
        let mut order_vars = Vec::new();
        if saturate {
            order_vars.push(z);
        }
        order_vars.extend(sys.states.iter().copied().filter(|&x| x != xi));
        order_vars.push(xi);
        order_vars.extend(tags.iter().copied());
        let order = MonomialOrder::lex(order_vars);
        let gb = buchberger_with_budget(&gens, &order, budget).map_err(groebner_error)?;
        if !gb.verify() {
            return Err(InverseError::Internal("basis fails the S-polynomial check".into()));
        }
        log::debug!(
            "groebner basis for {}: {} elements, {} steps",
            sys.vars.name(xi),
            gb.generators.len(),
            gb.steps
        );
        let found = gb.generators.iter().find_map(|g| {
            let clean = g.vars().iter().all(|&v| v == xi || tags.contains(&v));
            if !clean || g.degree_in(xi) != 1 {
                return None;
            }
            let c = g.coeffs_in(xi);
            match gb.contains(&c[1]) {
                Ok(false) => Some(RationalFunction::new(-&c[0], c[1].clone())),
                _ => None,
            }
        });
        match found {
            Some(ri) => r.push(ri?),
            None => {
                return Err(InverseError::NotInvertibleAtOrder {
                    m,
                    state: sys.vars.name(xi).to_string(),
                })
            }
        }
    }

    let inv = InverseMap::new(
        sys,
        inv_vars,
        tags,
        r,
        m,
        Vec::new(),
        InverseMethod::Groebner,
        Some(param_values.clone()),
    );
    inv.check_round_trip(&entries)?;
    Ok(inv)
}

fn groebner_error(e: GroebnerError) -> InverseError {
    match e {
        GroebnerError::ResourceExceeded(n) => InverseError::ResourceExceeded(n),
        other => InverseError::Internal(other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inverse::buchberger::DEFAULT_STEP_BUDGET;
    use crate::lie::build_s_chain;
    use crate::parser::{parse, parse_expr};

    #[test]
    fn michaelis_inverse() {
        let sys = parse(include_str!("../../systems/michaelis.rsys")).unwrap();
        let chain = build_s_chain(&sys, 2).unwrap();
        let inv = groebner_inverse(&sys, &chain, 2, &BTreeMap::new(), DEFAULT_STEP_BUDGET).unwrap();
        let x1 = parse_expr("2*T2/(1 - T2)", &inv.vars).unwrap();
        let x2 = parse_expr("T1", &inv.vars).unwrap();
        assert!(inv.r[0].equivalent(&x1));
        assert!(inv.r[1].equivalent(&x2));
    }

    #[test]
    fn square_is_not_invertible() {
        let sys = parse("system sq { states x1 = 1; d x1 = 0; output y = x1^2; }").unwrap();
        let chain = build_s_chain(&sys, 1).unwrap();
        assert!(matches!(
            groebner_inverse(&sys, &chain, 1, &BTreeMap::new(), DEFAULT_STEP_BUDGET),
            Err(InverseError::NotInvertibleAtOrder { m: 1, .. })
        ));
    }
}
