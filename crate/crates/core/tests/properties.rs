use std::collections::BTreeMap;

use num_rational::BigRational;
use proptest::prelude::*;
use ratobs::algebra::{gcd, rf_to_string, to_f64, Monomial, Polynomial, RationalFunction, Role, Var, VarTable};
use ratobs::inverse::{buchberger_with_budget, find_observability_index, GroebnerError, IndexConfig, MonomialOrder};
use ratobs::parser::{parse, parse_expr};
use ratobs::pipeline::{EXAMPLES, MICHAELIS};

fn table() -> (VarTable, Vec<Var>) {
    let mut t = VarTable::new();
    let v = ["x1", "x2", "x3"]
        .iter()
        .map(|n| t.push(n, Role::State).unwrap())
        .collect();
    (t, v)
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// Up to `terms` terms of degree at most 2 per variable.
fn poly_with(vars: Vec<Var>, terms: usize) -> impl Strategy<Value = Polynomial> {
    prop::collection::vec((-6i64..=6, 1i64..=4, prop::collection::vec(0u32..=2, 3)), 0..=terms).prop_map(move |terms| {
        Polynomial::from_terms(terms.into_iter().map(|(n, d, e)| {
            let m = Monomial::from_pairs(vars.iter().copied().zip(e));
            (m, q(n, d))
        }))
    })
}

fn poly(vars: Vec<Var>) -> impl Strategy<Value = Polynomial> {
    poly_with(vars, 4)
}

fn nonzero_poly(vars: Vec<Var>) -> impl Strategy<Value = Polynomial> {
    poly(vars).prop_filter("nonzero", |p| !p.is_zero())
}

fn rf_with(terms: usize) -> impl Strategy<Value = RationalFunction> {
    let (_, v) = table();
    (
        poly_with(v.clone(), terms),
        poly_with(v, terms).prop_filter("nonzero", |p| !p.is_zero()),
    )
        .prop_map(|(n, d)| RationalFunction::new(n, d).unwrap())
}

fn rf() -> impl Strategy<Value = RationalFunction> {
    rf_with(4)
}

/// Smaller operands for properties that square denominators twice; the
/// subresultant GCD is exact but slow on large shared factors.
fn small_rf() -> impl Strategy<Value = RationalFunction> {
    rf_with(3)
}

fn point() -> impl Strategy<Value = Vec<BigRational>> {
    prop::collection::vec((-20i64..=20, 1i64..=5).prop_map(|(n, d)| q(n, d)), 3)
}

fn eval_at(r: &RationalFunction, vars: &[Var], x: &[BigRational]) -> Option<BigRational> {
    r.eval(&|v| vars.iter().position(|&w| w == v).map(|k| x[k].clone()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn field_axioms(a in rf(), b in rf(), c in rf()) {
        prop_assert_eq!(a.add(&b), b.add(&a));
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        prop_assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
        prop_assert!(a.sub(&a).is_zero());
        if !a.is_zero() {
            prop_assert_eq!(a.mul(&a.recip().unwrap()), RationalFunction::one());
        }
    }

    #[test]
    fn normal_form_is_idempotent(a in rf()) {
        let again = RationalFunction::new(a.num().clone(), a.den().clone()).unwrap();
        prop_assert_eq!(&again, &a);
        prop_assert!(a.den().leading_grevlex().is_none_or(|(_, c)| *c == q(1, 1)));
    }

    #[test]
    fn gcd_keeps_common_factor(a in nonzero_poly(table().1), b in nonzero_poly(table().1), c in nonzero_poly(table().1)) {
        let (ac, bc) = (&a * &c, &b * &c);
        let g = gcd(&ac, &bc);
        prop_assert!(g.div_exact(&c).is_some(), "{c:?} does not divide {g:?}");
        prop_assert!(ac.div_exact(&g).is_some() && bc.div_exact(&g).is_some());
    }

    #[test]
    fn mixed_partials_commute(a in small_rf(), i in 0usize..3, j in 0usize..3) {
        let (_, v) = table();
        prop_assert_eq!(a.partial(v[i]).partial(v[j]), a.partial(v[j]).partial(v[i]));
    }

    #[test]
    fn partial_matches_finite_difference(a in rf(), x in point(), i in 0usize..3) {
        let (_, v) = table();
        let at = |x: &[f64]| {
            let xs: Vec<BigRational> = x.iter().map(|&t| ratobs::algebra::from_f64(t).unwrap()).collect();
            eval_at(&a, &v, &xs).map(|r| to_f64(&r))
        };
        let den = eval_at(&RationalFunction::from_poly(a.den().clone()), &v, &x).map(|d| to_f64(&d));
        prop_assume!(den.is_some_and(|d| d.abs() > 0.1));
        let xf: Vec<f64> = x.iter().map(to_f64).collect();
        let h = 1e-4;
        let (mut lo, mut hi) = (xf.clone(), xf.clone());
        lo[i] -= h;
        hi[i] += h;
        let (Some(fl), Some(fh)) = (at(&lo), at(&hi)) else { return Err(TestCaseError::reject("pole")); };
        let fd = (fh - fl) / (2.0 * h);
        let exact = to_f64(&eval_at(&a.partial(v[i]), &v, &x).unwrap());
        let scale = 1.0 + exact.abs() + fh.abs() + fl.abs();
        prop_assert!((fd - exact).abs() <= 1e-4 * scale, "fd {fd} vs {exact}");
    }

    #[test]
    fn render_then_parse_is_identity(a in rf()) {
        let (t, _) = table();
        let text = rf_to_string(&a, &t);
        prop_assert_eq!(parse_expr(&text, &t).unwrap(), a);
    }

    #[test]
    fn substitution_commutes_with_evaluation(a in small_rf(), g in small_rf(), x in point()) {
        let (_, v) = table();
        let bind: BTreeMap<Var, RationalFunction> = [(v[0], g.clone())].into_iter().collect();
        let Ok(composed) = a.substitute(&bind) else { return Err(TestCaseError::reject("pole")); };
        let Some(gx) = eval_at(&g, &v, &x) else { return Err(TestCaseError::reject("pole")); };
        let mut y = x.clone();
        y[0] = gx;
        let (Some(lhs), Some(rhs)) = (eval_at(&composed, &v, &x), eval_at(&a, &v, &y)) else {
            return Err(TestCaseError::reject("pole"));
        };
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn groebner_bases_pass_self_check(gens in prop::collection::vec(nonzero_poly(table().1), 1..=3)) {
        let (_, v) = table();
        for order in [MonomialOrder::grevlex(v.clone()), MonomialOrder::lex(v.clone())] {
            match buchberger_with_budget(&gens, &order, 20_000) {
                Ok(gb) => {
                    prop_assert!(gb.verify());
                    for g in &gens {
                        prop_assert!(gb.contains(g).unwrap());
                    }
                }
                Err(GroebnerError::ResourceExceeded(_)) => {}
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
        }
    }

    #[test]
    fn parser_never_panics(text in ".{0,120}") {
        let _ = parse(&text);
    }

    #[test]
    fn parser_never_panics_on_token_soup(
        toks in prop::collection::vec(
            prop::sample::select(vec![
                "system", "s", "{", "}", "states", "params", "x1", "x2", "=", "d", ";", "output", "y",
                "assume", "!=", "+", "-", "*", "/", "^", "(", ")", "1", "2/3", "0.5", "0", "^2", ",",
            ]),
            0..60,
        )
    ) {
        let _ = parse(&toks.join(" "));
    }
}

/// `r(s(xi)) = xi` exactly at random rational points, for every built-in
/// system with its bound parameters.
#[test]
fn inverse_round_trip_at_random_points() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let sources = EXAMPLES.iter().map(|e| e.source).chain([MICHAELIS]);
    for src in sources {
        let sys = parse(src).unwrap();
        let obs = find_observability_index(&sys, &IndexConfig::default()).unwrap();
        let params = obs.inverse.instance.clone().unwrap_or_else(|| sys.bound_params());
        let s: Vec<RationalFunction> = obs
            .chain
            .truncated(obs.m_o)
            .iter()
            .map(|e| e.eval_partial(&params).unwrap())
            .collect();
        let mut hits = 0;
        while hits < 100 {
            let xi: Vec<BigRational> = (0..sys.n())
                .map(|_| q(rng.gen_range(-30..=30), rng.gen_range(1..=6)))
                .collect();
            let at = |v: Var| sys.states.iter().position(|&w| w == v).map(|k| xi[k].clone());
            let Some(tags) = s.iter().map(|e| e.eval(&at)).collect::<Option<Vec<_>>>() else {
                continue;
            };
            let Some(back) = obs.inverse.eval(&tags, &params) else {
                continue;
            };
            assert_eq!(back, xi, "{}", sys.name);
            hits += 1;
        }
    }
}

/// Every shipped system survives `parse . render` structurally.
#[test]
fn shipped_systems_round_trip() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("systems");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "rsys") {
            let sys = parse(&std::fs::read_to_string(&path).unwrap()).unwrap();
            assert_eq!(parse(&sys.render()).unwrap(), sys, "{}", path.display());
            count += 1;
        }
    }
    assert_eq!(count, 5);
}
