//! Acceptance criteria 1-9, one PASS/FAIL line each.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ratobs::algebra::{rf_to_string, to_f64, Polynomial, RationalFunction, Var, VarTable};
use ratobs::inverse::buchberger::DEFAULT_STEP_BUDGET;
use ratobs::inverse::{
    find_observability_index, groebner_inverse, triangular_inverse, IndexConfig, InverseError, InverseMethod,
};
use ratobs::lie::build_s_chain;
use ratobs::observer::{pole_place, GainSpec, GridSpec, Observer};
use ratobs::parser::{parse, parse_expr, parse_poly, RationalSystem};
use ratobs::pipeline::{synthesize, synthesize_source, SynthOptions, Synthesis, EXAMPLES, MICHAELIS};
use ratobs::simulate::{eigenvalues, linearize, observability_rank, performance_sim, PerformanceSystem, SimConfig};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("took {t:.2?}, limit {limit:?}"))
}

fn same(got: &RationalFunction, want: &str, vars: &VarTable) -> Result<(), String> {
    let w = parse_expr(want, vars).map_err(|e| e.to_string())?;
    ensure(got.equivalent(&w), || {
        format!("{} is not {want}", rf_to_string(got, vars))
    })
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn source(name: &str) -> &'static str {
    EXAMPLES.iter().find(|e| e.name == name).unwrap().source
}

fn no_sim() -> SynthOptions {
    SynthOptions {
        simulate: false,
        timings: false,
        ..SynthOptions::default()
    }
}

/// Parameter values the inverse was computed at, else the bound ones.
fn working_params(syn: &Synthesis) -> BTreeMap<Var, BigRational> {
    syn.obs
        .inverse
        .instance
        .clone()
        .unwrap_or_else(|| syn.sys.bound_params())
}

fn michaelis_chain() -> Outcome {
    let start = Instant::now();
    let sys = parse(MICHAELIS).map_err(|e| e.to_string())?;
    let chain = build_s_chain(&sys, 3).map_err(|e| e.to_string())?;
    let want = ["x2", "x1/(x1 + 2)", "-2*x1/(x1 + 2)^3"];
    for (s, w) in chain.entries().iter().zip(want) {
        same(s, w, &sys.vars)?;
    }
    within(Duration::from_secs(1), start)?;
    Ok(format!("s1..s3 exact in {:.2?}", start.elapsed()))
}

fn polynomial_pipeline() -> Outcome {
    let start = Instant::now();
    let syn = synthesize_source(source("polsys"), &no_sim()).map_err(|e| e.to_string())?;
    ensure(syn.obs.m_o == 2, || format!("m_o = {}", syn.obs.m_o))?;
    let inv = &syn.obs.inverse;
    let a12 = parse_poly("a12", &inv.vars).unwrap();
    ensure(inv.side_conditions == vec![a12], || {
        format!("side conditions {:?}", inv.render_side_conditions())
    })?;
    same(&inv.r[0], "T1", &inv.vars)?;
    same(&inv.r[1], "(a11*T1^3 + T2)/a12", &inv.vars)?;
    let o = &syn.observer;
    same(&o.b_o[0], "-a11*a22*xo1^3 - 3*a11*xo1^2*xo2 - a22*xo2", &o.vars)?;
    same(&o.k_o[1][0], "-3*a11*a22*xo1^2 - 6*a11*xo1*xo2", &o.vars)?;
    within(Duration::from_secs(1), start)?;
    Ok(format!(
        "m_o = 2, a12 != 0, b_o,2 and k_o,2 exact in {:.2?}",
        start.elapsed()
    ))
}

fn higher_dimension() -> Outcome {
    let start = Instant::now();
    let sys = parse(source("higher")).map_err(|e| e.to_string())?;
    let chain = build_s_chain(&sys, 3).map_err(|e| e.to_string())?;
    match triangular_inverse(&sys, &chain, 2) {
        Err(InverseError::NotTriangular { .. }) => {}
        other => return Err(format!("m = 2 gave {other:?}")),
    }
    let obs = find_observability_index(&sys, &IndexConfig::default()).map_err(|e| e.to_string())?;
    ensure(obs.m_o == 3 && obs.n_o() == 3 && obs.n_o() > sys.n(), || {
        format!("m_o = {}, n_o = {}", obs.m_o, obs.n_o())
    })?;
    let c11 = "4*a21^2";
    let c12 = "a12*a21*(a13 + a14) - 2*a12*a22";
    let c14 = "a12*a22*(a13 + a14) - 2*a12*a21*a13*a14";
    same(
        &chain.entries()[2],
        &format!("({c11})*x1 + ({c12})*x2 + {c14}"),
        &sys.vars,
    )?;
    let inv = &obs.inverse;
    let c12 = parse_poly(c12, &inv.vars).unwrap();
    let [cond] = &inv.side_conditions[..] else {
        return Err(format!("side conditions {:?}", inv.render_side_conditions()));
    };
    let ratio = |a: &Polynomial, b: &Polynomial| a.div_exact(b).is_some_and(|r| r.is_constant());
    ensure(ratio(cond, &c12) && ratio(&c12, cond), || {
        format!("side condition {:?}", inv.render_side_conditions())
    })?;
    within(Duration::from_secs(2), start)?;
    Ok(format!(
        "NotTriangular at m = 2, n_o = 3, c11 c12 c14 exact in {:.2?}",
        start.elapsed()
    ))
}

fn round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for ex in &EXAMPLES {
        let sys = parse(ex.source).map_err(|e| e.to_string())?;
        let obs = find_observability_index(&sys, &IndexConfig::default()).map_err(|e| e.to_string())?;
        let inv = &obs.inverse;
        let symbolic = obs.chain.truncated(obs.m_o).to_vec();
        let s: Vec<RationalFunction> = match &inv.instance {
            Some(p) => symbolic
                .iter()
                .map(|e| e.eval_partial(p))
                .collect::<Result<_, _>>()
                .unwrap(),
            None => symbolic,
        };
        inv.check_round_trip(&s).map_err(|e| format!("{}: {e}", ex.name))?;
        let params = inv.instance.clone().unwrap_or_else(|| sys.bound_params());
        let s: Vec<RationalFunction> = s.iter().map(|e| e.eval_partial(&params).unwrap()).collect();
        let mut hits = 0;
        while hits < 100 {
            let xi: Vec<BigRational> = (0..sys.n())
                .map(|_| q(rng.gen_range(-40..=40), rng.gen_range(1..=7)))
                .collect();
            let at = |v: Var| sys.states.iter().position(|&w| w == v).map(|k| xi[k].clone());
            let Some(tags) = s.iter().map(|e| e.eval(&at)).collect::<Option<Vec<_>>>() else {
                continue;
            };
            let Some(back) = inv.eval(&tags, &params) else {
                continue;
            };
            ensure(back == xi, || format!("{}: r(s({xi:?})) = {back:?}", ex.name))?;
            hits += 1;
        }
    }
    Ok("4 examples, symbolic and 100 exact points each".into())
}

/// Exact central difference of `b` in `coord`, step `1e-6`.
fn central_difference(b: &RationalFunction, coord: Var, at: &BTreeMap<Var, BigRational>) -> Option<BigRational> {
    let h = q(1, 1_000_000);
    let shifted = |d: &BigRational| {
        let mut p = at.clone();
        *p.get_mut(&coord).unwrap() += d;
        b.eval(&|v| p.get(&v).cloned())
    };
    let (hi, lo) = (shifted(&h)?, shifted(&-h.clone())?);
    Some((hi - lo) / (h * BigRational::from_integer(2.into())))
}

fn random_xo(o: &Observer, rng: &mut ChaCha8Rng, params: &BTreeMap<Var, BigRational>) -> BTreeMap<Var, BigRational> {
    let mut at = params.clone();
    for &c in &o.coords {
        at.insert(c, q(rng.gen_range(1..=30), rng.gen_range(1..=10)));
    }
    at
}

fn gain_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sources = EXAMPLES
        .iter()
        .map(|e| (e.name, e.source))
        .chain([("michaelis", MICHAELIS)]);
    let mut worst = 0.0f64;
    let mut notes = Vec::new();
    for (name, src) in sources {
        let syn = synthesize_source(src, &no_sim()).map_err(|e| format!("{name}: {e}"))?;
        let o = &syn.observer;
        let params = working_params(&syn);
        let last = o.n_o - o.m_y;
        let mut hits = 0;
        while hits < 100 {
            let at = random_xo(o, &mut rng, &params);
            let mut ok = true;
            for (i, b) in o.b_o.iter().enumerate() {
                for (j, &c) in o.coords[..o.m_y].iter().enumerate() {
                    let Some(fd) = central_difference(b, c, &at) else {
                        ok = false;
                        continue;
                    };
                    let Some(k) = o.k_o[last + i][j].eval(&|v| at.get(&v).cloned()) else {
                        ok = false;
                        continue;
                    };
                    let (fd, k) = (to_f64(&fd), to_f64(&k));
                    let rel = if k == 0.0 { fd.abs() } else { ((fd - k) / k).abs() };
                    worst = worst.max(rel);
                    ensure(rel < 1e-6, || format!("{name}: k_o {k} vs difference {fd}"))?;
                }
            }
            if ok {
                hits += 1;
            }
        }
        if name == "ratsys" {
            notes.push(printed_ratsys_gain(&syn, &params));
        }
    }
    Ok(format!(
        "5 observers, worst relative error {worst:.1e}; {}",
        notes.join("; ")
    ))
}

/// The printed rational-observer gain, compared without failing.
fn printed_ratsys_gain(syn: &Synthesis, params: &BTreeMap<Var, BigRational>) -> String {
    let o = &syn.observer;
    let printed = "a11^2/(1 + a12*xo1)^3 - 3*a11*a12*xo1/(1 + a12*xo1)^4 \
                   + 2*a12/(1 + a12*xo1)^3 * a11*a13*xo2/(1 + a14*xo2) \
                   - a13*a14*xo2/((1 + a14*xo2)^2*(1 + a22*xo2))";
    let printed = parse_expr(printed, &o.vars).unwrap();
    let ours = &o.k_o[o.n_o - 1][0];
    if printed.equivalent(ours) {
        return "printed ratsys k_o,2 agrees".into();
    }
    let at: BTreeMap<Var, BigRational> = params
        .iter()
        .map(|(k, v)| (*k, v.clone()))
        .chain([(o.coords[0], q(1, 1)), (o.coords[1], q(1, 2))])
        .collect();
    let val = |r: &RationalFunction| r.eval(&|v| at.get(&v).cloned()).map(|x| to_f64(&x));
    format!(
        "printed ratsys k_o,2 differs (reported, not failed): at xo = (1, 1/2) with bound parameters printed {:?}, derived {:?}",
        val(&printed).unwrap_or(f64::NAN),
        val(ours).unwrap_or(f64::NAN)
    )
}

fn desk_convergence() -> Outcome {
    let sys = parse(source("polsys")).map_err(|e| e.to_string())?;
    ensure(sys.x0 == vec![q(1, 1), q(1, 2)], || format!("x0 = {:?}", sys.x0))?;
    ensure(sys.bound_params().values().all(|v| *v == q(1, 1)), || {
        "parameters are not 1".into()
    })?;
    let opts = SynthOptions {
        gain: GainSpec::Grid(GridSpec::default()),
        sim: SimConfig {
            step: 1e-3,
            horizon: 50.0,
            record_every: 0,
            ..SimConfig::default()
        },
        xo_offset: Some(vec![0.5, -0.5]),
        timings: false,
        ..SynthOptions::default()
    };
    let syn = synthesize(&sys, &opts).map_err(|e| e.to_string())?;
    let sim = syn.report.simulation.as_ref().ok_or("no simulation")?;
    let tail = sim.tail_error.unwrap_or(f64::INFINITY);
    let matched = sim.matched_max_error.unwrap_or(f64::INFINITY);
    ensure(tail < 1e-6 && matched < 1e-6, || {
        format!("tail {tail:e}, matched {matched:e}")
    })?;
    Ok(format!(
        "gain {:?}, tail {tail:.1e}, matched {matched:.1e}",
        syn.observer.gain_f64()
    ))
}

fn linear_theory() -> Outcome {
    let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
    let c = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
    let poles = [Complex64::new(-1.0, 0.0), Complex64::new(-2.0, 0.0)];
    let k = pole_place(&a, &c, &poles).map_err(|e| e.to_string())?;
    ensure((k[0] - 3.0).abs() < 1e-12 && (k[1] - 2.0).abs() < 1e-12, || {
        format!("K = {k:?}")
    })?;
    let kc = DMatrix::from_column_slice(2, 1, k.as_slice()) * &c;
    let eig = eigenvalues(&(&a - &kc)).map_err(|e| e.to_string())?;
    for p in &poles {
        ensure(eig.iter().any(|z| (z - p).norm() < 1e-8), || {
            format!("eigenvalues {eig:?}")
        })?;
    }

    let src = "system di { states x1 = 1 x2 = -1; d x1 = x2; d x2 = 0; output y = x1; }";
    let opts = SynthOptions {
        gain: GainSpec::Explicit(vec![q(3, 1), q(2, 1)]),
        ..no_sim()
    };
    let syn = synthesize_source(src, &opts).map_err(|e| e.to_string())?;
    let ps = PerformanceSystem::new(&syn.sys, &syn.observer, &BTreeMap::new()).map_err(|e| e.to_string())?;
    let (x0, xo0) = ([1.0, -1.0], [0.0, 0.0]);
    let r = performance_sim(
        &ps,
        &x0,
        &xo0,
        &SimConfig {
            horizon: 10.0,
            ..SimConfig::default()
        },
    );
    let (e1, e2) = (x0[0] - xo0[0], x0[1] - xo0[1]);
    let closed = |t: f64| (e2 - e1) * (-t).exp() + (2.0 * e1 - e2) * (-2.0 * t).exp();
    let gap = r
        .times
        .iter()
        .zip(&r.ey)
        .map(|(&t, e)| (e[0] - closed(t)).abs())
        .fold(0.0, f64::max);
    ensure(!r.times.is_empty() && gap < 1e-6, || format!("closed-form gap {gap:e}"))?;

    let n = 2;
    let mut ap = DMatrix::zeros(2 * n, 2 * n);
    ap.view_mut((0, 0), (n, n)).copy_from(&a);
    ap.view_mut((n, 0), (n, n)).copy_from(&kc);
    ap.view_mut((n, n), (n, n)).copy_from(&(&a - &kc));
    let mut cp = DMatrix::zeros(1, 2 * n);
    cp.view_mut((0, 0), (1, n)).copy_from(&c);
    cp.view_mut((0, n), (1, n)).copy_from(&(-&c));
    let rank = observability_rank(&ap, &cp);
    ensure(rank == n, || format!("rank {rank}"))?;
    Ok(format!(
        "K = (3, 2), closed-form gap {gap:.1e}, rank {rank} of {}",
        2 * n
    ))
}

fn groebner_path() -> Outcome {
    let sys = parse(MICHAELIS).map_err(|e| e.to_string())?;
    let chain = build_s_chain(&sys, 2).map_err(|e| e.to_string())?;
    let gro = groebner_inverse(&sys, &chain, 2, &BTreeMap::new(), DEFAULT_STEP_BUDGET).map_err(|e| e.to_string())?;
    same(&gro.r[0], "2*T2/(1 - T2)", &gro.vars)?;
    same(&gro.r[1], "T1", &gro.vars)?;
    let agree = match triangular_inverse(&sys, &chain, 2) {
        Ok(tri) => {
            ensure(tri.r.iter().zip(&gro.r).all(|(a, b)| a.equivalent(b)), || {
                "paths disagree".into()
            })?;
            "triangular agrees"
        }
        Err(_) => "triangular declines",
    };
    let mut bases = 1;
    for ex in &EXAMPLES {
        let sys = parse(ex.source).map_err(|e| e.to_string())?;
        let obs = find_observability_index(&sys, &IndexConfig::default()).map_err(|e| e.to_string())?;
        let params = obs.inverse.instance.clone().unwrap_or_else(|| sys.bound_params());
        match groebner_inverse(&sys, &obs.chain, obs.m_o, &params, DEFAULT_STEP_BUDGET) {
            Ok(gro) => {
                if obs.inverse.method == InverseMethod::Triangular {
                    let points = rng_points(&sys, obs.inverse.n_tags());
                    for t in points {
                        ensure(gro.eval(&t, &params) == obs.inverse.eval(&t, &params), || {
                            format!("{}: paths disagree at T = {t:?}", ex.name)
                        })?;
                    }
                }
                bases += 1;
            }
            Err(e) if e.is_resource() => {}
            Err(e) => return Err(format!("{}: {e}", ex.name)),
        }
    }
    Ok(format!(
        "Michaelis x1 = 2*T2/(1 - T2), {agree}; {bases} inverses with self-checked bases"
    ))
}

fn rng_points(sys: &RationalSystem, count: usize) -> Vec<Vec<BigRational>> {
    let mut rng = ChaCha8Rng::seed_from_u64(8 + sys.n() as u64);
    (0..20)
        .map(|_| {
            (0..count)
                .map(|_| q(rng.gen_range(-30..=30), rng.gen_range(1..=7)))
                .collect()
        })
        .collect()
}

fn zero_eigenvalue() -> Outcome {
    let sys = parse(source("polsys")).map_err(|e| e.to_string())?;
    let params = sys.bound_params();
    let f: Vec<RationalFunction> = sys.f.iter().map(|fi| fi.eval_partial(&params).unwrap()).collect();
    let name = |v: Var| sys.vars.name(v).to_string();
    let j = linearize(&f, &sys.states, &[0.0, 0.0], &name).map_err(|e| e.to_string())?;
    let eig = eigenvalues(&j).map_err(|e| e.to_string())?;
    let zeros = eig.iter().filter(|z| z.norm() < 1e-10).count();
    ensure(zeros == 1, || format!("eigenvalues {eig:?}"))?;
    Ok(format!(
        "eigenvalues {:?}",
        eig.iter().map(|z| z.re).collect::<Vec<_>>()
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("Lie-chain fidelity", michaelis_chain),
        ("polynomial pipeline", polynomial_pipeline),
        ("higher-dimensional observer", higher_dimension),
        ("round trip", round_trip),
        ("derivative consistency", gain_oracle),
        ("desk-scale convergence", desk_convergence),
        ("linear theory", linear_theory),
        ("Groebner path", groebner_path),
        ("linearization", zero_eigenvalue),
    ];
    let mut failed = Vec::new();
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let t = start.elapsed();
        match &outcome {
            Ok(detail) => println!("criterion {}: PASS {name} [{t:.2?}] {detail}", k + 1),
            Err(why) => {
                println!("criterion {}: FAIL {name} [{t:.2?}] {why}", k + 1);
                failed.push(k + 1);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 9 criteria pass");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
