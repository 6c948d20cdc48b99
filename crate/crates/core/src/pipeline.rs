//! The synthesis procedure end to end: observability index, inverse,
//! realization, output injection, gain choice, local stability and
//! simulation of the performance system, collected in a report.

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{parse_rational, rational_to_string, rf_to_string, to_f64, RationalFunction, Var};
use crate::inverse::{
    find_observability_index, jacobi_condition, Attempt, IndexConfig, InverseError, InverseMethod, JacobiStatus,
    Observability,
};
use crate::observer::{
    default_poles, gain_search, make_observer, pole_place, rationalize, structural_matrix, zero_gain, GainSpec,
    GridSpec, Observer, ObserverError,
};
use crate::parser::{parse, ParseError, RationalSystem, SystemKind};
use crate::realization::{realization_selfcheck, realize, OutputRealization, RealizationError};
use crate::simulate::{
    eigenvalues, integrate, linearize, performance_sim, CompiledField, Field, PerformanceSystem, SimConfig, SimError,
    SimResult, SimStatus,
};

/// Largest `|f|` accepted as an equilibrium.
const EQUILIBRIUM_TOL: f64 = 1e-10;
const NEWTON_ITERATIONS: usize = 60;
/// Horizon of the plant run used by the realization self-check.
const SELFCHECK_HORIZON: f64 = 2.0;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Inverse(#[from] InverseError),
    #[error(transparent)]
    Realization(#[from] RealizationError),
    #[error(transparent)]
    Observer(#[from] ObserverError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{0}")]
    Invalid(String),
}

impl PipelineError {
    /// 1 input, 2 not observable, 3 resource budget, 4 simulation.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Parse(_) | PipelineError::Invalid(_) => 1,
            PipelineError::Inverse(e) if e.is_resource() => 3,
            PipelineError::Inverse(_) | PipelineError::Realization(_) => 2,
            PipelineError::Observer(ObserverError::NoStableCandidate | ObserverError::Sim(_)) => 4,
            PipelineError::Observer(_) => 1,
            PipelineError::Sim(_) => 4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SynthOptions {
    pub index: IndexConfig,
    pub gain: GainSpec,
    pub sim: SimConfig,
    /// Observer start minus `s(x0)`; alternating `+0.5, -0.5, ...` if unset.
    pub xo_offset: Option<Vec<f64>>,
    pub simulate: bool,
    pub timings: bool,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            index: IndexConfig::default(),
            gain: GainSpec::Auto,
            sim: SimConfig::default(),
            xo_offset: None,
            simulate: true,
            timings: true,
        }
    }
}

pub fn default_offset(n_o: usize) -> Vec<f64> {
    (0..n_o).map(|k| if k % 2 == 0 { 0.5 } else { -0.5 }).collect()
}

/// `[re, im]`.
pub type Pair = [f64; 2];

fn pairs(z: &[Complex64]) -> Vec<Pair> {
    z.iter().map(|z| [z.re, z.im]).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSection {
    pub name: String,
    pub kind: SystemKind,
    pub n: usize,
    pub m_y: usize,
    pub states: Vec<String>,
    pub outputs: Vec<String>,
    /// Bound value, or `None` for a symbolic parameter.
    pub params: BTreeMap<String, Option<String>>,
    pub assumptions: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSection {
    pub m_o: usize,
    pub n_o: usize,
    pub entries: Vec<String>,
    pub attempts: Vec<Attempt>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InverseSection {
    pub method: InverseMethod,
    pub kind: SystemKind,
    pub map: Vec<String>,
    pub side_conditions: Vec<String>,
    /// Parameter values of a Groebner instance.
    pub instance: Option<BTreeMap<String, String>>,
    pub round_trip: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JacobiSection {
    pub status: JacobiStatus,
    pub det: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizationSection {
    pub kind: SystemKind,
    pub f_or: Vec<String>,
    pub b_o: Vec<String>,
    pub x0_hat: Vec<String>,
    pub c_o: Vec<Vec<i64>>,
    /// Largest relative deviation between `d/dt s(x(t))` and `f_or(s(x(t)))`.
    pub selfcheck: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
    pub candidates: usize,
    pub finite: usize,
    pub index: usize,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObserverSection {
    pub kind: SystemKind,
    pub f_o: Vec<String>,
    pub k_o: Vec<String>,
    /// Exact `n_o x m_y` constant gain.
    pub gain: Vec<Vec<String>>,
    pub gain_mode: String,
    pub poles: Option<Vec<Pair>>,
    pub grid: Option<GridSummary>,
    pub injection_consistent: bool,
    pub k_o_consistent: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilitySection {
    /// `equilibrium` or `initial-state`.
    pub point_kind: String,
    pub point: Vec<f64>,
    pub observer_point: Vec<f64>,
    pub system_eigenvalues: Vec<Pair>,
    pub error_eigenvalues: Vec<Pair>,
    pub locally_stable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationSection {
    pub params: BTreeMap<String, String>,
    pub step: f64,
    pub horizon: f64,
    pub x0: Vec<f64>,
    pub xo0: Vec<f64>,
    /// `sup |e_y|` with the observer started at `s(x0)`.
    pub matched_max_error: Option<f64>,
    #[serde(flatten)]
    pub status: SimStatus,
    pub tail_error: Option<f64>,
    pub max_error: Option<f64>,
    /// Tail error with `K = 0` and `k_o` dropped.
    pub baseline_tail_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisReport {
    pub seed: u64,
    pub system: SystemSection,
    pub chain: ChainSection,
    pub inverse: InverseSection,
    pub jacobi: JacobiSection,
    pub realization: RealizationSection,
    pub observer: ObserverSection,
    pub stability: Option<StabilitySection>,
    pub simulation: Option<SimulationSection>,
    /// Seconds per stage; empty when disabled.
    pub timings: BTreeMap<String, f64>,
}

impl SynthesisReport {
    /// Exact gain rows, as stored in the report.
    pub fn gain(&self) -> Result<Vec<Vec<BigRational>>, PipelineError> {
        self.observer
            .gain
            .iter()
            .map(|row| {
                row.iter()
                    .map(|g| parse_rational(g).ok_or_else(|| PipelineError::Invalid(format!("bad gain entry `{g}`"))))
                    .collect()
            })
            .collect()
    }
}

/// Every intermediate object of one synthesis run.
pub struct Synthesis {
    pub sys: RationalSystem,
    pub obs: Observability,
    pub real: OutputRealization,
    pub observer: Observer,
    /// Numeric values of every parameter, if available.
    pub params: Option<BTreeMap<Var, BigRational>>,
    pub mismatched: Option<SimResult>,
    pub report: SynthesisReport,
}

struct Clock {
    on: bool,
    start: Instant,
    laps: BTreeMap<String, f64>,
}

impl Clock {
    fn new(on: bool) -> Self {
        Self {
            on,
            start: Instant::now(),
            laps: BTreeMap::new(),
        }
    }

    fn lap(&mut self, stage: &str) {
        if self.on {
            self.laps.insert(stage.to_string(), self.start.elapsed().as_secs_f64());
        }
        self.start = Instant::now();
    }
}

pub fn synthesize_source(text: &str, opts: &SynthOptions) -> Result<Synthesis, PipelineError> {
    let sys = parse(text)?;
    synthesize(&sys, opts)
}

pub fn synthesize(sys: &RationalSystem, opts: &SynthOptions) -> Result<Synthesis, PipelineError> {
    let mut clock = Clock::new(opts.timings);
    let obs = find_observability_index(sys, &opts.index)?;
    clock.lap("observability");

    let real = realize(sys, &obs)?;
    let round_trip = obs.inverse.check_round_trip(&real.s).is_ok();
    let jacobi = jacobi_section(sys, &real);
    clock.lap("realization");

    let params = working_params(sys, &obs);
    let names: Vec<String> = sys.outputs.iter().map(|(n, _)| n.clone()).collect();
    let template = make_observer(&real, &names, zero_gain(real.n_o, real.m_y))?;
    let numeric = match &params {
        Some(p) => Some(Numeric::new(sys, &real, &template, p, opts)?),
        None => None,
    };
    let choice = choose_gain(&real, &opts.gain, numeric.as_ref(), &opts.sim)?;
    let observer = make_observer(&real, &names, choice.gain.clone())?;
    clock.lap("observer");

    let stability = match &numeric {
        Some(num) => Some(num.stability(&real, &observer)?),
        None => None,
    };
    clock.lap("stability");

    let (simulation, mismatched, selfcheck) = match (&numeric, &params) {
        (Some(num), Some(p)) if opts.simulate => {
            let (section, run) = num.simulate(sys, &observer, p, &opts.sim)?;
            let selfcheck = num.selfcheck(sys, &real, p, &opts.sim)?;
            (Some(section), Some(run), selfcheck)
        }
        _ => (None, None, None),
    };
    clock.lap("simulation");

    let report = SynthesisReport {
        seed: opts.index.seed,
        system: system_section(sys),
        chain: ChainSection {
            m_o: obs.m_o,
            n_o: obs.n_o(),
            entries: obs.chain.render(sys, obs.m_o),
            attempts: obs.attempts.clone(),
        },
        inverse: InverseSection {
            method: obs.inverse.method,
            kind: obs.inverse.kind,
            map: obs.inverse.render(),
            side_conditions: obs.inverse.render_side_conditions(),
            instance: obs.inverse.render_instance(),
            round_trip,
        },
        jacobi,
        realization: RealizationSection {
            kind: real.kind,
            f_or: real.render_f(),
            b_o: real.render_b(),
            x0_hat: real.render_x0(),
            c_o: real.c_o(),
            selfcheck,
        },
        observer: ObserverSection {
            kind: observer.kind,
            f_o: observer.render_f(),
            k_o: observer.render_k_o(),
            gain: observer
                .gain
                .iter()
                .map(|r| r.iter().map(rational_to_string).collect())
                .collect(),
            gain_mode: choice.mode,
            poles: choice.poles.as_deref().map(pairs),
            grid: choice.grid,
            injection_consistent: observer.check_injection().unwrap_or(false),
            k_o_consistent: observer.check_k_o(),
        },
        stability,
        simulation,
        timings: clock.laps,
    };
    Ok(Synthesis {
        sys: sys.clone(),
        obs,
        real,
        observer,
        params,
        mismatched,
        report,
    })
}

fn system_section(sys: &RationalSystem) -> SystemSection {
    SystemSection {
        name: sys.name.clone(),
        kind: sys.kind,
        n: sys.n(),
        m_y: sys.m_y(),
        states: sys
            .states
            .iter()
            .zip(&sys.f)
            .map(|(v, f)| format!("d {} = {}", sys.vars.name(*v), rf_to_string(f, &sys.vars)))
            .collect(),
        outputs: sys
            .outputs
            .iter()
            .map(|(n, h)| format!("{n} = {}", rf_to_string(h, &sys.vars)))
            .collect(),
        params: sys
            .params
            .iter()
            .map(|(v, b)| (sys.vars.name(*v).to_string(), b.as_ref().map(rational_to_string)))
            .collect(),
        assumptions: sys
            .assumptions
            .iter()
            .map(|a| format!("{} != 0", crate::algebra::poly_to_string(a, &sys.vars)))
            .collect(),
    }
}

/// Jacobi test on `s` when it is a square polynomial map in the states.
fn jacobi_section(sys: &RationalSystem, real: &OutputRealization) -> JacobiSection {
    let not_applicable = JacobiSection {
        status: JacobiStatus::NotApplicable,
        det: None,
    };
    if real.n_o != sys.n() {
        return not_applicable;
    }
    match jacobi_condition(&real.s, &sys.states) {
        Ok(v) => JacobiSection {
            status: v.status(),
            det: v.det().map(|d| rf_to_string(d, &real.vars)),
        },
        Err(_) => not_applicable,
    }
}

/// File bindings overridden by the inverse's instance; `None` unless every
/// parameter ends up numeric.
fn working_params(sys: &RationalSystem, obs: &Observability) -> Option<BTreeMap<Var, BigRational>> {
    let mut p = sys.bound_params();
    if let Some(inst) = &obs.inverse.instance {
        p.extend(inst.iter().map(|(k, v)| (*k, v.clone())));
    }
    sys.param_vars().iter().all(|v| p.contains_key(v)).then_some(p)
}

struct GainChoice {
    gain: Vec<Vec<BigRational>>,
    mode: String,
    poles: Option<Vec<Complex64>>,
    grid: Option<GridSummary>,
}

fn rows(flat: &[BigRational], m_y: usize) -> Vec<Vec<BigRational>> {
    flat.chunks(m_y.max(1)).map(|r| r.to_vec()).collect()
}

fn choose_gain(
    real: &OutputRealization,
    spec: &GainSpec,
    numeric: Option<&Numeric>,
    cfg: &SimConfig,
) -> Result<GainChoice, PipelineError> {
    let (n_o, m_y) = (real.n_o, real.m_y);
    let need = |what: &str| {
        numeric.ok_or_else(|| PipelineError::Invalid(format!("{what} needs numeric values for every parameter")))
    };
    match spec {
        GainSpec::Explicit(k) => {
            if k.len() != n_o * m_y {
                return Err(ObserverError::GainShape {
                    got: (k.len(), 1),
                    want: (n_o, m_y),
                }
                .into());
            }
            Ok(GainChoice {
                gain: rows(k, m_y),
                mode: "explicit".into(),
                poles: None,
                grid: None,
            })
        }
        GainSpec::Poles(p) => {
            let num = need("pole placement")?;
            Ok(num.place(real, p.clone(), "poles")?)
        }
        GainSpec::Grid(g) => {
            let num = need("grid search")?;
            Ok(num.grid(g, cfg)?)
        }
        GainSpec::Auto => match numeric {
            None => Ok(GainChoice {
                gain: zero_gain(n_o, m_y),
                mode: "zero".into(),
                poles: None,
                grid: None,
            }),
            Some(num) if m_y == 1 => {
                let poles = default_poles(&num.system_eigs, n_o);
                Ok(num.place(real, poles, "default-poles")?)
            }
            Some(num) => Ok(num.grid(&GridSpec::default(), cfg)?),
        },
    }
}

/// Numeric data at fixed parameter values.
struct Numeric {
    f: CompiledField,
    x0: Vec<f64>,
    xo0: Vec<f64>,
    offset: Vec<f64>,
    point_kind: String,
    point: Vec<f64>,
    observer_point: Vec<f64>,
    system_eigs: Vec<Complex64>,
    /// Error-dynamics matrix before the constant gain, at `observer_point`.
    structural: DMatrix<f64>,
    /// Performance system with zero constant gain.
    ps: PerformanceSystem,
}

impl Numeric {
    fn new(
        sys: &RationalSystem,
        real: &OutputRealization,
        template: &Observer,
        params: &BTreeMap<Var, BigRational>,
        opts: &SynthOptions,
    ) -> Result<Self, PipelineError> {
        let f_exact: Vec<RationalFunction> = sys
            .f
            .iter()
            .map(|r| r.eval_partial(params))
            .collect::<Result<_, _>>()
            .map_err(SimError::from)?;
        let f = CompiledField::from_system(sys, params)?;
        let x0: Vec<f64> = sys.x0.iter().map(to_f64).collect();
        let xo0 = chain_at(real, params, &x0)?;
        let offset = match &opts.xo_offset {
            Some(o) if o.len() == real.n_o => o.clone(),
            Some(o) => {
                return Err(PipelineError::Invalid(format!(
                    "observer offset has {} entries, expected {}",
                    o.len(),
                    real.n_o
                )))
            }
            None => default_offset(real.n_o),
        };

        let name = |v: Var| sys.vars.name(v).to_string();
        let run = integrate(
            &f,
            &x0,
            &SimConfig {
                record_every: 0,
                ..opts.sim.clone()
            },
        );
        let hints = [Some(vec![0.0; sys.n()]), Some(run.final_state), Some(x0.clone())];
        let eq = hints
            .into_iter()
            .flatten()
            .find_map(|h| newton(&f, &f_exact, &sys.states, &name, h));
        let (point_kind, point) = match eq {
            Some(p) => ("equilibrium".to_string(), p),
            None => ("initial-state".to_string(), x0.clone()),
        };
        let observer_point = chain_at(real, params, &point)?;
        let jac = linearize(&f_exact, &sys.states, &point, &name)?;
        let system_eigs = eigenvalues(&jac)?;
        let structural = structural_matrix(
            real.n_o,
            real.m_y,
            &real.b_o,
            &real.coords,
            &real.vars,
            params,
            &observer_point,
        )?;
        let ps = PerformanceSystem::new(sys, template, params)?;
        Ok(Self {
            f,
            x0,
            xo0,
            offset,
            point_kind,
            point,
            observer_point,
            system_eigs,
            structural,
            ps,
        })
    }

    fn mismatched_start(&self) -> Vec<f64> {
        self.xo0.iter().zip(&self.offset).map(|(a, b)| a + b).collect()
    }

    fn place(&self, real: &OutputRealization, poles: Vec<Complex64>, mode: &str) -> Result<GainChoice, ObserverError> {
        if real.m_y != 1 {
            return Err(ObserverError::MultiOutput);
        }
        let mut c = DMatrix::zeros(1, real.n_o);
        c[(0, 0)] = 1.0;
        let k = pole_place(&self.structural, &c, &poles)?;
        Ok(GainChoice {
            gain: k.iter().map(|&v| vec![rationalize(v)]).collect(),
            mode: mode.into(),
            poles: Some(poles),
            grid: None,
        })
    }

    fn grid(&self, g: &GridSpec, cfg: &SimConfig) -> Result<GainChoice, ObserverError> {
        let plus = self.mismatched_start();
        let minus: Vec<f64> = self.xo0.iter().zip(&self.offset).map(|(a, b)| a - b).collect();
        let starts = vec![self.ps.initial(&self.x0, &plus), self.ps.initial(&self.x0, &minus)];
        let out = gain_search(&self.ps, g, &starts, cfg)?;
        Ok(GainChoice {
            gain: rows(
                &out.gain.iter().map(|&v| rationalize(v)).collect::<Vec<_>>(),
                self.ps.m_y(),
            ),
            mode: "grid".into(),
            poles: None,
            grid: Some(GridSummary {
                lo: g.lo,
                hi: g.hi,
                step: g.step,
                candidates: out.candidates,
                finite: out.finite,
                index: out.index,
                score: out.score,
            }),
        })
    }

    fn stability(&self, real: &OutputRealization, observer: &Observer) -> Result<StabilitySection, PipelineError> {
        let mut a = self.structural.clone();
        for k in 0..real.n_o {
            for j in 0..real.m_y {
                a[(k, j)] -= to_f64(&observer.gain[k][j]);
            }
        }
        let err = eigenvalues(&a)?;
        Ok(StabilitySection {
            point_kind: self.point_kind.clone(),
            point: self.point.clone(),
            observer_point: self.observer_point.clone(),
            system_eigenvalues: pairs(&self.system_eigs),
            locally_stable: err.iter().all(|z| z.re < 0.0),
            error_eigenvalues: pairs(&err),
        })
    }

    fn simulate(
        &self,
        sys: &RationalSystem,
        observer: &Observer,
        params: &BTreeMap<Var, BigRational>,
        cfg: &SimConfig,
    ) -> Result<(SimulationSection, SimResult), PipelineError> {
        let ps = PerformanceSystem::new(sys, observer, params)?;
        let quiet = SimConfig {
            record_every: 0,
            ..cfg.clone()
        };
        let matched = performance_sim(&ps, &self.x0, &self.xo0, &quiet);
        let xo0 = self.mismatched_start();
        let run = performance_sim(&ps, &self.x0, &xo0, cfg);
        let zero = vec![0.0; ps.n_o() * ps.m_y()];
        let baseline = performance_sim(&ps.with_gain(&zero).without_k_o(), &self.x0, &xo0, &quiet);
        let finite = |v: f64| v.is_finite().then_some(v);
        let section = SimulationSection {
            params: params
                .iter()
                .map(|(v, q)| (sys.vars.name(*v).to_string(), rational_to_string(q)))
                .collect(),
            step: cfg.step,
            horizon: cfg.horizon,
            x0: self.x0.clone(),
            xo0,
            matched_max_error: if matched.status.is_failure() {
                None
            } else {
                finite(matched.max_error)
            },
            status: run.status,
            tail_error: finite(run.tail_error),
            max_error: finite(run.max_error),
            baseline_tail_error: finite(baseline.tail_error),
        };
        Ok((section, run))
    }

    fn selfcheck(
        &self,
        sys: &RationalSystem,
        real: &OutputRealization,
        params: &BTreeMap<Var, BigRational>,
        cfg: &SimConfig,
    ) -> Result<Option<f64>, PipelineError> {
        let run = integrate(
            &self.f,
            &self.x0,
            &SimConfig {
                horizon: cfg.horizon.min(SELFCHECK_HORIZON),
                record_every: 1,
                ..cfg.clone()
            },
        );
        if run.status.is_failure() {
            return Ok(None);
        }
        let check = realization_selfcheck(real, sys, params, &run.times, &run.states)?;
        Ok(check.max_rel_deviation.is_finite().then_some(check.max_rel_deviation))
    }
}

/// `s(x)` in floats.
fn chain_at(real: &OutputRealization, params: &BTreeMap<Var, BigRational>, x: &[f64]) -> Result<Vec<f64>, SimError> {
    let states: Vec<Var> = real.vars.with_role(crate::algebra::Role::State);
    let s: Vec<RationalFunction> = real
        .s
        .iter()
        .map(|sk| sk.eval_partial(params))
        .collect::<Result<_, _>>()?;
    let field = CompiledField::new(&s, &states, &|v| real.vars.name(v).to_string())?;
    let mut out = vec![0.0; s.len()];
    field.eval(x, &mut out, 0.0).map_err(|_| SimError::UndefinedAtPoint)?;
    if out.iter().any(|v| !v.is_finite()) {
        return Err(SimError::UndefinedAtPoint);
    }
    Ok(out)
}

/// Newton iteration on `f = 0` from `start`; `None` unless it converges.
fn newton(
    f: &CompiledField,
    exact: &[RationalFunction],
    states: &[Var],
    name: &dyn Fn(Var) -> String,
    start: Vec<f64>,
) -> Option<Vec<f64>> {
    let n = states.len();
    let mut x = start;
    let mut fx = vec![0.0; n];
    for _ in 0..=NEWTON_ITERATIONS {
        f.eval(&x, &mut fx, 0.0).ok()?;
        if fx.iter().any(|v| !v.is_finite()) {
            return None;
        }
        if fx.iter().all(|v| v.abs() <= EQUILIBRIUM_TOL) {
            return Some(x);
        }
        let j = linearize(exact, states, &x, name).ok()?;
        let dx = j.lu().solve(&DVector::from_column_slice(&fx))?;
        for (xi, d) in x.iter_mut().zip(dx.iter()) {
            *xi -= d;
        }
    }
    None
}

/// A reference system with its simulation horizon and, where the basin of
/// attraction is small, an observer start offset inside it.
#[derive(Clone, Copy, Debug)]
pub struct Example {
    pub name: &'static str,
    pub source: &'static str,
    pub horizon: f64,
    pub offset: Option<&'static [f64]>,
}

pub const EXAMPLES: [Example; 4] = [
    Example {
        name: "polsys",
        source: include_str!("../systems/polsys.rsys"),
        horizon: 50.0,
        offset: None,
    },
    Example {
        name: "higher",
        source: include_str!("../systems/higher.rsys"),
        horizon: 20.0,
        offset: Some(&[-0.01, 0.01, -0.01]),
    },
    Example {
        name: "ratsys",
        source: include_str!("../systems/ratsys.rsys"),
        horizon: 50.0,
        offset: None,
    },
    Example {
        name: "compartments",
        source: include_str!("../systems/compartments.rsys"),
        horizon: 50.0,
        offset: None,
    },
];

pub const MICHAELIS: &str = include_str!("../systems/michaelis.rsys");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExampleOutcome {
    pub name: String,
    pub m_o: Option<usize>,
    pub n_o: Option<usize>,
    /// Named checks in a fixed order.
    pub checks: Vec<(String, bool)>,
    pub tail_error: Option<f64>,
    pub error: Option<String>,
    pub pass: bool,
}

/// Largest matched-start output error accepted as zero.
pub const MATCHED_TOL: f64 = 1e-6;

pub fn run_example(ex: &Example, seed: u64) -> ExampleOutcome {
    let opts = SynthOptions {
        index: IndexConfig {
            seed,
            ..IndexConfig::default()
        },
        sim: SimConfig {
            horizon: ex.horizon,
            record_every: 0,
            ..SimConfig::default()
        },
        xo_offset: ex.offset.map(<[f64]>::to_vec),
        timings: false,
        ..SynthOptions::default()
    };
    let mut out = ExampleOutcome {
        name: ex.name.to_string(),
        m_o: None,
        n_o: None,
        checks: Vec::new(),
        tail_error: None,
        error: None,
        pass: false,
    };
    let syn = match synthesize_source(ex.source, &opts) {
        Ok(s) => s,
        Err(e) => {
            out.error = Some(e.to_string());
            return out;
        }
    };
    let r = &syn.report;
    out.m_o = Some(r.chain.m_o);
    out.n_o = Some(r.chain.n_o);
    let sim = r.simulation.as_ref();
    out.tail_error = sim.and_then(|s| s.tail_error);
    out.checks = vec![
        ("round-trip".into(), r.inverse.round_trip),
        ("k_o".into(), r.observer.k_o_consistent),
        ("injection".into(), r.observer.injection_consistent),
        (
            "matched-start".into(),
            sim.and_then(|s| s.matched_max_error).is_some_and(|e| e < MATCHED_TOL),
        ),
        ("mismatched-run".into(), sim.is_some_and(|s| !s.status.is_failure())),
    ];
    out.pass = out.checks.iter().all(|(_, ok)| *ok);
    out
}

pub fn run_examples(seed: u64) -> Vec<ExampleOutcome> {
    EXAMPLES.iter().map(|ex| run_example(ex, seed)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(src: &str, gain: GainSpec, horizon: f64) -> Synthesis {
        let opts = SynthOptions {
            gain,
            sim: SimConfig {
                horizon,
                record_every: 0,
                ..SimConfig::default()
            },
            timings: false,
            ..SynthOptions::default()
        };
        synthesize_source(src, &opts).unwrap()
    }

    #[test]
    fn polynomial_example_report() {
        let syn = quick(EXAMPLES[0].source, GainSpec::Auto, 20.0);
        let r = &syn.report;
        assert_eq!((r.chain.m_o, r.chain.n_o), (2, 2));
        assert_eq!(r.inverse.side_conditions, vec!["a12 != 0"]);
        assert_eq!(r.jacobi.status, JacobiStatus::Holds);
        let st = r.stability.as_ref().unwrap();
        assert_eq!(st.point_kind, "equilibrium");
        assert!(st.system_eigenvalues.iter().any(|z| z[0].abs() < 1e-10 && z[1] == 0.0));
        assert!(st.locally_stable);
        let sim = r.simulation.as_ref().unwrap();
        assert!(sim.matched_max_error.unwrap() < 1e-9);
        assert!(!sim.status.is_failure());
    }

    #[test]
    fn report_round_trips_through_json() {
        let syn = quick(EXAMPLES[0].source, GainSpec::Auto, 5.0);
        let text = serde_json::to_string_pretty(&syn.report).unwrap();
        let back: SynthesisReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, syn.report);
        assert_eq!(serde_json::to_string_pretty(&back).unwrap(), text);
        assert_eq!(back.gain().unwrap(), syn.observer.gain);
    }

    #[test]
    fn explicit_gain_shape_is_checked() {
        let opts = SynthOptions {
            gain: GainSpec::Explicit(vec![BigRational::from_integer(1.into())]),
            ..SynthOptions::default()
        };
        let err = synthesize_source(EXAMPLES[0].source, &opts).err().unwrap();
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn symbolic_parameters_skip_numerics() {
        let src = "system s { params a; states x1 = 1 x2 = 1; d x1 = x2; d x2 = -a*x1; output y = x1; }";
        let syn = quick(src, GainSpec::Auto, 1.0);
        assert!(syn.report.simulation.is_none() && syn.report.stability.is_none());
        assert_eq!(syn.report.observer.gain_mode, "zero");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(
            PipelineError::Inverse(InverseError::NotObservableUpTo(3)).exit_code(),
            2
        );
        assert_eq!(PipelineError::Inverse(InverseError::ResourceExceeded(5)).exit_code(), 3);
        assert_eq!(PipelineError::Sim(SimError::UndefinedAtPoint).exit_code(), 4);
    }
}
