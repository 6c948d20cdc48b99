//! Fixed-step RK4 integration of compiled rational vector fields, the
//! stacked performance system, and small dense linear algebra.

mod linalg;
mod performance;

use std::collections::BTreeMap;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{AlgebraError, CompiledRf, RationalFunction, Var};
use crate::parser::RationalSystem;

pub use linalg::{eigen_residual, eigenvalues, linearize, observability_matrix, observability_rank, spectral_abscissa};
pub use performance::{performance_sim, write_csv, PerformanceSystem};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum SimError {
    #[error("denominator below guard at t = {t}")]
    PoleCrossing { t: f64 },
    #[error("state not finite or beyond bound at t = {t}")]
    NonFinite { t: f64 },
    #[error("trajectory left the positive orthant at t = {t}")]
    LeftOrthant { t: f64 },
    #[error("field undefined at the linearization point")]
    UndefinedAtPoint,
    #[error("QR iteration did not converge within {0} sweeps")]
    NoConvergence(usize),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub step: f64,
    pub horizon: f64,
    /// Smallest admissible denominator magnitude.
    pub eps_den: f64,
    /// Any state magnitude above this counts as blow-up.
    pub bound: f64,
    /// Keep every `record_every`-th sample; 0 keeps none.
    pub record_every: usize,
    /// Convergence tolerance on the tail error.
    pub tol: f64,
    pub positive_orthant: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            step: 1e-3,
            horizon: 50.0,
            eps_den: 1e-9,
            bound: 1e10,
            record_every: 1,
            tol: 1e-6,
            positive_orthant: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum SimStatus {
    /// Plain integration without an error output.
    Completed,
    Converged {
        tol: f64,
    },
    NotConverged {
        tol: f64,
    },
    PoleCrossing {
        t: f64,
    },
    NonFinite {
        t: f64,
    },
    LeftOrthant {
        t: f64,
    },
}

impl SimStatus {
    pub fn is_failure(&self) -> bool {
        matches!(
            self,
            SimStatus::PoleCrossing { .. } | SimStatus::NonFinite { .. } | SimStatus::LeftOrthant { .. }
        )
    }

    pub fn error(&self) -> Option<SimError> {
        match *self {
            SimStatus::PoleCrossing { t } => Some(SimError::PoleCrossing { t }),
            SimStatus::NonFinite { t } => Some(SimError::NonFinite { t }),
            SimStatus::LeftOrthant { t } => Some(SimError::LeftOrthant { t }),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimResult {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub ey: Vec<Vec<f64>>,
    /// `sup |e_y|` over the last 20% of the horizon; infinite on failure.
    pub tail_error: f64,
    /// `sup |e_y|` over the whole run.
    pub max_error: f64,
    pub status: SimStatus,
    pub final_state: Vec<f64>,
}

/// Evaluation fault inside a field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    Pole,
}

pub trait Field: Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64], out: &mut [f64], eps_den: f64) -> Result<(), Fault>;

    /// Width of the error output; zero for plain systems.
    fn error_dim(&self) -> usize {
        0
    }

    fn error(&self, _x: &[f64], _out: &mut [f64]) {}

    /// Leading components subject to the positive-orthant guard.
    fn guarded_dims(&self) -> usize {
        self.dim()
    }
}

/// Vector field compiled from rational functions over a slot layout.
#[derive(Clone, Debug)]
pub struct CompiledField {
    comps: Vec<CompiledRf>,
}

impl CompiledField {
    pub fn new(f: &[RationalFunction], slots: &[Var], name: &dyn Fn(Var) -> String) -> Result<Self, SimError> {
        let slot = |v: Var| slots.iter().position(|&s| s == v);
        let comps = f
            .iter()
            .map(|r| CompiledRf::compile(r, &slot, name))
            .collect::<Result<_, _>>()?;
        Ok(Self { comps })
    }

    /// The system drift with parameters fixed to `params`.
    pub fn from_system(sys: &RationalSystem, params: &BTreeMap<Var, BigRational>) -> Result<Self, SimError> {
        let f: Vec<RationalFunction> = sys.f.iter().map(|r| r.eval_partial(params)).collect::<Result<_, _>>()?;
        Self::new(&f, &sys.states, &|v| sys.vars.name(v).to_string())
    }

    pub(crate) fn eval_guarded(&self, x: &[f64], out: &mut [f64], eps_den: f64) -> Result<(), Fault> {
        for (o, c) in out.iter_mut().zip(&self.comps) {
            let d = c.eval_den(x);
            if d.abs() < eps_den {
                return Err(Fault::Pole);
            }
            *o = c.eval_num(x) / d;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.comps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comps.is_empty()
    }
}

impl Field for CompiledField {
    fn dim(&self) -> usize {
        self.comps.len()
    }

    fn eval(&self, x: &[f64], out: &mut [f64], eps_den: f64) -> Result<(), Fault> {
        self.eval_guarded(x, out, eps_den)
    }
}

/// Classic RK4 with fixed step.
pub fn integrate(field: &dyn Field, x0: &[f64], cfg: &SimConfig) -> SimResult {
    let n = field.dim();
    assert_eq!(x0.len(), n, "initial state dimension");
    let steps = (cfg.horizon / cfg.step).round().max(1.0) as usize;
    let h = cfg.horizon / steps as f64;
    let tail_start = 0.8 * cfg.horizon;
    let me = field.error_dim();

    let mut x = x0.to_vec();
    let mut e = vec![0.0; me];
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut out = SimResult {
        times: Vec::new(),
        states: Vec::new(),
        ey: Vec::new(),
        tail_error: 0.0,
        max_error: 0.0,
        status: SimStatus::Completed,
        final_state: Vec::new(),
    };

    let guard = |x: &[f64], t: f64| -> Option<SimStatus> {
        if x.iter().any(|v| !v.is_finite() || v.abs() > cfg.bound) {
            return Some(SimStatus::NonFinite { t });
        }
        if cfg.positive_orthant && x[..field.guarded_dims()].iter().any(|&v| v < -1e-9) {
            return Some(SimStatus::LeftOrthant { t });
        }
        None
    };

    let mut failure = guard(&x, 0.0);
    if failure.is_none() && field.eval(&x, &mut k1, cfg.eps_den).is_err() {
        failure = Some(SimStatus::PoleCrossing { t: 0.0 });
    }
    let record = |k: usize, t: f64, x: &[f64], e: &[f64], out: &mut SimResult| {
        if cfg.record_every > 0 && (k.is_multiple_of(cfg.record_every) || k == steps) {
            out.times.push(t);
            out.states.push(x.to_vec());
            out.ey.push(e.to_vec());
        }
    };
    let track = |t: f64, e: &[f64], out: &mut SimResult| {
        let mag = e.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        out.max_error = out.max_error.max(mag);
        if t >= tail_start - 1e-12 {
            out.tail_error = out.tail_error.max(mag);
        }
    };

    if failure.is_none() {
        field.error(&x, &mut e);
        track(0.0, &e, &mut out);
        record(0, 0.0, &x, &e, &mut out);
        for k in 1..=steps {
            let t0 = (k - 1) as f64 * h;
            let t = k as f64 * h;
            let stage = (|| -> Result<(), Fault> {
                field.eval(&x, &mut k1, cfg.eps_den)?;
                for i in 0..n {
                    tmp[i] = x[i] + 0.5 * h * k1[i];
                }
                field.eval(&tmp, &mut k2, cfg.eps_den)?;
                for i in 0..n {
                    tmp[i] = x[i] + 0.5 * h * k2[i];
                }
                field.eval(&tmp, &mut k3, cfg.eps_den)?;
                for i in 0..n {
                    tmp[i] = x[i] + h * k3[i];
                }
                field.eval(&tmp, &mut k4, cfg.eps_den)
            })();
            if stage.is_err() {
                failure = Some(SimStatus::PoleCrossing { t: t0 });
                break;
            }
            for i in 0..n {
                x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            if let Some(f) = guard(&x, t) {
                failure = Some(f);
                break;
            }
            field.error(&x, &mut e);
            track(t, &e, &mut out);
            record(k, t, &x, &e, &mut out);
        }
    }

    out.final_state = x;
    out.status = match failure {
        Some(f) => {
            out.tail_error = f64::INFINITY;
            f
        }
        None if me == 0 => SimStatus::Completed,
        None if out.tail_error < cfg.tol => SimStatus::Converged { tol: cfg.tol },
        None => SimStatus::NotConverged { tol: cfg.tol },
    };
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    fn field(src: &str) -> (RationalSystem, CompiledField) {
        let sys = parse(src).unwrap();
        let f = CompiledField::from_system(&sys, &sys.bound_params()).unwrap();
        (sys, f)
    }

    fn cfg(step: f64, horizon: f64) -> SimConfig {
        SimConfig {
            step,
            horizon,
            ..SimConfig::default()
        }
    }

    #[test]
    fn exponential_decay() {
        let (_, f) = field("system decay { states x = 1; d x = -x; output y = x; }");
        let r = integrate(&f, &[1.0], &cfg(1e-3, 5.0));
        assert_eq!(r.status, SimStatus::Completed);
        assert!((r.final_state[0] - (-5.0f64).exp()).abs() < 1e-9);
        assert!(r.times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn zero_field_is_constant() {
        let (_, f) = field("system z { states x = 3/2; d x = 0; output y = x; }");
        let r = integrate(&f, &[1.5], &cfg(1e-2, 1.0));
        assert!(r.states.iter().all(|s| s[0] == 1.5));
    }

    #[test]
    fn blow_up_is_detected() {
        let (_, f) = field("system b { states x = 1; d x = x^2; output y = x; }");
        let step = 1e-3;
        let r = integrate(&f, &[1.0], &cfg(step, 2.0));
        match r.status {
            SimStatus::NonFinite { t } | SimStatus::PoleCrossing { t } => assert!(t < 1.0 + 10.0 * step, "{t}"),
            other => panic!("{other:?}"),
        }
        assert!(r.tail_error.is_infinite());
    }

    #[test]
    fn pole_guard() {
        // x1 passes through zero at t = 1 on the step grid.
        let (_, f) = field("system p { states x1 = -1 x2 = 0; d x1 = 1; d x2 = 1/x1; output y = x1; }");
        let r = integrate(&f, &[-1.0, 0.0], &cfg(1e-3, 2.0));
        match r.status {
            SimStatus::PoleCrossing { t } => assert!((t - 1.0).abs() < 2e-3, "{t}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn orthant_guard() {
        let (_, f) = field("system o { states x = 1; d x = -2; output y = x; }");
        let mut c = cfg(1e-3, 1.0);
        c.positive_orthant = true;
        let r = integrate(&f, &[1.0], &c);
        match r.status {
            SimStatus::LeftOrthant { t } => assert!((t - 0.5).abs() < 2e-3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fourth_order_convergence() {
        let (_, f) = field("system l { states x1 = 1 x2 = 0; d x1 = x2; d x2 = -x1 - x2/5; output y = x1; }");
        let err = |h: f64| {
            let a = integrate(&f, &[1.0, 0.0], &cfg(h, 4.0)).final_state;
            let b = integrate(&f, &[1.0, 0.0], &cfg(h / 2.0, 4.0)).final_state;
            a.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
        };
        let order = (err(0.1) / err(0.05)).log2();
        assert!(order >= 3.5, "{order}");
    }
}
