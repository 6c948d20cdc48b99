use std::collections::BTreeMap;
use std::io::Write;

use num_rational::BigRational;

use crate::algebra::{CompiledRf, RationalFunction, Var};
use crate::observer::Observer;
use crate::parser::RationalSystem;

use super::{integrate, CompiledField, Fault, Field, SimConfig, SimError, SimResult};

/// Plant and observer stacked as `(x, xo)` with output error
/// `e_y = h(x) - C_o xo`.
#[derive(Clone, Debug)]
pub struct PerformanceSystem {
    n: usize,
    n_o: usize,
    m_y: usize,
    f: CompiledField,
    /// Output map over the plant slots.
    h: Vec<CompiledRf>,
    /// Realization drift over the stacked slots.
    f_or: Vec<CompiledRf>,
    /// `None` for structurally zero entries.
    k_o: Vec<Vec<Option<CompiledRf>>>,
    gain: Vec<Vec<f64>>,
}

impl PerformanceSystem {
    /// `params` must bind every parameter of the system and the observer.
    pub fn new(sys: &RationalSystem, obs: &Observer, params: &BTreeMap<Var, BigRational>) -> Result<Self, SimError> {
        let n = sys.n();
        let fix = |r: &RationalFunction| r.eval_partial(params);
        let name = |v: Var| obs.vars.name(v).to_string();
        let plant = |v: Var| sys.states.iter().position(|&s| s == v);
        let stacked = |v: Var| obs.coords.iter().position(|&c| c == v).map(|k| n + k);
        let compile = |r: &RationalFunction, slot: &dyn Fn(Var) -> Option<usize>| -> Result<CompiledRf, SimError> {
            Ok(CompiledRf::compile(&fix(r)?, slot, &name)?)
        };

        let f = CompiledField::from_system(sys, params)?;
        let h = sys.h().iter().map(|r| compile(r, &plant)).collect::<Result<_, _>>()?;
        let f_or = obs
            .f_or
            .iter()
            .map(|r| compile(r, &stacked))
            .collect::<Result<_, _>>()?;
        let k_o = obs
            .k_o
            .iter()
            .map(|row| {
                row.iter()
                    .map(|g| {
                        if g.is_zero() {
                            Ok(None)
                        } else {
                            compile(g, &stacked).map(Some)
                        }
                    })
                    .collect::<Result<Vec<_>, SimError>>()
            })
            .collect::<Result<_, _>>()?;
        Ok(Self {
            n,
            n_o: obs.n_o,
            m_y: obs.m_y,
            f,
            h,
            f_or,
            k_o,
            gain: obs.gain_f64(),
        })
    }

    /// Same system with the constant gain replaced; `gain` is row-major
    /// `n_o x m_y`.
    pub fn with_gain(&self, gain: &[f64]) -> Self {
        assert_eq!(gain.len(), self.n_o * self.m_y, "gain length");
        let mut out = self.clone();
        out.gain = gain.chunks(self.m_y).map(|r| r.to_vec()).collect();
        out
    }

    /// Drops the output-dependent injection, leaving only the constant gain.
    pub fn without_k_o(&self) -> Self {
        let mut out = self.clone();
        for row in &mut out.k_o {
            row.iter_mut().for_each(|g| *g = None);
        }
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_o(&self) -> usize {
        self.n_o
    }

    pub fn m_y(&self) -> usize {
        self.m_y
    }

    pub fn gain(&self) -> &[Vec<f64>] {
        &self.gain
    }

    pub fn initial(&self, x0: &[f64], xo0: &[f64]) -> Vec<f64> {
        assert_eq!(x0.len(), self.n, "plant state dimension");
        assert_eq!(xo0.len(), self.n_o, "observer state dimension");
        x0.iter().chain(xo0).copied().collect()
    }
}

fn guarded(c: &CompiledRf, z: &[f64], eps_den: f64) -> Result<f64, Fault> {
    let d = c.eval_den(z);
    if d.abs() < eps_den {
        return Err(Fault::Pole);
    }
    Ok(c.eval_num(z) / d)
}

impl Field for PerformanceSystem {
    fn dim(&self) -> usize {
        self.n + self.n_o
    }

    fn eval(&self, z: &[f64], out: &mut [f64], eps_den: f64) -> Result<(), Fault> {
        let (plant, observer) = out.split_at_mut(self.n);
        self.f.eval_guarded(&z[..self.n], plant, eps_den)?;
        let mut innovation = [0.0; 8];
        let mut heap;
        let innovation: &mut [f64] = if self.m_y <= innovation.len() {
            &mut innovation[..self.m_y]
        } else {
            heap = vec![0.0; self.m_y];
            &mut heap
        };
        for (j, h) in self.h.iter().enumerate() {
            innovation[j] = guarded(h, &z[..self.n], eps_den)? - z[self.n + j];
        }
        for (k, o) in observer.iter_mut().enumerate() {
            let mut v = guarded(&self.f_or[k], z, eps_den)?;
            for (j, e) in innovation.iter().enumerate() {
                let mut g = self.gain[k][j];
                if let Some(c) = &self.k_o[k][j] {
                    g += guarded(c, z, eps_den)?;
                }
                v += g * e;
            }
            *o = v;
        }
        Ok(())
    }

    fn error_dim(&self) -> usize {
        self.m_y
    }

    fn error(&self, z: &[f64], out: &mut [f64]) {
        for (j, h) in self.h.iter().enumerate() {
            out[j] = h.eval(&z[..self.n]) - z[self.n + j];
        }
    }

    fn guarded_dims(&self) -> usize {
        self.n
    }
}

pub fn performance_sim(ps: &PerformanceSystem, x0: &[f64], xo0: &[f64], cfg: &SimConfig) -> SimResult {
    integrate(ps, &ps.initial(x0, xo0), cfg)
}

/// Header `t,x_1..x_n,xo_1..xo_{n_o},ey_1..ey_{m_y}`, one row per sample.
pub fn write_csv<W: Write>(r: &SimResult, n: usize, n_o: usize, m_y: usize, mut w: W) -> std::io::Result<()> {
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x_{i}")));
    header.extend((1..=n_o).map(|i| format!("xo_{i}")));
    header.extend((1..=m_y).map(|i| format!("ey_{i}")));
    writeln!(w, "{}", header.join(","))?;
    for ((t, z), e) in r.times.iter().zip(&r.states).zip(&r.ey) {
        let row: Vec<String> = std::iter::once(t)
            .chain(z.iter())
            .chain(e.iter())
            .map(|v| v.to_string())
            .collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}
