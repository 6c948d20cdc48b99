use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::simulate::{integrate, observability_matrix, observability_rank, PerformanceSystem, SimConfig};

use super::ObserverError;

#[derive(Clone, Debug, PartialEq)]
pub enum GainSpec {
    /// Row-major `n_o x m_y` entries.
    Explicit(Vec<BigRational>),
    Poles(Vec<Complex64>),
    Grid(GridSpec),
    /// Pole placement at default poles for single outputs, else the default grid.
    Auto,
}

/// The same `lo:hi:step` range for every entry of `K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            lo: -4.0,
            hi: 4.0,
            step: 1.0,
        }
    }
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.step.is_nan() || self.step <= 0.0 || self.hi < self.lo {
            return Vec::new();
        }
        let count = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.lo + i as f64 * self.step).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    /// Row-major `n_o x m_y`.
    pub gain: Vec<f64>,
    pub score: f64,
    pub index: usize,
    pub candidates: usize,
    pub finite: usize,
}

/// Dual Ackermann: `K = p(A) O^{-1} e_n` for a single-output pair, so that
/// `A - K C` has characteristic polynomial `p`.
pub fn pole_place(a: &DMatrix<f64>, c: &DMatrix<f64>, poles: &[Complex64]) -> Result<DVector<f64>, ObserverError> {
    let n = a.nrows();
    if c.nrows() != 1 {
        return Err(ObserverError::MultiOutput);
    }
    if poles.len() != n {
        return Err(ObserverError::InvalidPoles(format!(
            "{} poles for order {n}",
            poles.len()
        )));
    }
    let scale = poles.iter().map(|p| p.norm()).fold(1.0, f64::max);
    for p in poles {
        if p.im.abs() > 1e-12 * scale && !poles.iter().any(|q| (q - p.conj()).norm() <= 1e-9 * scale) {
            return Err(ObserverError::InvalidPoles(format!("{p} lacks its conjugate")));
        }
    }
    if observability_rank(a, c) < n {
        return Err(ObserverError::UnobservablePair);
    }
    // Monic characteristic polynomial, highest degree first.
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    for p in poles {
        let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
        for (i, c) in coeffs.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * p;
        }
        coeffs = next;
    }
    let mut pa = DMatrix::<f64>::zeros(n, n);
    for c in &coeffs {
        pa = &pa * a + DMatrix::identity(n, n) * c.re;
    }
    let o = observability_matrix(a, c);
    let mut e = DVector::zeros(n);
    e[n - 1] = 1.0;
    let v = o.lu().solve(&e).ok_or(ObserverError::UnobservablePair)?;
    Ok(pa * v)
}

/// `n_o` distinct real poles, the slowest 1.5 times faster than the slowest
/// decaying mode of the system (rate 1 if no mode decays).
pub fn default_poles(system_eigs: &[Complex64], n_o: usize) -> Vec<Complex64> {
    let slowest = system_eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let rate = if slowest < -1e-9 { -slowest } else { 1.0 };
    (0..n_o)
        .map(|k| Complex64::new(-1.5 * rate * (1.0 + 0.5 * k as f64), 0.0))
        .collect()
}

/// Tail error of the worst start, or infinity if any run fails.
pub fn score_gain(ps: &PerformanceSystem, gain: &[f64], starts: &[Vec<f64>], cfg: &SimConfig) -> f64 {
    let sys = ps.with_gain(gain);
    let cfg = SimConfig {
        record_every: 0,
        ..cfg.clone()
    };
    let mut worst: f64 = 0.0;
    for x0 in starts {
        let r = integrate(&sys, x0, &cfg);
        if r.status.is_failure() || !r.tail_error.is_finite() {
            return f64::INFINITY;
        }
        worst = worst.max(r.tail_error);
    }
    worst
}

/// Exhaustive search over the product grid; ties go to the lowest grid index.
pub fn gain_search(
    ps: &PerformanceSystem,
    grid: &GridSpec,
    starts: &[Vec<f64>],
    cfg: &SimConfig,
) -> Result<SearchOutcome, ObserverError> {
    let values = grid.values();
    let entries = ps.n_o() * ps.m_y();
    let total = if values.is_empty() {
        0
    } else {
        values.len().checked_pow(entries as u32).unwrap_or(usize::MAX)
    };
    if total == 0 {
        return Err(ObserverError::NoStableCandidate);
    }
    let candidate = |mut idx: usize| -> Vec<f64> {
        let mut k = vec![0.0; entries];
        for slot in k.iter_mut().rev() {
            *slot = values[idx % values.len()];
            idx /= values.len();
        }
        k
    };
    let scores: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|i| score_gain(ps, &candidate(i), starts, cfg))
        .collect();
    let finite = scores.iter().filter(|s| s.is_finite()).count();
    log::info!("gain grid: {finite}/{total} candidates stay bounded");
    let best = scores
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_finite())
        .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
        .ok_or(ObserverError::NoStableCandidate)?;
    Ok(SearchOutcome {
        gain: candidate(best.0),
        score: *best.1,
        index: best.0,
        candidates: total,
        finite,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::eigenvalues;

    fn double_integrator() -> (DMatrix<f64>, DMatrix<f64>) {
        (
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
        )
    }

    #[test]
    fn ackermann_double_integrator() {
        let (a, c) = double_integrator();
        let k = pole_place(&a, &c, &[(-1.0).into(), (-2.0).into()]).unwrap();
        assert!((k[0] - 3.0).abs() < 1e-12 && (k[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn placed_poles_are_achieved() {
        // A already has the requested poles; a valid K must keep them.
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -2.0, -3.0]);
        let c = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        let poles = vec![Complex64::new(-1.0, 0.0), Complex64::new(-2.0, 0.0)];
        let k = pole_place(&a, &c, &poles).unwrap();
        let got = eigenvalues(&(&a - &k * &c)).unwrap();
        for p in &poles {
            assert!(got.iter().any(|z| (z - p).norm() < 1e-8), "{got:?}");
        }

        let a = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, -1.0, -3.0, -3.0]);
        let c = DMatrix::from_row_slice(1, 3, &[1.0, 0.5, 0.0]);
        let poles = vec![
            Complex64::new(-2.0, 1.0),
            Complex64::new(-2.0, -1.0),
            Complex64::new(-3.0, 0.0),
        ];
        let k = pole_place(&a, &c, &poles).unwrap();
        let got = eigenvalues(&(&a - &k * &c)).unwrap();
        for p in &poles {
            assert!(got.iter().any(|z| (z - p).norm() < 1e-8), "{got:?}");
        }
    }

    #[test]
    fn rejects_bad_input() {
        let (a, _) = double_integrator();
        let zero = DMatrix::zeros(1, 2);
        assert_eq!(
            pole_place(&a, &zero, &[(-1.0).into(), (-2.0).into()]),
            Err(ObserverError::UnobservablePair)
        );
        let c = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        assert!(matches!(
            pole_place(&a, &c, &[Complex64::new(-1.0, 1.0), (-2.0).into()]),
            Err(ObserverError::InvalidPoles(_))
        ));
    }

    #[test]
    fn grid_values() {
        assert_eq!(GridSpec::default().values().len(), 9);
        assert!(GridSpec {
            lo: 1.0,
            hi: 0.0,
            step: 1.0
        }
        .values()
        .is_empty());
        assert_eq!(
            GridSpec {
                lo: 0.0,
                hi: 1.0,
                step: 0.25
            }
            .values(),
            vec![0.0, 0.25, 0.5, 0.75, 1.0]
        );
    }

    #[test]
    fn default_poles_are_faster() {
        let p = default_poles(&[Complex64::new(-3.0, 0.0), Complex64::new(-1.0, 0.0)], 2);
        assert_eq!(p, vec![Complex64::new(-1.5, 0.0), Complex64::new(-2.25, 0.0)]);
        assert_eq!(
            default_poles(&[Complex64::new(0.0, 0.0)], 1),
            vec![Complex64::new(-1.5, 0.0)]
        );
    }
}
