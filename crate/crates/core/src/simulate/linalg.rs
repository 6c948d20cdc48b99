use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::algebra::{CompiledRf, RationalFunction, Var};

use super::SimError;

const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

/// Jacobian of `f` with respect to `states` at `point`, from exact partials.
/// Every variable other than the states must already be instantiated.
pub fn linearize(
    f: &[RationalFunction],
    states: &[Var],
    point: &[f64],
    name: &dyn Fn(Var) -> String,
) -> Result<DMatrix<f64>, SimError> {
    let slot = |v: Var| states.iter().position(|&s| s == v);
    let n = states.len();
    let mut j = DMatrix::zeros(f.len(), n);
    for (i, fi) in f.iter().enumerate() {
        for (k, &x) in states.iter().enumerate() {
            let d = CompiledRf::compile(&fi.partial(x), &slot, name)?;
            let den = d.eval_den(point);
            if den == 0.0 || !den.is_finite() {
                return Err(SimError::UndefinedAtPoint);
            }
            j[(i, k)] = d.eval_num(point) / den;
        }
    }
    Ok(j)
}

/// Eigenvalues by Householder reduction to Hessenberg form followed by
/// single-shift complex QR with Wilkinson shifts and deflation. Sorted by
/// real part, then imaginary part.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>, SimError> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(SimError::Invalid("eigenvalues of a non-square matrix".into()));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(SimError::Invalid("non-finite matrix entry".into()));
    }
    let mut h = hessenberg(m);
    let norm = h.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut eig = Vec::with_capacity(n);
    let mut hi = n;
    let mut sweeps = 0;
    while hi > 0 {
        let top = hi - 1;
        let mut l = top;
        while l > 0 {
            let s = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            let s = if s == 0.0 { norm } else { s };
            if h[(l, l - 1)].norm() <= f64::EPSILON * s {
                h[(l, l - 1)] = Complex64::new(0.0, 0.0);
                break;
            }
            l -= 1;
        }
        if l == top {
            eig.push(h[(top, top)]);
            hi -= 1;
            sweeps = 0;
            continue;
        }
        sweeps += 1;
        if sweeps > MAX_SWEEPS_PER_EIGENVALUE {
            return Err(SimError::NoConvergence(MAX_SWEEPS_PER_EIGENVALUE));
        }
        let mu = if sweeps % 11 == 0 {
            // Exceptional shift to break cycles.
            h[(top, top)] + Complex64::new(h[(top, top - 1)].norm(), 0.0) * 0.75
        } else {
            wilkinson(
                h[(top - 1, top - 1)],
                h[(top - 1, top)],
                h[(top, top - 1)],
                h[(top, top)],
            )
        };
        qr_sweep(&mut h, l, top, mu);
    }
    for z in &mut eig {
        if z.im.abs() <= 1e-14 * norm {
            z.im = 0.0;
        }
    }
    eig.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(eig)
}

fn wilkinson(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mid = (a + d) * 0.5;
    let (r1, r2) = (mid + disc, mid - disc);
    if (r1 - d).norm() <= (r2 - d).norm() {
        r1
    } else {
        r2
    }
}

/// One shifted QR step `H - mu = QR, H <- RQ + mu` on rows/columns `lo..=hi`.
fn qr_sweep(h: &mut DMatrix<Complex64>, lo: usize, hi: usize, mu: Complex64) {
    for k in lo..=hi {
        h[(k, k)] -= mu;
    }
    let mut rot = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let (x, y) = (h[(k, k)], h[(k + 1, k)]);
        let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
        let (c, s) = if r == 0.0 {
            (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
        } else {
            (x / r, y / r)
        };
        for j in k..=hi {
            let (p, q) = (h[(k, j)], h[(k + 1, j)]);
            h[(k, j)] = c.conj() * p + s.conj() * q;
            h[(k + 1, j)] = -s * p + c * q;
        }
        rot.push((c, s));
    }
    for (idx, &(c, s)) in rot.iter().enumerate() {
        let k = lo + idx;
        for i in lo..=(k + 2).min(hi) {
            let (p, q) = (h[(i, k)], h[(i, k + 1)]);
            h[(i, k)] = p * c + q * s;
            h[(i, k + 1)] = -p * s.conj() + q * c.conj();
        }
    }
    for k in lo..=hi {
        h[(k, k)] += mu;
    }
}

/// Householder reduction to upper Hessenberg form.
fn hessenberg(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    let n = m.nrows();
    let mut a = m.clone();
    for k in 0..n.saturating_sub(2) {
        let alpha_sq: f64 = (k + 1..n).map(|i| a[(i, k)] * a[(i, k)]).sum();
        if alpha_sq == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let alpha = -x0.signum() * alpha_sq.sqrt();
        let alpha = if x0 == 0.0 { -alpha_sq.sqrt() } else { alpha };
        let mut v = vec![0.0; n];
        v[k + 1] = x0 - alpha;
        for i in k + 2..n {
            v[i] = a[(i, k)];
        }
        let vv: f64 = v.iter().map(|x| x * x).sum();
        if vv == 0.0 {
            continue;
        }
        // A <- (I - 2vv'/v'v) A (I - 2vv'/v'v)
        for j in 0..n {
            let dot: f64 = (k + 1..n).map(|i| v[i] * a[(i, j)]).sum();
            let f = 2.0 * dot / vv;
            for i in k + 1..n {
                a[(i, j)] -= f * v[i];
            }
        }
        for i in 0..n {
            let dot: f64 = (k + 1..n).map(|j| a[(i, j)] * v[j]).sum();
            let f = 2.0 * dot / vv;
            for j in k + 1..n {
                a[(i, j)] -= f * v[j];
            }
        }
        for i in k + 2..n {
            a[(i, k)] = 0.0;
        }
    }
    a.map(|v| Complex64::new(v, 0.0))
}

/// `|det(M - lambda I)|` relative to `(||M|| + |lambda|)^n`, by complex LU
/// with partial pivoting.
pub fn eigen_residual(m: &DMatrix<f64>, lambda: Complex64) -> f64 {
    let n = m.nrows();
    let mut a = m.map(|v| Complex64::new(v, 0.0));
    for i in 0..n {
        a[(i, i)] -= lambda;
    }
    let mut det = Complex64::new(1.0, 0.0);
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[(i, k)].norm().total_cmp(&a[(j, k)].norm()))
            .expect("nonempty");
        if a[(p, k)].norm() == 0.0 {
            return 0.0;
        }
        if p != k {
            a.swap_rows(p, k);
            det = -det;
        }
        det *= a[(k, k)];
        for i in k + 1..n {
            let f = a[(i, k)] / a[(k, k)];
            for j in k..n {
                let t = f * a[(k, j)];
                a[(i, j)] -= t;
            }
        }
    }
    let scale = (m.norm() + lambda.norm()).max(1.0).powi(n as i32);
    det.norm() / scale
}

/// Largest real part of the spectrum.
pub fn spectral_abscissa(m: &DMatrix<f64>) -> Result<f64, SimError> {
    Ok(eigenvalues(m)?.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}

/// Stacked `C, CA, ..., CA^{n-1}`.
pub fn observability_matrix(a: &DMatrix<f64>, c: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let p = c.nrows();
    let mut o = DMatrix::zeros(n * p, n);
    let mut block = c.clone();
    for k in 0..n {
        o.view_mut((k * p, 0), (p, n)).copy_from(&block);
        block = &block * a;
    }
    o
}

/// Numeric rank of the observability matrix, singular values below
/// `n * sigma_max * 1e-12` treated as zero.
pub fn observability_rank(a: &DMatrix<f64>, c: &DMatrix<f64>) -> usize {
    let o = observability_matrix(a, c);
    let sv = o.singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    let tol = a.nrows() as f64 * smax * 1e-12;
    sv.iter().filter(|&&s| s > tol).count()
}
