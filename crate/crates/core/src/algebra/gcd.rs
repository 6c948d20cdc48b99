//! Multivariate polynomial GCD over the rationals.
//!
//! Recursive scheme: pick the smallest-index variable `v` present, view both
//! inputs as polynomials in `v` over `Q[other variables]`, split off contents,
//! and run the subresultant polynomial remainder sequence on the primitive
//! parts. Results are integer-primitive with a positive lex-leading coefficient.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::Zero;

use super::poly::Polynomial;
use super::vars::Var;

/// Greatest common divisor, unique up to a rational unit.
pub fn gcd(p: &Polynomial, q: &Polynomial) -> Polynomial {
    if p.is_zero() {
        return q.primitive();
    }
    if q.is_zero() {
        return p.primitive();
    }
    if p.is_constant() || q.is_constant() {
        return Polynomial::one();
    }
    if p == q {
        return p.primitive();
    }
    if coprime_by_evaluation(p, q) {
        return Polynomial::one();
    }
    let (small, large) = if p.len() <= q.len() { (p, q) } else { (q, p) };
    if small.total_degree() <= large.total_degree() && large.div_exact(small).is_some() {
        return small.primitive();
    }
    let v = *p
        .vars()
        .union(&q.vars())
        .next()
        .expect("non-constant input has a variable");
    let (dp, dq) = (p.degree_in(v), q.degree_in(v));
    if dp == 0 {
        return gcd(p, &content_in(q, v));
    }
    if dq == 0 {
        return gcd(&content_in(p, v), q);
    }
    let pc = p.coeffs_in(v);
    let qc = q.coeffs_in(v);
    let cp = content(&pc);
    let cq = content(&qc);
    let c = gcd(&cp, &cq);
    let pp = divide_all(&pc, &cp);
    let qq = divide_all(&qc, &cq);
    let g = subresultant_gcd(pp, qq);
    let gc = content(&g);
    let g = divide_all(&g, &gc);
    (&Polynomial::from_coeffs_in(v, &g) * &c).primitive()
}

/// Sufficient test for `gcd(p, q) = 1`. For a shared variable `v`, fix the
/// others at integers where `lc_v(p)` does not vanish; a nontrivial `G` of
/// positive degree in `v` would then survive as a common factor of the
/// univariate images. Constant image GCDs for every shared variable prove `G`
/// free of all of them.
fn coprime_by_evaluation(p: &Polynomial, q: &Polynomial) -> bool {
    const POINTS: [i64; 3] = [2, -3, 5];
    let (pv, qv) = (p.vars(), q.vars());
    let shared: Vec<Var> = pv.intersection(&qv).copied().collect();
    if shared.is_empty() {
        return true;
    }
    let others: Vec<Var> = pv.union(&qv).copied().collect();
    shared.iter().all(|&v| {
        POINTS.iter().enumerate().any(|(attempt, &base)| {
            let at: BTreeMap<Var, BigRational> = others
                .iter()
                .filter(|&&w| w != v)
                .enumerate()
                .map(|(k, &w)| {
                    (
                        w,
                        BigRational::from_integer((base + 7 * (k as i64 + attempt as i64)).into()),
                    )
                })
                .collect();
            let (Some(a), Some(b)) = (image(p, v, &at), image(q, v, &at)) else {
                return false;
            };
            a.len() == p.degree_in(v) as usize + 1 && univariate_gcd_degree(a, b) == 0
        })
    })
}

/// Dense coefficients of `p` in `v` after fixing every other variable.
fn image(p: &Polynomial, v: Var, at: &BTreeMap<Var, BigRational>) -> Option<Vec<BigRational>> {
    let coeffs: Vec<BigRational> = p
        .eval_partial(at)
        .coeffs_in(v)
        .iter()
        .map(|c| c.constant_value())
        .collect::<Option<_>>()?;
    let mut coeffs = coeffs;
    while coeffs.last().is_some_and(|c| c.is_zero()) {
        coeffs.pop();
    }
    Some(coeffs)
}

/// Degree of the GCD of two univariate polynomials over Q, by Euclid.
fn univariate_gcd_degree(mut a: Vec<BigRational>, mut b: Vec<BigRational>) -> usize {
    if a.is_empty() || b.is_empty() {
        return a.len().max(b.len()).saturating_sub(1);
    }
    while !b.is_empty() {
        while a.len() >= b.len() {
            let f = a[a.len() - 1].clone() / &b[b.len() - 1];
            let shift = a.len() - b.len();
            for (i, c) in b.iter().enumerate() {
                a[i + shift] -= &f * c;
            }
            a.pop();
            while a.last().is_some_and(|c| c.is_zero()) {
                a.pop();
            }
            if a.is_empty() {
                break;
            }
        }
        std::mem::swap(&mut a, &mut b);
    }
    a.len().saturating_sub(1)
}

/// GCD of the coefficients of `p` viewed as a polynomial in `v`.
pub fn content_in(p: &Polynomial, v: Var) -> Polynomial {
    content(&p.coeffs_in(v))
}

fn content(coeffs: &[Polynomial]) -> Polynomial {
    let mut nonzero: Vec<&Polynomial> = coeffs.iter().filter(|c| !c.is_zero()).collect();
    // Small operands first keeps the running GCD cheap.
    nonzero.sort_by_key(|c| c.len());
    let mut acc = Polynomial::zero();
    for c in nonzero {
        acc = gcd(&acc, c);
        if acc.is_constant() {
            return Polynomial::one();
        }
    }
    if acc.is_zero() {
        Polynomial::one()
    } else {
        acc
    }
}

fn divide_all(coeffs: &[Polynomial], d: &Polynomial) -> Vec<Polynomial> {
    coeffs
        .iter()
        .map(|c| c.div_exact(d).expect("content divides every coefficient"))
        .collect()
}

type Upoly = Vec<Polynomial>;

fn trim(mut a: Upoly) -> Upoly {
    while a.last().is_some_and(|c| c.is_zero()) {
        a.pop();
    }
    a
}

fn deg(a: &Upoly) -> usize {
    a.len() - 1
}

/// Pseudo-remainder `lc(b)^(deg a - deg b + 1) * a mod b`.
fn prem(a: &Upoly, b: &Upoly) -> Upoly {
    let db = deg(b);
    let lcb = &b[db];
    let mut r = a.clone();
    let mut e = deg(a) + 1 - db;
    while !r.is_empty() && deg(&r) >= db {
        let dr = deg(&r);
        let lr = r[dr].clone();
        let shift = dr - db;
        for c in r.iter_mut() {
            *c = &*c * lcb;
        }
        for (i, bc) in b.iter().enumerate() {
            r[i + shift] = &r[i + shift] - &(&lr * bc);
        }
        r = trim(r);
        e -= 1;
    }
    if e > 0 {
        let f = lcb.pow(e as u32);
        for c in r.iter_mut() {
            *c = &*c * &f;
        }
    }
    r
}

/// GCD of two primitive univariate polynomials over a polynomial domain,
/// up to a factor from that domain.
fn subresultant_gcd(a: Upoly, b: Upoly) -> Upoly {
    let (mut a, mut b) = if deg(&a) >= deg(&b) { (a, b) } else { (b, a) };
    let mut g = Polynomial::one();
    let mut h = Polynomial::one();
    loop {
        let delta = deg(&a) - deg(&b);
        let r = prem(&a, &b);
        if r.is_empty() {
            return b;
        }
        if deg(&r) == 0 {
            return vec![Polynomial::one()];
        }
        let divisor = &g * &h.pow(delta as u32);
        a = b;
        b = r
            .iter()
            .map(|c| c.div_exact(&divisor).expect("subresultant division is exact"))
            .collect();
        g = a[deg(&a)].clone();
        h = if delta == 0 {
            h
        } else {
            g.pow(delta as u32)
                .div_exact(&h.pow(delta as u32 - 1))
                .expect("subresultant division is exact")
        };
    }
}

/// Product of the distinct irreducible factors of `p`, up to a unit.
pub fn squarefree_part(p: &Polynomial) -> Polynomial {
    if p.is_zero() {
        return Polynomial::zero();
    }
    if p.is_constant() {
        return Polynomial::one();
    }
    let v = *p.vars().iter().next().expect("non-constant");
    let c = content_in(p, v);
    let pp = p.div_exact(&c).expect("content divides");
    let g = gcd(&pp, &pp.partial(v));
    let s = pp.div_exact(&g).expect("gcd divides");
    (&s * &squarefree_part(&c)).primitive()
}
