use serde::{Deserialize, Serialize};

use crate::algebra::{squarefree_part, Polynomial, RationalFunction, Var};

use super::InverseError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum JacobiVerdict {
    /// Determinant free of the states; nonzero under `side_conditions`.
    Holds {
        det: RationalFunction,
        side_conditions: Vec<Polynomial>,
    },
    Fails {
        det: RationalFunction,
    },
    /// The map is not square.
    Indeterminate {
        rows: usize,
        cols: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JacobiStatus {
    Holds,
    Fails,
    Indeterminate,
    #[serde(rename = "not-applicable")]
    NotApplicable,
}

impl JacobiVerdict {
    pub fn status(&self) -> JacobiStatus {
        match self {
            JacobiVerdict::Holds { .. } => JacobiStatus::Holds,
            JacobiVerdict::Fails { .. } => JacobiStatus::Fails,
            JacobiVerdict::Indeterminate { .. } => JacobiStatus::Indeterminate,
        }
    }

    pub fn det(&self) -> Option<&RationalFunction> {
        match self {
            JacobiVerdict::Holds { det, .. } | JacobiVerdict::Fails { det } => Some(det),
            JacobiVerdict::Indeterminate { .. } => None,
        }
    }
}

/// Jacobian determinant test for a polynomial map `F: states -> R^n`.
/// Coefficients may be rational in the parameters.
pub fn jacobi_condition(map: &[RationalFunction], states: &[Var]) -> Result<JacobiVerdict, InverseError> {
    if map.iter().any(|f| states.iter().any(|&x| f.den().contains_var(x))) {
        return Err(InverseError::NonPolynomialMap);
    }
    if map.len() != states.len() {
        return Ok(JacobiVerdict::Indeterminate {
            rows: map.len(),
            cols: states.len(),
        });
    }
    let jac: Vec<Vec<RationalFunction>> = map
        .iter()
        .map(|f| states.iter().map(|&x| f.partial(x)).collect())
        .collect();
    let det = determinant(jac);
    let free = states.iter().all(|&x| !det.contains_var(x));
    if det.is_zero() || !free {
        return Ok(JacobiVerdict::Fails { det });
    }
    let mut side = Vec::new();
    for p in [det.num(), det.den()] {
        let q = squarefree_part(p);
        if !q.is_constant() {
            side.push(q);
        }
    }
    Ok(JacobiVerdict::Holds {
        det,
        side_conditions: side,
    })
}

/// Gaussian elimination over the field of rational functions.
pub fn determinant(mut a: Vec<Vec<RationalFunction>>) -> RationalFunction {
    let n = a.len();
    let mut det = RationalFunction::one();
    for col in 0..n {
        let Some(p) = (col..n)
            .filter(|&r| !a[r][col].is_zero())
            .min_by_key(|&r| a[r][col].term_count())
        else {
            return RationalFunction::zero();
        };
        if p != col {
            a.swap(p, col);
            det = -&det;
        }
        let pivot = a[col][col].clone();
        det = det.mul(&pivot);
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].div(&pivot).expect("pivot is nonzero");
            let (top, rest) = a.split_at_mut(r);
            for (x, p) in rest[0][col..].iter_mut().zip(&top[col][col..]) {
                *x = x.sub(&factor.mul(p));
            }
        }
    }
    det
}
