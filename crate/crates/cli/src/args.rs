//! Value parsers for gain, pole and grid flags.

use num_complex::Complex64;
use num_rational::BigRational;
use ratobs::algebra::{parse_rational, to_f64};
use ratobs::observer::GridSpec;

/// Exact rational (`3/4`, `-0.25`) or, failing that, a float (`1e-3`).
pub fn number(s: &str) -> Result<f64, String> {
    if let Some(q) = parse_rational(s) {
        return Ok(to_f64(&q));
    }
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("`{s}` is not a number"))
}

pub fn positive(s: &str) -> Result<f64, String> {
    let v = number(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("`{s}` must be positive"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Numbers(pub Vec<f64>);

#[derive(Clone, Debug, PartialEq)]
pub struct Gains(pub Vec<BigRational>);

#[derive(Clone, Debug, PartialEq)]
pub struct Poles(pub Vec<Complex64>);

pub fn numbers(s: &str) -> Result<Numbers, String> {
    s.split(',').map(number).collect::<Result<_, _>>().map(Numbers)
}

/// Comma-separated exact entries; floats are rounded by `rationalize`.
pub fn gains(s: &str) -> Result<Gains, String> {
    s.split(',')
        .map(|g| match parse_rational(g) {
            Some(q) => Ok(q),
            None => number(g).map(ratobs::observer::rationalize),
        })
        .collect::<Result<_, _>>()
        .map(Gains)
}

/// `re`, `re+imi` or `re-imi`, e.g. `-2+1i`.
pub fn pole(s: &str) -> Result<Complex64, String> {
    let t = s.trim();
    let Some(body) = t.strip_suffix('i') else {
        return number(t).map(|re| Complex64::new(re, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'))
        .ok_or_else(|| format!("`{s}` is not a pole"))?;
    let re = number(&body[..split])?;
    let im = match &body[split..] {
        "+" => 1.0,
        "-" => -1.0,
        rest => number(rest.strip_prefix('+').unwrap_or(rest))?,
    };
    Ok(Complex64::new(re, im))
}

pub fn poles(s: &str) -> Result<Poles, String> {
    s.split(',').map(pole).collect::<Result<_, _>>().map(Poles)
}

/// `lo:hi:step`.
pub fn grid(s: &str) -> Result<GridSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, step] = parts[..] else {
        return Err(format!("`{s}` is not lo:hi:step"));
    };
    let g = GridSpec {
        lo: number(lo)?,
        hi: number(hi)?,
        step: positive(step)?,
    };
    if g.values().is_empty() {
        return Err(format!("grid `{s}` is empty"));
    }
    Ok(g)
}

/// Rewrites `--grid lo:hi:step` as `--grid=lo:hi:step` so that a negative
/// `lo` is not taken for a flag while a bare `--grid` keeps its default.
pub fn join_grid(argv: impl IntoIterator<Item = String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut it = argv.into_iter().peekable();
    while let Some(a) = it.next() {
        if a == "--grid" {
            if let Some(v) = it.next_if(|v| v.contains(':') && grid(v).is_ok()) {
                out.push(format!("--grid={v}"));
                continue;
            }
        }
        out.push(a);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_accept_rationals_and_floats() {
        assert_eq!(number("3/4").unwrap(), 0.75);
        assert_eq!(number("-0.25").unwrap(), -0.25);
        assert_eq!(number("1e-3").unwrap(), 1e-3);
        assert!(number("x").is_err());
        assert!(positive("0").is_err());
        assert_eq!(numbers("0.5,-1").unwrap(), Numbers(vec![0.5, -1.0]));
    }

    #[test]
    fn gains_are_exact() {
        let Gains(g) = gains("11/4,0.625").unwrap();
        assert_eq!(g[0], BigRational::new(11.into(), 4.into()));
        assert_eq!(g[1], BigRational::new(5.into(), 8.into()));
    }

    #[test]
    fn pole_forms() {
        assert_eq!(pole("-1").unwrap(), Complex64::new(-1.0, 0.0));
        assert_eq!(pole("-2+1i").unwrap(), Complex64::new(-2.0, 1.0));
        assert_eq!(pole("-2-0.5i").unwrap(), Complex64::new(-2.0, -0.5));
        assert_eq!(pole("-1e-1+i").unwrap(), Complex64::new(-0.1, 1.0));
        assert!(pole("i").is_err());
    }

    #[test]
    fn grid_forms() {
        assert_eq!(grid("-4:4:1").unwrap(), GridSpec::default());
        assert!(grid("1:0:1").is_err());
        assert!(grid("0:1").is_err());
        assert!(grid("0:1:0").is_err());
    }

    #[test]
    fn grid_values_are_joined() {
        let argv = |s: &str| s.split(' ').map(String::from).collect::<Vec<_>>();
        assert_eq!(
            join_grid(argv("synth f --grid -2:2:1 --horizon 5")),
            argv("synth f --grid=-2:2:1 --horizon 5")
        );
        assert_eq!(
            join_grid(argv("synth f --grid --horizon 5")),
            argv("synth f --grid --horizon 5")
        );
        assert_eq!(join_grid(argv("synth f --grid")), argv("synth f --grid"));
    }
}
