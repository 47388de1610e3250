//! Specification strings for test functions:
//!
//! ```text
//! one | constant(2.5)
//! gaussian(amplitude=1, inverse_width=1, center=0 0)
//! snapshot(t0=1)
//! monomial(k=2 0)
//! product(gaussian(inverse_width=2); snapshot(t0=1))
//! mixture(0.5*gaussian(center=1); 0.5*gaussian(center=-1))
//! tabulated(path=f.csv, tail=compact)
//! ```
//!
//! Omitted gaussian keys default to amplitude 1, inverse width 1 and the
//! origin. Product factors are one-dimensional.

use std::path::Path;

use crate::error::{Error, Result};
use crate::kernel::{MultiIndex, StableParams};

use super::function::TestFunction;
use super::tabulation::{Tabulation, Tail};

fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

/// Splits on `sep` outside parentheses.
fn split_top(s: &str, sep: char) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            _ if c == sep && depth == 0 => {
                parts.push(&s[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts.into_iter().map(str::trim).filter(|p| !p.is_empty()).collect()
}

fn number(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("'{s}' is not a number")))
}

fn vector(s: &str) -> Result<Vec<f64>> {
    s.split_whitespace().map(number).collect()
}

fn key_values(args: &str) -> Result<Vec<(&str, &str)>> {
    split_top(args, ',')
        .into_iter()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::Config(format!("expected key=value, got '{kv}'")))
        })
        .collect()
}

/// Parses a test-function specification for a motion with parameters
/// `params`. Relative tabulation paths resolve against `base_dir`.
pub fn parse_function(spec: &str, params: &StableParams, base_dir: Option<&Path>) -> Result<TestFunction> {
    parse_in(spec.trim(), params.alpha(), params.dim(), base_dir)
}

fn parse_in(spec: &str, alpha: f64, dim: usize, base_dir: Option<&Path>) -> Result<TestFunction> {
    let (name, args) = match spec.find('(') {
        Some(open) => {
            let Some(inner) = spec[open + 1..].strip_suffix(')') else {
                return config_err(format!("unbalanced parentheses in '{spec}'"));
            };
            (spec[..open].trim(), inner.trim())
        }
        None => (spec, ""),
    };
    match name {
        "one" => Ok(TestFunction::one(dim)),
        "zero" => Ok(TestFunction::Constant { dim, value: 0.0 }),
        "constant" => Ok(TestFunction::Constant {
            dim,
            value: number(args)?,
        }),
        "gaussian" => {
            let mut amplitude = 1.0;
            let mut inverse_width = 1.0;
            let mut center = vec![0.0; dim];
            for (key, value) in key_values(args)? {
                match key {
                    "amplitude" => amplitude = number(value)?,
                    "inverse_width" => inverse_width = number(value)?,
                    "center" => center = vector(value)?,
                    _ => return config_err(format!("unknown gaussian key '{key}'")),
                }
            }
            if center.len() != dim {
                return config_err(format!("gaussian centre needs {dim} coordinates"));
            }
            TestFunction::gaussian(center, inverse_width, amplitude).map_err(|e| Error::Config(e.to_string()))
        }
        "snapshot" => {
            let mut t0 = None;
            for (key, value) in key_values(args)? {
                match key {
                    "t0" => t0 = Some(number(value)?),
                    _ => return config_err(format!("unknown snapshot key '{key}'")),
                }
            }
            let t0 = t0.ok_or_else(|| Error::Config("snapshot needs t0".into()))?;
            let params = StableParams::new(alpha, dim)?;
            TestFunction::snapshot(params, t0).map_err(|e| Error::Config(e.to_string()))
        }
        "monomial" => {
            let mut k = None;
            for (key, value) in key_values(args)? {
                match key {
                    "k" => {
                        let entries = value
                            .split_whitespace()
                            .map(|v| {
                                v.parse::<u32>()
                                    .map_err(|_| Error::Config(format!("bad exponent '{v}'")))
                            })
                            .collect::<Result<Vec<_>>>()?;
                        k = Some(MultiIndex::new(entries));
                    }
                    _ => return config_err(format!("unknown monomial key '{key}'")),
                }
            }
            let k = k.ok_or_else(|| Error::Config("monomial needs k".into()))?;
            if k.dim() != dim {
                return config_err(format!("monomial exponent needs {dim} entries"));
            }
            Ok(TestFunction::Monomial(k))
        }
        "product" => {
            let factors = split_top(args, ';')
                .into_iter()
                .map(|f| parse_in(f, alpha, 1, base_dir))
                .collect::<Result<Vec<_>>>()?;
            if factors.len() != dim {
                return config_err(format!("product needs {dim} factors, got {}", factors.len()));
            }
            TestFunction::product(factors).map_err(|e| Error::Config(e.to_string()))
        }
        "mixture" => {
            let components = split_top(args, ';')
                .into_iter()
                .map(|c| {
                    let (w, f) = c
                        .split_once('*')
                        .ok_or_else(|| Error::Config(format!("mixture component '{c}' must read weight*function")))?;
                    Ok((number(w)?, parse_in(f.trim(), alpha, dim, base_dir)?))
                })
                .collect::<Result<Vec<_>>>()?;
            TestFunction::mixture(components).map_err(|e| Error::Config(e.to_string()))
        }
        "tabulated" => {
            let mut path = None;
            let mut tail = Tail::Unknown;
            for (key, value) in key_values(args)? {
                match key {
                    "path" => path = Some(value),
                    "tail" => {
                        tail = match value {
                            "compact" => Tail::CompactSupport,
                            "unknown" => Tail::Unknown,
                            _ => return config_err(format!("tail must be 'compact' or 'unknown', got '{value}'")),
                        }
                    }
                    _ => return config_err(format!("unknown tabulated key '{key}'")),
                }
            }
            let path = path.ok_or_else(|| Error::Config("tabulated needs path".into()))?;
            let full = match base_dir {
                Some(dir) => dir.join(path),
                None => Path::new(path).to_path_buf(),
            };
            let text = std::fs::read_to_string(&full)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", full.display())))?;
            let table = Tabulation::from_csv(&text, tail)?;
            if table.dim() != dim {
                return config_err(format!("tabulation has dimension {}, expected {dim}", table.dim()));
            }
            Ok(TestFunction::Tabulated(table))
        }
        _ => config_err(format!("unknown test function '{name}'")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(dim: usize) -> StableParams {
        StableParams::new(2.0, dim).unwrap()
    }

    #[test]
    fn parses_each_kind() {
        assert_eq!(parse_function("one", &params(2), None).unwrap(), TestFunction::one(2));
        assert_eq!(
            parse_function("gaussian", &params(1), None).unwrap(),
            TestFunction::standard_gaussian(1)
        );
        let g = parse_function("gaussian(amplitude=2, center=1 -1)", &params(2), None).unwrap();
        assert_eq!(g, TestFunction::gaussian(vec![1.0, -1.0], 1.0, 2.0).unwrap());
        let p = parse_function("product(gaussian(inverse_width=2); snapshot(t0=1))", &params(2), None).unwrap();
        assert!(matches!(p, TestFunction::Product(ref f) if f.len() == 2));
        let m = parse_function(
            "mixture(0.5*gaussian(center=1); 0.5*gaussian(center=-1))",
            &params(1),
            None,
        )
        .unwrap();
        assert!((m.eval(&[0.0]) - (-1.0f64).exp()).abs() < 1e-15);
        let k = parse_function("monomial(k=2)", &params(1), None).unwrap();
        assert_eq!(k.eval(&[3.0]), 9.0);
    }

    #[test]
    fn display_round_trips() {
        for spec in [
            "gaussian(amplitude=1.5, inverse_width=0.25, center=0.5 -2)",
            "mixture(0.25*gaussian(amplitude=1, inverse_width=1, center=0 0); 0.75*snapshot(t0=2))",
        ] {
            let f = parse_function(spec, &params(2), None).unwrap();
            assert_eq!(parse_function(&f.to_string(), &params(2), None).unwrap(), f);
        }
    }

    #[test]
    fn rejects_malformed_specs() {
        for bad in [
            "gaussian(center=0)",
            "gauss",
            "snapshot()",
            "product(gaussian)",
            "constant(x)",
            "gaussian(width=1",
        ] {
            assert!(parse_function(bad, &params(2), None).is_err(), "{bad}");
        }
    }
}
