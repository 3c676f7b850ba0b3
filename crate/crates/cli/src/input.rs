//! Parsing of command-line values and sample files, and number formatting
//! for reports.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use lfdecouple::funcspec::parse_constant;
use lfdecouple::lagrange::NodeSet;
use lfdecouple::{Complex64, Error};
use serde::Deserialize;

use crate::exit::usage;

/// Comma-separated names, e.g. `x,y,z`.
pub fn parse_vars(text: &str) -> Result<Vec<String>> {
    let vars: Vec<String> = text.split(',').map(|v| v.trim().to_string()).collect();
    if vars.iter().any(|v| v.is_empty()) {
        return Err(usage(format!("empty name in variable list {text:?}")));
    }
    for (i, v) in vars.iter().enumerate() {
        if vars[..i].contains(v) {
            return Err(usage(format!("variable {v:?} listed twice")));
        }
    }
    Ok(vars)
}

/// Comma-separated nonnegative integers, e.g. `1,2`.
pub fn parse_degrees(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|d| {
            d.trim()
                .parse()
                .map_err(|_| usage(format!("invalid degree {d:?}")))
        })
        .collect()
}

/// Comma-separated constant expressions, e.g. `1,2.5,1+2i`.
pub fn parse_values(text: &str) -> Result<Vec<Complex64>> {
    text.split(',')
        .map(|v| Ok(parse_constant(v.trim())?))
        .collect()
}

/// One variable's nodes: `a:b` (integers a..=b), `a:h:b` (step h) or a
/// comma list of constant expressions.
fn parse_node_list(text: &str) -> Result<Vec<Complex64>> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.len() {
        1 => parse_values(text),
        2 | 3 => {
            let num = |s: &str| -> Result<f64> {
                let z = parse_constant(s.trim())?;
                if z.im != 0.0 {
                    return Err(usage(format!("range bound {s:?} must be real")));
                }
                Ok(z.re)
            };
            let lo = num(parts[0])?;
            let hi = num(parts[parts.len() - 1])?;
            let step = if parts.len() == 3 {
                num(parts[1])?
            } else {
                1.0
            };
            if step <= 0.0 || hi < lo {
                return Err(usage(format!("empty node range {text:?}")));
            }
            let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
            Ok((0..count)
                .map(|i| Complex64::new(lo + step * i as f64, 0.0))
                .collect())
        }
        _ => Err(usage(format!("malformed node range {text:?}"))),
    }
}

/// Per-variable node lists separated by `;`, e.g. `1,2;1:3`.
pub fn parse_nodes(text: &str) -> Result<Vec<NodeSet>> {
    text.split(';')
        .map(|part| Ok(NodeSet::new(parse_node_list(part)?)?))
        .collect()
}

/// `lo,hi`.
pub fn parse_box(text: &str) -> Result<(f64, f64)> {
    let values = parse_values(text)?;
    match values.as_slice() {
        [lo, hi] if lo.im == 0.0 && hi.im == 0.0 && lo.re < hi.re => Ok((lo.re, hi.re)),
        _ => Err(usage(format!(
            "--box expects two real bounds lo,hi with lo < hi, got {text:?}"
        ))),
    }
}

/// A number in a JSON file: either a real or an `[re, im]` pair.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum JsonComplex {
    Real(f64),
    Pair([f64; 2]),
}

impl From<JsonComplex> for Complex64 {
    fn from(z: JsonComplex) -> Self {
        match z {
            JsonComplex::Real(re) => Complex64::new(re, 0.0),
            JsonComplex::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

/// Sample file: grid shape, per-variable nodes and values flattened with
/// variable 1 slowest. `variables` is optional.
#[derive(Debug, Clone, Deserialize)]
pub struct SamplesFile {
    pub shape: Vec<usize>,
    pub nodes: Vec<Vec<JsonComplex>>,
    pub values: Vec<JsonComplex>,
    #[serde(default)]
    pub variables: Option<Vec<String>>,
}

impl SamplesFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| {
            Error::Shape(format!("malformed samples file {}: {e}", path.display())).into()
        })
    }

    pub fn node_sets(&self) -> Result<Vec<NodeSet>> {
        if self.nodes.len() != self.shape.len() {
            return Err(Error::Shape(format!(
                "{} node lists for a {}-dimensional shape",
                self.nodes.len(),
                self.shape.len()
            ))
            .into());
        }
        self.nodes
            .iter()
            .zip(&self.shape)
            .enumerate()
            .map(|(l, (nodes, &k))| {
                if nodes.len() != k {
                    return Err(Error::Shape(format!(
                        "variable {} has {} nodes but shape says {k}",
                        l + 1,
                        nodes.len()
                    ))
                    .into());
                }
                Ok(NodeSet::new(nodes.iter().map(|&z| z.into()).collect())?)
            })
            .collect()
    }

    pub fn values(&self) -> Vec<Complex64> {
        self.values.iter().map(|&z| z.into()).collect()
    }
}

/// Shortest form of `x` after rounding to 15 significant digits.
pub fn format_real(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{x:.14e}").parse().unwrap_or(x);
    let a = rounded.abs();
    if (1e-5..1e16).contains(&a) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

/// `a`, `bi` or `a+bi` / `a-bi`.
pub fn format_complex(z: Complex64) -> String {
    match (z.re == 0.0, z.im == 0.0) {
        (_, true) => format_real(z.re),
        (true, false) => format!("{}i", format_real(z.im)),
        (false, false) => {
            let sign = if z.im < 0.0 { '-' } else { '+' };
            format!("{}{sign}{}i", format_real(z.re), format_real(z.im.abs()))
        }
    }
}

pub fn format_point(p: &[Complex64]) -> String {
    p.iter()
        .map(|&z| format_complex(z))
        .collect::<Vec<_>>()
        .join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reals(v: &[f64]) -> Vec<Complex64> {
        v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
    }

    #[test]
    fn node_specs() {
        let sets = parse_nodes("1,2;1:3;0:0.5:1;1/2,2i").unwrap();
        assert_eq!(sets[0].as_slice(), &reals(&[1.0, 2.0])[..]);
        assert_eq!(sets[1].as_slice(), &reals(&[1.0, 2.0, 3.0])[..]);
        assert_eq!(sets[2].as_slice(), &reals(&[0.0, 0.5, 1.0])[..]);
        assert_eq!(
            sets[3].as_slice(),
            &[Complex64::new(0.5, 0.0), Complex64::new(0.0, 2.0)][..]
        );
        assert!(parse_nodes("1,1").is_err());
        assert!(parse_nodes("3:1").is_err());
        assert!(parse_nodes("-2:0").is_ok());
    }

    #[test]
    fn numbers_format_cleanly() {
        assert_eq!(format_real(11.000000000000002), "11");
        assert_eq!(format_real(-2.0), "-2");
        assert_eq!(format_real(0.1 + 0.2), "0.3");
        assert_eq!(format_real(1e-20), "1e-20");
        assert_eq!(format_complex(Complex64::new(1.0, -0.5)), "1-0.5i");
        assert_eq!(format_complex(Complex64::new(0.0, 2.0)), "2i");
    }

    #[test]
    fn variable_lists() {
        assert_eq!(parse_vars("x, y,z").unwrap(), vec!["x", "y", "z"]);
        assert!(parse_vars("x,,z").is_err());
        assert!(parse_vars("x,x").is_err());
    }
}
