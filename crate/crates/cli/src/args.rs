//! Grid and functional-kind syntax shared by the subcommands.

use std::fmt;
use std::str::FromStr;

use anyhow::{bail, Context};
use serde::Serialize;
use xyent::FunctionalKind;

/// Either `start:stop:count` (inclusive, evenly spaced) or a comma-separated list.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(into = "Vec<f64>")]
pub struct Grid(pub Vec<f64>);

impl From<Grid> for Vec<f64> {
    fn from(g: Grid) -> Self {
        g.0
    }
}

impl FromStr for Grid {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let values = match parts.as_slice() {
            [start, stop, count] => {
                let a: f64 = parse_real(start)?;
                let b: f64 = parse_real(stop)?;
                let n: usize = count.trim().parse().with_context(|| format!("bad count {count:?}"))?;
                match n {
                    0 => bail!("grid {s:?} has no points"),
                    1 => vec![a],
                    _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
                }
            }
            [list] => list.split(',').map(parse_real).collect::<anyhow::Result<_>>()?,
            _ => bail!("grid {s:?} is neither start:stop:count nor a comma list"),
        };
        Ok(Grid(values))
    }
}

fn parse_real(s: &str) -> anyhow::Result<f64> {
    let x: f64 = s.trim().parse().with_context(|| format!("bad number {s:?}"))?;
    if !x.is_finite() {
        bail!("grid values must be finite, got {s:?}");
    }
    Ok(x)
}

/// `pressure:P` (`P` may be `inf`), `es` or `gc:S`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kind(pub FunctionalKind);

impl Kind {
    pub fn name(self) -> &'static str {
        match self.0 {
            FunctionalKind::Pressure(_) => "pressure",
            FunctionalKind::Es => "es",
            FunctionalKind::Gc(_) => "gc",
        }
    }

    pub fn p(self) -> Option<f64> {
        match self.0 {
            FunctionalKind::Pressure(p) => Some(p),
            _ => None,
        }
    }

    pub fn s(self) -> Option<f64> {
        match self.0 {
            FunctionalKind::Gc(s) => Some(s),
            _ => None,
        }
    }
}

impl FromStr for Kind {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (head, arg) = match lower.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (lower.as_str(), None),
        };
        let kind = match (head, arg) {
            ("es", None) => FunctionalKind::Es,
            ("pressure", Some("inf")) => FunctionalKind::Pressure(f64::INFINITY),
            ("pressure", Some(p)) => FunctionalKind::Pressure(p.parse().with_context(|| format!("bad p in {s:?}"))?),
            ("gc", Some(t)) => FunctionalKind::Gc(t.parse().with_context(|| format!("bad s in {s:?}"))?),
            _ => bail!("unknown functional {s:?}; expected pressure:P, pressure:inf, es or gc:S"),
        };
        Ok(Kind(kind.validate()?))
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            FunctionalKind::Pressure(p) if p.is_infinite() => write!(f, "pressure:inf"),
            FunctionalKind::Pressure(p) => write!(f, "pressure:{p}"),
            FunctionalKind::Es => write!(f, "es"),
            FunctionalKind::Gc(s) => write!(f, "gc:{s}"),
        }
    }
}

impl Serialize for Kind {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

/// Fixed 17-significant-digit scientific notation.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt_real(x: Option<f64>) -> String {
    x.map(real).unwrap_or_default()
}
