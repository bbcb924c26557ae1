//! Gridded distribution curves and their CSV/JSON forms.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Ordered `(r, value)` grid with the metadata needed to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionCurve {
    pub method: String,
    pub metadata: BTreeMap<String, String>,
    pub r: Vec<f64>,
    pub value: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => invalid(format!("unknown format {other:?}; expected csv or json")),
        }
    }
}

/// Uniform grid `min..=max` with `steps` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl GridSpec {
    pub fn new(min: f64, max: f64, steps: usize) -> Result<Self> {
        if steps < 2 {
            return invalid(format!("grid needs at least 2 steps, got {steps}"));
        }
        if !(min.is_finite() && max.is_finite() && min < max) {
            return invalid(format!("grid bounds must satisfy min < max, got {min}:{max}"));
        }
        Ok(Self { min, max, steps })
    }

    pub fn points(&self) -> Vec<f64> {
        let h = (self.max - self.min) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.max
                } else {
                    self.min + h * i as f64
                }
            })
            .collect()
    }
}

impl std::str::FromStr for GridSpec {
    type Err = Error;

    /// `min:max:steps`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return invalid(format!("grid must be min:max:steps, got {s:?}"));
        }
        let num = |p: &str| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("bad grid bound {p:?}")))
        };
        let steps = parts[2]
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::InvalidArgument(format!("bad grid step count {:?}", parts[2])))?;
        GridSpec::new(num(parts[0])?, num(parts[1])?, steps)
    }
}

/// Shortest decimal with 12 significant digits.
pub fn fmt_sig12(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let s = format!("{v:.11e}");
    let (mant, exp) = s.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let fixed = format!("{v:.decimals$}");
        if fixed.contains('.') {
            fixed.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            fixed
        }
    } else {
        let mant = if mant.contains('.') {
            mant.trim_end_matches('0').trim_end_matches('.')
        } else {
            mant
        };
        format!("{mant}e{exp}")
    }
}

impl DistributionCurve {
    pub fn new(method: impl Into<String>, r: Vec<f64>, value: Vec<f64>) -> Result<Self> {
        if r.len() != value.len() {
            return invalid("curve abscissae and values differ in length");
        }
        if r.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("curve abscissae must be strictly increasing");
        }
        let method = method.into();
        let mut metadata = BTreeMap::new();
        metadata.insert("version".to_string(), env!("CARGO_PKG_VERSION").to_string());
        Ok(Self {
            method,
            metadata,
            r,
            value,
        })
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Nondecreasing with every value in `[0, 1]`, up to `slack`.
    pub fn is_cdf_like(&self, slack: f64) -> bool {
        self.value.iter().all(|&v| v >= -slack && v <= 1.0 + slack)
            && self.value.windows(2).all(|w| w[1] >= w[0] - slack)
    }

    /// Trapezoid rule for `∫ (1 − F)` over the grid, plus `r_min` for the
    /// mass assumed to sit above it.
    pub fn mean_from_cdf(&self) -> f64 {
        let first = self.r.first().copied().unwrap_or(0.0);
        first
            + self
                .r
                .windows(2)
                .zip(self.value.windows(2))
                .map(|(r, v)| 0.5 * (r[1] - r[0]) * ((1.0 - v[0]) + (1.0 - v[1])))
                .sum::<f64>()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# method: {}", self.method).unwrap();
        for (k, v) in &self.metadata {
            writeln!(s, "# {k}: {v}").unwrap();
        }
        s.push_str("r,value\n");
        for (r, v) in self.r.iter().zip(&self.value) {
            writeln!(s, "{},{}", fmt_sig12(*r), fmt_sig12(*v)).unwrap();
        }
        s
    }

    pub fn from_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut method = None;
        let mut metadata = BTreeMap::new();
        let (mut r, mut value) = (Vec::new(), Vec::new());
        let mut header = false;
        for line in reader.lines() {
            let line = line?;
            if let Some(meta) = line.strip_prefix("# ") {
                let (k, v) = meta
                    .split_once(": ")
                    .ok_or_else(|| Error::InvalidArgument(format!("bad metadata line {line:?}")))?;
                if k == "method" {
                    method = Some(v.to_string());
                } else {
                    metadata.insert(k.to_string(), v.to_string());
                }
            } else if !header {
                if line.trim() != "r,value" {
                    return invalid(format!("expected header r,value, got {line:?}"));
                }
                header = true;
            } else if !line.trim().is_empty() {
                let (a, b) = line
                    .split_once(',')
                    .ok_or_else(|| Error::InvalidArgument(format!("bad row {line:?}")))?;
                let parse = |t: &str| {
                    t.parse::<f64>()
                        .map_err(|_| Error::InvalidArgument(format!("bad number {t:?}")))
                };
                r.push(parse(a)?);
                value.push(parse(b)?);
            }
        }
        let method = method.ok_or_else(|| Error::InvalidArgument("missing method line".into()))?;
        Ok(Self {
            method,
            metadata,
            r,
            value,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn write<W: Write>(&self, format: Format, mut out: W) -> Result<()> {
        match format {
            Format::Csv => out.write_all(self.to_csv().as_bytes())?,
            Format::Json => {
                out.write_all(self.to_json()?.as_bytes())?;
                out.write_all(b"\n")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> DistributionCurve {
        DistributionCurve::new("contact", vec![0.0, 0.5, 1.0], vec![0.0, 0.544062334, 0.95])
            .unwrap()
            .with("d", 2)
            .with("lambda", 1.0)
    }

    #[test]
    fn grid_parsing() {
        let g: GridSpec = "0:2:201".parse().unwrap();
        let p = g.points();
        assert_eq!(p.len(), 201);
        assert_eq!((p[0], p[200]), (0.0, 2.0));
        assert!((p[25] - 0.25).abs() < 1e-15);
        for bad in ["0:2:1", "2:0:10", "0:2", "a:2:3", "0:2:x"] {
            assert!(bad.parse::<GridSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn sig12_examples() {
        assert_eq!(fmt_sig12(0.0), "0");
        assert_eq!(fmt_sig12(0.5), "0.5");
        assert_eq!(fmt_sig12(2.0), "2");
        assert_eq!(fmt_sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_sig12(123456.7891234567), "123456.789123");
        assert_eq!(fmt_sig12(1.25e-9), "1.25e-9");
        assert_eq!(fmt_sig12(-2.5e15), "-2.5e15");
    }

    #[test]
    fn csv_layout_and_round_trip() {
        let c = sample();
        let text = c.to_csv();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# method: contact");
        assert!(lines.contains(&"# d: 2"));
        let header = lines.iter().position(|l| *l == "r,value").unwrap();
        assert_eq!(lines.len() - header - 1, 3);
        let back = DistributionCurve::from_csv(text.as_bytes()).unwrap();
        assert_eq!(back.metadata, c.metadata);
        for (a, b) in back.value.iter().zip(&c.value) {
            assert!((a - b).abs() <= 1e-11 * b.abs().max(1e-300));
        }
    }

    #[test]
    fn json_round_trip() {
        let c = sample();
        assert_eq!(DistributionCurve::from_json(&c.to_json().unwrap()).unwrap(), c);
    }

    #[test]
    fn rejects_bad_curves() {
        assert!(DistributionCurve::new("x", vec![0.0, 0.0], vec![0.0, 1.0]).is_err());
        assert!(DistributionCurve::new("x", vec![0.0], vec![]).is_err());
        assert!(DistributionCurve::from_csv("r,value\n0,0\n".as_bytes()).is_err());
    }

    #[test]
    fn mean_of_uniform() {
        let r: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let c = DistributionCurve::new("u", r.clone(), r).unwrap();
        assert!((c.mean_from_cdf() - 0.5).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn sig12_keeps_twelve_digits(v in -1e20f64..1e20) {
            let back: f64 = fmt_sig12(v).parse().unwrap();
            prop_assert!((back - v).abs() <= 5e-12 * v.abs());
        }
    }
}
