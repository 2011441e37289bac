//! System configuration files and target-transformation parsing.
//!
//! The configuration format is line-oriented `key = value` with `#`
//! comments. Frequencies are given in laboratory units (Hz) and converted
//! to angular units on load. Recognized keys:
//!
//! ```text
//! larmor_hz  = 100.0e6                # Larmor frequency ω0/2π
//! shifts_hz  = 11930.18, 11202.80     # chemical shift offsets, one per spin
//! j_hz       = 0 103.49 ; 103.49 0    # coupling matrix, ';' separates rows
//! carrier_hz = 100.0e6                # optional, defaults to larmor_hz
//! bound_hz   = 12500.0                # control amplitude bound Ω/2π
//! target     = I * Rz(90)             # optional default target
//! ```
//!
//! Target strings are `*`-separated single-spin factors: `I`, `Rx(deg)`,
//! `Ry(deg)`, `Rz(deg)`, or an explicit row-major 2x2 matrix
//! `mat(re,im, re,im, re,im, re,im)`.

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, SpinAxis};
use crate::spin::{rotation_gate, SpinSystem, TargetTransformation};

/// Parsed configuration: the system plus an optional default target.
#[derive(Debug, Clone)]
pub struct SystemConfig {
    pub system: SpinSystem,
    pub target: Option<TargetTransformation>,
    /// Raw key-value pairs as given, for logging.
    pub entries: Vec<(String, String)>,
}

/// Parse a configuration file from disk.
pub fn load_config(path: &Path) -> Result<SystemConfig> {
    let text = fs::read_to_string(path)?;
    parse_config(&text)
}

/// Parse configuration text; see the module docs for the schema.
pub fn parse_config(text: &str) -> Result<SystemConfig> {
    let mut larmor_hz: Option<f64> = None;
    let mut shifts_hz: Option<Vec<f64>> = None;
    let mut j_hz: Option<Vec<f64>> = None;
    let mut carrier_hz: Option<f64> = None;
    let mut bound_hz: Option<f64> = None;
    let mut target_text: Option<String> = None;
    let mut entries = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config {
                line: lineno + 1,
                message: format!("expected `key = value`, got {line:?}"),
            });
        };
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim().to_string();
        entries.push((key.clone(), value.clone()));
        let scalar = |v: &str| -> Result<f64> {
            v.parse().map_err(|_| Error::Config {
                line: lineno + 1,
                message: format!("bad number {v:?} for {key}"),
            })
        };
        match key.as_str() {
            "larmor_hz" => larmor_hz = Some(scalar(&value)?),
            "carrier_hz" => carrier_hz = Some(scalar(&value)?),
            "bound_hz" => bound_hz = Some(scalar(&value)?),
            "shifts_hz" => {
                let list: Result<Vec<f64>> = value
                    .split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .map(scalar)
                    .collect();
                shifts_hz = Some(list?);
            }
            "j_hz" => {
                let list: Result<Vec<f64>> = value
                    .split(|c: char| c == ',' || c == ';' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .map(scalar)
                    .collect();
                j_hz = Some(list?);
            }
            "target" => target_text = Some(value),
            other => {
                return Err(Error::Config {
                    line: lineno + 1,
                    message: format!("unknown key {other:?}"),
                })
            }
        }
    }

    let missing = |what: &str| Error::Config {
        line: 0,
        message: format!("missing required key {what}"),
    };
    let larmor_hz = larmor_hz.ok_or_else(|| missing("larmor_hz"))?;
    let shifts_hz = shifts_hz.ok_or_else(|| missing("shifts_hz"))?;
    let bound_hz = bound_hz.ok_or_else(|| missing("bound_hz"))?;
    let n = shifts_hz.len();
    let j_hz = j_hz.unwrap_or_else(|| vec![0.0; n * n]);

    let system = SpinSystem::from_hz(larmor_hz, &shifts_hz, &j_hz, carrier_hz, bound_hz)?;
    let target = match target_text {
        None => None,
        Some(text) => Some(parse_target(&text)?),
    };
    Ok(SystemConfig {
        system,
        target,
        entries,
    })
}

/// Parse a target string such as `I*Rz(90)` or
/// `mat(0.7071,0, 0,-0.7071, 0,-0.7071, 0.7071,0) * I`.
pub fn parse_target(text: &str) -> Result<TargetTransformation> {
    let factors: Result<Vec<ComplexMatrix>> = text
        .split('*')
        .map(|f| parse_factor(f.trim()))
        .collect();
    TargetTransformation::new(factors?)
}

fn parse_factor(text: &str) -> Result<ComplexMatrix> {
    let lower = text.to_ascii_lowercase();
    if lower == "i" || lower == "i2" {
        return Ok(ComplexMatrix::identity(2));
    }
    for (prefix, axis) in [
        ("rx", SpinAxis::X),
        ("ry", SpinAxis::Y),
        ("rz", SpinAxis::Z),
    ] {
        if let Some(rest) = lower.strip_prefix(prefix) {
            let inner = rest
                .trim()
                .strip_prefix('(')
                .and_then(|s| s.strip_suffix(')'))
                .ok_or_else(|| {
                    Error::InvalidTarget(format!("expected {prefix}(angle_deg), got {text:?}"))
                })?;
            let degrees: f64 = inner.trim().parse().map_err(|_| {
                Error::InvalidTarget(format!("bad angle {inner:?} in {text:?}"))
            })?;
            return Ok(rotation_gate(axis, degrees.to_radians()));
        }
    }
    if let Some(rest) = lower.strip_prefix("mat") {
        let inner = rest
            .trim()
            .strip_prefix('(')
            .and_then(|s| s.strip_suffix(')'))
            .ok_or_else(|| Error::InvalidTarget(format!("expected mat(...), got {text:?}")))?;
        let numbers: Result<Vec<f64>> = inner
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse().map_err(|_| {
                    Error::InvalidTarget(format!("bad entry {s:?} in {text:?}"))
                })
            })
            .collect();
        let numbers = numbers?;
        if numbers.len() != 8 {
            return Err(Error::InvalidTarget(format!(
                "mat(...) needs 8 numbers (re,im per entry, row-major), got {}",
                numbers.len()
            )));
        }
        let data: Vec<Complex64> = numbers
            .chunks_exact(2)
            .map(|p| Complex64::new(p[0], p[1]))
            .collect();
        return ComplexMatrix::from_vec(2, data);
    }
    Err(Error::InvalidTarget(format!(
        "unrecognized factor {text:?}; expected I, Rx(deg), Ry(deg), Rz(deg), or mat(...)"
    )))
}

/// Configuration text for the bundled trichloroethylene example system.
pub fn trichloroethylene_config_text() -> String {
    "\
# Two homonuclear carbon spins of trichloroethylene (C2HCl3).
larmor_hz  = 100.0e6
shifts_hz  = 11930.18, 11202.80
j_hz       = 0 103.49 ; 103.49 0
carrier_hz = 100.0e6
bound_hz   = 12500.0
target     = I * Rz(90)
"
    .to_string()
}
