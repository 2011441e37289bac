//! Pulse, trace, trajectory, and χ-matrix file formats.
//!
//! The pulse format is a line-oriented CSV with a commented header. Body
//! values are laboratory units (Hz and degrees) rendered with 17
//! significant digits so loading a saved pulse reproduces it bit-exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geodesic::GeodesicEstimate;
use crate::matrix::ComplexMatrix;
use crate::propagation::{BlochTrajectory, PulseSequence};
use crate::qpt::ProcessMatrix;
use crate::spin::SpinSystem;

/// Pulse file format version written by this crate.
pub const PULSE_FORMAT_VERSION: u32 = 1;

/// Render an f64 with 17 significant digits (round-trip exact).
fn render_f64(value: f64) -> String {
    format!("{value:.16e}")
}

/// Serialize a pulse to the text format.
///
/// `fingerprint` stamps the system the pulse was designed for; pass `None`
/// for a free-standing pulse.
pub fn pulse_to_string(pulse: &PulseSequence, fingerprint: Option<u64>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# spinforge pulse v{PULSE_FORMAT_VERSION}");
    let _ = writeln!(out, "# dt_us = {}", render_f64(pulse.dt_us()));
    let _ = writeln!(out, "# steps = {}", pulse.len());
    let _ = writeln!(out, "# bound_hz = {}", render_f64(pulse.bound_hz()));
    let _ = writeln!(
        out,
        "# system_fingerprint = {}",
        fingerprint.map_or_else(|| "none".to_string(), |f| format!("{f:016x}"))
    );
    let _ = writeln!(out, "# columns: index,wx_hz,wy_hz,amplitude_fraction,phase_deg");
    for (index, &(wx_hz, wy_hz)) in pulse.samples_hz().iter().enumerate() {
        let amplitude = wx_hz.hypot(wy_hz);
        let fraction = amplitude / pulse.bound_hz();
        let phase_deg = if amplitude == 0.0 {
            0.0
        } else {
            wy_hz.atan2(wx_hz).to_degrees().rem_euclid(360.0)
        };
        let _ = writeln!(
            out,
            "{index},{},{},{fraction:.9},{phase_deg:.6}",
            render_f64(wx_hz),
            render_f64(wy_hz),
        );
    }
    out
}

/// Write a pulse file; see [`pulse_to_string`].
pub fn save_pulse(pulse: &PulseSequence, fingerprint: Option<u64>, path: &Path) -> Result<()> {
    fs::write(path, pulse_to_string(pulse, fingerprint))?;
    Ok(())
}

/// Parsed pulse file: the sequence plus header metadata.
#[derive(Debug, Clone)]
pub struct PulseFile {
    pub pulse: PulseSequence,
    pub fingerprint: Option<u64>,
}

/// Parse the text format produced by [`pulse_to_string`].
///
/// Validates the header, the declared step count, and the amplitude bound;
/// a sample above the bound is rejected with its index.
pub fn pulse_from_string(text: &str) -> Result<PulseFile> {
    let mut dt_us: Option<f64> = None;
    let mut steps: Option<usize> = None;
    let mut bound_hz: Option<f64> = None;
    let mut fingerprint: Option<u64> = None;
    let mut version_seen = false;
    let mut samples: Vec<(f64, f64)> = Vec::new();

    fn parse_header_value(line: &str) -> Option<&str> {
        line.split_once('=').map(|(_, v)| v.trim())
    }

    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(version) = rest.strip_prefix("spinforge pulse v") {
                let parsed: u32 = version.trim().parse().map_err(|_| {
                    Error::PulseFile(format!("unrecognized format version {version:?}"))
                })?;
                if parsed != PULSE_FORMAT_VERSION {
                    return Err(Error::PulseFile(format!(
                        "unsupported format version {parsed} (expected {PULSE_FORMAT_VERSION})"
                    )));
                }
                version_seen = true;
            } else if rest.starts_with("dt_us") {
                dt_us = parse_header_value(rest).and_then(|v| v.parse().ok());
            } else if rest.starts_with("steps") {
                steps = parse_header_value(rest).and_then(|v| v.parse().ok());
            } else if rest.starts_with("bound_hz") {
                bound_hz = parse_header_value(rest).and_then(|v| v.parse().ok());
            } else if rest.starts_with("system_fingerprint") {
                let value = parse_header_value(rest).unwrap_or("none");
                if value != "none" {
                    fingerprint = Some(u64::from_str_radix(value, 16).map_err(|_| {
                        Error::PulseFile(format!("bad system fingerprint {value:?}"))
                    })?);
                }
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 3 {
            return Err(Error::PulseFile(format!(
                "body line {:?} has {} fields, expected at least index,wx_hz,wy_hz",
                line,
                fields.len()
            )));
        }
        let wx: f64 = fields[1]
            .trim()
            .parse()
            .map_err(|_| Error::PulseFile(format!("bad wx_hz value {:?}", fields[1])))?;
        let wy: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| Error::PulseFile(format!("bad wy_hz value {:?}", fields[2])))?;
        samples.push((wx, wy));
    }

    if !version_seen {
        return Err(Error::PulseFile("missing format version header".into()));
    }
    let dt_us = dt_us.ok_or_else(|| Error::PulseFile("missing dt_us header".into()))?;
    let declared = steps.ok_or_else(|| Error::PulseFile("missing steps header".into()))?;
    let bound_hz = bound_hz.ok_or_else(|| Error::PulseFile("missing bound_hz header".into()))?;
    if samples.len() != declared {
        return Err(Error::PulseFile(format!(
            "header declares {declared} steps but body has {}",
            samples.len()
        )));
    }
    let pulse = PulseSequence::from_lab_units(dt_us, bound_hz, samples)?;
    Ok(PulseFile { pulse, fingerprint })
}

/// Load a pulse file from disk.
pub fn load_pulse(path: &Path) -> Result<PulseFile> {
    let text = fs::read_to_string(path)?;
    pulse_from_string(&text)
}

/// Write a Bloch trajectory as CSV with header `t_us,x,y,z`.
///
/// `decimation` keeps every n-th grid point (1 keeps all); the final point
/// is always included.
pub fn trajectory_to_csv(trajectory: &BlochTrajectory, decimation: usize) -> String {
    let step = decimation.max(1);
    let mut out = String::from("t_us,x,y,z\n");
    let last = trajectory.points.len() - 1;
    for (j, p) in trajectory.points.iter().enumerate() {
        if j % step != 0 && j != last {
            continue;
        }
        let t_us = j as f64 * trajectory.dt * 1e6;
        let _ = writeln!(out, "{t_us:.6},{:.9},{:.9},{:.9}", p[0], p[1], p[2]);
    }
    out
}

/// Write a duration/fidelity search trace as CSV with header
/// `duration_us,phi,converged`.
pub fn trace_to_csv(attempts: &[(f64, f64, bool)]) -> String {
    let mut out = String::from("duration_us,phi,converged\n");
    for &(duration, phi, converged) in attempts {
        let _ = writeln!(
            out,
            "{:.3},{phi:.9},{}",
            duration * 1e6,
            if converged { 1 } else { 0 }
        );
    }
    out
}

/// Real or imaginary part of a χ matrix as CSV with basis-index headers
/// 1..16 on both axes.
pub fn chi_to_csv(chi: &ProcessMatrix, imaginary: bool) -> String {
    let m = chi.chi();
    let mut out = String::from("basis");
    for col in 1..=16 {
        let _ = write!(out, ",{col}");
    }
    out.push('\n');
    for row in 0..16 {
        let _ = write!(out, "{}", row + 1);
        for col in 0..16 {
            let z = m.get(row, col);
            let _ = write!(out, ",{:.9}", if imaginary { z.im } else { z.re });
        }
        out.push('\n');
    }
    out
}

/// One-line summaries used by the command-line tools.
pub fn estimate_summary(estimate: &GeodesicEstimate) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "T_geodesic = {:.0} us", (estimate.t_geodesic * 1e6).round());
    let _ = writeln!(out, "t_geodesic_us = {:.3}", estimate.t_geodesic * 1e6);
    let _ = writeln!(out, "geodesic_length = {:.6}", estimate.geodesic_length);
    let _ = writeln!(
        out,
        "assumption_control_ratio = {:.3}",
        estimate.control_ratio
    );
    let _ = writeln!(
        out,
        "assumption_coupling_ratio = {:.3}",
        estimate.coupling_ratio
    );
    if !estimate.assumption_ok {
        let _ = writeln!(
            out,
            "warning: timescale separation is only loosely satisfied; the estimate may be optimistic"
        );
    }
    out
}

/// Export helper: (x, y, z) rows for a 4x4 matrix dump (debugging aid).
pub fn matrix_to_csv(m: &ComplexMatrix, imaginary: bool) -> String {
    let mut out = String::new();
    for i in 0..m.dim() {
        for j in 0..m.dim() {
            if j > 0 {
                out.push(',');
            }
            let z = m.get(i, j);
            let _ = write!(out, "{:.9}", if imaginary { z.im } else { z.re });
        }
        out.push('\n');
    }
    out
}

/// Fingerprint accessor shared by the CLI.
pub fn system_fingerprint(sys: &SpinSystem) -> u64 {
    sys.fingerprint()
}
