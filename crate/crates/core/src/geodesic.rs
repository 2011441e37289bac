//! Two-timescale analysis of a homonuclear pair: the relative motion
//! V(t) = U_1†(t) U_2(t), its geodesic length in SU(2), and the resulting
//! minimum-time estimate
//!
//!   T_geodesic = √2 · ‖log(U_1f† U_2f)‖_F / (|δ1 - δ2| ω0).
//!
//! The relative motion moves at the nearly constant speed |δ1 - δ2| ω0/√2
//! because its generator is dominated by the -ω0 σz part of H_d; the
//! estimate is the geodesic length divided by that speed.

use crate::error::{Error, Result};
use crate::matrix::{expm_from_eigh, logm_su2, ComplexMatrix};
use crate::propagation::PulseSequence;
use crate::spin::{single_spin_effective, single_spin_hd, SpinSystem, TargetTransformation};

/// Ratio above which each inequality of the timescale assumption
/// Ω ≫ |δ1-δ2|ω0 ≫ 2πJ is considered satisfied. Advisory only; the
/// estimate is still produced when the check fails.
pub const ASSUMPTION_RATIO: f64 = 10.0;

/// Output of [`estimate_min_time`].
#[derive(Debug, Clone)]
pub struct GeodesicEstimate {
    /// ‖log(U_1f† U_2f)‖_F, dimensionless.
    pub geodesic_length: f64,
    /// Speed of the relative motion, |δ1-δ2| ω0/√2 (rad/s).
    pub relative_speed: f64,
    /// Estimated minimum duration (seconds).
    pub t_geodesic: f64,
    /// Whether both timescale inequalities hold at [`ASSUMPTION_RATIO`].
    pub assumption_ok: bool,
    /// Ω / (|δ1-δ2| ω0).
    pub control_ratio: f64,
    /// (|δ1-δ2| ω0) / (2π J_max); infinite when J = 0.
    pub coupling_ratio: f64,
}

/// Geodesic length of the relative target rotation, ‖log(U_1f† U_2f)‖_F.
pub fn geodesic_length(target: &TargetTransformation) -> Result<f64> {
    if target.n_spins() != 2 {
        return Err(Error::Unsupported(format!(
            "geodesic length requires exactly 2 spins, target has {}",
            target.n_spins()
        )));
    }
    let relative = target.factor(0).dagger().mul(target.factor(1));
    Ok(logm_su2(&relative)?.frobenius_norm())
}

/// Minimum-time estimate for a local transformation on a two-spin system.
pub fn estimate_min_time(
    sys: &SpinSystem,
    target: &TargetTransformation,
) -> Result<GeodesicEstimate> {
    if sys.n_spins() != 2 {
        return Err(Error::Unsupported(format!(
            "minimum-time estimate requires exactly 2 spins, system has {}",
            sys.n_spins()
        )));
    }
    if target.n_spins() != 2 {
        return Err(Error::Unsupported(format!(
            "minimum-time estimate requires a 2-spin target, got {}",
            target.n_spins()
        )));
    }
    let difference = sys.shift_difference()?;
    if difference <= 0.0 {
        return Err(Error::DegenerateShifts { difference });
    }
    let length = geodesic_length(target)?;
    let relative_speed = difference / 2f64.sqrt();
    let t_geodesic = length / relative_speed;

    let control_ratio = sys.control_bound() / difference;
    let max_j = sys.max_j_rad();
    let coupling_ratio = if max_j > 0.0 {
        difference / max_j
    } else {
        f64::INFINITY
    };
    Ok(GeodesicEstimate {
        geodesic_length: length,
        relative_speed,
        t_geodesic,
        assumption_ok: control_ratio >= ASSUMPTION_RATIO && coupling_ratio >= ASSUMPTION_RATIO,
        control_ratio,
        coupling_ratio,
    })
}

/// Relative motions V_k(t) = U_1†(t) U_k(t) for k = 2…N, integrated on the
/// pulse grid with the same piecewise-constant exponential stepping as the
/// full propagator. Each inner list holds V_k at t = 0, Δt, …, MΔt.
pub fn relative_motion_trajectories(
    sys: &SpinSystem,
    pulse: &PulseSequence,
) -> Result<Vec<Vec<ComplexMatrix>>> {
    if sys.n_spins() < 2 {
        return Err(Error::Unsupported(
            "relative motion requires at least 2 spins".into(),
        ));
    }
    let n = sys.n_spins();
    let dt = pulse.dt();
    let mut u1 = ComplexMatrix::identity(2);
    let mut v: Vec<ComplexMatrix> = vec![ComplexMatrix::identity(2); n - 1];
    let mut trajectories: Vec<Vec<ComplexMatrix>> = v.iter().map(|m| vec![m.clone()]).collect();

    for j in 0..pulse.len() {
        let (wx, wy) = pulse.sample(j);
        // Generator of V_k over this step, with U_1 held at the step start.
        let hd = single_spin_hd(sys, wx, wy);
        let rotated = u1.dagger().mul(&hd).mul(&u1);
        for (idx, vk) in v.iter_mut().enumerate() {
            let k = idx + 1;
            let coefficient = sys.shift(0) - sys.shift(k);
            let generator = rotated.scale_re(coefficient);
            let step = crate::matrix::expm_skew(&generator, dt)?;
            *vk = step.mul(vk);
            trajectories[idx].push(vk.clone());
        }
        let h1 = single_spin_effective(sys, 0, wx, wy)?;
        let decomposition = crate::matrix::eigh(&h1)?;
        u1 = expm_from_eigh(&decomposition, dt).mul(&u1);
    }
    Ok(trajectories)
}

/// Relative motion V(t) of spin 2 with respect to spin 1 (two-spin systems).
pub fn relative_motion_trajectory(
    sys: &SpinSystem,
    pulse: &PulseSequence,
) -> Result<Vec<ComplexMatrix>> {
    if sys.n_spins() != 2 {
        return Err(Error::Unsupported(format!(
            "two-spin relative motion requires exactly 2 spins, system has {}",
            sys.n_spins()
        )));
    }
    Ok(relative_motion_trajectories(sys, pulse)?.remove(0))
}

/// Exact path length of V(t) over the pulse, ∫‖(δ1-δ2) H_d(t)‖_F dt on the
/// grid (left endpoints). H_d includes the control terms, so the integrand
/// is |δ1-δ2|·√((ω0² + ω_r²)/2) at each step.
pub fn path_length(sys: &SpinSystem, pulse: &PulseSequence) -> Result<f64> {
    if sys.n_spins() != 2 {
        return Err(Error::Unsupported(format!(
            "path length requires exactly 2 spins, system has {}",
            sys.n_spins()
        )));
    }
    let difference = (sys.shift(0) - sys.shift(1)).abs();
    let w0_sq = sys.omega0() * sys.omega0();
    let mut length = 0.0;
    for j in 0..pulse.len() {
        let (wx, wy) = pulse.sample(j);
        let speed = difference * ((w0_sq + wx * wx + wy * wy) / 2.0).sqrt();
        length += speed * pulse.dt();
    }
    Ok(length)
}
