//! Minimum-time search: geodesic seed, single-spin ΔT, upper-bound ramp,
//! grid bisection, and final smoothing.
//!
//! Durations live on the Δt grid as integer step counts. The search never
//! probes below the grid-aligned geodesic estimate, ramps upward in ΔT
//! increments until an optimization converges, bisects the final bracket,
//! and smooths the winning pulse.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geodesic::estimate_min_time;
use crate::grape::{
    max_amplitude_jump, optimize_fixed_time, smooth_and_reoptimize, EnsembleSpec,
    OptimizationResult, OptimizerConfig,
};
use crate::matrix::{trace_fidelity, ComplexMatrix};
use crate::propagation::PulseSequence;
use crate::spin::{single_spin_subsystem, SpinSystem, TargetTransformation};

/// Cap on the single-spin duration ramp (grid steps).
const SINGLE_SPIN_RAMP_CAP: usize = 512;

/// Search knobs; optimizer behavior is delegated to [`OptimizerConfig`].
#[derive(Debug, Clone)]
pub struct SearchConfig {
    /// Grid step Δt in seconds.
    pub dt: f64,
    /// Override for the ramp increment ΔT (seconds); computed from
    /// single-spin minimum times when absent.
    pub delta_t_override: Option<f64>,
    /// Ramp attempts before the upper-bound search gives up.
    pub max_ramp_steps: usize,
    pub optimizer: OptimizerConfig,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            dt: 1e-6,
            delta_t_override: None,
            max_ramp_steps: 50,
            optimizer: OptimizerConfig::default(),
        }
    }
}

impl SearchConfig {
    /// Convergence threshold Φ0 (held by the optimizer config).
    pub fn phi0(&self) -> f64 {
        self.optimizer.phi0
    }
}

/// One optimization attempt in the search.
#[derive(Debug, Clone)]
pub struct SearchAttempt {
    /// Duration in seconds.
    pub duration: f64,
    /// Best fidelity reached (ensemble-weighted when an ensemble is active).
    pub fidelity: f64,
    pub converged: bool,
}

/// Full record of a minimum-time search.
#[derive(Debug, Clone)]
pub struct SearchTrace {
    /// Every optimization attempted, in order.
    pub attempts: Vec<SearchAttempt>,
    /// Geodesic estimate for the target (seconds).
    pub t_geodesic: f64,
    /// Ramp increment used (seconds).
    pub delta_t: f64,
    /// Smallest converged duration (seconds).
    pub t_minimum: f64,
    /// The pulse achieving `t_minimum`, after smoothing.
    pub pulse: PulseSequence,
    /// Fidelity of `pulse` on the nominal system.
    pub fidelity: f64,
    /// Whether the final pulse meets the amplitude smoothness threshold.
    pub smoothness_ok: bool,
}

impl SearchTrace {
    pub fn attempts_for_csv(&self) -> Vec<(f64, f64, bool)> {
        self.attempts
            .iter()
            .map(|a| (a.duration, a.fidelity, a.converged))
            .collect()
    }
}

fn record(attempts: &mut Vec<SearchAttempt>, duration: f64, result: &OptimizationResult) {
    attempts.push(SearchAttempt {
        duration,
        fidelity: result.ensemble_fidelity.unwrap_or(result.fidelity),
        converged: result.converged,
    });
}

/// Warm-start seed derived from a previous best pulse: truncated when
/// shrinking, padded with copies of the final sample when growing, plus a
/// 1% relative perturbation (deterministic in the seed and step count).
fn adapt_pulse(previous: &PulseSequence, steps: usize, seed: u64) -> Option<PulseSequence> {
    if previous.is_empty() {
        return None;
    }
    let bound = previous.bound();
    let mut samples = previous.samples();
    let last = *samples.last().expect("non-empty");
    while samples.len() < steps {
        samples.push(last);
    }
    samples.truncate(steps);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (steps as u64).wrapping_mul(0x517c_c1b7_2722_0a95));
    for sample in samples.iter_mut() {
        sample.0 *= 1.0 + rng.random_range(-0.01..0.01);
        sample.1 *= 1.0 + rng.random_range(-0.01..0.01);
        let amplitude = sample.0.hypot(sample.1);
        if amplitude > bound {
            sample.0 *= bound / amplitude;
            sample.1 *= bound / amplitude;
        }
    }
    PulseSequence::new(previous.dt(), bound, &samples).ok()
}

/// Smallest grid duration at which a single-spin optimization for `factor`
/// on spin `k` reaches the threshold; 0 for identity-like targets.
///
/// Found numerically by ramping the step count upward; no closed form is
/// attempted.
pub fn single_spin_min_time(
    sys: &SpinSystem,
    factor: &ComplexMatrix,
    k: usize,
    dt: f64,
    optimizer: &OptimizerConfig,
) -> Result<f64> {
    let subsystem = single_spin_subsystem(sys, k)?;
    let target = TargetTransformation::new(vec![factor.clone()])?;
    // Zero-duration pre-check: identity-like factors need no pulse.
    if trace_fidelity(factor, &ComplexMatrix::identity(2), 1)? >= optimizer.phi0 {
        return Ok(0.0);
    }
    let mut warm: Option<PulseSequence> = None;
    for steps in 1..=SINGLE_SPIN_RAMP_CAP {
        let result = optimize_fixed_time(
            &subsystem,
            &target,
            steps,
            dt,
            optimizer,
            None,
            warm.as_ref(),
        )?;
        if result.converged {
            return Ok(steps as f64 * dt);
        }
        warm = adapt_pulse(&result.pulse, steps + 1, optimizer.seed);
    }
    Err(Error::SearchFailed(format!(
        "single-spin target on spin {k} did not converge within {SINGLE_SPIN_RAMP_CAP} grid steps"
    )))
}

/// Ramp increment ΔT: the largest single-spin minimum time over the target
/// factors, floored to one grid step so the ramp always advances.
pub fn delta_t(
    sys: &SpinSystem,
    target: &TargetTransformation,
    dt: f64,
    optimizer: &OptimizerConfig,
) -> Result<f64> {
    let mut worst = 0.0_f64;
    for (k, factor) in target.factors().iter().enumerate() {
        worst = worst.max(single_spin_min_time(sys, factor, k, dt, optimizer)?);
    }
    Ok(worst.max(dt))
}

fn grid_steps(duration: f64, dt: f64) -> usize {
    (duration / dt - 1e-9).ceil().max(0.0) as usize
}

/// Outcome of the upper-bound ramp.
pub struct RampOutcome {
    /// Converged (steps, pulse) when the ramp succeeded.
    pub found: Option<(usize, PulseSequence)>,
    pub attempts: Vec<SearchAttempt>,
    /// Start of the ramp (grid steps).
    pub start_steps: usize,
    /// Ramp increment (grid steps).
    pub delta_steps: usize,
}

/// Step 2 of the search: ramp the duration upward from the grid-aligned
/// geodesic estimate in ΔT increments until an optimization converges.
/// Each attempt warm-starts from the previous best pulse.
pub fn find_upper_bound(
    sys: &SpinSystem,
    target: &TargetTransformation,
    config: &SearchConfig,
    ensemble: Option<&EnsembleSpec>,
) -> Result<RampOutcome> {
    let estimate = estimate_min_time(sys, target)?;
    let dt = config.dt;

    // Zero-duration pre-check (identity composites).
    let identity_phi = trace_fidelity(
        target.composite(),
        &ComplexMatrix::identity(sys.dim()),
        sys.n_spins(),
    )?;
    if identity_phi >= config.phi0() {
        return Ok(RampOutcome {
            found: Some((0, PulseSequence::empty(dt, sys.control_bound()))),
            attempts: Vec::new(),
            start_steps: 0,
            delta_steps: 1,
        });
    }

    // A failed single-spin search (e.g. an unreachable threshold) falls
    // back to a one-step increment so the main ramp still runs and reports
    // its own failure.
    let delta = match config.delta_t_override {
        Some(value) => value,
        None => delta_t(sys, target, dt, &config.optimizer).unwrap_or(dt),
    };
    let delta_steps = grid_steps(delta, dt).max(1);
    let start_steps = grid_steps(estimate.t_geodesic, dt).max(1);

    let mut attempts = Vec::new();
    let mut warm: Option<PulseSequence> = None;
    for attempt in 0..config.max_ramp_steps {
        let steps = start_steps + attempt * delta_steps;
        let result = optimize_fixed_time(
            sys,
            target,
            steps,
            dt,
            &config.optimizer,
            ensemble,
            warm.as_ref(),
        )?;
        record(&mut attempts, steps as f64 * dt, &result);
        if result.converged {
            return Ok(RampOutcome {
                found: Some((steps, result.pulse)),
                attempts,
                start_steps,
                delta_steps,
            });
        }
        warm = adapt_pulse(
            &result.pulse,
            steps + delta_steps,
            config.optimizer.seed,
        );
    }
    Ok(RampOutcome {
        found: None,
        attempts,
        start_steps,
        delta_steps,
    })
}

/// Step 3: bisect the bracket [t_lb, t_ub] on integer grid steps, midpoints
/// rounded down, shrinking until the interval is a single grid step.
///
/// `ub_pulse` must be a pulse that converged at `t_ub`. Unless
/// `lb_known_failed` is set, the lower edge is probed first; a converged
/// lower edge means the bracket was inconsistent and it is widened downward
/// by ΔT once before giving up.
#[allow(clippy::too_many_arguments)]
pub fn bisect_min_time(
    sys: &SpinSystem,
    target: &TargetTransformation,
    t_lb: f64,
    t_ub: f64,
    config: &SearchConfig,
    ensemble: Option<&EnsembleSpec>,
    ub_pulse: PulseSequence,
    lb_known_failed: bool,
) -> Result<SearchTrace> {
    let estimate = estimate_min_time(sys, target)?;
    let dt = config.dt;
    let floor_steps = grid_steps(estimate.t_geodesic, dt);
    let mut lo = grid_steps(t_lb, dt);
    let mut hi = grid_steps(t_ub, dt);
    if lo >= hi {
        return Err(Error::InconsistentBracket(format!(
            "lower bound {:.1} us is not below upper bound {:.1} us",
            t_lb * 1e6,
            t_ub * 1e6
        )));
    }
    if ub_pulse.len() != hi {
        return Err(Error::InconsistentBracket(format!(
            "upper-bound pulse has {} steps, bracket says {hi}",
            ub_pulse.len()
        )));
    }

    let mut attempts = Vec::new();
    let mut best_pulse = ub_pulse;
    let mut best_fidelity = crate::propagation::fidelity(sys, &best_pulse, target)?;

    if !lb_known_failed {
        let mut widenings = 0;
        loop {
            let warm = adapt_pulse(&best_pulse, lo, config.optimizer.seed);
            let result =
                optimize_fixed_time(sys, target, lo, dt, &config.optimizer, ensemble, warm.as_ref())?;
            record(&mut attempts, lo as f64 * dt, &result);
            if !result.converged {
                break;
            }
            // Converged at the lower edge: the bracket was inconsistent.
            hi = lo;
            best_pulse = result.pulse;
            best_fidelity = result.fidelity;
            if lo <= floor_steps {
                // Cannot search below the geodesic floor; accept this edge.
                lo = hi.saturating_sub(1);
                break;
            }
            if widenings >= 1 {
                return Err(Error::InconsistentBracket(format!(
                    "optimization keeps converging below the bracket (down to {} steps)",
                    lo
                )));
            }
            let delta_steps = grid_steps(
                config.delta_t_override.unwrap_or(dt),
                dt,
            )
            .max(1);
            lo = lo.saturating_sub(delta_steps).max(floor_steps);
            widenings += 1;
        }
    }

    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        let warm = adapt_pulse(&best_pulse, mid, config.optimizer.seed);
        let result =
            optimize_fixed_time(sys, target, mid, dt, &config.optimizer, ensemble, warm.as_ref())?;
        record(&mut attempts, mid as f64 * dt, &result);
        if result.converged {
            hi = mid;
            best_fidelity = result.fidelity;
            best_pulse = result.pulse;
        } else {
            lo = mid;
        }
    }

    Ok(SearchTrace {
        attempts,
        t_geodesic: estimate.t_geodesic,
        delta_t: config.delta_t_override.unwrap_or(dt),
        t_minimum: hi as f64 * dt,
        fidelity: best_fidelity,
        smoothness_ok: max_amplitude_jump(&best_pulse)
            <= config.optimizer.smoothness_threshold * sys.control_bound(),
        pulse: best_pulse,
    })
}

/// The full four-step pipeline: estimate, ΔT, upper-bound ramp, bisection,
/// and smooth-and-reoptimize. Returns the complete search trace with the
/// experiment-ready pulse.
pub fn run_pipeline(
    sys: &SpinSystem,
    target: &TargetTransformation,
    config: &SearchConfig,
    ensemble: Option<&EnsembleSpec>,
) -> Result<SearchTrace> {
    let estimate = estimate_min_time(sys, target)?;
    let dt = config.dt;

    let ramp = find_upper_bound(sys, target, config, ensemble)?;
    let Some((ub_steps, ub_pulse)) = ramp.found else {
        let summary: Vec<String> = ramp
            .attempts
            .iter()
            .map(|a| format!("{:.0} us: {:.6}", a.duration * 1e6, a.fidelity))
            .collect();
        return Err(Error::SearchFailed(format!(
            "no duration converged within {} ramp attempts [{}]",
            config.max_ramp_steps,
            summary.join(", ")
        )));
    };

    let mut trace = if ub_steps == 0 || ub_steps == ramp.start_steps {
        // Converged at the geodesic floor (or the zero-duration pre-check):
        // nothing below it is admissible.
        let fidelity = crate::propagation::fidelity(sys, &ub_pulse, target)?;
        SearchTrace {
            attempts: ramp.attempts,
            t_geodesic: estimate.t_geodesic,
            delta_t: ramp.delta_steps as f64 * dt,
            t_minimum: ub_steps as f64 * dt,
            fidelity,
            smoothness_ok: max_amplitude_jump(&ub_pulse)
                <= config.optimizer.smoothness_threshold * sys.control_bound(),
            pulse: ub_pulse,
        }
    } else {
        let lb_steps = ub_steps - ramp.delta_steps;
        let bisect_config = SearchConfig {
            delta_t_override: Some(ramp.delta_steps as f64 * dt),
            ..config.clone()
        };
        let mut trace = bisect_min_time(
            sys,
            target,
            lb_steps as f64 * dt,
            ub_steps as f64 * dt,
            &bisect_config,
            ensemble,
            ub_pulse,
            true,
        )?;
        let mut attempts = ramp.attempts;
        attempts.extend(trace.attempts.drain(..));
        trace.attempts = attempts;
        trace.delta_t = ramp.delta_steps as f64 * dt;
        trace
    };

    // Step 4: smoothing. Keep the smoothed pulse only if it retains the
    // fidelity threshold.
    if !trace.pulse.is_empty() && trace.fidelity >= config.phi0() {
        let seed_result = OptimizationResult {
            pulse: trace.pulse.clone(),
            fidelity: trace.fidelity,
            ensemble_fidelity: None,
            iterations: 0,
            fidelity_history: vec![trace.fidelity],
            converged: true,
            max_bound_violation: 0.0,
        };
        let smoothed =
            smooth_and_reoptimize(sys, target, &seed_result, &config.optimizer, ensemble)?;
        if smoothed.converged {
            trace.fidelity = smoothed.fidelity;
            trace.pulse = smoothed.pulse;
        }
        trace.smoothness_ok = max_amplitude_jump(&trace.pulse)
            <= config.optimizer.smoothness_threshold * sys.control_bound();
    }
    Ok(trace)
}
