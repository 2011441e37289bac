//! Piecewise-constant time evolution of the full 2^N-dimensional system,
//! fidelity evaluation, and Bloch-sphere state trajectories.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{
    eigh_unchecked, expm_from_eigh, trace_fidelity, ComplexMatrix, EighDecomposition, SpinAxis,
};
use crate::spin::{
    j_hamiltonian, rf_hamiltonian, spin_operator, zeeman_hamiltonian, SpinSystem,
    TargetTransformation,
};

/// Slack allowed on the amplitude bound check (rad/s).
pub const BOUND_SLACK: f64 = 1e-9;

/// Piecewise-constant control samples (ω_x, ω_y) on an M-step grid.
///
/// Samples are stored canonically in laboratory units (Hz and μs) so that
/// saving and loading a pulse file is bit-exact; the physics accessors
/// convert to angular units on the way out.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSequence {
    dt_us: f64,
    bound_hz: f64,
    samples_hz: Vec<(f64, f64)>,
}

impl PulseSequence {
    /// Build from angular-unit samples (rad/s) on a grid of width `dt` (s).
    pub fn new(dt: f64, bound: f64, samples: &[(f64, f64)]) -> Result<Self> {
        let converted: Vec<(f64, f64)> = samples
            .iter()
            .map(|&(wx, wy)| (wx / std::f64::consts::TAU, wy / std::f64::consts::TAU))
            .collect();
        Self::from_lab_units(dt * 1e6, bound / std::f64::consts::TAU, converted)
    }

    /// Build from laboratory-unit samples: Hz amplitudes on a μs grid.
    pub fn from_lab_units(dt_us: f64, bound_hz: f64, samples_hz: Vec<(f64, f64)>) -> Result<Self> {
        if !(dt_us.is_finite() && dt_us > 0.0) {
            return Err(Error::InvalidPulse(format!(
                "step width must be positive, got {dt_us} us"
            )));
        }
        if !(bound_hz.is_finite() && bound_hz > 0.0) {
            return Err(Error::InvalidPulse(format!(
                "amplitude bound must be positive, got {bound_hz} Hz"
            )));
        }
        let slack_hz = BOUND_SLACK / std::f64::consts::TAU;
        for (index, &(wx, wy)) in samples_hz.iter().enumerate() {
            if !wx.is_finite() || !wy.is_finite() {
                return Err(Error::InvalidPulse(format!(
                    "non-finite control at sample {index}"
                )));
            }
            let amplitude_hz = wx.hypot(wy);
            if amplitude_hz > bound_hz + slack_hz {
                return Err(Error::BoundViolation {
                    index,
                    amplitude_hz,
                    bound_hz,
                });
            }
        }
        Ok(Self {
            dt_us,
            bound_hz,
            samples_hz,
        })
    }

    /// Zero-length pulse on the given grid.
    pub fn empty(dt: f64, bound: f64) -> Self {
        Self::new(dt, bound, &[]).expect("empty pulse is valid")
    }

    /// Grid step width in seconds.
    pub fn dt(&self) -> f64 {
        self.dt_us * 1e-6
    }

    pub fn dt_us(&self) -> f64 {
        self.dt_us
    }

    /// Amplitude bound Ω in rad/s.
    pub fn bound(&self) -> f64 {
        self.bound_hz * std::f64::consts::TAU
    }

    pub fn bound_hz(&self) -> f64 {
        self.bound_hz
    }

    /// Number of steps M.
    pub fn len(&self) -> usize {
        self.samples_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples_hz.is_empty()
    }

    /// Total duration M·Δt in seconds.
    pub fn duration(&self) -> f64 {
        self.len() as f64 * self.dt()
    }

    /// Control pair (ω_x, ω_y) of step `j` in rad/s.
    pub fn sample(&self, j: usize) -> (f64, f64) {
        let (wx_hz, wy_hz) = self.samples_hz[j];
        (
            wx_hz * std::f64::consts::TAU,
            wy_hz * std::f64::consts::TAU,
        )
    }

    /// All samples in rad/s.
    pub fn samples(&self) -> Vec<(f64, f64)> {
        (0..self.len()).map(|j| self.sample(j)).collect()
    }

    /// Raw stored samples in Hz.
    pub fn samples_hz(&self) -> &[(f64, f64)] {
        &self.samples_hz
    }

    /// Amplitude √(ω_x² + ω_y²) of step `j` in rad/s.
    pub fn amplitude(&self, j: usize) -> f64 {
        let (wx, wy) = self.sample(j);
        wx.hypot(wy)
    }

    /// Concatenate two pulses defined on the same grid and bound.
    pub fn concat(&self, later: &Self) -> Result<Self> {
        if self.dt_us != later.dt_us || self.bound_hz != later.bound_hz {
            return Err(Error::InvalidPulse(
                "cannot concatenate pulses with different grids or bounds".into(),
            ));
        }
        let mut samples = self.samples_hz.clone();
        samples.extend_from_slice(&later.samples_hz);
        Self::from_lab_units(self.dt_us, self.bound_hz, samples)
    }
}

/// Cached time-independent pieces of the step Hamiltonian:
/// H(ω_x, ω_y) = drift - ω_x gx - ω_y gy.
#[derive(Debug, Clone)]
pub(crate) struct SystemOps {
    pub(crate) drift: ComplexMatrix,
    pub(crate) gx: ComplexMatrix,
    pub(crate) gy: ComplexMatrix,
    pub(crate) spin_x: Vec<ComplexMatrix>,
    pub(crate) spin_y: Vec<ComplexMatrix>,
    pub(crate) weights: Vec<f64>,
    pub(crate) dim: usize,
}

impl SystemOps {
    pub(crate) fn new(sys: &SpinSystem) -> Self {
        let drift = zeeman_hamiltonian(sys).add(&j_hamiltonian(sys));
        let n = sys.n_spins();
        let mut spin_x = Vec::with_capacity(n);
        let mut spin_y = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        let mut gx = ComplexMatrix::zeros(sys.dim());
        let mut gy = ComplexMatrix::zeros(sys.dim());
        for k in 0..n {
            // Controls couple through the unscaled Pauli operators.
            let weight = 2.0 * (1.0 - sys.shift(k));
            let sx = spin_operator(sys, k, SpinAxis::X).expect("index in range");
            let sy = spin_operator(sys, k, SpinAxis::Y).expect("index in range");
            gx = gx.add(&sx.scale_re(weight));
            gy = gy.add(&sy.scale_re(weight));
            spin_x.push(sx);
            spin_y.push(sy);
            weights.push(weight);
        }
        Self {
            drift,
            gx,
            gy,
            spin_x,
            spin_y,
            weights,
            dim: sys.dim(),
        }
    }

    pub(crate) fn step_hamiltonian(&self, wx: f64, wy: f64) -> ComplexMatrix {
        let n = self.dim;
        ComplexMatrix::from_fn(n, |i, j| {
            self.drift.get(i, j) - self.gx.get(i, j) * wx - self.gy.get(i, j) * wy
        })
    }

    pub(crate) fn step_eigh(&self, wx: f64, wy: f64) -> EighDecomposition {
        eigh_unchecked(&self.step_hamiltonian(wx, wy))
    }

    pub(crate) fn step_unitary(&self, wx: f64, wy: f64, dt: f64) -> ComplexMatrix {
        expm_from_eigh(&self.step_eigh(wx, wy), dt)
    }
}

fn check_bound(sys: &SpinSystem, wx: f64, wy: f64) -> Result<()> {
    let amplitude = wx.hypot(wy);
    if amplitude > sys.control_bound() + BOUND_SLACK {
        return Err(Error::BoundViolation {
            index: 0,
            amplitude_hz: amplitude / std::f64::consts::TAU,
            bound_hz: sys.control_bound() / std::f64::consts::TAU,
        });
    }
    Ok(())
}

/// Single-step propagator U_j = exp(-i Δt [H_J + H_Z + H_RF(ω_x, ω_y)]).
pub fn step_propagator(sys: &SpinSystem, wx: f64, wy: f64, dt: f64) -> Result<ComplexMatrix> {
    check_bound(sys, wx, wy)?;
    Ok(SystemOps::new(sys).step_unitary(wx, wy, dt))
}

/// Ordered product U(T) = U_M · U_{M-1} ⋯ U_1 over the pulse grid.
pub fn propagate(sys: &SpinSystem, pulse: &PulseSequence) -> Result<ComplexMatrix> {
    let ops = SystemOps::new(sys);
    let mut u = ComplexMatrix::identity(sys.dim());
    for j in 0..pulse.len() {
        let (wx, wy) = pulse.sample(j);
        check_bound(sys, wx, wy).map_err(|e| match e {
            Error::BoundViolation {
                amplitude_hz,
                bound_hz,
                ..
            } => Error::BoundViolation {
                index: j,
                amplitude_hz,
                bound_hz,
            },
            other => other,
        })?;
        u = ops.step_unitary(wx, wy, pulse.dt()).mul(&u);
    }
    Ok(u)
}

/// Gate fidelity Φ = 2^{-N} Re Tr[U_f† U(T)] of the propagated pulse.
pub fn fidelity(sys: &SpinSystem, pulse: &PulseSequence, target: &TargetTransformation) -> Result<f64> {
    let u = propagate(sys, pulse)?;
    trace_fidelity(target.composite(), &u, sys.n_spins())
}

/// Reduced single-spin Bloch vectors along a pulse.
#[derive(Debug, Clone)]
pub struct BlochTrajectory {
    /// Human-readable tag of the initial state.
    pub initial_tag: String,
    /// Grid step width in seconds.
    pub dt: f64,
    /// (x, y, z) = 2(⟨S_x⟩, ⟨S_y⟩, ⟨S_z⟩) at t = 0, Δt, …, MΔt.
    pub points: Vec<[f64; 3]>,
}

impl BlochTrajectory {
    /// Final Bloch vector.
    pub fn endpoint(&self) -> [f64; 3] {
        *self.points.last().expect("trajectory includes t = 0")
    }
}

/// Product state with every spin at (|0⟩ - i|1⟩)/√2, the -y axis of the
/// Bloch sphere; the default initial state for trajectory export.
pub fn minus_y_product_state(n_spins: usize) -> Vec<Complex64> {
    let single = [
        Complex64::new(1.0 / 2f64.sqrt(), 0.0),
        Complex64::new(0.0, -1.0 / 2f64.sqrt()),
    ];
    let mut state = vec![Complex64::ONE];
    for _ in 0..n_spins {
        let mut next = Vec::with_capacity(state.len() * 2);
        for amp in &state {
            next.push(amp * single[0]);
            next.push(amp * single[1]);
        }
        state = next;
    }
    state
}

/// Evolve `initial_state` under the pulse and record the Bloch vector of
/// spin `k` (0-based) at every grid time.
pub fn bloch_trajectory(
    sys: &SpinSystem,
    pulse: &PulseSequence,
    initial_state: &[Complex64],
    k: usize,
) -> Result<BlochTrajectory> {
    if initial_state.len() != sys.dim() {
        return Err(Error::DimensionMismatch {
            left: sys.dim(),
            right: initial_state.len(),
        });
    }
    let norm = initial_state
        .iter()
        .map(|z| z.norm_sqr())
        .sum::<f64>()
        .sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::UnnormalizedState {
            deviation: (norm - 1.0).abs(),
        });
    }
    let sx = spin_operator(sys, k, SpinAxis::X)?;
    let sy = spin_operator(sys, k, SpinAxis::Y)?;
    let sz = spin_operator(sys, k, SpinAxis::Z)?;

    let expectation = |state: &[Complex64], op: &ComplexMatrix| -> f64 {
        let image = op.apply(state);
        state
            .iter()
            .zip(&image)
            .map(|(a, b)| (a.conj() * b).re)
            .sum::<f64>()
    };

    let ops = SystemOps::new(sys);
    let mut state = initial_state.to_vec();
    let mut points = Vec::with_capacity(pulse.len() + 1);
    points.push([
        2.0 * expectation(&state, &sx),
        2.0 * expectation(&state, &sy),
        2.0 * expectation(&state, &sz),
    ]);
    for j in 0..pulse.len() {
        let (wx, wy) = pulse.sample(j);
        check_bound(sys, wx, wy)?;
        let u = ops.step_unitary(wx, wy, pulse.dt());
        state = u.apply(&state);
        points.push([
            2.0 * expectation(&state, &sx),
            2.0 * expectation(&state, &sy),
            2.0 * expectation(&state, &sz),
        ]);
    }
    Ok(BlochTrajectory {
        initial_tag: "custom".to_string(),
        dt: pulse.dt(),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{expm_skew, kron};
    use crate::spin::{rotation_gate, single_spin_effective, total_hamiltonian};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn tce() -> SpinSystem {
        SpinSystem::trichloroethylene()
    }

    fn random_pulse(sys: &SpinSystem, steps: usize, dt: f64, rng: &mut impl Rng) -> PulseSequence {
        let bound = sys.control_bound();
        let samples: Vec<(f64, f64)> = (0..steps)
            .map(|_| {
                let r = bound * rng.random_range(0.0..1.0);
                let theta = rng.random_range(0.0..TAU);
                (r * theta.cos(), r * theta.sin())
            })
            .collect();
        PulseSequence::new(dt, bound, &samples).unwrap()
    }

    #[test]
    fn pulse_validation() {
        let bound = TAU * 12_500.0;
        assert!(PulseSequence::new(0.0, bound, &[]).is_err());
        assert!(PulseSequence::new(1e-6, bound, &[(bound * 1.01, 0.0)]).is_err());
        let ok = PulseSequence::new(1e-6, bound, &[(bound, 0.0)]).unwrap();
        assert_eq!(ok.len(), 1);
        assert!((ok.duration() - 1e-6).abs() < 1e-18);
    }

    #[test]
    fn step_propagator_trivial_cases() {
        let quiet = SpinSystem::from_hz(1e8, &[0.0, 0.0], &[0.0; 4], None, 12_500.0).unwrap();
        let u = step_propagator(&quiet, 0.0, 0.0, 1e-6).unwrap();
        assert!(u.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-12);

        // Full-weight x rotation on a bare spin matches the closed form.
        let single = SpinSystem::from_hz(1e8, &[0.0], &[0.0], None, 600_000.0).unwrap();
        let wx = std::f64::consts::PI / 1e-6;
        let u = step_propagator(&single, wx, 0.0, 1e-6).unwrap();
        let h = total_hamiltonian(&single, wx, 0.0);
        let expected = expm_skew(&h, 1e-6).unwrap();
        assert!(u.max_abs_diff(&expected) < 1e-12);

        let bounded = tce();
        assert!(matches!(
            step_propagator(&bounded, TAU * 13_000.0, 0.0, 1e-6),
            Err(Error::BoundViolation { .. })
        ));
    }

    #[test]
    fn step_propagator_unitary_for_random_controls() {
        let sys = tce();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let r = sys.control_bound() * rng.random_range(0.0..1.0);
            let theta = rng.random_range(0.0..TAU);
            let u = step_propagator(&sys, r * theta.cos(), r * theta.sin(), 1e-6).unwrap();
            assert!(u.unitarity_error() < 1e-10);
        }
    }

    #[test]
    fn propagate_empty_pulse_is_identity() {
        let sys = tce();
        let pulse = PulseSequence::empty(1e-6, sys.control_bound());
        let u = propagate(&sys, &pulse).unwrap();
        assert!(u.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-15);
    }

    #[test]
    fn propagate_commuting_steps_matches_static_exponential() {
        // Two zero-control steps equal one static evolution over 2Δt.
        let sys = SpinSystem::from_hz(1e8, &[11930.18], &[0.0], None, 12_500.0).unwrap();
        let pulse = PulseSequence::new(1e-6, sys.control_bound(), &[(0.0, 0.0), (0.0, 0.0)]).unwrap();
        let u = propagate(&sys, &pulse).unwrap();
        let h = total_hamiltonian(&sys, 0.0, 0.0);
        let expected = expm_skew(&h, 2e-6).unwrap();
        assert!(u.max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn propagator_composition_property() {
        let sys = tce();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_pulse(&sys, 7, 1e-6, &mut rng);
        let b = random_pulse(&sys, 5, 1e-6, &mut rng);
        let joined = a.concat(&b).unwrap();
        let u_joined = propagate(&sys, &joined).unwrap();
        let u_split = propagate(&sys, &b).unwrap().mul(&propagate(&sys, &a).unwrap());
        assert!(u_joined.max_abs_diff(&u_split) < 1e-10);
    }

    #[test]
    fn zero_coupling_propagator_factorizes() {
        let sys = SpinSystem::from_hz(1e8, &[11930.18, 11202.80], &[0.0; 4], None, 12_500.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pulse = random_pulse(&sys, 200, 1e-6, &mut rng);
        let full = propagate(&sys, &pulse).unwrap();

        // Single-spin evolutions driven by the same controls.
        let mut u1 = ComplexMatrix::identity(2);
        let mut u2 = ComplexMatrix::identity(2);
        for j in 0..pulse.len() {
            let (wx, wy) = pulse.sample(j);
            let h1 = single_spin_effective(&sys, 0, wx, wy).unwrap();
            let h2 = single_spin_effective(&sys, 1, wx, wy).unwrap();
            u1 = expm_skew(&h1, pulse.dt()).unwrap().mul(&u1);
            u2 = expm_skew(&h2, pulse.dt()).unwrap().mul(&u2);
        }
        let product = kron(&u1, &u2);
        assert!(full.sub(&product).frobenius_norm() < 1e-9);
    }

    #[test]
    fn bloch_initial_vectors() {
        let sys = tce();
        let pulse = PulseSequence::empty(1e-6, sys.control_bound());

        // |00⟩ points along +z for both spins.
        let mut zero_state = vec![Complex64::ZERO; 4];
        zero_state[0] = Complex64::ONE;
        let trajectory = bloch_trajectory(&sys, &pulse, &zero_state, 0).unwrap();
        let [x, y, z] = trajectory.endpoint();
        assert!(x.abs() < 1e-12 && y.abs() < 1e-12 && (z - 1.0).abs() < 1e-12);

        // (|0⟩ - i|1⟩)/√2 per spin points along -y.
        let minus_y = minus_y_product_state(2);
        for k in 0..2 {
            let t = bloch_trajectory(&sys, &pulse, &minus_y, k).unwrap();
            let [x, y, z] = t.endpoint();
            assert!(x.abs() < 1e-12 && (y + 1.0).abs() < 1e-12 && z.abs() < 1e-12);
        }
    }

    #[test]
    fn bloch_stays_constant_without_drive_or_shift() {
        let sys = SpinSystem::from_hz(1e8, &[0.0], &[0.0], None, 12_500.0).unwrap();
        let pulse = PulseSequence::new(1e-6, sys.control_bound(), &[(0.0, 0.0); 50]).unwrap();
        let mut state = vec![Complex64::ZERO; 2];
        state[0] = Complex64::ONE;
        let t = bloch_trajectory(&sys, &pulse, &state, 0).unwrap();
        for p in &t.points {
            assert!((p[2] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bloch_norm_conserved_without_coupling() {
        let sys = SpinSystem::from_hz(1e8, &[11930.18, 11202.80], &[0.0; 4], None, 12_500.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let pulse = random_pulse(&sys, 10_000, 1e-6, &mut rng);
        let state = minus_y_product_state(2);
        let t = bloch_trajectory(&sys, &pulse, &state, 1).unwrap();
        for p in &t.points {
            let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            assert!((norm - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn bloch_rejects_unnormalized_state() {
        let sys = tce();
        let pulse = PulseSequence::empty(1e-6, sys.control_bound());
        let state = vec![Complex64::ONE; 4];
        assert!(matches!(
            bloch_trajectory(&sys, &pulse, &state, 0),
            Err(Error::UnnormalizedState { .. })
        ));
    }

    #[test]
    fn fidelity_of_identity_pulse_against_rotation_target() {
        let sys = tce();
        let pulse = PulseSequence::empty(1e-6, sys.control_bound());
        let target = TargetTransformation::new(vec![
            ComplexMatrix::identity(2),
            rotation_gate(SpinAxis::Z, std::f64::consts::PI / 2.0),
        ])
        .unwrap();
        let phi = fidelity(&sys, &pulse, &target).unwrap();
        // Re Tr(U_f†)/4 for I ⊗ Rz(π/2) is cos(π/4).
        assert!((phi - (std::f64::consts::PI / 4.0).cos()).abs() < 1e-12);
    }
}
