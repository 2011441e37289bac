//! Spin system model: rotating-frame Hamiltonians of a homonuclear
//! spin-1/2 ensemble and local target transformations.
//!
//! All frequencies are stored internally in angular units (rad/s);
//! constructors that take Hz convert once on entry so that no 2π factor
//! appears downstream. Chemical shifts are kept dimensionless.
//!
//! Two normalization choices are calibrated against the reference
//! minimum-time results this crate reproduces (see the README):
//!
//! - the RF drive couples through the unscaled Pauli operators, so a
//!   control amplitude ω_r produces Bloch nutation at rate 2ω_r: a bound
//!   of 2π·12.5 kHz yields 10-20 μs quarter-turn pulses;
//! - coupling constants are applied as angular exchange rates, i.e. the
//!   configured value enters H_J directly in rad/s.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{expm_skew, kron, pauli, ComplexMatrix, SpinAxis};

/// Largest dimensionless chemical shift accepted (|δ| must stay ≪ 1).
pub const MAX_SHIFT: f64 = 0.01;
/// Unitarity tolerance for target factors.
pub const TARGET_UNITARITY_TOL: f64 = 1e-10;
/// Default Larmor frequency, ω0/2π in Hz (carbon channel of a 400 MHz-proton
/// spectrometer). A modeling default: only shift differences enter the
/// minimum-time estimate, so the absolute value mostly fixes scales.
pub const DEFAULT_LARMOR_HZ: f64 = 100.0e6;

/// Static description of N homonuclear spins.
#[derive(Debug, Clone)]
pub struct SpinSystem {
    n_spins: usize,
    /// Larmor frequency ω0 (rad/s).
    omega0: f64,
    /// Dimensionless chemical shifts δ_k.
    shifts: Vec<f64>,
    /// J coupling rates in angular units (rad/s), flat row-major N×N.
    j_rad: Vec<f64>,
    /// RF carrier frequency ω_rf (rad/s).
    omega_rf: f64,
    /// Control amplitude bound Ω (rad/s).
    control_bound: f64,
}

impl SpinSystem {
    /// Build a system from angular-unit parameters; the J matrix entries
    /// are applied directly as exchange rates in rad/s.
    pub fn new(
        omega0: f64,
        shifts: Vec<f64>,
        j_hz: &[f64],
        omega_rf: f64,
        control_bound: f64,
    ) -> Result<Self> {
        let n_spins = shifts.len();
        if n_spins == 0 {
            return Err(Error::InvalidSystem("at least one spin required".into()));
        }
        if !(omega0.is_finite() && omega0 > 0.0) {
            return Err(Error::InvalidSystem(format!(
                "Larmor frequency must be positive and finite, got {omega0}"
            )));
        }
        if !(control_bound.is_finite() && control_bound > 0.0) {
            return Err(Error::InvalidSystem(format!(
                "control bound must be positive and finite, got {control_bound}"
            )));
        }
        if !omega_rf.is_finite() {
            return Err(Error::InvalidSystem("carrier frequency must be finite".into()));
        }
        for (k, &delta) in shifts.iter().enumerate() {
            if !delta.is_finite() || delta.abs() >= MAX_SHIFT {
                return Err(Error::InvalidSystem(format!(
                    "chemical shift δ_{k} = {delta} violates |δ| < {MAX_SHIFT}"
                )));
            }
        }
        if j_hz.len() != n_spins * n_spins {
            return Err(Error::InvalidSystem(format!(
                "J matrix must be {n_spins}x{n_spins}, got {} entries",
                j_hz.len()
            )));
        }
        for i in 0..n_spins {
            if j_hz[i * n_spins + i] != 0.0 {
                return Err(Error::InvalidSystem(format!(
                    "J matrix must have zero diagonal, J_{i}{i} = {}",
                    j_hz[i * n_spins + i]
                )));
            }
            for j in 0..n_spins {
                let entry = j_hz[i * n_spins + j];
                if !entry.is_finite() {
                    return Err(Error::InvalidSystem(format!("J_{i}{j} is not finite")));
                }
                if (entry - j_hz[j * n_spins + i]).abs() > 0.0 {
                    return Err(Error::InvalidSystem(format!(
                        "J matrix must be symmetric, J_{i}{j} ≠ J_{j}{i}"
                    )));
                }
            }
        }
        Ok(Self {
            n_spins,
            omega0,
            shifts,
            j_rad: j_hz.to_vec(),
            omega_rf,
            control_bound,
        })
    }

    /// Convenience constructor from laboratory-unit inputs.
    ///
    /// Shifts are given as offset frequencies in Hz (δ_k ω0/2π); the carrier
    /// defaults to ω0 when `carrier_hz` is `None`.
    pub fn from_hz(
        larmor_hz: f64,
        shifts_hz: &[f64],
        j_hz: &[f64],
        carrier_hz: Option<f64>,
        bound_hz: f64,
    ) -> Result<Self> {
        if !(larmor_hz.is_finite() && larmor_hz > 0.0) {
            return Err(Error::InvalidSystem(format!(
                "larmor_hz must be positive, got {larmor_hz}"
            )));
        }
        let shifts = shifts_hz.iter().map(|f| f / larmor_hz).collect();
        Self::new(
            TAU * larmor_hz,
            shifts,
            j_hz,
            TAU * carrier_hz.unwrap_or(larmor_hz),
            TAU * bound_hz,
        )
    }

    /// The bundled two-carbon example system: the C1-C2 pair of
    /// trichloroethylene with shifts 11930.18 Hz and 11202.80 Hz,
    /// J = 103.49 Hz, and a 12.5 kHz amplitude bound.
    pub fn trichloroethylene() -> Self {
        Self::from_hz(
            DEFAULT_LARMOR_HZ,
            &[11930.18, 11202.80],
            &[0.0, 103.49, 103.49, 0.0],
            None,
            12_500.0,
        )
        .expect("built-in system parameters are valid")
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    /// Hilbert-space dimension 2^N.
    pub fn dim(&self) -> usize {
        1 << self.n_spins
    }

    /// Larmor frequency ω0 (rad/s).
    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    /// Dimensionless chemical shift of spin `k` (0-based).
    pub fn shift(&self, k: usize) -> f64 {
        self.shifts[k]
    }

    pub fn shifts(&self) -> &[f64] {
        &self.shifts
    }

    /// Carrier frequency ω_rf (rad/s).
    pub fn omega_rf(&self) -> f64 {
        self.omega_rf
    }

    /// Control amplitude bound Ω (rad/s).
    pub fn control_bound(&self) -> f64 {
        self.control_bound
    }

    /// Exchange rate between spins `i` and `j` in angular units (rad/s).
    pub fn j_rad(&self, i: usize, j: usize) -> f64 {
        self.j_rad[i * self.n_spins + j]
    }

    /// Largest |J_ij| in angular units.
    pub fn max_j_rad(&self) -> f64 {
        self.j_rad.iter().fold(0.0_f64, |m, j| m.max(j.abs()))
    }

    /// Copy of this system with a different control bound (rad/s).
    pub fn with_control_bound(&self, control_bound: f64) -> Result<Self> {
        let mut sys = self.clone();
        if !(control_bound.is_finite() && control_bound > 0.0) {
            return Err(Error::InvalidSystem(format!(
                "control bound must be positive, got {control_bound}"
            )));
        }
        sys.control_bound = control_bound;
        Ok(sys)
    }

    /// Copy with both shift frequencies offset by the same amount (Hz),
    /// modeling a common static-field offset: δ_k ω0 → δ_k ω0 + 2π·offset.
    pub fn with_common_shift_offset_hz(&self, offset_hz: f64) -> Result<Self> {
        let delta = TAU * offset_hz / self.omega0;
        let shifts: Vec<f64> = self.shifts.iter().map(|d| d + delta).collect();
        for (k, &d) in shifts.iter().enumerate() {
            if d.abs() >= MAX_SHIFT {
                return Err(Error::InvalidSystem(format!(
                    "offset {offset_hz} Hz pushes δ_{k} out of range"
                )));
            }
        }
        let mut sys = self.clone();
        sys.shifts = shifts;
        Ok(sys)
    }

    /// Copy with the shift frequencies replaced (Hz values δ_k ω0/2π).
    pub fn with_shifts_hz(&self, shifts_hz: &[f64]) -> Result<Self> {
        if shifts_hz.len() != self.n_spins {
            return Err(Error::InvalidSystem(format!(
                "expected {} shifts, got {}",
                self.n_spins,
                shifts_hz.len()
            )));
        }
        let larmor_hz = self.omega0 / TAU;
        let shifts: Vec<f64> = shifts_hz.iter().map(|f| f / larmor_hz).collect();
        for (k, &d) in shifts.iter().enumerate() {
            if !d.is_finite() || d.abs() >= MAX_SHIFT {
                return Err(Error::InvalidSystem(format!("shift δ_{k} out of range")));
            }
        }
        let mut sys = self.clone();
        sys.shifts = shifts;
        Ok(sys)
    }

    /// The angular frequency difference |δ1 - δ2| ω0 of a two-spin system.
    pub fn shift_difference(&self) -> Result<f64> {
        if self.n_spins != 2 {
            return Err(Error::Unsupported(format!(
                "shift difference requires exactly 2 spins, system has {}",
                self.n_spins
            )));
        }
        Ok((self.shifts[0] - self.shifts[1]).abs() * self.omega0)
    }

    /// Stable hash of the physical parameters, used to stamp pulse files.
    pub fn fingerprint(&self) -> u64 {
        let mut text = format!("N={};w0={:.17e};wrf={:.17e};W={:.17e}", self.n_spins, self.omega0, self.omega_rf, self.control_bound);
        for d in &self.shifts {
            text.push_str(&format!(";d={d:.17e}"));
        }
        for j in &self.j_rad {
            text.push_str(&format!(";j={j:.17e}"));
        }
        fnv1a(text.as_bytes())
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x1000_0000_01b3);
    }
    hash
}

/// Embedded single-spin operator S_α^k = I ⊗ … ⊗ σ_α ⊗ … ⊗ I (k is 0-based).
pub fn spin_operator(sys: &SpinSystem, k: usize, axis: SpinAxis) -> Result<ComplexMatrix> {
    if k >= sys.n_spins() {
        return Err(Error::SpinIndexOutOfRange {
            index: k,
            n_spins: sys.n_spins(),
        });
    }
    let mut op = if k == 0 {
        pauli(axis)
    } else {
        ComplexMatrix::identity(2)
    };
    for site in 1..sys.n_spins() {
        let factor = if site == k {
            pauli(axis)
        } else {
            ComplexMatrix::identity(2)
        };
        op = kron(&op, &factor);
    }
    Ok(op)
}

/// Zeeman Hamiltonian H_Z = -Σ_k [(1-δ_k)ω0 - ω_rf] S_z^k (diagonal).
pub fn zeeman_hamiltonian(sys: &SpinSystem) -> ComplexMatrix {
    let mut h = ComplexMatrix::zeros(sys.dim());
    for k in 0..sys.n_spins() {
        let coefficient = -((1.0 - sys.shift(k)) * sys.omega0() - sys.omega_rf());
        let sz = spin_operator(sys, k, SpinAxis::Z).expect("index in range");
        h = h.add(&sz.scale_re(coefficient));
    }
    h
}

/// Isotropic exchange Hamiltonian H_J = Σ_{i<j} J_ij (S_x S_x + S_y S_y + S_z S_z)
/// with J_ij the exchange rate in rad/s.
pub fn j_hamiltonian(sys: &SpinSystem) -> ComplexMatrix {
    let mut h = ComplexMatrix::zeros(sys.dim());
    for i in 0..sys.n_spins() {
        for j in (i + 1)..sys.n_spins() {
            let coupling = sys.j_rad(i, j);
            if coupling == 0.0 {
                continue;
            }
            for axis in SpinAxis::ALL {
                let si = spin_operator(sys, i, axis).expect("index in range");
                let sj = spin_operator(sys, j, axis).expect("index in range");
                h = h.add(&si.mul(&sj).scale_re(coupling));
            }
        }
    }
    h
}

/// RF drive Hamiltonian -Σ_k (1-δ_k)[ω_x P_x^k + ω_y P_y^k] with P = 2S
/// the unscaled Pauli operators (nutation rate 2ω_r at amplitude ω_r).
pub fn rf_hamiltonian(sys: &SpinSystem, wx: f64, wy: f64) -> ComplexMatrix {
    let mut h = ComplexMatrix::zeros(sys.dim());
    for k in 0..sys.n_spins() {
        let weight = 2.0 * (1.0 - sys.shift(k));
        let sx = spin_operator(sys, k, SpinAxis::X).expect("index in range");
        let sy = spin_operator(sys, k, SpinAxis::Y).expect("index in range");
        h = h.add(&sx.scale_re(-weight * wx)).add(&sy.scale_re(-weight * wy));
    }
    h
}

/// Full rotating-frame Hamiltonian H_Z + H_J + H_RF.
pub fn total_hamiltonian(sys: &SpinSystem, wx: f64, wy: f64) -> ComplexMatrix {
    zeeman_hamiltonian(sys)
        .add(&j_hamiltonian(sys))
        .add(&rf_hamiltonian(sys, wx, wy))
}

/// Common part of the single-spin Hamiltonian:
/// H_c = (ω_rf - ω0)σz - ω_x P_x - ω_y P_y.
pub fn single_spin_hc(sys: &SpinSystem, wx: f64, wy: f64) -> ComplexMatrix {
    pauli(SpinAxis::Z)
        .scale_re(sys.omega_rf() - sys.omega0())
        .add(&pauli(SpinAxis::X).scale_re(-2.0 * wx))
        .add(&pauli(SpinAxis::Y).scale_re(-2.0 * wy))
}

/// Shift-weighted part of the single-spin Hamiltonian:
/// H_d = -ω0 σz - ω_x P_x - ω_y P_y.
pub fn single_spin_hd(sys: &SpinSystem, wx: f64, wy: f64) -> ComplexMatrix {
    pauli(SpinAxis::Z)
        .scale_re(-sys.omega0())
        .add(&pauli(SpinAxis::X).scale_re(-2.0 * wx))
        .add(&pauli(SpinAxis::Y).scale_re(-2.0 * wy))
}

/// Effective Hamiltonian of spin `k`: H_c - δ_k H_d.
pub fn single_spin_effective(sys: &SpinSystem, k: usize, wx: f64, wy: f64) -> Result<ComplexMatrix> {
    if k >= sys.n_spins() {
        return Err(Error::SpinIndexOutOfRange {
            index: k,
            n_spins: sys.n_spins(),
        });
    }
    Ok(single_spin_hc(sys, wx, wy).add(&single_spin_hd(sys, wx, wy).scale_re(-sys.shift(k))))
}

/// One-spin subsystem whose full Hamiltonian reproduces H_c - δ_k H_d of
/// spin `k`; used to optimize single-spin operations in isolation.
pub fn single_spin_subsystem(sys: &SpinSystem, k: usize) -> Result<SpinSystem> {
    if k >= sys.n_spins() {
        return Err(Error::SpinIndexOutOfRange {
            index: k,
            n_spins: sys.n_spins(),
        });
    }
    SpinSystem::new(
        sys.omega0(),
        vec![sys.shift(k)],
        &[0.0],
        sys.omega_rf(),
        sys.control_bound(),
    )
}

/// Rotation gate R_axis(θ) = exp(+i θ σ_axis) = cos(θ/2) I + i sin(θ/2) P_axis.
///
/// The sign convention rotates Bloch vectors clockwise about the axis
/// (x̂ ↦ -ŷ under R_z(π/2)), matching the reference trajectories this
/// crate reproduces.
pub fn rotation_gate(axis: SpinAxis, angle: f64) -> ComplexMatrix {
    let c = Complex64::new((angle / 2.0).cos(), 0.0);
    let s = Complex64::new(0.0, (angle / 2.0).sin());
    let p = pauli(axis).scale_re(2.0); // unscaled Pauli matrix
    ComplexMatrix::identity(2).scale(c).add(&p.scale(s))
}

/// Desired local unitary U_f = U_1f ⊗ … ⊗ U_Nf with its factors retained.
#[derive(Debug, Clone)]
pub struct TargetTransformation {
    factors: Vec<ComplexMatrix>,
    composite: ComplexMatrix,
}

impl TargetTransformation {
    /// Build from per-spin 2x2 factors; each must be unitary.
    pub fn new(factors: Vec<ComplexMatrix>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidTarget("at least one factor required".into()));
        }
        for (k, f) in factors.iter().enumerate() {
            if f.dim() != 2 {
                return Err(Error::InvalidTarget(format!(
                    "factor {k} must be 2x2, got {}x{}",
                    f.dim(),
                    f.dim()
                )));
            }
            let dev = f.unitarity_error();
            if dev > TARGET_UNITARITY_TOL {
                return Err(Error::InvalidTarget(format!(
                    "factor {k} is not unitary (deviation {dev:.3e})"
                )));
            }
        }
        let mut composite = factors[0].clone();
        for f in &factors[1..] {
            composite = kron(&composite, f);
        }
        Ok(Self { factors, composite })
    }

    /// Identity target on `n_spins` spins.
    pub fn identity(n_spins: usize) -> Self {
        Self::new(vec![ComplexMatrix::identity(2); n_spins]).expect("identity factors are unitary")
    }

    pub fn n_spins(&self) -> usize {
        self.factors.len()
    }

    pub fn factor(&self, k: usize) -> &ComplexMatrix {
        &self.factors[k]
    }

    pub fn factors(&self) -> &[ComplexMatrix] {
        &self.factors
    }

    /// Cached Kronecker product of the factors.
    pub fn composite(&self) -> &ComplexMatrix {
        &self.composite
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tce() -> SpinSystem {
        SpinSystem::trichloroethylene()
    }

    #[test]
    fn constructor_validations() {
        assert!(SpinSystem::from_hz(1e8, &[], &[], None, 12_500.0).is_err());
        // Shift too large.
        assert!(SpinSystem::from_hz(1e8, &[2.0e6], &[0.0], None, 12_500.0).is_err());
        // Asymmetric J.
        assert!(SpinSystem::from_hz(
            1e8,
            &[11930.18, 11202.80],
            &[0.0, 103.49, 100.0, 0.0],
            None,
            12_500.0
        )
        .is_err());
        // Nonzero J diagonal.
        assert!(SpinSystem::from_hz(
            1e8,
            &[11930.18, 11202.80],
            &[1.0, 103.49, 103.49, 0.0],
            None,
            12_500.0
        )
        .is_err());
        // Zero bound.
        assert!(SpinSystem::from_hz(1e8, &[11930.18, 11202.80], &[0.0, 0.0, 0.0, 0.0], None, 0.0).is_err());
    }

    #[test]
    fn spin_operator_matches_kron_expansion() {
        let sys = tce();
        let got = spin_operator(&sys, 1, SpinAxis::X).unwrap();
        let expected = kron(&ComplexMatrix::identity(2), &pauli(SpinAxis::X));
        assert!(got.max_abs_diff(&expected) < 1e-15);

        let single = SpinSystem::from_hz(1e8, &[100.0], &[0.0], None, 12_500.0).unwrap();
        let got1 = spin_operator(&single, 0, SpinAxis::Z).unwrap();
        assert!(got1.max_abs_diff(&pauli(SpinAxis::Z)) < 1e-15);

        assert!(matches!(
            spin_operator(&sys, 2, SpinAxis::Z),
            Err(Error::SpinIndexOutOfRange { .. })
        ));
        for k in 0..2 {
            for axis in SpinAxis::ALL {
                let op = spin_operator(&sys, k, axis).unwrap();
                assert!(op.trace().norm() < 1e-15);
                assert!(op.hermiticity_error() < 1e-15);
            }
        }
    }

    #[test]
    fn zeeman_on_resonance_no_shift_is_zero() {
        let sys = SpinSystem::from_hz(1e8, &[0.0, 0.0], &[0.0; 4], None, 12_500.0).unwrap();
        assert!(zeeman_hamiltonian(&sys).max_abs() < 1e-18);
    }

    #[test]
    fn zeeman_single_spin_sign_and_magnitude() {
        let sys = SpinSystem::from_hz(1e8, &[11930.18], &[0.0], None, 12_500.0).unwrap();
        let expected = pauli(SpinAxis::Z).scale_re(TAU * 11930.18);
        assert!(zeeman_hamiltonian(&sys).max_abs_diff(&expected) < 1e-6);
    }

    #[test]
    fn zeeman_two_spin_diagonal_assembly() {
        let sys = tce();
        let h = zeeman_hamiltonian(&sys);
        let d1 = TAU * 11930.18;
        let d2 = TAU * 11202.80;
        // Diagonal entries are ±d1/2 ± d2/2 over the four basis states.
        let expected = [
            (d1 + d2) / 2.0,
            (d1 - d2) / 2.0,
            (-d1 + d2) / 2.0,
            (-d1 - d2) / 2.0,
        ];
        for (i, want) in expected.iter().enumerate() {
            assert!((h.get(i, i).re - want).abs() < 1e-6);
            for j in 0..4 {
                if i != j {
                    assert!(h.get(i, j).norm() < 1e-18);
                }
            }
        }
    }

    #[test]
    fn j_hamiltonian_matches_direct_assembly() {
        let sys = tce();
        let h = j_hamiltonian(&sys);
        let j = 103.49;
        // 2πJ (SxSx + SySy + SzSz) written out over the two-spin basis.
        let q = j / 4.0;
        let expected = ComplexMatrix::from_vec(
            4,
            vec![
                Complex64::new(q, 0.0),
                Complex64::ZERO,
                Complex64::ZERO,
                Complex64::ZERO,
                Complex64::ZERO,
                Complex64::new(-q, 0.0),
                Complex64::new(2.0 * q, 0.0),
                Complex64::ZERO,
                Complex64::ZERO,
                Complex64::new(2.0 * q, 0.0),
                Complex64::new(-q, 0.0),
                Complex64::ZERO,
                Complex64::ZERO,
                Complex64::ZERO,
                Complex64::ZERO,
                Complex64::new(q, 0.0),
            ],
        )
        .unwrap();
        assert!(h.max_abs_diff(&expected) < 1e-9);

        let zero_j = SpinSystem::from_hz(1e8, &[11930.18, 11202.80], &[0.0; 4], None, 12_500.0).unwrap();
        assert!(j_hamiltonian(&zero_j).max_abs() < 1e-18);
    }

    #[test]
    fn j_hamiltonian_commutes_with_total_sz() {
        let sys = tce();
        let hj = j_hamiltonian(&sys);
        let total_sz = spin_operator(&sys, 0, SpinAxis::Z)
            .unwrap()
            .add(&spin_operator(&sys, 1, SpinAxis::Z).unwrap());
        assert!(hj.commutator(&total_sz).frobenius_norm() < 1e-12);
    }

    #[test]
    fn rf_hamiltonian_linearity_and_single_term() {
        let sys = SpinSystem::from_hz(1e8, &[0.0], &[0.0], None, 12_500.0).unwrap();
        let bound = sys.control_bound();
        assert!(rf_hamiltonian(&sys, 0.0, 0.0).max_abs() < 1e-18);
        let h = rf_hamiltonian(&sys, bound, 0.0);
        let expected = pauli(SpinAxis::X).scale_re(-2.0 * bound);
        assert!(h.max_abs_diff(&expected) < 1e-12);

        let sys2 = tce();
        let a = 0.37;
        let scaled = rf_hamiltonian(&sys2, a * 1000.0, a * 500.0);
        let reference = rf_hamiltonian(&sys2, 1000.0, 500.0).scale_re(a);
        assert!(scaled.max_abs_diff(&reference) < 1e-9);
    }

    #[test]
    fn total_hamiltonian_is_sum_of_parts_and_hermitian() {
        let sys = tce();
        let wx = TAU * 12_500.0;
        let total = total_hamiltonian(&sys, wx, 0.0);
        let parts = zeeman_hamiltonian(&sys)
            .add(&j_hamiltonian(&sys))
            .add(&rf_hamiltonian(&sys, wx, 0.0));
        assert!(total.max_abs_diff(&parts) < 1e-14);
        assert!(total.hermiticity_error() < 1e-12);
    }

    #[test]
    fn single_spin_hamiltonians_match_quoted_forms() {
        let sys = tce();
        assert!(single_spin_hc(&sys, 0.0, 0.0).max_abs() < 1e-18);

        let hd = single_spin_hd(&sys, 0.0, 0.0);
        assert!(hd.max_abs_diff(&pauli(SpinAxis::Z).scale_re(-sys.omega0())) < 1e-6);

        let wx = TAU * 12_500.0;
        let hd_driven = single_spin_hd(&sys, wx, 0.0);
        let expected = pauli(SpinAxis::Z)
            .scale_re(-TAU * 1e8)
            .add(&pauli(SpinAxis::X).scale_re(-2.0 * wx));
        assert!(hd_driven.max_abs_diff(&expected) < 1e-6);
    }

    #[test]
    fn effective_hamiltonian_is_hc_minus_delta_hd() {
        let sys = tce();
        let (wx, wy) = (2000.0, -1500.0);
        for k in 0..2 {
            let eff = single_spin_effective(&sys, k, wx, wy).unwrap();
            let reference = single_spin_hc(&sys, wx, wy)
                .add(&single_spin_hd(&sys, wx, wy).scale_re(-sys.shift(k)));
            assert!(eff.max_abs_diff(&reference) < 1e-12);
            assert!(eff.hermiticity_error() < 1e-12);
        }
    }

    #[test]
    fn single_spin_subsystem_reproduces_effective_hamiltonian() {
        let sys = tce();
        for k in 0..2 {
            let sub = single_spin_subsystem(&sys, k).unwrap();
            let full = total_hamiltonian(&sub, 321.0, -654.0);
            let eff = single_spin_effective(&sys, k, 321.0, -654.0).unwrap();
            // The two assemblies cancel the carrier at the ω0 scale, so the
            // agreement is relative to ω0 rather than absolute.
            assert!(full.max_abs_diff(&eff) < 1e-12 * sys.omega0());
        }
    }

    #[test]
    fn rotation_gate_closed_forms() {
        let rz = rotation_gate(SpinAxis::Z, PI / 2.0);
        // exp(+i θ σz) = exp(-i (-θ) σz).
        let direct = expm_skew(&pauli(SpinAxis::Z).scale_re(PI / 2.0), -1.0).unwrap();
        assert!(rz.max_abs_diff(&direct) < 1e-12);
        assert!(rz.unitarity_error() < 1e-15);
        let expected00 = Complex64::new((PI / 4.0).cos(), (PI / 4.0).sin());
        assert!((rz.get(0, 0) - expected00).norm() < 1e-15);
    }

    #[test]
    fn target_transformation_composite_and_validation() {
        let target = TargetTransformation::new(vec![
            ComplexMatrix::identity(2),
            rotation_gate(SpinAxis::Z, PI / 2.0),
        ])
        .unwrap();
        let expected = kron(
            &ComplexMatrix::identity(2),
            &rotation_gate(SpinAxis::Z, PI / 2.0),
        );
        assert!(target.composite().max_abs_diff(&expected) < 1e-12);
        assert_eq!(target.n_spins(), 2);

        let stretched = ComplexMatrix::identity(2).scale_re(1.0 + 1e-6);
        assert!(TargetTransformation::new(vec![stretched]).is_err());
    }

    #[test]
    fn fingerprint_is_stable_and_parameter_sensitive() {
        let a = tce().fingerprint();
        let b = tce().fingerprint();
        assert_eq!(a, b);
        let other = tce().with_control_bound(TAU * 10_000.0).unwrap();
        assert_ne!(a, other.fingerprint());
    }
}
