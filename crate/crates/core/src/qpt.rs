//! Simulated quantum process tomography for the two-spin system.
//!
//! A process ρ(0) ↦ ρ(T) is represented by its 16×16 χ matrix over a fixed
//! operator basis E_1…E_16 of real 4×4 matrices (spin-1/2 operator
//! products with -i and -1 prefactors chosen so every element is real).
//!
//! Normalization convention: χ is expressed in the Frobenius-normalized
//! basis Ê_m = E_m/‖E_m‖_F and scaled so that a unitary process has
//! Tr(χχ†) = 1; the map action is then ρ(T) = 4 Σ_{mn} χ_{mn} Ê_m ρ Ê_n†.
//! The printed basis is not normalized, so without this convention the
//! attenuated fidelity |Tr(χ_exp χ_th†)| could not reach 1 for a perfect
//! gate.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{eigh_unchecked, kron, pauli, ComplexMatrix, SpinAxis};

/// Unitarity tolerance accepted by [`chi_from_unitary`].
pub const QPT_UNITARITY_TOL: f64 = 1e-8;

/// The fixed 16-element operator basis.
#[derive(Debug, Clone)]
pub struct OperatorBasis {
    elements: Vec<ComplexMatrix>,
    norms: Vec<f64>,
}

impl OperatorBasis {
    /// The standard basis, ordered row-major over (left factor, right
    /// factor) with prefactors making every element purely real:
    ///
    /// I⊗I,    I⊗σx,    -i I⊗σy,  I⊗σz,
    /// σx⊗I,   σx⊗σx,   -i σx⊗σy, σx⊗σz,
    /// -i σy⊗I, -i σy⊗σx, -σy⊗σy,  -i σy⊗σz,
    /// σz⊗I,   σz⊗σx,   -i σz⊗σy, σz⊗σz.
    pub fn standard() -> Self {
        let identity = ComplexMatrix::identity(2);
        let minus_i = Complex64::new(0.0, -1.0);
        let factors: [(ComplexMatrix, Complex64); 4] = [
            (identity.clone(), Complex64::ONE),
            (pauli(SpinAxis::X), Complex64::ONE),
            (pauli(SpinAxis::Y), minus_i),
            (pauli(SpinAxis::Z), Complex64::ONE),
        ];
        let mut elements = Vec::with_capacity(16);
        for (left, left_phase) in &factors {
            for (right, right_phase) in &factors {
                elements.push(kron(left, right).scale(left_phase * right_phase));
            }
        }
        let norms = elements.iter().map(|e| e.frobenius_norm()).collect();
        Self { elements, norms }
    }

    pub fn element(&self, m: usize) -> &ComplexMatrix {
        &self.elements[m]
    }

    /// Orthogonality constant Tr(E_m† E_m).
    pub fn normalization(&self, m: usize) -> f64 {
        self.norms[m] * self.norms[m]
    }

    /// Frobenius-normalized element Ê_m.
    pub fn normalized(&self, m: usize) -> ComplexMatrix {
        self.elements[m].scale_re(1.0 / self.norms[m])
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// A process matrix in the convention described in the module docs.
#[derive(Debug, Clone)]
pub struct ProcessMatrix {
    chi: ComplexMatrix,
}

impl ProcessMatrix {
    /// Wrap a raw 16×16 χ matrix (assumed already in this convention).
    pub fn from_chi(chi: ComplexMatrix) -> Result<Self> {
        if chi.dim() != 16 {
            return Err(Error::DimensionMismatch {
                left: 16,
                right: chi.dim(),
            });
        }
        Ok(Self { chi })
    }

    pub fn chi(&self) -> &ComplexMatrix {
        &self.chi
    }

    /// Hermiticity deviation of χ.
    pub fn hermiticity_error(&self) -> f64 {
        self.chi.hermiticity_error()
    }

    /// Eigenvalues of the Hermitian part of χ, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let hermitian = self.chi.add(&self.chi.dagger()).scale_re(0.5);
        eigh_unchecked(&hermitian).values
    }

    /// Apply the represented map to a 4×4 matrix: ρ ↦ 4 Σ χ_mn Ê_m ρ Ê_n†.
    pub fn apply(&self, basis: &OperatorBasis, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(4);
        for m in 0..16 {
            let left = basis.normalized(m).mul(rho);
            for n in 0..16 {
                let coefficient = self.chi.get(m, n) * Complex64::new(4.0, 0.0);
                if coefficient == Complex64::ZERO {
                    continue;
                }
                out = out.add(&left.mul(&basis.normalized(n).dagger()).scale(coefficient));
            }
        }
        out
    }

    /// Trace-preservation completeness sum 4 Σ χ_mn Ê_n† Ê_m, the identity
    /// for a trace-preserving process.
    pub fn completeness(&self, basis: &OperatorBasis) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(4);
        for m in 0..16 {
            for n in 0..16 {
                let coefficient = self.chi.get(m, n) * Complex64::new(4.0, 0.0);
                if coefficient == Complex64::ZERO {
                    continue;
                }
                out = out.add(
                    &basis
                        .normalized(n)
                        .dagger()
                        .mul(&basis.normalized(m))
                        .scale(coefficient),
                );
            }
        }
        out
    }
}

/// χ matrix of the unitary process ρ ↦ uρu†.
pub fn chi_from_unitary(basis: &OperatorBasis, u: &ComplexMatrix) -> Result<ProcessMatrix> {
    if u.dim() != 4 {
        return Err(Error::DimensionMismatch {
            left: 4,
            right: u.dim(),
        });
    }
    let deviation = u.unitarity_error();
    if deviation > QPT_UNITARITY_TOL {
        return Err(Error::NotUnitary {
            deviation,
            tolerance: QPT_UNITARITY_TOL,
        });
    }
    // Expansion u = Σ c_m Ê_m with c_m = Tr(Ê_m† u); ‖c‖² = ‖u‖² = 4.
    let coefficients: Vec<Complex64> = (0..16)
        .map(|m| {
            let e = basis.normalized(m);
            let mut acc = Complex64::ZERO;
            for i in 0..4 {
                for j in 0..4 {
                    acc += e.get(i, j).conj() * u.get(i, j);
                }
            }
            acc
        })
        .collect();
    let chi = ComplexMatrix::from_fn(16, |m, n| coefficients[m] * coefficients[n].conj() * 0.25);
    Ok(ProcessMatrix { chi })
}

/// χ matrix of a general linear map given its images of the 16 matrix
/// units: `images[4·r + c]` must be L(e_rc) where e_rc has a single 1 at
/// row r, column c.
pub fn chi_from_map(basis: &OperatorBasis, images: &[ComplexMatrix]) -> Result<ProcessMatrix> {
    if images.len() != 16 {
        return Err(Error::DimensionMismatch {
            left: 16,
            right: images.len(),
        });
    }
    for image in images {
        if image.dim() != 4 {
            return Err(Error::DimensionMismatch {
                left: 4,
                right: image.dim(),
            });
        }
    }
    // Superoperator in row-major vectorization: the column indexed by
    // (r, c) is vec(L(e_rc)).
    let superop = ComplexMatrix::from_fn(16, |row, col| {
        let (i, j) = (row / 4, row % 4);
        images[col].get(i, j)
    });
    // vec(Ê_m ρ Ê_n†) = (Ê_m ⊗ conj(Ê_n)) vec(ρ); those Kronecker products
    // form an orthonormal basis of superoperator space, so χ is read off
    // by projection.
    let chi = ComplexMatrix::from_fn(16, |m, n| {
        let k = kron(&basis.normalized(m), &conjugate(&basis.normalized(n)));
        let mut acc = Complex64::ZERO;
        for i in 0..16 {
            for j in 0..16 {
                acc += k.get(i, j).conj() * superop.get(i, j);
            }
        }
        acc * 0.25
    });
    Ok(ProcessMatrix { chi })
}

fn conjugate(a: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(a.dim(), |i, j| a.get(i, j).conj())
}

/// Attenuated χ fidelity |Tr(χ_a χ_b†)|; sensitive to uniform signal loss.
pub fn attenuated_fidelity(a: &ProcessMatrix, b: &ProcessMatrix) -> f64 {
    overlap(a, b).norm()
}

/// Unattenuated χ fidelity |Tr(χ_a χ_b†)| / √(Tr(χ_a χ_a†) Tr(χ_b χ_b†));
/// scale-invariant in both arguments.
pub fn unattenuated_fidelity(a: &ProcessMatrix, b: &ProcessMatrix) -> f64 {
    let denominator = (overlap(a, a).re * overlap(b, b).re).sqrt();
    if denominator == 0.0 {
        return 0.0;
    }
    overlap(a, b).norm() / denominator
}

fn overlap(a: &ProcessMatrix, b: &ProcessMatrix) -> Complex64 {
    // Tr(a b†) = Σ_mn a_mn conj(b_mn)
    a.chi
        .entries()
        .iter()
        .zip(b.chi.entries())
        .map(|(x, y)| x * y.conj())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::tests_support::random_unitary;
    use crate::spin::rotation_gate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn basis() -> OperatorBasis {
        OperatorBasis::standard()
    }

    #[test]
    fn basis_elements_are_real_and_orthogonal() {
        let basis = basis();
        assert_eq!(basis.len(), 16);
        for m in 0..16 {
            let e = basis.element(m);
            let max_imag = e
                .entries()
                .iter()
                .map(|z| z.im.abs())
                .fold(0.0_f64, f64::max);
            assert_eq!(max_imag, 0.0, "element {m} has imaginary parts");
        }
        for m in 0..16 {
            for n in 0..16 {
                let mut acc = Complex64::ZERO;
                for i in 0..4 {
                    for j in 0..4 {
                        acc += basis.element(m).get(i, j).conj() * basis.element(n).get(i, j);
                    }
                }
                if m == n {
                    assert!((acc.re - basis.normalization(m)).abs() < 1e-14);
                    assert!(basis.normalization(m) > 0.0);
                } else {
                    assert!(acc.norm() < 1e-14, "elements {m},{n} not orthogonal");
                }
            }
        }
        // The printed prefactors give constants 4, 1, and 1/4.
        assert!((basis.normalization(0) - 4.0).abs() < 1e-14);
        assert!((basis.normalization(1) - 1.0).abs() < 1e-14);
        assert!((basis.normalization(5) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn identity_process_has_single_entry() {
        let basis = basis();
        let chi = chi_from_unitary(&basis, &ComplexMatrix::identity(4)).unwrap();
        assert!((chi.chi().get(0, 0) - Complex64::ONE).norm() < 1e-12);
        for m in 0..16 {
            for n in 0..16 {
                if (m, n) != (0, 0) {
                    assert!(chi.chi().get(m, n).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn spin2_flip_process_hits_the_second_basis_slot() {
        // I ⊗ (2σx) is unitary and proportional to E_2.
        let basis = basis();
        let u = kron(&ComplexMatrix::identity(2), &pauli(SpinAxis::X).scale_re(2.0));
        let chi = chi_from_unitary(&basis, &u).unwrap();
        assert!((chi.chi().get(1, 1) - Complex64::ONE).norm() < 1e-12);
        assert!((chi.chi().get(0, 0)).norm() < 1e-12);
    }

    #[test]
    fn chi_reconstructs_the_unitary_map_and_preserves_trace() {
        let basis = basis();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..5 {
            let u = random_unitary(&mut rng, 4);
            let chi = chi_from_unitary(&basis, &u).unwrap();
            // Completeness: 4 Σ χ_mn Ê_n† Ê_m = I.
            let completeness = chi.completeness(&basis);
            assert!(completeness.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-10);
            // Action on a few matrix units matches uρu†.
            for (r, c) in [(0usize, 0usize), (1, 2), (3, 3)] {
                let mut rho = ComplexMatrix::zeros(4);
                rho.set(r, c, Complex64::ONE);
                let direct = u.mul(&rho).mul(&u.dagger());
                let mapped = chi.apply(&basis, &rho);
                assert!(mapped.max_abs_diff(&direct) < 1e-10);
            }
            // Unitary processes are normalized and rank one.
            let self_overlap = attenuated_fidelity(&chi, &chi);
            assert!((self_overlap - 1.0).abs() < 1e-10);
            let eigenvalues = chi.eigenvalues();
            let top = eigenvalues.last().unwrap();
            let second = eigenvalues[eigenvalues.len() - 2].abs().max(1e-300);
            assert!(top / second > 1e9, "rank-1 ratio {:.3e}", top / second);
            assert!(eigenvalues.iter().all(|&l| l > -1e-10));
            assert!(chi.hermiticity_error() < 1e-12);
        }
    }

    #[test]
    fn chi_from_map_agrees_with_chi_from_unitary() {
        let basis = basis();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_unitary(&mut rng, 4);
        let images: Vec<ComplexMatrix> = (0..16)
            .map(|k| {
                let mut e = ComplexMatrix::zeros(4);
                e.set(k / 4, k % 4, Complex64::ONE);
                u.mul(&e).mul(&u.dagger())
            })
            .collect();
        let from_map = chi_from_map(&basis, &images).unwrap();
        let from_unitary = chi_from_unitary(&basis, &u).unwrap();
        assert!(from_map.chi().max_abs_diff(from_unitary.chi()) < 1e-9);
    }

    #[test]
    fn chi_of_identity_map_from_images() {
        let basis = basis();
        let images: Vec<ComplexMatrix> = (0..16)
            .map(|k| {
                let mut e = ComplexMatrix::zeros(4);
                e.set(k / 4, k % 4, Complex64::ONE);
                e
            })
            .collect();
        let chi = chi_from_map(&basis, &images).unwrap();
        assert!((chi.chi().get(0, 0) - Complex64::ONE).norm() < 1e-12);
    }

    #[test]
    fn mixture_of_orthogonal_unitaries_averages_chi() {
        // The identity and the two-spin flip have orthogonal coefficient
        // vectors, so the χ of the averaged map is the average of the two
        // χ matrices with no cross terms.
        let basis = basis();
        let u1 = ComplexMatrix::identity(4);
        let u2 = kron(
            &pauli(SpinAxis::X).scale_re(2.0),
            &pauli(SpinAxis::X).scale_re(2.0),
        );
        let images: Vec<ComplexMatrix> = (0..16)
            .map(|k| {
                let mut e = ComplexMatrix::zeros(4);
                e.set(k / 4, k % 4, Complex64::ONE);
                let a = u1.mul(&e).mul(&u1.dagger());
                let b = u2.mul(&e).mul(&u2.dagger());
                a.add(&b).scale_re(0.5)
            })
            .collect();
        let mixed = chi_from_map(&basis, &images).unwrap();
        let chi1 = chi_from_unitary(&basis, &u1).unwrap();
        let chi2 = chi_from_unitary(&basis, &u2).unwrap();
        let averaged = chi1.chi().add(chi2.chi()).scale_re(0.5);
        assert!(mixed.chi().max_abs_diff(&averaged) < 1e-10);
        // The mixture is no longer rank one.
        let eigenvalues = mixed.eigenvalues();
        assert!(eigenvalues.last().unwrap() < &0.75);
    }

    #[test]
    fn fidelity_examples() {
        let basis = basis();
        let identity = chi_from_unitary(&basis, &ComplexMatrix::identity(4)).unwrap();
        assert!((attenuated_fidelity(&identity, &identity) - 1.0).abs() < 1e-12);
        assert!((unattenuated_fidelity(&identity, &identity) - 1.0).abs() < 1e-12);

        // Orthogonal processes.
        let flip = chi_from_unitary(
            &basis,
            &kron(
                &pauli(SpinAxis::X).scale_re(2.0),
                &pauli(SpinAxis::X).scale_re(2.0),
            ),
        )
        .unwrap();
        assert!(attenuated_fidelity(&identity, &flip) < 1e-12);

        // Attenuation sensitivity vs scale invariance.
        let halved = ProcessMatrix {
            chi: identity.chi().scale_re(0.5),
        };
        assert!((attenuated_fidelity(&halved, &identity) - 0.5).abs() < 1e-12);
        assert!((unattenuated_fidelity(&halved, &identity) - 1.0).abs() < 1e-12);

        // Symmetry.
        let rot = chi_from_unitary(
            &basis,
            &kron(
                &rotation_gate(SpinAxis::X, 0.3),
                &rotation_gate(SpinAxis::Z, 1.1),
            ),
        )
        .unwrap();
        let ab = unattenuated_fidelity(&rot, &identity);
        let ba = unattenuated_fidelity(&identity, &rot);
        assert!((ab - ba).abs() < 1e-12);
    }

    #[test]
    fn global_phase_insensitivity() {
        let basis = basis();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = random_unitary(&mut rng, 4);
        let phase = Complex64::new(0.0, 0.7321).exp();
        let chi_a = chi_from_unitary(&basis, &u).unwrap();
        let chi_b = chi_from_unitary(&basis, &u.scale(phase)).unwrap();
        assert!(chi_a.chi().max_abs_diff(chi_b.chi()) < 1e-12);
    }

    #[test]
    fn rotation_target_chi_is_valid() {
        let basis = basis();
        let u = kron(
            &ComplexMatrix::identity(2),
            &rotation_gate(SpinAxis::Z, PI / 2.0),
        );
        let chi = chi_from_unitary(&basis, &u).unwrap();
        assert!((attenuated_fidelity(&chi, &chi) - 1.0).abs() < 1e-12);
        assert!(chi.hermiticity_error() < 1e-14);
        assert!(chi.eigenvalues().iter().all(|&l| l > -1e-12));
    }

    #[test]
    fn chi_from_unitary_rejects_bad_input() {
        let basis = basis();
        assert!(matches!(
            chi_from_unitary(&basis, &ComplexMatrix::identity(2)),
            Err(Error::DimensionMismatch { .. })
        ));
        let stretched = ComplexMatrix::identity(4).scale_re(1.01);
        assert!(matches!(
            chi_from_unitary(&basis, &stretched),
            Err(Error::NotUnitary { .. })
        ));
    }
}
