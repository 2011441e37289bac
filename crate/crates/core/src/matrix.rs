//! Dense complex small-matrix kernel.
//!
//! Square complex matrices up to 16x16 with the handful of primitives the
//! rest of the crate needs: Kronecker products, Hermitian eigendecomposition
//! (cyclic Jacobi), the unitary exponential exp(-i t h) of a Hermitian
//! generator, the principal logarithm on SU(2), Frobenius norms, and the
//! normalized trace fidelity.
//!
//! Spin-1/2 operators follow the convention that includes the factor 1/2,
//! e.g. `pauli(SpinAxis::Z)` is diag(1/2, -1/2) with eigenvalues +-1/2.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Max |h - h†| accepted when a Hermitian input is required.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// ‖u†u - I‖_F accepted when a unitary input is required.
pub const UNITARITY_TOL: f64 = 1e-8;
/// |det u - 1| accepted by [`logm_su2`].
pub const DETERMINANT_TOL: f64 = 1e-8;

/// Spin operator axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpinAxis {
    X,
    Y,
    Z,
}

impl SpinAxis {
    /// All three axes in x, y, z order.
    pub const ALL: [SpinAxis; 3] = [SpinAxis::X, SpinAxis::Y, SpinAxis::Z];
}

impl fmt::Display for SpinAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpinAxis::X => write!(f, "x"),
            SpinAxis::Y => write!(f, "y"),
            SpinAxis::Z => write!(f, "z"),
        }
    }
}

/// Square complex matrix in row-major order.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self.get(i, j);
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    /// Zero matrix of the given dimension.
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::ZERO; dim * dim],
        }
    }

    /// Identity matrix of the given dimension.
    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, Complex64::ONE);
        }
        m
    }

    /// Build from a flat row-major slice; validates the entry count and that
    /// every entry is finite.
    pub fn from_vec(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                left: dim * dim,
                right: data.len(),
            });
        }
        for (k, z) in data.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFiniteEntry {
                    row: k / dim,
                    col: k % dim,
                });
            }
        }
        Ok(Self { dim, data })
    }

    /// Build from nested rows; validates squareness and finiteness.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_vec(dim, data)
    }

    pub(crate) fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.dim + col] = value;
    }

    /// Flat row-major view of the entries.
    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    /// Matrix product self * other. Panics on dimension mismatch.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "matrix product dimension mismatch");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == Complex64::ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "matrix sum dimension mismatch");
        let mut out = self.clone();
        for (o, b) in out.data.iter_mut().zip(&other.data) {
            *o += b;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "matrix difference dimension mismatch");
        let mut out = self.clone();
        for (o, b) in out.data.iter_mut().zip(&other.data) {
            *o -= b;
        }
        out
    }

    /// Scalar multiple.
    pub fn scale(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        for z in out.data.iter_mut() {
            *z *= factor;
        }
        out
    }

    pub fn scale_re(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i).conj())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// sqrt(Tr(a†a)).
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise |self - other|.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "matrix comparison dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Max |self - self†| over entries.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in i..self.dim {
                let dev = (self.get(i, j) - self.get(j, i).conj()).norm();
                worst = worst.max(dev);
            }
        }
        worst
    }

    /// ‖self†·self - I‖_F, zero for a unitary matrix.
    pub fn unitarity_error(&self) -> f64 {
        self.dagger()
            .mul(self)
            .sub(&Self::identity(self.dim))
            .frobenius_norm()
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.dim, v.len(), "matrix-vector dimension mismatch");
        let n = self.dim;
        let mut out = vec![Complex64::ZERO; n];
        for i in 0..n {
            let mut acc = Complex64::ZERO;
            for j in 0..n {
                acc += self.data[i * n + j] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    /// Commutator self*other - other*self.
    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }
}

/// Spin-1/2 operator along the given axis (Pauli matrix with the 1/2 factor).
pub fn pauli(axis: SpinAxis) -> ComplexMatrix {
    let h = 0.5;
    let entries = match axis {
        SpinAxis::X => [
            Complex64::ZERO,
            Complex64::new(h, 0.0),
            Complex64::new(h, 0.0),
            Complex64::ZERO,
        ],
        SpinAxis::Y => [
            Complex64::ZERO,
            Complex64::new(0.0, -h),
            Complex64::new(0.0, h),
            Complex64::ZERO,
        ],
        SpinAxis::Z => [
            Complex64::new(h, 0.0),
            Complex64::ZERO,
            Complex64::ZERO,
            Complex64::new(-h, 0.0),
        ],
    };
    ComplexMatrix {
        dim: 2,
        data: entries.to_vec(),
    }
}

/// Kronecker product a ⊗ b.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (na, nb) = (a.dim(), b.dim());
    let n = na * nb;
    let mut out = ComplexMatrix::zeros(n);
    for i in 0..na {
        for j in 0..na {
            let aij = a.get(i, j);
            if aij == Complex64::ZERO {
                continue;
            }
            for k in 0..nb {
                for l in 0..nb {
                    out.set(i * nb + k, j * nb + l, aij * b.get(k, l));
                }
            }
        }
    }
    out
}

/// Hermitian eigendecomposition a = V diag(λ) V†.
#[derive(Debug, Clone)]
pub struct EighDecomposition {
    /// Real eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Unitary matrix whose columns are the corresponding eigenvectors.
    pub vectors: ComplexMatrix,
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Rejects inputs whose Hermiticity deviation exceeds [`HERMITICITY_TOL`].
pub fn eigh(a: &ComplexMatrix) -> Result<EighDecomposition> {
    let deviation = a.hermiticity_error();
    if deviation > HERMITICITY_TOL {
        return Err(Error::NotHermitian {
            deviation,
            tolerance: HERMITICITY_TOL,
        });
    }
    Ok(eigh_unchecked(a))
}

pub(crate) fn eigh_unchecked(a: &ComplexMatrix) -> EighDecomposition {
    let n = a.dim();
    // Work on the exactly Hermitian part so roundoff in the input cannot
    // push the iteration off the real-eigenvalue manifold.
    let mut m = ComplexMatrix::from_fn(n, |i, j| (a.get(i, j) + a.get(j, i).conj()) * 0.5);
    let mut v = ComplexMatrix::identity(n);
    let scale = m.frobenius_norm().max(1.0);
    let target = 1e-15 * scale;

    const MAX_SWEEPS: usize = 64;
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0_f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m.get(p, q).norm_sqr();
            }
        }
        if off.sqrt() * std::f64::consts::SQRT_2 <= target {
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let g = m.get(p, q);
                let abs_g = g.norm();
                if abs_g <= 1e-18 * scale {
                    continue;
                }
                let phase = g / abs_g;
                let app = m.get(p, p).re;
                let aqq = m.get(q, q).re;
                let tau = (aqq - app) / (2.0 * abs_g);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Right-multiply columns p, q of m and v by the rotation,
                // then left-multiply rows p, q of m by its adjoint.
                let s_phase = Complex64::new(s, 0.0) * phase;
                for r in 0..n {
                    let mrp = m.get(r, p);
                    let mrq = m.get(r, q);
                    m.set(r, p, mrp * c - mrq * s_phase.conj());
                    m.set(r, q, mrp * s_phase + mrq * c);
                    let vrp = v.get(r, p);
                    let vrq = v.get(r, q);
                    v.set(r, p, vrp * c - vrq * s_phase.conj());
                    v.set(r, q, vrp * s_phase + vrq * c);
                }
                for col in 0..n {
                    let mpc = m.get(p, col);
                    let mqc = m.get(q, col);
                    m.set(p, col, mpc * c - mqc * s_phase);
                    m.set(q, col, mpc * s_phase.conj() + mqc * c);
                }
                m.set(p, q, Complex64::ZERO);
                m.set(q, p, Complex64::ZERO);
                let dp = m.get(p, p);
                let dq = m.get(q, q);
                m.set(p, p, Complex64::new(dp.re, 0.0));
                m.set(q, q, Complex64::new(dq.re, 0.0));
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(i, i).re.total_cmp(&m.get(j, j).re));
    let values = order.iter().map(|&i| m.get(i, i).re).collect();
    let vectors = ComplexMatrix::from_fn(n, |r, c| v.get(r, order[c]));
    EighDecomposition { values, vectors }
}

/// exp(-i t h) for Hermitian h, via eigendecomposition.
///
/// The result is unitary up to roundoff regardless of ‖h‖·t.
pub fn expm_skew(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let decomposition = eigh(h)?;
    Ok(expm_from_eigh(&decomposition, t))
}

/// exp(-i t h) given a precomputed eigendecomposition of h.
pub(crate) fn expm_from_eigh(decomposition: &EighDecomposition, t: f64) -> ComplexMatrix {
    let n = decomposition.vectors.dim();
    let v = &decomposition.vectors;
    let phases: Vec<Complex64> = decomposition
        .values
        .iter()
        .map(|&lambda| Complex64::new(0.0, -t * lambda).exp())
        .collect();
    // U = V diag(phases) V†
    let mut out = ComplexMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = Complex64::ZERO;
            for k in 0..n {
                acc += v.get(i, k) * phases[k] * v.get(j, k).conj();
            }
            out.set(i, j, acc);
        }
    }
    out
}

/// Principal logarithm of a 2x2 special-unitary matrix.
///
/// Writes u = cos(α) I - i sin(α) (n̂·P) with the half-angle α in [0, π]
/// (P the unscaled Pauli vector) and returns the skew-Hermitian
/// X = -i α (n̂·P), so exp(X) = u. For u ≈ -I the rotation axis is
/// degenerate; the z axis is used by convention.
pub fn logm_su2(u: &ComplexMatrix) -> Result<ComplexMatrix> {
    if u.dim() != 2 {
        return Err(Error::DimensionMismatch {
            left: 2,
            right: u.dim(),
        });
    }
    let unitary_dev = u.unitarity_error();
    if unitary_dev > UNITARITY_TOL {
        return Err(Error::NotUnitary {
            deviation: unitary_dev,
            tolerance: UNITARITY_TOL,
        });
    }
    let det = u.get(0, 0) * u.get(1, 1) - u.get(0, 1) * u.get(1, 0);
    let det_dev = (det - Complex64::ONE).norm();
    if det_dev > DETERMINANT_TOL {
        return Err(Error::NotSpecialUnitary {
            deviation: det_dev,
            tolerance: DETERMINANT_TOL,
        });
    }

    let w = (u.trace().re / 2.0).clamp(-1.0, 1.0);
    let alpha = w.acos();
    let sin_alpha = (1.0 - w * w).max(0.0).sqrt();

    if sin_alpha < 1e-10 {
        if w > 0.0 {
            // u ≈ I: first-order principal log, traceless skew part of u.
            let mut x = ComplexMatrix::from_fn(2, |i, j| (u.get(i, j) - u.get(j, i).conj()) * 0.5);
            let half_trace = x.trace() * 0.5;
            x.set(0, 0, x.get(0, 0) - half_trace);
            x.set(1, 1, x.get(1, 1) - half_trace);
            Ok(x)
        } else {
            // u ≈ -I: eigenphases ±π, axis fixed to z.
            Ok(ComplexMatrix::from_vec(
                2,
                vec![
                    Complex64::new(0.0, -alpha),
                    Complex64::ZERO,
                    Complex64::ZERO,
                    Complex64::new(0.0, alpha),
                ],
            )
            .expect("finite entries"))
        }
    } else {
        // n̂·P = i (u - wI)/sin α, re-Hermitized to absorb roundoff.
        let i_unit = Complex64::new(0.0, 1.0);
        let mut k = ComplexMatrix::from_fn(2, |r, c| {
            let shifted = if r == c {
                u.get(r, c) - Complex64::new(w, 0.0)
            } else {
                u.get(r, c)
            };
            shifted * i_unit / sin_alpha
        });
        k = ComplexMatrix::from_fn(2, |r, c| (k.get(r, c) + k.get(c, r).conj()) * 0.5);
        Ok(k.scale(Complex64::new(0.0, -alpha)))
    }
}

/// Frobenius norm, as a free function to mirror the rest of the kernel API.
pub fn frobenius_norm(a: &ComplexMatrix) -> f64 {
    a.frobenius_norm()
}

/// Normalized gate fidelity 2^{-N} Re Tr(u†v).
///
/// Phase-sensitive: equals 1 only when v matches u including global phase.
pub fn trace_fidelity(u: &ComplexMatrix, v: &ComplexMatrix, n_spins: usize) -> Result<f64> {
    let dim = 1usize << n_spins;
    if u.dim() != dim {
        return Err(Error::DimensionMismatch {
            left: dim,
            right: u.dim(),
        });
    }
    if v.dim() != dim {
        return Err(Error::DimensionMismatch {
            left: dim,
            right: v.dim(),
        });
    }
    // Tr(u†v) = Σ_ij conj(u_ij) v_ij
    let trace: Complex64 = u
        .entries()
        .iter()
        .zip(v.entries())
        .map(|(a, b)| a.conj() * b)
        .sum();
    Ok(trace.re / dim as f64)
}

/// Random-matrix helpers shared by the test suites of several modules.
#[cfg(test)]
pub(crate) mod tests_support {
    use super::*;
    use rand::Rng;

    pub(crate) fn random_hermitian(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
        let raw = ComplexMatrix::from_fn(n, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        raw.add(&raw.dagger()).scale_re(0.5)
    }

    pub(crate) fn random_su2(rng: &mut impl Rng) -> ComplexMatrix {
        // Haar-uniform via a normalized quaternion.
        let q: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let norm = q.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-9);
        let (a, b, c, d) = (q[0] / norm, q[1] / norm, q[2] / norm, q[3] / norm);
        // u = a I - i (b Px + c Py + d Pz)
        ComplexMatrix::from_vec(
            2,
            vec![
                Complex64::new(a, -d),
                Complex64::new(-c, -b),
                Complex64::new(c, -b),
                Complex64::new(a, d),
            ],
        )
        .unwrap()
    }

    /// Haar-ish random unitary of any dimension: eigenvectors of a random
    /// Hermitian matrix with random eigenphases applied.
    pub(crate) fn random_unitary(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
        let h = random_hermitian(rng, n);
        let basis = super::eigh_unchecked(&h).vectors;
        let phases = ComplexMatrix::from_fn(n, |i, j| {
            if i == j {
                Complex64::new(0.0, rng.random_range(0.0..std::f64::consts::TAU)).exp()
            } else {
                Complex64::ZERO
            }
        });
        basis.mul(&phases).mul(&basis.dagger())
    }
}
