//! Gradient-based fixed-duration pulse optimization.
//!
//! Maximizes the gate fidelity Φ = 2^{-N} Re Tr[U_f† U(T)] over
//! piecewise-constant controls, working in polar control coordinates
//! (ω_r, θ) so the amplitude bound becomes the box 0 ≤ ω_r ≤ Ω. The θ
//! variables are treated as unconstrained and wrapped modulo 2π only when
//! converting back to Cartesian controls.
//!
//! Two gradient modes are provided: `FirstOrder` evaluates the analytic
//! first-order expression
//!
//!   ∂Φ/∂ω_{x,y}(j) = -(Δt/2^N) Σ_k (1-δ_k) Im Tr[U_f† U_M ⋯ S^k_{x,y} U_j ⋯ U_1]
//!
//! with one forward and one backward pass, and `Exact` differentiates each
//! step exponential through its eigendecomposition. The first-order sign is
//! fixed by the finite-difference oracle in the tests.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bfgs::{minimize_bounded, BfgsParams, Bounds, ObjectiveFunction, StopReason};
use crate::error::{Error, Result};
use crate::lm::{minimize_lm, LmParams, ResidualFunction};
use crate::matrix::{expm_from_eigh, trace_fidelity, ComplexMatrix, EighDecomposition};
use crate::propagation::{PulseSequence, SystemOps};
use crate::spin::{SpinSystem, TargetTransformation};

/// Iteration cap of the least-squares refinement stage.
const LM_MAX_ITERS: usize = 400;

/// How step-propagator derivatives are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientMode {
    /// Analytic first-order expression, O(Δt·Ω) accurate.
    FirstOrder,
    /// Exact derivative of each exponential via its eigendecomposition.
    Exact,
}

/// Optimizer knobs.
#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    /// Fidelity threshold declaring convergence.
    pub phi0: f64,
    /// Iteration cap per restart.
    pub max_iters: usize,
    /// Stopping tolerance on the scaled projected-gradient infinity norm.
    pub grad_tol: f64,
    /// Number of optimization starts (a supplied warm start counts as the first).
    pub restarts: usize,
    /// RNG seed controlling every random choice.
    pub seed: u64,
    pub gradient_mode: GradientMode,
    /// Centered moving-average window for smoothing (odd).
    pub smoothing_window: usize,
    /// Cap on smooth-and-reoptimize rounds.
    pub max_smoothing_rounds: usize,
    /// Max allowed |ω_r(j+1) - ω_r(j)| as a fraction of Ω.
    pub smoothness_threshold: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            phi0: 0.9999,
            max_iters: 2000,
            grad_tol: 1e-10,
            restarts: 5,
            seed: 0,
            gradient_mode: GradientMode::FirstOrder,
            smoothing_window: 3,
            max_smoothing_rounds: 10,
            smoothness_threshold: 0.15,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.phi0 > 0.0 && self.phi0 <= 1.0) {
            return Err(Error::InvalidPulse(format!(
                "phi0 must lie in (0, 1], got {}",
                self.phi0
            )));
        }
        if self.smoothing_window == 0 || self.smoothing_window % 2 == 0 {
            return Err(Error::InvalidPulse(format!(
                "smoothing window must be odd and >= 1, got {}",
                self.smoothing_window
            )));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidPulse("at least one restart required".into()));
        }
        Ok(())
    }
}

/// Robustness ensemble: RF amplitude scale factors and common shift offsets,
/// each with weights. The ensemble is the product grid of the two lists.
#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    /// Multiplicative RF amplitude factors with weights.
    pub rf_scale_points: Vec<(f64, f64)>,
    /// Additive offsets (Hz) applied to both shift frequencies, with weights.
    pub shift_offset_points: Vec<(f64, f64)>,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        let third = 1.0 / 3.0;
        Self {
            rf_scale_points: vec![(0.95, third), (1.0, third), (1.05, third)],
            shift_offset_points: vec![(-25.0, third), (0.0, third), (25.0, third)],
        }
    }
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        for (points, what) in [
            (&self.rf_scale_points, "rf_scale"),
            (&self.shift_offset_points, "shift_offset"),
        ] {
            if points.is_empty() {
                return Err(Error::InvalidSystem(format!("{what} points are empty")));
            }
            let sum: f64 = points.iter().map(|(_, w)| w).sum();
            if points.iter().any(|(_, w)| *w <= 0.0) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidSystem(format!(
                    "{what} weights must be positive and sum to 1 (sum = {sum})"
                )));
            }
        }
        Ok(())
    }
}

/// Outcome of a fixed-duration optimization.
#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub pulse: PulseSequence,
    /// Fidelity of the pulse on the nominal system.
    pub fidelity: f64,
    /// Weighted ensemble fidelity, when an ensemble was supplied.
    pub ensemble_fidelity: Option<f64>,
    /// Accepted iterations of the best restart.
    pub iterations: usize,
    /// Objective fidelity after every accepted iterate of the best restart.
    pub fidelity_history: Vec<f64>,
    pub converged: bool,
    /// Largest amplitude-bound violation over every iterate of every
    /// restart; ≤ 0 means all iterates stayed feasible.
    pub max_bound_violation: f64,
}

/// Polar view (ω_r, θ) of the control samples, θ in [0, 2π).
pub fn to_polar(pulse: &PulseSequence) -> Vec<(f64, f64)> {
    (0..pulse.len())
        .map(|j| {
            let (wx, wy) = pulse.sample(j);
            let r = wx.hypot(wy);
            let theta = if r == 0.0 {
                0.0
            } else {
                let t = wy.atan2(wx);
                if t < 0.0 {
                    t + std::f64::consts::TAU
                } else {
                    t
                }
            };
            (r, theta)
        })
        .collect()
}

/// Rebuild a pulse from polar samples on the given grid.
pub fn from_polar(dt: f64, bound: f64, polar: &[(f64, f64)]) -> Result<PulseSequence> {
    let samples: Vec<(f64, f64)> = polar
        .iter()
        .map(|&(r, theta)| (r * theta.cos(), r * theta.sin()))
        .collect();
    PulseSequence::new(dt, bound, &samples)
}

/// One ensemble member: a perturbed system plus its RF scale and weight.
struct Member {
    ops: SystemOps,
    rf_scale: f64,
    weight: f64,
}

fn build_members(sys: &SpinSystem, ensemble: Option<&EnsembleSpec>) -> Result<Vec<Member>> {
    match ensemble {
        None => Ok(vec![Member {
            ops: SystemOps::new(sys),
            rf_scale: 1.0,
            weight: 1.0,
        }]),
        Some(spec) => {
            spec.validate()?;
            let mut members = Vec::new();
            for &(scale, w_scale) in &spec.rf_scale_points {
                for &(offset_hz, w_offset) in &spec.shift_offset_points {
                    let perturbed = sys.with_common_shift_offset_hz(offset_hz)?;
                    members.push(Member {
                        ops: SystemOps::new(&perturbed),
                        rf_scale: scale,
                        weight: w_scale * w_offset,
                    });
                }
            }
            Ok(members)
        }
    }
}

/// Fidelity of one member for Cartesian controls.
fn member_fidelity(
    member: &Member,
    target: &ComplexMatrix,
    cart: &[(f64, f64)],
    dt: f64,
    n_spins: usize,
) -> f64 {
    let mut u = ComplexMatrix::identity(member.ops.dim);
    for &(wx, wy) in cart {
        let step = member
            .ops
            .step_unitary(member.rf_scale * wx, member.rf_scale * wy, dt);
        u = step.mul(&u);
    }
    trace_fidelity(target, &u, n_spins).expect("dimensions agree")
}

/// Tr(a·b) without forming the product.
fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    let n = a.dim();
    let mut acc = Complex64::ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += a.get(i, j) * b.get(j, i);
        }
    }
    acc
}

/// Fidelity and Cartesian gradient of one member.
fn member_fidelity_and_grad(
    member: &Member,
    target: &ComplexMatrix,
    cart: &[(f64, f64)],
    dt: f64,
    n_spins: usize,
    mode: GradientMode,
) -> (f64, Vec<(f64, f64)>) {
    let steps = cart.len();
    let dim = member.ops.dim;
    let scale = member.rf_scale;
    let norm = 1.0 / (dim as f64);

    // Forward pass: step unitaries, cumulative products F_j = U_j ⋯ U_1 and,
    // for the exact mode, each step's eigendecomposition.
    let mut units = Vec::with_capacity(steps);
    let mut forward = Vec::with_capacity(steps);
    let mut eigs: Vec<EighDecomposition> = Vec::new();
    let mut f = ComplexMatrix::identity(dim);
    for &(wx, wy) in cart {
        let decomposition = member.ops.step_eigh(scale * wx, scale * wy);
        let u = expm_from_eigh(&decomposition, dt);
        f = u.mul(&f);
        forward.push(f.clone());
        units.push(u);
        if mode == GradientMode::Exact {
            eigs.push(decomposition);
        }
    }
    let phi = trace_fidelity(target, &f, n_spins).expect("dimensions agree");

    // Backward pass: L_j = U_f† U_M ⋯ U_{j+1}, accumulated from the end.
    let mut grad = vec![(0.0, 0.0); steps];
    let mut l = target.dagger();
    for j in (0..steps).rev() {
        match mode {
            GradientMode::FirstOrder => {
                // ∂Φ/∂ω = -(Δt/2^N) s Im Tr[g_op · F_j L_j]
                let p = forward[j].mul(&l);
                let gx = -dt * norm * scale * trace_product(&member.ops.gx, &p).im;
                let gy = -dt * norm * scale * trace_product(&member.ops.gy, &p).im;
                grad[j] = (gx, gy);
            }
            GradientMode::Exact => {
                let decomposition = &eigs[j];
                let v = &decomposition.vectors;
                let lam = &decomposition.values;
                // P = F_{j-1} L_j, rotated into the step eigenbasis.
                let p = if j == 0 {
                    l.clone()
                } else {
                    forward[j - 1].mul(&l)
                };
                let c = v.dagger().mul(&p).mul(v);
                // Divided differences of f(λ) = exp(-i Δt λ) in sinc form,
                // uniformly accurate for close eigenvalues.
                let gamma = ComplexMatrix::from_fn(dim, |p_i, q_i| {
                    let mid = 0.5 * (lam[p_i] + lam[q_i]);
                    let half = 0.5 * dt * (lam[p_i] - lam[q_i]);
                    let sinc = if half.abs() < 1e-8 {
                        1.0 - half * half / 6.0
                    } else {
                        half.sin() / half
                    };
                    Complex64::new(0.0, -dt) * Complex64::new(0.0, -dt * mid).exp() * sinc
                });
                let wx_op = v.dagger().mul(&member.ops.gx).mul(v);
                let wy_op = v.dagger().mul(&member.ops.gy).mul(v);
                let mut gx = 0.0;
                let mut gy = 0.0;
                for p_i in 0..dim {
                    for q_i in 0..dim {
                        // dU = V (Γ ∘ (V† E V)) V† with E = -s·g_op.
                        let g_entry = gamma.get(p_i, q_i);
                        let c_entry = c.get(q_i, p_i);
                        gx += (g_entry * (-scale) * wx_op.get(p_i, q_i) * c_entry).re;
                        gy += (g_entry * (-scale) * wy_op.get(p_i, q_i) * c_entry).re;
                    }
                }
                grad[j] = (norm * gx, norm * gy);
            }
        }
        // L_{j-1} = L_j U_j.
        if j > 0 {
            l = l.mul(&units[j]);
        }
    }
    (phi, grad)
}

/// Exact derivative of the step exponential along one control channel:
/// dU = V (Γ ∘ (V† E V)) V† for H = V Λ V† and E = ∂H/∂u.
fn step_frechet(
    decomposition: &EighDecomposition,
    channel_generator: &ComplexMatrix,
    rf_scale: f64,
    dt: f64,
) -> ComplexMatrix {
    let v = &decomposition.vectors;
    let lam = &decomposition.values;
    let dim = v.dim();
    // E = -s·g_op rotated into the eigenbasis.
    let rotated = v
        .dagger()
        .mul(channel_generator)
        .mul(v)
        .scale_re(-rf_scale);
    let core = ComplexMatrix::from_fn(dim, |p, q| {
        let mid = 0.5 * (lam[p] + lam[q]);
        let half = 0.5 * dt * (lam[p] - lam[q]);
        let sinc = if half.abs() < 1e-8 {
            1.0 - half * half / 6.0
        } else {
            half.sin() / half
        };
        let gamma = Complex64::new(0.0, -dt) * Complex64::new(0.0, -dt * mid).exp() * sinc;
        gamma * rotated.get(p, q)
    });
    v.mul(&core).mul(&v.dagger())
}

/// Least-squares view of the same objective: the weighted infidelity is
/// exactly Σ_e w_e ‖U_e(T) - U_f‖_F² / 2^{N+1}, so the residual stacks the
/// scaled real and imaginary parts of U_e(T) - U_f over ensemble members.
struct PolarResidual<'a> {
    members: &'a [Member],
    target: &'a ComplexMatrix,
    dt: f64,
    n_spins: usize,
    bound: f64,
}

impl PolarResidual<'_> {
    fn cart(&self, x: &[f64]) -> Vec<(f64, f64)> {
        x.chunks_exact(2)
            .map(|rt| {
                let r = rt[0] * self.bound;
                (r * rt[1].cos(), r * rt[1].sin())
            })
            .collect()
    }

    fn member_scale(&self, member: &Member) -> f64 {
        (member.weight / (1u64 << (self.n_spins + 1)) as f64).sqrt()
    }
}

impl ResidualFunction for PolarResidual<'_> {
    fn residual_len(&self) -> usize {
        let dim = self.target.dim();
        2 * dim * dim * self.members.len()
    }

    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let cart = self.cart(x);
        let dim = self.target.dim();
        let mut out = Vec::with_capacity(self.residual_len());
        for member in self.members {
            let mut u = ComplexMatrix::identity(dim);
            for &(wx, wy) in &cart {
                u = member
                    .ops
                    .step_unitary(member.rf_scale * wx, member.rf_scale * wy, self.dt)
                    .mul(&u);
            }
            let scale = self.member_scale(member);
            for i in 0..dim {
                for j in 0..dim {
                    let d = u.get(i, j) - self.target.get(i, j);
                    out.push(scale * d.re);
                    out.push(scale * d.im);
                }
            }
        }
        out
    }

    fn residual_and_jacobian(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let cart = self.cart(x);
        let steps = cart.len();
        let n = x.len();
        let dim = self.target.dim();
        let rows_per_member = 2 * dim * dim;
        let total_rows = rows_per_member * self.members.len();
        let mut residual = vec![0.0_f64; total_rows];
        let mut jacobian = vec![0.0_f64; total_rows * n];

        for (e, member) in self.members.iter().enumerate() {
            let scale = self.member_scale(member);
            let row0 = e * rows_per_member;

            // Forward pass with cached eigendecompositions.
            let mut forward = Vec::with_capacity(steps);
            let mut eigs = Vec::with_capacity(steps);
            let mut u = ComplexMatrix::identity(dim);
            for &(wx, wy) in &cart {
                let decomposition = member
                    .ops
                    .step_eigh(member.rf_scale * wx, member.rf_scale * wy);
                u = expm_from_eigh(&decomposition, self.dt).mul(&u);
                forward.push(u.clone());
                eigs.push(decomposition);
            }
            for i in 0..dim {
                for j in 0..dim {
                    let d = u.get(i, j) - self.target.get(i, j);
                    residual[row0 + 2 * (i * dim + j)] = scale * d.re;
                    residual[row0 + 2 * (i * dim + j) + 1] = scale * d.im;
                }
            }

            // ∂U/∂u(j) = (U_{M-1}…U_{j+1}) dU_j (U_{j-1}…U_1)
            //          = U(T) F_j† dU_j F_{j-1}.
            for j in 0..steps {
                let suffix = if j + 1 == steps {
                    ComplexMatrix::identity(dim)
                } else {
                    u.mul(&forward[j].dagger())
                };
                let du_x = step_frechet(&eigs[j], &member.ops.gx, member.rf_scale, self.dt);
                let du_y = step_frechet(&eigs[j], &member.ops.gy, member.rf_scale, self.dt);
                let (col_x, col_y) = if j == 0 {
                    (suffix.mul(&du_x), suffix.mul(&du_y))
                } else {
                    let prefix = &forward[j - 1];
                    (
                        suffix.mul(&du_x).mul(prefix),
                        suffix.mul(&du_y).mul(prefix),
                    )
                };
                let r = x[2 * j] * self.bound;
                let theta = x[2 * j + 1];
                let (ct, st) = (theta.cos(), theta.sin());
                for a in 0..dim {
                    for b in 0..dim {
                        let zx = col_x.get(a, b);
                        let zy = col_y.get(a, b);
                        // d/d(r/Ω) and d/dθ in the normalized coordinates.
                        let dr = (zx * ct + zy * st) * self.bound;
                        let dtheta = (zy * ct - zx * st) * r;
                        let row_re = row0 + 2 * (a * dim + b);
                        jacobian[row_re * n + 2 * j] = scale * dr.re;
                        jacobian[(row_re + 1) * n + 2 * j] = scale * dr.im;
                        jacobian[row_re * n + 2 * j + 1] = scale * dtheta.re;
                        jacobian[(row_re + 1) * n + 2 * j + 1] = scale * dtheta.im;
                    }
                }
            }
        }
        (residual, jacobian)
    }
}

/// Analytic fidelity gradient of a pulse on the nominal system, as
/// (∂Φ/∂ω_x(j), ∂Φ/∂ω_y(j)) pairs.
pub fn fidelity_gradient(
    sys: &SpinSystem,
    pulse: &PulseSequence,
    target: &TargetTransformation,
    mode: GradientMode,
) -> Result<Vec<(f64, f64)>> {
    let member = Member {
        ops: SystemOps::new(sys),
        rf_scale: 1.0,
        weight: 1.0,
    };
    let cart = pulse.samples();
    let (_, grad) = member_fidelity_and_grad(
        &member,
        target.composite(),
        &cart,
        pulse.dt(),
        sys.n_spins(),
        mode,
    );
    Ok(grad)
}

/// Objective adapter: minimize 1 - Φ over interleaved polar variables.
///
/// The amplitude variable is normalized to ω_r/Ω so every coordinate is
/// O(1); raw rad/s amplitudes differ from their gradients by ~10 orders of
/// magnitude, which cripples the quasi-Newton scaling.
struct PolarObjective<'a> {
    members: &'a [Member],
    target: &'a ComplexMatrix,
    dt: f64,
    n_spins: usize,
    mode: GradientMode,
    bound: f64,
}

impl PolarObjective<'_> {
    fn cart(&self, x: &[f64]) -> Vec<(f64, f64)> {
        x.chunks_exact(2)
            .map(|rt| {
                let r = rt[0] * self.bound;
                (r * rt[1].cos(), r * rt[1].sin())
            })
            .collect()
    }

    fn weighted_phi(&self, cart: &[(f64, f64)]) -> f64 {
        if self.members.len() == 1 {
            return member_fidelity(&self.members[0], self.target, cart, self.dt, self.n_spins);
        }
        let values: Vec<f64> = self
            .members
            .par_iter()
            .map(|m| member_fidelity(m, self.target, cart, self.dt, self.n_spins))
            .collect();
        values
            .iter()
            .zip(self.members)
            .map(|(phi, m)| m.weight * phi)
            .sum()
    }
}

impl ObjectiveFunction for PolarObjective<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        1.0 - self.weighted_phi(&self.cart(x))
    }

    fn value_and_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let cart = self.cart(x);
        let per_member: Vec<(f64, Vec<(f64, f64)>)> = if self.members.len() == 1 {
            vec![member_fidelity_and_grad(
                &self.members[0],
                self.target,
                &cart,
                self.dt,
                self.n_spins,
                self.mode,
            )]
        } else {
            self.members
                .par_iter()
                .map(|m| {
                    member_fidelity_and_grad(m, self.target, &cart, self.dt, self.n_spins, self.mode)
                })
                .collect()
        };
        let mut phi = 0.0;
        let mut grad_cart = vec![(0.0, 0.0); cart.len()];
        for (member, (member_phi, member_grad)) in self.members.iter().zip(&per_member) {
            phi += member.weight * member_phi;
            for (acc, g) in grad_cart.iter_mut().zip(member_grad) {
                acc.0 += member.weight * g.0;
                acc.1 += member.weight * g.1;
            }
        }
        // Chain rule into normalized polar coordinates, negated for
        // minimization: ∂/∂(r/Ω) = Ω ∂/∂r.
        let mut grad = vec![0.0; x.len()];
        for j in 0..cart.len() {
            let r = x[2 * j] * self.bound;
            let theta = x[2 * j + 1];
            let (gx, gy) = grad_cart[j];
            grad[2 * j] = -self.bound * (theta.cos() * gx + theta.sin() * gy);
            grad[2 * j + 1] = -(r * (-theta.sin() * gx + theta.cos() * gy));
        }
        (1.0 - phi, grad)
    }
}

fn restart_rng(seed: u64, restart: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(restart.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

/// Random initial point in normalized polar coordinates: near-maximal
/// amplitudes with uniform phases (minimum-time solutions run close to
/// full power).
fn random_start(rng: &mut impl Rng, steps: usize) -> Vec<f64> {
    let mut x = Vec::with_capacity(2 * steps);
    for _ in 0..steps {
        x.push(rng.random_range(0.8..=1.0));
        x.push(rng.random_range(0.0..std::f64::consts::TAU));
    }
    x
}

struct RunOutcome {
    x: Vec<f64>,
    /// Best objective value 1 - Φ reached.
    value: f64,
    iterations: usize,
    /// Objective values after every accepted step.
    history: Vec<f64>,
    hit_target: bool,
    max_bound_violation: f64,
    index: usize,
}

/// Optimize a pulse of `steps` samples of width `dt` toward `target`.
///
/// Restart 0 warm-starts from `warm_start` when supplied; the remaining
/// restarts draw random initial controls. With an ensemble the optimized
/// objective is the weighted mean fidelity over its members. Deterministic
/// for a fixed seed. Non-convergence is reported through the `converged`
/// flag, never as an error.
pub fn optimize_fixed_time(
    sys: &SpinSystem,
    target: &TargetTransformation,
    steps: usize,
    dt: f64,
    config: &OptimizerConfig,
    ensemble: Option<&EnsembleSpec>,
    warm_start: Option<&PulseSequence>,
) -> Result<OptimizationResult> {
    config.validate()?;
    if target.n_spins() != sys.n_spins() {
        return Err(Error::DimensionMismatch {
            left: sys.n_spins(),
            right: target.n_spins(),
        });
    }
    let bound = sys.control_bound();
    let members = build_members(sys, ensemble)?;

    if steps == 0 {
        let pulse = PulseSequence::empty(dt, bound);
        let phi = crate::propagation::fidelity(sys, &pulse, target)?;
        let ensemble_fidelity = ensemble.map(|_| phi);
        return Ok(OptimizationResult {
            converged: phi >= config.phi0,
            fidelity: phi,
            ensemble_fidelity,
            iterations: 0,
            fidelity_history: vec![phi],
            pulse,
            max_bound_violation: 0.0,
        });
    }

    let objective = PolarObjective {
        members: &members,
        target: target.composite(),
        dt,
        n_spins: sys.n_spins(),
        mode: config.gradient_mode,
        bound,
    };

    let n = 2 * steps;
    let mut bounds: Bounds = Vec::with_capacity(n);
    let mut grad_scale = Vec::with_capacity(n);
    for _ in 0..steps {
        bounds.push(Some((0.0, 1.0)));
        bounds.push(None);
        // The stopping tolerance applies to the rad/s-scaled gradient
        // (∂/∂ω_r and ∂/∂θ per unit Ω).
        grad_scale.push(1.0 / bound);
        grad_scale.push(1.0 / bound);
    }
    // Stop a hair above phi0 so the fidelity re-evaluated on the saved pulse
    // cannot round back below the threshold.
    let params = BfgsParams {
        max_iters: config.max_iters,
        grad_tol: config.grad_tol,
        grad_scale,
        target_value: Some((1.0 - config.phi0) - 1e-9),
        ..BfgsParams::new(n)
    };
    let target_value = params.target_value.unwrap();

    let residual_objective = PolarResidual {
        members: &members,
        target: target.composite(),
        dt,
        n_spins: sys.n_spins(),
        bound,
    };

    // One restart: quasi-Newton descent into the high-fidelity basin, then
    // a damped Gauss-Newton refinement, which converges quadratically on
    // this zero-residual least-squares structure where quasi-Newton ascent
    // crawls (the two-timescale dynamics make the control Hessian severely
    // anisotropic).
    let run_one = |x0: Vec<f64>, index: usize| -> RunOutcome {
        let report = minimize_bounded(&objective, x0, &bounds, &params);
        let mut x = report.x;
        let mut value = report.value;
        let mut iterations = report.iterations;
        let mut history = report.history;
        let mut hit_target = report.stop == StopReason::TargetReached;
        if !hit_target {
            let lm_params = LmParams {
                max_iters: LM_MAX_ITERS,
                target_cost: Some(target_value),
                ..LmParams::default()
            };
            let refined = minimize_lm(&residual_objective, x, &bounds, &lm_params);
            iterations += refined.iterations;
            history.extend(refined.history.into_iter().skip(1));
            x = refined.x;
            value = refined.cost;
            hit_target = value <= target_value;
        }
        RunOutcome {
            x,
            value,
            iterations,
            history,
            hit_target,
            max_bound_violation: report.max_bound_violation,
            index,
        }
    };

    let mut outcomes: Vec<RunOutcome> = Vec::new();

    // Warm-started restart runs first; on success the random restarts are
    // skipped entirely, which keeps duration scans cheap.
    if let Some(warm) = warm_start {
        if warm.len() != steps {
            return Err(Error::InvalidPulse(format!(
                "warm start has {} steps, expected {steps}",
                warm.len()
            )));
        }
        let x0: Vec<f64> = to_polar(warm)
            .into_iter()
            .flat_map(|(r, t)| [r / bound, t])
            .collect();
        let outcome = run_one(x0, 0);
        let done = outcome.hit_target;
        outcomes.push(outcome);
        if done {
            return finish(sys, target, ensemble, config, dt, bound, outcomes);
        }
    }

    let first_fresh = if warm_start.is_some() { 1 } else { 0 };
    let fresh: Vec<RunOutcome> = (first_fresh..config.restarts)
        .into_par_iter()
        .map(|index| {
            let mut rng = restart_rng(config.seed, index as u64);
            let x0 = random_start(&mut rng, steps);
            run_one(x0, index)
        })
        .collect();
    outcomes.extend(fresh);

    // Keep only the best run; ties break toward the lowest restart index so
    // the outcome is independent of scheduling.
    outcomes.sort_by(|a, b| {
        b.hit_target
            .cmp(&a.hit_target)
            .then(a.value.total_cmp(&b.value))
            .then(a.index.cmp(&b.index))
    });
    finish(sys, target, ensemble, config, dt, bound, outcomes)
}

fn finish(
    sys: &SpinSystem,
    target: &TargetTransformation,
    ensemble: Option<&EnsembleSpec>,
    config: &OptimizerConfig,
    dt: f64,
    bound: f64,
    outcomes: Vec<RunOutcome>,
) -> Result<OptimizationResult> {
    let max_bound_violation = outcomes
        .iter()
        .map(|o| o.max_bound_violation)
        .fold(f64::NEG_INFINITY, f64::max);
    let best = outcomes.into_iter().next().expect("at least one restart");
    let polar: Vec<(f64, f64)> = best
        .x
        .chunks_exact(2)
        .map(|rt| (rt[0] * bound, rt[1]))
        .collect();
    let pulse = from_polar(dt, bound, &polar)?;

    // Report fidelities re-evaluated on the stored pulse so they agree with
    // the propagation module bit-for-bit.
    let fidelity = crate::propagation::fidelity(sys, &pulse, target)?;
    let ensemble_fidelity = match ensemble {
        None => None,
        Some(spec) => {
            let members = build_members(sys, Some(spec))?;
            let cart = pulse.samples();
            Some(
                members
                    .iter()
                    .map(|m| {
                        m.weight * member_fidelity(m, target.composite(), &cart, dt, sys.n_spins())
                    })
                    .sum(),
            )
        }
    };
    let effective = ensemble_fidelity.unwrap_or(fidelity);
    Ok(OptimizationResult {
        converged: effective >= config.phi0,
        fidelity,
        ensemble_fidelity,
        iterations: best.iterations,
        fidelity_history: best.history.iter().map(|f| 1.0 - f).collect(),
        pulse,
        max_bound_violation,
    })
}

/// Centered moving average with the window truncated at the edges; a
/// constant input is a fixed point.
fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    if window <= 1 || values.len() < 2 {
        return values.to_vec();
    }
    let half = window / 2;
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(values.len() - 1);
            values[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

/// Largest step-to-step amplitude jump max_j |ω_r(j+1) - ω_r(j)| in rad/s.
pub fn max_amplitude_jump(pulse: &PulseSequence) -> f64 {
    let mut worst = 0.0_f64;
    for j in 1..pulse.len() {
        worst = worst.max((pulse.amplitude(j) - pulse.amplitude(j - 1)).abs());
    }
    worst
}

/// Smooth a converged pulse and re-optimize it, repeating until both the
/// fidelity threshold and the amplitude smoothness threshold hold or the
/// round cap is reached. The returned result never reports convergence with
/// a fidelity below `phi0`; if a smoothing round cannot recover the
/// threshold the previous converged pulse is returned instead.
pub fn smooth_and_reoptimize(
    sys: &SpinSystem,
    target: &TargetTransformation,
    result: &OptimizationResult,
    config: &OptimizerConfig,
    ensemble: Option<&EnsembleSpec>,
) -> Result<OptimizationResult> {
    config.validate()?;
    let bound = sys.control_bound();
    let jump_limit = config.smoothness_threshold * bound;
    let mut best = result.clone();

    if config.smoothing_window <= 1 {
        return Ok(best);
    }

    for _ in 0..config.max_smoothing_rounds {
        if best.converged && max_amplitude_jump(&best.pulse) <= jump_limit {
            return Ok(best);
        }
        let cart = best.pulse.samples();
        let xs: Vec<f64> = cart.iter().map(|c| c.0).collect();
        let ys: Vec<f64> = cart.iter().map(|c| c.1).collect();
        let sx = moving_average(&xs, config.smoothing_window);
        let sy = moving_average(&ys, config.smoothing_window);
        let smoothed: Vec<(f64, f64)> = sx
            .iter()
            .zip(&sy)
            .map(|(&wx, &wy)| {
                let r = wx.hypot(wy);
                if r > bound {
                    (wx * bound / r, wy * bound / r)
                } else {
                    (wx, wy)
                }
            })
            .collect();
        let smoothed_pulse = PulseSequence::new(best.pulse.dt(), bound, &smoothed)?;

        // Warm-only re-optimization: a smoothing round should refine the
        // smoothed pulse, not wander off to a fresh random solution.
        let round_config = OptimizerConfig {
            restarts: 1,
            ..config.clone()
        };
        let reoptimized = optimize_fixed_time(
            sys,
            target,
            smoothed_pulse.len(),
            smoothed_pulse.dt(),
            &round_config,
            ensemble,
            Some(&smoothed_pulse),
        )?;
        if !reoptimized.converged {
            break;
        }
        best = reoptimized;
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::SpinAxis;
    use crate::propagation::fidelity;
    use crate::spin::rotation_gate;
    use std::f64::consts::{PI, TAU};

    fn tce() -> SpinSystem {
        SpinSystem::trichloroethylene()
    }

    fn iz_target() -> TargetTransformation {
        TargetTransformation::new(vec![
            ComplexMatrix::identity(2),
            rotation_gate(SpinAxis::Z, PI / 2.0),
        ])
        .unwrap()
    }

    fn random_pulse(sys: &SpinSystem, steps: usize, dt: f64, seed: u64) -> PulseSequence {
        let mut rng = restart_rng(seed, 0);
        let polar: Vec<(f64, f64)> = (0..steps)
            .map(|_| {
                (
                    rng.random_range(0.0..sys.control_bound()),
                    rng.random_range(0.0..TAU),
                )
            })
            .collect();
        from_polar(dt, sys.control_bound(), &polar).unwrap()
    }

    /// Central finite differences of the fidelity, step 1e-3 rad/s.
    ///
    /// Uses the linearity of the trace to difference the perturbed step
    /// unitaries before tracing: [Φ(ω+h) - Φ(ω-h)]/2h =
    /// Re Tr[L_j (U_j(ω+h) - U_j(ω-h)) F_{j-1}]/(2h·2^N), which avoids the
    /// catastrophic cancellation of differencing two O(1) fidelities.
    fn finite_difference_gradient(
        sys: &SpinSystem,
        pulse: &PulseSequence,
        target: &TargetTransformation,
    ) -> Vec<(f64, f64)> {
        let h = 1e-3;
        let cart = pulse.samples();
        let steps = cart.len();
        let dt = pulse.dt();
        let dim = sys.dim() as f64;
        // Loosen the bound so probing ±h around a full-amplitude sample is
        // not rejected; the Hamiltonian itself does not depend on the bound.
        let loose = sys.with_control_bound(sys.control_bound() * 1.01).unwrap();
        let step_u = |wx: f64, wy: f64| {
            crate::propagation::step_propagator(&loose, wx, wy, dt).unwrap()
        };

        let mut forward = Vec::with_capacity(steps);
        let mut f = ComplexMatrix::identity(sys.dim());
        for &(wx, wy) in &cart {
            f = step_u(wx, wy).mul(&f);
            forward.push(f.clone());
        }
        let mut grad = vec![(0.0, 0.0); steps];
        let mut l = target.composite().dagger();
        for j in (0..steps).rev() {
            let prefix = if j == 0 {
                ComplexMatrix::identity(sys.dim())
            } else {
                forward[j - 1].clone()
            };
            let (wx, wy) = cart[j];
            let diff_x = step_u(wx + h, wy).sub(&step_u(wx - h, wy));
            let diff_y = step_u(wx, wy + h).sub(&step_u(wx, wy - h));
            let gx = l.mul(&diff_x).mul(&prefix).trace().re / (2.0 * h * dim);
            let gy = l.mul(&diff_y).mul(&prefix).trace().re / (2.0 * h * dim);
            grad[j] = (gx, gy);
            l = l.mul(&step_u(wx, wy));
        }
        grad
    }

    #[test]
    fn polar_roundtrip_and_conventions() {
        let bound = TAU * 12_500.0;
        let pulse = PulseSequence::new(
            1e-6,
            bound,
            &[(bound, 0.0), (0.0, bound), (0.0, 0.0), (-0.3 * bound, 0.4 * bound)],
        )
        .unwrap();
        let polar = to_polar(&pulse);
        assert!((polar[0].0 - bound).abs() < 1e-9 && polar[0].1.abs() < 1e-12);
        assert!((polar[1].0 - bound).abs() < 1e-9 && (polar[1].1 - PI / 2.0).abs() < 1e-12);
        assert_eq!(polar[2], (0.0, 0.0));

        let back = from_polar(pulse.dt(), bound, &polar).unwrap();
        for j in 0..pulse.len() {
            let (ax, ay) = pulse.sample(j);
            let (bx, by) = back.sample(j);
            assert!((ax - bx).abs() < 1e-12 * bound.max(1.0));
            assert!((ay - by).abs() < 1e-12 * bound.max(1.0));
        }
    }

    #[test]
    fn gradient_empty_pulse() {
        let sys = tce();
        let pulse = PulseSequence::empty(1e-6, sys.control_bound());
        let grad = fidelity_gradient(&sys, &pulse, &iz_target(), GradientMode::Exact).unwrap();
        assert!(grad.is_empty());
    }

    #[test]
    fn exact_gradient_matches_finite_differences() {
        // A coarse grid keeps the finite-difference quotient at step
        // 1e-3 rad/s well above the f64 noise floor: the perturbed step
        // unitaries differ by ~2h·Δt, which must dominate their ~1e-15
        // evaluation error for the quotient to carry 6 digits.
        let sys = tce();
        let target = iz_target();
        let pulse = random_pulse(&sys, 20, 5e-5, 42);
        let exact = fidelity_gradient(&sys, &pulse, &target, GradientMode::Exact).unwrap();
        let fd = finite_difference_gradient(&sys, &pulse, &target);
        let scale = fd
            .iter()
            .flat_map(|g| [g.0.abs(), g.1.abs()])
            .fold(0.0_f64, f64::max);
        for (e, f) in exact.iter().zip(&fd) {
            assert!(
                (e.0 - f.0).abs() <= 1e-6 * scale && (e.1 - f.1).abs() <= 1e-6 * scale,
                "exact {e:?} vs fd {f:?} (scale {scale:.3e})"
            );
        }
    }

    #[test]
    fn first_order_gradient_tracks_exact() {
        // The first-order expression carries an O(Δt·‖H‖) truncation error;
        // with the unscaled-Pauli control coupling a full-power 1 μs step
        // rotates by ~0.16 rad, so tens of percent on individual
        // components is expected while the overall direction must agree.
        let sys = tce();
        let target = iz_target();
        let pulse = random_pulse(&sys, 20, 1e-6, 43);
        let first = fidelity_gradient(&sys, &pulse, &target, GradientMode::FirstOrder).unwrap();
        let exact = fidelity_gradient(&sys, &pulse, &target, GradientMode::Exact).unwrap();
        let scale = exact
            .iter()
            .flat_map(|g| [g.0.abs(), g.1.abs()])
            .fold(0.0_f64, f64::max);
        let mut dot = 0.0;
        let mut nf = 0.0;
        let mut ne = 0.0;
        for (a, b) in first.iter().zip(&exact) {
            assert!((a.0 - b.0).abs() <= 0.6 * scale, "{a:?} vs {b:?}");
            assert!((a.1 - b.1).abs() <= 0.6 * scale, "{a:?} vs {b:?}");
            dot += a.0 * b.0 + a.1 * b.1;
            nf += a.0 * a.0 + a.1 * a.1;
            ne += b.0 * b.0 + b.1 * b.1;
        }
        let cosine = dot / (nf.sqrt() * ne.sqrt());
        assert!(cosine > 0.95, "directional agreement {cosine:.4}");
    }

    #[test]
    fn trivial_identity_target_converges_immediately() {
        let sys = SpinSystem::from_hz(1e8, &[0.0, 0.0], &[0.0; 4], None, 12_500.0).unwrap();
        let target = TargetTransformation::identity(2);
        let config = OptimizerConfig {
            restarts: 1,
            ..OptimizerConfig::default()
        };
        let warm = PulseSequence::new(1e-6, sys.control_bound(), &[(0.0, 0.0)]).unwrap();
        let result =
            optimize_fixed_time(&sys, &target, 1, 1e-6, &config, None, Some(&warm)).unwrap();
        assert!(result.converged);
        assert!((result.fidelity - 1.0).abs() < 1e-9);
        assert_eq!(result.iterations, 0);
    }

    #[test]
    fn optimizes_single_spin_rotation() {
        // A 90-degree x rotation on one on-resonance spin needs roughly a
        // quarter Rabi period; 25 steps at Δt = 1 us leaves slack.
        let sys = SpinSystem::from_hz(1e8, &[0.0], &[0.0], None, 12_500.0).unwrap();
        let target =
            TargetTransformation::new(vec![rotation_gate(SpinAxis::X, PI / 2.0)]).unwrap();
        let config = OptimizerConfig {
            restarts: 2,
            seed: 5,
            ..OptimizerConfig::default()
        };
        let result = optimize_fixed_time(&sys, &target, 25, 1e-6, &config, None, None).unwrap();
        assert!(result.converged, "fidelity {:.6}", result.fidelity);
        assert!(result.fidelity >= 0.9999);
        assert!(result.max_bound_violation <= 0.0);
        // Reported fidelity agrees with a fresh propagation of the pulse.
        let fresh = fidelity(&sys, &result.pulse, &target).unwrap();
        assert!((fresh - result.fidelity).abs() < 1e-12);
    }

    #[test]
    fn deterministic_histories_for_fixed_seed() {
        let sys = SpinSystem::from_hz(1e8, &[0.0], &[0.0], None, 12_500.0).unwrap();
        let target =
            TargetTransformation::new(vec![rotation_gate(SpinAxis::Y, PI / 3.0)]).unwrap();
        let config = OptimizerConfig {
            restarts: 3,
            seed: 1234,
            max_iters: 150,
            ..OptimizerConfig::default()
        };
        let a = optimize_fixed_time(&sys, &target, 15, 1e-6, &config, None, None).unwrap();
        let b = optimize_fixed_time(&sys, &target, 15, 1e-6, &config, None, None).unwrap();
        assert_eq!(a.fidelity_history.len(), b.fidelity_history.len());
        for (x, y) in a.fidelity_history.iter().zip(&b.fidelity_history) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert_eq!(a.fidelity.to_bits(), b.fidelity.to_bits());
    }

    #[test]
    fn monotone_history_and_feasible_iterates() {
        let sys = SpinSystem::from_hz(1e8, &[0.0], &[0.0], None, 12_500.0).unwrap();
        let target =
            TargetTransformation::new(vec![rotation_gate(SpinAxis::X, PI / 2.0)]).unwrap();
        let config = OptimizerConfig {
            restarts: 1,
            seed: 9,
            max_iters: 120,
            ..OptimizerConfig::default()
        };
        let result = optimize_fixed_time(&sys, &target, 22, 1e-6, &config, None, None).unwrap();
        for w in result.fidelity_history.windows(2) {
            assert!(w[1] >= w[0] - 1e-15);
        }
        assert!(result.max_bound_violation <= 0.0);
        for j in 0..result.pulse.len() {
            assert!(result.pulse.amplitude(j) <= sys.control_bound() + 1e-9);
        }
    }

    #[test]
    fn ensemble_objective_is_weighted_mean() {
        let sys = tce();
        let target = iz_target();
        let spec = EnsembleSpec::default();
        let pulse = random_pulse(&sys, 30, 1e-6, 77);
        let members = build_members(&sys, Some(&spec)).unwrap();
        assert_eq!(members.len(), 9);
        let cart = pulse.samples();
        let total: f64 = members
            .iter()
            .map(|m| m.weight * member_fidelity(m, target.composite(), &cart, pulse.dt(), 2))
            .sum();
        let by_hand: f64 = members
            .iter()
            .map(|m| m.weight * member_fidelity(m, target.composite(), &cart, pulse.dt(), 2))
            .sum();
        assert!((total - by_hand).abs() < 1e-12);
        let weights: f64 = members.iter().map(|m| m.weight).sum();
        assert!((weights - 1.0).abs() < 1e-12);
    }

    #[test]
    fn moving_average_fixed_points_and_window_one() {
        let constant = vec![3.5; 8];
        assert_eq!(moving_average(&constant, 5), constant);
        let data = vec![1.0, 5.0, -2.0, 4.0];
        assert_eq!(moving_average(&data, 1), data);
        let smoothed = moving_average(&data, 3);
        assert!((smoothed[1] - (1.0 + 5.0 - 2.0) / 3.0).abs() < 1e-15);
        // Truncated edge windows.
        assert!((smoothed[0] - (1.0 + 5.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn smoothing_window_one_is_a_no_op() {
        let sys = SpinSystem::from_hz(1e8, &[0.0], &[0.0], None, 12_500.0).unwrap();
        let target =
            TargetTransformation::new(vec![rotation_gate(SpinAxis::X, PI / 2.0)]).unwrap();
        let config = OptimizerConfig {
            restarts: 2,
            seed: 5,
            smoothing_window: 1,
            ..OptimizerConfig::default()
        };
        let result = optimize_fixed_time(&sys, &target, 25, 1e-6, &config, None, None).unwrap();
        let smoothed = smooth_and_reoptimize(&sys, &target, &result, &config, None).unwrap();
        assert_eq!(smoothed.pulse, result.pulse);
    }

    #[test]
    fn config_validation() {
        let bad_phi = OptimizerConfig {
            phi0: 0.0,
            ..OptimizerConfig::default()
        };
        assert!(bad_phi.validate().is_err());
        let bad_window = OptimizerConfig {
            smoothing_window: 2,
            ..OptimizerConfig::default()
        };
        assert!(bad_window.validate().is_err());
        let bad_ensemble = EnsembleSpec {
            rf_scale_points: vec![(1.0, 0.5)],
            shift_offset_points: vec![(0.0, 1.0)],
        };
        assert!(bad_ensemble.validate().is_err());
    }
}
