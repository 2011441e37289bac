//! Levenberg-Marquardt refinement for the gate-fidelity objective.
//!
//! The infidelity is exactly a sum of squares: 1 - Φ = ‖U(T) - U_f‖_F²/(2·2^N)
//! for the phase-sensitive trace fidelity, so Gauss-Newton steps on the
//! residual vector r = vec(U(T) - U_f) converge quadratically near a
//! zero-residual optimum where quasi-Newton ascent crawls (the two-timescale
//! structure makes the control-space Hessian severely anisotropic).
//!
//! The normal equations are solved in the dual space: with J the
//! (residual × control) Jacobian, the damped step is
//! p = -Jᵀ (J Jᵀ + λI)⁻¹ r, and J Jᵀ is only as large as the residual
//! dimension (32 per ensemble member), independent of the pulse length.

use crate::bfgs::Bounds;

/// Residual-space objective: a vector function r(x) with Jacobian.
pub(crate) trait ResidualFunction {
    /// Residual dimension.
    fn residual_len(&self) -> usize;
    /// r(x).
    fn residual(&self, x: &[f64]) -> Vec<f64>;
    /// r(x) and the Jacobian as `residual_len()` rows of length `x.len()`,
    /// flattened row-major.
    fn residual_and_jacobian(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>);
}

#[derive(Debug, Clone)]
pub(crate) struct LmParams {
    pub max_iters: usize,
    /// Stop when the sum of squares reaches this value.
    pub target_cost: Option<f64>,
    /// Initial damping.
    pub lambda0: f64,
    pub lambda_shrink: f64,
    pub lambda_grow: f64,
    pub lambda_max: f64,
    /// Stop when an accepted step improves the cost by less than this
    /// relative amount.
    pub relative_tol: f64,
}

impl Default for LmParams {
    fn default() -> Self {
        Self {
            max_iters: 200,
            target_cost: None,
            lambda0: 1e-3,
            lambda_shrink: 0.25,
            lambda_grow: 4.0,
            lambda_max: 1e12,
            relative_tol: 1e-14,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct LmReport {
    pub x: Vec<f64>,
    /// Final sum of squares.
    pub cost: f64,
    pub iterations: usize,
    /// Cost after every accepted step, starting with the initial cost.
    pub history: Vec<f64>,
}

fn project(x: &mut [f64], bounds: &Bounds) {
    for (xi, b) in x.iter_mut().zip(bounds) {
        if let Some((lo, hi)) = b {
            *xi = xi.clamp(*lo, *hi);
        }
    }
}

/// Solve the symmetric positive-definite system a·x = b in place
/// (Cholesky); `a` is dim×dim row-major. Returns false when the
/// factorization breaks down.
fn solve_spd(a: &mut [f64], b: &mut [f64], dim: usize) -> bool {
    // Cholesky a = L Lᵀ.
    for i in 0..dim {
        for j in 0..=i {
            let mut sum = a[i * dim + j];
            for k in 0..j {
                sum -= a[i * dim + k] * a[j * dim + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return false;
                }
                a[i * dim + i] = sum.sqrt();
            } else {
                a[i * dim + j] = sum / a[j * dim + j];
            }
        }
    }
    // Forward then backward substitution.
    for i in 0..dim {
        let mut sum = b[i];
        for k in 0..i {
            sum -= a[i * dim + k] * b[k];
        }
        b[i] = sum / a[i * dim + i];
    }
    for i in (0..dim).rev() {
        let mut sum = b[i];
        for k in (i + 1)..dim {
            sum -= a[k * dim + i] * b[k];
        }
        b[i] = sum / a[i * dim + i];
    }
    true
}

/// Damped Gauss-Newton minimization of ‖r(x)‖² over the box.
///
/// Variables pinned at a bound by the gradient are frozen per iteration
/// (their Jacobian columns are dropped), mirroring the projection strategy
/// of the quasi-Newton stage.
pub(crate) fn minimize_lm(
    objective: &dyn ResidualFunction,
    x0: Vec<f64>,
    bounds: &Bounds,
    params: &LmParams,
) -> LmReport {
    let n = x0.len();
    let m = objective.residual_len();
    let mut x = x0;
    project(&mut x, bounds);

    let (mut r, mut jac) = objective.residual_and_jacobian(&x);
    let mut cost: f64 = r.iter().map(|v| v * v).sum();
    let mut history = vec![cost];
    let mut lambda = params.lambda0;
    let mut iterations = 0;

    for iter in 1..=params.max_iters {
        iterations = iter;
        if let Some(target) = params.target_cost {
            if cost <= target {
                iterations = iter - 1;
                break;
            }
        }

        // Gradient of the cost (half of it): g = Jᵀ r.
        let mut g = vec![0.0_f64; n];
        for row in 0..m {
            let jr = &jac[row * n..(row + 1) * n];
            let rv = r[row];
            if rv == 0.0 {
                continue;
            }
            for (gi, ji) in g.iter_mut().zip(jr) {
                *gi += ji * rv;
            }
        }

        // Freeze variables pressed outward against their bound.
        let frozen: Vec<bool> = x
            .iter()
            .zip(&g)
            .zip(bounds)
            .map(|((&xi, &gi), b)| match b {
                Some((lo, _)) if xi <= *lo && gi > 0.0 => true,
                Some((_, hi)) if xi >= *hi && gi < 0.0 => true,
                _ => false,
            })
            .collect();

        // Dual-space normal matrix A = J_free J_freeᵀ (m×m).
        let mut a = vec![0.0_f64; m * m];
        for p in 0..m {
            let jp = &jac[p * n..(p + 1) * n];
            for q in 0..=p {
                let jq = &jac[q * n..(q + 1) * n];
                let mut acc = 0.0;
                for i in 0..n {
                    if !frozen[i] {
                        acc += jp[i] * jq[i];
                    }
                }
                a[p * m + q] = acc;
                a[q * m + p] = acc;
            }
        }

        let mut improved = false;
        for _ in 0..12 {
            // Solve (A + λI) y = r, then p = -J_freeᵀ y.
            let mut system = a.clone();
            for d in 0..m {
                system[d * m + d] += lambda;
            }
            let mut y = r.clone();
            if !solve_spd(&mut system, &mut y, m) {
                lambda = (lambda * params.lambda_grow).min(params.lambda_max);
                continue;
            }
            let mut trial: Vec<f64> = x.clone();
            for i in 0..n {
                if frozen[i] {
                    continue;
                }
                let mut step = 0.0;
                for row in 0..m {
                    step -= jac[row * n + i] * y[row];
                }
                trial[i] += step;
            }
            project(&mut trial, bounds);
            let r_trial = objective.residual(&trial);
            let cost_trial: f64 = r_trial.iter().map(|v| v * v).sum();
            if cost_trial < cost {
                let relative = (cost - cost_trial) / cost.max(1e-300);
                x = trial;
                cost = cost_trial;
                history.push(cost);
                let refreshed = objective.residual_and_jacobian(&x);
                r = refreshed.0;
                jac = refreshed.1;
                lambda = (lambda * params.lambda_shrink).max(1e-14);
                improved = true;
                if relative < params.relative_tol {
                    return LmReport {
                        x,
                        cost,
                        iterations,
                        history,
                    };
                }
                break;
            }
            lambda = (lambda * params.lambda_grow).min(params.lambda_max);
            if lambda >= params.lambda_max {
                break;
            }
        }
        if !improved {
            break;
        }
    }

    LmReport {
        x,
        cost,
        iterations,
        history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// r(x) = [x0 - 1, 10(x1 - x0²)] — Rosenbrock in least-squares form.
    struct Rosenbrock;

    impl ResidualFunction for Rosenbrock {
        fn residual_len(&self) -> usize {
            2
        }
        fn residual(&self, x: &[f64]) -> Vec<f64> {
            vec![x[0] - 1.0, 10.0 * (x[1] - x[0] * x[0])]
        }
        fn residual_and_jacobian(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
            let r = self.residual(x);
            let jac = vec![1.0, 0.0, -20.0 * x[0], 10.0];
            (r, jac)
        }
    }

    #[test]
    fn solves_rosenbrock_least_squares() {
        let report = minimize_lm(
            &Rosenbrock,
            vec![-1.2, 1.0],
            &vec![None, None],
            &LmParams::default(),
        );
        assert!(report.cost < 1e-18, "cost {:.3e}", report.cost);
        assert!((report.x[0] - 1.0).abs() < 1e-9);
        assert!((report.x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn respects_bounds() {
        let bounds: Bounds = vec![Some((0.0, 0.5)), Some((0.0, 0.5))];
        let report = minimize_lm(
            &Rosenbrock,
            vec![0.2, 0.2],
            &bounds,
            &LmParams::default(),
        );
        assert!(report.x[0] <= 0.5 + 1e-15 && report.x[1] <= 0.5 + 1e-15);
        // Constrained optimum sits on the boundary x = (0.5, 0.25).
        assert!((report.x[0] - 0.5).abs() < 1e-6);
        assert!((report.x[1] - 0.25).abs() < 1e-6);
    }

    #[test]
    fn history_is_monotone() {
        let report = minimize_lm(
            &Rosenbrock,
            vec![3.0, -4.0],
            &vec![None, None],
            &LmParams::default(),
        );
        for w in report.history.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }
}
