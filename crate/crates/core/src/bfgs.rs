//! Bound-constrained BFGS minimizer.
//!
//! Quasi-Newton descent with a dense inverse-Hessian approximation, a
//! backtracking Armijo line search, and box constraints handled by
//! projection: trial points are clamped into the box and gradient
//! components pointing outward at an active bound are zeroed before the
//! search direction is formed.

/// Objective with value and gradient evaluations.
pub(crate) trait ObjectiveFunction {
    fn value(&self, x: &[f64]) -> f64;
    fn value_and_grad(&self, x: &[f64]) -> (f64, Vec<f64>);
}

/// Per-variable box constraint; `None` leaves the variable free.
pub(crate) type Bounds = Vec<Option<(f64, f64)>>;

#[derive(Debug, Clone)]
pub(crate) struct BfgsParams {
    pub max_iters: usize,
    /// Stop when the scaled projected-gradient infinity norm falls below this.
    pub grad_tol: f64,
    /// Per-variable scale applied to the gradient before the tolerance check.
    pub grad_scale: Vec<f64>,
    /// Stop as soon as the objective reaches this value.
    pub target_value: Option<f64>,
    pub armijo_c1: f64,
    pub shrink: f64,
    pub max_backtracks: usize,
    /// Skip the BFGS update when sᵀy falls at or below this.
    pub curvature_eps: f64,
    /// Also skip when sᵀy ≤ relative_curvature_eps·‖s‖‖y‖; an absolute
    /// threshold alone admits updates with enormous 1/sᵀy factors once the
    /// steps get small, which destroys positive definiteness in floating
    /// point.
    pub relative_curvature_eps: f64,
    /// Stop when the objective improves by less than `stagnation_eps` over
    /// this many accepted steps (0 disables the check). Saves the iteration
    /// budget on runs that are provably crawling.
    pub stagnation_window: usize,
    pub stagnation_eps: f64,
    /// Weak-Wolfe curvature constant. When set, the line search brackets a
    /// step satisfying both the Armijo bound and g(x')·s ≥ c2·g(x)·s, which
    /// keeps sᵀy > 0 and the quasi-Newton model well fed; plain Armijo
    /// backtracking accepts steps whose curvature pairs must be discarded.
    pub wolfe_c2: Option<f64>,
}

impl BfgsParams {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            max_iters: 2000,
            grad_tol: 1e-10,
            grad_scale: vec![1.0; n],
            target_value: None,
            armijo_c1: 1e-4,
            shrink: 0.5,
            max_backtracks: 30,
            curvature_eps: 1e-12,
            relative_curvature_eps: 1e-8,
            stagnation_window: 500,
            stagnation_eps: 1e-8,
            wolfe_c2: Some(0.9),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum StopReason {
    TargetReached,
    GradientTolerance,
    LineSearchFailed,
    Stagnation,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub(crate) struct BfgsReport {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// Objective value after every accepted step (index 0 is the start).
    pub history: Vec<f64>,
    pub stop: StopReason,
    /// Largest box violation observed across all iterates (≤ 0 means every
    /// iterate stayed feasible).
    pub max_bound_violation: f64,
}

fn project(x: &mut [f64], bounds: &Bounds) {
    for (xi, b) in x.iter_mut().zip(bounds) {
        if let Some((lo, hi)) = b {
            *xi = xi.clamp(*lo, *hi);
        }
    }
}

fn bound_violation(x: &[f64], bounds: &Bounds) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for (xi, b) in x.iter().zip(bounds) {
        match b {
            Some((lo, hi)) => worst = worst.max(lo - xi).max(xi - hi),
            None => worst = worst.max(f64::NEG_INFINITY),
        }
    }
    if worst == f64::NEG_INFINITY {
        0.0
    } else {
        worst
    }
}

/// Zero the components of `g` that point out of the box at active bounds.
fn effective_gradient(x: &[f64], g: &[f64], bounds: &Bounds) -> Vec<f64> {
    x.iter()
        .zip(g)
        .zip(bounds)
        .map(|((&xi, &gi), b)| match b {
            Some((lo, _)) if xi <= *lo && gi > 0.0 => 0.0,
            Some((_, hi)) if xi >= *hi && gi < 0.0 => 0.0,
            _ => gi,
        })
        .collect()
}

pub(crate) fn minimize_bounded(
    objective: &dyn ObjectiveFunction,
    x0: Vec<f64>,
    bounds: &Bounds,
    params: &BfgsParams,
) -> BfgsReport {
    let n = x0.len();
    assert_eq!(bounds.len(), n, "bounds length mismatch");
    assert_eq!(params.grad_scale.len(), n, "gradient scale length mismatch");

    let mut x = x0;
    project(&mut x, bounds);
    let mut max_violation = bound_violation(&x, bounds);
    let _ = &max_violation;

    let (mut f, mut g) = objective.value_and_grad(&x);
    let mut history = vec![f];

    if let Some(target) = params.target_value {
        if f <= target {
            return BfgsReport {
                x,
                value: f,
                iterations: 0,
                history,
                stop: StopReason::TargetReached,
                max_bound_violation: max_violation,
            };
        }
    }
    if n == 0 {
        return BfgsReport {
            x,
            value: f,
            iterations: 0,
            history,
            stop: StopReason::GradientTolerance,
            max_bound_violation: max_violation,
        };
    }

    // Inverse Hessian approximation, initialized to I/‖g0‖. The scale is
    // replaced by the Shanno-Phua estimate sᵀy/yᵀy at the first update.
    let g0_norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    let init_scale = if g0_norm > 0.0 { 1.0 / g0_norm } else { 1.0 };
    let mut h_inv = vec![0.0_f64; n * n];
    for i in 0..n {
        h_inv[i * n + i] = init_scale;
    }
    let mut first_update_done = false;

    let mut stop = StopReason::MaxIterations;
    let mut iterations = 0;

    for iter in 1..=params.max_iters {
        iterations = iter;
        let g_eff = effective_gradient(&x, &g, bounds);

        let scaled_norm = g_eff
            .iter()
            .zip(&params.grad_scale)
            .map(|(gi, s)| (gi * s).abs())
            .fold(0.0_f64, f64::max);
        if scaled_norm <= params.grad_tol {
            stop = StopReason::GradientTolerance;
            iterations = iter - 1;
            break;
        }

        // Variables pressed against a bound by the gradient are frozen for
        // this iteration; the quasi-Newton model acts on the free subspace
        // only (two-metric projection). Without this, off-diagonal inverse
        // Hessian entries leak descent into bound-crossing components and
        // the projected step can point uphill.
        let active: Vec<bool> = x
            .iter()
            .zip(&g)
            .zip(bounds)
            .map(|((&xi, &gi), b)| match b {
                Some((lo, _)) if xi <= *lo && gi > 0.0 => true,
                Some((_, hi)) if xi >= *hi && gi < 0.0 => true,
                _ => false,
            })
            .collect();

        // Quasi-Newton step first; if its line search fails, reset the
        // model and retry once along the projected steepest descent before
        // giving up.
        let mut accepted: Option<(Vec<f64>, f64, Option<Vec<f64>>)> = None;
        for attempt in 0..2 {
            let mut direction = vec![0.0_f64; n];
            if attempt == 0 {
                for i in 0..n {
                    if active[i] {
                        continue;
                    }
                    let row = &h_inv[i * n..(i + 1) * n];
                    let mut acc = 0.0;
                    for j in 0..n {
                        acc += row[j] * g_eff[j];
                    }
                    direction[i] = -acc;
                }
                let slope: f64 = direction.iter().zip(&g_eff).map(|(d, g)| d * g).sum();
                if slope >= 0.0 {
                    continue;
                }
            } else {
                for i in 0..n {
                    for j in 0..n {
                        h_inv[i * n + j] = if i == j { init_scale } else { 0.0 };
                    }
                }
                for (d, gi) in direction.iter_mut().zip(&g_eff) {
                    *d = -gi * init_scale;
                }
            }

            let trial_at = |alpha: f64| -> (Vec<f64>, Vec<f64>, f64) {
                let mut trial: Vec<f64> = x
                    .iter()
                    .zip(&direction)
                    .map(|(xi, di)| xi + alpha * di)
                    .collect();
                project(&mut trial, bounds);
                let step: Vec<f64> = trial.iter().zip(&x).map(|(t, xi)| t - xi).collect();
                let slope: f64 = step.iter().zip(&g).map(|(s, gi)| s * gi).sum();
                (trial, step, slope)
            };

            if let Some(c2) = params.wolfe_c2 {
                // Weak-Wolfe bracketing: shrink on Armijo failure, grow on
                // curvature failure. Falls back to the best
                // Armijo-satisfying point when the bracket collapses.
                let mut lo = 0.0_f64;
                let mut hi = f64::INFINITY;
                let mut alpha = 1.0_f64;
                let mut fallback: Option<(Vec<f64>, f64, Vec<f64>)> = None;
                for _ in 0..=params.max_backtracks {
                    let (trial, step, slope) = trial_at(alpha);
                    if step.iter().all(|s| *s == 0.0) || slope >= 0.0 {
                        hi = alpha;
                        alpha = 0.5 * (lo + hi);
                        continue;
                    }
                    let (f_trial, g_trial) = objective.value_and_grad(&trial);
                    if f_trial > f + params.armijo_c1 * slope {
                        hi = alpha;
                    } else {
                        let curvature: f64 =
                            g_trial.iter().zip(&step).map(|(gi, s)| gi * s).sum();
                        if fallback.as_ref().is_none_or(|(_, bf, _)| f_trial < *bf) {
                            fallback = Some((trial.clone(), f_trial, g_trial.clone()));
                        }
                        if curvature < c2 * slope {
                            lo = alpha;
                        } else {
                            accepted = Some((trial, f_trial, Some(g_trial)));
                            break;
                        }
                    }
                    alpha = if hi.is_finite() {
                        0.5 * (lo + hi)
                    } else {
                        2.0 * alpha
                    };
                }
                if accepted.is_none() {
                    if let Some((trial, f_trial, g_trial)) = fallback {
                        accepted = Some((trial, f_trial, Some(g_trial)));
                    }
                }
            } else {
                // Plain Armijo backtracking.
                let mut alpha = 1.0_f64;
                for _ in 0..=params.max_backtracks {
                    let (trial, step, slope) = trial_at(alpha);
                    if step.iter().all(|s| *s == 0.0) || slope >= 0.0 {
                        alpha *= params.shrink;
                        continue;
                    }
                    let f_trial = objective.value(&trial);
                    if f_trial <= f + params.armijo_c1 * slope {
                        accepted = Some((trial, f_trial, None));
                        break;
                    }
                    alpha *= params.shrink;
                }
            }
            if accepted.is_some() {
                break;
            }
        }

        let Some((x_new, f_candidate, g_candidate)) = accepted else {
            stop = StopReason::LineSearchFailed;
            iterations = iter - 1;
            break;
        };

        max_violation = max_violation.max(bound_violation(&x_new, bounds));
        let (f_new, g_new) = match g_candidate {
            Some(g_trial) => (f_candidate, g_trial),
            None => objective.value_and_grad(&x_new),
        };
        history.push(f_new);

        // BFGS inverse update. The update is skipped unless the curvature
        // sᵀy clears both an absolute floor and a scale-relative one.
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let s_norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if sy > params.curvature_eps && sy > params.relative_curvature_eps * s_norm * y_norm {
            if !first_update_done {
                // Shanno-Phua: rescale the initial model to the curvature
                // actually observed along the first step.
                let yy: f64 = y.iter().map(|v| v * v).sum();
                if yy > 0.0 {
                    let scale = sy / yy;
                    for i in 0..n {
                        for j in 0..n {
                            h_inv[i * n + j] = if i == j { scale } else { 0.0 };
                        }
                    }
                }
                first_update_done = true;
            }
            let rho = 1.0 / sy;
            let mut hy = vec![0.0_f64; n];
            for i in 0..n {
                let row = &h_inv[i * n..(i + 1) * n];
                let mut acc = 0.0;
                for j in 0..n {
                    acc += row[j] * y[j];
                }
                hy[i] = acc;
            }
            let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
            let coefficient = rho * (1.0 + rho * yhy);
            for i in 0..n {
                for j in 0..n {
                    h_inv[i * n + j] +=
                        coefficient * s[i] * s[j] - rho * (s[i] * hy[j] + hy[i] * s[j]);
                }
            }
        }

        x = x_new;
        f = f_new;
        g = g_new;

        if let Some(target) = params.target_value {
            if f <= target {
                stop = StopReason::TargetReached;
                break;
            }
        }
        if params.stagnation_window > 0 && history.len() > params.stagnation_window {
            let before = history[history.len() - 1 - params.stagnation_window];
            if before - f < params.stagnation_eps {
                stop = StopReason::Stagnation;
                break;
            }
        }
    }

    BfgsReport {
        x,
        value: f,
        iterations,
        history,
        stop,
        max_bound_violation: max_violation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic {
        center: Vec<f64>,
    }

    impl ObjectiveFunction for Quadratic {
        fn value(&self, x: &[f64]) -> f64 {
            x.iter()
                .zip(&self.center)
                .map(|(xi, c)| (xi - c) * (xi - c))
                .sum()
        }
        fn value_and_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
            let g = x
                .iter()
                .zip(&self.center)
                .map(|(xi, c)| 2.0 * (xi - c))
                .collect();
            (self.value(x), g)
        }
    }

    struct Rosenbrock;

    impl ObjectiveFunction for Rosenbrock {
        fn value(&self, x: &[f64]) -> f64 {
            (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
        }
        fn value_and_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
            let g = vec![
                -400.0 * (x[1] - x[0] * x[0]) * x[0] - 2.0 * (1.0 - x[0]),
                200.0 * (x[1] - x[0] * x[0]),
            ];
            (self.value(x), g)
        }
    }

    fn free_bounds(n: usize) -> Bounds {
        vec![None; n]
    }

    #[test]
    fn minimizes_unconstrained_quadratic() {
        let objective = Quadratic {
            center: vec![1.0, -2.0, 3.0],
        };
        let params = BfgsParams::new(3);
        let report = minimize_bounded(&objective, vec![0.0; 3], &free_bounds(3), &params);
        assert!(report.value < 1e-16, "value {:.3e}", report.value);
        for (xi, c) in report.x.iter().zip(&objective.center) {
            assert!((xi - c).abs() < 1e-7);
        }
    }

    #[test]
    fn respects_box_constraints() {
        // Unconstrained minimum at (2, 2) lies outside the unit box.
        let objective = Quadratic {
            center: vec![2.0, 2.0],
        };
        let bounds: Bounds = vec![Some((0.0, 1.0)), Some((0.0, 1.0))];
        let params = BfgsParams::new(2);
        let report = minimize_bounded(&objective, vec![0.5, 0.5], &bounds, &params);
        assert!(report.max_bound_violation <= 0.0);
        assert!((report.x[0] - 1.0).abs() < 1e-9);
        assert!((report.x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn solves_rosenbrock() {
        let params = BfgsParams {
            grad_tol: 1e-12,
            ..BfgsParams::new(2)
        };
        let report = minimize_bounded(&Rosenbrock, vec![-1.2, 1.0], &free_bounds(2), &params);
        assert!(
            (report.x[0] - 1.0).abs() < 1e-5 && (report.x[1] - 1.0).abs() < 1e-5,
            "x = {:?}",
            report.x
        );
    }

    #[test]
    fn history_is_monotone_nonincreasing() {
        let params = BfgsParams::new(2);
        let report = minimize_bounded(&Rosenbrock, vec![-0.5, 2.0], &free_bounds(2), &params);
        for w in report.history.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
    }

    #[test]
    fn stops_at_target_value() {
        let objective = Quadratic {
            center: vec![0.0; 4],
        };
        let params = BfgsParams {
            target_value: Some(1e-3),
            ..BfgsParams::new(4)
        };
        let report = minimize_bounded(&objective, vec![5.0; 4], &free_bounds(4), &params);
        assert_eq!(report.stop, StopReason::TargetReached);
        assert!(report.value <= 1e-3);
    }
}
