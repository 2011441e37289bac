// Temporary: stall-shape diagnostics on the J-free problem at M = 420.
use spinforge::grape::{from_polar, optimize_fixed_time, GradientMode, OptimizerConfig};
use spinforge::matrix::{ComplexMatrix, SpinAxis};
use spinforge::spin::{rotation_gate, SpinSystem, TargetTransformation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};

fn main() {
    let sys = SpinSystem::from_hz(1e8, &[11930.18, 11202.80], &[0.0; 4], None, 12_500.0).unwrap();
    let bound = sys.control_bound();
    let target = TargetTransformation::new(vec![
        ComplexMatrix::identity(2),
        rotation_gate(SpinAxis::Z, PI / 2.0),
    ])
    .unwrap();
    let m = 420usize;

    let report = |label: &str, res: &spinforge::grape::OptimizationResult| {
        let h = &res.fidelity_history;
        let tail = h.len().saturating_sub(500);
        let slope = if h.len() > 501 {
            (h[h.len() - 1] - h[tail]) / 500.0
        } else {
            f64::NAN
        };
        println!(
            "{label}: phi = {:.7} iters = {} tail_slope = {:.2e}/it",
            res.fidelity, res.iterations, slope
        );
    };

    // (a) cold, default init, exact gradient, 8000 iters
    let config = OptimizerConfig {
        seed: 1,
        restarts: 1,
        max_iters: 8000,
        gradient_mode: GradientMode::Exact,
        ..OptimizerConfig::default()
    };
    let res = optimize_fixed_time(&sys, &target, m, 1e-6, &config, None, None).unwrap();
    report("cold exact 8000", &res);

    // (b) interior-amplitude init
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let polar: Vec<(f64, f64)> = (0..m)
        .map(|_| (bound * rng.random_range(0.5..0.8), rng.random_range(0.0..TAU)))
        .collect();
    let warm = from_polar(1e-6, bound, &polar).unwrap();
    let res = optimize_fixed_time(&sys, &target, m, 1e-6, &config, None, Some(&warm)).unwrap();
    report("interior init", &res);
}
