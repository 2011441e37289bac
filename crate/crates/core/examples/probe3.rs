// Temporary: reachability at long durations.
use spinforge::grape::{optimize_fixed_time, OptimizerConfig};
use spinforge::matrix::{ComplexMatrix, SpinAxis};
use spinforge::spin::{rotation_gate, SpinSystem, TargetTransformation};
use std::f64::consts::PI;
use std::time::Instant;

fn main() {
    let sys = SpinSystem::trichloroethylene();
    let target = TargetTransformation::new(vec![
        ComplexMatrix::identity(2),
        rotation_gate(SpinAxis::Z, PI / 2.0),
    ])
    .unwrap();
    for (steps, iters) in [(600usize, 3000usize), (360, 8000)] {
        let config = OptimizerConfig {
            seed: 3,
            restarts: 1,
            max_iters: iters, grad_tol: 0.0,
            ..OptimizerConfig::default()
        };
        let t0 = Instant::now();
        let res = optimize_fixed_time(&sys, &target, steps, 1e-6, &config, None, None).unwrap();
        println!(
            "M = {steps} iters_cap = {iters}: phi = {:.6} converged = {} iters = {} ({:.1?})",
            res.fidelity, res.converged, res.iterations, t0.elapsed()
        );
    }
}
