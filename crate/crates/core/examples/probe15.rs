// Temporary: BFGS/LM budget split at M = 360, J-free.
use spinforge::grape::{optimize_fixed_time, OptimizerConfig};
use spinforge::matrix::{ComplexMatrix, SpinAxis};
use spinforge::spin::{rotation_gate, SpinSystem, TargetTransformation};
use std::f64::consts::PI;
use std::time::Instant;

fn main() {
    let sys = SpinSystem::from_hz(1e8, &[11930.18, 11202.80], &[0.0; 4], None, 12_500.0).unwrap();
    let target = TargetTransformation::new(vec![
        ComplexMatrix::identity(2),
        rotation_gate(SpinAxis::Z, PI / 2.0),
    ])
    .unwrap();
    for (label, bfgs_iters, seed) in [
        ("bfgs2000+lm", 2000usize, 1u64),
        ("bfgs300+lm", 300, 2),
        ("bfgs50+lm", 50, 3),
    ] {
        let config = OptimizerConfig {
            seed,
            restarts: 4,
            max_iters: bfgs_iters,
            ..OptimizerConfig::default()
        };
        let t0 = Instant::now();
        let res = optimize_fixed_time(&sys, &target, 360, 1e-6, &config, None, None).unwrap();
        println!(
            "{label}: phi = {:.7} converged = {} iters = {} ({:.0?})",
            res.fidelity, res.converged, res.iterations, t0.elapsed()
        );
    }
}
