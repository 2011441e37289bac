// Temporary: reachability with J coupling on, generous durations.
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
    for (m, seed) in [(420usize, 1u64), (600, 2), (1000, 3)] {
        let config = OptimizerConfig {
            seed,
            restarts: 4,
            max_iters: 3000,
            ..OptimizerConfig::default()
        };
        let t0 = Instant::now();
        let res = optimize_fixed_time(&sys, &target, m, 1e-6, &config, None, None).unwrap();
        println!(
            "J on, M = {m}: phi = {:.6} converged = {} iters = {} ({:.0?})",
            res.fidelity, res.converged, res.iterations, t0.elapsed()
        );
    }
}
