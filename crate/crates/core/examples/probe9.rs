// Temporary: coupling-scale hypothesis. J entered as rad/s (i.e. j_hz/2pi
// in the current constructor) should reproduce the known minimum times.
use spinforge::grape::{optimize_fixed_time, OptimizerConfig};
use spinforge::matrix::{ComplexMatrix, SpinAxis};
use spinforge::spin::{rotation_gate, SpinSystem, TargetTransformation};
use std::f64::consts::{PI, TAU};
use std::time::Instant;

fn main() {
    let j_eff_hz = 103.49 / TAU;
    let sys = SpinSystem::from_hz(
        1e8,
        &[11930.18, 11202.80],
        &[0.0, j_eff_hz, j_eff_hz, 0.0],
        None,
        12_500.0,
    )
    .unwrap();
    let target = TargetTransformation::new(vec![
        ComplexMatrix::identity(2),
        rotation_gate(SpinAxis::Z, PI / 2.0),
    ])
    .unwrap();
    let config = OptimizerConfig {
        seed: 1,
        restarts: 5,
        ..OptimizerConfig::default()
    };
    for m in [344usize, 348, 350, 352, 356] {
        let t0 = Instant::now();
        let res = optimize_fixed_time(&sys, &target, m, 1e-6, &config, None, None).unwrap();
        println!(
            "M = {m}: phi = {:.6} converged = {} iters = {} ({:.0?})",
            res.fidelity, res.converged, res.iterations, t0.elapsed()
        );
    }
}
