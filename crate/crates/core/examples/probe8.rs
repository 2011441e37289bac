// Temporary: warm-start the J-on problem from the J-off solution.
use spinforge::grape::{optimize_fixed_time, OptimizerConfig};
use spinforge::matrix::{ComplexMatrix, SpinAxis};
use spinforge::propagation::fidelity;
use spinforge::spin::{rotation_gate, SpinSystem, TargetTransformation};
use std::f64::consts::PI;

fn main() {
    let no_j = SpinSystem::from_hz(1e8, &[11930.18, 11202.80], &[0.0; 4], None, 12_500.0).unwrap();
    let with_j = SpinSystem::trichloroethylene();
    let target = TargetTransformation::new(vec![
        ComplexMatrix::identity(2),
        rotation_gate(SpinAxis::Z, PI / 2.0),
    ])
    .unwrap();
    let m = 420usize;
    let config = OptimizerConfig {
        seed: 7,
        restarts: 2,
        max_iters: 4000,
        ..OptimizerConfig::default()
    };
    let base = optimize_fixed_time(&no_j, &target, m, 1e-6, &config, None, None).unwrap();
    println!("J off M = {m}: phi = {:.6} converged = {}", base.fidelity, base.converged);
    println!(
        "  that pulse on the J-on system: phi = {:.6}",
        fidelity(&with_j, &base.pulse, &target).unwrap()
    );
    let config2 = OptimizerConfig { restarts: 1, max_iters: 8000, ..config.clone() };
    let refined =
        optimize_fixed_time(&with_j, &target, m, 1e-6, &config2, None, Some(&base.pulse)).unwrap();
    println!(
        "J on warm-started: phi = {:.6} converged = {} iters = {}",
        refined.fidelity, refined.converged, refined.iterations
    );
}
