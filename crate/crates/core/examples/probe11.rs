// Temporary: best-achievable fidelity vs duration under the rad/s coupling
// reading, via a warm continuation chain shrinking from M = 500.
use spinforge::grape::{optimize_fixed_time, OptimizerConfig};
use spinforge::matrix::{ComplexMatrix, SpinAxis};
use spinforge::propagation::PulseSequence;
use spinforge::spin::{rotation_gate, SpinSystem, TargetTransformation};
use std::f64::consts::{PI, TAU};

fn resize(pulse: &PulseSequence, steps: usize) -> PulseSequence {
    let mut samples = pulse.samples();
    let last = *samples.last().unwrap_or(&(0.0, 0.0));
    while samples.len() < steps {
        samples.push(last);
    }
    samples.truncate(steps);
    PulseSequence::new(pulse.dt(), pulse.bound(), &samples).unwrap()
}

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
    // High threshold so the optimizer never stops early at 0.9999.
    let cold = OptimizerConfig {
        seed: 1,
        restarts: 3,
        max_iters: 2500,
        phi0: 0.999999,
        ..OptimizerConfig::default()
    };
    let res = optimize_fixed_time(&sys, &target, 500, 1e-6, &cold, None, None).unwrap();
    println!("M = 500 cold: phi = {:.7}", res.fidelity);
    let mut pulse = res.pulse;
    let warm = OptimizerConfig { restarts: 1, max_iters: 1500, ..cold.clone() };
    let mut m = 500usize;
    while m > 336 {
        m -= 4;
        let seeded = resize(&pulse, m);
        let res = optimize_fixed_time(&sys, &target, m, 1e-6, &warm, None, Some(&seeded)).unwrap();
        println!("M = {m}: phi = {:.7} iters = {}", res.fidelity, res.iterations);
        pulse = res.pulse;
    }
}
