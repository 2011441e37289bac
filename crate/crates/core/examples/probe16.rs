// Temporary: downstream-vs-upstream boundary comparison (J = 0).
use spinforge::grape::{optimize_fixed_time, OptimizerConfig};
use spinforge::matrix::{ComplexMatrix, SpinAxis};
use spinforge::propagation::PulseSequence;
use spinforge::spin::{rotation_gate, SpinSystem, TargetTransformation};
use std::f64::consts::PI;

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
    let sys = SpinSystem::from_hz(1e8, &[11930.18, 11202.80], &[0.0; 4], None, 12_500.0).unwrap();
    // Rz(90) on spin 1, identity on spin 2: relative target rides the
    // natural drift direction.
    let target = TargetTransformation::new(vec![
        rotation_gate(SpinAxis::Z, PI / 2.0),
        ComplexMatrix::identity(2),
    ])
    .unwrap();
    let cold = OptimizerConfig {
        seed: 1,
        restarts: 3,
        max_iters: 800,
        ..OptimizerConfig::default()
    };
    let mut m = 400usize;
    let res = optimize_fixed_time(&sys, &target, m, 1e-6, &cold, None, None).unwrap();
    println!("cold M = {m}: phi = {:.7} converged = {}", res.fidelity, res.converged);
    if !res.converged {
        return;
    }
    let mut pulse = res.pulse;
    let warm_cfg = OptimizerConfig { restarts: 1, max_iters: 800, ..cold.clone() };
    while m > 340 {
        m -= 4;
        let warm = resize(&pulse, m);
        let res = optimize_fixed_time(&sys, &target, m, 1e-6, &warm_cfg, None, Some(&warm)).unwrap();
        println!("M = {m}: phi = {:.7} converged = {}", res.fidelity, res.converged);
        if res.converged {
            pulse = res.pulse;
        } else {
            break;
        }
    }
}
