// Temporary: J-free feasibility boundary via shrink and pad chains.
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
    let target = TargetTransformation::new(vec![
        ComplexMatrix::identity(2),
        rotation_gate(SpinAxis::Z, PI / 2.0),
    ])
    .unwrap();
    let cold = OptimizerConfig {
        seed: 1,
        restarts: 3,
        max_iters: 3000,
        ..OptimizerConfig::default()
    };
    let res = optimize_fixed_time(&sys, &target, 420, 1e-6, &cold, None, None).unwrap();
    println!("cold M = 420: phi = {:.7} converged = {}", res.fidelity, res.converged);
    let mut pulse = res.pulse;
    let warm_cfg = OptimizerConfig { restarts: 1, max_iters: 3000, ..cold.clone() };
    let mut m = 420usize;
    let mut last_converged = if res.converged { Some(m) } else { None };
    while m > 340 {
        m -= 2;
        let warm = resize(&pulse, m);
        let res = optimize_fixed_time(&sys, &target, m, 1e-6, &warm_cfg, None, Some(&warm)).unwrap();
        println!("M = {m}: phi = {:.7} converged = {} iters = {}", res.fidelity, res.converged, res.iterations);
        if res.converged {
            last_converged = Some(m);
            pulse = res.pulse;
        } else {
            // Try once more from the best current pulse with fresh noise.
            let warm2 = resize(&pulse, m);
            let res2 = optimize_fixed_time(
                &sys, &target, m, 1e-6,
                &OptimizerConfig { seed: 77, ..warm_cfg.clone() }, None, Some(&warm2),
            ).unwrap();
            println!("  retry: phi = {:.7} converged = {}", res2.fidelity, res2.converged);
            if res2.converged {
                last_converged = Some(m);
                pulse = res2.pulse;
            } else {
                break;
            }
        }
    }
    println!("smallest converged M = {last_converged:?}");
}
