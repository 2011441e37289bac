// Temporary: upstream boundary with doubled coupling; plus single-spin
// time with a stronger search.
use spinforge::grape::{optimize_fixed_time, OptimizerConfig};
use spinforge::matrix::{ComplexMatrix, SpinAxis};
use spinforge::mintime::single_spin_min_time;
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
    let sys = SpinSystem::from_hz(1e8, &[11930.18, 11202.80], &[0.0; 4], None, 25_000.0).unwrap();
    let strong = OptimizerConfig {
        seed: 1,
        restarts: 5,
        max_iters: 1200,
        ..OptimizerConfig::default()
    };
    let rz = rotation_gate(SpinAxis::Z, PI / 2.0);
    let t_op = single_spin_min_time(&sys, &rz, 1, 1e-6, &strong).unwrap();
    println!("single-spin Rz(90) on spin 2 (strong search): {:.0} us", t_op * 1e6);

    // Upstream target: relative motion must fight the drift.
    let target = TargetTransformation::new(vec![ComplexMatrix::identity(2), rz]).unwrap();
    let quick = OptimizerConfig { seed: 3, restarts: 3, max_iters: 800, ..OptimizerConfig::default() };
    let mut m = 420usize;
    let res = optimize_fixed_time(&sys, &target, m, 1e-6, &quick, None, None).unwrap();
    println!("upstream cold M = {m}: phi = {:.7} conv = {}", res.fidelity, res.converged);
    let mut pulse = if res.converged { res.pulse } else { return };
    let warm_cfg = OptimizerConfig { restarts: 1, max_iters: 800, ..quick.clone() };
    while m > 340 {
        m -= 2;
        let warm = resize(&pulse, m);
        let r = optimize_fixed_time(&sys, &target, m, 1e-6, &warm_cfg, None, Some(&warm)).unwrap();
        if r.converged {
            pulse = r.pulse;
        } else {
            // one retry with a different perturbation seed
            let r2 = optimize_fixed_time(
                &sys, &target, m, 1e-6,
                &OptimizerConfig { seed: 91, ..warm_cfg.clone() }, None, Some(&resize(&pulse, m)),
            ).unwrap();
            if r2.converged { pulse = r2.pulse; continue; }
            println!("upstream boundary: fails at {} us (phi {:.6}), last ok {}", m, r.fidelity.max(r2.fidelity), m + 2);
            break;
        }
        if m <= 344 {
            println!("upstream: converged down to {m} us");
            break;
        }
    }
}
