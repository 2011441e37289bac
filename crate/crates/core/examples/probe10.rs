// Temporary: emulate the ramp + shrink continuation of the search pipeline.
use spinforge::grape::{optimize_fixed_time, OptimizerConfig};
use spinforge::matrix::{ComplexMatrix, SpinAxis};
use spinforge::propagation::PulseSequence;
use spinforge::spin::{rotation_gate, SpinSystem, TargetTransformation};
use std::f64::consts::{PI, TAU};
use std::time::Instant;

fn pad(pulse: &PulseSequence, steps: usize) -> PulseSequence {
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
    let config = OptimizerConfig {
        seed: 1,
        restarts: 3,
        max_iters: 2000,
        ..OptimizerConfig::default()
    };

    // Ramp upward from the estimate with DT = 20 us, warm-started.
    let mut warm: Option<PulseSequence> = None;
    let mut m = 344usize;
    let mut converged_pulse = None;
    while m <= 600 {
        let t0 = Instant::now();
        let res = optimize_fixed_time(
            &sys,
            &target,
            m,
            1e-6,
            &config,
            None,
            warm.as_ref(),
        )
        .unwrap();
        println!(
            "ramp M = {m}: phi = {:.6} converged = {} iters = {} ({:.0?})",
            res.fidelity, res.converged, res.iterations, t0.elapsed()
        );
        if res.converged {
            converged_pulse = Some(res.pulse);
            break;
        }
        warm = Some(pad(&res.pulse, m + 20));
        m += 20;
    }
    let Some(mut pulse) = converged_pulse else {
        println!("ramp never converged");
        return;
    };

    // Shrink with warm starts, one grid step at a time near the boundary.
    let warm_config = OptimizerConfig { restarts: 1, ..config.clone() };
    let mut m = pulse.len();
    loop {
        m -= 2;
        let shrunk = pad(&pulse, m);
        let t0 = Instant::now();
        let res = optimize_fixed_time(
            &sys,
            &target,
            m,
            1e-6,
            &warm_config,
            None,
            Some(&shrunk),
        )
        .unwrap();
        println!(
            "shrink M = {m}: phi = {:.6} converged = {} iters = {} ({:.0?})",
            res.fidelity, res.converged, res.iterations, t0.elapsed()
        );
        if !res.converged {
            break;
        }
        pulse = res.pulse;
        if m <= 340 {
            break;
        }
    }
}
