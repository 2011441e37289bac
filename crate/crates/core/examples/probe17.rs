// Temporary: doubled control-coupling convention, emulated by doubling the
// bound. Expect: single-spin Rz(90) time ~10 us; two-spin boundaries near
// the geodesic floor for both drift directions.
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
    let quick = OptimizerConfig {
        seed: 1,
        restarts: 3,
        max_iters: 600,
        ..OptimizerConfig::default()
    };
    let rz = rotation_gate(SpinAxis::Z, PI / 2.0);
    let t_op = single_spin_min_time(&sys, &rz, 1, 1e-6, &quick).unwrap();
    println!("single-spin Rz(90) on spin 2: {:.0} us", t_op * 1e6);

    for (label, factors) in [
        ("upstream I*Rz", vec![ComplexMatrix::identity(2), rz.clone()]),
        ("downstream Rz*I", vec![rz.clone(), ComplexMatrix::identity(2)]),
    ] {
        let target = TargetTransformation::new(factors).unwrap();
        let mut m = 380usize;
        let res = optimize_fixed_time(&sys, &target, m, 1e-6, &quick, None, None).unwrap();
        println!("{label}: cold M = {m}: phi = {:.7} conv = {}", res.fidelity, res.converged);
        if !res.converged { continue; }
        let mut pulse = res.pulse;
        let warm_cfg = OptimizerConfig { restarts: 1, ..quick.clone() };
        while m > 340 {
            m -= 4;
            let warm = resize(&pulse, m);
            let r = optimize_fixed_time(&sys, &target, m, 1e-6, &warm_cfg, None, Some(&warm)).unwrap();
            if r.converged {
                pulse = r.pulse;
            } else {
                println!("{label}: boundary between {} and {} us (phi {:.6} at {})", m, m + 4, r.fidelity, m);
                break;
            }
            if m <= 344 {
                println!("{label}: converged all the way to {m} us");
                break;
            }
        }
    }
}
