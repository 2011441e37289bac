// Temporary scratch probe; not part of the deliverable.
use spinforge::grape::{optimize_fixed_time, GradientMode, OptimizerConfig};
use spinforge::matrix::{kron, ComplexMatrix, SpinAxis};
use spinforge::propagation::propagate;
use spinforge::spin::{
    rotation_gate, single_spin_subsystem, SpinSystem, TargetTransformation,
};
use std::f64::consts::PI;
use std::time::Instant;

fn main() {
    let sys = SpinSystem::trichloroethylene();
    let rz = rotation_gate(SpinAxis::Z, PI / 2.0);
    let target =
        TargetTransformation::new(vec![ComplexMatrix::identity(2), rz.clone()]).unwrap();

    // 1. Single-spin ramp for Rz(pi/2) on spin 2.
    let sub = single_spin_subsystem(&sys, 1).unwrap();
    let sub_target = TargetTransformation::new(vec![rz.clone()]).unwrap();
    let config = OptimizerConfig {
        seed: 1,
        restarts: 5,
        ..OptimizerConfig::default()
    };
    println!("single-spin ramp for Rz(90) on spin 2:");
    for m in 1..40 {
        let t0 = Instant::now();
        let res = optimize_fixed_time(&sub, &sub_target, m, 1e-6, &config, None, None).unwrap();
        println!(
            "  m = {m:3} phi = {:.6} converged = {} iters = {} ({:.2?})",
            res.fidelity, res.converged, res.iterations, t0.elapsed()
        );
        if res.converged {
            break;
        }
    }

    // 2. Full two-spin optimization at 352 steps.
    for mode in [GradientMode::FirstOrder, GradientMode::Exact] {
    println!("mode {mode:?}");
    for steps in [344usize, 352, 360] {
        let config = OptimizerConfig { gradient_mode: mode, ..config.clone() };
        let t0 = Instant::now();
        let res =
            optimize_fixed_time(&sys, &target, steps, 1e-6, &config, None, None).unwrap();
        println!(
            "two-spin M = {steps}: phi = {:.6} converged = {} iters = {} hist_len = {} elapsed {:.2?}",
            res.fidelity, res.converged, res.iterations, res.fidelity_history.len(), t0.elapsed()
        );
        if res.converged {
            // 3. Factorization deviation with J vs without.
            let no_j =
                SpinSystem::from_hz(1e8, &[11930.18, 11202.80], &[0.0; 4], None, 12_500.0)
                    .unwrap();
            let full = propagate(&sys, &res.pulse).unwrap();
            let split = propagate(&no_j, &res.pulse).unwrap();
            println!(
                "  factorization deviation |U_J - U1xU2|_F = {:.4}",
                full.sub(&split).frobenius_norm()
            );
            let uf = kron(&ComplexMatrix::identity(2), &rz);
            println!(
                "  |U(T)-U_f|_F = {:.4}",
                full.sub(&uf).frobenius_norm()
            );
        }
    }
    }
}
