// Temporary: low-frequency Fourier phase initializations at M = 352.
use spinforge::grape::{from_polar, optimize_fixed_time, OptimizerConfig};
use spinforge::matrix::{ComplexMatrix, SpinAxis};
use spinforge::spin::{rotation_gate, SpinSystem, TargetTransformation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};

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
    let bound = sys.control_bound();
    let target = TargetTransformation::new(vec![
        ComplexMatrix::identity(2),
        rotation_gate(SpinAxis::Z, PI / 2.0),
    ])
    .unwrap();
    let m = 352usize;
    let config = OptimizerConfig {
        restarts: 1,
        max_iters: 4000,
        phi0: 0.9999,
        ..OptimizerConfig::default()
    };
    let mut best = 0.0_f64;
    for trial in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + trial);
        // Random low-frequency Fourier profiles for amplitude and phase.
        let modes = rng.random_range(2..=6);
        let amps: Vec<(f64, f64, f64)> = (0..modes)
            .map(|_| {
                (
                    rng.random_range(0.5..3.0),             // cycles over the pulse
                    rng.random_range(0.0..TAU),             // mode phase
                    rng.random_range(0.0..1.5),             // weight
                )
            })
            .collect();
        let drift = rng.random_range(-3.0..3.0); // net phase winding, turns
        let polar: Vec<(f64, f64)> = (0..m)
            .map(|j| {
                let t = j as f64 / m as f64;
                let mut theta = TAU * drift * t;
                for &(cycles, phase, weight) in &amps {
                    theta += weight * (TAU * cycles * t + phase).sin();
                }
                let r = bound * rng.random_range(0.93..1.0);
                (r, theta.rem_euclid(TAU))
            })
            .collect();
        let warm = from_polar(1e-6, bound, &polar).unwrap();
        let res =
            optimize_fixed_time(&sys, &target, m, 1e-6, &config, None, Some(&warm)).unwrap();
        best = best.max(res.fidelity);
        println!(
            "trial {trial}: phi = {:.7} iters = {} converged = {}",
            res.fidelity, res.iterations, res.converged
        );
        if res.converged {
            break;
        }
    }
    println!("best = {best:.7}");
}
