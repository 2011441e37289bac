// Temporary: does the initialization amplitude window cause the stall?
use spinforge::grape::{from_polar, optimize_fixed_time, OptimizerConfig};
use spinforge::matrix::{ComplexMatrix, SpinAxis};
use spinforge::spin::{rotation_gate, SpinSystem, TargetTransformation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};

fn main() {
    let sys = SpinSystem::trichloroethylene();
    let bound = sys.control_bound();
    let target = TargetTransformation::new(vec![
        ComplexMatrix::identity(2),
        rotation_gate(SpinAxis::Z, PI / 2.0),
    ])
    .unwrap();
    let config = OptimizerConfig {
        seed: 7,
        restarts: 1,
        max_iters: 4000,
        ..OptimizerConfig::default()
    };
    for (lo, hi) in [(0.8, 1.0), (0.3, 0.7), (0.05, 0.3)] {
        for m in [360usize, 600] {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let polar: Vec<(f64, f64)> = (0..m)
                .map(|_| (bound * rng.random_range(lo..hi), rng.random_range(0.0..TAU)))
                .collect();
            let warm = from_polar(1e-6, bound, &polar).unwrap();
            let res =
                optimize_fixed_time(&sys, &target, m, 1e-6, &config, None, Some(&warm)).unwrap();
            println!(
                "init r in [{lo},{hi}] M = {m}: phi = {:.6} converged = {} iters = {}",
                res.fidelity, res.converged, res.iterations
            );
        }
    }
}
