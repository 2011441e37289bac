// Temporary: optimize toward a target that is reachable by construction.
use num_complex::Complex64;
use spinforge::grape::{from_polar, optimize_fixed_time, OptimizerConfig};
use spinforge::matrix::{expm_skew, ComplexMatrix};
use spinforge::propagation::fidelity;
use spinforge::spin::{single_spin_effective, SpinSystem, TargetTransformation};

fn main() {
    let sys = SpinSystem::from_hz(1e8, &[11930.18, 11202.80], &[0.0; 4], None, 12_500.0).unwrap();
    let bound = sys.control_bound();
    let m = 360usize;

    // Random reference pulse (deterministic LCG).
    let mut state = 42u64;
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let polar: Vec<(f64, f64)> = (0..m)
        .map(|_| (bound * (0.8 + 0.2 * next()), std::f64::consts::TAU * next()))
        .collect();
    let reference = from_polar(1e-6, bound, &polar).unwrap();

    // Factor its J = 0 propagator into single-spin unitaries.
    let mut u1 = ComplexMatrix::identity(2);
    let mut u2 = ComplexMatrix::identity(2);
    for j in 0..reference.len() {
        let (wx, wy) = reference.sample(j);
        u1 = expm_skew(&single_spin_effective(&sys, 0, wx, wy).unwrap(), 1e-6)
            .unwrap()
            .mul(&u1);
        u2 = expm_skew(&single_spin_effective(&sys, 1, wx, wy).unwrap(), 1e-6)
            .unwrap()
            .mul(&u2);
    }
    // Strip tiny unitarity drift so the target constructor accepts them.
    let fix = |u: &ComplexMatrix| {
        let d = (u.get(0, 0) * u.get(1, 1) - u.get(0, 1) * u.get(1, 0)).norm().sqrt();
        u.scale(Complex64::new(1.0 / d, 0.0))
    };
    let target = TargetTransformation::new(vec![fix(&u1), fix(&u2)]).unwrap();
    println!(
        "fidelity of the reference pulse against its own factorization: {:.9}",
        fidelity(&sys, &reference, &target).unwrap()
    );

    let config = OptimizerConfig {
        seed: 11,
        restarts: 2,
        max_iters: 4000,
        ..OptimizerConfig::default()
    };
    let res = optimize_fixed_time(&sys, &target, m, 1e-6, &config, None, None).unwrap();
    println!(
        "random-start optimization: phi = {:.6} converged = {} iters = {}",
        res.fidelity, res.converged, res.iterations
    );
}
