// Temporary: first-order-vs-exact deviation scaling with dt.
use spinforge::grape::{fidelity_gradient, from_polar, GradientMode};
use spinforge::matrix::{ComplexMatrix, SpinAxis};
use spinforge::spin::{rotation_gate, SpinSystem, TargetTransformation};
use std::f64::consts::{PI, TAU};

fn main() {
    let sys = SpinSystem::trichloroethylene();
    let bound = sys.control_bound();
    let target = TargetTransformation::new(vec![
        ComplexMatrix::identity(2),
        rotation_gate(SpinAxis::Z, PI / 2.0),
    ])
    .unwrap();
    // Fixed controls, varying dt.
    let mut state = 43u64;
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let polar: Vec<(f64, f64)> = (0..20).map(|_| (bound * next(), TAU * next())).collect();
    for dt in [1e-6, 1e-7, 1e-8] {
        let pulse = from_polar(dt, bound, &polar).unwrap();
        let first = fidelity_gradient(&sys, &pulse, &target, GradientMode::FirstOrder).unwrap();
        let exact = fidelity_gradient(&sys, &pulse, &target, GradientMode::Exact).unwrap();
        let scale = exact.iter().flat_map(|g| [g.0.abs(), g.1.abs()]).fold(0.0_f64, f64::max);
        let dev = first
            .iter()
            .zip(&exact)
            .flat_map(|(a, b)| [(a.0 - b.0).abs(), (a.1 - b.1).abs()])
            .fold(0.0_f64, f64::max);
        println!("dt = {dt:.0e}: max dev = {:.4e}, scale = {:.4e}, rel = {:.4}", dev, scale, dev / scale);
        println!("   first[0] = {:?}  exact[0] = {:?}", first[0], exact[0]);
    }
}
