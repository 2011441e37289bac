// Temporary: three-way gradient comparison at tiny dt.
use spinforge::grape::{fidelity_gradient, from_polar, GradientMode};
use spinforge::matrix::{ComplexMatrix, SpinAxis};
use spinforge::propagation::step_propagator;
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
    let mut state = 43u64;
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let m = 6usize;
    let polar: Vec<(f64, f64)> = (0..m).map(|_| (bound * next(), TAU * next())).collect();
    let dt = 1e-8;
    let pulse = from_polar(dt, bound, &polar).unwrap();
    let first = fidelity_gradient(&sys, &pulse, &target, GradientMode::FirstOrder).unwrap();
    let exact = fidelity_gradient(&sys, &pulse, &target, GradientMode::Exact).unwrap();

    // Stable FD: difference the step unitaries (loosened bound for probing).
    let loose = sys.with_control_bound(bound * 1.01).unwrap();
    let h = 1e-3;
    let cart = pulse.samples();
    let mut forward = Vec::new();
    let mut f = ComplexMatrix::identity(4);
    for &(wx, wy) in &cart {
        f = step_propagator(&loose, wx, wy, dt).unwrap().mul(&f);
        forward.push(f.clone());
    }
    let mut l = target.composite().dagger();
    let mut fd = vec![(0.0, 0.0); m];
    for j in (0..m).rev() {
        let prefix = if j == 0 { ComplexMatrix::identity(4) } else { forward[j - 1].clone() };
        let (wx, wy) = cart[j];
        let dx = step_propagator(&loose, wx + h, wy, dt).unwrap()
            .sub(&step_propagator(&loose, wx - h, wy, dt).unwrap());
        let dy = step_propagator(&loose, wx, wy + h, dt).unwrap()
            .sub(&step_propagator(&loose, wx, wy - h, dt).unwrap());
        fd[j] = (
            l.mul(&dx).mul(&prefix).trace().re / (2.0 * h * 4.0),
            l.mul(&dy).mul(&prefix).trace().re / (2.0 * h * 4.0),
        );
        l = l.mul(&step_propagator(&loose, wx, wy, dt).unwrap());
    }
    for j in 0..m {
        println!(
            "j={j}: first=({:+.4e},{:+.4e}) exact=({:+.4e},{:+.4e}) fd=({:+.4e},{:+.4e})",
            first[j].0, first[j].1, exact[j].0, exact[j].1, fd[j].0, fd[j].1
        );
    }
}
