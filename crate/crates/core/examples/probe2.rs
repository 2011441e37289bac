// Temporary: polar-objective gradient consistency at interior points.
use spinforge::grape::{fidelity_gradient, from_polar, GradientMode};
use spinforge::matrix::{ComplexMatrix, SpinAxis};
use spinforge::propagation::fidelity;
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

    // Deterministic pseudo-random interior polar point, M = 12.
    let m = 12usize;
    let mut state = 0x9E3779B97F4A7C15u64;
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let polar: Vec<(f64, f64)> = (0..m)
        .map(|_| (bound * (0.2 + 0.6 * next()), TAU * next()))
        .collect();

    let phi_of = |polar: &[(f64, f64)]| -> f64 {
        let pulse = from_polar(1e-6, bound, polar).unwrap();
        fidelity(&sys, &pulse, &target).unwrap()
    };

    // Analytic polar gradient via cartesian gradient + chain rule.
    let pulse = from_polar(1e-6, bound, &polar).unwrap();
    let cart_grad = fidelity_gradient(&sys, &pulse, &target, GradientMode::Exact).unwrap();
    println!("checking polar-space FD vs chain rule (r-normalized)");
    for j in [0usize, 5, 11] {
        let (r, th) = polar[j];
        let chain_r = bound * (th.cos() * cart_grad[j].0 + th.sin() * cart_grad[j].1);
        let chain_t = r * (-th.sin() * cart_grad[j].0 + th.cos() * cart_grad[j].1);
        // FD in r-tilde
        let h = 1e-7;
        let mut p = polar.clone();
        p[j].0 = (r / bound + h) * bound;
        let up = phi_of(&p);
        p[j].0 = (r / bound - h) * bound;
        let dn = phi_of(&p);
        let fd_r = (up - dn) / (2.0 * h);
        // FD in theta
        let mut p = polar.clone();
        p[j].1 = th + h;
        let up_t = phi_of(&p);
        p[j].1 = th - h;
        let dn_t = phi_of(&p);
        let fd_t = (up_t - dn_t) / (2.0 * h);
        println!(
            "  j={j:2}  dPhi/dr~: chain {chain_r:+.6e} fd {fd_r:+.6e}   dPhi/dth: chain {chain_t:+.6e} fd {fd_t:+.6e}"
        );
    }
}
