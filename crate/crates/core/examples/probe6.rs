// Temporary: decompose the stalled solution into U1 and V = U1†U2.
use spinforge::grape::{optimize_fixed_time, OptimizerConfig};
use spinforge::matrix::{expm_skew, trace_fidelity, ComplexMatrix, SpinAxis};
use spinforge::spin::{rotation_gate, single_spin_effective, SpinSystem, TargetTransformation};
use std::f64::consts::PI;

fn main() {
    let sys = SpinSystem::from_hz(1e8, &[11930.18, 11202.80], &[0.0; 4], None, 12_500.0).unwrap();
    let rz = rotation_gate(SpinAxis::Z, PI / 2.0);
    let target =
        TargetTransformation::new(vec![ComplexMatrix::identity(2), rz.clone()]).unwrap();
    let config = OptimizerConfig {
        seed: 7,
        restarts: 1,
        max_iters: 4000,
        ..OptimizerConfig::default()
    };
    let res = optimize_fixed_time(&sys, &target, 600, 1e-6, &config, None, None).unwrap();
    println!("phi = {:.6}", res.fidelity);

    let mut u1 = ComplexMatrix::identity(2);
    let mut u2 = ComplexMatrix::identity(2);
    for j in 0..res.pulse.len() {
        let (wx, wy) = res.pulse.sample(j);
        u1 = expm_skew(&single_spin_effective(&sys, 0, wx, wy).unwrap(), 1e-6).unwrap().mul(&u1);
        u2 = expm_skew(&single_spin_effective(&sys, 1, wx, wy).unwrap(), 1e-6).unwrap().mul(&u2);
    }
    let v = u1.dagger().mul(&u2);
    println!("fid(U1, I)        = {:.6}", trace_fidelity(&ComplexMatrix::identity(2), &u1, 1).unwrap());
    println!("fid(U2, Rz90)     = {:.6}", trace_fidelity(&rz, &u2, 1).unwrap());
    println!("fid(V,  Rz90)     = {:.6}", trace_fidelity(&rz, &v, 1).unwrap());
    println!("U1 = {:?}", u1);
    println!("U2 = {:?}", u2);
}
