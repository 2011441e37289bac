// Temporary: full pipeline on the headline target, final conventions.
use spinforge::grape::OptimizerConfig;
use spinforge::matrix::{ComplexMatrix, SpinAxis};
use spinforge::mintime::{run_pipeline, SearchConfig};
use spinforge::spin::{rotation_gate, SpinSystem, TargetTransformation};
use std::f64::consts::PI;
use std::time::Instant;

fn main() {
    let sys = SpinSystem::trichloroethylene();
    let target = TargetTransformation::new(vec![
        ComplexMatrix::identity(2),
        rotation_gate(SpinAxis::Z, PI / 2.0),
    ])
    .unwrap();
    let config = SearchConfig {
        optimizer: OptimizerConfig {
            seed: 1,
            restarts: 5,
            max_iters: 2000,
            ..OptimizerConfig::default()
        },
        ..SearchConfig::default()
    };
    let t0 = Instant::now();
    match run_pipeline(&sys, &target, &config, None) {
        Ok(trace) => {
            println!(
                "T_geodesic = {:.2} us, delta_t = {:.0} us, T_minimum = {:.0} us, phi = {:.6}, smooth_ok = {}",
                trace.t_geodesic * 1e6,
                trace.delta_t * 1e6,
                trace.t_minimum * 1e6,
                trace.fidelity,
                trace.smoothness_ok
            );
            for a in &trace.attempts {
                println!(
                    "  {:.0} us: phi = {:.6} converged = {}",
                    a.duration * 1e6,
                    a.fidelity,
                    a.converged
                );
            }
        }
        Err(e) => println!("pipeline failed: {e}"),
    }
    println!("elapsed {:.0?}", t0.elapsed());
}
