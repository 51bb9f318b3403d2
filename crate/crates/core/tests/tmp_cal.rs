use mwaddr::calibration::{null_crosstalk, OptimizerParams};
use mwaddr::scenario::{reference_scenario, ExperimentEnv};

#[test]
fn probe_noisy_null() {
    for seed in 0..5u64 {
        let scn = reference_scenario();
        let mut env = ExperimentEnv::with_seed(scn, 1000 + seed).unwrap();
        let t0 = std::time::Instant::now();
        match null_crosstalk(&mut env, OptimizerParams::default()) {
            Ok(res) => println!(
                "seed {seed}: R={:.3e} nulled={:.2} driven={:.2} (std {:.2}) iters={} conv={} [{:?}]",
                res.ratio,
                res.omega_nulled_hz,
                res.omega_driven_hz,
                res.driven_fit.omega_std_hz,
                res.iterations,
                res.converged,
                t0.elapsed()
            ),
            Err(e) => println!("seed {seed}: ERROR {e} [{:?}]", t0.elapsed()),
        }
    }
}
