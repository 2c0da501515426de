use exciton_core::dynamics::{dt_convergence, evolve, integrated_sink, DensityMatrix, TrajectoryConfig};
use exciton_core::model::{builtin_network, DrivingTerm, ModelConfig, NetworkKind, RESONANT_OMEGA_R};
use proptest::prelude::*;

fn nn4(omega_r: f64) -> ModelConfig {
    ModelConfig::new(builtin_network(NetworkKind::Nn, 4).unwrap(), omega_r)
}

// Frozen from dt = 1e-3 runs; dt = 5e-4 agrees to 1e-13.
const NN4_IP_30: f64 = 3.521195599308576;
const NN4_PSINK_1200: f64 = 0.9998862218536902;

#[test]
fn resonant_nn4_regression() {
    let cfg = nn4(RESONANT_OMEGA_R);
    let ip = integrated_sink(&cfg, 30.0, 1e-3).unwrap();
    assert!((ip - NN4_IP_30).abs() < 1e-9, "I_P(30) = {ip}");
    let traj = evolve(
        &cfg,
        &TrajectoryConfig::new(1e-3, 1200.0),
        &DensityMatrix::initial(cfg.basis(), 0),
    )
    .unwrap();
    let p = *traj.p_sink().last().unwrap();
    assert!((p - NN4_PSINK_1200).abs() < 1e-9, "p_sink(1200) = {p}");
}

#[test]
fn rk4_is_fourth_order() {
    let cfg = nn4(RESONANT_OMEGA_R);
    let reference = integrated_sink(&cfg, 30.0, 0.0125).unwrap();
    let coarse = (integrated_sink(&cfg, 30.0, 0.1).unwrap() - reference).abs();
    let fine = (integrated_sink(&cfg, 30.0, 0.05).unwrap() - reference).abs();
    assert!(coarse / fine >= 12.0, "error ratio {}", coarse / fine);
}

#[test]
fn accumulator_matches_trapezoid() {
    let cfg = nn4(RESONANT_OMEGA_R);
    let traj = evolve(
        &cfg,
        &TrajectoryConfig::new(1e-3, 30.0).with_stride(1),
        &DensityMatrix::initial(cfg.basis(), 0),
    )
    .unwrap();
    assert!((traj.final_sink_integral() - traj.trapezoid_sink_integral()).abs() < 1e-4);
}

#[test]
fn default_steps_are_converged() {
    assert!(dt_convergence(&nn4(RESONANT_OMEGA_R), 30.0, 1e-3).unwrap().converged);
    assert!(dt_convergence(&nn4(15.0), 30.0, 1e-3).unwrap().converged);
    let fmo = ModelConfig::new(builtin_network(NetworkKind::Fmo, 7).unwrap(), 0.242);
    assert!(dt_convergence(&fmo, 30.0, 1e-4).unwrap().converged);
}

#[test]
fn zero_sink_rate_keeps_sink_empty() {
    let mut cfg = nn4(RESONANT_OMEGA_R);
    cfg.sink_rate = 0.0;
    let traj = evolve(
        &cfg,
        &TrajectoryConfig::new(1e-3, 50.0),
        &DensityMatrix::initial(cfg.basis(), 0),
    )
    .unwrap();
    assert!(traj.p_sink().iter().all(|&p| p == 0.0));
    assert_eq!(traj.max_sink_decrease(), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn driven_runs_preserve_invariants(
        omega_r in 0.0..20.0f64,
        amp in -2.0..2.0f64,
        freq in 0.0..30.0f64,
        phase in 0.0..std::f64::consts::TAU,
        dephasing in 0.0..2.0f64,
    ) {
        let mut cfg = nn4(omega_r);
        cfg.dephasing = dephasing;
        cfg.antenna_driving.terms.push(DrivingTerm::new(amp, freq, phase));
        cfg.site_n_driving.terms.push(DrivingTerm::new(0.5 * amp, 0.5 * freq, -phase));
        let traj = evolve(&cfg, &TrajectoryConfig::new(1e-3, 5.0).with_stride(10), &DensityMatrix::initial(cfg.basis(), 0)).unwrap();
        let d = traj.diagnostics;
        prop_assert!(d.max_trace_error <= 1e-10);
        prop_assert!(d.max_hermiticity_error <= 1e-12);
        prop_assert!(d.min_eigenvalue >= -1e-10);
        prop_assert!(traj.max_sink_decrease() <= 0.0);
        let ip = traj.final_sink_integral();
        prop_assert!((0.0..=5.0).contains(&ip));
    }
}
