use exciton_core::dynamics::{evolve, DensityMatrix, TrajectoryConfig};
use exciton_core::model::{builtin_network, ModelConfig, NetworkKind, RESONANT_OMEGA_R};
use exciton_core::oracle::{full_space_evolve, max_population_difference, FullSpaceConfig};

fn compare(kind: NetworkKind, n: usize, omega_r: f64) {
    let cfg = ModelConfig::new(builtin_network(kind, n).unwrap(), omega_r);
    let traj = TrajectoryConfig::new(1e-3, 10.0);
    let reduced = evolve(&cfg, &traj, &DensityMatrix::initial(cfg.basis(), 0)).unwrap();
    let full = full_space_evolve(&FullSpaceConfig::new(cfg, 2), &traj).unwrap();
    let diff = max_population_difference(&reduced, &full.trajectory).unwrap();
    assert!(diff < 1e-8, "{kind}{n}: max population difference {diff:e}");
    assert!(full.max_leakage() <= 1e-10, "leakage {:e}", full.max_leakage());
    assert!(full.trajectory.diagnostics.max_trace_error <= 1e-8);
    let sink_gap = (reduced.final_sink_integral() - full.trajectory.final_sink_integral()).abs();
    assert!(sink_gap < 1e-8);
}

#[test]
fn nn4_matches_full_space() {
    compare(NetworkKind::Nn, 4, RESONANT_OMEGA_R);
}

#[test]
fn star8_matches_full_space() {
    compare(NetworkKind::Star, 8, RESONANT_OMEGA_R);
}

#[test]
fn off_resonant_nn4_matches_full_space() {
    compare(NetworkKind::Nn, 4, 15.0);
}

#[test]
fn truncation_level_does_not_matter() {
    let cfg = ModelConfig::new(builtin_network(NetworkKind::Nn, 4).unwrap(), RESONANT_OMEGA_R);
    let traj = TrajectoryConfig::new(1e-3, 10.0);
    let two = full_space_evolve(&FullSpaceConfig::new(cfg.clone(), 2), &traj).unwrap();
    let three = full_space_evolve(&FullSpaceConfig::new(cfg, 3), &traj).unwrap();
    let diff = max_population_difference(&two.trajectory, &three.trajectory).unwrap();
    assert!(diff < 1e-10, "n_max 2 vs 3: {diff:e}");
}

#[test]
fn driven_model_matches_full_space() {
    use exciton_core::model::DrivingTerm;
    let mut cfg = ModelConfig::new(builtin_network(NetworkKind::Nn, 4).unwrap(), 15.0);
    cfg.antenna_driving.terms.push(DrivingTerm::new(0.4, 13.0, 1.1));
    cfg.site_n_driving.terms.push(DrivingTerm::new(0.2, 7.0, 0.3));
    let traj = TrajectoryConfig::new(1e-3, 5.0);
    let reduced = evolve(&cfg, &traj, &DensityMatrix::initial(cfg.basis(), 0)).unwrap();
    let full = full_space_evolve(&FullSpaceConfig::new(cfg, 2), &traj).unwrap();
    assert!(max_population_difference(&reduced, &full.trajectory).unwrap() < 1e-8);
}
