//! Built-in scenario sets, one per reproduced figure.

use exciton_core::model::{NetworkKind, OFF_RESONANT_OMEGA_R, RESONANT_OMEGA_R};
use exciton_core::optimize::Strategy;
use exciton_core::Error;

use crate::scenario::{NetworkBlock, Scenario, SweepGrid};

pub const PRESET_NAMES: [&str; 8] = [
    "fig2a",
    "fig2bc",
    "fig4",
    "fig5",
    "fig10",
    "appendix-R",
    "appendix-size",
    "appendix-noise",
];

/// The FMO table is in cm⁻¹; ω_a = 100 cm⁻¹ brings it to model units.
pub const FMO_ENERGY_SCALE: f64 = 0.01;

/// Baseline frequency grid for the resonance sweeps.
pub const RESONANCE_GRID: SweepGrid = SweepGrid {
    min: 0.05,
    max: 1.0,
    step: 0.002,
};

const ALL_STRATEGIES: [Strategy; 3] = [
    Strategy::Driving { terms: 1 },
    Strategy::Couplings,
    Strategy::SiteEnergies,
];

fn base(name: String, network: NetworkBlock, omega_r: f64) -> Scenario {
    Scenario {
        network,
        omega_r,
        ..Scenario::named(name)
    }
}

fn learned(baseline: &Scenario, prefix: &str, suffix: &str, strategy: Strategy) -> Scenario {
    Scenario {
        name: format!("{prefix}-{strategy}{suffix}"),
        strategy: Some(strategy),
        sweep: None,
        baseline: Some(baseline.name.clone()),
        ..baseline.clone()
    }
}

fn strategy_set(prefix: &str, network: NetworkBlock, omega_r: f64, strategies: &[Strategy]) -> Vec<Scenario> {
    let baseline = base(format!("{prefix}-unoptimized"), network, omega_r);
    let mut out = vec![baseline.clone()];
    out.extend(strategies.iter().map(|&s| learned(&baseline, prefix, "", s)));
    out
}

fn nn(n: usize) -> NetworkBlock {
    NetworkBlock::builtin(NetworkKind::Nn, n)
}

pub fn preset(name: &str) -> Result<Vec<Scenario>, Error> {
    let with_r2 = [
        Strategy::Driving { terms: 1 },
        Strategy::Driving { terms: 2 },
        Strategy::Couplings,
        Strategy::SiteEnergies,
    ];
    let set = match name {
        "fig2a" => {
            let mut set = strategy_set(name, nn(4), RESONANT_OMEGA_R, &ALL_STRATEGIES);
            set[0].sweep = Some(RESONANCE_GRID);
            set
        }
        "fig2bc" => strategy_set(name, nn(4), OFF_RESONANT_OMEGA_R, &ALL_STRATEGIES),
        "fig4" => strategy_set(
            name,
            NetworkBlock::builtin(NetworkKind::Star, 8),
            OFF_RESONANT_OMEGA_R,
            &with_r2,
        ),
        "fig5" => {
            let fmo = NetworkBlock::builtin(NetworkKind::Fmo, 7).scaled(FMO_ENERGY_SCALE);
            let mut set = strategy_set(name, fmo, OFF_RESONANT_OMEGA_R, &with_r2);
            set[0].sweep = Some(RESONANCE_GRID);
            set
        }
        "fig10" => {
            let mut set = Vec::new();
            for (label, dephasing) in [("0.1", 0.1), ("1", 1.0), ("100", 100.0)] {
                let mut b = base(format!("{name}-unoptimized-ln{label}"), nn(4), OFF_RESONANT_OMEGA_R);
                b.lambda.dephasing = dephasing;
                let l = learned(&b, name, &format!("-ln{label}"), Strategy::Driving { terms: 1 });
                set.push(b);
                set.push(l);
            }
            set
        }
        "appendix-R" => strategy_set(
            name,
            nn(4),
            OFF_RESONANT_OMEGA_R,
            &[1, 2, 7].map(|terms| Strategy::Driving { terms }),
        ),
        "appendix-size" => {
            let mut set = Vec::new();
            for n in [4, 6, 8] {
                let b = base(format!("{name}-unoptimized-n{n}"), nn(n), OFF_RESONANT_OMEGA_R);
                let l = learned(&b, name, &format!("-n{n}"), Strategy::Driving { terms: 1 });
                set.push(b);
                set.push(l);
            }
            set
        }
        "appendix-noise" => {
            let mut set = strategy_set(name, nn(4), OFF_RESONANT_OMEGA_R, &ALL_STRATEGIES);
            for s in &mut set {
                s.lambda.dephasing = 1.0;
            }
            set
        }
        other => {
            return Err(Error::config(
                "preset",
                format!("unknown preset '{other}'; known: {}", PRESET_NAMES.join(", ")),
            ))
        }
    };
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_resolves() {
        for name in PRESET_NAMES {
            let set = preset(name).unwrap();
            assert!(set.len() >= 2, "{name}");
            let mut names: Vec<_> = set.iter().map(|s| s.name.clone()).collect();
            names.sort();
            names.dedup();
            assert_eq!(names.len(), set.len(), "{name} has duplicate scenario names");
            for s in &set {
                s.resolve().unwrap();
                if let Some(b) = &s.baseline {
                    assert!(set.iter().any(|o| &o.name == b && o.strategy.is_none()));
                }
            }
        }
    }

    #[test]
    fn unknown_preset_is_a_config_error() {
        assert!(matches!(preset("fig3"), Err(Error::Config { field, .. }) if field == "preset"));
    }

    #[test]
    fn fmo_preset_uses_scaled_energies() {
        let set = preset("fig5").unwrap();
        let r = set[0].resolve().unwrap();
        assert!((r.config.network.site_energies[0] - 0.657).abs() < 1e-12);
        assert_eq!(r.dt, 1e-3);
    }
}
