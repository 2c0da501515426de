use std::path::Path;

use exciton_core::dynamics::{DensityMatrix, TrajectoryConfig};
use exciton_core::model::{
    builtin_network, DrivingTerm, ModelConfig, NetworkKind, NetworkSpec, DEFAULT_DEPHASING, DEFAULT_LAMBDA_A1,
    DEFAULT_LAMBDA_AR, DEFAULT_SINK_RATE, RESONANT_OMEGA_R,
};
use exciton_core::optimize::{AdamConfig, Strategy};
use exciton_core::Error;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Step used when the scenario leaves `dt` unset and energies stay below
/// [`FINE_DT_THRESHOLD`].
pub const DEFAULT_DT: f64 = 1e-3;
pub const FINE_DT: f64 = 1e-4;
/// Networks whose largest energy or coupling exceeds this get [`FINE_DT`].
pub const FINE_DT_THRESHOLD: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkBlock {
    pub kind: Option<NetworkKind>,
    pub n_sites: Option<usize>,
    /// Explicit network; both fields must be given together and replace `kind`.
    pub site_energies: Option<Vec<f64>>,
    pub couplings: Option<Vec<Vec<f64>>>,
    /// Multiplies every energy and coupling, e.g. 0.01 for a table in cm⁻¹
    /// with ω_a = 100 cm⁻¹.
    pub energy_scale: f64,
}

impl Default for NetworkBlock {
    fn default() -> Self {
        Self {
            kind: None,
            n_sites: None,
            site_energies: None,
            couplings: None,
            energy_scale: 1.0,
        }
    }
}

impl NetworkBlock {
    pub fn builtin(kind: NetworkKind, n_sites: usize) -> Self {
        Self {
            kind: Some(kind),
            n_sites: Some(n_sites),
            ..Self::default()
        }
    }

    pub fn scaled(mut self, energy_scale: f64) -> Self {
        self.energy_scale = energy_scale;
        self
    }

    fn resolve(&self) -> Result<(NetworkBlock, NetworkSpec), Error> {
        if !(self.energy_scale.is_finite() && self.energy_scale > 0.0) {
            return Err(Error::config("network.energy_scale", "must be positive"));
        }
        let spec = match (&self.site_energies, &self.couplings) {
            (Some(energies), Some(rows)) => {
                if self.kind.is_some() {
                    return Err(Error::config(
                        "network.kind",
                        "give either a kind or explicit matrices, not both",
                    ));
                }
                let n = energies.len();
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(Error::config(
                        "network.couplings",
                        format!("expected {n} rows of {n} entries to match site_energies"),
                    ));
                }
                let couplings = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
                NetworkSpec::new("custom", energies.clone(), couplings)?
            }
            (None, None) => {
                let kind = self.kind.unwrap_or(NetworkKind::Nn);
                let n = self.n_sites.unwrap_or(match kind {
                    NetworkKind::Nn => 4,
                    NetworkKind::Star => 8,
                    NetworkKind::Fmo => 7,
                });
                let resolved = NetworkBlock {
                    kind: Some(kind),
                    n_sites: Some(n),
                    ..self.clone()
                };
                let spec = builtin_network(kind, n)?;
                return Ok((resolved, spec.scaled(self.energy_scale)));
            }
            (Some(_), None) => {
                return Err(Error::config(
                    "network.couplings",
                    "missing; required with site_energies",
                ))
            }
            (None, Some(_)) => {
                return Err(Error::config(
                    "network.site_energies",
                    "missing; required with couplings",
                ))
            }
        };
        if self.n_sites.is_some_and(|n| n != spec.n_sites()) {
            return Err(Error::config("network.n_sites", "does not match the explicit matrices"));
        }
        let resolved = NetworkBlock {
            n_sites: Some(spec.n_sites()),
            ..self.clone()
        };
        Ok((resolved, spec.scaled(self.energy_scale)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LambdaBlock {
    pub lambda_ar: f64,
    pub lambda_a1: f64,
    /// Dephasing rate λ_N.
    pub dephasing: f64,
    /// Sink rate λ_sN.
    pub sink_rate: f64,
}

impl Default for LambdaBlock {
    fn default() -> Self {
        Self {
            lambda_ar: DEFAULT_LAMBDA_AR,
            lambda_a1: DEFAULT_LAMBDA_A1,
            dephasing: DEFAULT_DEPHASING,
            sink_rate: DEFAULT_SINK_RATE,
        }
    }
}

/// Fixed driving harmonics. Ignored in favour of random starts when the
/// strategy learns the driving.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DrivingBlock {
    pub antenna: Vec<DrivingTerm>,
    pub site_n: Vec<DrivingTerm>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamBlock {
    /// Unset means the strategy's default.
    pub learning_rate: Option<f64>,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub iterations: usize,
}

impl Default for AdamBlock {
    fn default() -> Self {
        let d = AdamConfig::default();
        Self {
            learning_rate: None,
            beta1: d.beta1,
            beta2: d.beta2,
            epsilon: d.epsilon,
            iterations: d.iterations,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimesBlock {
    /// Optimisation horizon T_L.
    pub t_l: f64,
    /// Evaluation horizon T.
    pub t_end: f64,
    /// Unset picks a step from the network's energy scale.
    pub dt: Option<f64>,
    pub record_stride: usize,
}

impl Default for TimesBlock {
    fn default() -> Self {
        Self {
            t_l: 30.0,
            t_end: 1200.0,
            dt: None,
            record_stride: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl SweepGrid {
    pub fn points(&self) -> Result<Vec<f64>, Error> {
        if !(self.min.is_finite() && self.max.is_finite() && self.max >= self.min) {
            return Err(Error::config("sweep", "need finite min <= max"));
        }
        if self.min == self.max {
            return Ok(vec![self.min]);
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::config("sweep.step", "must be positive"));
        }
        let n = ((self.max - self.min) / self.step + 1e-9).floor() as usize;
        Ok((0..=n).map(|k| self.min + k as f64 * self.step).collect())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// Photon in the radiation mode, everything else in its ground state.
    #[default]
    Photon,
    /// Excitation already in the sink; a debugging aid.
    Sink,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub network: NetworkBlock,
    pub omega_r: f64,
    pub lambda: LambdaBlock,
    pub driving: DrivingBlock,
    pub initial: InitialState,
    pub strategy: Option<Strategy>,
    pub adam: AdamBlock,
    pub times: TimesBlock,
    pub restarts: usize,
    pub master_seed: u64,
    pub sweep: Option<SweepGrid>,
    /// In a compare set, the name of the scenario this one is divided by;
    /// defaults to the first scenario of the set.
    pub baseline: Option<String>,
    pub output_dir: Option<String>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            network: NetworkBlock::default(),
            omega_r: RESONANT_OMEGA_R,
            lambda: LambdaBlock::default(),
            driving: DrivingBlock::default(),
            initial: InitialState::default(),
            strategy: None,
            adam: AdamBlock::default(),
            times: TimesBlock::default(),
            restarts: 8,
            master_seed: 0,
            sweep: None,
            baseline: None,
            output_dir: None,
        }
    }
}

/// A scenario with every default filled in, plus the derived simulator inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub scenario: Scenario,
    pub config: ModelConfig,
    pub dt: f64,
    pub adam: AdamConfig,
}

impl Resolved {
    pub fn trajectory(&self) -> TrajectoryConfig {
        TrajectoryConfig::new(self.dt, self.scenario.times.t_end).with_stride(self.scenario.times.record_stride)
    }

    pub fn initial_state(&self) -> DensityMatrix {
        let basis = self.config.basis();
        match self.scenario.initial {
            InitialState::Photon => DensityMatrix::initial(basis, 0),
            InitialState::Sink => DensityMatrix::pure(basis.dim(), basis.sink(), 0),
        }
    }

    /// The same physics with the given parameter vector written in.
    pub fn with_params(&self, params: &[f64]) -> Result<ModelConfig, Error> {
        let strategy = self
            .scenario
            .strategy
            .ok_or_else(|| Error::config("strategy", "scenario has no strategy"))?;
        exciton_core::optimize::unpack_parameters(strategy, &self.config, params)
    }
}

impl Scenario {
    pub fn named(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    pub fn resolve(&self) -> Result<Resolved, Error> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::config("name", "must be non-empty and usable as a file name"));
        }
        let (network_block, network) = self.network.resolve()?;
        let mut config = ModelConfig::new(network, self.omega_r);
        config.lambda_ar = self.lambda.lambda_ar;
        config.lambda_a1 = self.lambda.lambda_a1;
        config.dephasing = self.lambda.dephasing;
        config.sink_rate = self.lambda.sink_rate;
        config.antenna_driving.terms = self.driving.antenna.clone();
        config.site_n_driving.terms = self.driving.site_n.clone();
        config.validate().map_err(scenario_field)?;

        let dt = match self.times.dt {
            Some(dt) => dt,
            None if config.network.energy_span() > FINE_DT_THRESHOLD => FINE_DT,
            None => DEFAULT_DT,
        };
        let times = TimesBlock {
            dt: Some(dt),
            ..self.times
        };
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::config("times.dt", "must be positive"));
        }
        if times.record_stride == 0 {
            return Err(Error::config("times.record_stride", "must be positive"));
        }
        for (field, t) in [("times.t_l", times.t_l), ("times.t_end", times.t_end)] {
            exciton_core::dynamics::step_count(dt, t).map_err(|e| match e {
                Error::Config { message, .. } => Error::config(field, message),
                other => other,
            })?;
        }

        if let Some(strategy) = self.strategy {
            strategy.validate()?;
        }
        let learning_rate = self.adam.learning_rate.unwrap_or_else(|| {
            self.strategy
                .map_or(AdamConfig::default(), |s| s.default_adam())
                .learning_rate
        });
        let adam = AdamConfig {
            learning_rate,
            beta1: self.adam.beta1,
            beta2: self.adam.beta2,
            epsilon: self.adam.epsilon,
            iterations: self.adam.iterations,
        };
        adam.validate()?;
        if self.restarts == 0 {
            return Err(Error::config("restarts", "need at least one restart"));
        }
        if let Some(grid) = &self.sweep {
            grid.points()?;
        }

        let scenario = Scenario {
            network: network_block,
            times,
            adam: AdamBlock {
                learning_rate: Some(learning_rate),
                ..self.adam
            },
            ..self.clone()
        };
        Ok(Resolved {
            scenario,
            config,
            dt,
            adam,
        })
    }
}

/// Rename model-level field names to their place in the scenario document.
fn scenario_field(err: Error) -> Error {
    match err {
        Error::Config { field, message } => {
            let renamed = [
                ("lambda_ar", "lambda.lambda_ar"),
                ("lambda_a1", "lambda.lambda_a1"),
                ("lambda_n", "lambda.dephasing"),
                ("lambda_sn", "lambda.sink_rate"),
                ("antenna_driving", "driving.antenna"),
                ("site_n_driving", "driving.site_n"),
            ]
            .iter()
            .find_map(|(from, to)| field.strip_prefix(from).map(|rest| format!("{to}{rest}")))
            .unwrap_or(field);
            Error::Config {
                field: renamed,
                message,
            }
        }
        other => other,
    }
}

/// A scenario file holds one scenario or a list of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum ScenarioFile {
    // lists first: a derived struct would also accept an array
    Many(Vec<Scenario>),
    One(Box<Scenario>),
}

pub fn parse_scenarios(text: &str) -> Result<Vec<Scenario>, CliError> {
    let parsed: ScenarioFile = serde_json::from_str(text).map_err(|e| {
        // untagged enums hide the inner message, so retry as a single object
        let detail = serde_json::from_str::<Scenario>(text).err().unwrap_or(e);
        CliError::Core(Error::config("scenario", detail.to_string()))
    })?;
    let list = match parsed {
        ScenarioFile::One(s) => vec![*s],
        ScenarioFile::Many(v) => v,
    };
    if list.is_empty() {
        return Err(CliError::Core(Error::config("scenario", "file lists no scenarios")));
    }
    Ok(list)
}

pub fn load_scenarios(path: &Path) -> Result<Vec<Scenario>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_scenarios(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_default_rates() {
        let s = parse_scenarios("{}").unwrap().remove(0);
        let r = s.resolve().unwrap();
        let expected = ModelConfig::new(builtin_network(NetworkKind::Nn, 4).unwrap(), 0.264);
        assert_eq!(r.config, expected);
        assert_eq!(r.scenario.times.t_l, 30.0);
        assert_eq!(r.scenario.times.t_end, 1200.0);
        assert_eq!(r.dt, 1e-3);
        assert_eq!(r.scenario.network.kind, Some(NetworkKind::Nn));
        assert_eq!(r.scenario.network.n_sites, Some(4));
        assert_eq!(r.adam.iterations, 400);
        assert_eq!(r.scenario.restarts, 8);
    }

    #[test]
    fn unscaled_fmo_gets_fine_step() {
        let mut s = Scenario::named("fmo");
        s.network = NetworkBlock::builtin(NetworkKind::Fmo, 7);
        assert_eq!(s.resolve().unwrap().dt, 1e-4);
        s.network = s.network.scaled(0.01);
        assert_eq!(s.resolve().unwrap().dt, 1e-3);
    }

    #[test]
    fn explicit_network() {
        let text = r#"{"network": {"site_energies": [0.1, 0.2], "couplings": [[0, 0.3], [0.3, 0]]}}"#;
        let r = parse_scenarios(text).unwrap()[0].resolve().unwrap();
        assert_eq!(r.config.network.site_energies, vec![0.1, 0.2]);
        assert_eq!(r.config.site_n_driving.base, 0.2);
        assert_eq!(r.scenario.network.n_sites, Some(2));
    }

    #[test]
    fn errors_name_the_field() {
        let field_of = |text: &str| match parse_scenarios(text).and_then(|v| v[0].resolve().map_err(CliError::Core)) {
            Err(CliError::Core(Error::Config { field, .. })) => field,
            other => panic!("expected config error, got {other:?}"),
        };
        assert_eq!(field_of(r#"{"times": {"dt": 0.07}}"#), "times.t_l");
        assert_eq!(
            field_of(r#"{"network": {"kind": "star", "n_sites": 5}}"#),
            "network.n_sites"
        );
        assert_eq!(field_of(r#"{"lambda": {"dephasing": -1}}"#), "lambda.dephasing");
        assert_eq!(field_of(r#"{"restarts": 0}"#), "restarts");
        assert_eq!(
            field_of(r#"{"strategy": {"kind": "driving", "terms": 0}}"#),
            "strategy.terms"
        );
        assert_eq!(
            field_of(r#"{"network": {"site_energies": [1.0]}}"#),
            "network.couplings"
        );
        assert_eq!(field_of(r#"{"omega": 1}"#), "scenario");
    }

    #[test]
    fn learning_rate_follows_strategy() {
        let mut s = Scenario::named("x");
        s.strategy = Some(Strategy::Couplings);
        assert_eq!(s.resolve().unwrap().adam.learning_rate, 0.02);
        s.strategy = Some(Strategy::Driving { terms: 1 });
        assert_eq!(s.resolve().unwrap().adam.learning_rate, 0.05);
        s.adam.learning_rate = Some(0.3);
        assert_eq!(s.resolve().unwrap().adam.learning_rate, 0.3);
    }

    #[test]
    fn resolving_twice_is_stable() {
        let mut s = Scenario::named("x");
        s.strategy = Some(Strategy::SiteEnergies);
        s.network = NetworkBlock::builtin(NetworkKind::Fmo, 7).scaled(0.01);
        let once = s.resolve().unwrap().scenario;
        assert_eq!(once.resolve().unwrap().scenario, once);
    }

    #[test]
    fn sweep_grid_points() {
        let g = SweepGrid {
            min: 0.05,
            max: 1.0,
            step: 0.002,
        };
        let p = g.points().unwrap();
        assert_eq!(p.len(), 476);
        assert!((p[475] - 1.0).abs() < 1e-12);
        assert_eq!(
            SweepGrid {
                min: 0.3,
                max: 0.3,
                step: 0.0
            }
            .points()
            .unwrap(),
            vec![0.3]
        );
    }

    #[test]
    fn lists_and_single_objects_parse() {
        assert_eq!(parse_scenarios(r#"[{"name": "a"}, {"name": "b"}]"#).unwrap().len(), 2);
        assert!(parse_scenarios("[]").is_err());
    }
}
