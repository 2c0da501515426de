//! Parameter strategies, Adam, and multi-restart maximisation of the
//! integrated sink population.

use std::f64::consts::TAU;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::objective_ip;
use crate::error::{Error, Result};
use crate::model::{BoundModel, DrivingTerm, ModelConfig};
use crate::scalar::{gradient, seed_parameters, DiffScalar};

/// Which family of parameters is learned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Strategy {
    /// `R` harmonics on both the antenna frequency and the last site energy.
    Driving { terms: usize },
    /// Radiation–antenna and antenna–network hoppings.
    Couplings,
    /// All network site energies.
    SiteEnergies,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Driving { terms } => write!(f, "driving_r{terms}"),
            Strategy::Couplings => f.write_str("couplings"),
            Strategy::SiteEnergies => f.write_str("site_energies"),
        }
    }
}

impl Strategy {
    pub fn n_params(&self, n_sites: usize) -> usize {
        match *self {
            Strategy::Driving { terms } => 6 * terms,
            Strategy::Couplings => 2,
            Strategy::SiteEnergies => n_sites,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Strategy::Driving { terms: 0 } => Err(Error::config("strategy.terms", "driving needs at least one term")),
            _ => Ok(()),
        }
    }

    /// Adam settings with this strategy's default learning rate.
    pub fn default_adam(&self) -> AdamConfig {
        let learning_rate = match self {
            Strategy::Driving { .. } => 0.05,
            Strategy::Couplings | Strategy::SiteEnergies => 0.02,
        };
        AdamConfig {
            learning_rate,
            ..AdamConfig::default()
        }
    }

    fn check_shape(&self, config: &ModelConfig) -> Result<()> {
        self.validate()?;
        if let Strategy::Driving { terms } = *self {
            for (field, n) in [
                ("antenna_driving.terms", config.antenna_driving.n_terms()),
                ("site_n_driving.terms", config.site_n_driving.n_terms()),
            ] {
                if n != terms {
                    return Err(Error::config(
                        field,
                        format!("strategy expects {terms} terms, config has {n}"),
                    ));
                }
            }
        }
        Ok(())
    }

    fn check_len(&self, config: &ModelConfig, len: usize) -> Result<()> {
        let expected = self.n_params(config.n_sites());
        if len != expected {
            return Err(Error::config(
                "parameters",
                format!("{self} expects {expected} parameters, got {len}"),
            ));
        }
        Ok(())
    }
}

/// Flatten the strategy's parameters out of `config`.
///
/// Driving order is `A_1, ν_1, φ_1, …, A_R, ν_R, φ_R, B_1, μ_1, θ_1, …`.
pub fn pack_parameters(strategy: Strategy, config: &ModelConfig) -> Result<Vec<f64>> {
    strategy.check_shape(config)?;
    Ok(match strategy {
        Strategy::Driving { .. } => config
            .antenna_driving
            .terms
            .iter()
            .chain(&config.site_n_driving.terms)
            .flat_map(|t| [t.amplitude, t.frequency, t.phase])
            .collect(),
        Strategy::Couplings => vec![config.lambda_ar, config.lambda_a1],
        Strategy::SiteEnergies => config.network.site_energies.clone(),
    })
}

/// Inverse of [`pack_parameters`]: a copy of `config` with `params` written in.
pub fn unpack_parameters(strategy: Strategy, config: &ModelConfig, params: &[f64]) -> Result<ModelConfig> {
    strategy.validate()?;
    strategy.check_len(config, params.len())?;
    let mut out = config.clone();
    match strategy {
        Strategy::Driving { terms } => {
            let mut triples = params.chunks_exact(3).map(|c| DrivingTerm::new(c[0], c[1], c[2]));
            out.antenna_driving.terms = triples.by_ref().take(terms).collect();
            out.site_n_driving.terms = triples.collect();
        }
        Strategy::Couplings => {
            out.lambda_ar = params[0];
            out.lambda_a1 = params[1];
        }
        Strategy::SiteEnergies => {
            out.network.site_energies = params.to_vec();
            out.site_n_driving.base = params[params.len() - 1];
        }
    }
    Ok(out)
}

/// Bind differentiable parameters into a model; everything else stays constant.
pub fn bind_parameters(strategy: Strategy, config: &ModelConfig, params: &[DiffScalar]) -> Result<BoundModel> {
    strategy.validate()?;
    strategy.check_len(config, params.len())?;
    let mut model = BoundModel::constant(config);
    model.width = params.iter().map(DiffScalar::width).max().unwrap_or(0);
    match strategy {
        Strategy::Driving { terms } => {
            let triple = |c: &[DiffScalar]| [c[0].clone(), c[1].clone(), c[2].clone()];
            let mut triples = params.chunks_exact(3).map(triple);
            model.antenna.terms = triples.by_ref().take(terms).collect();
            model.site_n.terms = triples.collect();
        }
        Strategy::Couplings => {
            model.lambda_ar = params[0].clone();
            model.lambda_a1 = params[1].clone();
        }
        Strategy::SiteEnergies => {
            let (last, rest) = params.split_last().expect("at least one site");
            model.site_energies = rest.to_vec();
            model.site_n.base = last.clone();
        }
    }
    Ok(model)
}

/// Random stream for one restart: ChaCha stream `restart` of `master_seed`.
pub fn restart_rng(master_seed: u64, restart: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(restart);
    rng
}

fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.gen::<f64>()
}

/// Starting point for one restart.
///
/// Driving amplitudes are drawn from `[0, base/2]`, frequencies from
/// `[0, 2 ω_r]` and phases from `[0, 2π)`. Couplings and site energies start
/// from the values in `config`.
pub fn init_parameters_with(strategy: Strategy, config: &ModelConfig, rng: &mut impl Rng) -> Result<Vec<f64>> {
    strategy.validate()?;
    match strategy {
        Strategy::Driving { terms } => {
            let mut out = Vec::with_capacity(6 * terms);
            for base in [config.antenna_driving.base, config.site_n_driving.base] {
                for _ in 0..terms {
                    out.push(uniform(rng, 0.0, 0.5 * base));
                    out.push(uniform(rng, 0.0, 2.0 * config.omega_r));
                    out.push(uniform(rng, 0.0, TAU));
                }
            }
            Ok(out)
        }
        Strategy::Couplings => Ok(vec![config.lambda_ar, config.lambda_a1]),
        Strategy::SiteEnergies => Ok(config.network.site_energies.clone()),
    }
}

pub fn init_parameters(strategy: Strategy, config: &ModelConfig, rng_seed: u64) -> Result<Vec<f64>> {
    init_parameters_with(strategy, config, &mut restart_rng(rng_seed, 0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub iterations: usize,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            iterations: 400,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::config("adam.learning_rate", "must be positive"));
        }
        for (field, b) in [("adam.beta1", self.beta1), ("adam.beta2", self.beta2)] {
            if !(b > 0.0 && b < 1.0) {
                return Err(Error::config(field, format!("must lie in (0, 1), got {b}")));
            }
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::config("adam.epsilon", "must be positive"));
        }
        Ok(())
    }
}

/// One bias-corrected Adam descent step on `params`. `iteration` starts at 1.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    moment1: &mut [f64],
    moment2: &mut [f64],
    iteration: usize,
    cfg: &AdamConfig,
) -> Result<()> {
    let n = params.len();
    if grads.len() != n || moment1.len() != n || moment2.len() != n {
        return Err(Error::config("adam", "parameter, gradient and moment lengths differ"));
    }
    if iteration == 0 {
        return Err(Error::config("adam.iteration", "iterations are counted from 1"));
    }
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(Error::OptimizerDiverged {
            iteration,
            restart: None,
        });
    }
    let bias1 = 1.0 - cfg.beta1.powi(iteration as i32);
    let bias2 = 1.0 - cfg.beta2.powi(iteration as i32);
    for i in 0..n {
        let g = grads[i];
        moment1[i] = cfg.beta1 * moment1[i] + (1.0 - cfg.beta1) * g;
        moment2[i] = cfg.beta2 * moment2[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = moment1[i] / bias1;
        let v_hat = moment2[i] / bias2;
        params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
    Ok(())
}

/// Outcome of a single restart.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartOutcome {
    pub initial_params: Vec<f64>,
    pub best_params: Vec<f64>,
    pub best_objective: f64,
    /// Objective at every evaluated iterate: `iterations + 1` entries.
    pub history: Vec<f64>,
}

/// Gradient ascent with Adam on an arbitrary differentiable objective,
/// keeping the best iterate seen.
pub fn maximize<F>(initial: Vec<f64>, adam: &AdamConfig, mut objective: F) -> Result<RestartOutcome>
where
    F: FnMut(&[DiffScalar]) -> Result<DiffScalar>,
{
    adam.validate()?;
    let n = initial.len();
    let mut params = initial.clone();
    let mut m = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut history = Vec::with_capacity(adam.iterations + 1);
    let mut best_objective = f64::NEG_INFINITY;
    let mut best_params = params.clone();

    let mut track = |value: f64, at: &[f64], history: &mut Vec<f64>| {
        history.push(value);
        if value > best_objective {
            best_objective = value;
            best_params = at.to_vec();
        }
    };

    for iteration in 1..=adam.iterations {
        let seeded = seed_parameters(&params)?;
        let f = objective(&seeded)?;
        if !f.value.is_finite() {
            return Err(Error::OptimizerDiverged {
                iteration,
                restart: None,
            });
        }
        track(f.value, &params, &mut history);
        // maximise by descending on -f
        let descent: Vec<f64> = gradient(&f, n).iter().map(|g| -g).collect();
        adam_step(&mut params, &descent, &mut m, &mut v, iteration, adam)?;
    }
    let constants: Vec<DiffScalar> = params.iter().map(|&p| DiffScalar::constant(p)).collect();
    let last = objective(&constants)?;
    if !last.value.is_finite() {
        return Err(Error::OptimizerDiverged {
            iteration: adam.iterations,
            restart: None,
        });
    }
    track(last.value, &params, &mut history);

    Ok(RestartOutcome {
        initial_params: initial,
        best_params,
        best_objective,
        history,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub strategy: Strategy,
    pub best_params: Vec<f64>,
    pub best_objective: f64,
    pub best_restart: usize,
    pub master_seed: u64,
    pub restarts: Vec<RestartOutcome>,
}

impl OptimizationResult {
    pub fn history(&self) -> Vec<Vec<f64>> {
        self.restarts.iter().map(|r| r.history.clone()).collect()
    }
}

/// Settings shared by every restart of [`optimize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeSettings {
    pub adam: AdamConfig,
    /// Optimisation horizon T_L.
    pub horizon: f64,
    pub dt: f64,
    pub restarts: usize,
    pub master_seed: u64,
}

/// Maximise `I_P(T_L)` over the strategy's parameters.
///
/// Restarts run on the current rayon pool; each draws its start from its own
/// random stream, so the result does not depend on scheduling. Ties between
/// restarts go to the lowest index.
pub fn optimize(config: &ModelConfig, strategy: Strategy, settings: &OptimizeSettings) -> Result<OptimizationResult> {
    config.validate()?;
    strategy.validate()?;
    settings.adam.validate()?;
    if settings.restarts == 0 {
        return Err(Error::config("restarts", "need at least one restart"));
    }
    // shape check only; driving starts are drawn fresh
    if !matches!(strategy, Strategy::Driving { .. }) {
        pack_parameters(strategy, config)?;
    }

    let outcomes: Vec<Result<RestartOutcome>> = (0..settings.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = restart_rng(settings.master_seed, r as u64);
            let init = init_parameters_with(strategy, config, &mut rng)?;
            maximize(init, &settings.adam, |p| {
                let model = bind_parameters(strategy, config, p)?;
                objective_ip(&model, settings.horizon, settings.dt)
            })
            .map_err(|e| match e {
                Error::OptimizerDiverged { iteration, .. } => Error::OptimizerDiverged {
                    iteration,
                    restart: Some(r),
                },
                other => Error::Restart {
                    restart: r,
                    source: Box::new(other),
                },
            })
        })
        .collect();
    let restarts = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let mut best_restart = 0;
    for (i, r) in restarts.iter().enumerate() {
        if r.best_objective > restarts[best_restart].best_objective {
            best_restart = i;
        }
    }
    Ok(OptimizationResult {
        strategy,
        best_params: restarts[best_restart].best_params.clone(),
        best_objective: restarts[best_restart].best_objective,
        best_restart,
        master_seed: settings.master_seed,
        restarts,
    })
}
