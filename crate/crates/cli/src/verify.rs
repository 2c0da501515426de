//! Self-checks run by the `verify` subcommand.

use std::fmt;

use exciton_core::dynamics::{dt_convergence, evolve, objective_ip, TrajectoryConfig};
use exciton_core::model::{BoundModel, ModelConfig};
use exciton_core::optimize::{bind_parameters, init_parameters, pack_parameters, unpack_parameters, Strategy};
use exciton_core::oracle::{full_space_evolve, max_population_difference, FullSpaceConfig};
use exciton_core::scalar::{gradient, seed_parameters};
use exciton_core::Error;

use crate::scenario::{InitialState, Resolved};

pub const ORACLE_HORIZON: f64 = 10.0;
pub const ORACLE_TOLERANCE: f64 = 1e-8;
pub const LEAKAGE_TOLERANCE: f64 = 1e-10;
pub const FD_STEP: f64 = 1e-5;
pub const FD_TOLERANCE: f64 = 1e-4;
pub const TRACE_TOLERANCE: f64 = 1e-8;
pub const HERMITICITY_TOLERANCE: f64 = 1e-10;
pub const EIGENVALUE_FLOOR: f64 = -1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub scenario: String,
    pub check: String,
    pub status: Status,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyReport {
    pub rows: Vec<CheckRow>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.status != Status::Fail)
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.status == Status::Fail).count()
    }

    fn push(&mut self, scenario: &str, check: impl Into<String>, outcome: Result<(bool, String), Error>) {
        let (status, detail) = match outcome {
            Ok((true, d)) => (Status::Pass, d),
            Ok((false, d)) => (Status::Fail, d),
            Err(e) => (Status::Fail, e.to_string()),
        };
        self.rows.push(CheckRow {
            scenario: scenario.into(),
            check: check.into(),
            status,
            detail,
        });
    }

    fn skip(&mut self, scenario: &str, check: &str, why: &str) {
        self.rows.push(CheckRow {
            scenario: scenario.into(),
            check: check.into(),
            status: Status::Skip,
            detail: why.into(),
        });
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w_scenario = self.rows.iter().map(|r| r.scenario.len()).max().unwrap_or(0).max(8);
        let w_check = self.rows.iter().map(|r| r.check.len()).max().unwrap_or(0).max(5);
        writeln!(f, "{:<w_scenario$}  {:<w_check$}  status  detail", "scenario", "check")?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<w_scenario$}  {:<w_check$}  {:<6}  {}",
                r.scenario, r.check, r.status, r.detail
            )?;
        }
        Ok(())
    }
}

fn oracle_check(r: &Resolved) -> Result<(bool, String), Error> {
    let traj = TrajectoryConfig::new(r.dt, ORACLE_HORIZON).with_stride(r.scenario.times.record_stride);
    let reduced = evolve(&r.config, &traj, &r.initial_state())?;
    let full = full_space_evolve(&FullSpaceConfig::new(r.config.clone(), 2), &traj)?;
    let diff = max_population_difference(&reduced, &full.trajectory)?;
    let leak = full.max_leakage();
    Ok((
        diff < ORACLE_TOLERANCE && leak <= LEAKAGE_TOLERANCE,
        format!("max |Δp| = {diff:.3e}, leakage = {leak:.3e}"),
    ))
}

fn convergence_check(r: &Resolved) -> Result<(bool, String), Error> {
    let report = dt_convergence(&r.config, r.scenario.times.t_l, r.dt)?;
    Ok((
        report.converged,
        format!("dt = {}, rel diff vs dt/2 = {:.3e}", report.dt, report.rel_diff),
    ))
}

/// Starting point for the gradient check of `strategy` on `config`.
fn gradient_point(strategy: Strategy, config: &ModelConfig, seed: u64) -> Result<(ModelConfig, Vec<f64>), Error> {
    let params = match strategy {
        Strategy::Driving { terms }
            if config.antenna_driving.n_terms() != terms || config.site_n_driving.n_terms() != terms =>
        {
            init_parameters(strategy, config, seed)?
        }
        _ => pack_parameters(strategy, config)?,
    };
    let at = unpack_parameters(strategy, config, &params)?;
    Ok((at, params))
}

/// Largest componentwise relative error of the forward-mode gradient of
/// `I_P(t_l)` against central differences.
pub fn gradient_error(strategy: Strategy, config: &ModelConfig, t_l: f64, dt: f64, seed: u64) -> Result<f64, Error> {
    let (at, p) = gradient_point(strategy, config, seed)?;
    let model = bind_parameters(strategy, &at, &seed_parameters(&p)?)?;
    let grad = gradient(&objective_ip(&model, t_l, dt)?, p.len());
    let value_at = |q: &[f64]| -> Result<f64, Error> {
        let c = unpack_parameters(strategy, &at, q)?;
        Ok(objective_ip(&BoundModel::constant(&c), t_l, dt)?.value)
    };
    let scale = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let mut worst = 0.0f64;
    for k in 0..p.len() {
        let (mut up, mut down) = (p.clone(), p.clone());
        up[k] += FD_STEP;
        down[k] -= FD_STEP;
        let fd = (value_at(&up)? - value_at(&down)?) / (2.0 * FD_STEP);
        // components far below the gradient's scale are compared against that scale
        let rel = (grad[k] - fd).abs() / fd.abs().max(1e-3 * scale).max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
    }
    Ok(worst)
}

fn invariant_check(r: &Resolved) -> Result<(bool, String), Error> {
    let traj = evolve(&r.config, &r.trajectory(), &r.initial_state())?;
    let d = traj.diagnostics;
    let drop = traj.max_sink_decrease();
    let ok = d.max_trace_error <= TRACE_TOLERANCE
        && d.max_hermiticity_error <= HERMITICITY_TOLERANCE
        && d.min_eigenvalue >= EIGENVALUE_FLOOR
        && drop <= 0.0;
    Ok((
        ok,
        format!(
            "T = {}, |tr-1| = {:.2e}, herm = {:.2e}, min eig = {:.2e}, p_sink drop = {:.2e}",
            r.scenario.times.t_end, d.max_trace_error, d.max_hermiticity_error, d.min_eigenvalue, drop
        ),
    ))
}

fn zero_sink_check(r: &Resolved) -> Result<(bool, String), Error> {
    let traj = evolve(&r.config, &r.trajectory(), &r.initial_state())?;
    let max = traj.p_sink().into_iter().fold(0.0f64, f64::max);
    Ok((max == 0.0, format!("max p_sink = {max:e}")))
}

pub fn verify(resolved: &[Resolved]) -> VerifyReport {
    let mut report = VerifyReport::default();
    for r in resolved {
        let name = r.scenario.name.as_str();
        let photon = r.scenario.initial == InitialState::Photon;

        let oracle_size = FullSpaceConfig::new(r.config.clone(), 2);
        if !photon {
            report.skip(name, "oracle", "oracle starts from the photon state only");
        } else if let Err(e) = oracle_size.validate() {
            report.skip(name, "oracle", &e.to_string());
        } else {
            report.push(name, "oracle", oracle_check(r));
        }

        report.push(name, "dt_convergence", convergence_check(r));

        let strategies = match r.scenario.strategy {
            Some(s) => vec![s],
            None => vec![
                Strategy::Driving { terms: 1 },
                Strategy::Couplings,
                Strategy::SiteEnergies,
            ],
        };
        for s in strategies {
            let outcome = gradient_error(s, &r.config, r.scenario.times.t_l, r.dt, r.scenario.master_seed)
                .map(|e| (e < FD_TOLERANCE, format!("max rel error = {e:.3e}")));
            report.push(name, format!("gradient[{s}]"), outcome);
        }

        report.push(name, "invariants", invariant_check(r));
        if r.config.sink_rate == 0.0 && photon {
            report.push(name, "zero_sink", zero_sink_check(r));
        }
    }
    report
}
