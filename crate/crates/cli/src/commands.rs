use std::collections::HashMap;
use std::path::{Path, PathBuf};

use exciton_core::dynamics::{dt_convergence, evolve, integrated_sink, ConvergenceReport, Trajectory};
use exciton_core::model::ModelConfig;
use exciton_core::optimize::{optimize, OptimizationResult, OptimizeSettings};
use exciton_core::Error;
use rayon::prelude::*;

use crate::output::{
    ratio_csv, ratios, sweep_argmax, sweep_csv, to_json, trajectory_csv, write_file, LearnedParameters, Manifest,
    SweepPoint,
};
use crate::scenario::{Resolved, Scenario};
use crate::CliError;

/// Command-line overrides applied to every scenario before it is resolved.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub iterations: Option<usize>,
    pub restarts: Option<usize>,
    /// Refuse to run when `dt` fails the halved-step check.
    pub strict_convergence: bool,
}

impl RunOptions {
    pub fn apply(&self, scenario: &Scenario) -> Scenario {
        let mut s = scenario.clone();
        if let Some(seed) = self.seed {
            s.master_seed = seed;
        }
        if let Some(iterations) = self.iterations {
            s.adam.iterations = iterations;
        }
        if let Some(restarts) = self.restarts {
            s.restarts = restarts;
        }
        s
    }

    pub fn resolve_all(&self, scenarios: &[Scenario]) -> Result<Vec<Resolved>, CliError> {
        scenarios
            .iter()
            .map(|s| {
                self.apply(s).resolve().map_err(|e| match e {
                    Error::Config { field, message } => CliError::Scenario {
                        scenario: s.name.clone(),
                        source: Error::Config { field, message },
                    },
                    other => CliError::Core(other),
                })
            })
            .collect()
    }

    fn check_convergence(&self, name: &str, report: &ConvergenceReport) -> Result<(), CliError> {
        if self.strict_convergence && !report.converged {
            return Err(CliError::NotConverged {
                scenario: name.into(),
                dt: report.dt,
                rel_diff: report.rel_diff,
            });
        }
        Ok(())
    }
}

pub fn simulate(resolved: &Resolved, config: &ModelConfig) -> Result<Trajectory, Error> {
    evolve(config, &resolved.trajectory(), &resolved.initial_state())
}

fn convergence(resolved: &Resolved, config: &ModelConfig) -> Result<ConvergenceReport, Error> {
    dt_convergence(config, resolved.scenario.times.t_l, resolved.dt)
}

/// Outcome of optimising one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizedRun {
    pub result: OptimizationResult,
    pub unoptimized_objective: f64,
    pub learned: ModelConfig,
}

pub fn optimize_scenario(resolved: &Resolved) -> Result<OptimizedRun, Error> {
    let strategy = resolved
        .scenario
        .strategy
        .ok_or_else(|| Error::config("strategy", "optimize needs a strategy"))?;
    let times = &resolved.scenario.times;
    let settings = OptimizeSettings {
        adam: resolved.adam,
        horizon: times.t_l,
        dt: resolved.dt,
        restarts: resolved.scenario.restarts,
        master_seed: resolved.scenario.master_seed,
    };
    let result = optimize(&resolved.config, strategy, &settings)?;
    let unoptimized_objective = integrated_sink(&resolved.config, times.t_l, resolved.dt)?;
    let learned = resolved.with_params(&result.best_params)?;
    Ok(OptimizedRun {
        result,
        unoptimized_objective,
        learned,
    })
}

pub fn sweep(resolved: &Resolved) -> Result<Vec<SweepPoint>, Error> {
    let grid = resolved
        .scenario
        .sweep
        .ok_or_else(|| Error::config("sweep", "scenario has no sweep grid"))?;
    let t_l = resolved.scenario.times.t_l;
    grid.points()?
        .into_par_iter()
        .map(|omega_r| {
            let config = ModelConfig {
                omega_r,
                ..resolved.config.clone()
            };
            integrated_sink(&config, t_l, resolved.dt).map(|ip| SweepPoint { omega_r, ip })
        })
        .collect()
}

fn manifest_for(
    command: &str,
    resolved: &Resolved,
    config: &ModelConfig,
    options: &RunOptions,
) -> Result<Manifest, CliError> {
    let report = convergence(resolved, config)?;
    options.check_convergence(&resolved.scenario.name, &report)?;
    Ok(Manifest::new(command, resolved.scenario.clone(), report))
}

pub fn run_simulate(scenarios: &[Scenario], out: &Path, options: &RunOptions) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    for r in options.resolve_all(scenarios)? {
        let manifest = manifest_for("simulate", &r, &r.config, options)?;
        let traj = simulate(&r, &r.config)?;
        let name = &r.scenario.name;
        written.push(write_file(
            out,
            &format!("{name}.trajectory.csv"),
            &trajectory_csv(&traj),
        )?);
        written.push(write_file(out, &format!("{name}.manifest.json"), &to_json(&manifest))?);
    }
    Ok(written)
}

fn write_optimized(
    out: &Path,
    r: &Resolved,
    run: &OptimizedRun,
    options: &RunOptions,
) -> Result<Vec<PathBuf>, CliError> {
    let name = &r.scenario.name;
    let manifest = manifest_for("optimize", r, &run.learned, options)?;
    let traj = simulate(r, &run.learned)?;
    let params = LearnedParameters::new(name, &run.result, run.unoptimized_objective);
    Ok(vec![
        write_file(out, &format!("{name}.params.json"), &to_json(&params))?,
        write_file(out, &format!("{name}.optimized.csv"), &trajectory_csv(&traj))?,
        write_file(out, &format!("{name}.manifest.json"), &to_json(&manifest))?,
    ])
}

/// Optimise every scenario of the set that names a strategy.
pub fn run_optimize(scenarios: &[Scenario], out: &Path, options: &RunOptions) -> Result<Vec<PathBuf>, CliError> {
    let resolved: Vec<Resolved> = options
        .resolve_all(scenarios)?
        .into_iter()
        .filter(|r| r.scenario.strategy.is_some())
        .collect();
    if resolved.is_empty() {
        return Err(CliError::Core(Error::config(
            "strategy",
            "no scenario in the set names a strategy",
        )));
    }
    let mut written = Vec::new();
    for r in &resolved {
        let run = optimize_scenario(r)?;
        written.extend(write_optimized(out, r, &run, options)?);
    }
    Ok(written)
}

pub fn run_sweep(scenarios: &[Scenario], out: &Path, options: &RunOptions) -> Result<Vec<PathBuf>, CliError> {
    let resolved: Vec<Resolved> = options
        .resolve_all(scenarios)?
        .into_iter()
        .filter(|r| r.scenario.sweep.is_some())
        .collect();
    if resolved.is_empty() {
        return Err(CliError::Core(Error::config(
            "sweep",
            "no scenario in the set has a sweep grid",
        )));
    }
    let mut written = Vec::new();
    for r in &resolved {
        let mut manifest = manifest_for("sweep", r, &r.config, options)?;
        let points = sweep(r)?;
        manifest.sweep_argmax = sweep_argmax(&points);
        let name = &r.scenario.name;
        if let Some(best) = manifest.sweep_argmax {
            println!("{name}: argmax omega_r = {} (I_P = {})", best.omega_r, best.ip);
        }
        written.push(write_file(out, &format!("{name}.sweep.csv"), &sweep_csv(&points))?);
        written.push(write_file(out, &format!("{name}.manifest.json"), &to_json(&manifest))?);
    }
    Ok(written)
}

/// p_sink records of a compare member and of the baseline it is divided by.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareColumn {
    pub name: String,
    pub baseline: String,
    pub times: Vec<f64>,
    pub member: Vec<f64>,
    pub reference: Vec<f64>,
}

/// Baseline indices, and (member, baseline) index pairs.
pub type Roles = (Vec<usize>, Vec<(usize, usize)>);

/// Split a set into baselines and members. The first scenario is always a
/// baseline, as is any scenario named in another's `baseline` field.
pub fn compare_roles(scenarios: &[Scenario]) -> Result<Roles, Error> {
    if scenarios.len() < 2 {
        return Err(Error::config(
            "scenario",
            "compare needs a baseline and at least one member",
        ));
    }
    let index: HashMap<&str, usize> = scenarios
        .iter()
        .enumerate()
        .map(|(i, s)| (s.name.as_str(), i))
        .collect();
    if index.len() != scenarios.len() {
        return Err(Error::config("name", "scenario names in a compare set must be unique"));
    }
    let mut baselines = vec![0];
    for s in scenarios {
        if let Some(b) = &s.baseline {
            let &i = index
                .get(b.as_str())
                .ok_or_else(|| Error::config("baseline", format!("no scenario named '{b}' in the set")))?;
            if !baselines.contains(&i) {
                baselines.push(i);
            }
        }
    }
    baselines.sort_unstable();
    let members = (0..scenarios.len())
        .filter(|i| !baselines.contains(i))
        .map(|i| {
            let b = scenarios[i].baseline.as_deref().map_or(0, |b| index[b]);
            (i, b)
        })
        .collect::<Vec<_>>();
    if members.is_empty() {
        return Err(Error::config(
            "baseline",
            "every scenario is a baseline; nothing to compare",
        ));
    }
    Ok((baselines, members))
}

/// Everything `compare` computes, before it is written out.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub columns: Vec<CompareColumn>,
    pub optimized: Vec<(String, OptimizedRun)>,
}

pub fn compare(scenarios: &[Scenario], options: &RunOptions) -> Result<Comparison, CliError> {
    let resolved = options.resolve_all(scenarios)?;
    let (baselines, members) = compare_roles(scenarios)?;

    let base_runs: Vec<(usize, Trajectory)> = baselines
        .par_iter()
        .map(|&i| simulate(&resolved[i], &resolved[i].config).map(|t| (i, t)))
        .collect::<Result<_, _>>()?;
    let member_runs: Vec<(usize, Trajectory, Option<OptimizedRun>)> = members
        .par_iter()
        .map(|&(i, _)| {
            let r = &resolved[i];
            if r.scenario.strategy.is_some() {
                let run = optimize_scenario(r)?;
                let traj = simulate(r, &run.learned)?;
                Ok((i, traj, Some(run)))
            } else {
                simulate(r, &r.config).map(|t| (i, t, None))
            }
        })
        .collect::<Result<_, Error>>()?;

    let reference = &base_runs[0].1.times;
    let same_grid =
        |t: &Trajectory| t.times.len() == reference.len() && t.times.iter().zip(reference).all(|(a, b)| a == b);
    if !base_runs.iter().all(|(_, t)| same_grid(t)) || !member_runs.iter().all(|(_, t, _)| same_grid(t)) {
        return Err(CliError::Core(Error::config(
            "times",
            "compare members must share dt, t_end and record_stride",
        )));
    }

    let mut columns = Vec::new();
    let mut optimized = Vec::new();
    for ((i, traj, run), &(_, b)) in member_runs.into_iter().zip(&members) {
        let base = &base_runs.iter().find(|(j, _)| *j == b).expect("baseline simulated").1;
        columns.push(CompareColumn {
            name: scenarios[i].name.clone(),
            baseline: scenarios[b].name.clone(),
            times: traj.times.clone(),
            member: traj.p_sink(),
            reference: base.p_sink(),
        });
        if let Some(run) = run {
            optimized.push((scenarios[i].name.clone(), run));
        }
    }
    Ok(Comparison { columns, optimized })
}

pub fn run_compare(
    set_name: &str,
    scenarios: &[Scenario],
    out: &Path,
    options: &RunOptions,
) -> Result<Vec<PathBuf>, CliError> {
    let cmp = compare(scenarios, options)?;
    let mut written = Vec::new();
    for (name, run) in &cmp.optimized {
        let params = LearnedParameters::new(name, &run.result, run.unoptimized_objective);
        written.push(write_file(out, &format!("{name}.params.json"), &to_json(&params))?);
    }
    let cols: Vec<(String, Vec<Option<f64>>)> = cmp
        .columns
        .iter()
        .map(|c| (c.name.clone(), ratios(&c.member, &c.reference)))
        .collect();
    let times = &cmp.columns[0].times;
    written.push(write_file(
        out,
        &format!("{set_name}.compare.csv"),
        &ratio_csv(times, &cols),
    )?);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn named(name: &str, baseline: Option<&str>) -> Scenario {
        Scenario {
            baseline: baseline.map(String::from),
            ..Scenario::named(name)
        }
    }

    #[test]
    fn first_scenario_is_the_default_baseline() {
        let set = [named("a", None), named("b", None), named("c", None)];
        let (b, m) = compare_roles(&set).unwrap();
        assert_eq!(b, vec![0]);
        assert_eq!(m, vec![(1, 0), (2, 0)]);
    }

    #[test]
    fn named_baselines_pair_up() {
        let set = [
            named("a", None),
            named("b", Some("a")),
            named("c", None),
            named("d", Some("c")),
        ];
        let (b, m) = compare_roles(&set).unwrap();
        assert_eq!(b, vec![0, 2]);
        assert_eq!(m, vec![(1, 0), (3, 2)]);
    }

    #[test]
    fn bad_sets_are_rejected() {
        assert!(compare_roles(&[named("a", None)]).is_err());
        assert!(compare_roles(&[named("a", None), named("b", Some("zz"))]).is_err());
        assert!(compare_roles(&[named("a", None), named("a", None)]).is_err());
    }

    #[test]
    fn overrides_apply() {
        let opts = RunOptions {
            seed: Some(9),
            iterations: Some(3),
            restarts: Some(2),
            strict_convergence: false,
        };
        let s = opts.apply(&Scenario::named("x"));
        assert_eq!((s.master_seed, s.adam.iterations, s.restarts), (9, 3, 2));
    }
}
