//! File formats: trajectory, sweep and ratio CSVs, run manifests and learned
//! parameters.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use exciton_core::dynamics::{ConvergenceReport, Trajectory};
use exciton_core::optimize::{OptimizationResult, Strategy};
use serde::{Deserialize, Serialize};

use crate::scenario::Scenario;
use crate::CliError;

/// Twelve significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn trajectory_header(n_sites: usize) -> String {
    let mut cols = vec!["t".to_string(), "p_rad".into(), "p_ant".into()];
    cols.extend((1..=n_sites).map(|j| format!("p_site_{j}")));
    cols.extend(["p_sink".into(), "trace".into(), "sink_integral".into()]);
    cols.join(",")
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = trajectory_header(traj.basis.n_sites());
    out.push('\n');
    for i in 0..traj.len() {
        let mut row = vec![num(traj.times[i])];
        row.extend(traj.populations[i].iter().map(|&p| num(p)));
        row.push(num(traj.trace[i]));
        row.push(num(traj.sink_integral[i]));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub omega_r: f64,
    pub ip: f64,
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("omega_r,ip\n");
    for p in points {
        let _ = writeln!(out, "{},{}", num(p.omega_r), num(p.ip));
    }
    out
}

/// Largest I_P; the lowest frequency wins ties.
pub fn sweep_argmax(points: &[SweepPoint]) -> Option<SweepPoint> {
    points.iter().copied().fold(None, |best, p| match best {
        Some(b) if b.ip >= p.ip => Some(b),
        _ => Some(p),
    })
}

/// Below this baseline population the ratio field is left empty.
pub const RATIO_FLOOR: f64 = 1e-12;

pub fn ratio_csv(times: &[f64], columns: &[(String, Vec<Option<f64>>)]) -> String {
    let mut out = String::from("t");
    for (name, _) in columns {
        let _ = write!(out, ",ratio_{name}");
    }
    out.push('\n');
    for (i, t) in times.iter().enumerate() {
        out.push_str(&num(*t));
        for (_, values) in columns {
            out.push(',');
            if let Some(v) = values[i] {
                out.push_str(&num(v));
            }
        }
        out.push('\n');
    }
    out
}

pub fn ratios(optimized: &[f64], baseline: &[f64]) -> Vec<Option<f64>> {
    optimized
        .iter()
        .zip(baseline)
        .map(|(&o, &b)| (b >= RATIO_FLOOR).then(|| o / b))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub dt: f64,
    pub coarse: f64,
    pub fine: f64,
    pub rel_diff: f64,
    pub converged: bool,
}

impl From<ConvergenceReport> for ConvergenceRecord {
    fn from(r: ConvergenceReport) -> Self {
        Self {
            dt: r.dt,
            coarse: r.coarse,
            fine: r.fine,
            rel_diff: r.rel_diff,
            converged: r.converged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub scenario: Scenario,
    pub convergence: ConvergenceRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_argmax: Option<SweepPoint>,
}

impl Manifest {
    pub fn new(command: &str, scenario: Scenario, convergence: ConvergenceReport) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            scenario,
            convergence: convergence.into(),
            sweep_argmax: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnedParameters {
    pub scenario: String,
    pub strategy: Strategy,
    /// In pack order.
    pub best_params: Vec<f64>,
    pub best_objective: f64,
    pub unoptimized_objective: f64,
    pub best_restart: usize,
    pub master_seed: u64,
    /// Objective at each iterate, one list per restart.
    pub history: Vec<Vec<f64>>,
}

impl LearnedParameters {
    pub fn new(scenario: &str, result: &OptimizationResult, unoptimized_objective: f64) -> Self {
        Self {
            scenario: scenario.into(),
            strategy: result.strategy,
            best_params: result.best_params.clone(),
            best_objective: result.best_objective,
            unoptimized_objective,
            best_restart: result.best_restart,
            master_seed: result.master_seed,
            history: result.history(),
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serialises");
    s.push('\n');
    s
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_lists_every_site() {
        assert_eq!(
            trajectory_header(2),
            "t,p_rad,p_ant,p_site_1,p_site_2,p_sink,trace,sink_integral"
        );
    }

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(num(1.0 / 3.0), "3.33333333333e-1");
        assert_eq!(num(0.0), "0.00000000000e0");
        let back: f64 = num(std::f64::consts::PI).parse().unwrap();
        assert!((back - std::f64::consts::PI).abs() < 5e-12);
    }

    #[test]
    fn small_baselines_leave_empty_fields() {
        let r = ratios(&[0.0, 0.2, 0.3], &[0.0, 1e-13, 0.1]);
        assert_eq!(r[0], None);
        assert_eq!(r[1], None);
        assert!((r[2].unwrap() - 3.0).abs() < 1e-15);
        let csv = ratio_csv(&[0.0, 1.0, 2.0], &[("a".into(), r)]);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "t,ratio_a");
        assert_eq!(lines[1], "0.00000000000e0,");
    }

    #[test]
    fn argmax_prefers_lowest_frequency_on_ties() {
        let pts = [
            SweepPoint { omega_r: 0.1, ip: 1.0 },
            SweepPoint { omega_r: 0.2, ip: 2.0 },
            SweepPoint { omega_r: 0.3, ip: 2.0 },
        ];
        assert_eq!(sweep_argmax(&pts).unwrap().omega_r, 0.2);
        assert_eq!(sweep_argmax(&[]), None);
    }
}
