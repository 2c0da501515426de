use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use exciton_cli::commands::{run_compare, run_optimize, run_simulate, run_sweep, RunOptions};
use exciton_cli::presets::preset;
use exciton_cli::scenario::{load_scenarios, Scenario};
use exciton_cli::verify::verify;
use exciton_cli::{CliError, EXIT_CONFIG, EXIT_OK};
use exciton_core::Error;

#[derive(Parser)]
#[command(
    name = "exciton",
    version,
    about = "Exciton transport through driven open quantum networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve each scenario and write its trajectory.
    Simulate(Common),
    /// Learn parameters for each scenario with a strategy.
    Optimize(Common),
    /// Scan the radiation frequency and report the best one.
    Sweep(Common),
    /// Ratio of optimised to baseline sink population over time.
    Compare(Common),
    /// Oracle, convergence, gradient and invariant checks.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario JSON: one object or a list.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    scenario: Option<PathBuf>,
    /// Built-in scenario set, e.g. fig2bc.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory; defaults to the scenario's output_dir, then ./out.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed for optimiser restarts.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Fail when dt does not pass the halved-step check.
    #[arg(long)]
    strict_convergence: bool,
    /// Override Adam iterations for every scenario.
    #[arg(long)]
    iterations: Option<usize>,
    /// Override the number of restarts for every scenario.
    #[arg(long)]
    restarts: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<(String, Vec<Scenario>), CliError> {
        match (&self.preset, &self.scenario) {
            (Some(name), _) => Ok((name.clone(), preset(name)?)),
            (None, Some(path)) => {
                let stem = path
                    .file_stem()
                    .map_or("scenario".into(), |s| s.to_string_lossy().into_owned());
                Ok((stem, load_scenarios(path)?))
            }
            (None, None) => Err(Error::config("scenario", "give --scenario or --preset").into()),
        }
    }

    fn options(&self) -> RunOptions {
        RunOptions {
            seed: self.seed,
            iterations: self.iterations,
            restarts: self.restarts,
            strict_convergence: self.strict_convergence,
        }
    }

    fn out_dir(&self, scenarios: &[Scenario]) -> PathBuf {
        self.out
            .clone()
            .or_else(|| scenarios[0].output_dir.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| Path::new("out").to_path_buf())
    }
}

fn run(command: Command) -> Result<(), CliError> {
    let (kind, common) = match &command {
        Command::Simulate(c) => ("simulate", c),
        Command::Optimize(c) => ("optimize", c),
        Command::Sweep(c) => ("sweep", c),
        Command::Compare(c) => ("compare", c),
        Command::Verify(c) => ("verify", c),
    };
    let (set_name, scenarios) = common.load()?;
    let options = common.options();
    let out = common.out_dir(&scenarios);

    let job = || -> Result<(), CliError> {
        let written = match kind {
            "simulate" => run_simulate(&scenarios, &out, &options)?,
            "optimize" => run_optimize(&scenarios, &out, &options)?,
            "sweep" => run_sweep(&scenarios, &out, &options)?,
            "compare" => run_compare(&set_name, &scenarios, &out, &options)?,
            _ => {
                let report = verify(&options.resolve_all(&scenarios)?);
                print!("{report}");
                if !report.passed() {
                    return Err(CliError::VerifyFailed {
                        failures: report.failures(),
                    });
                }
                Vec::new()
            }
        };
        for path in written {
            println!("wrote {}", path.display());
        }
        Ok(())
    };

    match common.threads {
        Some(0) => Err(Error::config("threads", "must be at least 1").into()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Core(Error::config("threads", e.to_string())))?
            .install(job),
        None => job(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                EXIT_CONFIG as u8
            } else {
                EXIT_OK as u8
            });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
