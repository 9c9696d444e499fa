//! `asl`: runs the representation experiments and writes CSV/JSON reports.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use asl_core::verify::Fault;
use asl_core::{ActorConfig, LineConfig, PolicySupport, RolloutConfig};
use clap::{Parser, Subcommand, ValueEnum};

use crate::config::{ExperimentConfig, SCHEMA_VERSION};
use crate::error::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "asl", version, about = "Exact information analysis of goal representations")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[arg(long, global = true, default_value_t = 4)]
    grid_size: u8,
    #[arg(long, global = true, default_value_t = 2000)]
    library_size: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Rollout tasks per representation.
    #[arg(long, global = true, default_value_t = 600)]
    tasks: usize,
    /// Rollouts per task.
    #[arg(long, global = true, default_value_t = 50)]
    rollouts: usize,
    /// Horizon slack over the optimal distance.
    #[arg(long, global = true, default_value_t = 6)]
    margin: u32,
    /// Horizon cap.
    #[arg(long, global = true, default_value_t = 30)]
    cap: u32,
    /// Goals averaged into the mixed policy.
    #[arg(long, global = true, value_enum, default_value_t = Support::Reachable)]
    policy_support: Support,
    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, env = "ASL_OUT_DIR", default_value = "out")]
    out_dir: PathBuf,
    /// Roll out only this many library specs, stratified by template.
    #[arg(long, global = true)]
    rollout_subset: Option<usize>,
    /// Also train a tabular actor for every library spec.
    #[arg(long, global = true)]
    train_actors: bool,
    /// Library specs trained by the `actor` command.
    #[arg(long, global = true, default_value_t = 50)]
    actor_specs: usize,
    /// Value-information threshold for the near-sufficient summary.
    #[arg(long, global = true, default_value_t = 0.2)]
    threshold: f64,
    #[arg(long, global = true, default_value_t = 10)]
    line_radius: i64,
    #[arg(long, global = true, default_value_t = 0.9)]
    line_gamma: f64,
    #[arg(long, global = true, default_value_t = 10)]
    line_horizon: u32,
    #[arg(long, global = true, default_value_t = 200)]
    line_rollouts: usize,
    #[arg(long, global = true, hide = true, env = "ASL_INJECT_FAULT")]
    inject_fault: Option<FaultArg>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Environment counts.
    EnvReport,
    /// Information, rollout and actor metrics of the four baselines.
    Baselines,
    /// Metrics of the random representation library (resumable).
    Library,
    /// Rollout success of the baselines and the library.
    Rollout,
    /// Actor training on the baselines and the first library specs.
    Actor,
    /// The integer-line example.
    Line1d,
    /// Runs every identity, bound and cross-check.
    Verify,
    /// env-report, baselines, library, line1d and verify.
    All,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Support {
    Reachable,
    Filtered,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum FaultArg {
    Distance,
}

impl Cli {
    fn config(&self) -> ExperimentConfig {
        ExperimentConfig {
            schema: SCHEMA_VERSION,
            grid_size: self.grid_size,
            library_size: self.library_size,
            seed: self.seed,
            rollout: RolloutConfig {
                n_tasks: self.tasks,
                n_rollouts_per_task: self.rollouts,
                margin: self.margin,
                horizon_cap: self.cap,
                seed: self.seed,
                support: match self.policy_support {
                    Support::Reachable => PolicySupport::Reachable,
                    Support::Filtered => PolicySupport::Filtered,
                },
            },
            rollout_subset: self.rollout_subset,
            train_actors: self.train_actors,
            actor_specs: self.actor_specs,
            actor: ActorConfig::default(),
            value_sufficiency_threshold: self.threshold,
            line: LineConfig {
                radius: self.line_radius,
                gamma: self.line_gamma,
                horizon: self.line_horizon,
                rollouts_per_task: self.line_rollouts,
                seed: self.seed,
            },
            out_dir: self.out_dir.clone(),
        }
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
    }
    let cfg = cli.config();
    cfg.validate()?;
    let fault = cli.inject_fault.map(|FaultArg::Distance| Fault::Distance);
    match cli.command {
        Command::EnvReport => commands::env_report(&cfg),
        Command::Baselines => commands::baselines_cmd(&cfg),
        Command::Library => commands::library(&cfg),
        Command::Rollout => commands::rollout(&cfg),
        Command::Actor => commands::actor(&cfg),
        Command::Line1d => commands::line1d(&cfg),
        Command::Verify => commands::verify(&cfg, fault),
        Command::All => commands::all(&cfg, fault),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
