use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use leray_rom::config::PipelineConfig;
use leray_rom::pipeline::{self, Outcome, StageDirs};
use leray_rom::Error;

/// Leray / Evolve-Filter full-order solver and POD-Galerkin reduced models.
#[derive(Parser, Debug)]
#[command(name = "leray-rom", version)]
struct Cli {
    /// Configuration file (`[section]` and `key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override a setting, e.g. `--set physics.alpha=0.005`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,

    /// Workspace directory (overrides `workspace.dir`).
    #[arg(long, global = true)]
    workspace: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate or import the mesh.
    Mesh,
    /// Run the full-order model and store snapshots.
    Fom,
    /// Lifting function and POD bases.
    Pod,
    /// Project the operators onto the bases.
    Offline,
    /// Integrate the reduced model.
    Online,
    /// Compare reduced and full-order solutions.
    Report,
    /// Every stage from mesh to report.
    Run,
    /// Filter-radius sweep with pooled training snapshots.
    Sweep {
        /// Concurrent full-order runs.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Print the resolved configuration.
    Config,
}

fn run(cli: Cli) -> Result<(), Error> {
    let cfg = PipelineConfig::load(cli.config.as_deref(), &cli.set)?;
    let root = cli.workspace.clone().unwrap_or_else(|| cfg.workspace.clone());
    let dirs = StageDirs::standard(&root);
    let outcome = match cli.command {
        Command::Config => {
            print!("{}", cfg.to_text());
            return Ok(());
        }
        Command::Mesh => pipeline::stage_mesh(&cfg, &dirs)?,
        Command::Fom => pipeline::stage_fom(&cfg, &dirs)?,
        Command::Pod => pipeline::stage_pod(&cfg, &dirs)?,
        Command::Offline => pipeline::stage_offline(&cfg, &dirs)?,
        Command::Online => pipeline::stage_online(&cfg, &dirs)?,
        Command::Report => {
            let o = pipeline::stage_report(&cfg, &dirs)?;
            if let Ok(s) = std::fs::read_to_string(dirs.report.join("summary.txt")) {
                print!("{s}");
            }
            o
        }
        Command::Run => {
            pipeline::run_all(&cfg, &root)?;
            Outcome::Ran
        }
        Command::Sweep { jobs } => {
            if jobs == 0 {
                return Err(Error::config("--jobs must be at least 1"));
            }
            pipeline::stage_sweep(&cfg, &root, jobs)?
        }
    };
    if outcome == Outcome::UpToDate {
        eprintln!("up to date");
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
