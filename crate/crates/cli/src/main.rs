use std::path::PathBuf;
use std::process::ExitCode;

use breather_cli::config::{apply_env, apply_override, from_table, parse_document};
use breather_cli::{Pipeline, Stage};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "breather", version, about = "Polychromatic breathers of the cubic Klein-Gordon equation")]
struct Cli {
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// With `pipeline`: last stage to run.
    #[arg(long, global = true)]
    stage: Option<Stage>,
    /// KEY=VALUE, applied after the file and the environment.
    #[arg(long = "override", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Shoot the ground state and check nondegeneracy.
    GroundState,
    /// Far-field phases of the linearized modes and the phase plan.
    Phases,
    /// Kernel, spectral gap and transversality at the bifurcation point.
    Kernel,
    /// Continue the bifurcating branch.
    Branch,
    /// Assemble and verify the breathers.
    Verify,
    /// All stages in order (default).
    Pipeline,
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let cfg = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let pipeline = match Pipeline::new(cfg) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let result = match cli.command.unwrap_or(Command::Pipeline) {
        Command::GroundState => pipeline.run_stage(Stage::GroundState),
        Command::Phases => pipeline.run_stage(Stage::Phases),
        Command::Kernel => pipeline.run_stage(Stage::Kernel),
        Command::Branch => pipeline.run_stage(Stage::Branch),
        Command::Verify => pipeline.run_stage(Stage::Verify),
        Command::Pipeline => pipeline.run(cli.stage.unwrap_or(Stage::Verify)),
    };
    match result {
        Ok(()) => {
            println!("ok: outputs in {}", pipeline.cfg.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(cli: &Cli) -> Result<breather_cli::SolverConfig, breather_cli::ConfigError> {
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| breather_cli::ConfigError::Invalid {
            field: "config".into(),
            reason: format!("{}: {e}", path.display()),
        })?,
        None => String::new(),
    };
    let mut table = parse_document(&text)?;
    apply_env(&mut table, std::env::vars());
    for o in &cli.overrides {
        apply_override(&mut table, o)?;
    }
    if let Some(out) = &cli.out {
        table.insert("out".into(), toml::Value::String(out.display().to_string()));
    }
    from_table(&table)
}
