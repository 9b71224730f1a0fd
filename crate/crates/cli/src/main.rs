use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use trapnoise_cli::{presets, run, CliError, Command, RunConfig};

#[derive(Parser)]
#[command(name = "trapnoise", version, about = "Correlated surface-noise calculations for trapped ions")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Self and cross noise versus ion separation or height
    Sweep(RunArgs),
    /// Single-ion noise versus height, with local power-law exponents
    Scaling(RunArgs),
    /// Mode-resolved noise of an N-ion chain versus spacing
    Chain(RunArgs),
    /// Compare the deterministic noise matrix with a sampled ensemble
    OracleCheck(RunArgs),
    /// List the shipped configs, or print one
    Presets {
        #[arg(long)]
        show: Option<String>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML config, or a JSON sidecar from an earlier run
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Name of a shipped config (see `trapnoise presets`)
    #[arg(long)]
    preset: Option<String>,
    /// Output directory (overrides output.dir)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid nodes per unit length (overrides grid.resolution)
    #[arg(long)]
    resolution: Option<f64>,
}

fn load(args: &RunArgs) -> Result<RunConfig, CliError> {
    let mut config = match (&args.config, &args.preset) {
        (Some(path), _) => RunConfig::load(path)?,
        (None, Some(name)) => {
            let shipped = presets::find(name).ok_or_else(|| CliError::Config(format!("unknown preset {name:?}")))?;
            RunConfig::from_toml(shipped.toml)?
        }
        (None, None) => return Err(CliError::Config("one of --config or --preset is required".into())),
    };
    if let Some(dir) = &args.out {
        config.output.dir = dir.clone();
    }
    if let Some(r) = args.resolution {
        config.grid.resolution = Some(r);
    }
    config.resolve()
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot set thread count: {e}")))?;
    }
    let (command, args) = match cli.command {
        Sub::Sweep(a) => (Command::Sweep, a),
        Sub::Scaling(a) => (Command::Scaling, a),
        Sub::Chain(a) => (Command::Chain, a),
        Sub::OracleCheck(a) => (Command::OracleCheck, a),
        Sub::Presets { show: Some(name) } => {
            let shipped = presets::find(&name).ok_or_else(|| CliError::Config(format!("unknown preset {name:?}")))?;
            print!("{}", shipped.toml);
            return Ok(true);
        }
        Sub::Presets { show: None } => {
            for p in presets::SHIPPED {
                println!("{:<12} {:<8} {}", p.name, p.command, p.summary);
            }
            return Ok(true);
        }
    };
    let config = load(&args)?;
    let outcome = run(command, &config, &config.output.dir)?;
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    if !outcome.passed {
        eprintln!("oracle check failed");
    }
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
