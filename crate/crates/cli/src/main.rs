use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use rmcf_cli::commands;
use rmcf_cli::verify;
use rmcf_cli::{CliError, Result, RunConfig};

#[derive(Parser)]
#[command(name = "rmcf", version, about = "Rescaled mean curvature flow of radial graphs")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override a configuration key, e.g. `--set dt=5e-4` or `--set b.0=1e-3`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalue table for levels 0..=J_max.
    Spectrum,
    /// Integrate the flow from amplitude * Y_mode and fit per-level decay rates.
    Evolve,
    /// Find the stable-manifold solution whose level-k limit is b.
    Construct,
    /// Arrival-time samples and expansion fit for a stored trajectory.
    Arrival {
        #[arg(long)]
        trajectory: PathBuf,
    },
    /// Run the acceptance suite.
    Verify,
}

fn run(cli: Cli) -> Result<()> {
    let config = RunConfig::load(cli.config.as_deref(), &cli.overrides)?;
    info!("output directory {}", config.out_dir.display());
    match cli.command {
        Command::Spectrum => {
            let path = commands::spectrum(&config)?;
            println!("wrote {}", path.display());
        }
        Command::Evolve => {
            let out = commands::run_evolve(&config)?;
            println!(
                "{} samples to s = {}",
                out.trajectory.len(),
                out.trajectory.end_time()
            );
            for row in &out.rates {
                println!("level {}: rate {:.6} (expected {:.6})", row.level, row.fit.rate, row.expected);
            }
        }
        Command::Construct => {
            let report = commands::run_construct(&config)?;
            println!(
                "converged = {}, residual {:.3e}, shift {}",
                report.converged, report.residual, report.shift
            );
        }
        Command::Arrival { trajectory } => {
            let report = commands::run_arrival(&config, &trajectory)?;
            match &report.fit {
                Some(fit) => println!("gamma {:.5}, c {:.5}", fit.gamma, fit.c),
                None => println!("exact ball: {}", report.exact_ball),
            }
        }
        Command::Verify => {
            let mut results = Vec::new();
            for id in 1..=verify::TITLES.len() as u32 {
                let result = verify::run(id);
                println!("{}", result.line());
                results.push(result);
            }
            let path = config.out_dir.join("verify.json");
            std::fs::create_dir_all(&config.out_dir).map_err(|e| CliError::io(&config.out_dir, e))?;
            let text = serde_json::to_string_pretty(&results)? + "\n";
            std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
            let failed = results.iter().filter(|r| !r.pass).count();
            if failed > 0 {
                return Err(CliError::Criteria {
                    failed,
                    total: results.len(),
                });
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
