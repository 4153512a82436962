use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rlfa_cli::{output_root, run_scenario, sweep, Axis, CliError, ScenarioConfig};

/// Runs named experiments from JSON configs. Artifacts go under the
/// directory named by RLFA_OUTPUT (default `rlfa-output`).
#[derive(Parser)]
#[command(name = "rlfa", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a scenario over every value of one config key.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// `name=v1,v2,...`; dotted names reach nested keys.
        #[arg(long)]
        axis: String,
        /// Seeds per axis value, counting up from the config seed.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
    },
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run { config } => {
            let cfg = ScenarioConfig::load(&config)?;
            let artifact = run_scenario(&cfg)?;
            let dir = output_root().join(cfg.output_name());
            artifact.write(&dir)?;
            println!("{} = {}", artifact.summary.headline, artifact.summary.value);
            if let Some(a) = artifact.assertions {
                println!("assertions: {}/{} passed", a.passed, a.total);
            }
            println!("artifacts: {}", dir.display());
            match artifact.assertions {
                Some(a) if !a.all_passed() => Err(CliError::Assertion(format!(
                    "{} of {} checks failed",
                    a.total - a.passed,
                    a.total
                ))),
                _ => Ok(0),
            }
        }
        Command::Sweep { config, axis, seeds } => {
            let axis = Axis::parse(&axis)?;
            let text = std::fs::read_to_string(&config)
                .map_err(|e| CliError::config(format!("cannot read config {}: {e}", config.display())))?;
            let template: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| CliError::config(format!("invalid JSON: {e}")))?;
            let base = ScenarioConfig::from_value(template.clone())?;
            if seeds == 0 {
                return Err(CliError::config("--seeds must be positive"));
            }
            let seed_list: Vec<u64> = (0..seeds).map(|i| base.seed.wrapping_add(i)).collect();
            let result = sweep(&template, &axis, &seed_list)?;
            let name = base
                .output
                .clone()
                .unwrap_or_else(|| format!("{}-sweep-{}", base.kind(), axis.name));
            let dir = output_root().join(name);
            result.write(&dir)?;
            print!("{}", String::from_utf8_lossy(&result.aggregate.to_csv()?));
            println!("artifacts: {}", dir.display());
            Ok(result.exit_code())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("rlfa: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
