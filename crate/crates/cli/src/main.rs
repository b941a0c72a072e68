use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pilotwave_cli::{run_text, schema, validate_text, Failure, RunOptions, EXIT_OK, EXIT_RESOURCE};

#[derive(Parser)]
#[command(name = "pilotwave", version, about = "Runs Bohmian-trajectory scenarios described in TOML files")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its outputs.
    Run {
        config: PathBuf,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Compare unravellings against the exact partial-trace oracle.
        #[arg(long)]
        oracle: bool,
    },
    /// Check a scenario file and report every problem.
    Validate { config: PathBuf },
    /// Print the scenario file schema.
    Schema,
}

fn read(path: &PathBuf) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|error| Failure::Io { path: path.clone(), error })
}

fn exit(code: i32) -> ExitCode {
    ExitCode::from(code as u8)
}

fn report_failure(f: &Failure) -> ExitCode {
    eprintln!("error: {f}");
    exit(f.exit_code())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Schema => {
            print!("{}", schema::render());
            exit(EXIT_OK)
        }
        Command::Validate { config } => match read(&config).and_then(|t| validate_text(&t)) {
            Ok(cfg) => {
                for w in &cfg.warnings {
                    eprintln!("warning: {w}");
                }
                println!("{}: valid {} scenario", config.display(), cfg.kind);
                exit(EXIT_OK)
            }
            Err(f) => report_failure(&f),
        },
        Command::Run { config, seed, out, oracle } => {
            let text = match read(&config) {
                Ok(t) => t,
                Err(f) => return report_failure(&f),
            };
            let base = config.parent().map(PathBuf::from).unwrap_or_default();
            let opts = RunOptions { seed, out, oracle, base };
            match run_text(&text, &opts) {
                Ok(report) => {
                    log::info!("{} files written for {} (config {})", report.outputs.len(), config.display(), report.config_hash);
                    for w in &report.warnings {
                        eprintln!("warning: {w}");
                    }
                    match serde_json::to_string_pretty(&report.summary) {
                        Ok(s) => println!("{s}"),
                        Err(_) => return exit(EXIT_RESOURCE),
                    }
                    exit(EXIT_OK)
                }
                Err(f) => report_failure(&f),
            }
        }
    }
}
