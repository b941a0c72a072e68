//! Scenario runner: parses TOML scenario files, runs them through the
//! pilotwave modules and writes hashed CSV outputs plus a JSON report.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod build;
pub mod config;
pub mod output;
pub mod scenarios;
pub mod schema;

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{parse_config, ConfigErrors, Kind, ScenarioConfig, Task};
pub use output::RunReport;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;

/// Command-line overrides of a scenario file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub oracle: bool,
    /// Directory that relative snapshot paths resolve against.
    pub base: PathBuf,
}

#[derive(Debug)]
pub enum Failure {
    Config(ConfigErrors),
    Scenario { kind: Kind, error: pilotwave::Error },
    Io { path: PathBuf, error: std::io::Error },
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_VALIDATION,
            Failure::Scenario { error, .. } => match error {
                pilotwave::Error::Configuration(_) | pilotwave::Error::Range(_) => EXIT_VALIDATION,
                pilotwave::Error::Numerical { .. } | pilotwave::Error::Evaluation(_) | pilotwave::Error::Regime(_) => EXIT_NUMERICAL,
                pilotwave::Error::Resource(_) => EXIT_RESOURCE,
            },
            Failure::Io { .. } => EXIT_RESOURCE,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(errs) => write!(f, "invalid scenario:\n{errs}"),
            Failure::Scenario { kind, error } => write!(f, "scenario '{kind}': {error}"),
            Failure::Io { path, error } => write!(f, "{}: {error}", path.display()),
        }
    }
}

impl std::error::Error for Failure {}

/// Hash of the scenario text together with the effective overrides.
pub fn config_hash(text: &str, seed: u64, oracle: bool) -> String {
    output::sha256_hex(format!("{text}\n#seed={seed}\n#oracle={oracle}\n").as_bytes())
}

/// Parses `text` and applies the command-line overrides.
pub fn prepare(text: &str, opts: &RunOptions) -> Result<ScenarioConfig, Failure> {
    let mut cfg = parse_config(text).map_err(Failure::Config)?;
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    if let Some(o) = &opts.out {
        cfg.output = o.clone();
    }
    if opts.oracle {
        match &mut cfg.task {
            Task::Unravel { oracle, .. } => *oracle = true,
            _ => cfg.warnings.push(format!("--oracle is ignored by kind '{}'", cfg.kind)),
        }
    }
    Ok(cfg)
}

fn oracle_of(cfg: &ScenarioConfig) -> bool {
    matches!(cfg.task, Task::Unravel { oracle: true, .. })
}

/// Runs a scenario file end to end, writing its outputs and report.
pub fn run_text(text: &str, opts: &RunOptions) -> Result<RunReport, Failure> {
    let cfg = prepare(text, opts)?;
    let hash = config_hash(text, cfg.seed, oracle_of(&cfg));
    let units = cfg.units.to_string();
    let header = output::header(cfg.kind.name(), &hash, &units);
    let started = Instant::now();
    let result = scenarios::execute(&cfg, &opts.base);
    let mut report = RunReport {
        tool: "pilotwave".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        core_version: pilotwave::VERSION.into(),
        kind: cfg.kind.name().into(),
        config_hash: hash,
        seed: cfg.seed,
        units,
        status: "ok".into(),
        error: None,
        wall_time_seconds: 0.0,
        warnings: cfg.warnings.clone(),
        summary: Default::default(),
        outputs: Vec::new(),
    };
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |error| Failure::Io { path, error }
    };
    let failure = match result {
        Ok(outcome) => {
            report.outputs = output::write_outputs(&cfg.output, &header, &outcome).map_err(io(&cfg.output))?;
            report.warnings.extend(outcome.warnings);
            report.summary = outcome.summary;
            None
        }
        Err(error) => {
            let f = Failure::Scenario { kind: cfg.kind, error };
            report.status = "error".into();
            report.error = Some(f.to_string());
            Some(f)
        }
    };
    report.wall_time_seconds = started.elapsed().as_secs_f64();
    output::write_report(&cfg.output, &report).map_err(io(&cfg.output))?;
    match failure {
        Some(f) => Err(f),
        None => Ok(report),
    }
}

/// Validates a scenario file without running it.
pub fn validate_text(text: &str) -> Result<ScenarioConfig, Failure> {
    prepare(text, &RunOptions::default())
}
