//! Declarative experiment runner for the `lrpolymer` library.
//!
//! A TOML config names one experiment kind and its model, Monte Carlo and
//! analysis parameters. [`run_config`] validates everything up front, then
//! writes one CSV per result table plus a `manifest.json` into the output
//! directory. [`report::report`] turns a finished directory into a summary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod manifest;
pub mod output;
pub mod report;

use std::path::{Path, PathBuf};

pub use config::{ExperimentConfig, ExperimentKind};
use manifest::{timestamp, RunManifest, TaskRecord, TaskStatus};
use output::write_atomic;

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "LRPOLYMER_OUT";
pub const DEFAULT_OUT_ROOT: &str = "results";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    /// Exact output directory.
    pub out: Option<PathBuf>,
    /// Parent of the per-config directory when neither `out` nor the config
    /// names one.
    pub out_root: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: RunManifest,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        match self.manifest.status {
            TaskStatus::Ok => 0,
            TaskStatus::Unconverged => 3,
            TaskStatus::Running | TaskStatus::Failed => 1,
        }
    }
}

pub fn run_file(path: &Path, opts: &RunOptions) -> Result<RunOutcome, CliError> {
    run_config(ExperimentConfig::from_path(path)?, opts)
}

pub fn output_dir(config: &ExperimentConfig, opts: &RunOptions) -> PathBuf {
    if let Some(out) = &opts.out {
        return out.clone();
    }
    if let Some(out) = &config.output {
        return out.clone();
    }
    let root = opts
        .out_root
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_ROOT));
    root.join(format!("{}-{}", config.kind.as_str(), &config.hash()[..12]))
}

fn overall(tasks: &[TaskRecord]) -> TaskStatus {
    if tasks.iter().any(|t| t.status == TaskStatus::Failed) {
        TaskStatus::Failed
    } else if tasks.iter().any(|t| t.status == TaskStatus::Unconverged) {
        TaskStatus::Unconverged
    } else {
        TaskStatus::Ok
    }
}

/// Validates, executes and persists one experiment.
pub fn run_config(mut config: ExperimentConfig, opts: &RunOptions) -> Result<RunOutcome, CliError> {
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    config.validate()?;
    let dir = output_dir(&config, opts);
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::Internal(format!("cannot create {}: {e}", dir.display())))?;
    let hash = config.hash();
    let mut manifest = RunManifest {
        kind: config.kind.as_str().to_string(),
        config_hash: hash.clone(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        threads: rayon::current_num_threads(),
        started_at: timestamp(),
        finished_at: None,
        status: TaskStatus::Running,
        tasks: Vec::new(),
        outputs: Vec::new(),
        config: serde_json::to_value(&config).map_err(|e| CliError::Internal(e.to_string()))?,
    };
    manifest.write(&dir)?;

    let result = experiments::execute(&config).and_then(|outcome| {
        let mut outputs = Vec::new();
        for table in &outcome.tables {
            let name = format!("{}.csv", table.name);
            write_atomic(&dir.join(&name), &table.to_csv(&hash)?)?;
            outputs.push(name);
        }
        Ok((outcome.tasks, outputs))
    });
    manifest.finished_at = Some(timestamp());
    match result {
        Ok((tasks, outputs)) => {
            manifest.status = overall(&tasks);
            manifest.tasks = tasks;
            manifest.outputs = outputs;
            manifest.write(&dir)?;
            Ok(RunOutcome { dir, manifest })
        }
        Err(e) => {
            manifest.status = TaskStatus::Failed;
            manifest.tasks.push(TaskRecord {
                name: "run".into(),
                status: TaskStatus::Failed,
                detail: Some(e.to_string()),
            });
            manifest.write(&dir)?;
            Err(e)
        }
    }
}
