//! Experiment harness for `qpdyn-core`: TOML configs, parameter sweeps,
//! CSV results and run manifests.

pub mod config;
pub mod recipes;
pub mod sweep;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;

pub use config::{ExperimentConfig, Recipe};
use recipes::{Outcome, Table};
use sweep::SweepPoint;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl HarnessError {
    /// Process exit code: 2 for configuration errors, 3 for numerical
    /// failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Numerical(_) => 3,
            _ => 1,
        }
    }
}

impl From<qpdyn_core::Error> for HarnessError {
    fn from(e: qpdyn_core::Error) -> Self {
        use qpdyn_core::Error as E;
        match e {
            E::Quadrature { .. } | E::NoConvergence | E::Singular(_) => {
                HarnessError::Numerical(e.to_string())
            }
            other => HarnessError::Config(vec![other.to_string()]),
        }
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub recipe: Option<Recipe>,
    pub out_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub config_path: Option<PathBuf>,
    pub verbose: bool,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub config_hash: String,
    pub points: usize,
    pub files: Vec<PathBuf>,
    /// Numerical-safety flags; non-empty means exit code 3.
    pub flags: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    experiment: &'a str,
    recipe: &'a str,
    config_path: Option<String>,
    config_hash: &'a str,
    seed: u64,
    workers: usize,
    axes: Vec<&'a str>,
    points: usize,
    files: Vec<String>,
    flags: &'a [String],
    versions: BTreeMap<&'static str, &'static str>,
    started_unix: u64,
    finished_unix: u64,
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

/// Runs a config (and its sweep) and writes `<table>.csv`, `timings.csv` and
/// `manifest.json` into the output directory.
pub fn run(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunSummary, HarnessError> {
    let started = unix_now();
    let mut base = config.clone();
    if let Some(r) = opts.recipe {
        base.recipe = r;
    }
    if let Some(w) = opts.workers {
        base.workers = w;
    }
    let out_dir = opts
        .out_dir
        .clone()
        .or_else(|| base.output.dir.clone())
        .ok_or_else(|| {
            HarnessError::Config(vec![
                "output: no directory given (--out or output.dir)".into()
            ])
        })?;
    let errs = base.validate();
    if !errs.is_empty() {
        return Err(HarnessError::Config(errs));
    }
    let hash = base.hash();
    let points = sweep::expand(&base)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(base.workers)
        .build()?;
    let results: Vec<(Result<Outcome, HarnessError>, f64)> = pool.install(|| {
        use rayon::prelude::*;
        points
            .par_iter()
            .map(|p| {
                let clock = Instant::now();
                let r = recipes::run(&p.config);
                (r, clock.elapsed().as_secs_f64())
            })
            .collect()
    });

    let axes: Vec<&str> = base.sweep.iter().map(|a| a.key.as_str()).collect();
    let mut tables = recipes::layout(&base);
    let mut flags = Vec::new();
    let mut timings = Vec::new();
    for (p, (res, secs)) in points.iter().zip(results) {
        let at = describe(&axes, p);
        timings.push((p, secs));
        let outcome = match res {
            Ok(o) => o,
            Err(HarnessError::Numerical(msg)) => {
                flags.push(format!("{at}{msg}"));
                continue;
            }
            Err(e) => return Err(e),
        };
        if opts.verbose {
            eprintln!("point {} {at}done in {secs:.3}s", p.index);
            for n in &outcome.notes {
                eprintln!("  {n}");
            }
        }
        flags.extend(outcome.flags.iter().map(|f| format!("{at}{f}")));
        for (dst, src) in tables.iter_mut().zip(outcome.tables) {
            if dst.header != src.header {
                return Err(HarnessError::Config(vec![format!(
                    "sweep changes the columns of table {} at {at}",
                    src.name
                )]));
            }
            dst.rows.extend(
                src.rows
                    .into_iter()
                    .map(|r| prefixed(&base.experiment, &hash, &p.labels, r)),
            );
        }
    }

    std::fs::create_dir_all(&out_dir)?;
    let mut files = Vec::new();
    for t in &tables {
        let path = out_dir.join(format!("{}.csv", t.name));
        write_table(&path, &axes, t)?;
        files.push(path);
    }
    let timing_path = out_dir.join("timings.csv");
    write_timings(&timing_path, &base.experiment, &hash, &axes, &timings)?;
    files.push(timing_path);

    let manifest_path = out_dir.join("manifest.json");
    let mut versions = BTreeMap::new();
    versions.insert("qpdyn-harness", env!("CARGO_PKG_VERSION"));
    versions.insert("qpdyn-core", qpdyn_core::VERSION);
    let manifest = Manifest {
        experiment: &base.experiment,
        recipe: base.recipe.as_str(),
        config_path: opts.config_path.as_ref().map(|p| p.display().to_string()),
        config_hash: &hash,
        seed: base.seed,
        workers: base.workers,
        axes: axes.clone(),
        points: points.len(),
        files: files
            .iter()
            .chain([&manifest_path])
            .map(|f| file_name(f))
            .collect(),
        flags: &flags,
        versions,
        started_unix: started,
        finished_unix: unix_now(),
    };
    std::fs::write(
        &manifest_path,
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    files.push(manifest_path);

    Ok(RunSummary {
        config_hash: hash,
        points: points.len(),
        files,
        flags,
    })
}

fn describe(axes: &[&str], p: &SweepPoint) -> String {
    if axes.is_empty() {
        return String::new();
    }
    let parts: Vec<String> = axes
        .iter()
        .zip(&p.labels)
        .map(|(a, l)| format!("{a}={l}"))
        .collect();
    format!("[{}] ", parts.join(", "))
}

fn prefixed(experiment: &str, hash: &str, labels: &[String], row: Vec<String>) -> Vec<String> {
    let mut out = Vec::with_capacity(row.len() + labels.len() + 2);
    out.push(experiment.to_string());
    out.push(hash.to_string());
    out.extend(labels.iter().cloned());
    out.extend(row);
    out
}

fn file_name(p: &Path) -> String {
    p.file_name().map_or_else(
        || p.display().to_string(),
        |f| f.to_string_lossy().into_owned(),
    )
}

fn write_table(path: &Path, axes: &[&str], t: &Table) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut head = vec!["experiment", "config_hash"];
    head.extend(axes);
    head.extend(t.header.iter().map(String::as_str));
    w.write_record(&head)?;
    for r in &t.rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_timings(
    path: &Path,
    experiment: &str,
    hash: &str,
    axes: &[&str],
    timings: &[(&SweepPoint, f64)],
) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut head = vec!["experiment", "config_hash", "point"];
    head.extend(axes);
    head.push("wall_seconds");
    w.write_record(&head)?;
    for (p, secs) in timings {
        let mut row = vec![
            experiment.to_string(),
            hash.to_string(),
            p.index.to_string(),
        ];
        row.extend(p.labels.iter().cloned());
        row.push(format!("{secs:.6}"));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
