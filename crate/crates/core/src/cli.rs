//! Command implementations behind the `kicksense` binary. Each writes its
//! outputs (plus a configuration snapshot where relevant) under a directory
//! and returns what it produced.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::data::{simulate_to_dir, Dataset, Manifest, Split};
use crate::error::{Error, Result};
use crate::eval::{
    ablation_suite, evaluate, stream_summary_csv, stream_traces_csv, streaming_recognition, summary_text, write_text,
    AblationReport, AblationRun, Metrics, StreamTrace,
};
use crate::models::{Model, ModelSpec, Task, Variant};
use crate::nn::Checkpoint;
use crate::train::{train_with, EpochLog};

pub const CHECKPOINT_FILE: &str = "model.ksw";
pub const CONFIG_SNAPSHOT: &str = "config.toml";

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes every run of the configured matrix as CSV plus the manifest.
pub fn cmd_simulate(config: &ExperimentConfig, dir: &Path) -> Result<Manifest> {
    config.validate()?;
    ensure_dir(dir)?;
    let manifest = simulate_to_dir(&config.dataset, dir)?;
    config.save(&dir.join(CONFIG_SNAPSHOT))?;
    Ok(manifest)
}

/// Loads and splits the dataset listed by the manifest in `dir`.
pub fn load_dataset(dir: &Path) -> Result<(Dataset, PathBuf)> {
    let (manifest, root) = Manifest::read(dir)?;
    let dataset = manifest.load_dataset(&root)?;
    Ok((dataset, root.join(crate::data::MANIFEST_FILE)))
}

pub fn epoch_log_csv(log: &[EpochLog]) -> String {
    let mut out = String::from("epoch,loss,metric,lr\n");
    for e in log {
        let _ = writeln!(out, "{},{},{},{}", e.epoch, e.loss, e.metric, e.lr);
    }
    out
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: PathBuf,
    pub digest: String,
    pub log: Vec<EpochLog>,
}

/// Trains one variant on the training split with `seed` as both the model
/// and the batch-order seed.
pub fn cmd_train(
    config: &ExperimentConfig,
    task: Task,
    variant: Variant,
    seed: u64,
    data_dir: &Path,
    out_dir: &Path,
    on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainOutcome> {
    config.validate()?;
    let (dataset, manifest) = load_dataset(data_dir)?;
    let train_idx = dataset.indices(Split::Train);
    let mut spec = ModelSpec::new(variant, task, seed);
    spec.arch = config.model;
    let mut model = Model::new(spec)?;
    let train_config = crate::train::TrainConfig {
        seed,
        ..config.train_config(task).clone()
    };
    let log = train_with(&mut model, &dataset, &train_idx, &train_config, on_epoch)?;
    ensure_dir(out_dir)?;
    let checkpoint = out_dir.join(CHECKPOINT_FILE);
    let digest = model.save(&checkpoint)?;
    let snapshot = ExperimentConfig {
        seeds: vec![seed],
        paths: crate::config::Paths {
            dataset_dir: manifest.parent().map(Path::to_path_buf),
            ..config.paths.clone()
        },
        ..config.clone()
    };
    snapshot.save(&out_dir.join(CONFIG_SNAPSHOT))?;
    write_text(&out_dir.join("train_log.csv"), &epoch_log_csv(&log))?;
    Ok(TrainOutcome { checkpoint, digest, log })
}

#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub metrics: Metrics,
    pub summary: String,
    pub files: Vec<PathBuf>,
}

/// Evaluates a checkpoint on the test split; the summary records the
/// checkpoint hash and the manifest.
pub fn cmd_eval(checkpoint: &Path, data_dir: &Path, out_dir: &Path) -> Result<EvalOutcome> {
    let ckpt = Checkpoint::load(checkpoint)?;
    let mut model = Model::from_checkpoint(&ckpt)?;
    let (dataset, manifest) = load_dataset(data_dir)?;
    let test = dataset.indices(Split::Test);
    if test.is_empty() {
        return Err(Error::Validation(format!("{} has no test records", manifest.display())));
    }
    let metrics = evaluate(&mut model, &dataset, &test)?;
    let spec = model.spec();
    let summary = summary_text(
        &metrics,
        &[
            ("checkpoint", checkpoint.display().to_string()),
            ("checkpoint_sha256", ckpt.digest()),
            ("model", format!("{} / {} / seed {}", spec.variant, spec.task, spec.seed)),
            ("manifest", manifest.display().to_string()),
            ("test_records", test.len().to_string()),
        ],
    );
    ensure_dir(out_dir)?;
    let (name, csv) = match &metrics {
        Metrics::Classification(m) => ("confusion.csv", m.to_csv()),
        Metrics::Regression(r) => ("rmse.csv", r.to_csv()),
    };
    let files = vec![out_dir.join(name), out_dir.join("summary.txt")];
    write_text(&files[0], &csv)?;
    write_text(&files[1], &summary)?;
    Ok(EvalOutcome { metrics, summary, files })
}

/// Trains and evaluates `variants` for every configured seed.
pub fn cmd_ablate(
    config: &ExperimentConfig,
    task: Task,
    variants: &[Variant],
    data_dir: &Path,
    out_dir: &Path,
    on_run: impl FnMut(&AblationRun),
) -> Result<AblationReport> {
    config.validate()?;
    let (dataset, manifest) = load_dataset(data_dir)?;
    let report = ablation_suite(&dataset, task, variants, &config.seeds, config.train_config(task), on_run)?;
    ensure_dir(out_dir)?;
    write_text(&out_dir.join("ablation.csv"), &report.to_csv())?;
    let summary = format!("manifest: {}\n{}", manifest.display(), report.summary());
    write_text(&out_dir.join("summary.txt"), &summary)?;
    config.save(&out_dir.join(CONFIG_SNAPSHOT))?;
    Ok(report)
}

/// Streams a classifier checkpoint over the configured pattern switches.
pub fn cmd_stream(config: &ExperimentConfig, checkpoint: &Path, out_dir: &Path) -> Result<Vec<StreamTrace>> {
    config.validate()?;
    let mut model = Model::load(checkpoint)?;
    let traces = streaming_recognition(&mut model, &config.stream)?;
    ensure_dir(out_dir)?;
    write_text(&out_dir.join("stream_trace.csv"), &stream_traces_csv(&traces))?;
    write_text(&out_dir.join("stream_summary.csv"), &stream_summary_csv(&traces))?;
    Ok(traces)
}
