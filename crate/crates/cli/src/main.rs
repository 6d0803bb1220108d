use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kicksense::cli;
use kicksense::config::ExperimentConfig;
use kicksense::models::{Task, Variant};
use kicksense::{ErrorKind, Result};

/// Leg-kick flow sensing: simulate, train, evaluate.
#[derive(Parser)]
#[command(name = "kicksense", version)]
struct Opts {
    /// Experiment configuration (TOML); built-in defaults when omitted.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,

    /// Root directory for outputs.
    #[arg(long, global = true, env = "KICKSENSE_OUT")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the experiment matrix into CSV files and a manifest.
    Simulate {
        #[arg(long)]
        reps: Option<u32>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train one model variant.
    Train {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        samples_per_epoch: Option<usize>,
        #[command(flatten)]
        data: DataArg,
    },
    /// Evaluate a checkpoint on the test split.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        data: DataArg,
    },
    /// Train and compare several variants over the configured seeds.
    Ablate {
        #[arg(long, value_parser = parse_task, default_value = "classify")]
        task: Task,
        /// Comma-separated variants.
        #[arg(long, value_delimiter = ',', value_parser = parse_variant, default_value = "fusion,time,freq,fft-mlp,stats-mlp")]
        variants: Vec<Variant>,
        #[command(flatten)]
        data: DataArg,
    },
    /// Stream a classifier over scripted pattern switches.
    Stream {
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Print the effective configuration as TOML.
    PrintConfig,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, value_parser = parse_task, default_value = "classify")]
    task: Task,
    #[arg(long, value_parser = parse_variant, default_value = "fusion")]
    variant: Variant,
}

#[derive(Args)]
struct DataArg {
    /// Dataset directory holding the manifest.
    #[arg(long)]
    data: Option<PathBuf>,
}

fn parse_task(s: &str) -> std::result::Result<Task, String> {
    s.parse().map_err(|e: kicksense::Error| e.to_string())
}

fn parse_variant(s: &str) -> std::result::Result<Variant, String> {
    s.parse().map_err(|e: kicksense::Error| e.to_string())
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Config => 2,
        ErrorKind::Io => 3,
        ErrorKind::Validation => 4,
    }
}

fn run(opts: Opts) -> Result<()> {
    let mut config = match &opts.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = opts.out {
        config.paths.output_root = out;
    }
    let root = config.paths.output_root.clone();
    let data_dir = |arg: &DataArg| arg.data.clone().unwrap_or_else(|| config.paths.dataset_dir());
    match opts.command {
        Command::PrintConfig => print!("{}", config.to_toml()),
        Command::Simulate { reps, seed } => {
            if let Some(r) = reps {
                config.dataset.repetitions = r;
            }
            if let Some(s) = seed {
                config.dataset.sim.seed = s;
            }
            let dir = config.paths.dataset_dir();
            let manifest = cli::cmd_simulate(&config, &dir)?;
            println!("wrote {} runs and manifest to {}", manifest.files.len(), dir.display());
        }
        Command::Train {
            model,
            seed,
            epochs,
            samples_per_epoch,
            data,
        } => {
            let dir = data_dir(&data);
            let tc = match model.task {
                Task::Classify => &mut config.classify,
                Task::Localize => &mut config.localize,
            };
            if let Some(e) = epochs {
                tc.epochs = e;
            }
            if samples_per_epoch.is_some() {
                tc.samples_per_epoch = samples_per_epoch;
            }
            let out = root.join(format!("{}-{}-seed{seed}", model.variant, model.task));
            let outcome = cli::cmd_train(&config, model.task, model.variant, seed, &dir, &out, |e| {
                println!("epoch {:>4}  loss {:.5}  metric {:.4}  lr {:.6}", e.epoch, e.loss, e.metric, e.lr);
            })?;
            println!("checkpoint {} (sha256 {})", outcome.checkpoint.display(), outcome.digest);
        }
        Command::Eval { checkpoint, data } => {
            let out = eval_dir(&root, &checkpoint);
            let outcome = cli::cmd_eval(&checkpoint, &data_dir(&data), &out)?;
            print!("{}", outcome.summary);
            println!("reports in {}", out.display());
        }
        Command::Ablate { task, variants, data } => {
            let out = root.join(format!("ablate-{task}"));
            let report = cli::cmd_ablate(&config, task, &variants, &data_dir(&data), &out, |r| {
                println!("{} seed {}: {}", r.variant, r.seed, r.metrics.headline());
            })?;
            print!("{}", report.summary());
        }
        Command::Stream { checkpoint } => {
            let out = root.join("stream");
            for t in cli::cmd_stream(&config, &checkpoint, &out)? {
                let transient = t.transient_s.map_or("not reached".into(), |s| format!("{s:.2} s"));
                println!("{} -> {}: transient {transient}", t.from, t.to);
            }
            println!("traces in {}", out.display());
        }
    }
    Ok(())
}

fn eval_dir(root: &Path, checkpoint: &Path) -> PathBuf {
    let name = checkpoint
        .parent()
        .and_then(|p| p.file_name())
        .map_or("model".into(), |n| n.to_string_lossy().into_owned());
    root.join(format!("eval-{name}"))
}

fn main() -> ExitCode {
    match run(Opts::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}
