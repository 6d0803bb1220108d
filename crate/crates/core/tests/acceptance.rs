//! Acceptance suite: one PASS/FAIL line per criterion. Set
//! `KICKSENSE_ACCEPTANCE=1,4,9` to run a subset.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use kicksense::cli;
use kicksense::config::ExperimentConfig;
use kicksense::data::{build_dataset, read_runs, simulate_matrix, simulate_to_dir, Dataset, DatasetConfig, Manifest, Split};
use kicksense::eval::{evaluate, streaming_recognition, Metrics, RmseReport, StreamScenario};
use kicksense::flowsim::SimConfig;
use kicksense::kinematics::PatternId;
use kicksense::models::{AttentionFusion, Model, ModelSpec, Task, Variant};
use kicksense::nn::gradcheck::{check, GradCheckReport, LayerProbe, Objective, DEFAULT_EPSILON};
use kicksense::nn::{
    cross_entropy, mse, uniform, BiLstm, Conv1d, Conv2d, Dense, Layer, Mode, Param,
};
use kicksense::signal::{spectrogram, stft, PressureWindow, StftParams};
use kicksense::train::{train, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: [u64; 3] = [0, 1, 2];
const GRAD_TOL: f64 = 1e-4;
const COORDS: usize = 24;
const STFT_TOL: f64 = 1e-9;
const SIMPLEX_TOL: f64 = 1e-6;
const ACCURACY_FLOOR: f64 = 0.90;
const ABLATION_MARGIN: f64 = 0.01;
const TRANSIENT_LIMIT_S: f64 = 5.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn classify_budget(seed: u64) -> TrainConfig {
    TrainConfig {
        epochs: 30,
        samples_per_epoch: Some(2048),
        lr_decay_epochs: 10,
        seed,
        ..TrainConfig::default()
    }
}

fn localize_budget(seed: u64) -> TrainConfig {
    TrainConfig {
        epochs: 100,
        samples_per_epoch: Some(1024),
        lr_decay_epochs: 34,
        seed,
        ..TrainConfig::default()
    }
}

/// Naive per-frame DFT of a Hamming-windowed series.
fn naive_stft(x: &[f64], n: usize, hop: usize) -> Vec<Vec<(f64, f64)>> {
    let w: Vec<f64> = (0..n).map(|i| 0.54 - 0.46 * (2.0 * PI * i as f64 / (n - 1) as f64).cos()).collect();
    let frames = (x.len() - n) / hop + 1;
    (0..frames)
        .map(|m| {
            (0..n)
                .map(|k| {
                    let (mut re, mut im) = (0.0, 0.0);
                    for i in 0..n {
                        let a = -2.0 * PI * (i * k) as f64 / n as f64;
                        let v = w[i] * x[m * hop + i];
                        re += v * a.cos();
                        im += v * a.sin();
                    }
                    (re, im)
                })
                .collect()
        })
        .collect()
}

fn criterion_stft() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let params = StftParams::default();
    let mut worst: f64 = 0.0;
    let mut exact = true;
    for _ in 0..100 {
        let len = rng.gen_range(32..=100);
        let x: Vec<f64> = (0..len).map(|_| rng.gen_range(-50.0..50.0)).collect();
        let fast = stft(&x, params).unwrap();
        let slow = naive_stft(&x, params.fft_size, params.hop);
        let scale = slow.iter().flatten().map(|(r, i)| r.hypot(*i)).fold(0.0, f64::max);
        for (m, row) in slow.iter().enumerate() {
            for (k, &(re, im)) in row.iter().enumerate() {
                let c = fast.at(m, k);
                worst = worst.max((c.re - re).hypot(c.im - im) / scale);
            }
        }
        let window = PressureWindow::new(x.clone(), len, 1, 0.0, 25.0).unwrap();
        let spec = spectrogram(&window, params).unwrap();
        for m in 0..spec.frames {
            for k in 0..spec.bins {
                exact &= spec.at(0, m, k) == fast.at(m, k).norm_sqr();
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst < STFT_TOL && exact && secs < 5.0,
        format!("max relative error {worst:.2e} (< {STFT_TOL:e}), spectrogram == |X|^2 exactly: {exact}, {secs:.2} s (< 5 s)"),
    )
}

/// Softmax cross-entropy (or MSE) on top of a dense head.
struct HeadObjective {
    head: Dense,
    x: Param,
    labels: Vec<usize>,
    targets: Option<Vec<f64>>,
}

impl HeadObjective {
    fn loss_grad(&mut self, grad: bool) -> kicksense::Result<f64> {
        let y = self.head.forward(&self.x.value, Mode::Train)?;
        let (loss, g) = match &self.targets {
            Some(t) => mse(&y, t)?,
            None => cross_entropy(&y, &self.labels)?,
        };
        if grad {
            let dx = self.head.backward(&g)?;
            self.x.grad.iter_mut().zip(&dx.data).for_each(|(a, b)| *a += b);
        }
        Ok(loss)
    }
}

impl Objective for HeadObjective {
    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut p = self.head.params_mut();
        p.push(&mut self.x);
        p
    }
    fn loss(&mut self) -> kicksense::Result<f64> {
        self.loss_grad(false)
    }
    fn loss_and_grad(&mut self) -> kicksense::Result<f64> {
        self.loss_grad(true)
    }
}

fn criterion_gradients() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut lines = Vec::new();
    let mut pass = true;
    let mut record = |name: &str, (r, expected): (GradCheckReport, usize)| {
        let ok = r.max_rel_error < GRAD_TOL && r.checked == expected;
        pass &= ok;
        lines.push(format!("{name} {:.1e} ({} coords)", r.max_rel_error, r.checked));
    };
    // every parameter tensor and the input: min(24, len) coordinates each
    fn coords(lens: impl IntoIterator<Item = usize>) -> usize {
        lens.into_iter().map(|n| n.min(COORDS)).sum()
    }
    fn probe<L: Layer>(layer: L, shape: &[usize], rng: &mut ChaCha8Rng) -> (GradCheckReport, usize) {
        let x = uniform(shape, 1.0, rng);
        let expected = coords(layer.params().iter().map(|p| p.len()).chain([x.len()]));
        let mut p = LayerProbe::new(layer, x, rng.gen()).unwrap();
        (check(&mut p, COORDS, DEFAULT_EPSILON, rng.gen()).unwrap(), expected)
    }
    let conv1 = Conv1d::new("c1", 3, 4, 5, 2, 2, &mut rng);
    record("conv1d", probe(conv1, &[2, 3, 16], &mut rng));
    let conv2 = Conv2d::new("c2", 3, 4, (3, 3), (2, 1), (0, 0), &mut rng);
    record("conv2d", probe(conv2, &[2, 3, 11, 7], &mut rng));
    let lstm = BiLstm::new("l", 4, 5, &mut rng);
    record("bilstm", probe(lstm, &[2, 6, 4], &mut rng));
    let dense = Dense::new("d", 7, 5, &mut rng);
    record("dense", probe(dense, &[3, 7], &mut rng));
    let att = AttentionFusion::from_weights("a", uniform(&[10, 10], 0.5, &mut rng), uniform(&[10], 0.5, &mut rng));
    record("attention", probe(att, &[3, 10], &mut rng));
    for regression in [false, true] {
        let mut obj = HeadObjective {
            head: Dense::new("h", 8, if regression { 2 } else { 6 }, &mut rng),
            x: Param::new("x", uniform(&[5, 8], 1.0, &mut rng)),
            labels: vec![0, 3, 5, 1, 3],
            targets: regression.then(|| (0..10).map(|i| (i as f64 * 0.37).sin()).collect()),
        };
        let name = if regression { "mse head" } else { "softmax-ce head" };
        let expected = coords(obj.params_mut().iter().map(|p| p.len()));
        record(name, (check(&mut obj, COORDS, DEFAULT_EPSILON, 5).unwrap(), expected));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        pass && secs < 60.0,
        format!("max relative error per layer: {} (< {GRAD_TOL:e}), {secs:.1} s (< 60 s)", lines.join(", ")),
    )
}

fn criterion_simplex() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_sum: f64 = 0.0;
    let mut min_w = f64::INFINITY;
    for i in 0..1000 {
        // weight scales of a trained layer; far larger logit gaps underflow exp()
        let scale = [0.01, 0.05, 0.2][i % 3];
        let att = AttentionFusion::from_weights(
            "a",
            uniform(&[128, 128], scale, &mut rng),
            uniform(&[128], scale, &mut rng),
        );
        let f: Vec<f64> = (0..128).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let fused = att.fuse(&f[..64], &f[64..]).unwrap();
        worst_sum = worst_sum.max((fused.weights.iter().sum::<f64>() - 1.0).abs());
        min_w = min_w.min(fused.weights.iter().copied().fold(f64::INFINITY, f64::min));
        for ((a, w), y) in f.iter().zip(&fused.weights).zip(&fused.f_weighted) {
            worst_sum = worst_sum.max((a * w - y).abs());
        }
    }
    outcome(
        worst_sum < SIMPLEX_TOL && min_w > 0.0,
        format!("1000 inputs: max |sum(w) - 1| = {worst_sum:.1e} (< {SIMPLEX_TOL:e}), min weight {min_w:.1e} (> 0)"),
    )
}

fn train_accuracy(model: &mut Model, ds: &Dataset, idx: &[usize]) -> f64 {
    match evaluate(model, ds, idx).unwrap() {
        Metrics::Classification(m) => m.overall_accuracy(),
        Metrics::Regression(_) => unreachable!(),
    }
}

fn criterion_overfit() -> Outcome {
    let start = Instant::now();
    let config = DatasetConfig {
        patterns: vec![PatternId::S1, PatternId::S2],
        ly_levels_mm: vec![40, 120, 200],
        repetitions: 1,
        sim: SimConfig {
            noise_std_pa: 0.0,
            ..SimConfig::default()
        },
        ..DatasetConfig::default()
    };
    let raw = simulate_matrix(&config).unwrap();
    let ds = Dataset::from_runs(&raw, config.window_len, config.stride).unwrap();
    let step = ds.len() / 200;
    let idx: Vec<usize> = (0..200).map(|i| i * step).collect();
    let mut model = Model::new(ModelSpec::new(Variant::Fusion, Task::Classify, 0)).unwrap();
    let tc = TrainConfig {
        epochs: 30,
        batch_size: 20,
        ..TrainConfig::default()
    };
    train(&mut model, &ds, &idx, &tc).unwrap();
    let acc = train_accuracy(&mut model, &ds, &idx);
    let secs = start.elapsed().as_secs_f64();
    outcome(
        acc == 1.0 && secs < 120.0,
        format!("s1 vs s2, noise-free, 200 windows, 30 epochs: train accuracy {acc:.4} (== 1), {secs:.1} s (< 120 s)"),
    )
}

struct Trained {
    model: Model,
    metrics: Metrics,
}

fn fit(ds: &Dataset, variant: Variant, task: Task, seed: u64) -> Trained {
    let mut model = Model::new(ModelSpec::new(variant, task, seed)).unwrap();
    let tc = match task {
        Task::Classify => classify_budget(seed),
        Task::Localize => localize_budget(seed),
    };
    train(&mut model, ds, &ds.indices(Split::Train), &tc).unwrap();
    let metrics = evaluate(&mut model, ds, &ds.indices(Split::Test)).unwrap();
    Trained { model, metrics }
}

fn mean(v: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = v.into_iter().collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn rmse_report(m: &Metrics) -> &RmseReport {
    match m {
        Metrics::Regression(r) => r,
        Metrics::Classification(_) => unreachable!(),
    }
}

fn main() {
    let only: Option<Vec<usize>> = std::env::var("KICKSENSE_ACCEPTANCE")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let wanted = |n: usize| only.as_ref().is_none_or(|o| o.contains(&n));
    let mut results: BTreeMap<usize, (String, Outcome)> = BTreeMap::new();
    let mut report = |n: usize, name: &str, o: Outcome| {
        println!("{} [{n:>2}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.insert(n, (name.to_string(), o));
    };
    let suite_start = Instant::now();

    if wanted(1) {
        report(1, "STFT oracle equivalence", criterion_stft());
    }
    if wanted(2) {
        report(2, "gradient correctness", criterion_gradients());
    }
    if wanted(3) {
        report(3, "attention simplex", criterion_simplex());
    }
    if wanted(4) {
        report(4, "overfit sanity", criterion_overfit());
    }

    let needs_data = [5, 6, 7, 8, 9].iter().any(|&n| wanted(n));
    if needs_data {
        let ds = build_dataset(&DatasetConfig::default()).unwrap();
        let mut cls: BTreeMap<(Variant, u64), Trained> = BTreeMap::new();
        let mut reg: BTreeMap<(Variant, u64), Trained> = BTreeMap::new();
        let start = Instant::now();
        if wanted(5) || wanted(8) || wanted(9) {
            let variants: &[Variant] = if wanted(5) || wanted(8) {
                &[Variant::Fusion, Variant::Time, Variant::Freq, Variant::FftMlp, Variant::StatsMlp]
            } else {
                &[Variant::Fusion]
            };
            for &seed in &SEEDS {
                for &v in variants {
                    if !wanted(5) && matches!(v, Variant::Time | Variant::Freq) {
                        continue;
                    }
                    if !wanted(5) && !wanted(8) && seed != 0 {
                        continue;
                    }
                    cls.insert((v, seed), fit(&ds, v, Task::Classify, seed));
                }
            }
        }
        let cls_secs = start.elapsed().as_secs_f64();
        let acc = |cls: &BTreeMap<(Variant, u64), Trained>, v: Variant| -> Vec<f64> {
            SEEDS.iter().filter_map(|s| cls.get(&(v, *s))).map(|t| t.metrics.accuracy().unwrap()).collect()
        };
        if wanted(5) {
            let (f, t, q) = (acc(&cls, Variant::Fusion), acc(&cls, Variant::Time), acc(&cls, Variant::Freq));
            let best_single = mean(t.clone()).max(mean(q.clone()));
            let pass = f.iter().all(|&a| a >= ACCURACY_FLOOR)
                && mean(f.clone()) >= best_single - ABLATION_MARGIN
                && cls_secs < 1800.0;
            report(
                5,
                "fusion vs single-branch accuracy",
                outcome(
                    pass,
                    format!(
                        "test accuracy per seed fusion {f:.4?} (each >= {ACCURACY_FLOOR}), time {t:.4?}, freq {q:.4?}; mean fusion {:.4} vs best single {:.4} - {ABLATION_MARGIN}; {cls_secs:.0} s (< 1800 s)",
                        mean(f.clone()),
                        best_single
                    ),
                ),
            );
        }

        if wanted(6) || wanted(7) || wanted(8) {
            let variants: &[Variant] = if wanted(8) {
                &[Variant::Fusion, Variant::FftMlp, Variant::StatsMlp]
            } else {
                &[Variant::Fusion]
            };
            for &seed in &SEEDS {
                for &v in variants {
                    reg.insert((v, seed), fit(&ds, v, Task::Localize, seed));
                }
            }
        }
        let fusion_reports: Vec<&RmseReport> = SEEDS
            .iter()
            .filter_map(|s| reg.get(&(Variant::Fusion, *s)))
            .map(|t| rmse_report(&t.metrics))
            .collect();
        if wanted(6) {
            let near = mean(fusion_reports.iter().map(|r| r.mean_rmse_x_at(20)));
            let far = mean(fusion_reports.iter().map(|r| r.mean_rmse_x_at(200)));
            report(
                6,
                "L_x error grows with L_y",
                outcome(
                    far > near,
                    format!("mean L_x RMSE over patterns and seeds: {near:.2} mm at L_y = 20 mm, {far:.2} mm at L_y = 200 mm (+{:.0}%)", 100.0 * (far / near - 1.0)),
                ),
            );
        }
        if wanted(7) {
            let hz1 = mean(fusion_reports.iter().map(|r| r.mean_rmse_y_at_frequency(1.0)));
            let hz2 = mean(fusion_reports.iter().map(|r| r.mean_rmse_y_at_frequency(2.0)));
            report(
                7,
                "L_y error falls with kick frequency",
                outcome(hz2 < hz1, format!("mean L_y RMSE: {hz1:.2} mm at 1 Hz, {hz2:.2} mm at 2 Hz")),
            );
        }
        if wanted(8) {
            let mut pass = true;
            let mut lines = Vec::new();
            for &seed in &SEEDS {
                let a = |v| cls[&(v, seed)].metrics.accuracy().unwrap();
                let r = |v| reg[&(v, seed)].metrics.rmse().unwrap();
                let (fa, fr) = (a(Variant::Fusion), r(Variant::Fusion));
                for b in [Variant::FftMlp, Variant::StatsMlp] {
                    pass &= fa > a(b) && fr.0 < r(b).0 && fr.1 < r(b).1;
                }
                lines.push(format!(
                    "seed {seed}: acc {:.4}/{:.4}/{:.4}, rmse_x {:.1}/{:.1}/{:.1} mm, rmse_y {:.1}/{:.1}/{:.1} mm",
                    fa,
                    a(Variant::FftMlp),
                    a(Variant::StatsMlp),
                    fr.0,
                    r(Variant::FftMlp).0,
                    r(Variant::StatsMlp).0,
                    fr.1,
                    r(Variant::FftMlp).1,
                    r(Variant::StatsMlp).1
                ));
            }
            report(
                8,
                "fusion beats FFT+MLP and stats+MLP",
                outcome(pass, format!("fusion/fft-mlp/stats-mlp {}", lines.join("; "))),
            );
        }
        if wanted(9) {
            let model = &mut cls.get_mut(&(Variant::Fusion, 0)).unwrap().model;
            let traces = streaming_recognition(model, &StreamScenario::default()).unwrap();
            let parts: Vec<String> = traces
                .iter()
                .map(|t| format!("{}->{} {}", t.from, t.to, t.transient_s.map_or("none".into(), |s| format!("{s:.2}s"))))
                .collect();
            let pass = traces.len() == 6 && traces.iter().all(|t| t.transient_s.is_some_and(|s| s <= TRANSIENT_LIMIT_S));
            report(
                9,
                "streaming transient bound",
                outcome(pass, format!("{} (each <= {TRANSIENT_LIMIT_S} s)", parts.join(", "))),
            );
        }
    }

    if wanted(10) {
        report(10, "reproducibility from config snapshot", criterion_reproducibility());
    }
    if wanted(11) {
        report(11, "CSV round trip of all 600 runs", criterion_roundtrip());
    }

    let failed: Vec<usize> = results.iter().filter(|(_, (_, o))| !o.pass).map(|(n, _)| *n).collect();
    println!(
        "acceptance: {} passed, {} failed{} in {:.0} s",
        results.len() - failed.len(),
        failed.len(),
        if failed.is_empty() { String::new() } else { format!(" ({failed:?})") },
        suite_start.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}

fn criterion_reproducibility() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut config = ExperimentConfig::default();
    config.dataset.repetitions = 3;
    config.dataset.ly_levels_mm = vec![40, 160];
    config.classify.epochs = 2;
    config.classify.samples_per_epoch = Some(256);
    let data = dir.path().join("data");
    cli::cmd_simulate(&config, &data).unwrap();
    let out = dir.path().join("run");
    let first = cli::cmd_train(&config, Task::Classify, Variant::Fusion, 7, &data, &out, |_| {}).unwrap();
    let eval_dir = dir.path().join("eval");
    let eval = cli::cmd_eval(&first.checkpoint, &data, &eval_dir).unwrap();
    let read = |p: &std::path::Path| std::fs::read(p).unwrap();
    let ckpt1 = read(&first.checkpoint);
    let reports1: Vec<Vec<u8>> = eval.files.iter().map(|p| read(p)).collect();

    let snapshot = ExperimentConfig::load(&out.join(cli::CONFIG_SNAPSHOT)).unwrap();
    let seed = snapshot.seeds[0];
    let second = cli::cmd_train(&snapshot, Task::Classify, Variant::Fusion, seed, &data, &out, |_| {}).unwrap();
    let eval2 = cli::cmd_eval(&second.checkpoint, &data, &eval_dir).unwrap();
    let same_ckpt = read(&second.checkpoint) == ckpt1;
    let same_reports = eval2.files.iter().map(|p| read(p)).collect::<Vec<_>>() == reports1;
    outcome(
        same_ckpt && same_reports && first.digest == second.digest,
        format!(
            "retrained from snapshot: checkpoint bit-identical {same_ckpt} (sha256 {}...), reports identical {same_reports}",
            &first.digest[..12]
        ),
    )
}

fn criterion_roundtrip() -> Outcome {
    let start = Instant::now();
    let config = DatasetConfig::default();
    let dir = tempfile::tempdir().unwrap();
    let manifest = simulate_to_dir(&config, dir.path()).unwrap();
    let (read_back, root) = Manifest::read(dir.path()).unwrap();
    let paths: Vec<_> = read_back.files.iter().map(|f| root.join(&f.file)).collect();
    let ingested = read_runs(&paths).unwrap();
    let raw = simulate_matrix(&config).unwrap();
    let runs_equal = ingested == raw;
    drop((ingested, raw));
    let from_disk = read_back.load_dataset(&root).unwrap();
    let in_memory = build_dataset(&config).unwrap();
    let datasets_equal = from_disk == in_memory;
    outcome(
        manifest.files.len() == 600 && runs_equal && datasets_equal,
        format!(
            "{} files, raw runs equal {runs_equal}, datasets ({} records) equal {datasets_equal}, {:.1} s",
            manifest.files.len(),
            in_memory.len(),
            start.elapsed().as_secs_f64()
        ),
    )
}
