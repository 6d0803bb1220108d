//! Metrics and experiment drivers: confusion matrices, stratified RMSE,
//! paired ablations and streaming recognition across pattern switches.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Split};
use crate::error::{Error, Result};
use crate::flowsim::{simulate_schedule, KickSegment, SensorGeometry, SimConfig, Trajectory};
use crate::kinematics::PatternId;
use crate::models::{Model, ModelSpec, Task, TaskOutput, Variant};
use crate::signal::{subtract_baseline, PressureWindow, WINDOW_LEN};
use crate::train::{train, EpochLog, TrainConfig};

/// Default width of the tolerance band for displacement estimates, mm.
pub const TOLERANCE_BAND_MM: f64 = 20.0;
/// Consecutive correct predictions that end a transient.
pub const STABLE_RUN: usize = 10;
const EVAL_BATCH: usize = 256;

/// Eval-mode predictions for `indices`, in the same order.
pub fn predict_records(model: &mut Model, dataset: &Dataset, indices: &[usize]) -> Result<Vec<TaskOutput>> {
    let mut out = Vec::with_capacity(indices.len());
    for chunk in indices.chunks(EVAL_BATCH) {
        let windows = dataset.windows(chunk);
        let refs: Vec<&PressureWindow> = windows.iter().collect();
        out.extend(model.predict(&refs)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    /// `counts[true][predicted]`.
    pub counts: [[usize; 6]; 6],
}

impl ConfusionMatrix {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (PatternId, PatternId)>) -> Self {
        let mut m = ConfusionMatrix::default();
        for (t, p) in pairs {
            m.counts[t.index()][p.index()] += 1;
        }
        m
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> usize {
        (0..6).map(|i| self.counts[i][i]).sum()
    }

    pub fn overall_accuracy(&self) -> f64 {
        self.correct() as f64 / self.total().max(1) as f64
    }

    /// Per true class; `NaN` for a class with no samples.
    pub fn per_class_accuracy(&self) -> [f64; 6] {
        let mut out = [f64::NAN; 6];
        for (i, row) in self.counts.iter().enumerate() {
            let n: usize = row.iter().sum();
            if n > 0 {
                out[i] = row[i] as f64 / n as f64;
            }
        }
        out
    }

    /// Long format `true,predicted,count,fraction_of_true`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("true,predicted,count,fraction_of_true\n");
        for t in PatternId::ALL {
            let n: usize = self.counts[t.index()].iter().sum();
            for p in PatternId::ALL {
                let c = self.counts[t.index()][p.index()];
                let frac = if n > 0 { c as f64 / n as f64 } else { 0.0 };
                let _ = writeln!(out, "{t},{p},{c},{frac}");
            }
        }
        out
    }
}

pub fn evaluate_classifier(model: &mut Model, dataset: &Dataset, indices: &[usize]) -> Result<ConfusionMatrix> {
    if model.task() != Task::Classify {
        return Err(Error::InvalidArgument("model is not a classifier".into()));
    }
    let preds = predict_records(model, dataset, indices)?;
    Ok(ConfusionMatrix::from_pairs(
        indices
            .iter()
            .zip(&preds)
            .map(|(&i, p)| (dataset.records[i].pattern, p.class().expect("classifier output"))),
    ))
}

/// Squared-error sums of one group of displacement estimates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorStats {
    pub n: usize,
    pub sse_x: f64,
    pub sse_y: f64,
    pub within_band_x: usize,
    pub within_band_y: usize,
}

impl ErrorStats {
    fn add(&mut self, err_x: f64, err_y: f64, band: f64) {
        self.n += 1;
        self.sse_x += err_x * err_x;
        self.sse_y += err_y * err_y;
        self.within_band_x += usize::from(err_x.abs() <= band);
        self.within_band_y += usize::from(err_y.abs() <= band);
    }

    fn merge(&mut self, other: &ErrorStats) {
        self.n += other.n;
        self.sse_x += other.sse_x;
        self.sse_y += other.sse_y;
        self.within_band_x += other.within_band_x;
        self.within_band_y += other.within_band_y;
    }

    pub fn rmse_x(&self) -> f64 {
        (self.sse_x / self.n.max(1) as f64).sqrt()
    }

    pub fn rmse_y(&self) -> f64 {
        (self.sse_y / self.n.max(1) as f64).sqrt()
    }

    pub fn band_fraction_x(&self) -> f64 {
        self.within_band_x as f64 / self.n.max(1) as f64
    }

    pub fn band_fraction_y(&self) -> f64 {
        self.within_band_y as f64 / self.n.max(1) as f64
    }
}

/// Displacement errors grouped by pattern and `L_y` level (mm).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RmseReport {
    pub band_mm: f64,
    pub cells: BTreeMap<(PatternId, u32), ErrorStats>,
}

impl RmseReport {
    pub fn from_predictions(items: impl IntoIterator<Item = (PatternId, [f64; 2], (f64, f64))>, band_mm: f64) -> Self {
        let mut cells: BTreeMap<(PatternId, u32), ErrorStats> = BTreeMap::new();
        for (pattern, [l_x, l_y], (est_x, est_y)) in items {
            cells
                .entry((pattern, l_y.round() as u32))
                .or_default()
                .add(est_x - l_x, est_y - l_y, band_mm);
        }
        RmseReport { band_mm, cells }
    }

    fn fold(&self, keep: impl Fn(PatternId, u32) -> bool) -> ErrorStats {
        let mut s = ErrorStats::default();
        for (&(p, l), c) in &self.cells {
            if keep(p, l) {
                s.merge(c);
            }
        }
        s
    }

    pub fn pooled(&self) -> ErrorStats {
        self.fold(|_, _| true)
    }

    pub fn pattern(&self, pattern: PatternId) -> ErrorStats {
        self.fold(|p, _| p == pattern)
    }

    pub fn level(&self, l_y: u32) -> ErrorStats {
        self.fold(|_, l| l == l_y)
    }

    pub fn levels(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.cells.keys().map(|k| k.1).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn patterns(&self) -> Vec<PatternId> {
        let mut v: Vec<PatternId> = self.cells.keys().map(|k| k.0).collect();
        v.dedup();
        v
    }

    /// Mean over patterns of the per-pattern `L_x` RMSE at one `L_y` level.
    pub fn mean_rmse_x_at(&self, l_y: u32) -> f64 {
        let vals: Vec<f64> = self
            .cells
            .iter()
            .filter(|(k, _)| k.1 == l_y)
            .map(|(_, c)| c.rmse_x())
            .collect();
        vals.iter().sum::<f64>() / vals.len().max(1) as f64
    }

    /// Mean `L_y` RMSE over the patterns kicking at `frequency_hz`.
    pub fn mean_rmse_y_at_frequency(&self, frequency_hz: f64) -> f64 {
        let vals: Vec<f64> = self
            .patterns()
            .into_iter()
            .filter(|p| (p.pattern().frequency_hz - frequency_hz).abs() < 1e-9)
            .map(|p| self.pattern(p).rmse_y())
            .collect();
        vals.iter().sum::<f64>() / vals.len().max(1) as f64
    }

    /// Long format `pattern,l_y_mm,n,rmse_x_mm,rmse_y_mm,band_x,band_y`,
    /// with `all` rows for the per-pattern, per-level and pooled groups.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("pattern,l_y_mm,n,rmse_x_mm,rmse_y_mm,band_x,band_y\n");
        let mut row = |p: &str, l: &str, s: ErrorStats| {
            let _ = writeln!(
                out,
                "{p},{l},{},{},{},{},{}",
                s.n,
                s.rmse_x(),
                s.rmse_y(),
                s.band_fraction_x(),
                s.band_fraction_y()
            );
        };
        for (&(p, l), c) in &self.cells {
            row(&p.to_string(), &l.to_string(), *c);
        }
        for p in self.patterns() {
            row(&p.to_string(), "all", self.pattern(p));
        }
        for l in self.levels() {
            row("all", &l.to_string(), self.level(l));
        }
        row("all", "all", self.pooled());
        out
    }
}

pub fn evaluate_regressor(model: &mut Model, dataset: &Dataset, indices: &[usize]) -> Result<RmseReport> {
    if model.task() != Task::Localize {
        return Err(Error::InvalidArgument("model is not a regressor".into()));
    }
    let preds = predict_records(model, dataset, indices)?;
    Ok(RmseReport::from_predictions(
        indices.iter().zip(&preds).map(|(&i, p)| {
            let r = &dataset.records[i];
            (r.pattern, r.target(), p.displacement().expect("regressor output"))
        }),
        TOLERANCE_BAND_MM,
    ))
}

/// Metrics of one trained model on the test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Metrics {
    Classification(ConfusionMatrix),
    Regression(RmseReport),
}

impl Metrics {
    pub fn accuracy(&self) -> Option<f64> {
        match self {
            Metrics::Classification(m) => Some(m.overall_accuracy()),
            Metrics::Regression(_) => None,
        }
    }

    pub fn rmse(&self) -> Option<(f64, f64)> {
        match self {
            Metrics::Regression(r) => {
                let p = r.pooled();
                Some((p.rmse_x(), p.rmse_y()))
            }
            Metrics::Classification(_) => None,
        }
    }

    /// One-line summary.
    pub fn headline(&self) -> String {
        match self {
            Metrics::Classification(m) => format!("accuracy {:.4}", m.overall_accuracy()),
            Metrics::Regression(r) => {
                let p = r.pooled();
                format!("rmse_x {:.2} mm, rmse_y {:.2} mm", p.rmse_x(), p.rmse_y())
            }
        }
    }
}

pub fn evaluate(model: &mut Model, dataset: &Dataset, indices: &[usize]) -> Result<Metrics> {
    match model.task() {
        Task::Classify => evaluate_classifier(model, dataset, indices).map(Metrics::Classification),
        Task::Localize => evaluate_regressor(model, dataset, indices).map(Metrics::Regression),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRun {
    pub variant: Variant,
    pub seed: u64,
    pub param_count: usize,
    pub log: Vec<EpochLog>,
    pub metrics: Metrics,
}

/// Paired comparison of variants trained with the same seeds on the same
/// training records and evaluated on the same test records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub task: Task,
    pub seeds: Vec<u64>,
    pub test_records: usize,
    pub runs: Vec<AblationRun>,
}

impl AblationReport {
    pub fn runs_of(&self, variant: Variant) -> impl Iterator<Item = &AblationRun> {
        self.runs.iter().filter(move |r| r.variant == variant)
    }

    pub fn variants(&self) -> Vec<Variant> {
        let mut v: Vec<Variant> = Vec::new();
        for r in &self.runs {
            if !v.contains(&r.variant) {
                v.push(r.variant);
            }
        }
        v
    }

    pub fn mean_accuracy(&self, variant: Variant) -> Option<f64> {
        let accs: Vec<f64> = self.runs_of(variant).filter_map(|r| r.metrics.accuracy()).collect();
        (!accs.is_empty()).then(|| accs.iter().sum::<f64>() / accs.len() as f64)
    }

    /// Mean pooled `(L_x, L_y)` RMSE over seeds.
    pub fn mean_rmse(&self, variant: Variant) -> Option<(f64, f64)> {
        let r: Vec<(f64, f64)> = self.runs_of(variant).filter_map(|r| r.metrics.rmse()).collect();
        let n = r.len() as f64;
        (!r.is_empty()).then(|| (r.iter().map(|v| v.0).sum::<f64>() / n, r.iter().map(|v| v.1).sum::<f64>() / n))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("variant,seed,params,accuracy,rmse_x_mm,rmse_y_mm\n");
        for r in &self.runs {
            let acc = r.metrics.accuracy().map_or(String::new(), |a| a.to_string());
            let (rx, ry) = r.metrics.rmse().map_or((String::new(), String::new()), |(x, y)| (x.to_string(), y.to_string()));
            let _ = writeln!(out, "{},{},{},{acc},{rx},{ry}", r.variant, r.seed, r.param_count);
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = format!(
            "task {}, seeds {:?}, {} test records\n",
            self.task, self.seeds, self.test_records
        );
        let mut rows: Vec<(Variant, f64)> = Vec::new();
        for v in self.variants() {
            match self.task {
                Task::Classify => {
                    let a = self.mean_accuracy(v).unwrap_or(f64::NAN);
                    let _ = writeln!(out, "{v:>10}: mean accuracy {a:.4}");
                    rows.push((v, a));
                }
                Task::Localize => {
                    let (x, y) = self.mean_rmse(v).unwrap_or((f64::NAN, f64::NAN));
                    let _ = writeln!(out, "{v:>10}: mean rmse_x {x:.2} mm, rmse_y {y:.2} mm");
                    rows.push((v, -(x * x + y * y).sqrt()));
                }
            }
        }
        rows.sort_by(|a, b| b.1.total_cmp(&a.1));
        let order: Vec<String> = rows.iter().map(|r| r.0.to_string()).collect();
        let _ = writeln!(out, "ranking (best first): {}", order.join(" > "));
        if let Some(base) = rows.iter().find(|r| r.0 == Variant::Fusion) {
            for (v, score) in rows.iter().filter(|r| r.0 != Variant::Fusion) {
                let delta = match self.task {
                    Task::Classify => format!("{:+.2} pp accuracy", 100.0 * (base.1 - score)),
                    Task::Localize => format!("{:+.1}% combined rmse", 100.0 * (score / base.1 - 1.0)),
                };
                let _ = writeln!(out, "fusion vs {v}: {delta}");
            }
        }
        out
    }
}

/// Trains every variant for every seed on the training split and evaluates
/// on the test split. The model seed and the batch-order seed are both the
/// listed seed.
pub fn ablation_suite(
    dataset: &Dataset,
    task: Task,
    variants: &[Variant],
    seeds: &[u64],
    config: &TrainConfig,
    mut on_run: impl FnMut(&AblationRun),
) -> Result<AblationReport> {
    let train_idx = dataset.indices(Split::Train);
    let test_idx = dataset.indices(Split::Test);
    if test_idx.is_empty() {
        return Err(Error::Validation("dataset has no test records".into()));
    }
    let mut runs = Vec::new();
    for &seed in seeds {
        for &variant in variants {
            let mut model = Model::new(ModelSpec::new(variant, task, seed))?;
            let log = train(
                &mut model,
                dataset,
                &train_idx,
                &TrainConfig {
                    seed,
                    ..config.clone()
                },
            )
            .map_err(|e| e.context(format!("training {variant} (seed {seed})")))?;
            let metrics = evaluate(&mut model, dataset, &test_idx)?;
            let run = AblationRun {
                variant,
                seed,
                param_count: model.param_count(),
                log,
                metrics,
            };
            on_run(&run);
            runs.push(run);
        }
    }
    Ok(AblationReport {
        task,
        seeds: seeds.to_vec(),
        test_records: test_idx.len(),
        runs,
    })
}

/// The pattern transitions replayed by default in streaming mode.
pub const DEFAULT_TRANSITIONS: [(PatternId, PatternId); 6] = [
    (PatternId::S6, PatternId::S4),
    (PatternId::S4, PatternId::S2),
    (PatternId::S2, PatternId::S4),
    (PatternId::S4, PatternId::S3),
    (PatternId::S3, PatternId::S5),
    (PatternId::S5, PatternId::S1),
];

/// A stationary recording in which the legs switch pattern once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StreamScenario {
    pub transitions: Vec<(PatternId, PatternId)>,
    /// Kicking time before and after each switch, s.
    pub segment_s: f64,
    pub l_x_mm: f64,
    pub l_y_mm: f64,
    pub sim: SimConfig,
    pub geometry: SensorGeometry,
}

impl Default for StreamScenario {
    fn default() -> Self {
        StreamScenario {
            transitions: DEFAULT_TRANSITIONS.to_vec(),
            segment_s: 12.0,
            l_x_mm: 0.0,
            l_y_mm: 60.0,
            sim: SimConfig {
                noise_std_pa: 0.5,
                ..SimConfig::default()
            },
            geometry: SensorGeometry::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StreamPoint {
    pub t: f64,
    pub truth: PatternId,
    pub predicted: PatternId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamTrace {
    pub from: PatternId,
    pub to: PatternId,
    pub switch_s: f64,
    pub points: Vec<StreamPoint>,
    /// Seconds from the switch until the start of the first run of
    /// [`STABLE_RUN`] correct predictions; `None` if that never happens.
    pub transient_s: Option<f64>,
}

/// Time from `switch_s` until the first instant at or after it from which
/// `STABLE_RUN` consecutive predictions are correct.
pub fn measure_transient(points: &[StreamPoint], switch_s: f64) -> Option<f64> {
    let start = points.iter().position(|p| p.t >= switch_s)?;
    let mut streak = 0;
    for i in start..points.len() {
        if points[i].predicted == points[i].truth {
            streak += 1;
            if streak == STABLE_RUN {
                return Some(points[i + 1 - STABLE_RUN].t - switch_s);
            }
        } else {
            streak = 0;
        }
    }
    None
}

/// Slides a window one sample at a time over the kicking part of `run`
/// (already baseline-corrected) and classifies each position. Every
/// prediction uses only samples up to its own timestamp.
pub fn stream_predictions(model: &mut Model, run: &crate::flowsim::Run) -> Result<Vec<StreamPoint>> {
    let len = model.spec().arch.window_len;
    let first = run.rest_samples + len - 1;
    let ends: Vec<usize> = (first..run.len()).collect();
    let mut points = Vec::with_capacity(ends.len());
    for chunk in ends.chunks(EVAL_BATCH) {
        let windows = chunk
            .iter()
            .map(|&e| PressureWindow::from_run(run, e, len))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<&PressureWindow> = windows.iter().collect();
        for (out, &e) in model.predict(&refs)?.iter().zip(chunk) {
            let predicted = out
                .class()
                .ok_or_else(|| Error::InvalidArgument("streaming needs a classifier".into()))?;
            points.push(StreamPoint {
                t: run.time[e],
                truth: run.pattern[e],
                predicted,
            });
        }
    }
    Ok(points)
}

/// Simulates each transition, streams the classifier over it and measures
/// the transient. With `from == to` the "switch" is the first full window.
pub fn streaming_recognition(model: &mut Model, scenario: &StreamScenario) -> Result<Vec<StreamTrace>> {
    if model.task() != Task::Classify {
        return Err(Error::InvalidArgument("streaming needs a classifier".into()));
    }
    let rate = scenario.sim.sample_rate_hz;
    let window_s = model.spec().arch.window_len as f64 / rate;
    let total_s = window_s + 2.0 * scenario.segment_s;
    let samples = (total_s * rate).round() as usize;
    let mut traces = Vec::new();
    for &(from, to) in &scenario.transitions {
        let switch_s = window_s + scenario.segment_s;
        let segments = [
            KickSegment {
                pattern: from.pattern(),
                start_s: 0.0,
                end_s: switch_s,
            },
            KickSegment {
                pattern: to.pattern(),
                start_s: switch_s,
                end_s: total_s + 1.0,
            },
        ];
        let trajectory = Trajectory::stationary(scenario.l_x_mm, scenario.l_y_mm, samples, rate);
        let raw = simulate_schedule(&segments, &scenario.geometry, &scenario.sim, &trajectory)
            .map_err(|e| e.context(format!("simulating {from}->{to}")))?;
        let run = subtract_baseline(&raw)?;
        let points = stream_predictions(model, &run)?;
        let reference = if from == to { points.first().map_or(switch_s, |p| p.t) } else { switch_s };
        let transient_s = measure_transient(&points, reference);
        traces.push(StreamTrace {
            from,
            to,
            switch_s: reference,
            points,
            transient_s,
        });
    }
    Ok(traces)
}

pub fn stream_traces_csv(traces: &[StreamTrace]) -> String {
    let mut out = String::from("transition,t,truth,predicted,correct\n");
    for tr in traces {
        for p in &tr.points {
            let _ = writeln!(
                out,
                "{}->{},{},{},{},{}",
                tr.from,
                tr.to,
                p.t,
                p.truth,
                p.predicted,
                u8::from(p.truth == p.predicted)
            );
        }
    }
    out
}

pub fn stream_summary_csv(traces: &[StreamTrace]) -> String {
    let mut out = String::from("from,to,switch_s,transient_s\n");
    for tr in traces {
        let t = tr.transient_s.map_or("none".to_string(), |v| v.to_string());
        let _ = writeln!(out, "{},{},{},{t}", tr.from, tr.to, tr.switch_s);
    }
    out
}

/// Plain-text evaluation summary.
pub fn summary_text(metrics: &Metrics, provenance: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (k, v) in provenance {
        let _ = writeln!(out, "{k}: {v}");
    }
    match metrics {
        Metrics::Classification(m) => {
            let _ = writeln!(
                out,
                "overall accuracy: {:.4} ({} / {})",
                m.overall_accuracy(),
                m.correct(),
                m.total()
            );
            for (p, acc) in PatternId::ALL.iter().zip(m.per_class_accuracy()) {
                let _ = writeln!(out, "  {p}: {acc:.4}");
            }
        }
        Metrics::Regression(r) => {
            let p = r.pooled();
            let _ = writeln!(out, "pooled rmse: L_x {:.2} mm, L_y {:.2} mm (n = {})", p.rmse_x(), p.rmse_y(), p.n);
            let _ = writeln!(
                out,
                "within {} mm: L_x {:.4}, L_y {:.4}",
                r.band_mm,
                p.band_fraction_x(),
                p.band_fraction_y()
            );
            for pat in r.patterns() {
                let s = r.pattern(pat);
                let _ = writeln!(out, "  {pat}: L_x {:.2} mm, L_y {:.2} mm", s.rmse_x(), s.rmse_y());
            }
            for l in r.levels() {
                let _ = writeln!(out, "  L_y = {l} mm: mean L_x rmse over patterns {:.2} mm", r.mean_rmse_x_at(l));
            }
        }
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Stream windows match the network input length.
pub const STREAM_WINDOW: usize = WINDOW_LEN;

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn perfect_predictor() {
        let pairs: Vec<_> = PatternId::ALL.iter().flat_map(|&p| std::iter::repeat((p, p)).take(5)).collect();
        let m = ConfusionMatrix::from_pairs(pairs);
        assert_eq!(m.overall_accuracy(), 1.0);
        assert_eq!(m.total(), 30);
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(m.counts[i][j], if i == j { 5 } else { 0 });
            }
        }
    }

    #[test]
    fn uniform_random_predictor_is_near_chance() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let pairs: Vec<_> = (0..6000)
            .map(|i| {
                let t = PatternId::ALL[i % 6];
                (t, PatternId::ALL[rng.gen_range(0..6)])
            })
            .collect();
        let tally = pairs.iter().filter(|(t, p)| t == p).count() as f64 / pairs.len() as f64;
        let m = ConfusionMatrix::from_pairs(pairs);
        assert!((m.overall_accuracy() - 1.0 / 6.0).abs() < 0.03);
        assert_eq!(m.overall_accuracy(), tally);
        let rows: Vec<usize> = m.counts.iter().map(|r| r.iter().sum()).collect();
        assert_eq!(rows, vec![1000; 6]);
    }

    fn report(items: &[(PatternId, [f64; 2], (f64, f64))]) -> RmseReport {
        RmseReport::from_predictions(items.iter().copied(), TOLERANCE_BAND_MM)
    }

    #[test]
    fn exact_predictions_have_zero_rmse() {
        let r = report(&[(PatternId::S1, [10.0, 20.0], (10.0, 20.0)), (PatternId::S2, [-3.0, 40.0], (-3.0, 40.0))]);
        assert_eq!(r.pooled().rmse_x(), 0.0);
        assert_eq!(r.pooled().rmse_y(), 0.0);
        assert_eq!(r.pooled().band_fraction_y(), 1.0);
    }

    #[test]
    fn constant_mean_predictor_gives_population_std() {
        let ys = [20.0, 40.0, 60.0, 100.0, 200.0];
        let mean = ys.iter().sum::<f64>() / 5.0;
        let std = (ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / 5.0).sqrt();
        let items: Vec<_> = ys.iter().map(|&y| (PatternId::S3, [0.0, y], (0.0, mean))).collect();
        assert!((report(&items).pooled().rmse_y() - std).abs() < 1e-12);
    }

    #[test]
    fn stratified_rmse_composes_to_pooled() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let items: Vec<_> = (0..500)
            .map(|i| {
                let l_y = 20.0 * (1 + i % 10) as f64;
                let x = rng.gen_range(-100.0..100.0);
                (PatternId::ALL[i % 6], [x, l_y], (x + rng.gen_range(-30.0..30.0), l_y + rng.gen_range(-9.0..9.0)))
            })
            .collect();
        let r = report(&items);
        let pooled = r.pooled();
        let (mut num_x, mut num_y, mut n) = (0.0, 0.0, 0);
        for l in r.levels() {
            let s = r.level(l);
            num_x += s.n as f64 * s.rmse_x().powi(2);
            num_y += s.n as f64 * s.rmse_y().powi(2);
            n += s.n;
        }
        assert_eq!(n, 500);
        assert!(((num_x / n as f64).sqrt() - pooled.rmse_x()).abs() < 1e-9);
        assert!(((num_y / n as f64).sqrt() - pooled.rmse_y()).abs() < 1e-9);
    }

    fn points(flags: &[bool], switch_at: usize) -> Vec<StreamPoint> {
        flags
            .iter()
            .enumerate()
            .map(|(i, &ok)| {
                let truth = if i < switch_at { PatternId::S1 } else { PatternId::S2 };
                StreamPoint {
                    t: i as f64 * 0.04,
                    truth,
                    predicted: if ok { truth } else { PatternId::S6 },
                }
            })
            .collect()
    }

    #[test]
    fn transient_waits_for_a_stable_run() {
        let mut flags = vec![true; 40];
        // wrong right after the switch at sample 10, one flicker at 17
        for f in &mut flags[10..15] {
            *f = false;
        }
        flags[17] = false;
        let pts = points(&flags, 10);
        let t = measure_transient(&pts, pts[10].t).unwrap();
        assert!((t - 8.0 * 0.04).abs() < 1e-12);
        assert_eq!(measure_transient(&points(&[true; 40], 0), 0.0), Some(0.0));
        assert_eq!(measure_transient(&points(&[false; 40], 0), 0.0), None);
    }

    #[test]
    fn transitions_default() {
        let s = StreamScenario::default();
        assert_eq!(s.transitions.len(), 6);
        assert_eq!(s.transitions[0], (PatternId::S6, PatternId::S4));
        assert_eq!(s.transitions[5], (PatternId::S5, PatternId::S1));
    }
}
