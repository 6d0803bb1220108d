//! Labeled window datasets: simulation of the experiment matrix, CSV
//! export/ingest, repetition-level splits and the dataset manifest.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flowsim::{sweep_experiment, Run, SensorGeometry, SimConfig, LY_LEVELS_MM};
use crate::kinematics::PatternId;
use crate::signal::{sliding_windows, subtract_baseline, PressureWindow, WINDOW_LEN};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const DEFAULT_STRIDE: usize = 5;

/// Identifies one run of the experiment matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RunKey {
    pub pattern: PatternId,
    pub l_y_mm: u32,
    pub repetition: u32,
}

impl RunKey {
    pub fn file_name(&self) -> String {
        format!("{self}.csv")
    }

    /// Inverse of [`RunKey::file_name`].
    pub fn parse_file_name(name: &str) -> Option<RunKey> {
        let stem = name.strip_suffix(".csv")?;
        let mut parts = stem.split('_');
        let pattern = parts.next()?.parse().ok()?;
        let l_y_mm = parts.next()?.strip_prefix("ly")?.parse().ok()?;
        let repetition = parts.next()?.strip_prefix("rep")?.parse().ok()?;
        if parts.next().is_some() {
            return None;
        }
        Some(RunKey {
            pattern,
            l_y_mm,
            repetition,
        })
    }
}

impl fmt::Display for RunKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_ly{:03}_rep{:02}", self.pattern, self.l_y_mm, self.repetition)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

/// Fractions of each configuration's repetitions per split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions {
            train: 0.8,
            val: 0.1,
            test: 0.1,
        }
    }
}

impl SplitFractions {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|p| !p.is_finite() || *p < 0.0) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("split fractions {parts:?} must be non-negative and sum to 1")));
        }
        Ok(())
    }

    /// `(train, val, test)` repetition counts for `n` repetitions. A
    /// non-zero fraction gets at least one repetition as long as one is
    /// left for training (test is served before val).
    pub fn counts(&self, n: usize) -> (usize, usize, usize) {
        let share = |f: f64, left: usize| {
            let k = ((n as f64) * f).round() as usize;
            let k = if f > 0.0 && k == 0 { 1 } else { k };
            k.min(left.saturating_sub(1))
        };
        let test = share(self.test, n);
        let val = share(self.val, n - test);
        (n - test - val, val, test)
    }
}

/// The simulated experiment matrix and how it is cut into windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub patterns: Vec<PatternId>,
    pub ly_levels_mm: Vec<u32>,
    pub repetitions: u32,
    pub window_len: usize,
    pub stride: usize,
    pub split_seed: u64,
    pub fractions: SplitFractions,
    pub sim: SimConfig,
    pub geometry: SensorGeometry,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            patterns: PatternId::ALL.to_vec(),
            ly_levels_mm: LY_LEVELS_MM.iter().map(|&l| l as u32).collect(),
            repetitions: 10,
            window_len: WINDOW_LEN,
            stride: DEFAULT_STRIDE,
            split_seed: 0,
            fractions: SplitFractions::default(),
            sim: SimConfig::default(),
            geometry: SensorGeometry::default(),
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if self.patterns.is_empty() || self.ly_levels_mm.is_empty() {
            return Err(Error::Config("the experiment matrix is empty".into()));
        }
        if self.window_len == 0 || self.stride == 0 {
            return Err(Error::Config("window length and stride must be positive".into()));
        }
        self.fractions.validate()?;
        self.sim.validate()?;
        self.geometry.validate()
    }

    pub fn keys(&self) -> Vec<RunKey> {
        let mut keys = Vec::new();
        for &pattern in &self.patterns {
            for &l_y_mm in &self.ly_levels_mm {
                for repetition in 0..self.repetitions {
                    keys.push(RunKey {
                        pattern,
                        l_y_mm,
                        repetition,
                    });
                }
            }
        }
        keys
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Simulator seed of one run, derived from the base seed and the run key.
pub fn run_seed(base: u64, key: &RunKey) -> u64 {
    let packed = (key.pattern.index() as u64) << 48 | (key.l_y_mm as u64) << 16 | key.repetition as u64;
    splitmix(base ^ splitmix(packed))
}

/// Raw (uncorrected) sweep runs for every key of the matrix.
pub fn simulate_matrix(config: &DatasetConfig) -> Result<Vec<(RunKey, Run)>> {
    config.validate()?;
    config
        .keys()
        .into_iter()
        .map(|key| {
            let sim = SimConfig {
                seed: run_seed(config.sim.seed, &key),
                ..config.sim.clone()
            };
            sweep_experiment(&key.pattern.pattern(), &config.geometry, &sim, key.l_y_mm as f64)
                .map(|run| (key, run))
                .map_err(|e| e.context(format!("simulating {key}")))
        })
        .collect()
}

/// One labeled window. The samples live in the owning [`Dataset`]; see
/// [`Dataset::window`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetRecord {
    /// Index into [`Dataset::runs`].
    pub run: usize,
    /// Final sample of the window within the run.
    pub end: usize,
    pub pattern: PatternId,
    pub l_x: f64,
    pub l_y: f64,
    pub repetition: u32,
    pub split: Option<Split>,
}

impl DatasetRecord {
    pub fn target(&self) -> [f64; 2] {
        [self.l_x, self.l_y]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceRun {
    pub key: RunKey,
    /// Baseline-corrected.
    pub run: Run,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub window_len: usize,
    pub stride: usize,
    pub runs: Vec<SourceRun>,
    pub records: Vec<DatasetRecord>,
}

impl Dataset {
    /// Corrects each raw run against its rest segment and windows it.
    pub fn from_runs(raw: &[(RunKey, Run)], window_len: usize, stride: usize) -> Result<Self> {
        let mut runs = Vec::with_capacity(raw.len());
        let mut records = Vec::new();
        for (i, (key, run)) in raw.iter().enumerate() {
            let corrected = subtract_baseline(run).map_err(|e| e.context(format!("run {key}")))?;
            let set = sliding_windows(&corrected, window_len, stride)?;
            records.extend(set.windows.iter().map(|w| DatasetRecord {
                run: i,
                end: w.end,
                pattern: w.label.pattern,
                l_x: w.label.l_x,
                l_y: w.label.l_y,
                repetition: key.repetition,
                split: None,
            }));
            runs.push(SourceRun {
                key: *key,
                run: corrected,
            });
        }
        Ok(Dataset {
            window_len,
            stride,
            runs,
            records,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn window(&self, record: &DatasetRecord) -> PressureWindow {
        PressureWindow::from_run(&self.runs[record.run].run, record.end, self.window_len)
            .expect("records always index a full window of their run")
    }

    pub fn windows(&self, indices: &[usize]) -> Vec<PressureWindow> {
        indices.iter().map(|&i| self.window(&self.records[i])).collect()
    }

    /// Record indices in `split`, in dataset order.
    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.records.len()).filter(|&i| self.records[i].split == Some(split)).collect()
    }

    pub fn key_of(&self, record: &DatasetRecord) -> RunKey {
        self.runs[record.run].key
    }

    /// Assigns whole runs to splits. Within each (pattern, `L_y`)
    /// configuration the repetitions are shuffled with `seed` and cut by
    /// `fractions`.
    pub fn split(mut self, fractions: SplitFractions, seed: u64) -> Result<Self> {
        fractions.validate()?;
        let mut groups: BTreeMap<(PatternId, u32), Vec<usize>> = BTreeMap::new();
        for (i, r) in self.runs.iter().enumerate() {
            groups.entry((r.key.pattern, r.key.l_y_mm)).or_default().push(i);
        }
        let mut assignment = vec![Split::Train; self.runs.len()];
        for ((pattern, l_y), mut members) in groups {
            members.sort_by_key(|&i| (self.runs[i].key.repetition, i));
            let group_seed = splitmix(seed ^ splitmix((pattern.index() as u64) << 32 | l_y as u64));
            members.shuffle(&mut ChaCha8Rng::seed_from_u64(group_seed));
            let (train, val, _) = fractions.counts(members.len());
            for (pos, &run) in members.iter().enumerate() {
                assignment[run] = if pos < train {
                    Split::Train
                } else if pos < train + val {
                    Split::Val
                } else {
                    Split::Test
                };
            }
        }
        for r in &mut self.records {
            r.split = Some(assignment[r.run]);
        }
        Ok(self)
    }
}

/// Simulates, corrects, windows and splits the configured matrix.
pub fn build_dataset(config: &DatasetConfig) -> Result<Dataset> {
    let raw = simulate_matrix(config)?;
    Dataset::from_runs(&raw, config.window_len, config.stride)?.split(config.fractions, config.split_seed)
}

pub fn export_runs(raw: &[(RunKey, Run)], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    raw.iter()
        .map(|(key, run)| {
            let path = dir.join(key.file_name());
            run.write_csv(&path)?;
            Ok(path)
        })
        .collect()
}

const TIME_COLUMN: &str = "t";
const LABEL_COLUMNS: [&str; 3] = ["L_x", "L_y", "pattern_id"];

/// Reads one run in the simulator's CSV schema. Rows with negative
/// timestamps form the rest segment.
pub fn read_run_csv(path: &Path) -> Result<Run> {
    let mut reader = csv::ReaderBuilder::new()
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let column = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Schema {
            path: path.to_path_buf(),
            column: name.to_string(),
        })
    };
    let t_col = column(TIME_COLUMN)?;
    let [x_col, y_col, id_col] = [column(LABEL_COLUMNS[0])?, column(LABEL_COLUMNS[1])?, column(LABEL_COLUMNS[2])?];
    let mut p_cols = Vec::new();
    while let Some(i) = headers.iter().position(|h| h == format!("p{}", p_cols.len() + 1)) {
        p_cols.push(i);
    }
    if p_cols.is_empty() {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            column: "p1".into(),
        });
    }
    let sensors = p_cols.len();
    let mut run = Run {
        sample_rate_hz: 0.0,
        sensors,
        rest_samples: 0,
        time: Vec::new(),
        pressure: Vec::new(),
        l_x: Vec::new(),
        l_y: Vec::new(),
        pattern: Vec::new(),
    };
    for (row, record) in reader.records().enumerate() {
        // Line 1 is the header.
        let line = row + 2;
        let record = record.map_err(|e| csv_error(path, e))?;
        let parse_err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let num = |i: usize| -> Result<f64> {
            let field = record.get(i).unwrap_or("");
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("column {:?}: {field:?} is not a number", &headers[i])))?;
            if !v.is_finite() {
                return Err(parse_err(format!("column {:?} is not finite", &headers[i])));
            }
            Ok(v)
        };
        let t = num(t_col)?;
        if let Some(&prev) = run.time.last() {
            if t <= prev {
                return Err(Error::Validation(format!(
                    "{}: timestamps not increasing at line {line} ({t} after {prev})",
                    path.display()
                )));
            }
        }
        if t < 0.0 {
            if run.rest_samples != run.time.len() {
                return Err(parse_err("rest rows must precede the kicking rows".into()));
            }
            run.rest_samples += 1;
        }
        run.time.push(t);
        for &c in &p_cols {
            run.pressure.push(num(c)?);
        }
        run.l_x.push(num(x_col)?);
        run.l_y.push(num(y_col)?);
        let id = record.get(id_col).unwrap_or("");
        run.pattern
            .push(id.trim().parse().map_err(|_| parse_err(format!("unknown pattern id {id:?}")))?);
    }
    if run.time.len() < 2 {
        return Err(Error::Validation(format!("{}: fewer than two samples", path.display())));
    }
    let dt = run.time[1] - run.time[0];
    run.sample_rate_hz = (1e6 / dt).round() / 1e6;
    Ok(run)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.position() {
        Some(pos) => Error::Parse {
            path: path.to_path_buf(),
            line: pos.line() as usize,
            msg: e.to_string(),
        },
        None => match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Parse {
                path: path.to_path_buf(),
                line: 0,
                msg: format!("{other:?}"),
            },
        },
    }
}

/// Key of an ingested run: from the file name when it follows the export
/// convention, otherwise from the labels of its first kicking row.
fn infer_key(path: &Path, run: &Run, seen: &BTreeMap<(PatternId, u32), u32>) -> RunKey {
    if let Some(key) = path.file_name().and_then(|n| n.to_str()).and_then(RunKey::parse_file_name) {
        return key;
    }
    let i = run.rest_samples.min(run.len() - 1);
    let (pattern, l_y_mm) = (run.pattern[i], run.l_y[i].round() as u32);
    RunKey {
        pattern,
        l_y_mm,
        repetition: seen.get(&(pattern, l_y_mm)).copied().unwrap_or(0),
    }
}

/// Raw runs from CSV files, in the given order.
pub fn read_runs(paths: &[PathBuf]) -> Result<Vec<(RunKey, Run)>> {
    let mut seen: BTreeMap<(PatternId, u32), u32> = BTreeMap::new();
    let mut out = Vec::with_capacity(paths.len());
    for path in paths {
        let run = read_run_csv(path)?;
        let key = infer_key(path, &run, &seen);
        *seen.entry((key.pattern, key.l_y_mm)).or_default() += 1;
        out.push((key, run));
    }
    Ok(out)
}

/// CSV recordings through the same correction and windowing as simulated
/// runs. Records are left unsplit.
pub fn ingest_csv(paths: &[PathBuf], window_len: usize, stride: usize) -> Result<Dataset> {
    Dataset::from_runs(&read_runs(paths)?, window_len, stride)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the manifest's directory.
    pub file: String,
    pub key: RunKey,
}

/// Lists a dataset's source files with everything needed to rebuild it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: Vec<ManifestEntry>,
    pub window_len: usize,
    pub stride: usize,
    pub split_seed: u64,
    pub fractions: SplitFractions,
    pub sim: Option<SimConfig>,
    pub geometry: Option<SensorGeometry>,
}

impl Manifest {
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self)?;
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    /// Reads a manifest from a file or from `manifest.json` in a directory.
    pub fn read(path: &Path) -> Result<(Manifest, PathBuf)> {
        let file = if path.extension().is_some_and(|e| e == "json") {
            path.to_path_buf()
        } else {
            path.join(MANIFEST_FILE)
        };
        let text = fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
        let manifest = serde_json::from_str(&text).map_err(|e| Error::from(e).context(format!("reading {}", file.display())))?;
        let dir = file.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((manifest, dir))
    }

    /// Ingests the listed files and applies the recorded split.
    pub fn load_dataset(&self, dir: &Path) -> Result<Dataset> {
        let paths: Vec<PathBuf> = self.files.iter().map(|f| dir.join(&f.file)).collect();
        let mut raw = read_runs(&paths)?;
        for ((key, _), entry) in raw.iter_mut().zip(&self.files) {
            *key = entry.key;
        }
        Dataset::from_runs(&raw, self.window_len, self.stride)?.split(self.fractions, self.split_seed)
    }
}

/// Simulates the matrix, writes one CSV per run plus the manifest into
/// `dir`, and returns the manifest.
pub fn simulate_to_dir(config: &DatasetConfig, dir: &Path) -> Result<Manifest> {
    let raw = simulate_matrix(config)?;
    let paths = export_runs(&raw, dir)?;
    let manifest = Manifest {
        files: raw
            .iter()
            .zip(&paths)
            .map(|((key, _), p)| ManifestEntry {
                file: p.file_name().unwrap().to_string_lossy().into_owned(),
                key: *key,
            })
            .collect(),
        window_len: config.window_len,
        stride: config.stride,
        split_seed: config.split_seed,
        fractions: config.fractions,
        sim: Some(config.sim.clone()),
        geometry: Some(config.geometry.clone()),
    };
    manifest.write(dir)?;
    Ok(manifest)
}

/// Per-split record counts keyed by pattern.
pub fn split_counts(dataset: &Dataset) -> BTreeMap<(Split, PatternId), usize> {
    let mut out = BTreeMap::new();
    for r in &dataset.records {
        if let Some(s) = r.split {
            *out.entry((s, r.pattern)).or_default() += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> DatasetConfig {
        DatasetConfig {
            patterns: vec![PatternId::S1, PatternId::S4],
            ly_levels_mm: vec![20, 200],
            repetitions: 3,
            ..DatasetConfig::default()
        }
    }

    #[test]
    fn key_file_names_roundtrip() {
        let key = RunKey {
            pattern: PatternId::S5,
            l_y_mm: 40,
            repetition: 7,
        };
        assert_eq!(key.file_name(), "s5_ly040_rep07.csv");
        assert_eq!(RunKey::parse_file_name(&key.file_name()), Some(key));
        assert_eq!(RunKey::parse_file_name("s5_ly040.csv"), None);
        assert_eq!(RunKey::parse_file_name("x_ly040_rep01.csv"), None);
    }

    #[test]
    fn default_matrix_size() {
        assert_eq!(DatasetConfig::default().keys().len(), 600);
        let one = DatasetConfig {
            repetitions: 1,
            ..DatasetConfig::default()
        };
        assert_eq!(one.keys().len(), 60);
    }

    #[test]
    fn fraction_counts() {
        let f = SplitFractions::default();
        assert_eq!(f.counts(10), (8, 1, 1));
        assert_eq!(f.counts(1), (1, 0, 0));
        assert_eq!(f.counts(2), (1, 0, 1));
        assert_eq!(f.counts(3), (1, 1, 1));
        assert_eq!(f.counts(20), (16, 2, 2));
        assert!(SplitFractions { train: 0.5, val: 0.1, test: 0.1 }.validate().is_err());
    }

    #[test]
    fn record_count_matches_window_arithmetic() {
        let config = small();
        let raw = simulate_matrix(&config).unwrap();
        let ds = Dataset::from_runs(&raw, 100, 5).unwrap();
        let mut expected = 0;
        for (_, run) in &raw {
            let mut end = run.rest_samples + 99;
            while end < run.len() {
                if run.l_x[end].abs() <= 100.0 {
                    expected += 1;
                }
                end += 5;
            }
        }
        assert_eq!(ds.len(), expected);
        assert!(ds.records.iter().all(|r| r.l_x.abs() <= 100.0));
    }

    #[test]
    fn labels_match_final_sample() {
        let raw = simulate_matrix(&small()).unwrap();
        let ds = Dataset::from_runs(&raw, 100, 7).unwrap();
        for r in ds.records.iter().step_by(13) {
            let run = &raw[r.run].1;
            assert_eq!((r.l_x, r.l_y, r.pattern), (run.l_x[r.end], run.l_y[r.end], run.pattern[r.end]));
            let w = ds.window(r);
            assert_eq!(w.t_end, run.time[r.end]);
        }
    }

    #[test]
    fn splits_never_share_a_run() {
        let config = DatasetConfig {
            repetitions: 10,
            ly_levels_mm: vec![20],
            patterns: vec![PatternId::S2],
            ..DatasetConfig::default()
        };
        let ds = build_dataset(&config).unwrap();
        let mut owner: BTreeMap<usize, Split> = BTreeMap::new();
        for r in &ds.records {
            let s = r.split.unwrap();
            assert_eq!(*owner.entry(r.run).or_insert(s), s);
        }
        let runs_per_split = |s| owner.values().filter(|&&v| v == s).count();
        assert_eq!((runs_per_split(Split::Train), runs_per_split(Split::Val), runs_per_split(Split::Test)), (8, 1, 1));
        let again = build_dataset(&config).unwrap();
        assert_eq!(again, ds);
    }

    #[test]
    fn missing_column_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "t,p1,p2,p3,L_x,pattern_id\n-0.04,1,2,3,0,s1\n").unwrap();
        match read_run_csv(&path) {
            Err(Error::Schema { column, .. }) => assert_eq!(column, "L_y"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_number_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "t,p1,L_x,L_y,pattern_id\n-0.04,1,0,20,s1\n0,abc,0,20,s1\n").unwrap();
        match read_run_csv(&path) {
            Err(Error::Parse { line, msg, .. }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("p1"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_monotonic_time_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "t,p1,L_x,L_y,pattern_id\n-0.04,1,0,20,s1\n0,1,0,20,s1\n0,1,0,20,s1\n").unwrap();
        assert!(matches!(read_run_csv(&path), Err(Error::Validation(_))));
    }

    #[test]
    fn export_ingest_roundtrip() {
        let config = DatasetConfig {
            repetitions: 1,
            ..small()
        };
        let dir = tempfile::tempdir().unwrap();
        let manifest = simulate_to_dir(&config, dir.path()).unwrap();
        assert_eq!(manifest.files.len(), 4);
        let (back, root) = Manifest::read(dir.path()).unwrap();
        assert_eq!(back, manifest);
        let loaded = back.load_dataset(&root).unwrap();
        assert_eq!(loaded, build_dataset(&config).unwrap());
    }
}
