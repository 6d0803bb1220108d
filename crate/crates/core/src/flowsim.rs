//! Phenomenological surrogate for the flow behind two kicking legs.
//!
//! Each leg tip acts as an oscillating point source whose pressure amplitude
//! at a sensor port decays as `exp(-r / decay_length) / r^2`. The two leg
//! contributions superpose, so in-phase (dolphin) kicks reinforce and
//! anti-phase (flutter) kicks partially cancel. Source strength grows
//! linearly with kick frequency. This is not a hydrodynamic solver: it only
//! reproduces the frequency content, the inter-leg phase structure and the
//! distance decay that the sensing pipeline relies on.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{KickPattern, PatternId};

/// Sweep endpoints of the leg carriage, mm.
pub const SWEEP_LIMIT_MM: f64 = 175.0;
/// Half-width of the region kept for training and evaluation, mm.
pub const EFFECTIVE_LIMIT_MM: f64 = 100.0;
/// Longitudinal displacements of the experiment matrix, mm.
pub const LY_LEVELS_MM: [f64; 10] = [
    20.0, 40.0, 60.0, 80.0, 100.0, 120.0, 140.0, 160.0, 180.0, 200.0,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorGeometry {
    pub sensor_count: usize,
    /// Port angles on the cylinder, radians; `pi/2` faces the legs.
    pub angular_positions: Vec<f64>,
    pub cylinder_radius_m: f64,
    /// Height of the ports above the plane of the leg tips.
    pub sensor_depth_offset_m: f64,
    /// Lateral distance between the two leg tips.
    pub leg_spacing_m: f64,
}

impl Default for SensorGeometry {
    fn default() -> Self {
        SensorGeometry {
            sensor_count: 3,
            angular_positions: vec![PI / 4.0, PI / 2.0, 3.0 * PI / 4.0],
            cylinder_radius_m: 0.04,
            sensor_depth_offset_m: 0.0,
            leg_spacing_m: 0.05,
        }
    }
}

impl SensorGeometry {
    pub fn validate(&self) -> Result<()> {
        if self.sensor_count == 0 || self.angular_positions.len() != self.sensor_count {
            return Err(Error::InvalidGeometry(format!(
                "{} angular positions for {} sensors",
                self.angular_positions.len(),
                self.sensor_count
            )));
        }
        if self.angular_positions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGeometry(
                "angular positions must be strictly increasing".into(),
            ));
        }
        if !(self.cylinder_radius_m > 0.0 && self.leg_spacing_m >= 0.0) {
            return Err(Error::InvalidGeometry(
                "cylinder radius must be positive and leg spacing non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Index of the port closest to the line of symmetry.
    pub fn midline_sensor(&self) -> usize {
        let mut best = 0;
        for (i, a) in self.angular_positions.iter().enumerate() {
            if (a - PI / 2.0).abs() < (self.angular_positions[best] - PI / 2.0).abs() {
                best = i;
            }
        }
        best
    }

    fn port(&self, sensor: usize) -> (f64, f64) {
        let a = self.angular_positions[sensor];
        (self.cylinder_radius_m * a.cos(), self.cylinder_radius_m * a.sin())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub sample_rate_hz: f64,
    pub noise_std_pa: f64,
    pub decay_length_m: f64,
    /// Source strength per Hz of kick frequency, Pa m^2.
    pub source_strength: f64,
    pub lateral_speed_mm_per_min: f64,
    pub seed: u64,
    pub amplitude_m: f64,
    pub rest_duration_s: f64,
    /// Time constant for the flow field to build up or die down, s.
    pub flow_time_constant_s: f64,
    pub static_pressure_pa: f64,
    /// Half-width of the uniform per-sensor calibration offset, Pa.
    pub sensor_offset_pa: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            sample_rate_hz: 25.0,
            noise_std_pa: 2.0,
            decay_length_m: 0.25,
            source_strength: 1.0,
            lateral_speed_mm_per_min: 500.0,
            seed: 0,
            amplitude_m: crate::kinematics::DEFAULT_AMPLITUDE_M,
            rest_duration_s: 8.0,
            flow_time_constant_s: 0.4,
            // atmosphere plus half a meter of water
            static_pressure_pa: 106_230.0,
            sensor_offset_pa: 40.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("sample_rate_hz", self.sample_rate_hz),
            ("decay_length_m", self.decay_length_m),
            ("lateral_speed_mm_per_min", self.lateral_speed_mm_per_min),
            ("amplitude_m", self.amplitude_m),
            ("flow_time_constant_s", self.flow_time_constant_s),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.noise_std_pa >= 0.0 && self.source_strength >= 0.0 && self.sensor_offset_pa >= 0.0) {
            return Err(Error::Config(
                "noise_std_pa, source_strength and sensor_offset_pa must be non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn rest_samples(&self) -> usize {
        (self.rest_duration_s * self.sample_rate_hz).round().max(0.0) as usize
    }

    pub fn lateral_speed_mm_per_s(&self) -> f64 {
        self.lateral_speed_mm_per_min / 60.0
    }
}

/// Positions of the leg carriage, one entry per output sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<TrajectoryPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub l_x: f64,
    pub l_y: f64,
}

impl Trajectory {
    /// Legs held at one position for `samples` samples.
    pub fn stationary(l_x: f64, l_y: f64, samples: usize, sample_rate_hz: f64) -> Self {
        Trajectory {
            samples: (0..samples)
                .map(|k| TrajectoryPoint {
                    t: k as f64 / sample_rate_hz,
                    l_x,
                    l_y,
                })
                .collect(),
        }
    }

    /// Constant-speed sweep from `-limit` to `+limit` and back at fixed `l_y`.
    pub fn sweep(l_y: f64, config: &SimConfig) -> Self {
        let speed = config.lateral_speed_mm_per_s();
        let half = 2.0 * SWEEP_LIMIT_MM / speed;
        let samples = (2.0 * half * config.sample_rate_hz).round() as usize + 1;
        Trajectory {
            samples: (0..samples)
                .map(|k| {
                    let t = k as f64 / config.sample_rate_hz;
                    let travelled = if t <= half {
                        speed * t
                    } else {
                        speed * (2.0 * half - t)
                    };
                    TrajectoryPoint {
                        t,
                        l_x: -SWEEP_LIMIT_MM + travelled,
                        l_y,
                    }
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::Config("trajectory is empty".into()));
        }
        if self.samples.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(Error::Validation(
                "trajectory timestamps must be strictly increasing".into(),
            ));
        }
        Ok(())
    }
}

/// One stretch of kicking in a (possibly switching) schedule.
#[derive(Debug, Clone, Copy)]
pub struct KickSegment {
    pub pattern: KickPattern,
    pub start_s: f64,
    pub end_s: f64,
}

/// A pressure recording: a rest segment (negative timestamps) followed by the
/// kicking segment, with the ground truth of every sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub sample_rate_hz: f64,
    pub sensors: usize,
    pub rest_samples: usize,
    pub time: Vec<f64>,
    /// Row-major `len x sensors`, Pa.
    pub pressure: Vec<f64>,
    pub l_x: Vec<f64>,
    pub l_y: Vec<f64>,
    pub pattern: Vec<PatternId>,
}

impl Run {
    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.pressure[i * self.sensors..(i + 1) * self.sensors]
    }

    pub fn in_effective_region(&self, i: usize) -> bool {
        self.l_x[i].abs() <= EFFECTIVE_LIMIT_MM
    }

    /// Writes the run as CSV: `t,p1..pN,L_x,L_y,pattern_id`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::with_capacity(self.len() * 48);
        out.push('t');
        for s in 0..self.sensors {
            out.push_str(&format!(",p{}", s + 1));
        }
        out.push_str(",L_x,L_y,pattern_id\n");
        for i in 0..self.len() {
            out.push_str(&format!("{}", self.time[i]));
            for p in self.row(i) {
                out.push_str(&format!(",{p}"));
            }
            out.push_str(&format!(",{},{},{}\n", self.l_x[i], self.l_y[i], self.pattern[i]));
        }
        let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

fn envelope(t: f64, seg: &KickSegment, tau: f64) -> f64 {
    if t < seg.start_s {
        return 0.0;
    }
    let rise = |dt: f64| 1.0 - (-dt / tau).exp();
    if t < seg.end_s {
        rise(t - seg.start_s)
    } else {
        rise(seg.end_s - seg.start_s) * (-(t - seg.end_s) / tau).exp()
    }
}

/// Spatial gains `exp(-r/decay) / r^2` of the left and right leg at one port.
fn leg_gains(
    geometry: &SensorGeometry,
    config: &SimConfig,
    l_x_mm: f64,
    l_y_mm: f64,
    sensor: usize,
) -> (f64, f64) {
    let (px, py) = geometry.port(sensor);
    let tip_y = geometry.cylinder_radius_m + l_y_mm * 1e-3;
    let half = 0.5 * geometry.leg_spacing_m;
    let gain = |tip_x: f64| {
        let dx = tip_x - px;
        let dy = tip_y - py;
        let dz = geometry.sensor_depth_offset_m;
        let r2 = dx * dx + dy * dy + dz * dz;
        (-r2.sqrt() / config.decay_length_m).exp() / r2
    };
    (
        gain(l_x_mm * 1e-3 - half),
        gain(l_x_mm * 1e-3 + half),
    )
}

/// Fully developed two-source pressure, `kick_time` measured from kick onset.
fn kick_term(pattern: &KickPattern, config: &SimConfig, gains: (f64, f64), kick_time: f64) -> f64 {
    let strength = config.source_strength * pattern.frequency_hz;
    let phase = 2.0 * PI * pattern.frequency_hz * kick_time;
    // normalized leg deflections A_i(t) / A
    let left = (phase + pattern.phase_left).sin();
    let right = (phase + pattern.phase_right).sin();
    strength * (gains.0 * left + gains.1 * right)
}

/// Noise-free gauge pressure at one port for a kick schedule.
fn schedule_pressure(
    segments: &[KickSegment],
    geometry: &SensorGeometry,
    config: &SimConfig,
    l_x_mm: f64,
    l_y_mm: f64,
    t: f64,
    sensor: usize,
) -> f64 {
    let gains = leg_gains(geometry, config, l_x_mm, l_y_mm, sensor);
    segments
        .iter()
        .map(|seg| {
            let env = envelope(t, seg, config.flow_time_constant_s);
            if env < 1e-12 {
                0.0
            } else {
                env * kick_term(&seg.pattern, config, gains, t - seg.start_s)
            }
        })
        .sum()
}

fn check_position(l_y_mm: f64) -> Result<()> {
    if !(l_y_mm.is_finite() && l_y_mm > 0.0) {
        return Err(Error::InvalidGeometry(format!(
            "longitudinal displacement must be positive, got {l_y_mm} mm"
        )));
    }
    Ok(())
}

fn noise_rng(seed: u64, salt: u64) -> ChaCha8Rng {
    // splitmix-style finalizer so nearby keys give unrelated streams
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

/// Quantized gauge pressure at one sensor port at kick time `t`.
///
/// Noise is keyed on `(seed, t, sensor)`, so repeated calls agree.
#[allow(clippy::too_many_arguments)]
pub fn pressure_at_sensor(
    pattern: &KickPattern,
    geometry: &SensorGeometry,
    config: &SimConfig,
    l_x_mm: f64,
    l_y_mm: f64,
    t: f64,
    sensor_index: usize,
) -> Result<f64> {
    geometry.validate()?;
    config.validate()?;
    check_position(l_y_mm)?;
    if sensor_index >= geometry.sensor_count {
        return Err(Error::InvalidArgument(format!(
            "sensor index {sensor_index} out of range for {} sensors",
            geometry.sensor_count
        )));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidArgument(format!("kick time must be >= 0, got {t}")));
    }
    // the flow is taken as fully developed for point queries
    let gains = leg_gains(geometry, config, l_x_mm, l_y_mm, sensor_index);
    let mut p = kick_term(pattern, config, gains, t);
    if config.noise_std_pa > 0.0 {
        let mut rng = noise_rng(config.seed, t.to_bits() ^ ((sensor_index as u64) << 56));
        let z: f64 = rng.sample(StandardNormal);
        p += config.noise_std_pa * z;
    }
    Ok(p.round())
}

/// Simulates a run along `trajectory` with the legs kicking `pattern` from
/// the first trajectory sample on, preceded by the at-rest segment.
pub fn simulate_run(
    pattern: &KickPattern,
    geometry: &SensorGeometry,
    config: &SimConfig,
    trajectory: &Trajectory,
) -> Result<Run> {
    trajectory.validate()?;
    let end = trajectory.samples.last().map(|p| p.t).unwrap_or(0.0) + 1.0;
    let segments = [KickSegment {
        pattern: *pattern,
        start_s: trajectory.samples[0].t,
        end_s: end,
    }];
    simulate_schedule(&segments, geometry, config, trajectory)
}

/// Simulates a run whose kick pattern follows `segments` in time order.
/// Each trajectory sample is labeled with the segment active at that time.
pub fn simulate_schedule(
    segments: &[KickSegment],
    geometry: &SensorGeometry,
    config: &SimConfig,
    trajectory: &Trajectory,
) -> Result<Run> {
    geometry.validate()?;
    config.validate()?;
    trajectory.validate()?;
    if segments.is_empty() {
        return Err(Error::Config("kick schedule is empty".into()));
    }
    let rest = config.rest_samples();
    if rest == 0 {
        return Err(Error::Config(
            "rest segment must hold at least one sample for baseline estimation".into(),
        ));
    }
    for p in &trajectory.samples {
        check_position(p.l_y)?;
    }

    let n_s = geometry.sensor_count;
    let total = rest + trajectory.samples.len();
    let mut offsets_rng = noise_rng(config.seed, 0x5EA5_0FF5);
    let static_levels: Vec<f64> = (0..n_s)
        .map(|_| {
            let u: f64 = offsets_rng.gen_range(-1.0..=1.0);
            config.static_pressure_pa + config.sensor_offset_pa * u
        })
        .collect();
    let mut rng = noise_rng(config.seed, 0x0000_0015_E000);

    let first = trajectory.samples[0];
    let t0 = first.t;
    let dt = 1.0 / config.sample_rate_hz;
    let label_at = |t: f64| {
        segments
            .iter()
            .rev()
            .find(|s| t >= s.start_s)
            .unwrap_or(&segments[0])
            .pattern
            .id
    };

    let mut run = Run {
        sample_rate_hz: config.sample_rate_hz,
        sensors: n_s,
        rest_samples: rest,
        time: Vec::with_capacity(total),
        pressure: Vec::with_capacity(total * n_s),
        l_x: Vec::with_capacity(total),
        l_y: Vec::with_capacity(total),
        pattern: Vec::with_capacity(total),
    };

    for k in 0..total {
        let (t, point, kicking) = if k < rest {
            let t = t0 - (rest - k) as f64 * dt;
            (t, first, false)
        } else {
            let p = trajectory.samples[k - rest];
            (p.t, p, true)
        };
        for s in 0..n_s {
            let dynamic = if kicking {
                schedule_pressure(segments, geometry, config, point.l_x, point.l_y, t, s)
            } else {
                0.0
            };
            let z: f64 = if config.noise_std_pa > 0.0 {
                rng.sample(StandardNormal)
            } else {
                0.0
            };
            run.pressure
                .push((static_levels[s] + dynamic + config.noise_std_pa * z).round());
        }
        run.time.push(t);
        run.l_x.push(point.l_x);
        run.l_y.push(point.l_y);
        run.pattern.push(label_at(t));
    }
    Ok(run)
}

/// Full back-and-forth sweep at constant `l_y`.
pub fn sweep_experiment(
    pattern: &KickPattern,
    geometry: &SensorGeometry,
    config: &SimConfig,
    l_y_mm: f64,
) -> Result<Run> {
    check_position(l_y_mm)?;
    let trajectory = Trajectory::sweep(l_y_mm, config);
    simulate_run(pattern, geometry, config, &trajectory)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::pattern_set;

    fn quiet() -> SimConfig {
        SimConfig {
            noise_std_pa: 0.0,
            ..SimConfig::default()
        }
    }

    fn dft_power(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..=n / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (i, v) in x.iter().enumerate() {
                    let a = -2.0 * PI * (k * i) as f64 / n as f64;
                    re += v * a.cos();
                    im += v * a.sin();
                }
                re * re + im * im
            })
            .collect()
    }

    fn rms(x: &[f64]) -> f64 {
        (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
    }

    fn series(pattern: &KickPattern, cfg: &SimConfig, l_x: f64, l_y: f64, sensor: usize, n: usize) -> Vec<f64> {
        let g = SensorGeometry::default();
        (0..n)
            .map(|k| {
                pressure_at_sensor(pattern, &g, cfg, l_x, l_y, k as f64 / cfg.sample_rate_hz, sensor)
                    .unwrap()
            })
            .collect()
    }

    #[test]
    fn zero_source_is_silent() {
        let cfg = SimConfig {
            source_strength: 0.0,
            ..quiet()
        };
        let p = pattern_set()[0];
        assert!(series(&p, &cfg, 10.0, 40.0, 1, 50).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn kick_frequency_dominates_spectrum() {
        let cfg = quiet();
        let g = SensorGeometry::default();
        for p in pattern_set() {
            for s in 0..3 {
                // 200 samples = 8 s, every kick frequency sits on an exact bin
                let x = series(&p, &cfg, 30.0, 60.0, s, 200);
                let power = dft_power(&x);
                let peak = (1..power.len())
                    .max_by(|&a, &b| power[a].total_cmp(&power[b]))
                    .unwrap();
                let expected = p.frequency_hz * 200.0 / cfg.sample_rate_hz;
                assert!((peak as f64 - expected).abs() <= 1.0, "{} sensor {s}", p.id);
            }
            let _ = &g;
        }
    }

    #[test]
    fn closer_is_louder() {
        let cfg = quiet();
        for p in pattern_set() {
            let near = rms(&series(&p, &cfg, 20.0, 20.0, 1, 100));
            let far = rms(&series(&p, &cfg, 20.0, 200.0, 1, 100));
            assert!(near > far, "{}: {near} vs {far}", p.id);
        }
    }

    #[test]
    fn dolphin_louder_than_flutter_on_midline() {
        let cfg = quiet();
        let g = SensorGeometry::default();
        let mid = g.midline_sensor();
        assert_eq!(mid, 1);
        let set = pattern_set();
        for pair in set.chunks(2) {
            for &ly in &LY_LEVELS_MM {
                let d = rms(&series(&pair[0], &cfg, 0.0, ly, mid, 100));
                let f = rms(&series(&pair[1], &cfg, 0.0, ly, mid, 100));
                assert!(d > f, "ly={ly}: {d} vs {f}");
            }
        }
    }

    #[test]
    fn invalid_inputs() {
        let cfg = quiet();
        let g = SensorGeometry::default();
        let p = pattern_set()[0];
        assert!(matches!(
            pressure_at_sensor(&p, &g, &cfg, 0.0, 0.0, 0.0, 0),
            Err(Error::InvalidGeometry(_))
        ));
        assert!(pressure_at_sensor(&p, &g, &cfg, 0.0, 20.0, 0.0, 3).is_err());
        let bad = SensorGeometry {
            angular_positions: vec![1.0, 0.5, 2.0],
            ..SensorGeometry::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn default_geometry() {
        let g = SensorGeometry::default();
        g.validate().unwrap();
        for w in g.angular_positions.windows(2) {
            assert!((w[1] - w[0] - PI / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rest_segment_required() {
        let cfg = SimConfig {
            rest_duration_s: 0.0,
            ..SimConfig::default()
        };
        let traj = Trajectory::stationary(0.0, 40.0, 10, 25.0);
        let err = simulate_run(&pattern_set()[0], &SensorGeometry::default(), &cfg, &traj);
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn stationary_run_is_periodic() {
        let cfg = quiet();
        let p = pattern_set()[0]; // 1 Hz: one period is 25 samples
        let traj = Trajectory::stationary(0.0, 60.0, 400, cfg.sample_rate_hz);
        let run = simulate_run(&p, &SensorGeometry::default(), &cfg, &traj).unwrap();
        let x: Vec<f64> = (run.rest_samples + 200..run.len()).map(|i| run.row(i)[1]).collect();
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let c: Vec<f64> = x.iter().map(|v| v - mean).collect();
        let acf = |lag: usize| -> f64 {
            (0..c.len() - lag).map(|i| c[i] * c[i + lag]).sum::<f64>() / (c.len() - lag) as f64
        };
        let best = (5..40).max_by(|&a, &b| acf(a).total_cmp(&acf(b))).unwrap();
        assert_eq!(best, 25);
        for i in 0..c.len() - 25 {
            assert!((x[i] - x[i + 25]).abs() <= 1.0);
        }
    }

    #[test]
    fn runs_are_deterministic_and_quantized() {
        let cfg = SimConfig {
            seed: 42,
            ..SimConfig::default()
        };
        let g = SensorGeometry::default();
        let a = sweep_experiment(&pattern_set()[3], &g, &cfg, 80.0).unwrap();
        let b = sweep_experiment(&pattern_set()[3], &g, &cfg, 80.0).unwrap();
        assert_eq!(a, b);
        assert!(a.pressure.iter().all(|p| p.fract() == 0.0));
        let c = sweep_experiment(&pattern_set()[3], &g, &SimConfig { seed: 43, ..cfg }, 80.0).unwrap();
        assert_ne!(a.pressure, c.pressure);
    }

    #[test]
    fn sweep_geometry() {
        let cfg = SimConfig::default();
        let run = sweep_experiment(&pattern_set()[0], &SensorGeometry::default(), &cfg, 120.0).unwrap();
        let moving = run.len() - run.rest_samples;
        let duration = run.time[run.len() - 1] - run.time[run.rest_samples];
        assert!((duration - 84.0).abs() < 1e-9);
        assert_eq!(moving, 2101);
        assert!(run.l_y.iter().all(|&l| l == 120.0));
        assert!(run.time.windows(2).all(|w| w[1] > w[0]));
        assert!(run.time[..run.rest_samples].iter().all(|&t| t < 0.0));
        let inside = (run.rest_samples..run.len())
            .filter(|&i| run.in_effective_region(i))
            .count();
        let frac = inside as f64 / moving as f64;
        assert!((frac - 200.0 / 350.0).abs() < 0.01, "{frac}");
        assert!(run.l_x.iter().all(|&x| x.abs() <= SWEEP_LIMIT_MM + 1e-9));
    }

    #[test]
    fn rest_segment_has_no_kick_signal() {
        let cfg = quiet();
        let run = sweep_experiment(&pattern_set()[4], &SensorGeometry::default(), &cfg, 20.0).unwrap();
        for i in 0..run.rest_samples {
            assert_eq!(run.row(i), run.row(0));
        }
    }

    #[test]
    fn switching_schedule_labels() {
        let cfg = quiet();
        let set = pattern_set();
        let segs = [
            KickSegment { pattern: set[5], start_s: 0.0, end_s: 10.0 },
            KickSegment { pattern: set[3], start_s: 10.0, end_s: 20.0 },
        ];
        let traj = Trajectory::stationary(0.0, 40.0, 500, 25.0);
        let run = simulate_schedule(&segs, &SensorGeometry::default(), &cfg, &traj).unwrap();
        let i_switch = run.rest_samples + 250;
        assert_eq!(run.pattern[i_switch - 1], PatternId::S6);
        assert_eq!(run.pattern[i_switch], PatternId::S4);
    }
}
