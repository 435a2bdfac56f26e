//! Sea-level and wind time series, synthetic tidal profiles and perturbed forecasts.

use std::f64::consts::TAU;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kv;

/// Sensor and control cadence in minutes.
pub const SAMPLE_STEP_MIN: u32 = 10;
/// Control periods in a three-day episode.
pub const EPISODE_STEPS: usize = 432;

const CSV_HEADER: [&str; 3] = ["minutes", "sea_level_m", "wind_mps"];

/// Piecewise-constant samples at a fixed cadence.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub start: NaiveDateTime,
    pub step_min: u32,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(start: NaiveDateTime, step_min: u32, values: Vec<f64>) -> Result<Self> {
        if step_min == 0 {
            return Err(Error::param("step_min", "must be positive"));
        }
        if values.is_empty() {
            return Err(Error::param("values", "series must not be empty"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::param("values", format!("sample {i} is not finite")));
        }
        Ok(Self {
            start,
            step_min,
            values,
        })
    }

    /// Minutes from the first to the last sample.
    pub fn span(&self) -> f64 {
        ((self.values.len() - 1) as f64) * f64::from(self.step_min)
    }

    /// Value of the interval containing `t` minutes after start (left-closed).
    pub fn sample_at(&self, t: f64) -> Result<f64> {
        let span = self.span();
        if !(t >= 0.0 && t <= span) {
            return Err(Error::OutOfRange { t, span });
        }
        let idx = ((t / f64::from(self.step_min)).floor() as usize).min(self.values.len() - 1);
        Ok(self.values[idx])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Which synthetic sea-level profile to generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    /// Regular semidiurnal tide around the mean.
    Normal,
    /// A tidal day, then a sharp fall keeping the sea below 0.0 m.
    Low,
    /// A tidal day, then a sharp rise keeping the sea above 0.25 m.
    High,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [ScenarioKind::Normal, ScenarioKind::Low, ScenarioKind::High];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Normal => "normal",
            ScenarioKind::Low => "low",
            ScenarioKind::High => "high",
        }
    }

    fn start_date(self) -> NaiveDate {
        let (m, d) = match self {
            ScenarioKind::Normal => (11, 12),
            ScenarioKind::Low => (3, 5),
            ScenarioKind::High => (2, 19),
        };
        NaiveDate::from_ymd_opt(2018, m, d).expect("valid calendar date")
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(ScenarioKind::Normal),
            "low" => Ok(ScenarioKind::Low),
            "high" => Ok(ScenarioKind::High),
            other => Err(Error::Config(format!(
                "unknown scenario kind `{other}` (expected normal, low or high)"
            ))),
        }
    }
}

/// Forcing for one episode: sea level (m DVR90) and wind (m/s) on a shared clock.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub sea_level: TimeSeries,
    pub wind_speed: TimeSeries,
    pub initial_fjord_level: f64,
    pub label: String,
}

impl Scenario {
    pub fn new(
        sea_level: TimeSeries,
        wind_speed: TimeSeries,
        initial_fjord_level: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        if sea_level.start != wind_speed.start || sea_level.step_min != wind_speed.step_min {
            return Err(Error::param(
                "wind_speed",
                "sea and wind series must share start and step",
            ));
        }
        if sea_level.len() != wind_speed.len() {
            return Err(Error::param(
                "wind_speed",
                format!(
                    "series length mismatch: {} sea samples, {} wind samples",
                    sea_level.len(),
                    wind_speed.len()
                ),
            ));
        }
        if sea_level.len() < 2 {
            return Err(Error::param("sea_level", "need at least two samples"));
        }
        if !initial_fjord_level.is_finite() {
            return Err(Error::param("initial_fjord_level", "must be finite"));
        }
        Ok(Self {
            sea_level,
            wind_speed,
            initial_fjord_level,
            label: label.into(),
        })
    }

    pub fn start(&self) -> NaiveDateTime {
        self.sea_level.start
    }

    pub fn step_min(&self) -> u32 {
        self.sea_level.step_min
    }

    pub fn start_month(&self) -> u32 {
        self.start().month()
    }

    /// Calendar month `t` minutes after the start.
    pub fn month_at(&self, t: f64) -> u32 {
        (self.start() + Duration::seconds((t * 60.0) as i64)).month()
    }

    /// Number of whole control periods the series can drive.
    pub fn steps(&self) -> usize {
        self.sea_level.len() - 1
    }

    /// Sub-scenario starting at sample `from` with at most `steps` periods,
    /// opening at the given fjord level.
    pub fn window(&self, from: usize, steps: usize, initial_fjord_level: f64) -> Result<Scenario> {
        if from >= self.steps() {
            return Err(Error::param("from", "window starts at or after the last sample"));
        }
        let end = (from + steps).min(self.steps());
        let shift = Duration::minutes(i64::from(self.step_min()) * from as i64);
        let start = self.start() + shift;
        let cut = |s: &TimeSeries| TimeSeries::new(start, s.step_min, s.values[from..=end].to_vec());
        Scenario::new(
            cut(&self.sea_level)?,
            cut(&self.wind_speed)?,
            initial_fjord_level,
            self.label.clone(),
        )
    }
}

/// Uniform half-widths of forecast noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseBounds {
    pub sea: f64,
    pub wind: f64,
}

impl Default for NoiseBounds {
    fn default() -> Self {
        Self {
            sea: 0.005,
            wind: 0.5,
        }
    }
}

impl NoiseBounds {
    pub const NONE: NoiseBounds = NoiseBounds { sea: 0.0, wind: 0.0 };
}

/// A perturbed copy of a scenario as seen by the learner.
#[derive(Debug, Clone, PartialEq)]
pub struct Forecast {
    pub scenario: Scenario,
    pub source_label: String,
    pub seed: u64,
}

/// Adds independent uniform noise to every sea and wind sample.
pub fn perturb_forecast(scenario: &Scenario, seed: u64) -> Forecast {
    perturb_forecast_with(scenario, NoiseBounds::default(), seed)
}

pub fn perturb_forecast_with(scenario: &Scenario, bounds: NoiseBounds, seed: u64) -> Forecast {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |half: f64, rng: &mut ChaCha8Rng| {
        if half > 0.0 {
            rng.gen_range(-half..=half)
        } else {
            0.0
        }
    };
    let mut out = scenario.clone();
    for v in out.sea_level.values.iter_mut() {
        *v += draw(bounds.sea, &mut rng);
    }
    for v in out.wind_speed.values.iter_mut() {
        *v = (*v + draw(bounds.wind, &mut rng)).max(0.0);
    }
    Forecast {
        scenario: out,
        source_label: scenario.label.clone(),
        seed,
    }
}

/// Generates a three-day synthetic profile.
pub fn make_tidal_scenario(kind: ScenarioKind, seed: u64) -> Scenario {
    make_tidal_scenario_days(kind, seed, 3)
}

/// Tidal period in minutes (12.5 h).
const TIDE_PERIOD_MIN: f64 = 750.0;
const TIDE_AMPLITUDE: f64 = 0.5;
/// Mean offset reached after the surge in the low/high profiles.
const SURGE_OFFSET: f64 = 0.85;
const SURGE_ONSET_MIN: f64 = 1440.0;
const SURGE_RAMP_MIN: f64 = 360.0;

/// Generates a synthetic profile spanning `days` days at 10-minute resolution.
pub fn make_tidal_scenario_days(kind: ScenarioKind, seed: u64, days: u32) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7469_6465_7331);
    let n = (days as usize) * 144 + 1;
    let step = f64::from(SAMPLE_STEP_MIN);
    let phase: f64 = rng.gen_range(0.0..TAU);
    let wind_phase: f64 = rng.gen_range(0.0..TAU);

    let mut sea = Vec::with_capacity(n);
    let mut wind = Vec::with_capacity(n);
    let mut sea_noise = 0.0_f64;
    let theta = (-step / 360.0_f64).exp();
    let mut wind_dev: f64 = 1.5 * rng.sample::<f64, _>(StandardNormal);

    for i in 0..n {
        let t = i as f64 * step;
        let ramp = ((t - SURGE_ONSET_MIN) / SURGE_RAMP_MIN).clamp(0.0, 1.0);
        let mean = match kind {
            ScenarioKind::Normal => 0.0,
            ScenarioKind::Low => -SURGE_OFFSET * ramp,
            ScenarioKind::High => SURGE_OFFSET * ramp,
        };
        sea_noise = 0.9 * sea_noise + 0.004 * rng.sample::<f64, _>(StandardNormal);
        let tide = TIDE_AMPLITUDE * (TAU * t / TIDE_PERIOD_MIN + phase).sin();
        sea.push(mean + tide + sea_noise);

        // mean-reverting gusts around a diurnal cycle peaking near 9 m/s
        let diurnal = 6.0 + 3.0 * (TAU * t / 1440.0 + wind_phase).sin();
        wind_dev = theta * wind_dev
            + 1.5 * (1.0 - theta * theta).sqrt() * rng.sample::<f64, _>(StandardNormal);
        wind.push((diurnal + wind_dev).clamp(0.0, 25.0));
    }

    let start = kind.start_date().and_hms_opt(0, 0, 0).expect("midnight");
    Scenario::new(
        TimeSeries::new(start, SAMPLE_STEP_MIN, sea).expect("finite samples"),
        TimeSeries::new(start, SAMPLE_STEP_MIN, wind).expect("finite samples"),
        0.05,
        kind.as_str(),
    )
    .expect("generated series are consistent")
}

/// Path of the key-value sidecar belonging to a scenario CSV.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("cfg")
}

/// Metadata stored next to a scenario CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioMeta {
    pub start_date: NaiveDate,
    pub initial_fjord_level: f64,
    pub label: String,
}

pub fn parse_sidecar(text: &str, origin: &str) -> Result<ScenarioMeta> {
    let entries = kv::parse(text, origin)?;
    let get = |key: &str| entries.iter().find(|e| e.key == key);
    let missing = |key: &str| Error::Parse {
        path: origin.to_string(),
        line: 0,
        reason: format!("missing key `{key}`"),
    };
    let date = get("start_date").ok_or_else(|| missing("start_date"))?;
    let start_date = NaiveDate::parse_from_str(&date.value, "%Y-%m-%d").map_err(|e| Error::Parse {
        path: origin.to_string(),
        line: date.line,
        reason: format!("start_date `{}`: {e}", date.value),
    })?;
    let level = get("initial_fjord_level_m").ok_or_else(|| missing("initial_fjord_level_m"))?;
    let initial_fjord_level = level
        .value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Parse {
            path: origin.to_string(),
            line: level.line,
            reason: format!("initial_fjord_level_m `{}` is not a finite number", level.value),
        })?;
    let label = get("label").map(|e| e.value.clone()).unwrap_or_default();
    if let Some(extra) = entries
        .iter()
        .find(|e| !matches!(e.key.as_str(), "start_date" | "initial_fjord_level_m" | "label"))
    {
        return Err(Error::Parse {
            path: origin.to_string(),
            line: extra.line,
            reason: format!("unknown key `{}`", extra.key),
        });
    }
    Ok(ScenarioMeta {
        start_date,
        initial_fjord_level,
        label,
    })
}

/// Parses the `minutes,sea_level_m,wind_mps` body into sea and wind samples.
pub fn parse_scenario_csv(text: &str, origin: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let err = |line: usize, reason: String| Error::Parse {
        path: origin.to_string(),
        line,
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| err(1, format!("unreadable header: {e}")))?
        .clone();
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(err(1, format!("expected header `{}`", CSV_HEADER.join(","))));
    }

    let mut sea = Vec::new();
    let mut wind = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(line);
            err(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(line);
        if record.len() != 3 {
            return Err(err(line, format!("expected 3 fields, found {}", record.len())));
        }
        let field = |k: usize| -> Result<f64> {
            let raw = &record[k];
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(line, format!("{} `{raw}` is not a finite number", CSV_HEADER[k])))
        };
        let minutes = field(0)?;
        let expected = (sea.len() as f64) * f64::from(SAMPLE_STEP_MIN);
        if minutes != expected {
            let reason = if sea.is_empty() || minutes > expected {
                format!("timestamp {minutes} breaks the 10-minute grid (expected {expected})")
            } else {
                format!("timestamp {minutes} is not increasing (expected {expected})")
            };
            return Err(err(line, reason));
        }
        sea.push(field(1)?);
        wind.push(field(2)?);
    }
    if sea.is_empty() {
        return Err(err(1, "no samples".to_string()));
    }
    Ok((sea, wind))
}

/// Loads `path` (CSV) and its `.cfg` sidecar.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let side = sidecar_path(path);
    let meta_text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let meta = parse_sidecar(&meta_text, &side.display().to_string())?;
    let (sea, wind) = parse_scenario_csv(&text, &path.display().to_string())?;
    scenario_from_parts(meta, sea, wind)
}

pub fn scenario_from_parts(meta: ScenarioMeta, sea: Vec<f64>, wind: Vec<f64>) -> Result<Scenario> {
    let start = meta.start_date.and_hms_opt(0, 0, 0).expect("midnight");
    Scenario::new(
        TimeSeries::new(start, SAMPLE_STEP_MIN, sea)?,
        TimeSeries::new(start, SAMPLE_STEP_MIN, wind)?,
        meta.initial_fjord_level,
        meta.label,
    )
}

/// Renders the scenario CSV body.
pub fn scenario_csv(scenario: &Scenario) -> String {
    let mut out = String::with_capacity(scenario.sea_level.len() * 32);
    out.push_str(&CSV_HEADER.join(","));
    out.push('\n');
    let step = scenario.step_min();
    for (i, (s, w)) in scenario
        .sea_level
        .values
        .iter()
        .zip(&scenario.wind_speed.values)
        .enumerate()
    {
        out.push_str(&format!("{},{s},{w}\n", i as u64 * u64::from(step)));
    }
    out
}

pub fn sidecar_text(scenario: &Scenario) -> String {
    format!(
        "start_date = {}\ninitial_fjord_level_m = {}\nlabel = {}\n",
        scenario.start().date().format("%Y-%m-%d"),
        scenario.initial_fjord_level,
        scenario.label
    )
}

/// Writes the CSV to `path` and the sidecar next to it.
pub fn save_scenario(scenario: &Scenario, path: &Path) -> Result<()> {
    if scenario.step_min() != SAMPLE_STEP_MIN {
        return Err(Error::param("step_min", "only 10-minute series can be saved"));
    }
    fs::write(path, scenario_csv(scenario)).map_err(|e| Error::io(path, e))?;
    let side = sidecar_path(path);
    fs::write(&side, sidecar_text(scenario)).map_err(|e| Error::io(&side, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn start() -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2018, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap()
    }

    #[test]
    fn sample_at_is_left_closed() {
        let s = TimeSeries::new(start(), 10, vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.sample_at(0.0).unwrap(), 1.0);
        assert_eq!(s.sample_at(9.9).unwrap(), 1.0);
        assert_eq!(s.sample_at(10.0).unwrap(), 2.0);
        assert_eq!(s.sample_at(20.0).unwrap(), 3.0);
        assert!(s.sample_at(20.1).is_err());
        assert!(s.sample_at(-0.1).is_err());
        assert!(s.sample_at(f64::NAN).is_err());
    }

    #[test]
    fn series_rejects_bad_samples() {
        assert!(TimeSeries::new(start(), 10, vec![]).is_err());
        assert!(TimeSeries::new(start(), 10, vec![1.0, f64::INFINITY]).is_err());
        assert!(TimeSeries::new(start(), 0, vec![1.0]).is_err());
    }

    #[test]
    fn constant_csv_loads() {
        let mut text = String::from("minutes,sea_level_m,wind_mps\n");
        for i in 0..433 {
            text.push_str(&format!("{},0.1,5\n", i * 10));
        }
        let (sea, wind) = parse_scenario_csv(&text, "c.csv").unwrap();
        assert_eq!(sea.len(), 433);
        assert!(sea.iter().all(|&v| v == 0.1));
        assert!(wind.iter().all(|&v| v == 5.0));
    }

    #[test]
    fn csv_gap_names_line() {
        let text = "minutes,sea_level_m,wind_mps\n0,0.1,5\n10,0.1,5\n30,0.1,5\n";
        let err = parse_scenario_csv(text, "g.csv").unwrap_err().to_string();
        assert!(err.starts_with("g.csv:4:"), "{err}");
    }

    #[test]
    fn csv_rejects_bad_rows() {
        let cases = [
            "minutes,sea,wind\n0,0.1,5\n",
            "minutes,sea_level_m,wind_mps\n0,0.1,5\n0,0.1,5\n",
            "minutes,sea_level_m,wind_mps\n0,NaN,5\n",
            "minutes,sea_level_m,wind_mps\n0,0.1\n",
            "minutes,sea_level_m,wind_mps\n",
        ];
        for c in cases {
            assert!(parse_scenario_csv(c, "x.csv").is_err(), "{c}");
        }
    }

    #[test]
    fn sidecar_parsing() {
        let meta = parse_sidecar(
            "start_date = 2018-11-12\ninitial_fjord_level_m = 0.05\nlabel = normal\n",
            "s.cfg",
        )
        .unwrap();
        assert_eq!(meta.start_date.month(), 11);
        assert_eq!(meta.initial_fjord_level, 0.05);
        assert!(parse_sidecar("start_date = 2018-13-01\ninitial_fjord_level_m = 0\n", "s").is_err());
        assert!(parse_sidecar("initial_fjord_level_m = 0\n", "s").is_err());
        assert!(parse_sidecar("start_date = 2018-01-01\ninitial_fjord_level_m = 0\nx = 1\n", "s").is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("normal.csv");
        let sc = make_tidal_scenario(ScenarioKind::Normal, 3);
        save_scenario(&sc, &path).unwrap();
        let back = load_scenario(&path).unwrap();
        assert_eq!(back, sc);
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_scenario(Path::new("/nonexistent/none.csv")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    fn sign_changes(v: &[f64]) -> usize {
        v.windows(2).filter(|w| (w[0] < 0.0) != (w[1] < 0.0)).count()
    }

    fn longest_run(v: &[f64], pred: impl Fn(f64) -> bool) -> usize {
        let (mut best, mut cur) = (0, 0);
        for &x in v {
            cur = if pred(x) { cur + 1 } else { 0 };
            best = best.max(cur);
        }
        best
    }

    #[test]
    fn normal_profile_shape() {
        for seed in 0..5 {
            let sc = make_tidal_scenario(ScenarioKind::Normal, seed);
            let v = &sc.sea_level.values;
            assert_eq!(v.len(), EPISODE_STEPS + 1);
            let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!((min + 0.5).abs() < 0.08, "min {min}");
            assert!((max - 0.5).abs() < 0.08, "max {max}");
            assert!(sign_changes(v) >= 10);
            assert_eq!(sc.initial_fjord_level, 0.05);
            assert_eq!(sc.start().time(), chrono::NaiveTime::MIN);
        }
    }

    #[test]
    fn surge_profiles_hold_for_a_day() {
        for seed in 0..5 {
            let high = make_tidal_scenario(ScenarioKind::High, seed);
            assert!(longest_run(&high.sea_level.values, |x| x > 0.25) >= 144);
            let low = make_tidal_scenario(ScenarioKind::Low, seed);
            assert!(longest_run(&low.sea_level.values, |x| x < 0.0) >= 144);
        }
    }

    #[test]
    fn wind_crosses_mixing_threshold() {
        for kind in ScenarioKind::ALL {
            for seed in 0..10 {
                let sc = make_tidal_scenario(kind, seed);
                let w = &sc.wind_speed.values;
                assert!(w.iter().all(|&x| (0.0..=25.0).contains(&x)));
                let crossings = w.windows(2).filter(|p| (p[0] >= 8.0) != (p[1] >= 8.0)).count();
                assert!(crossings >= 2, "{kind} seed {seed}: {crossings}");
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = make_tidal_scenario(ScenarioKind::High, 11);
        let b = make_tidal_scenario(ScenarioKind::High, 11);
        assert_eq!(scenario_csv(&a), scenario_csv(&b));
        let c = make_tidal_scenario(ScenarioKind::High, 12);
        assert_ne!(a, c);
    }

    #[test]
    fn zero_width_noise_is_identity() {
        let sc = make_tidal_scenario(ScenarioKind::Low, 1);
        let f = perturb_forecast_with(&sc, NoiseBounds::NONE, 9);
        assert_eq!(f.scenario, sc);
    }

    #[test]
    fn perturbation_within_bounds_and_unbiased() {
        let sc = make_tidal_scenario_days(ScenarioKind::Normal, 2, 70);
        let mut diffs = Vec::new();
        for seed in 0..10 {
            let f = perturb_forecast(&sc, seed);
            for (a, b) in f.scenario.sea_level.values.iter().zip(&sc.sea_level.values) {
                assert!((a - b).abs() <= 0.005 + 1e-12);
                diffs.push(a - b);
            }
            for (a, b) in f.scenario.wind_speed.values.iter().zip(&sc.wind_speed.values) {
                assert!((a - b).abs() <= 0.5 + 1e-12);
            }
        }
        assert!(diffs.len() >= 100_000);
        let n = diffs.len() as f64;
        let mean = diffs.iter().sum::<f64>() / n;
        // uniform on [-h, h] has std h/sqrt(3)
        let se = 0.005 / 3f64.sqrt() / n.sqrt();
        assert!(mean.abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn window_shifts_clock() {
        let sc = make_tidal_scenario_days(ScenarioKind::Normal, 1, 4);
        let w = sc.window(36, 432, 0.1).unwrap();
        assert_eq!(w.steps(), 432);
        assert_eq!(w.sea_level.values[0], sc.sea_level.values[36]);
        assert_eq!(w.start(), sc.start() + Duration::hours(6));
        let tail = sc.window(500, 432, 0.1).unwrap();
        assert_eq!(tail.steps(), sc.steps() - 500);
    }
}
