//! Experiment configuration: a flat `key = value` file plus command-line overrides.
//!
//! ```text
//! scenario = high            # normal | low | high | path/to/scenario.csv
//! seed = 7
//! episodes = 2000
//! w1 = 1e6
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::envsim::{CostWeights, EnvConfig};
use crate::error::{Error, Result};
use crate::hydro::{HydroParams, DEFAULT_SUBSTEP_MIN};
use crate::kv;
use crate::learn::{LearnerConfig, OnlinePlan};
use crate::scenario::{load_scenario, make_tidal_scenario, NoiseBounds, Scenario, ScenarioKind};

/// Where the forcing comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioSource {
    Synthetic(ScenarioKind),
    File(PathBuf),
}

impl ScenarioSource {
    fn parse(value: &str) -> Self {
        match value.parse::<ScenarioKind>() {
            Ok(kind) => ScenarioSource::Synthetic(kind),
            Err(_) => ScenarioSource::File(PathBuf::from(value)),
        }
    }

    pub fn label(&self) -> String {
        match self {
            ScenarioSource::Synthetic(k) => k.to_string(),
            ScenarioSource::File(p) => p.display().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: ScenarioSource,
    /// Seed of synthetic scenario generation; kept apart from `seed` so the
    /// forcing stays fixed while learning seeds vary.
    pub scenario_seed: u64,
    pub seed: u64,
    pub weights: CostWeights,
    pub learner: LearnerConfig,
    pub plan: OnlinePlan,
    pub eval_rollouts: usize,
    pub hydro: HydroParams,
    pub substep_min: f64,
    pub boat_rate: f64,
    pub noise: NoiseBounds,
    pub w1_values: Vec<f64>,
    pub controllers_per_config: usize,
    pub sweep_scenarios: Vec<ScenarioKind>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let env = EnvConfig::default();
        Self {
            scenario: ScenarioSource::Synthetic(ScenarioKind::Normal),
            scenario_seed: 1,
            seed: 0,
            weights: CostWeights::default(),
            learner: LearnerConfig {
                episodes: 2000,
                ..LearnerConfig::default()
            },
            plan: OnlinePlan::default(),
            eval_rollouts: 100,
            hydro: env.hydro,
            substep_min: DEFAULT_SUBSTEP_MIN,
            boat_rate: env.boat_rate,
            noise: NoiseBounds::default(),
            w1_values: vec![1e1, 1e2, 1e3, 1e4, 1e5, 1e6],
            controllers_per_config: 5,
            sweep_scenarios: ScenarioKind::ALL.to_vec(),
        }
    }
}

/// Every recognised key, in the order [`ExperimentConfig::to_text`] writes them.
pub const KEYS: &[&str] = &[
    "scenario",
    "scenario_seed",
    "seed",
    "w1",
    "w2",
    "w3",
    "w4",
    "episodes",
    "restarts",
    "horizon_steps",
    "eps_start",
    "eps_end",
    "eps_decay_fraction",
    "splitting",
    "split_visit_threshold",
    "split_min_reduction",
    "max_leaves",
    "batch_size",
    "selection_rollouts",
    "returns",
    "alpha_min",
    "replan_period",
    "learn_latency",
    "plan_horizon",
    "eval_rollouts",
    "k_inflow",
    "k_outflow",
    "gate_width",
    "gate_bottom",
    "gate_raised_bottom",
    "num_gates",
    "fjord_area",
    "stream_base_flow",
    "substep_min",
    "boat_rate",
    "sea_noise",
    "wind_noise",
    "w1_values",
    "controllers_per_config",
    "sweep_scenarios",
];

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| num(key, s))
        .collect()
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// Reads a config file on top of the defaults.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, &path.display().to_string())
    }

    pub fn from_text(text: &str, origin: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for e in kv::parse(text, origin).map_err(|e| Error::Config(e.to_string()))? {
            cfg.set(&e.key, &e.value)
                .map_err(|err| Error::Config(format!("{origin}:{}: {}", e.line, strip(err))))?;
        }
        Ok(cfg)
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{assignment}` is not `key=value`")))?;
        self.set(key.trim(), value.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let l = &mut self.learner;
        let h = &mut self.hydro;
        match key {
            "scenario" => self.scenario = ScenarioSource::parse(value),
            "scenario_seed" => self.scenario_seed = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "w1" => self.weights.w1 = num(key, value)?,
            "w2" => self.weights.w2 = num(key, value)?,
            "w3" => self.weights.w3 = num(key, value)?,
            "w4" => self.weights.w4 = num(key, value)?,
            "episodes" => l.episodes = num(key, value)?,
            "restarts" => l.restarts = num(key, value)?,
            "horizon_steps" => l.horizon_steps = num(key, value)?,
            "eps_start" => l.epsilon_start = num(key, value)?,
            "eps_end" => l.epsilon_end = num(key, value)?,
            "eps_decay_fraction" => l.epsilon_decay_fraction = num(key, value)?,
            "splitting" => l.splitting = num(key, value)?,
            "split_visit_threshold" => l.split_visit_threshold = num(key, value)?,
            "split_min_reduction" => l.split_min_reduction = num(key, value)?,
            "max_leaves" => l.max_leaves = num(key, value)?,
            "batch_size" => l.batch_size = num(key, value)?,
            "selection_rollouts" => l.selection_rollouts = num(key, value)?,
            "returns" => l.returns = value.parse()?,
            "alpha_min" => l.alpha_min = num(key, value)?,
            "replan_period" => self.plan.replan_period = num(key, value)?,
            "learn_latency" => self.plan.learn_latency = num(key, value)?,
            "plan_horizon" => self.plan.horizon = num(key, value)?,
            "eval_rollouts" => self.eval_rollouts = num(key, value)?,
            "k_inflow" => h.k_inflow = HydroParams::per_second_to_per_minute(num(key, value)?),
            "k_outflow" => h.k_outflow = HydroParams::per_second_to_per_minute(num(key, value)?),
            "gate_width" => h.gate_width = num(key, value)?,
            "gate_bottom" => h.gate_bottom = num(key, value)?,
            "gate_raised_bottom" => h.gate_raised_bottom = num(key, value)?,
            "num_gates" => h.num_gates = num(key, value)?,
            "fjord_area" => h.fjord_area = num(key, value)?,
            "stream_base_flow" => h.stream_base_flow = num(key, value)?,
            "substep_min" => self.substep_min = num(key, value)?,
            "boat_rate" => self.boat_rate = num(key, value)?,
            "sea_noise" => self.noise.sea = num(key, value)?,
            "wind_noise" => self.noise.wind = num(key, value)?,
            "w1_values" => self.w1_values = list(key, value)?,
            "controllers_per_config" => self.controllers_per_config = num(key, value)?,
            "sweep_scenarios" => {
                self.sweep_scenarios = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::parse)
                    .collect::<Result<_>>()?
            }
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// All keys with their current values, readable by [`ExperimentConfig::from_text`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key).expect("listed key"));
        }
        out
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let l = &self.learner;
        let h = &self.hydro;
        let per_s = |k: f64| k / HydroParams::per_second_to_per_minute(1.0);
        Some(match key {
            "scenario" => self.scenario.label(),
            "scenario_seed" => self.scenario_seed.to_string(),
            "seed" => self.seed.to_string(),
            "w1" => self.weights.w1.to_string(),
            "w2" => self.weights.w2.to_string(),
            "w3" => self.weights.w3.to_string(),
            "w4" => self.weights.w4.to_string(),
            "episodes" => l.episodes.to_string(),
            "restarts" => l.restarts.to_string(),
            "horizon_steps" => l.horizon_steps.to_string(),
            "eps_start" => l.epsilon_start.to_string(),
            "eps_end" => l.epsilon_end.to_string(),
            "eps_decay_fraction" => l.epsilon_decay_fraction.to_string(),
            "splitting" => l.splitting.to_string(),
            "split_visit_threshold" => l.split_visit_threshold.to_string(),
            "split_min_reduction" => l.split_min_reduction.to_string(),
            "max_leaves" => l.max_leaves.to_string(),
            "batch_size" => l.batch_size.to_string(),
            "selection_rollouts" => l.selection_rollouts.to_string(),
            "returns" => l.returns.to_string(),
            "alpha_min" => l.alpha_min.to_string(),
            "replan_period" => self.plan.replan_period.to_string(),
            "learn_latency" => self.plan.learn_latency.to_string(),
            "plan_horizon" => self.plan.horizon.to_string(),
            "eval_rollouts" => self.eval_rollouts.to_string(),
            "k_inflow" => per_s(h.k_inflow).to_string(),
            "k_outflow" => per_s(h.k_outflow).to_string(),
            "gate_width" => h.gate_width.to_string(),
            "gate_bottom" => h.gate_bottom.to_string(),
            "gate_raised_bottom" => h.gate_raised_bottom.to_string(),
            "num_gates" => h.num_gates.to_string(),
            "fjord_area" => h.fjord_area.to_string(),
            "stream_base_flow" => h.stream_base_flow.to_string(),
            "substep_min" => self.substep_min.to_string(),
            "boat_rate" => self.boat_rate.to_string(),
            "sea_noise" => self.noise.sea.to_string(),
            "wind_noise" => self.noise.wind.to_string(),
            "w1_values" => join(&self.w1_values),
            "controllers_per_config" => self.controllers_per_config.to_string(),
            "sweep_scenarios" => join(&self.sweep_scenarios),
            _ => return None,
        })
    }

    pub fn env(&self) -> EnvConfig {
        EnvConfig {
            hydro: self.hydro.clone(),
            boat_rate: self.boat_rate,
            substep_min: self.substep_min,
            ..EnvConfig::default()
        }
    }

    /// Learner settings with the experiment seed.
    pub fn learner(&self) -> LearnerConfig {
        LearnerConfig {
            seed: self.seed,
            ..self.learner.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let usage = |e: Error| if e.is_usage() { e } else { Error::Config(e.to_string()) };
        self.weights.validate().map_err(usage)?;
        self.learner().validate().map_err(usage)?;
        self.plan.validate().map_err(usage)?;
        self.env().validate().map_err(usage)?;
        if self.eval_rollouts < 1 {
            return Err(Error::param("eval_rollouts", "must be at least 1"));
        }
        if !(self.noise.sea >= 0.0 && self.noise.wind >= 0.0) {
            return Err(Error::param("sea_noise", "noise bounds must be nonnegative"));
        }
        if self.w1_values.is_empty() || self.w1_values.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::param("w1_values", "need one or more nonnegative weights"));
        }
        if self.controllers_per_config < 1 {
            return Err(Error::param("controllers_per_config", "must be at least 1"));
        }
        if self.sweep_scenarios.is_empty() {
            return Err(Error::param("sweep_scenarios", "need at least one scenario"));
        }
        if let ScenarioSource::File(p) = &self.scenario {
            if !p.is_file() {
                return Err(Error::Config(format!("scenario file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    /// Builds or loads the configured scenario.
    pub fn load_scenario(&self) -> Result<Scenario> {
        match &self.scenario {
            ScenarioSource::Synthetic(kind) => Ok(make_tidal_scenario(*kind, self.scenario_seed)),
            ScenarioSource::File(p) => load_scenario(p),
        }
    }
}

/// Drops the `config: ` prefix so nested messages read once.
fn strip(e: Error) -> String {
    match e {
        Error::Config(s) => s,
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_text() {
        let cfg = ExperimentConfig::default();
        let back = ExperimentConfig::from_text(&cfg.to_text(), "dump").unwrap();
        assert_eq!(back, cfg);
        assert_eq!(cfg.learner.episodes, 2000);
        assert_eq!(cfg.controllers_per_config, 5);
        cfg.validate().unwrap();
    }

    #[test]
    fn every_key_is_settable_and_readable() {
        let cfg = ExperimentConfig::default();
        for key in KEYS {
            let mut c = cfg.clone();
            let v = cfg.get(key).unwrap();
            c.set(key, &v).unwrap();
            assert_eq!(c, cfg, "{key}");
        }
    }

    #[test]
    fn file_values_and_overrides() {
        let mut cfg = ExperimentConfig::from_text(
            "scenario = high\nepisodes = 50\nw1_values = 10, 1000\nk_inflow = 3.8\nsweep_scenarios = low\n",
            "x.cfg",
        )
        .unwrap();
        assert_eq!(cfg.scenario, ScenarioSource::Synthetic(ScenarioKind::High));
        assert_eq!(cfg.learner.episodes, 50);
        assert_eq!(cfg.w1_values, vec![10.0, 1000.0]);
        assert!((cfg.hydro.k_inflow - 228.0).abs() < 1e-9);
        assert_eq!(cfg.sweep_scenarios, vec![ScenarioKind::Low]);
        cfg.apply_override("episodes=7").unwrap();
        assert_eq!(cfg.learner.episodes, 7);
        cfg.apply_override("scenario=data/x.csv").unwrap();
        assert_eq!(cfg.scenario, ScenarioSource::File("data/x.csv".into()));
    }

    #[test]
    fn errors_are_usage_errors_with_location() {
        let e = ExperimentConfig::from_text("seed = 1\nbogus = 2\n", "x.cfg").unwrap_err();
        assert!(e.is_usage());
        assert!(e.to_string().contains("x.cfg:2"), "{e}");
        let e = ExperimentConfig::from_text("episodes = many\n", "x.cfg").unwrap_err();
        assert!(e.is_usage() && e.to_string().contains("episodes"));
        assert!(ExperimentConfig::from_text("seed\n", "x.cfg").unwrap_err().is_usage());
        assert!(ExperimentConfig::default().apply_override("seed").unwrap_err().is_usage());
    }

    #[test]
    fn validation() {
        let mut c = ExperimentConfig::default();
        c.learner.episodes = 0;
        assert!(c.validate().unwrap_err().is_usage());
        let c = ExperimentConfig {
            scenario: ScenarioSource::File("/nonexistent/s.csv".into()),
            ..Default::default()
        };
        assert!(c.validate().unwrap_err().is_usage());
        let mut c = ExperimentConfig::default();
        c.weights.w2 = -1.0;
        assert!(c.validate().is_err());
    }
}
