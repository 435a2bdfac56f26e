//! Experiment commands behind the CLI: scenario generation, training,
//! evaluation tables, single-trace simulation and weight sweeps.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::control::{load_strategy, save_strategy, Baseline, PartitionTree, Strategy};
use crate::derive_seed;
use crate::envsim::{metrics_from_trace, run_episode_for, CostWeights, EnvConfig, Metrics};
use crate::error::{Error, Result};
use crate::learn::{train_best, TrainingLog, TwinTraining};
use crate::scenario::{make_tidal_scenario, save_scenario, Scenario, ScenarioKind};

/// Seed stream reserved for evaluation rollouts.
const EVAL_STREAM: u64 = 0xE7A1;

/// Writes `contents` next to `path` first and renames it into place, so a
/// failed run never leaves a truncated file behind.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    if let Err(e) = fs::write(&tmp, contents) {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

/// A controller to evaluate: `baseline` or a strategy file.
pub struct Controller {
    pub label: String,
    pub strategy: Box<dyn Strategy>,
}

impl Controller {
    pub fn baseline() -> Self {
        Self {
            label: "baseline".into(),
            strategy: Box::new(Baseline),
        }
    }

    pub fn learned(label: impl Into<String>, tree: PartitionTree) -> Self {
        Self {
            label: label.into(),
            strategy: Box::new(tree),
        }
    }

    /// `baseline`, or a path to a strategy document.
    pub fn resolve(spec: &str) -> Result<Self> {
        if spec == "baseline" {
            return Ok(Self::baseline());
        }
        let path = Path::new(spec);
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let tree = load_strategy(&text)?;
        let label = if tree.meta.label.is_empty() {
            path.file_stem().map_or_else(|| spec.to_string(), |s| s.to_string_lossy().into_owned())
        } else {
            tree.meta.label.clone()
        };
        Ok(Self::learned(label, tree))
    }
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self::default();
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

/// Aggregated evaluation of one controller on one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultsRow {
    pub scenario: String,
    pub controller: String,
    pub rollouts: usize,
    pub safety_pct: f64,
    pub migration_pct: f64,
    pub max_wait: Summary,
    pub gate_operations: Summary,
    pub total_cost: Summary,
    pub min_level: f64,
    pub max_level: f64,
}

impl ResultsRow {
    pub fn from_metrics(scenario: &str, controller: &str, runs: &[Metrics]) -> Self {
        let col = |f: fn(&Metrics) -> f64| runs.iter().map(f).collect::<Vec<f64>>();
        Self {
            scenario: scenario.to_string(),
            controller: controller.to_string(),
            rollouts: runs.len(),
            safety_pct: 100.0 * Summary::of(&col(|m| m.safety)).mean,
            migration_pct: 100.0 * Summary::of(&col(|m| m.migration)).mean,
            max_wait: Summary::of(&col(|m| m.max_wait)),
            gate_operations: Summary::of(&col(|m| f64::from(m.gate_operations))),
            total_cost: Summary::of(&col(|m| m.total_cost)),
            min_level: runs.iter().map(|m| m.min_level).fold(f64::INFINITY, f64::min),
            max_level: runs.iter().map(|m| m.max_level).fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultsTable {
    pub rows: Vec<ResultsRow>,
}

pub const RESULTS_HEADER: &str = "scenario,controller,rollouts,safety_pct,migration_pct,max_wait_mean,max_wait_std,gate_ops_mean,gate_ops_std,min_level,max_level,total_cost_mean,total_cost_std";

impl ResultsTable {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{RESULTS_HEADER}\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.scenario,
                r.controller,
                r.rollouts,
                r.safety_pct,
                r.migration_pct,
                r.max_wait.mean,
                r.max_wait.std,
                r.gate_operations.mean,
                r.gate_operations.std,
                r.min_level,
                r.max_level,
                r.total_cost.mean,
                r.total_cost.std
            );
        }
        out
    }

    /// Fixed-width rendering for terminals.
    pub fn render(&self) -> String {
        let mut out = format!(
            "{:<10} {:<14} {:>8} {:>11} {:>17} {:>17} {:>8} {:>8}\n",
            "scenario", "controller", "safety%", "migration%", "max wait (min)", "gate ops", "min h_f", "max h_f"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<10} {:<14} {:>8.2} {:>11.2} {:>8.2} ± {:<6.2} {:>8.2} ± {:<6.2} {:>8.3} {:>8.3}",
                r.scenario,
                r.controller,
                r.safety_pct,
                r.migration_pct,
                r.max_wait.mean,
                r.max_wait.std,
                r.gate_operations.mean,
                r.gate_operations.std,
                r.min_level,
                r.max_level
            );
        }
        out
    }
}

/// Per-rollout metrics of `rollouts` episodes on the scenario as given.
pub fn evaluate_runs(
    scenario: &Scenario,
    strategy: &dyn Strategy,
    weights: &CostWeights,
    env: &EnvConfig,
    steps: usize,
    rollouts: usize,
    seed: u64,
) -> Result<Vec<Metrics>> {
    let runs: Vec<Result<Metrics>> = (0..rollouts)
        .into_par_iter()
        .map(|i| {
            run_episode_for(scenario, strategy, weights, env, derive_seed(seed, i as u64), steps)
                .map(|t| metrics_from_trace(&t))
        })
        .collect();
    runs.into_iter().collect()
}

fn episode_steps(cfg: &ExperimentConfig, scenario: &Scenario) -> Result<usize> {
    let steps = cfg.learner.horizon_steps;
    if scenario.steps() < steps {
        return Err(Error::Integrity(format!(
            "scenario covers {} periods, {steps} requested",
            scenario.steps()
        )));
    }
    Ok(steps)
}

/// Writes a synthetic scenario and its sidecar.
pub fn cmd_generate(kind: ScenarioKind, seed: u64, out: &Path) -> Result<Scenario> {
    let scenario = make_tidal_scenario(kind, seed);
    save_scenario(&scenario, out)?;
    Ok(scenario)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnOutcome {
    pub strategy: PartitionTree,
    pub log: TrainingLog,
    /// Mean selection cost of every candidate.
    pub scores: Vec<f64>,
}

/// Trains on the configured scenario (used as the forecast) and selects the best candidate.
pub fn learn(cfg: &ExperimentConfig, scenario: &Scenario) -> Result<LearnOutcome> {
    cfg.validate()?;
    let factory = TwinTraining::new(
        scenario.clone(),
        cfg.env(),
        cfg.weights,
        cfg.noise,
        cfg.learner.horizon_steps,
    )?;
    let (mut strategy, log, scores) = train_best(&factory, &cfg.learner())?;
    strategy.meta.label = format!("learned-{}", scenario.label);
    strategy.meta.weights = Some(cfg.weights);
    Ok(LearnOutcome { strategy, log, scores })
}

/// `learn`: writes the strategy document and the training log of the chosen candidate.
pub fn cmd_learn(cfg: &ExperimentConfig, out: &Path, log_out: &Path) -> Result<LearnOutcome> {
    let outcome = learn(cfg, &cfg.load_scenario()?)?;
    let written = write_atomic(out, &save_strategy(&outcome.strategy))
        .and_then(|_| write_atomic(log_out, &outcome.log.to_csv()));
    if let Err(e) = written {
        let _ = fs::remove_file(out);
        let _ = fs::remove_file(log_out);
        return Err(e);
    }
    Ok(outcome)
}

/// `evaluate`: one row per controller on the unperturbed scenario.
pub fn cmd_evaluate(cfg: &ExperimentConfig, controllers: &[Controller]) -> Result<ResultsTable> {
    cfg.validate()?;
    let scenario = cfg.load_scenario()?;
    let steps = episode_steps(cfg, &scenario)?;
    let env = cfg.env();
    let mut table = ResultsTable::default();
    for c in controllers {
        let runs = evaluate_runs(&scenario, c.strategy.as_ref(), &cfg.weights, &env, steps, cfg.eval_rollouts, cfg.seed)?;
        table.rows.push(ResultsRow::from_metrics(&scenario.label, &c.label, &runs));
    }
    Ok(table)
}

/// `simulate`: trace CSV of a single rollout.
pub fn cmd_simulate(cfg: &ExperimentConfig, controller: &Controller) -> Result<String> {
    cfg.validate()?;
    let scenario = cfg.load_scenario()?;
    let steps = episode_steps(cfg, &scenario)?;
    let trace = run_episode_for(&scenario, controller.strategy.as_ref(), &cfg.weights, &cfg.env(), cfg.seed, steps)?;
    Ok(trace.to_csv())
}

/// One trained controller in a weight sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub scenario: String,
    pub w1: f64,
    pub controller: usize,
    pub gate_operations: f64,
    /// Share of migration-eligible time spent with all gates closed.
    pub no_migration_ratio: f64,
    pub max_wait: f64,
    /// Share of time outside the safe band.
    pub unsafe_ratio: f64,
    pub total_cost: f64,
}

pub const SWEEP_HEADER: &str =
    "scenario,w1,controller,gate_operations,no_migration_ratio,max_wait,unsafe_ratio,total_cost";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.scenario, r.w1, r.controller, r.gate_operations, r.no_migration_ratio, r.max_wait, r.unsafe_ratio, r.total_cost
        );
    }
    out
}

/// `sweep`: trains `controllers_per_config` controllers for every w1 value and
/// scenario kind and reports each one's mean evaluation metrics.
pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &kind in &cfg.sweep_scenarios {
        let scenario = make_tidal_scenario(kind, cfg.scenario_seed);
        let steps = episode_steps(cfg, &scenario)?;
        for &w1 in &cfg.w1_values {
            let mut c = cfg.clone();
            c.weights.w1 = w1;
            for k in 0..cfg.controllers_per_config {
                c.seed = derive_seed(cfg.seed, k as u64);
                let tree = learn(&c, &scenario)?.strategy;
                let runs = evaluate_runs(
                    &scenario,
                    &tree,
                    &c.weights,
                    &c.env(),
                    steps,
                    cfg.eval_rollouts,
                    derive_seed(cfg.seed, EVAL_STREAM),
                )?;
                let mean = |f: fn(&Metrics) -> f64| runs.iter().map(f).sum::<f64>() / runs.len() as f64;
                rows.push(SweepRow {
                    scenario: kind.to_string(),
                    w1,
                    controller: k,
                    gate_operations: mean(|m| f64::from(m.gate_operations)),
                    no_migration_ratio: mean(|m| 1.0 - m.migration),
                    max_wait: mean(|m| m.max_wait),
                    unsafe_ratio: mean(|m| 1.0 - m.safety),
                    total_cost: mean(|m| m.total_cost),
                });
            }
        }
    }
    Ok(rows)
}

/// Default training-log path for a strategy written to `out`.
pub fn default_log_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map_or_else(|| "strategy".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}.training.csv"))
}
