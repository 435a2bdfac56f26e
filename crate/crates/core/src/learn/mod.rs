//! Finite-horizon Q-learning over adaptively refined partitions of the
//! continuous state, best-of-k selection and online receding-horizon replanning.

mod env;
mod online;
mod qlearn;
mod refine;
mod select;

pub use env::{Episode, EpisodeFactory, Observation, TwinTraining};
pub use online::{online_run, OnlinePlan, OnlineResult, StrategySwap};
pub use qlearn::{epsilon_at, greedy_rollout_cost, train, train_best, TrainingLog, TrainingLogRow};
pub use refine::{refine_partition, Sample, SplitDecision};
pub use select::select_best_of_k;

pub use crate::envsim::CostWeights;

use crate::control::StateBox;
use crate::error::{Error, Result};

/// Learning hyper-parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub episodes: usize,
    /// Independent candidates trained before picking the best.
    pub restarts: usize,
    pub horizon_steps: usize,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of the episodes over which ε decays linearly.
    pub epsilon_decay_fraction: f64,
    /// Enables partition refinement; off gives a fixed one-leaf-per-branch table.
    pub splitting: bool,
    /// Fresh samples a leaf collects before a split is considered.
    pub split_visit_threshold: usize,
    /// Minimum relative variance reduction for committing a split.
    pub split_min_reduction: f64,
    /// Leaf cap per discrete branch.
    pub max_leaves: usize,
    /// Episodes rolled out against one snapshot of the tree.
    pub batch_size: usize,
    /// Evaluation rollouts per candidate in best-of-k selection.
    pub selection_rollouts: usize,
    pub returns: ReturnKind,
    /// Lower bound of the step size 1/(1 + visits); 0 keeps the plain average.
    pub alpha_min: f64,
    pub bounds: StateBox,
    pub seed: u64,
}

/// Target used for a Q-update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReturnKind {
    /// Step cost plus the best estimate of the successor's leaf.
    Bootstrap,
    /// Observed remaining cost of the episode.
    MonteCarlo,
    /// Observed cost up to the next exploratory action, bootstrapped there.
    Watkins,
}

impl ReturnKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ReturnKind::Bootstrap => "bootstrap",
            ReturnKind::MonteCarlo => "montecarlo",
            ReturnKind::Watkins => "watkins",
        }
    }
}

impl std::fmt::Display for ReturnKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ReturnKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [ReturnKind::Bootstrap, ReturnKind::MonteCarlo, ReturnKind::Watkins]
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown return kind `{s}` (expected bootstrap, montecarlo or watkins)")))
    }
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            episodes: 6000,
            restarts: 3,
            horizon_steps: crate::scenario::EPISODE_STEPS,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_fraction: 0.8,
            splitting: true,
            split_visit_threshold: 64,
            split_min_reduction: 0.10,
            max_leaves: 4096,
            batch_size: 8,
            selection_rollouts: 20,
            returns: ReturnKind::Watkins,
            alpha_min: 0.0,
            bounds: StateBox::default(),
            seed: 0,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.episodes < 1 {
            return Err(Error::param("episodes", "must be at least 1"));
        }
        if self.restarts < 1 {
            return Err(Error::param("restarts", "must be at least 1"));
        }
        if self.horizon_steps < 1 {
            return Err(Error::param("horizon_steps", "must be at least 1"));
        }
        for (name, v) in [("epsilon_start", self.epsilon_start), ("epsilon_end", self.epsilon_end)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(name, "must lie in [0, 1]"));
            }
        }
        if !(self.epsilon_decay_fraction > 0.0 && self.epsilon_decay_fraction <= 1.0) {
            return Err(Error::param("epsilon_decay_fraction", "must lie in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.alpha_min) {
            return Err(Error::param("alpha_min", "must lie in [0, 1]"));
        }
        if self.split_visit_threshold < 4 {
            return Err(Error::param("split_visit_threshold", "must be at least 4"));
        }
        if !(self.split_min_reduction >= 0.0 && self.split_min_reduction < 1.0) {
            return Err(Error::param("split_min_reduction", "must lie in [0, 1)"));
        }
        if self.max_leaves < 1 {
            return Err(Error::param("max_leaves", "must be at least 1"));
        }
        if self.batch_size < 1 {
            return Err(Error::param("batch_size", "must be at least 1"));
        }
        if self.selection_rollouts < 1 {
            return Err(Error::param("selection_rollouts", "must be at least 1"));
        }
        self.bounds.validate()
    }
}
