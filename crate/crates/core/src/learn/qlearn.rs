use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::env::{EpisodeFactory, Observation};
use super::refine::{refine_partition, Sample};
use super::select::select_best_of_k;
use super::{LearnerConfig, ReturnKind};
use crate::control::{PartitionTree, StateBox, MAX_DEPTH, NUM_BRANCHES};
use crate::derive_seed;
use crate::error::Result;
use crate::hydro::GateConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingLogRow {
    pub episode: usize,
    pub total_cost: f64,
    pub leaves: usize,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingLog {
    pub rows: Vec<TrainingLogRow>,
}

impl TrainingLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("episode,total_cost,leaves,epsilon\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{}", r.episode, r.total_cost, r.leaves, r.epsilon);
        }
        out
    }
}

/// Exploration rate of episode `episode`: linear decay, then flat.
pub fn epsilon_at(config: &LearnerConfig, episode: usize) -> f64 {
    let span = config.epsilon_decay_fraction * config.episodes as f64;
    let frac = if span > 0.0 {
        (episode as f64 / span).min(1.0)
    } else {
        1.0
    };
    config.epsilon_start + (config.epsilon_end - config.epsilon_start) * frac
}

struct StepRecord {
    obs: Observation,
    action: GateConfig,
    /// Whether `action` was the greedy choice.
    greedy: bool,
    cost: f64,
}

struct EpisodeRecord {
    steps: Vec<StepRecord>,
    total_cost: f64,
}

/// Greedy choice used while learning. Untried entries keep their initial
/// zero, so they look attractive until tried.
fn greedy(tree: &PartitionTree, obs: &Observation) -> GateConfig {
    tree.decide_in(obs.branch, obs.point, obs.allowed)
}

fn explore<F: EpisodeFactory + ?Sized>(
    tree: &PartitionTree,
    factory: &F,
    epsilon: f64,
    seed: u64,
) -> Result<EpisodeRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 2));
    let mut episode = factory.start(seed)?;
    let mut steps = Vec::new();
    let mut total_cost = 0.0;
    while let Some(obs) = episode.observe() {
        let best = greedy(tree, &obs);
        let action = if rng.gen::<f64>() < epsilon {
            let n = obs.allowed.len();
            obs.allowed.iter().nth(rng.gen_range(0..n)).unwrap_or(GateConfig::Closed)
        } else {
            best
        };
        let cost = episode.step(action)?;
        total_cost += cost;
        steps.push(StepRecord {
            obs,
            action,
            greedy: action == best,
            cost,
        });
    }
    Ok(EpisodeRecord { steps, total_cost })
}

/// Estimated cost-to-go from an observation: the best tried allowed action.
fn state_value(tree: &PartitionTree, obs: &Observation) -> f64 {
    let leaf = tree.leaf_at(obs.branch, obs.point);
    obs.allowed
        .iter()
        .filter(|a| leaf.visits[a.index()] > 0)
        .map(|a| leaf.q(a))
        .fold(None, |m: Option<f64>, q| Some(m.map_or(q, |m| m.min(q))))
        .unwrap_or(0.0)
}

/// Refinement bookkeeping for one node.
#[derive(Debug, Clone)]
struct LeafStats {
    cell: StateBox,
    depth: usize,
    samples: Vec<Sample>,
    /// Next slot to overwrite once the buffer is full.
    cursor: usize,
    fresh: usize,
}

impl LeafStats {
    fn new(cell: StateBox, depth: usize) -> Self {
        Self {
            cell,
            depth,
            samples: Vec::new(),
            cursor: 0,
            fresh: 0,
        }
    }

    fn push(&mut self, s: Sample, capacity: usize) {
        if self.samples.len() < capacity {
            self.samples.push(s);
        } else {
            self.samples[self.cursor] = s;
            self.cursor = (self.cursor + 1) % capacity;
        }
        self.fresh += 1;
    }
}

struct Refiner {
    stats: Vec<Vec<LeafStats>>,
    leaves: Vec<usize>,
    capacity: usize,
}

impl Refiner {
    fn new(tree: &PartitionTree, config: &LearnerConfig) -> Self {
        Self {
            stats: (0..NUM_BRANCHES)
                .map(|_| vec![LeafStats::new(tree.bounds, 0)])
                .collect(),
            leaves: vec![1; NUM_BRANCHES],
            capacity: 4 * config.split_visit_threshold,
        }
    }

    fn record(&mut self, branch: usize, id: usize, s: Sample) {
        let cap = self.capacity;
        self.stats[branch][id].push(s, cap);
    }

    fn maybe_split(
        &mut self,
        tree: &mut PartitionTree,
        branch: usize,
        id: usize,
        config: &LearnerConfig,
    ) -> Result<()> {
        let st = &mut self.stats[branch][id];
        if st.fresh < config.split_visit_threshold {
            return Ok(());
        }
        st.fresh = 0;
        if !config.splitting || self.leaves[branch] >= config.max_leaves || st.depth >= MAX_DEPTH {
            return Ok(());
        }
        let Some(d) = refine_partition(&st.cell, &st.samples, config.split_min_reduction) else {
            return Ok(());
        };
        let (cell, depth) = (st.cell, st.depth);
        let (l, r) = tree.split_leaf(branch, id, d.dim, d.threshold, d.left_share)?;
        let (lc, rc) = cell.split(d.dim, d.threshold);
        let nodes = &mut self.stats[branch];
        nodes[id].samples = Vec::new();
        nodes.resize(r + 1, LeafStats::new(cell, depth));
        nodes[l] = LeafStats::new(lc, depth + 1);
        nodes[r] = LeafStats::new(rc, depth + 1);
        self.leaves[branch] += 1;
        Ok(())
    }
}

/// Backward pass of bootstrapped updates over one episode, then refinement
/// of the leaves it touched.
fn apply(
    tree: &mut PartitionTree,
    refiner: &mut Refiner,
    record: &EpisodeRecord,
    config: &LearnerConfig,
) -> Result<()> {
    let mut touched = Vec::with_capacity(record.steps.len());
    // target of step t + 1
    let mut later = 0.0;
    for t in (0..record.steps.len()).rev() {
        let step = &record.steps[t];
        let next = record.steps.get(t + 1);
        let bootstrap = || next.map_or(0.0, |n| state_value(tree, &n.obs));
        let target = step.cost
            + match config.returns {
                ReturnKind::Bootstrap => bootstrap(),
                ReturnKind::MonteCarlo => later,
                ReturnKind::Watkins => match next {
                    Some(n) if n.greedy => later,
                    _ => bootstrap(),
                },
            };
        later = target;
        let branch = step.obs.branch;
        let id = tree.locate(branch, step.obs.point);
        let leaf = tree.leaf_mut(branch, id);
        let a = step.action.index();
        let alpha = (1.0 / (1.0 + leaf.visits[a] as f64)).max(config.alpha_min);
        leaf.q[a] += alpha * (target - leaf.q[a]);
        leaf.visits[a] += 1;
        refiner.record(
            branch,
            id,
            Sample {
                point: tree.bounds.clamp(step.obs.point),
                action: step.action,
                value: target,
            },
        );
        touched.push((branch, id));
    }
    for (branch, id) in touched {
        refiner.maybe_split(tree, branch, id, config)?;
    }
    Ok(())
}

/// Gives actions that were never tried a cost above every tried one, so the
/// greedy policy only trusts estimates backed by experience.
fn finalize(tree: &mut PartitionTree) {
    for branch in 0..NUM_BRANCHES {
        for (id, _) in tree.leaf_cells(branch) {
            let leaf = tree.leaf_mut(branch, id);
            let worst = (0..3)
                .filter(|&a| leaf.visits[a] > 0)
                .map(|a| leaf.q[a])
                .fold(None, |m: Option<f64>, q| Some(m.map_or(q, |m| m.max(q))));
            if let Some(worst) = worst {
                for a in 0..3 {
                    if leaf.visits[a] == 0 {
                        leaf.q[a] = worst + worst.abs() * 1e-6 + 1.0;
                    }
                }
            }
        }
    }
}

/// Trains one strategy with ε-greedy exploration.
///
/// Episodes run in batches against a frozen copy of the tree; their updates
/// are applied afterwards in episode order, so results do not depend on the
/// number of worker threads.
pub fn train<F: EpisodeFactory + ?Sized>(
    factory: &F,
    config: &LearnerConfig,
) -> Result<(PartitionTree, TrainingLog)> {
    config.validate()?;
    let mut tree = PartitionTree::new(config.bounds, factory.num_gates())?;
    let mut refiner = Refiner::new(&tree, config);
    let mut log = TrainingLog::default();
    let mut start = 0;
    while start < config.episodes {
        let end = (start + config.batch_size).min(config.episodes);
        let snapshot = &tree;
        let records: Vec<Result<EpisodeRecord>> = (start..end)
            .into_par_iter()
            .map(|e| explore(snapshot, factory, epsilon_at(config, e), derive_seed(config.seed, e as u64)))
            .collect();
        for (e, record) in (start..end).zip(records) {
            let record = record?;
            apply(&mut tree, &mut refiner, &record, config)?;
            log.rows.push(TrainingLogRow {
                episode: e,
                total_cost: record.total_cost,
                leaves: refiner.leaves.iter().sum(),
                epsilon: epsilon_at(config, e),
            });
        }
        start = end;
    }
    finalize(&mut tree);
    tree.meta.seed = config.seed;
    tree.meta.episodes = config.episodes as u64;
    Ok((tree, log))
}

/// Cost of one greedy rollout of `tree`.
pub fn greedy_rollout_cost<F: EpisodeFactory + ?Sized>(
    tree: &PartitionTree,
    factory: &F,
    seed: u64,
) -> Result<f64> {
    let mut episode = factory.start(seed)?;
    let mut total = 0.0;
    while let Some(obs) = episode.observe() {
        total += episode.step(greedy(tree, &obs))?;
    }
    Ok(total)
}

/// Trains `config.restarts` independent candidates and keeps the one with the
/// lowest mean evaluation cost. Returns the winner, its training log and the
/// candidates' scores.
pub fn train_best<F: EpisodeFactory + ?Sized>(
    factory: &F,
    config: &LearnerConfig,
) -> Result<(PartitionTree, TrainingLog, Vec<f64>)> {
    config.validate()?;
    let runs: Vec<Result<(PartitionTree, TrainingLog)>> = (0..config.restarts)
        .into_par_iter()
        .map(|k| {
            let mut c = config.clone();
            c.seed = derive_seed(config.seed, k as u64);
            train(factory, &c).map(|(mut tree, log)| {
                tree.meta.seed = config.seed;
                (tree, log)
            })
        })
        .collect();
    let runs: Vec<(PartitionTree, TrainingLog)> = runs.into_iter().collect::<Result<_>>()?;
    let candidates: Vec<PartitionTree> = runs.iter().map(|(t, _)| t.clone()).collect();
    let eval_seed = derive_seed(config.seed, u64::MAX);
    let (best, scores) = select_best_of_k(&candidates, factory, config.selection_rollouts, eval_seed)?;
    let (tree, log) = runs.into_iter().nth(best).expect("index from candidates");
    Ok((tree, log, scores))
}
