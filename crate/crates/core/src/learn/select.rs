use rayon::prelude::*;

use super::env::EpisodeFactory;
use super::qlearn::greedy_rollout_cost;
use crate::control::PartitionTree;
use crate::derive_seed;
use crate::error::{Error, Result};

/// Scores every candidate on the same `rollouts` seeded episodes and returns
/// the index of the lowest mean cost (first on ties) with all scores.
pub fn select_best_of_k<F: EpisodeFactory + ?Sized>(
    candidates: &[PartitionTree],
    factory: &F,
    rollouts: usize,
    seed: u64,
) -> Result<(usize, Vec<f64>)> {
    if candidates.is_empty() {
        return Err(Error::param("candidates", "need at least one strategy"));
    }
    if rollouts == 0 {
        return Err(Error::param("rollouts", "must be at least 1"));
    }
    let scores: Vec<Result<f64>> = candidates
        .par_iter()
        .map(|c| {
            let costs: Vec<Result<f64>> = (0..rollouts)
                .into_par_iter()
                .map(|r| greedy_rollout_cost(c, factory, derive_seed(seed, r as u64)))
                .collect();
            let mut sum = 0.0;
            for cost in costs {
                sum += cost?;
            }
            Ok(sum / rollouts as f64)
        })
        .collect();
    let scores: Vec<f64> = scores.into_iter().collect::<Result<_>>()?;
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s < scores[best] {
            best = i;
        }
    }
    Ok((best, scores))
}
