use crate::control::StateBox;
use crate::hydro::GateConfig;

/// An observed cost-to-go target for an action taken at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub point: [f64; 3],
    pub action: GateConfig,
    pub value: f64,
}

/// A proposed split of a cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitDecision {
    pub dim: usize,
    pub threshold: f64,
    /// Explained fraction of the within-action squared error.
    pub reduction: f64,
    /// Fraction of the samples that fall left of the threshold.
    pub left_share: f64,
}

const MIN_SAMPLES_PER_SIDE: usize = 2;

/// Sum of squared deviations from the per-action means.
fn within_action_sse<'a>(samples: impl Iterator<Item = &'a Sample> + Clone) -> f64 {
    let mut sum = [0.0; 3];
    let mut n = [0usize; 3];
    for s in samples.clone() {
        sum[s.action.index()] += s.value;
        n[s.action.index()] += 1;
    }
    let mean: Vec<f64> = (0..3)
        .map(|a| if n[a] > 0 { sum[a] / n[a] as f64 } else { 0.0 })
        .collect();
    samples.map(|s| (s.value - mean[s.action.index()]).powi(2)).sum()
}

/// Tries the midpoint of every dimension of `cell` and returns the cut that
/// best separates the samples' values, provided it removes more than
/// `min_reduction` of their per-action squared error.
pub fn refine_partition(cell: &StateBox, samples: &[Sample], min_reduction: f64) -> Option<SplitDecision> {
    if samples.len() < 2 * MIN_SAMPLES_PER_SIDE {
        return None;
    }
    let parent = within_action_sse(samples.iter());
    if parent <= 0.0 || !parent.is_finite() {
        return None;
    }
    let mut best: Option<SplitDecision> = None;
    for dim in 0..3 {
        let threshold = cell.midpoint(dim);
        if !(threshold > cell.lo[dim] && threshold < cell.hi[dim]) {
            continue;
        }
        let left = samples.iter().filter(|s| s.point[dim] < threshold);
        let right = samples.iter().filter(|s| s.point[dim] >= threshold);
        let n_left = left.clone().count();
        if n_left < MIN_SAMPLES_PER_SIDE || samples.len() - n_left < MIN_SAMPLES_PER_SIDE {
            continue;
        }
        let children = within_action_sse(left) + within_action_sse(right);
        let reduction = (parent - children) / parent;
        if reduction > min_reduction && best.is_none_or(|b| reduction > b.reduction) {
            best = Some(SplitDecision {
                dim,
                threshold,
                reduction,
                left_share: n_left as f64 / samples.len() as f64,
            });
        }
    }
    best
}
