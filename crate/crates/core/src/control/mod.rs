//! Gate-control strategies: the rule-based baseline and learned partition trees.

mod document;
mod tree;

pub use document::{load_strategy, save_strategy, FORMAT_NAME};
pub use tree::{Leaf, Node, PartitionTree, StateBox, StrategyMeta, DIMENSIONS, MAX_DEPTH, NUM_BRANCHES};

use crate::envsim::{allowed_actions, ControlContext, FlowMode, MAX_OPERATING_HEAD, MIXING_WIND, SAFE_LEVEL_MAX, SAFE_LEVEL_MIN};
use crate::hydro::GateConfig;

/// A deterministic, memoryless map from observations to gate configurations.
pub trait Strategy: Send + Sync {
    fn decide(&self, ctx: &ControlContext) -> GateConfig;

    fn label(&self) -> &str {
        "strategy"
    }
}

/// The operators' guideline controller.
#[derive(Debug, Clone, Copy, Default)]
pub struct Baseline;

pub fn baseline_decide(ctx: &ControlContext) -> GateConfig {
    if ctx.boat_incoming || ctx.head().abs() >= MAX_OPERATING_HEAD {
        return GateConfig::Closed;
    }
    match ctx.mode {
        FlowMode::FjordHigher => {
            if ctx.fjord > SAFE_LEVEL_MIN {
                GateConfig::All
            } else {
                GateConfig::Closed
            }
        }
        FlowMode::SeaHigher => {
            if ctx.fjord >= SAFE_LEVEL_MAX {
                GateConfig::Closed
            } else if ctx.wind >= MIXING_WIND {
                GateConfig::All
            } else {
                GateConfig::Single
            }
        }
    }
}

impl Strategy for Baseline {
    fn decide(&self, ctx: &ControlContext) -> GateConfig {
        baseline_decide(ctx)
    }

    fn label(&self) -> &str {
        "baseline"
    }
}

/// Adapts a closure into a [`Strategy`].
pub struct FnStrategy<F> {
    label: String,
    f: F,
}

impl<F> FnStrategy<F>
where
    F: Fn(&ControlContext) -> GateConfig + Send + Sync,
{
    pub fn new(label: impl Into<String>, f: F) -> Self {
        Self {
            label: label.into(),
            f,
        }
    }
}

impl<F> Strategy for FnStrategy<F>
where
    F: Fn(&ControlContext) -> GateConfig + Send + Sync,
{
    fn decide(&self, ctx: &ControlContext) -> GateConfig {
        (self.f)(ctx)
    }

    fn label(&self) -> &str {
        &self.label
    }
}

impl Strategy for PartitionTree {
    fn decide(&self, ctx: &ControlContext) -> GateConfig {
        self.decide_in(ctx.branch(), ctx.point(), allowed_actions(ctx))
    }

    fn label(&self) -> &str {
        &self.meta.label
    }
}

/// Looks up the greedy action of `tree` for `ctx`.
pub fn tree_decide(tree: &PartitionTree, ctx: &ControlContext) -> GateConfig {
    tree.decide(ctx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(fjord: f64, sea: f64, wind: f64, boat: bool) -> ControlContext {
        ControlContext::new(fjord, sea, wind, boat)
    }

    #[test]
    fn baseline_examples() {
        assert_eq!(baseline_decide(&ctx(0.1, 0.3, 12.0, true)), GateConfig::Closed);
        assert_eq!(baseline_decide(&ctx(0.1, 0.3, 5.0, false)), GateConfig::Single);
        assert_eq!(baseline_decide(&ctx(0.1, 0.05, 5.0, false)), GateConfig::All);
        assert_eq!(baseline_decide(&ctx(-0.01, -0.3, 5.0, false)), GateConfig::Closed);
        assert_eq!(baseline_decide(&ctx(0.1, 0.3, 9.0, false)), GateConfig::All);
        assert_eq!(baseline_decide(&ctx(0.25, 0.4, 9.0, false)), GateConfig::Closed);
        assert_eq!(baseline_decide(&ctx(0.1, 1.1, 9.0, false)), GateConfig::Closed);
        assert_eq!(baseline_decide(&ctx(0.2, -0.8, 9.0, false)), GateConfig::Closed);
    }

    #[test]
    fn baseline_respects_hard_gating_on_grid() {
        let mut checked = 0;
        for i in 0..=50 {
            let fjord = -0.5 + 1.25 * i as f64 / 50.0;
            for j in 0..=60 {
                let sea = -1.5 + 3.0 * j as f64 / 60.0;
                for k in 0..=25 {
                    let wind = k as f64;
                    for boat in [false, true] {
                        let c = ctx(fjord, sea, wind, boat);
                        assert!(allowed_actions(&c).contains(baseline_decide(&c)), "{c:?}");
                        checked += 1;
                    }
                }
            }
        }
        assert!(checked > 80_000);
    }
}
