use super::env::TwinTraining;
use super::qlearn::train_best;
use super::LearnerConfig;
use crate::control::{tree_decide, PartitionTree};
use crate::derive_seed;
use crate::envsim::{CostWeights, EnvConfig, EpisodeTrace, Environment, TraceRow, CONTROL_PERIOD_MIN};
use crate::error::{Error, Result};
use crate::scenario::{NoiseBounds, Scenario};

/// Receding-horizon schedule, minutes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnlinePlan {
    pub replan_period: u32,
    pub learn_latency: u32,
    pub horizon: u32,
}

impl Default for OnlinePlan {
    fn default() -> Self {
        Self {
            replan_period: 360,
            learn_latency: 60,
            horizon: 4320,
        }
    }
}

impl OnlinePlan {
    pub fn validate(&self) -> Result<()> {
        let period = CONTROL_PERIOD_MIN as u32;
        for (name, v) in [
            ("replan_period", self.replan_period),
            ("learn_latency", self.learn_latency),
            ("plan_horizon", self.horizon),
        ] {
            if v % period != 0 {
                return Err(Error::param(name, format!("must be a multiple of {period} minutes")));
            }
        }
        if self.replan_period == 0 {
            return Err(Error::param("replan_period", "must be positive"));
        }
        if self.learn_latency > self.replan_period {
            return Err(Error::param("learn_latency", "must not exceed the replan period"));
        }
        if self.replan_period > self.horizon {
            return Err(Error::param("replan_period", "must not exceed the planning horizon"));
        }
        Ok(())
    }

    fn steps(minutes: u32) -> usize {
        (minutes / CONTROL_PERIOD_MIN as u32) as usize
    }
}

/// A strategy change during an online run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategySwap {
    /// When learning of the new strategy started.
    pub triggered_at: f64,
    /// When it took control.
    pub effective_at: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OnlineResult {
    pub trace: EpisodeTrace,
    pub swaps: Vec<StrategySwap>,
}

/// Operates over the whole scenario, relearning from the current state every
/// replan period. Each new strategy takes over `learn_latency` minutes after
/// its trigger; until then the previous one stays in control.
pub fn online_run(
    scenario: &Scenario,
    plan: &OnlinePlan,
    learner: &LearnerConfig,
    env_config: &EnvConfig,
    weights: &CostWeights,
    noise: NoiseBounds,
    seed: u64,
) -> Result<OnlineResult> {
    plan.validate()?;
    let horizon_steps = OnlinePlan::steps(plan.horizon);
    let replan_steps = OnlinePlan::steps(plan.replan_period);
    let latency_steps = OnlinePlan::steps(plan.learn_latency);
    let mut env = Environment::new(scenario, env_config, seed)?;
    let total = env.steps_remaining();

    let learn_at = |step: usize, env: &Environment, round: u64| -> Result<PartitionTree> {
        let state = env.state();
        let forecast = scenario.window(step, horizon_steps, state.levels.fjord)?;
        let mut cfg = env_config.clone();
        cfg.initial_gates = state.gates;
        let factory = TwinTraining::new(forecast, cfg, *weights, noise, horizon_steps)?;
        let mut lc = learner.clone();
        lc.horizon_steps = horizon_steps;
        lc.seed = derive_seed(seed, round);
        Ok(train_best(&factory, &lc)?.0)
    };

    let mut current = learn_at(0, &env, 0)?;
    let mut pending: Option<(usize, PartitionTree)> = None;
    let mut swaps = Vec::new();
    let mut rows = Vec::with_capacity(total);
    let initial_monitors = env.state().monitors;
    let mut total_cost = 0.0;
    for step in 0..total {
        if step > 0 && step % replan_steps == 0 {
            let tree = learn_at(step, &env, (step / replan_steps) as u64)?;
            swaps.push(StrategySwap {
                triggered_at: step as f64 * CONTROL_PERIOD_MIN,
                effective_at: (step + latency_steps) as f64 * CONTROL_PERIOD_MIN,
            });
            pending = Some((step + latency_steps, tree));
        }
        if pending.as_ref().is_some_and(|(at, _)| *at == step) {
            current = pending.take().expect("checked").1;
        }
        let before = env.state().clone();
        let requested = tree_decide(&current, &before.context());
        let gates = env.clamp(requested);
        let after = env.step(gates)?.expect("step within the series");
        let step_cost = weights.increment(&before.monitors, &after.monitors);
        total_cost += step_cost;
        rows.push(TraceRow {
            t: before.t,
            fjord: before.levels.fjord,
            sea: before.levels.sea,
            wind: before.wind,
            boat_incoming: before.boat_incoming,
            requested,
            gates,
            monitors: after.monitors,
            step_cost,
        });
    }
    // a strategy that would only take over after the end never operates
    swaps.retain(|s| s.effective_at < total as f64 * CONTROL_PERIOD_MIN);
    Ok(OnlineResult {
        trace: EpisodeTrace {
            rows,
            initial_monitors,
            final_monitors: env.state().monitors,
            weights: *weights,
            total_cost,
            num_gates: env_config.hydro.num_gates,
        },
        swaps,
    })
}
