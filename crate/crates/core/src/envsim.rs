//! Discrete-time environment: ten-minute control periods over the hydro model,
//! the hard safety gating of the gate controller, the stochastic boat process
//! and the stopwatch monitors that define costs and evaluation metrics.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::control::Strategy;
use crate::error::{Error, Result};
use crate::hydro::{self, GateConfig, HydroParams, WaterLevels, DEFAULT_SUBSTEP_MIN};
use crate::scenario::{Scenario, EPISODE_STEPS};

pub const CONTROL_PERIOD_MIN: f64 = 10.0;
/// Safe fjord band, m DVR90.
pub const SAFE_LEVEL_MIN: f64 = 0.0;
pub const SAFE_LEVEL_MAX: f64 = 0.25;
/// Head difference within which fish can migrate.
pub const MIGRATION_HEAD: f64 = 0.1;
/// Head difference at and above which the gates must stay closed.
pub const MAX_OPERATING_HEAD: f64 = 1.0;
/// Wind needed to let sea water in through all gates, m/s.
pub const MIXING_WIND: f64 = 8.0;
/// Mean minutes between boat arrivals.
pub const BOAT_MEAN_INTERARRIVAL_MIN: f64 = 480.0;

/// Direction the water would flow through open gates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FlowMode {
    SeaHigher,
    FjordHigher,
}

/// What the controller observes at a decision point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlContext {
    pub mode: FlowMode,
    pub boat_incoming: bool,
    pub fjord: f64,
    pub sea: f64,
    pub wind: f64,
}

impl ControlContext {
    pub fn new(fjord: f64, sea: f64, wind: f64, boat_incoming: bool) -> Self {
        let mode = if sea >= fjord {
            FlowMode::SeaHigher
        } else {
            FlowMode::FjordHigher
        };
        Self {
            mode,
            boat_incoming,
            fjord,
            sea,
            wind,
        }
    }

    pub fn head(&self) -> f64 {
        self.sea - self.fjord
    }

    /// Index of the discrete (mode, boat) branch, 0..4.
    pub fn branch(&self) -> usize {
        let m = match self.mode {
            FlowMode::SeaHigher => 0,
            FlowMode::FjordHigher => 1,
        };
        m * 2 + usize::from(self.boat_incoming)
    }

    /// Continuous coordinates `(h_f, h_s, wind)`.
    pub fn point(&self) -> [f64; 3] {
        [self.fjord, self.sea, self.wind]
    }
}

/// A subset of the three gate configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ActionSet(u8);

impl ActionSet {
    pub const EMPTY: ActionSet = ActionSet(0);
    pub const ALL: ActionSet = ActionSet(0b111);

    pub fn of(actions: &[GateConfig]) -> Self {
        actions.iter().fold(Self::EMPTY, |s, &a| s.with(a))
    }

    pub fn with(self, a: GateConfig) -> Self {
        ActionSet(self.0 | (1 << a.index()))
    }

    pub fn contains(self, a: GateConfig) -> bool {
        self.0 & (1 << a.index()) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Members ordered by increasing gate count.
    pub fn iter(self) -> impl Iterator<Item = GateConfig> {
        GateConfig::ALL.into_iter().filter(move |a| self.contains(*a))
    }

    /// The member closest in gate count to `a`, preferring fewer gates on ties.
    pub fn nearest(self, a: GateConfig, num_gates: u32) -> Option<GateConfig> {
        if self.contains(a) {
            return Some(a);
        }
        let target = i64::from(a.open_gates(num_gates));
        self.iter()
            .min_by_key(|c| ((i64::from(c.open_gates(num_gates)) - target).abs(), c.index()))
    }
}

/// Gate configurations the controller automaton can execute in `ctx`.
pub fn allowed_actions(ctx: &ControlContext) -> ActionSet {
    if ctx.head().abs() >= MAX_OPERATING_HEAD {
        ActionSet::of(&[GateConfig::Closed])
    } else if ctx.mode == FlowMode::SeaHigher && ctx.wind < MIXING_WIND {
        ActionSet::of(&[GateConfig::Closed, GateConfig::Single])
    } else {
        ActionSet::ALL
    }
}

/// Weights of the four cost terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    /// Minutes outside the safe band.
    pub w1: f64,
    /// Accumulated squared boat waiting.
    pub w2: f64,
    /// Gate configuration changes.
    pub w3: f64,
    /// Minutes closed while migration was possible.
    pub w4: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            w1: 1e6,
            w2: 0.1,
            w3: 20.0,
            w4: 1.0,
        }
    }
}

impl CostWeights {
    pub const ZERO: CostWeights = CostWeights {
        w1: 0.0,
        w2: 0.0,
        w3: 0.0,
        w4: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        for (name, w) in [("w1", self.w1), ("w2", self.w2), ("w3", self.w3), ("w4", self.w4)] {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::param(name, "weights must be finite and nonnegative"));
            }
        }
        Ok(())
    }

    pub fn cost(&self, m: &Monitors) -> f64 {
        self.w1 * m.out_of_range
            + self.w2 * m.accum_cost_wait
            + self.w3 * f64::from(m.gate_changes)
            + self.w4 * m.no_migration
    }

    /// Cost accrued between two monitor snapshots.
    pub fn increment(&self, before: &Monitors, after: &Monitors) -> f64 {
        self.w1 * (after.out_of_range - before.out_of_range)
            + self.w2 * (after.accum_cost_wait - before.accum_cost_wait)
            + self.w3 * f64::from(after.gate_changes - before.gate_changes)
            + self.w4 * (after.no_migration - before.no_migration)
    }
}

/// Stopwatches and counters accumulated over an episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Monitors {
    pub out_of_range: f64,
    pub no_migration: f64,
    /// Minutes with |head| within the migration band.
    pub migration_eligible: f64,
    pub boat_wait_time: f64,
    pub accum_cost_wait: f64,
    pub gate_changes: u32,
    pub max_boat_wait: f64,
    pub min_level: f64,
    pub max_level: f64,
}

impl Monitors {
    pub fn new(initial_level: f64) -> Self {
        Self {
            out_of_range: 0.0,
            no_migration: 0.0,
            migration_eligible: 0.0,
            boat_wait_time: 0.0,
            accum_cost_wait: 0.0,
            gate_changes: 0,
            max_boat_wait: 0.0,
            min_level: initial_level,
            max_level: initial_level,
        }
    }
}

/// Environment settings that are not part of the scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub hydro: HydroParams,
    /// Boat arrivals per minute; zero disables boats.
    pub boat_rate: f64,
    pub substep_min: f64,
    pub initial_gates: GateConfig,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            hydro: HydroParams::default(),
            boat_rate: 1.0 / BOAT_MEAN_INTERARRIVAL_MIN,
            substep_min: DEFAULT_SUBSTEP_MIN,
            initial_gates: GateConfig::Closed,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        self.hydro.validate()?;
        if !(self.boat_rate.is_finite() && self.boat_rate >= 0.0) {
            return Err(Error::param("boat_rate", "must be finite and nonnegative"));
        }
        if !(self.substep_min > 0.0 && self.substep_min <= CONTROL_PERIOD_MIN) {
            return Err(Error::param("substep_min", "must lie in (0, 10]"));
        }
        Ok(())
    }
}

/// Full simulation state at a decision point.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub t: f64,
    pub levels: WaterLevels,
    pub wind: f64,
    pub gates: GateConfig,
    pub boat_incoming: bool,
    pub month: u32,
    pub monitors: Monitors,
}

impl EnvState {
    pub fn initial(scenario: &Scenario, config: &EnvConfig) -> Self {
        Self {
            t: 0.0,
            levels: WaterLevels::new(scenario.initial_fjord_level, scenario.sea_level.values[0]),
            wind: scenario.wind_speed.values[0],
            gates: config.initial_gates,
            boat_incoming: false,
            month: scenario.start_month(),
            monitors: Monitors::new(scenario.initial_fjord_level),
        }
    }

    pub fn context(&self) -> ControlContext {
        ControlContext::new(self.levels.fjord, self.levels.sea, self.wind, self.boat_incoming)
    }
}

/// Forcing that becomes visible at the end of a period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodEnd {
    pub sea: f64,
    pub wind: f64,
    pub month: u32,
}

/// Offset of a new boat arrival within `duration`, if one occurs and no boat is waiting.
pub fn boat_arrival<R: Rng + ?Sized>(
    rng: &mut R,
    duration: f64,
    boat_incoming: bool,
    rate: f64,
) -> Option<f64> {
    if boat_incoming || duration <= 0.0 || rate <= 0.0 {
        return None;
    }
    let u: f64 = rng.gen();
    // inverse-CDF exponential draw
    let offset = -(1.0 - u).ln() / rate;
    (offset < duration).then_some(offset)
}

/// Whether a boat is waiting after `duration` minutes.
pub fn boat_process<R: Rng + ?Sized>(rng: &mut R, duration: f64, boat_incoming: bool, rate: f64) -> bool {
    boat_incoming || boat_arrival(rng, duration, boat_incoming, rate).is_some()
}

/// Executes one control period.
pub fn env_step<R: Rng + ?Sized>(
    state: &EnvState,
    action: GateConfig,
    next: PeriodEnd,
    config: &EnvConfig,
    rng: &mut R,
) -> Result<EnvState> {
    if !allowed_actions(&state.context()).contains(action) {
        return Err(Error::DisallowedAction {
            action: action.open_gates(config.hydro.num_gates),
        });
    }
    let mut s = state.clone();
    let m = &mut s.monitors;

    if action != s.gates {
        m.gate_changes += 1;
    }
    s.gates = action;
    if action == GateConfig::Closed && s.boat_incoming {
        // letBoatPass
        s.boat_incoming = false;
        m.boat_wait_time = 0.0;
    }

    let sea = s.levels.sea;
    let gates_closed = !action.is_open();
    let end = hydro::integrate_step_with(
        s.levels,
        action,
        s.month,
        &config.hydro,
        CONTROL_PERIOD_MIN,
        config.substep_min,
        |level, dt| {
            if !(SAFE_LEVEL_MIN..=SAFE_LEVEL_MAX).contains(&level) {
                m.out_of_range += dt;
            }
            if (sea - level).abs() <= MIGRATION_HEAD {
                m.migration_eligible += dt;
                if gates_closed {
                    m.no_migration += dt;
                }
            }
            m.min_level = m.min_level.min(level);
            m.max_level = m.max_level.max(level);
        },
    )?;
    m.min_level = m.min_level.min(end.fjord);
    m.max_level = m.max_level.max(end.fjord);

    let wait_from = if s.boat_incoming {
        Some(0.0)
    } else {
        boat_arrival(rng, CONTROL_PERIOD_MIN, false, config.boat_rate)
    };
    if let Some(offset) = wait_from {
        let w0 = m.boat_wait_time;
        let w1 = w0 + (CONTROL_PERIOD_MIN - offset);
        m.accum_cost_wait += 0.5 * (w1 * w1 - w0 * w0);
        m.boat_wait_time = w1;
        m.max_boat_wait = m.max_boat_wait.max(w1);
        s.boat_incoming = true;
    }

    s.t += CONTROL_PERIOD_MIN;
    s.levels = WaterLevels::new(end.fjord, next.sea);
    s.wind = next.wind;
    s.month = next.month;
    Ok(s)
}

/// A running episode over a scenario.
pub struct Environment<'a> {
    scenario: &'a Scenario,
    config: &'a EnvConfig,
    state: EnvState,
    step: usize,
    rng: ChaCha8Rng,
}

impl<'a> Environment<'a> {
    pub fn new(scenario: &'a Scenario, config: &'a EnvConfig, seed: u64) -> Result<Self> {
        if f64::from(scenario.step_min()) != CONTROL_PERIOD_MIN {
            return Err(Error::param("scenario", "series step must equal the 10-minute control period"));
        }
        Ok(Self {
            scenario,
            config,
            state: EnvState::initial(scenario, config),
            step: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    pub fn context(&self) -> ControlContext {
        self.state.context()
    }

    pub fn config(&self) -> &EnvConfig {
        self.config
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    /// Periods left before the series is exhausted.
    pub fn steps_remaining(&self) -> usize {
        self.scenario.steps() - self.step
    }

    /// Clamps `requested` into the allowed set of the current state.
    pub fn clamp(&self, requested: GateConfig) -> GateConfig {
        allowed_actions(&self.context())
            .nearest(requested, self.config.hydro.num_gates)
            .unwrap_or(GateConfig::Closed)
    }

    /// Steps one period; `None` when the series is exhausted.
    pub fn step(&mut self, action: GateConfig) -> Result<Option<&EnvState>> {
        if self.steps_remaining() == 0 {
            return Ok(None);
        }
        let i = self.step + 1;
        let next = PeriodEnd {
            sea: self.scenario.sea_level.values[i],
            wind: self.scenario.wind_speed.values[i],
            month: self.scenario.month_at(self.state.t + CONTROL_PERIOD_MIN),
        };
        self.state = env_step(&self.state, action, next, self.config, &mut self.rng)?;
        self.step = i;
        Ok(Some(&self.state))
    }
}

/// One decision period of a rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub fjord: f64,
    pub sea: f64,
    pub wind: f64,
    pub boat_incoming: bool,
    pub requested: GateConfig,
    pub gates: GateConfig,
    /// Monitor values at the end of the period.
    pub monitors: Monitors,
    pub step_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub rows: Vec<TraceRow>,
    pub initial_monitors: Monitors,
    pub final_monitors: Monitors,
    pub weights: CostWeights,
    pub total_cost: f64,
    pub num_gates: u32,
}

impl EpisodeTrace {
    pub fn duration(&self) -> f64 {
        self.rows.len() as f64 * CONTROL_PERIOD_MIN
    }

    /// Trace CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "t_min,h_f,h_s,wind,gates,boat_incoming,out_of_range,no_migration,boat_wait,accum_cost_wait,gate_changes\n",
        );
        for r in &self.rows {
            let m = &r.monitors;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.t,
                r.fjord,
                r.sea,
                r.wind,
                r.gates.open_gates(self.num_gates),
                u8::from(r.boat_incoming),
                m.out_of_range,
                m.no_migration,
                m.boat_wait_time,
                m.accum_cost_wait,
                m.gate_changes
            );
        }
        out
    }
}

/// Runs a three-day episode (or the whole scenario when shorter than that is requested).
pub fn run_episode(
    scenario: &Scenario,
    strategy: &dyn Strategy,
    weights: &CostWeights,
    config: &EnvConfig,
    seed: u64,
) -> Result<EpisodeTrace> {
    run_episode_for(scenario, strategy, weights, config, seed, EPISODE_STEPS)
}

/// Runs `steps` control periods.
pub fn run_episode_for(
    scenario: &Scenario,
    strategy: &dyn Strategy,
    weights: &CostWeights,
    config: &EnvConfig,
    seed: u64,
    steps: usize,
) -> Result<EpisodeTrace> {
    let mut env = Environment::new(scenario, config, seed)?;
    if env.steps_remaining() < steps {
        return Err(Error::param(
            "scenario",
            format!("covers {} periods, episode needs {steps}", env.steps_remaining()),
        ));
    }
    let mut rows = Vec::with_capacity(steps);
    let initial_monitors = env.state().monitors;
    let mut total_cost = 0.0;
    for _ in 0..steps {
        let before = env.state().clone();
        let ctx = before.context();
        let requested = strategy.decide(&ctx);
        let gates = env.clamp(requested);
        let after = env.step(gates)?.expect("coverage checked above");
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
    Ok(EpisodeTrace {
        rows,
        initial_monitors,
        final_monitors: env.state().monitors,
        weights: *weights,
        total_cost,
        num_gates: config.hydro.num_gates,
    })
}

/// Evaluation quantities of a single rollout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Fraction of time inside the safe band, in [0, 1].
    pub safety: f64,
    /// Fraction of migration-eligible time with at least one gate open, in [0, 1].
    pub migration: f64,
    pub max_wait: f64,
    pub gate_operations: u32,
    pub min_level: f64,
    pub max_level: f64,
    pub out_of_range: f64,
    pub no_migration: f64,
    pub total_cost: f64,
}

pub fn metrics_from_trace(trace: &EpisodeTrace) -> Metrics {
    metrics_from_monitors(&trace.final_monitors, trace.duration(), trace.total_cost)
}

pub fn metrics_from_monitors(m: &Monitors, duration: f64, total_cost: f64) -> Metrics {
    let safety = if duration > 0.0 {
        1.0 - m.out_of_range / duration
    } else {
        1.0
    };
    let migration = if m.migration_eligible > 0.0 {
        (m.migration_eligible - m.no_migration) / m.migration_eligible
    } else {
        1.0
    };
    Metrics {
        safety: safety.clamp(0.0, 1.0),
        migration: migration.clamp(0.0, 1.0),
        max_wait: m.max_boat_wait,
        gate_operations: m.gate_changes,
        min_level: m.min_level,
        max_level: m.max_level,
        out_of_range: m.out_of_range,
        no_migration: m.no_migration,
        total_cost,
    }
}
