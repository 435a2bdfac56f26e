use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::derive_seed;
use crate::envsim::{allowed_actions, env_step, ActionSet, CostWeights, EnvConfig, EnvState, PeriodEnd, CONTROL_PERIOD_MIN};
use crate::error::{Error, Result};
use crate::hydro::GateConfig;
use crate::scenario::{perturb_forecast_with, NoiseBounds, Scenario};

/// What the learner sees at a decision point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub branch: usize,
    pub point: [f64; 3],
    pub allowed: ActionSet,
}

/// One finite-horizon episode.
pub trait Episode {
    /// `None` once the horizon is reached.
    fn observe(&self) -> Option<Observation>;
    /// Applies an allowed action and returns the cost it incurred.
    fn step(&mut self, action: GateConfig) -> Result<f64>;
}

/// Source of independent, seeded episodes.
pub trait EpisodeFactory: Sync {
    fn num_gates(&self) -> u32;
    fn start(&self, seed: u64) -> Result<Box<dyn Episode + '_>>;
}

/// Training episodes of the digital twin on a forecast.
///
/// Every episode sees its own noisy copy of the forecast.
#[derive(Debug, Clone)]
pub struct TwinTraining {
    pub forecast: Scenario,
    pub env: EnvConfig,
    pub weights: CostWeights,
    pub noise: NoiseBounds,
    pub horizon_steps: usize,
}

impl TwinTraining {
    pub fn new(
        forecast: Scenario,
        env: EnvConfig,
        weights: CostWeights,
        noise: NoiseBounds,
        horizon_steps: usize,
    ) -> Result<Self> {
        env.validate()?;
        weights.validate()?;
        if f64::from(forecast.step_min()) != CONTROL_PERIOD_MIN {
            return Err(Error::param("scenario", "series step must equal the 10-minute control period"));
        }
        if horizon_steps == 0 {
            return Err(Error::param("horizon_steps", "must be at least 1"));
        }
        Ok(Self {
            forecast,
            env,
            weights,
            noise,
            horizon_steps,
        })
    }

    /// Periods per episode; shorter than requested when the forecast ends first.
    pub fn steps(&self) -> usize {
        self.horizon_steps.min(self.forecast.steps())
    }
}

struct TwinEpisode<'a> {
    scenario: Scenario,
    config: &'a EnvConfig,
    weights: CostWeights,
    state: EnvState,
    step: usize,
    horizon: usize,
    rng: ChaCha8Rng,
}

impl Episode for TwinEpisode<'_> {
    fn observe(&self) -> Option<Observation> {
        if self.step >= self.horizon {
            return None;
        }
        let ctx = self.state.context();
        Some(Observation {
            branch: ctx.branch(),
            point: ctx.point(),
            allowed: allowed_actions(&ctx),
        })
    }

    fn step(&mut self, action: GateConfig) -> Result<f64> {
        let i = self.step + 1;
        let next = PeriodEnd {
            sea: self.scenario.sea_level.values[i],
            wind: self.scenario.wind_speed.values[i],
            month: self.scenario.month_at(self.state.t + CONTROL_PERIOD_MIN),
        };
        let after = env_step(&self.state, action, next, self.config, &mut self.rng)?;
        let cost = self.weights.increment(&self.state.monitors, &after.monitors);
        self.state = after;
        self.step = i;
        Ok(cost)
    }
}

impl EpisodeFactory for TwinTraining {
    fn num_gates(&self) -> u32 {
        self.env.hydro.num_gates
    }

    fn start(&self, seed: u64) -> Result<Box<dyn Episode + '_>> {
        let scenario = perturb_forecast_with(&self.forecast, self.noise, derive_seed(seed, 0)).scenario;
        let state = EnvState::initial(&scenario, &self.env);
        Ok(Box::new(TwinEpisode {
            scenario,
            config: &self.env,
            weights: self.weights,
            state,
            step: 0,
            horizon: self.steps(),
            rng: ChaCha8Rng::seed_from_u64(derive_seed(seed, 1)),
        }))
    }
}
