//! Water-balance model of the fjord: flow through the sluice gates, freshwater
//! inflow from the streams and integration of the fjord level over time.
//!
//! All quantities use meters and minutes. Levels are meters relative to DVR90.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Seconds per minute; flow constants are quoted per second.
const SECONDS_PER_MINUTE: f64 = 60.0;

/// Default explicit-Euler sub-step in minutes.
pub const DEFAULT_SUBSTEP_MIN: f64 = 0.5;

/// Monthly multipliers of the stream base flow, January first.
pub const MONTHLY_INFLOW_WEIGHTS: [f64; 12] = [
    1.45, 1.39, 1.30, 1.01, 0.82, 0.71, 0.66, 0.64, 0.72, 0.87, 1.12, 1.29,
];

/// Physical constants of the fjord and its dam.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HydroParams {
    /// Flow constant for sea-to-fjord flow, m^(1/2)/min.
    pub k_inflow: f64,
    /// Flow constant for fjord-to-sea flow, m^(1/2)/min. Negative.
    pub k_outflow: f64,
    /// Width of a single gate, m. Not published; 10 m is an assumption.
    pub gate_width: f64,
    /// Sill of the gates, m DVR90.
    pub gate_bottom: f64,
    /// Lower edge of a fully raised gate, m DVR90. Not published; +3 m is an assumption.
    pub gate_raised_bottom: f64,
    pub num_gates: u32,
    /// Surface area of the fjord, m².
    pub fjord_area: f64,
    /// Stream inflow before the monthly weight, m³/min.
    pub stream_base_flow: f64,
    pub monthly_weights: [f64; 12],
}

impl Default for HydroParams {
    fn default() -> Self {
        Self {
            k_inflow: 3.8 * SECONDS_PER_MINUTE,
            k_outflow: -3.5 * SECONDS_PER_MINUTE,
            gate_width: 10.0,
            gate_bottom: -4.1,
            gate_raised_bottom: 3.0,
            num_gates: 14,
            fjord_area: 2.9e8,
            stream_base_flow: 3558.0,
            monthly_weights: MONTHLY_INFLOW_WEIGHTS,
        }
    }
}

impl HydroParams {
    /// Converts a flow constant quoted in m^(1/2)/s into the internal per-minute unit.
    pub fn per_second_to_per_minute(k: f64) -> f64 {
        k * SECONDS_PER_MINUTE
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("k_inflow", self.k_inflow),
            ("k_outflow", self.k_outflow),
            ("gate_width", self.gate_width),
            ("gate_bottom", self.gate_bottom),
            ("gate_raised_bottom", self.gate_raised_bottom),
            ("fjord_area", self.fjord_area),
            ("stream_base_flow", self.stream_base_flow),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        if self.k_inflow <= 0.0 {
            return Err(Error::param("k_inflow", "must be positive"));
        }
        if self.k_outflow >= 0.0 {
            return Err(Error::param("k_outflow", "must be negative"));
        }
        if self.k_inflow.abs() <= self.k_outflow.abs() {
            return Err(Error::param(
                "k_inflow",
                "must exceed |k_outflow| in magnitude",
            ));
        }
        if self.gate_width <= 0.0 {
            return Err(Error::param("gate_width", "must be positive"));
        }
        if self.fjord_area <= 0.0 {
            return Err(Error::param("fjord_area", "must be positive"));
        }
        if self.num_gates < 2 {
            // {0, 1, all} must be three distinct configurations
            return Err(Error::param("num_gates", "must be at least 2"));
        }
        if self.gate_raised_bottom <= self.gate_bottom {
            return Err(Error::param(
                "gate_raised_bottom",
                "must lie above gate_bottom",
            ));
        }
        if self.stream_base_flow < 0.0 {
            return Err(Error::param("stream_base_flow", "must be nonnegative"));
        }
        if self.monthly_weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::param("monthly_weights", "all weights must be > 0"));
        }
        Ok(())
    }
}

/// One of the three gate modes the controller may choose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GateConfig {
    Closed,
    Single,
    All,
}

impl GateConfig {
    /// All modes ordered by increasing number of open gates.
    pub const ALL: [GateConfig; 3] = [GateConfig::Closed, GateConfig::Single, GateConfig::All];

    pub fn open_gates(self, num_gates: u32) -> u32 {
        match self {
            GateConfig::Closed => 0,
            GateConfig::Single => 1,
            GateConfig::All => num_gates,
        }
    }

    /// Inverse of [`GateConfig::open_gates`].
    pub fn from_open_gates(count: u32, num_gates: u32) -> Option<Self> {
        match count {
            0 => Some(GateConfig::Closed),
            1 => Some(GateConfig::Single),
            n if n == num_gates => Some(GateConfig::All),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_open(self) -> bool {
        self != GateConfig::Closed
    }
}

/// Fjord and sea level at one instant, m DVR90.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaterLevels {
    pub fjord: f64,
    pub sea: f64,
}

impl WaterLevels {
    pub fn new(fjord: f64, sea: f64) -> Self {
        Self { fjord, sea }
    }

    /// Sea minus fjord; positive when water would enter the fjord.
    pub fn head(&self) -> f64 {
        self.sea - self.fjord
    }
}

/// Submerged opening of one gate.
pub fn cross_section_single(levels: WaterLevels, params: &HydroParams, open: bool) -> f64 {
    if !open {
        return 0.0;
    }
    let water = levels.fjord.max(levels.sea);
    let top = params.gate_raised_bottom.min(water);
    params.gate_width * (top - params.gate_bottom).max(0.0)
}

/// Combined opening of all open gates.
pub fn cross_section_total(levels: WaterLevels, params: &HydroParams, gates: GateConfig) -> f64 {
    let n = gates.open_gates(params.num_gates);
    if n == 0 {
        return 0.0;
    }
    f64::from(n) * cross_section_single(levels, params, true)
}

/// Flow through the gates in m³/min, positive from sea to fjord.
pub fn gate_flow(levels: WaterLevels, area: f64, params: &HydroParams) -> f64 {
    if area <= 0.0 {
        return 0.0;
    }
    let dh = levels.head();
    if dh >= 0.0 {
        params.k_inflow * area * dh.sqrt()
    } else {
        params.k_outflow * area * (-dh).sqrt()
    }
}

/// Freshwater inflow in m³/min for a calendar month (1 = January).
pub fn stream_flow(month: u32, params: &HydroParams) -> Result<f64> {
    if !(1..=12).contains(&month) {
        return Err(Error::param("month", format!("{month} is not in 1..=12")));
    }
    Ok(params.stream_base_flow * params.monthly_weights[(month - 1) as usize])
}

/// Rate of change of the fjord level in m/min.
pub fn fjord_derivative(
    levels: WaterLevels,
    gates: GateConfig,
    month: u32,
    params: &HydroParams,
) -> Result<f64> {
    let area = cross_section_total(levels, params, gates);
    Ok((gate_flow(levels, area, params) + stream_flow(month, params)?) / params.fjord_area)
}

/// Advances the fjord level by `duration` minutes with the sea held constant.
///
/// Explicit Euler with a fixed sub-step. Within each sub-step the gate term is
/// clamped so it never carries the fjord across the sea level; the square-root
/// head term is not Lipschitz at equal levels and would otherwise oscillate.
pub fn integrate_step(
    levels: WaterLevels,
    gates: GateConfig,
    month: u32,
    params: &HydroParams,
    duration: f64,
) -> Result<WaterLevels> {
    integrate_step_with(levels, gates, month, params, duration, DEFAULT_SUBSTEP_MIN, |_, _| {})
}

/// Like [`integrate_step`] with an explicit sub-step, calling `observe(level, dt)`
/// with the fjord level at the start of every sub-step.
pub fn integrate_step_with<F>(
    levels: WaterLevels,
    gates: GateConfig,
    month: u32,
    params: &HydroParams,
    duration: f64,
    substep: f64,
    mut observe: F,
) -> Result<WaterLevels>
where
    F: FnMut(f64, f64),
{
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::param("duration", "must be positive and finite"));
    }
    if !(substep > 0.0 && substep.is_finite()) {
        return Err(Error::param("substep", "must be positive and finite"));
    }
    let inflow_rate = stream_flow(month, params)? / params.fjord_area;
    let sea = levels.sea;
    let mut fjord = levels.fjord;
    let n = (duration / substep).ceil().max(1.0) as usize;
    let dt = duration / n as f64;

    for _ in 0..n {
        observe(fjord, dt);
        let current = WaterLevels::new(fjord, sea);
        let area = cross_section_total(current, params, gates);
        let mut gate_delta = gate_flow(current, area, params) / params.fjord_area * dt;
        let gap = sea - fjord;
        if gap >= 0.0 {
            gate_delta = gate_delta.min(gap);
        } else {
            gate_delta = gate_delta.max(gap);
        }
        fjord += gate_delta + inflow_rate * dt;
    }

    if !fjord.is_finite() {
        return Err(Error::Numerical(format!(
            "fjord level became non-finite from {}",
            levels.fjord
        )));
    }
    Ok(WaterLevels::new(fjord, sea))
}
