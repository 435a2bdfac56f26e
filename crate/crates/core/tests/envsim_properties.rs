mod common;

use fjordtwin::control::{Baseline, FnStrategy, Strategy};
use fjordtwin::envsim::{
    allowed_actions, run_episode, ControlContext, CostWeights, EnvConfig, FlowMode, MAX_OPERATING_HEAD, MIXING_WIND,
};
use fjordtwin::hydro::GateConfig;
use fjordtwin::scenario::{make_tidal_scenario, perturb_forecast_with, NoiseBounds, ScenarioKind};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn kind() -> impl proptest::strategy::Strategy<Value = ScenarioKind> {
    prop_oneof![Just(ScenarioKind::Normal), Just(ScenarioKind::Low), Just(ScenarioKind::High)]
}

/// A strategy that answers pseudo-randomly but deterministically per context.
fn scrambler(seed: u64) -> impl Strategy {
    FnStrategy::new("random", move |ctx: &ControlContext| {
        let bits = (ctx.fjord.to_bits() ^ ctx.sea.to_bits().rotate_left(17) ^ ctx.wind.to_bits().rotate_left(33))
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            ^ seed;
        GateConfig::ALL[(bits >> 61) as usize % 3]
    })
}

fn hard_gating_holds(ctx: &ControlContext, gates: GateConfig) -> bool {
    let unsafe_head = ctx.head().abs() >= MAX_OPERATING_HEAD && gates.is_open();
    let unmixed = ctx.mode == FlowMode::SeaHigher && ctx.wind < MIXING_WIND && gates == GateConfig::All;
    !unsafe_head && !unmixed
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn traces_never_break_hard_gating(k in kind(), scenario_seed in 0u64..50, seed in any::<u64>()) {
        let sc = make_tidal_scenario(k, scenario_seed);
        let w = CostWeights::default();
        let trace = run_episode(&sc, &scrambler(seed), &w, &EnvConfig::default(), seed).unwrap();
        for r in &trace.rows {
            let ctx = ControlContext::new(r.fjord, r.sea, r.wind, r.boat_incoming);
            prop_assert!(hard_gating_holds(&ctx, r.gates));
            prop_assert!(allowed_actions(&ctx).contains(r.gates));
        }
    }

    #[test]
    fn closing_on_boats_bounds_the_wait(k in kind(), scenario_seed in 0u64..50, seed in any::<u64>()) {
        let sc = make_tidal_scenario(k, scenario_seed);
        let inner = scrambler(seed);
        let closer = FnStrategy::new("closer", move |ctx: &ControlContext| {
            if ctx.boat_incoming { GateConfig::Closed } else { inner.decide(ctx) }
        });
        let trace = run_episode(&sc, &closer, &CostWeights::default(), &EnvConfig::default(), seed).unwrap();
        prop_assert!(trace.final_monitors.max_boat_wait <= 10.0);
    }

    #[test]
    fn step_costs_add_up_to_monitor_cost(k in kind(), seed in any::<u64>()) {
        let sc = make_tidal_scenario(k, 3);
        let w = CostWeights::default();
        let trace = run_episode(&sc, &scrambler(seed), &w, &EnvConfig::default(), seed).unwrap();
        let incremental: f64 = trace.rows.iter().map(|r| r.step_cost).sum();
        let recomputed = w.cost(&trace.final_monitors) - w.cost(&trace.initial_monitors);
        prop_assert!((incremental - recomputed).abs() <= 1e-6 * recomputed.abs().max(1.0));
        prop_assert!((trace.total_cost - incremental).abs() <= 1e-6 * incremental.abs().max(1.0));
    }

    #[test]
    fn forecast_noise_stays_in_bounds(k in kind(), seed in any::<u64>(), sea in 0.0..0.05f64, wind in 0.0..3.0f64) {
        let sc = make_tidal_scenario(k, 9);
        let bounds = NoiseBounds { sea, wind };
        let f = perturb_forecast_with(&sc, bounds, seed).scenario;
        for (a, b) in f.sea_level.values.iter().zip(&sc.sea_level.values) {
            prop_assert!((a - b).abs() <= sea);
        }
        for (a, b) in f.wind_speed.values.iter().zip(&sc.wind_speed.values) {
            prop_assert!(*a >= 0.0);
            prop_assert!((a - b).abs() <= wind);
        }
    }
}

#[test]
fn traces_are_pure_functions_of_inputs() {
    let sc = make_tidal_scenario(ScenarioKind::High, 4);
    let w = CostWeights::default();
    let cfg = EnvConfig::default();
    let a = run_episode(&sc, &Baseline, &w, &cfg, 17).unwrap();
    let b = run_episode(&sc, &Baseline, &w, &cfg, 17).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a, b);
}

#[test]
fn random_contexts_respect_allowed_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100_000 {
        let ctx = common::random_context(&mut rng);
        let allowed = allowed_actions(&ctx);
        for a in allowed.iter() {
            assert!(hard_gating_holds(&ctx, a), "{ctx:?} {a:?}");
        }
        assert!(allowed.contains(GateConfig::Closed));
    }
}
