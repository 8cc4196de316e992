use proptest::prelude::*;

use pourlab::behavior::archetypes::Archetype;
use pourlab::sim::{reset, step, Action, EnvConfig, Phase};

fn short() -> EnvConfig {
    EnvConfig {
        horizon: 400,
        ..EnvConfig::default()
    }
}

fn torques() -> impl Strategy<Value = Vec<[f64; 3]>> {
    prop::collection::vec(prop::array::uniform3(-6.0f64..6.0), 1..40)
}

/// Plays each action for 10 steps until the episode ends.
fn play(cfg: &EnvConfig, seed: u64, actions: &[[f64; 3]], mut check: impl FnMut(&pourlab::sim::EnvState, &pourlab::sim::Transition)) {
    let (mut st, _) = reset(cfg, seed).unwrap();
    for a in actions.iter().cycle() {
        for _ in 0..10 {
            let tr = step(&mut st, &Action::new(*a), cfg).unwrap();
            check(&st, &tr);
            if tr.done {
                return;
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn buckets_partition_the_particles(seed in 0u64..1000, actions in torques()) {
        let cfg = short();
        play(&cfg, seed, &actions, |st, _| {
            assert_eq!(st.counts.total(), cfg.particle_count);
            let by_phase = |ph: Phase| st.particles.iter().filter(|p| p.phase == ph).count();
            assert_eq!(by_phase(Phase::InCup), st.counts.in_cup);
            assert_eq!(by_phase(Phase::InFlight), st.counts.in_flight);
            assert_eq!(by_phase(Phase::SettledIn), st.counts.settled);
            assert_eq!(by_phase(Phase::SpilledOut), st.counts.spilled + st.counts.rim);
        });
    }

    #[test]
    fn accuracy_never_decreases(seed in 0u64..1000, actions in torques()) {
        let cfg = short();
        let mut last = 0.0;
        let mut spilled = 0;
        play(&cfg, seed, &actions, |st, tr| {
            assert!(tr.info.accuracy >= last);
            assert!((0.0..=1.0).contains(&tr.info.accuracy));
            assert!(st.counts.spilled + st.counts.rim >= spilled);
            last = tr.info.accuracy;
            spilled = st.counts.spilled + st.counts.rim;
        });
    }

    #[test]
    fn torques_are_clamped_and_effort_matches(seed in 0u64..1000, actions in torques()) {
        let cfg = short();
        play(&cfg, seed, &actions, |_, tr| {
            let t = tr.info.applied_torques;
            assert!(t.iter().all(|v| v.abs() <= cfg.torque_limit));
            let e: f64 = t.iter().map(|v| v * v).sum::<f64>() * cfg.dt;
            assert!((tr.info.effort - e).abs() <= 1e-12 * e.max(1.0));
        });
    }

    #[test]
    fn same_seed_same_episode(seed in 0u64..1000, actions in torques()) {
        let cfg = short();
        let mut a = Vec::new();
        let mut b = Vec::new();
        play(&cfg, seed, &actions, |_, tr| a.push(tr.observation.map(f64::to_bits)));
        play(&cfg, seed, &actions, |_, tr| b.push(tr.observation.map(f64::to_bits)));
        prop_assert_eq!(a, b);
    }
}

#[test]
fn scripted_pour_fills_the_container() {
    let cfg = EnvConfig::default();
    let trace = Archetype::BasePour.trace(&cfg, 0).unwrap();
    let last = trace.steps.last().unwrap();
    assert!(trace.steps.iter().any(|s| s.emission_active));
    assert!(last.settled_mass >= cfg.target_fill_fraction * cfg.total_mass() - 1e-12);
    assert!(last.spilled_mass + last.rim_mass < 0.2 * cfg.total_mass());
    assert!(trace.steps.len() < cfg.horizon, "a successful pour ends the episode early");
}

#[test]
fn cloned_state_evolves_independently() {
    let cfg = short();
    let (mut a, _) = reset(&cfg, 5).unwrap();
    for _ in 0..50 {
        step(&mut a, &Action::new([0.0, 0.0, -2.0]), &cfg).unwrap();
    }
    let mut b = a.clone();
    let ta = step(&mut a, &Action::new([0.0, 0.0, -2.0]), &cfg).unwrap();
    let tb = step(&mut b, &Action::new([0.0, 0.0, -2.0]), &cfg).unwrap();
    assert_eq!(ta, tb);
    step(&mut a, &Action::new([1.0, 1.0, 1.0]), &cfg).unwrap();
    assert_ne!(a.arm, b.arm);
}
