use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::game_core::{Action, Environment, EnvironmentError, TrajStep, Trajectory};

use super::env::TrafficEnv;
use super::scenario::ScenarioConfig;

/// Splitmix-style stream derivation, so every consumer of randomness gets
/// an independent deterministic stream from one master seed.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Demonstration rollouts plus per-episode crash bookkeeping.
#[derive(Debug, Clone)]
pub struct DemoBatch {
    /// One trajectory per (episode, controlled agent).
    pub trajectories: Vec<Trajectory>,
    /// Whether any controlled agent collided in each episode.
    pub crashed: Vec<bool>,
}

/// Rolls out the rule-based driver with small seeded action noise and
/// records per-agent trajectories. Fully deterministic per seed.
pub fn generate_demonstrations(
    config: &ScenarioConfig,
    n_episodes: usize,
    seed: u64,
) -> Result<DemoBatch, EnvironmentError> {
    assert!(n_episodes >= 1);
    let mut env = TrafficEnv::new(config.clone())?;
    let n = config.n_agents;
    let mut trajectories = Vec::with_capacity(n_episodes * n);
    let mut crashed = Vec::with_capacity(n_episodes);

    for ep in 0..n_episodes {
        let mut obs = env.reset(derive_seed(seed, 2 * ep as u64))?;
        let mut noise = ChaCha8Rng::seed_from_u64(derive_seed(seed, 2 * ep as u64 + 1));
        let mut trajs: Vec<Trajectory> =
            (0..n).map(|i| Trajectory::new(i, config.horizon)).collect();
        let mut active = vec![true; n];

        while !env.episode_done() {
            let state = env.state().expect("reset state").clone();
            let mut actions = Vec::with_capacity(n);
            for i in 0..n {
                let base =
                    super::driver::rule_based_driver(&env, &state, i, &env.driver_params);
                let a = Action::new(
                    base.accel
                        + 0.15 * crate::approximator::standard_normal(&mut noise),
                    base.heading_change
                        + 0.004 * crate::approximator::standard_normal(&mut noise),
                )
                .clamped(config.a_min, config.a_max, config.dtheta_max);
                actions.push(a);
            }
            let (outcome, next_obs) = env.step(&actions)?;
            for i in 0..n {
                if active[i] {
                    trajs[i].steps.push(TrajStep {
                        observation: obs[i].clone(),
                        action: actions[i],
                        log_prob: 0.0,
                        reward: outcome.rewards[i],
                        cost: outcome.costs[i],
                    });
                    if outcome.done[i] {
                        active[i] = false;
                    }
                }
            }
            obs = next_obs;
        }
        let state = env.state().expect("state");
        crashed.push(state.collided_ever[..n].iter().any(|&c| c));
        trajectories.extend(trajs);
    }
    Ok(DemoBatch {
        trajectories,
        crashed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traffic_env::map::MapKind;

    #[test]
    fn demos_deterministic_per_seed() {
        let cfg = ScenarioConfig::default_for(MapKind::Merge, 3);
        let a = generate_demonstrations(&cfg, 2, 11).unwrap();
        let b = generate_demonstrations(&cfg, 2, 11).unwrap();
        assert_eq!(a.trajectories.len(), b.trajectories.len());
        for (ta, tb) in a.trajectories.iter().zip(b.trajectories.iter()) {
            assert_eq!(ta.len(), tb.len());
            for (sa, sb) in ta.steps.iter().zip(tb.steps.iter()) {
                assert_eq!(sa.action, sb.action);
                assert_eq!(sa.reward, sb.reward);
                assert_eq!(sa.observation.values, sb.observation.values);
            }
        }
        assert_eq!(a.crashed, b.crashed);
    }

    #[test]
    fn demo_actions_within_bounds() {
        let cfg = ScenarioConfig::default_for(MapKind::TJunction, 3);
        let batch = generate_demonstrations(&cfg, 2, 5).unwrap();
        for t in &batch.trajectories {
            for s in &t.steps {
                assert!(s.action.accel >= cfg.a_min && s.action.accel <= cfg.a_max);
                assert!(s.action.heading_change.abs() <= cfg.dtheta_max);
            }
        }
    }

    #[test]
    fn merge_demo_crash_rate_low() {
        let cfg = ScenarioConfig::default_for(MapKind::Merge, 3);
        let batch = generate_demonstrations(&cfg, 50, 0).unwrap();
        let crashes = batch.crashed.iter().filter(|&&c| c).count();
        let rate = crashes as f64 / 50.0;
        assert!(rate <= 0.05, "demo crash rate {rate} on merge");
    }
}
