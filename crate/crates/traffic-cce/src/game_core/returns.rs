use thiserror::Error;

use super::types::Trajectory;

#[derive(Debug, Error)]
pub enum ReturnError {
    #[error("empty trajectory set")]
    EmptySet,
    #[error("non-finite value in {channel:?} channel of trajectory {index}")]
    NonFinite { channel: Channel, index: usize },
}

/// Which recorded scalar stream of a trajectory to aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Reward,
    Cost,
}

/// Discounted sum `sum_t gamma^t r_t`. An empty sequence returns 0.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&gamma));
    let mut acc = 0.0;
    for &r in rewards.iter().rev() {
        acc = r + gamma * acc;
    }
    acc
}

/// Monte Carlo value estimate: mean discounted return over a trajectory
/// set on the chosen channel. Mixed horizons are allowed.
pub fn mc_value_estimate(
    trajectories: &[Trajectory],
    gamma: f64,
    channel: Channel,
) -> Result<f64, ReturnError> {
    if trajectories.is_empty() {
        return Err(ReturnError::EmptySet);
    }
    let mut total = 0.0;
    for (i, traj) in trajectories.iter().enumerate() {
        let seq = match channel {
            Channel::Reward => traj.rewards(),
            Channel::Cost => traj.costs(),
        };
        if seq.iter().any(|v| !v.is_finite()) {
            return Err(ReturnError::NonFinite { channel, index: i });
        }
        total += discounted_return(&seq, gamma);
    }
    Ok(total / trajectories.len() as f64)
}

/// Scalarizes a reward value and a cost value with multiplier `lambda`:
/// `v_reward - lambda * v_cost`. Cost enters as a penalty; the additive
/// form with a signed cost channel is recovered by negating costs.
pub fn penalized_value(v_reward: f64, v_cost: f64, lambda: f64) -> f64 {
    debug_assert!(lambda >= 0.0);
    v_reward - lambda * v_cost
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game_core::types::{Action, Observation, ObservationLayout, TrajStep};
    use std::sync::Arc;

    fn layout() -> Arc<ObservationLayout> {
        Arc::new(ObservationLayout {
            slot_names: vec!["x".into()],
            slot_scales: vec![1.0],
            history_frames: 1,
        })
    }

    fn traj_with(rewards: &[f64], costs: &[f64]) -> Trajectory {
        let mut t = Trajectory::new(0, rewards.len());
        for (i, &r) in rewards.iter().enumerate() {
            t.steps.push(TrajStep {
                observation: Observation::new(vec![0.0], layout()),
                action: Action::default(),
                log_prob: 0.0,
                reward: r,
                cost: costs[i],
            });
        }
        t
    }

    #[test]
    fn discounted_return_zero_rewards() {
        assert_eq!(discounted_return(&[0.0, 0.0, 0.0], 0.9), 0.0);
    }

    #[test]
    fn discounted_return_half_gamma() {
        // 1 + 0.5 + 0.25 = 1.75.
        assert!((discounted_return(&[1.0, 1.0, 1.0], 0.5) - 1.75).abs() < 1e-15);
    }

    #[test]
    fn discounted_return_single_step() {
        assert_eq!(discounted_return(&[2.0], 0.0), 2.0);
    }

    #[test]
    fn discounted_return_empty_is_zero() {
        assert_eq!(discounted_return(&[], 0.9), 0.0);
    }

    #[test]
    fn discounted_return_matches_direct_summation() {
        // Independent oracle: explicit power summation.
        let rewards = [0.3, -1.2, 2.5, 0.0, 4.1];
        let gamma = 0.87f64;
        let direct: f64 = rewards
            .iter()
            .enumerate()
            .map(|(t, r)| gamma.powi(t as i32) * r)
            .sum();
        assert!((discounted_return(&rewards, gamma) - direct).abs() < 1e-12);
    }

    #[test]
    fn mc_value_mean_of_two() {
        let t1 = traj_with(&[1.0], &[0.0]);
        let t2 = traj_with(&[3.0], &[0.0]);
        let v = mc_value_estimate(&[t1, t2], 1.0, Channel::Reward).unwrap();
        assert_eq!(v, 2.0);
    }

    #[test]
    fn mc_value_single_trajectory_gamma_one() {
        let t = traj_with(&[1.0, 1.0], &[0.0, 0.0]);
        let v = mc_value_estimate(&[t], 1.0, Channel::Reward).unwrap();
        assert_eq!(v, 2.0);
    }

    #[test]
    fn mc_value_cost_channel() {
        let t = traj_with(&[5.0, 5.0], &[1.0, 1.0]);
        let v = mc_value_estimate(&[t], 0.5, Channel::Cost).unwrap();
        assert_eq!(v, 1.5);
    }

    #[test]
    fn mc_value_rejects_empty() {
        assert!(matches!(
            mc_value_estimate(&[], 0.9, Channel::Reward),
            Err(ReturnError::EmptySet)
        ));
    }

    #[test]
    fn mc_value_rejects_nan() {
        let t = traj_with(&[1.0, f64::NAN], &[0.0, 0.0]);
        assert!(mc_value_estimate(&[t], 0.9, Channel::Reward).is_err());
    }

    #[test]
    fn mc_value_one_state_mdp_within_three_se() {
        // 1-state MDP: reward each step is +1 w.p. p, else 0, horizon T.
        // Analytic value: p * sum_t gamma^t. Sampled with a deterministic
        // LCG so the test is reproducible.
        let (p, gamma, horizon, n) = (0.35f64, 0.9f64, 20usize, 100usize);
        let analytic: f64 = p * (0..horizon).map(|t| gamma.powi(t as i32)).sum::<f64>();
        let mut state = 0x12345678u64;
        let mut lcg = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 33) as f64 / (1u64 << 31) as f64
        };
        let trajs: Vec<Trajectory> = (0..n)
            .map(|_| {
                let rewards: Vec<f64> = (0..horizon)
                    .map(|_| if lcg() < p { 1.0 } else { 0.0 })
                    .collect();
                traj_with(&rewards, &vec![0.0; horizon])
            })
            .collect();
        let est = mc_value_estimate(&trajs, gamma, Channel::Reward).unwrap();
        // Per-step variance p(1-p); discounted-return variance is
        // p(1-p) * sum_t gamma^(2t).
        let var: f64 = p * (1.0 - p) * (0..horizon).map(|t| gamma.powi(2 * t as i32)).sum::<f64>();
        let se = (var / n as f64).sqrt();
        assert!(
            (est - analytic).abs() <= 3.0 * se,
            "est {est} vs analytic {analytic} (3se {})",
            3.0 * se
        );
    }

    #[test]
    fn penalized_value_cases() {
        assert_eq!(penalized_value(5.0, 0.0, 3.0), 5.0);
        assert_eq!(penalized_value(5.0, 1.0, 0.0), 5.0);
        assert_eq!(penalized_value(5.0, 2.0, 1.5), 2.0);
    }
}

#[cfg(test)]
mod prop_tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn discounted_return_linear(
            r1 in proptest::collection::vec(-10.0f64..10.0, 1..20),
            scale in -5.0f64..5.0,
            shift in -5.0f64..5.0,
            gamma in 0.0f64..1.0,
        ) {
            let r2: Vec<f64> = r1.iter().map(|x| x * 0.5 + 1.0).collect();
            let combo: Vec<f64> = r1
                .iter()
                .zip(&r2)
                .map(|(a, b)| scale * a + shift * b)
                .collect();
            let lhs = discounted_return(&combo, gamma);
            let rhs = scale * discounted_return(&r1, gamma) + shift * discounted_return(&r2, gamma);
            prop_assert!((lhs - rhs).abs() < 1e-9);
        }

        #[test]
        fn mc_value_of_copies_equals_single(
            rewards in proptest::collection::vec(-10.0f64..10.0, 1..15),
            copies in 1usize..6,
            gamma in 0.0f64..1.0,
        ) {
            use crate::game_core::types::{Action, Observation, ObservationLayout, TrajStep, Trajectory};
            use std::sync::Arc;
            let layout = Arc::new(ObservationLayout {
                slot_names: vec!["x".into()],
                slot_scales: vec![1.0],
                history_frames: 1,
            });
            let mut t = Trajectory::new(0, rewards.len());
            for &r in &rewards {
                t.steps.push(TrajStep {
                    observation: Observation::new(vec![0.0], layout.clone()),
                    action: Action::default(),
                    log_prob: 0.0,
                    reward: r,
                    cost: 0.0,
                });
            }
            let single = discounted_return(&rewards, gamma);
            let set: Vec<Trajectory> = (0..copies).map(|_| t.clone()).collect();
            let est = mc_value_estimate(&set, gamma, Channel::Reward).unwrap();
            prop_assert!((est - single).abs() < 1e-12);
        }
    }
}
