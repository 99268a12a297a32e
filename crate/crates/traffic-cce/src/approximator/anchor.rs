use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::game_core::{Hyperparams, Trajectory};

use super::heads::{ActionBounds, LaplaceMixturePolicy};
use super::net::Adam;

#[derive(Debug, Error)]
pub enum AnchorError {
    #[error("no demonstration steps to fit")]
    EmptyDemos,
    #[error("anchor training diverged at epoch {epoch}: loss {loss}")]
    Diverged { epoch: usize, loss: f64 },
}

/// Training record returned alongside the fitted anchor.
#[derive(Debug, Clone)]
pub struct AnchorReport {
    /// Mean train loss (NLL + classification) per epoch.
    pub train_loss: Vec<f64>,
    /// Mean held-out log-likelihood per epoch.
    pub holdout_ll: Vec<f64>,
    pub final_loss: f64,
}

/// Fits the Laplace-mixture anchor policy to demonstration actions.
///
/// The loss is the negative log-likelihood of each action under the
/// mixture plus a cross-entropy term pushing the weight of the
/// best-matching component up. The last tenth of the demo steps is held
/// out for the log-likelihood curve.
pub fn train_anchor(
    demos: &[Trajectory],
    bounds: ActionBounds,
    hyper: &Hyperparams,
    seed: u64,
) -> Result<(LaplaceMixturePolicy, AnchorReport), AnchorError> {
    let steps: Vec<(&Trajectory, usize)> = demos
        .iter()
        .flat_map(|t| (0..t.len()).map(move |i| (t, i)))
        .collect();
    if steps.is_empty() {
        return Err(AnchorError::EmptyDemos);
    }
    let input_dim = steps[0].0.steps[0].observation.len();
    let n_holdout = (steps.len() / 10).max(1).min(steps.len() - 1);
    let (train, holdout) = steps.split_at(steps.len() - n_holdout);

    let mut policy = LaplaceMixturePolicy::new(
        input_dim,
        &hyper.hidden,
        hyper.mixture_components,
        bounds,
        seed,
    );
    let mut adam = Adam::new(hyper.lr_critic, policy.trunk.n_params());
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x414e4348);

    let batch = hyper.minibatch.min(train.len());
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut report = AnchorReport {
        train_loss: Vec::new(),
        holdout_ll: Vec::new(),
        final_loss: f64::NAN,
    };

    for epoch in 0..hyper.anchor_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut epoch_count = 0usize;
        for chunk in order.chunks(batch) {
            let mut grad = vec![0.0; policy.trunk.n_params()];
            let mut chunk_loss = 0.0;
            let w = 1.0 / chunk.len() as f64;
            for &i in chunk {
                let (traj, s) = train[i];
                let step = &traj.steps[s];
                chunk_loss +=
                    policy.accumulate_imitation_grad(&step.observation, &step.action, w, &mut grad);
            }
            chunk_loss /= chunk.len() as f64;
            if !chunk_loss.is_finite() {
                return Err(AnchorError::Diverged {
                    epoch,
                    loss: chunk_loss,
                });
            }
            let mut params = policy.trunk.params().to_vec();
            adam.step(&mut params, &grad);
            policy.trunk.set_params(&params).expect("param shape");
            epoch_loss += chunk_loss * chunk.len() as f64;
            epoch_count += chunk.len();
        }
        report.train_loss.push(epoch_loss / epoch_count as f64);

        let mut ll = 0.0;
        for &(traj, s) in holdout {
            let step = &traj.steps[s];
            let params = policy.mixture_params(&step.observation);
            ll += LaplaceMixturePolicy::mixture_log_prob(&params, &step.action.as_array());
        }
        report.holdout_ll.push(ll / holdout.len() as f64);
    }
    report.final_loss = *report.train_loss.last().unwrap();
    Ok((policy, report))
}
