use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
#[error("hyperparameter `{field}` out of bounds: {reason} (got {value})")]
pub struct HyperparamsError {
    pub field: &'static str,
    pub reason: &'static str,
    pub value: f64,
}

/// Every tunable knob of the solver in one record.
///
/// `entropy_eta` is derived, not stored: it is always exactly
/// `(1 + eta1 * eta2) / eta2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    /// Discount factor, in (0, 1].
    pub gamma: f64,
    /// GAE decay, in [0, 1].
    pub gae_lambda: f64,
    /// PPO clip radius, > 0.
    pub clip: f64,
    /// Anchor-KL weight, >= 0.
    pub eta1: f64,
    /// Proximal-KL weight, > 0 (1/eta2 multiplies the previous-iterate term).
    pub eta2: f64,
    /// Exploration bonus scale, >= 0.
    pub bonus_scale: f64,
    /// CVaR confidence, in (0, 1]; 1 recovers the mean.
    pub alpha: f64,
    /// Episodic discounted-cost threshold, >= 0.
    pub epsilon_cost: f64,
    /// Quantile Huber width, > 0.
    pub kappa: f64,
    /// Number of cost quantiles, >= 1.
    pub n_quantiles: usize,
    /// Laplace mixture components in the anchor, >= 1.
    pub mixture_components: usize,
    /// Candidate actions for the restricted best response, >= 1.
    pub candidate_actions: usize,
    /// Rollout episodes per solver iteration.
    pub rollout_rounds: usize,
    /// Update epochs per solver iteration.
    pub update_rounds: usize,
    /// Minibatch size for policy/critic updates.
    pub minibatch: usize,
    /// Value-loss weight in the combined update loss.
    pub lambda1: f64,
    /// Entropy weight in the combined update loss.
    pub lambda2: f64,
    pub lr_policy: f64,
    pub lr_critic: f64,
    pub lr_lagrange: f64,
    /// Fidelity gate threshold xi, >= 0.
    pub fidelity_threshold: f64,
    /// Constraint distance, meters, > 0.
    pub d_thresh: f64,
    /// Exploration bonus cap, >= 0.
    pub beta_max: f64,
    /// Stacked observation history frames, >= 1.
    pub history_frames: usize,
    /// Hidden layer widths of all function approximators.
    pub hidden: Vec<usize>,
    /// Anchor imitation training epochs.
    pub anchor_epochs: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            gae_lambda: 0.95,
            clip: 0.2,
            eta1: 1.0,
            eta2: 10.0,
            bonus_scale: 1e-4,
            alpha: 1.0,
            epsilon_cost: 1.0,
            kappa: 1.0,
            n_quantiles: 32,
            mixture_components: 4,
            candidate_actions: 4,
            rollout_rounds: 16,
            update_rounds: 10,
            minibatch: 256,
            lambda1: 0.5,
            lambda2: 0.01,
            lr_policy: 3e-4,
            lr_critic: 1e-3,
            lr_lagrange: 0.01,
            fidelity_threshold: 0.5,
            d_thresh: 4.0,
            beta_max: 10.0,
            history_frames: 3,
            hidden: vec![64, 64],
            anchor_epochs: 40,
        }
    }
}

impl Hyperparams {
    /// Combined entropy coefficient `(1 + eta1 * eta2) / eta2`.
    pub fn entropy_eta(&self) -> f64 {
        (1.0 + self.eta1 * self.eta2) / self.eta2
    }

    /// Checks every bound; the first violation is reported by field name.
    pub fn validate(&self) -> Result<(), HyperparamsError> {
        fn err(field: &'static str, reason: &'static str, value: f64) -> HyperparamsError {
            HyperparamsError {
                field,
                reason,
                value,
            }
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(err("gamma", "must be in (0, 1]", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err(err("gae_lambda", "must be in [0, 1]", self.gae_lambda));
        }
        if !(self.clip > 0.0) {
            return Err(err("clip", "must be > 0", self.clip));
        }
        if !(self.eta1 >= 0.0) {
            return Err(err("eta1", "must be >= 0", self.eta1));
        }
        if !(self.eta2 > 0.0) {
            return Err(err("eta2", "must be > 0", self.eta2));
        }
        if !(self.bonus_scale >= 0.0) {
            return Err(err("bonus_scale", "must be >= 0", self.bonus_scale));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(err("alpha", "must be in (0, 1]", self.alpha));
        }
        if !(self.epsilon_cost >= 0.0) {
            return Err(err("epsilon_cost", "must be >= 0", self.epsilon_cost));
        }
        if !(self.kappa > 0.0) {
            return Err(err("kappa", "must be > 0", self.kappa));
        }
        if self.n_quantiles < 1 {
            return Err(err("n_quantiles", "must be >= 1", self.n_quantiles as f64));
        }
        if self.mixture_components < 1 {
            return Err(err(
                "mixture_components",
                "must be >= 1",
                self.mixture_components as f64,
            ));
        }
        if self.candidate_actions < 1 {
            return Err(err(
                "candidate_actions",
                "must be >= 1",
                self.candidate_actions as f64,
            ));
        }
        if self.rollout_rounds < 1 {
            return Err(err(
                "rollout_rounds",
                "must be >= 1",
                self.rollout_rounds as f64,
            ));
        }
        if self.update_rounds < 1 {
            return Err(err(
                "update_rounds",
                "must be >= 1",
                self.update_rounds as f64,
            ));
        }
        if self.minibatch < 1 {
            return Err(err("minibatch", "must be >= 1", self.minibatch as f64));
        }
        if !(self.lambda1 >= 0.0) {
            return Err(err("lambda1", "must be >= 0", self.lambda1));
        }
        if !(self.lambda2 >= 0.0) {
            return Err(err("lambda2", "must be >= 0", self.lambda2));
        }
        if !(self.lr_policy > 0.0) {
            return Err(err("lr_policy", "must be > 0", self.lr_policy));
        }
        if !(self.lr_critic > 0.0) {
            return Err(err("lr_critic", "must be > 0", self.lr_critic));
        }
        if !(self.lr_lagrange > 0.0) {
            return Err(err("lr_lagrange", "must be > 0", self.lr_lagrange));
        }
        if !(self.fidelity_threshold >= 0.0) {
            return Err(err(
                "fidelity_threshold",
                "must be >= 0",
                self.fidelity_threshold,
            ));
        }
        if !(self.d_thresh > 0.0) {
            return Err(err("d_thresh", "must be > 0", self.d_thresh));
        }
        if !(self.beta_max >= 0.0) {
            return Err(err("beta_max", "must be >= 0", self.beta_max));
        }
        if self.history_frames < 1 {
            return Err(err(
                "history_frames",
                "must be >= 1",
                self.history_frames as f64,
            ));
        }
        if self.hidden.is_empty() || self.hidden.iter().any(|&w| w == 0) {
            return Err(err("hidden", "layer widths must be >= 1", 0.0));
        }
        if self.anchor_epochs < 1 {
            return Err(err(
                "anchor_epochs",
                "must be >= 1",
                self.anchor_epochs as f64,
            ));
        }
        Ok(())
    }

    /// Validating constructor from an already-populated record.
    pub fn validated(self) -> Result<Self, HyperparamsError> {
        self.validate()?;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        Hyperparams::default().validate().unwrap();
    }

    #[test]
    fn entropy_eta_matches_formula() {
        let mut h = Hyperparams::default();
        for (e1, e2) in [(0.0, 1.0), (0.5, 2.0), (10.0, 0.1), (1.0, 10.0)] {
            h.eta1 = e1;
            h.eta2 = e2;
            let expect = (1.0 + e1 * e2) / e2;
            assert!((h.entropy_eta() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_gamma() {
        let mut h = Hyperparams::default();
        h.gamma = -0.5;
        let e = h.validate().unwrap_err();
        assert_eq!(e.field, "gamma");
        assert!(e.to_string().contains("gamma"));
    }

    #[test]
    fn rejects_every_out_of_bound_field() {
        let cases: Vec<(&str, Box<dyn Fn(&mut Hyperparams)>)> = vec![
            ("gamma", Box::new(|h| h.gamma = 0.0)),
            ("gamma", Box::new(|h| h.gamma = 1.5)),
            ("gae_lambda", Box::new(|h| h.gae_lambda = -0.1)),
            ("clip", Box::new(|h| h.clip = 0.0)),
            ("eta1", Box::new(|h| h.eta1 = -1.0)),
            ("eta2", Box::new(|h| h.eta2 = 0.0)),
            ("bonus_scale", Box::new(|h| h.bonus_scale = -1.0)),
            ("alpha", Box::new(|h| h.alpha = 0.0)),
            ("alpha", Box::new(|h| h.alpha = 1.1)),
            ("epsilon_cost", Box::new(|h| h.epsilon_cost = -0.1)),
            ("kappa", Box::new(|h| h.kappa = 0.0)),
            ("n_quantiles", Box::new(|h| h.n_quantiles = 0)),
            ("mixture_components", Box::new(|h| h.mixture_components = 0)),
            ("candidate_actions", Box::new(|h| h.candidate_actions = 0)),
            ("rollout_rounds", Box::new(|h| h.rollout_rounds = 0)),
            ("update_rounds", Box::new(|h| h.update_rounds = 0)),
            ("minibatch", Box::new(|h| h.minibatch = 0)),
            ("lambda1", Box::new(|h| h.lambda1 = -1.0)),
            ("lambda2", Box::new(|h| h.lambda2 = -1.0)),
            ("lr_policy", Box::new(|h| h.lr_policy = 0.0)),
            ("lr_critic", Box::new(|h| h.lr_critic = 0.0)),
            ("lr_lagrange", Box::new(|h| h.lr_lagrange = 0.0)),
            (
                "fidelity_threshold",
                Box::new(|h| h.fidelity_threshold = -1.0),
            ),
            ("d_thresh", Box::new(|h| h.d_thresh = 0.0)),
            ("beta_max", Box::new(|h| h.beta_max = -1.0)),
            ("history_frames", Box::new(|h| h.history_frames = 0)),
            ("hidden", Box::new(|h| h.hidden = vec![])),
            ("anchor_epochs", Box::new(|h| h.anchor_epochs = 0)),
        ];
        for (field, mutate) in cases {
            let mut h = Hyperparams::default();
            mutate(&mut h);
            let e = h.validate().expect_err(field);
            assert_eq!(e.field, field, "wrong field reported for {field}");
        }
    }

    #[test]
    fn nan_fields_rejected() {
        let mut h = Hyperparams::default();
        h.eta2 = f64::NAN;
        assert!(h.validate().is_err());
    }
}
