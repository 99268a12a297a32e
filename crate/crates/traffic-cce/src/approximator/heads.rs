use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::game_core::{Action, Observation};

use super::net::{Mlp, NetSpec};

/// Action-space box used by both policy heads.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionBounds {
    pub a_min: f64,
    pub a_max: f64,
    pub dtheta_max: f64,
}

impl ActionBounds {
    pub fn clamp(&self, a: Action) -> Action {
        a.clamped(self.a_min, self.a_max, self.dtheta_max)
    }

    fn centers_halves(&self) -> ([f64; 2], [f64; 2]) {
        let c0 = 0.5 * (self.a_min + self.a_max);
        let h0 = 0.5 * (self.a_max - self.a_min);
        ([c0, 0.0], [h0, self.dtheta_max])
    }
}

/// Anything that can sample bounded 2-D actions with log-densities.
pub trait StochasticPolicy {
    /// Draws an action and its pre-clamp log-density, then clamps.
    fn sample(&self, obs: &Observation, rng: &mut ChaCha8Rng) -> (Action, f64);

    /// Log-density of the given action under the head's distribution.
    fn log_prob(&self, obs: &Observation, action: &Action) -> f64;

    /// Differential entropy at this observation.
    fn entropy(&self, obs: &Observation, rng: &mut ChaCha8Rng) -> f64;
}

/// Monte Carlo KL estimate `E_{a ~ pi}[log pi(a|o) - log pi_ref(a|o)]`,
/// averaged over an observation batch. Nonnegative in expectation.
pub fn kl_mc<P: StochasticPolicy + ?Sized, Q: StochasticPolicy + ?Sized>(
    pi: &P,
    pi_ref: &Q,
    obs_batch: &[&Observation],
    n_samples: usize,
    rng: &mut ChaCha8Rng,
) -> f64 {
    assert!(!obs_batch.is_empty() && n_samples >= 1);
    let mut total = 0.0;
    for obs in obs_batch {
        let mut per_obs = 0.0;
        for _ in 0..n_samples {
            // Both densities are evaluated at the action actually taken
            // (post-clamp), so identical heads give exactly zero.
            let (a, _) = pi.sample(obs, rng);
            per_obs += pi.log_prob(obs, &a) - pi_ref.log_prob(obs, &a);
        }
        total += per_obs / n_samples as f64;
    }
    total / obs_batch.len() as f64
}

const LOG_STD_MIN: f64 = -4.0;
const LOG_STD_MAX: f64 = 1.0;

/// Diagonal Gaussian policy: an MLP trunk produces the raw 2-D mean,
/// squashed into the action box by tanh; log standard deviations are free
/// per-dimension parameters projected into `[-4, 1]` at every update.
#[derive(Debug, Clone)]
pub struct GaussianPolicy {
    pub trunk: Mlp,
    pub log_std: [f64; 2],
    pub bounds: ActionBounds,
}

impl GaussianPolicy {
    pub fn new(input_dim: usize, hidden: &[usize], bounds: ActionBounds, seed: u64) -> Self {
        Self {
            trunk: Mlp::new(NetSpec::new(input_dim, hidden, 2, seed)),
            log_std: [-0.5, -0.5],
            bounds,
        }
    }

    /// Bounded mean for the given observation.
    pub fn mean(&self, obs: &Observation) -> [f64; 2] {
        let raw = self
            .trunk
            .forward(&obs.scaled_values())
            .expect("policy trunk forward");
        self.squash(&raw)
    }

    fn squash(&self, raw: &[f64]) -> [f64; 2] {
        let (centers, halves) = self.bounds.centers_halves();
        [
            centers[0] + halves[0] * raw[0].tanh(),
            centers[1] + halves[1] * raw[1].tanh(),
        ]
    }

    pub fn std(&self) -> [f64; 2] {
        [self.log_std[0].exp(), self.log_std[1].exp()]
    }

    /// Closed-form entropy: `sum_d (0.5 ln(2 pi e) + log_std_d)`.
    pub fn entropy_closed_form(&self) -> f64 {
        self.log_std
            .iter()
            .map(|ls| 0.5 * (2.0 * PI * std::f64::consts::E).ln() + ls)
            .sum()
    }

    fn gauss_logp(mean: &[f64; 2], log_std: &[f64; 2], a: &[f64; 2]) -> f64 {
        let mut lp = 0.0;
        for d in 0..2 {
            let std = log_std[d].exp();
            let z = (a[d] - mean[d]) / std;
            lp += -0.5 * (2.0 * PI).ln() - log_std[d] - 0.5 * z * z;
        }
        lp
    }

    /// Total number of learnable parameters (trunk plus two log-stds).
    pub fn n_params(&self) -> usize {
        self.trunk.n_params() + 2
    }

    pub fn flat_params(&self) -> Vec<f64> {
        let mut p = self.trunk.params().to_vec();
        p.extend_from_slice(&self.log_std);
        p
    }

    pub fn set_flat_params(&mut self, p: &[f64]) {
        let n = self.trunk.n_params();
        self.trunk.set_params(&p[..n]).expect("trunk params");
        self.log_std = [p[n], p[n + 1]];
    }

    /// Projects log-stds into their bounds after an optimizer step.
    pub fn project(&mut self) {
        for ls in self.log_std.iter_mut() {
            *ls = ls.clamp(LOG_STD_MIN, LOG_STD_MAX);
        }
    }

    /// Log-density of `action` and its gradient, accumulated into `acc`
    /// (layout: trunk params then the two log-stds) with weight `weight`.
    pub fn accumulate_logp_grad(
        &self,
        obs: &Observation,
        action: &Action,
        weight: f64,
        acc: &mut [f64],
    ) -> f64 {
        debug_assert_eq!(acc.len(), self.n_params());
        let scaled = obs.scaled_values();
        let cache = self
            .trunk
            .forward_cached(&scaled)
            .expect("policy trunk forward");
        let raw = cache.output().to_vec();
        let mean = self.squash(&raw);
        let a = action.as_array();
        let logp = Self::gauss_logp(&mean, &self.log_std, &a);

        let (_, halves) = self.bounds.centers_halves();
        let mut dmean = [0.0; 2];
        let n = self.trunk.n_params();
        for d in 0..2 {
            let var = (2.0 * self.log_std[d]).exp();
            let diff = a[d] - mean[d];
            dmean[d] = diff / var;
            // d logp / d log_std = z^2 - 1.
            acc[n + d] += weight * (diff * diff / var - 1.0);
        }
        let dout: Vec<f64> = (0..2)
            .map(|d| {
                let t = raw[d].tanh();
                dmean[d] * halves[d] * (1.0 - t * t)
            })
            .collect();
        self.trunk
            .backward_acc(&cache, &dout, weight, &mut acc[..n])
            .expect("policy trunk backward");
        logp
    }

    /// Entropy and its gradient (only the log-std slots are nonzero).
    pub fn accumulate_entropy_grad(&self, weight: f64, acc: &mut [f64]) -> f64 {
        let n = self.trunk.n_params();
        acc[n] += weight;
        acc[n + 1] += weight;
        self.entropy_closed_form()
    }
}

impl StochasticPolicy for GaussianPolicy {
    fn sample(&self, obs: &Observation, rng: &mut ChaCha8Rng) -> (Action, f64) {
        let mean = self.mean(obs);
        let std = self.std();
        let mut a = [0.0; 2];
        for d in 0..2 {
            let z = standard_normal(rng);
            a[d] = mean[d] + std[d] * z;
        }
        let logp = Self::gauss_logp(&mean, &self.log_std, &a);
        let action = self.bounds.clamp(Action::new(a[0], a[1]));
        (action, logp)
    }

    fn log_prob(&self, obs: &Observation, action: &Action) -> f64 {
        let mean = self.mean(obs);
        Self::gauss_logp(&mean, &self.log_std, &action.as_array())
    }

    fn entropy(&self, _obs: &Observation, _rng: &mut ChaCha8Rng) -> f64 {
        self.entropy_closed_form()
    }
}

/// Box-Muller standard normal draw from a seeded stream.
pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        let z = (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos();
        if z.is_finite() {
            return z;
        }
    }
}

/// Per-observation output of the mixture head.
#[derive(Debug, Clone)]
pub struct MixtureParams {
    /// Softmax component weights, summing to 1.
    pub weights: Vec<f64>,
    /// Per-component 2-D action locations.
    pub means: Vec<[f64; 2]>,
    /// Per-component 2-D Laplace scales, >= the scale floor.
    pub scales: Vec<[f64; 2]>,
}

impl MixtureParams {
    /// Component indices ranked by descending weight.
    pub fn ranked_components(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.weights.len()).collect();
        idx.sort_by(|&a, &b| {
            self.weights[b]
                .partial_cmp(&self.weights[a])
                .unwrap()
                .then(a.cmp(&b))
        });
        idx
    }
}

const SCALE_FLOOR: f64 = 1e-4;

/// Mixture-of-Laplace policy head: the anchor model. An MLP trunk maps the
/// observation to K weight logits, K 2-D locations, and K 2-D raw scales
/// (softplus plus a floor).
#[derive(Debug, Clone)]
pub struct LaplaceMixturePolicy {
    pub trunk: Mlp,
    pub n_components: usize,
    pub bounds: ActionBounds,
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        (1.0 + x.exp()).ln()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

impl LaplaceMixturePolicy {
    pub fn new(
        input_dim: usize,
        hidden: &[usize],
        n_components: usize,
        bounds: ActionBounds,
        seed: u64,
    ) -> Self {
        assert!(n_components >= 1);
        Self {
            trunk: Mlp::new(NetSpec::new(input_dim, hidden, 5 * n_components, seed)),
            n_components,
            bounds,
        }
    }

    /// Raw trunk output order: K weight logits, then K x 2 means, then
    /// K x 2 raw scales.
    pub fn mixture_params(&self, obs: &Observation) -> MixtureParams {
        let raw = self
            .trunk
            .forward(&obs.scaled_values())
            .expect("mixture trunk forward");
        self.params_from_raw(&raw)
    }

    fn params_from_raw(&self, raw: &[f64]) -> MixtureParams {
        let k = self.n_components;
        let logits = &raw[..k];
        let lse = log_sum_exp(logits);
        let weights: Vec<f64> = logits.iter().map(|l| (l - lse).exp()).collect();
        let means: Vec<[f64; 2]> = (0..k).map(|i| [raw[k + 2 * i], raw[k + 2 * i + 1]]).collect();
        let scales: Vec<[f64; 2]> = (0..k)
            .map(|i| {
                [
                    softplus(raw[3 * k + 2 * i]) + SCALE_FLOOR,
                    softplus(raw[3 * k + 2 * i + 1]) + SCALE_FLOOR,
                ]
            })
            .collect();
        MixtureParams {
            weights,
            means,
            scales,
        }
    }

    /// Mixture log-density via log-sum-exp over per-component Laplace
    /// log-densities.
    pub fn mixture_log_prob(params: &MixtureParams, a: &[f64; 2]) -> f64 {
        let comps: Vec<f64> = params
            .weights
            .iter()
            .zip(params.means.iter().zip(params.scales.iter()))
            .map(|(w, (mu, b))| {
                let mut lp = w.max(1e-300).ln();
                for d in 0..2 {
                    lp += -(2.0 * b[d]).ln() - (a[d] - mu[d]).abs() / b[d];
                }
                lp
            })
            .collect();
        log_sum_exp(&comps)
    }

    /// Negative log-likelihood plus weight-classification loss for one
    /// demonstration action; the gradient is accumulated into `acc`.
    ///
    /// The classification term is the cross-entropy of the mixture weights
    /// against the component whose density best matches the action; with a
    /// single component it is exactly zero.
    pub fn accumulate_imitation_grad(
        &self,
        obs: &Observation,
        action: &Action,
        weight: f64,
        acc: &mut [f64],
    ) -> f64 {
        let k = self.n_components;
        let scaled = obs.scaled_values();
        let cache = self
            .trunk
            .forward_cached(&scaled)
            .expect("mixture trunk forward");
        let raw = cache.output().to_vec();
        let params = self.params_from_raw(&raw);
        let a = action.as_array();

        // Per-component joint log terms l_k = ln w_k + ln p_k(a).
        let mut comp_lp = vec![0.0; k];
        let mut dens_lp = vec![0.0; k];
        for i in 0..k {
            let mut lp = 0.0;
            for d in 0..2 {
                let b = params.scales[i][d];
                lp += -(2.0 * b).ln() - (a[d] - params.means[i][d]).abs() / b;
            }
            dens_lp[i] = lp;
            comp_lp[i] = params.weights[i].max(1e-300).ln() + lp;
        }
        let logp = log_sum_exp(&comp_lp);
        let gamma: Vec<f64> = comp_lp.iter().map(|l| (l - logp).exp()).collect();

        // Best-matching component by unweighted density.
        let k_star = (0..k)
            .max_by(|&i, &j| dens_lp[i].partial_cmp(&dens_lp[j]).unwrap())
            .unwrap();
        let cls_loss = if k > 1 {
            -params.weights[k_star].max(1e-300).ln()
        } else {
            0.0
        };
        let nll = -logp;

        // Gradient of (nll + cls_loss) with respect to the raw outputs.
        let mut dout = vec![0.0; 5 * k];
        for i in 0..k {
            // d(-logp)/d logit_i = w_i - gamma_i; classification adds
            // w_i - [i == k_star].
            dout[i] = (params.weights[i] - gamma[i])
                + if k > 1 {
                    params.weights[i] - if i == k_star { 1.0 } else { 0.0 }
                } else {
                    0.0
                };
            for d in 0..2 {
                let b = params.scales[i][d];
                let diff = a[d] - params.means[i][d];
                // d(-logp)/d mu = -gamma * sign(diff)/b.
                dout[k + 2 * i + d] = -gamma[i] * diff.signum() / b;
                // d(-logp)/d b = -gamma * (-1/b + |diff|/b^2), chained
                // through softplus.
                let db = -gamma[i] * (-1.0 / b + diff.abs() / (b * b));
                dout[3 * k + 2 * i + d] = db * sigmoid(raw[3 * k + 2 * i + d]);
            }
        }
        self.trunk
            .backward_acc(&cache, &dout, weight, acc)
            .expect("mixture trunk backward");
        nll + cls_loss
    }
}

impl StochasticPolicy for LaplaceMixturePolicy {
    fn sample(&self, obs: &Observation, rng: &mut ChaCha8Rng) -> (Action, f64) {
        let params = self.mixture_params(obs);
        // Component choice by cumulative weight.
        let u: f64 = rng.gen_range(0.0..1.0);
        let mut cum = 0.0;
        let mut comp = params.weights.len() - 1;
        for (i, w) in params.weights.iter().enumerate() {
            cum += w;
            if u < cum {
                comp = i;
                break;
            }
        }
        let mut a = [0.0; 2];
        for d in 0..2 {
            // Inverse-CDF Laplace draw.
            let v: f64 = rng.gen_range(-0.5..0.5);
            a[d] = params.means[comp][d]
                - params.scales[comp][d] * v.signum() * (1.0 - 2.0 * v.abs()).ln();
        }
        let logp = Self::mixture_log_prob(&params, &a);
        let action = self.bounds.clamp(Action::new(a[0], a[1]));
        (action, logp)
    }

    fn log_prob(&self, obs: &Observation, action: &Action) -> f64 {
        let params = self.mixture_params(obs);
        Self::mixture_log_prob(&params, &action.as_array())
    }

    fn entropy(&self, obs: &Observation, rng: &mut ChaCha8Rng) -> f64 {
        // Monte Carlo estimate with 64 draws.
        let params = self.mixture_params(obs);
        let mut total = 0.0;
        for _ in 0..64 {
            let u: f64 = rng.gen_range(0.0..1.0);
            let mut cum = 0.0;
            let mut comp = params.weights.len() - 1;
            for (i, w) in params.weights.iter().enumerate() {
                cum += w;
                if u < cum {
                    comp = i;
                    break;
                }
            }
            let mut a = [0.0; 2];
            for d in 0..2 {
                let v: f64 = rng.gen_range(-0.5..0.5);
                a[d] = params.means[comp][d]
                    - params.scales[comp][d] * v.signum() * (1.0 - 2.0 * v.abs()).ln();
            }
            total += Self::mixture_log_prob(&params, &a);
        }
        -total / 64.0
    }
}
