use crate::game_core::Observation;

use super::net::{Mlp, NetSpec};

/// Scalar state-value head over observations.
#[derive(Debug, Clone)]
pub struct ValueCritic {
    pub net: Mlp,
}

impl ValueCritic {
    pub fn new(input_dim: usize, hidden: &[usize], seed: u64) -> Self {
        Self {
            net: Mlp::new(NetSpec::new(input_dim, hidden, 1, seed)),
        }
    }

    pub fn value(&self, obs: &Observation) -> f64 {
        self.net.forward(&obs.scaled_values()).expect("value forward")[0]
    }
}

/// N-quantile head approximating the distribution of discounted
/// cumulative cost at fixed fractions `tau_q = (2q - 1) / (2N)`.
#[derive(Debug, Clone)]
pub struct QuantileCritic {
    pub net: Mlp,
    pub n_quantiles: usize,
}

impl QuantileCritic {
    pub fn new(input_dim: usize, hidden: &[usize], n_quantiles: usize, seed: u64) -> Self {
        assert!(n_quantiles >= 1);
        Self {
            net: Mlp::new(NetSpec::new(input_dim, hidden, n_quantiles, seed)),
            n_quantiles,
        }
    }

    /// The fixed quantile fractions, strictly increasing in (0, 1).
    pub fn fractions(&self) -> Vec<f64> {
        let n = self.n_quantiles as f64;
        (1..=self.n_quantiles)
            .map(|q| (2.0 * q as f64 - 1.0) / (2.0 * n))
            .collect()
    }

    pub fn quantiles(&self, obs: &Observation) -> Vec<f64> {
        self.net
            .forward(&obs.scaled_values())
            .expect("quantile forward")
    }
}
