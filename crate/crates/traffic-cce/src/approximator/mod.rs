//! Parametric function approximation: fully connected networks with
//! analytic gradients, a Laplace-mixture anchor head, a Gaussian
//! fine-tuning head, scalar and quantile critics, and flat-f32 parameter
//! checkpoints. Everything is seeded; there is no global RNG.

mod anchor;
mod checkpoint;
mod critics;
mod heads;
mod net;

pub use anchor::{train_anchor, AnchorError, AnchorReport};
pub use checkpoint::{Checkpoint, CheckpointError};
pub use critics::{QuantileCritic, ValueCritic};
pub use heads::{
    kl_mc, standard_normal, ActionBounds, GaussianPolicy, LaplaceMixturePolicy, MixtureParams,
    StochasticPolicy,
};
pub use net::{
    finite_difference_gradient, max_relative_error, Adam, ForwardCache, Mlp, NetError, NetSpec,
};
