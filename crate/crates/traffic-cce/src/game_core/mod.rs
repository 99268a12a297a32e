//! Shared vocabulary for the multi-agent game: agent state, actions,
//! observations, trajectories, hyperparameters, and discounted-return
//! machinery. All types are value-like records; operations are pure.

mod hyperparams;
mod returns;
mod types;

pub use hyperparams::{Hyperparams, HyperparamsError};
pub use returns::{discounted_return, mc_value_estimate, penalized_value, Channel, ReturnError};
pub use types::{
    wrap_heading, Action, Environment, EnvironmentError, Observation, ObservationLayout,
    StepOutcome, TrajStep, Trajectory, VehicleState,
};
