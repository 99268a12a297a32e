use std::f64::consts::PI;
use std::sync::Arc;

use thiserror::Error;

/// Wraps an angle to the half-open interval `[-pi, pi)`.
pub fn wrap_heading(theta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut t = (theta + PI).rem_euclid(two_pi) - PI;
    // rem_euclid can return exactly 2*pi - eps; guard the upper boundary.
    if t >= PI {
        t -= two_pi;
    }
    t
}

/// Planar kinematic state of one vehicle.
///
/// Heading is always stored wrapped to `[-pi, pi)`; speed is clamped to
/// `[0, v_max]` at every write, never lazily.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    /// Position east, meters.
    pub x: f64,
    /// Position north, meters.
    pub y: f64,
    /// Heading angle, radians in `[-pi, pi)`.
    pub heading: f64,
    /// Speed magnitude, m/s, nonnegative.
    pub speed: f64,
}

impl VehicleState {
    pub fn new(x: f64, y: f64, heading: f64, speed: f64) -> Self {
        Self {
            x,
            y,
            heading: wrap_heading(heading),
            speed: speed.max(0.0),
        }
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }
}

/// Two-dimensional control: longitudinal acceleration plus per-step
/// relative heading change.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Action {
    /// Longitudinal acceleration, m/s^2.
    pub accel: f64,
    /// Relative heading change this step, radians.
    pub heading_change: f64,
}

impl Action {
    pub fn new(accel: f64, heading_change: f64) -> Self {
        Self {
            accel,
            heading_change,
        }
    }

    /// Clamps both components into the given bounds.
    pub fn clamped(self, a_min: f64, a_max: f64, dtheta_max: f64) -> Self {
        Self {
            accel: self.accel.clamp(a_min, a_max),
            heading_change: self.heading_change.clamp(-dtheta_max, dtheta_max),
        }
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.accel, self.heading_change]
    }
}

/// Names every slot of the per-frame feature vector and records how many
/// history frames are stacked. All agents in a scenario share one layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationLayout {
    /// Slot names for a single frame, in order.
    pub slot_names: Vec<String>,
    /// Per-slot scale divisor applied when feeding networks. Keeps the
    /// stored observation in raw physical units while conditioning inputs.
    pub slot_scales: Vec<f64>,
    /// Number of stacked history frames (oldest first).
    pub history_frames: usize,
}

impl ObservationLayout {
    pub fn frame_len(&self) -> usize {
        self.slot_names.len()
    }

    /// Total observation length: frame length times stacked frames.
    pub fn len(&self) -> usize {
        self.frame_len() * self.history_frames
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Scale divisor for a flattened slot index.
    pub fn scale_at(&self, idx: usize) -> f64 {
        self.slot_scales[idx % self.frame_len()]
    }
}

/// A fixed-layout real feature vector observed by one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub values: Vec<f64>,
    pub layout: Arc<ObservationLayout>,
}

impl Observation {
    pub fn new(values: Vec<f64>, layout: Arc<ObservationLayout>) -> Self {
        debug_assert_eq!(values.len(), layout.len());
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { values, layout }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Values divided by the layout's per-slot scales, for network input.
    pub fn scaled_values(&self) -> Vec<f64> {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| v / self.layout.scale_at(i))
            .collect()
    }

    /// The most recent stacked frame (raw units).
    pub fn latest_frame(&self) -> &[f64] {
        let fl = self.layout.frame_len();
        &self.values[self.values.len() - fl..]
    }
}

/// Per-agent outcome of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    /// Per-agent scalar reward.
    pub rewards: Vec<f64>,
    /// Per-agent scalar cost (0/1 under the indicator cost).
    pub costs: Vec<f64>,
    /// Per-agent collision flag for this step.
    pub collided: Vec<bool>,
    /// Per-agent done flag (goal reached, collided, or horizon).
    pub done: Vec<bool>,
    /// Per-agent rectangle-gap distance to the nearest other live agent,
    /// meters; `f64::INFINITY` when no other agent exists.
    pub min_distances: Vec<f64>,
}

/// One recorded step of an agent's trajectory.
#[derive(Debug, Clone)]
pub struct TrajStep {
    pub observation: Observation,
    pub action: Action,
    pub log_prob: f64,
    pub reward: f64,
    pub cost: f64,
}

/// Per-agent sequence of recorded steps, at most `horizon` long.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub agent_id: usize,
    pub horizon: usize,
    pub steps: Vec<TrajStep>,
}

impl Trajectory {
    pub fn new(agent_id: usize, horizon: usize) -> Self {
        Self {
            agent_id,
            horizon,
            steps: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.reward).collect()
    }

    pub fn costs(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.cost).collect()
    }
}

#[derive(Debug, Error)]
pub enum EnvironmentError {
    #[error("episode already finished at step {step}")]
    EpisodeFinished { step: usize },
    #[error("expected {expected} actions, got {got}")]
    ActionCountMismatch { expected: usize, got: usize },
    #[error("no feasible spawn after {attempts} jitter attempts (agent {agent})")]
    InfeasibleSpawn { agent: usize, attempts: usize },
    #[error("{0}")]
    InvalidConfig(String),
}

/// Episodic multi-agent environment driven by per-agent continuous actions.
///
/// Implemented by the kinematic traffic simulator and by the tabular
/// Markov-game adapter, so the solver and the gap estimators run unchanged
/// on both. Instances are independently clonable; a clone shares no mutable
/// state with its source.
pub trait Environment: Clone + Send {
    /// Number of solver-controlled agents (uncontrolled vehicles excluded).
    fn n_controlled(&self) -> usize;

    /// Shared observation layout for all controlled agents.
    fn layout(&self) -> Arc<ObservationLayout>;

    /// Episode horizon in steps.
    fn horizon(&self) -> usize;

    /// Action bounds `(a_min, a_max, dtheta_max)` used for clamping.
    fn action_bounds(&self) -> (f64, f64, f64);

    /// Resets to a seeded initial state, returning per-controlled-agent
    /// observations.
    fn reset(&mut self, seed: u64) -> Result<Vec<Observation>, EnvironmentError>;

    /// Advances one step with one action per controlled agent.
    fn step(
        &mut self,
        actions: &[Action],
    ) -> Result<(StepOutcome, Vec<Observation>), EnvironmentError>;

    /// True once every controlled agent is done or the horizon is reached.
    fn episode_done(&self) -> bool;
}
