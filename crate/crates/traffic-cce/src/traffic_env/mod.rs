//! Deterministic kinematic multi-vehicle simulator: procedural road maps,
//! reward/cost functions, ego-frame observation encoding, oriented-
//! rectangle collision geometry, and a rule-based demonstration driver.

mod demo;
mod driver;
mod env;
mod geometry;
mod map;
mod scenario;

pub use demo::{derive_seed, generate_demonstrations, DemoBatch};
pub use driver::{rule_based_driver, DriverParams};
pub use env::{EnvState, Route, TrafficEnv, FRAME_LEN, N_NEIGHBORS, N_PREVIEW, PREVIEW_OFFSETS};
pub use geometry::{
    arc_polyline, line_polyline, rect_distance, rects_collide, OrientedRect, Polyline,
};
pub use map::{build_map, Lane, MapError, MapKind, RoadMap};
pub use scenario::{GoalSpec, RewardWeights, ScenarioConfig, SpawnSpec, VehicleDims};
