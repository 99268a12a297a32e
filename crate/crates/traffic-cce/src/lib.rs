//! Multi-agent traffic scenario solver.
//!
//! This crate fine-tunes anchor driving policies toward coarse correlated
//! equilibria (CCE) on a kinematic multi-vehicle simulator. Policies are
//! regularized toward an imitation anchor and the previous iterate (magnetic
//! mirror descent), shaped with a visitation-density exploration bonus, and
//! constrained by inter-vehicle distance through a Lagrangian with a
//! CVaR-distorted distributional cost critic. Exploitability is measured by
//! per-agent CCE-gap estimators, with exact matrix-game and tabular
//! Markov-game oracles for verification, and fidelity to demonstration
//! traffic is measured by f-divergences and Wasserstein distance on speed
//! and inter-vehicle distance features.
//!
//! The `examples/` directory holds one runnable example per major
//! capability; the `traffic-cce` binary exposes the same pipelines as
//! `train`, `gap`, `fidelity`, and `export` subcommands.

pub mod approximator;
pub mod cce_solver;
pub mod cli_io;
pub mod exploitability;
pub mod fidelity;
pub mod game_core;
pub mod traffic_env;
