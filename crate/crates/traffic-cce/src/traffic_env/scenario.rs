use serde::{Deserialize, Serialize};

use crate::game_core::EnvironmentError;

use super::map::{build_map, MapKind, RoadMap};

/// Spawn point: lane index, arc length along it, initial speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpawnSpec {
    pub lane: usize,
    pub arc: f64,
    pub speed: f64,
}

/// Goal point: target lane index and arc length along it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalSpec {
    pub lane: usize,
    pub arc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleDims {
    pub length: f64,
    pub width: f64,
}

impl Default for VehicleDims {
    fn default() -> Self {
        Self {
            length: 4.5,
            width: 2.0,
        }
    }
}

/// Weights of the per-step reward terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardWeights {
    pub w_progress: f64,
    pub w_goal: f64,
    pub w_collision: f64,
    pub w_lane: f64,
    pub w_action: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            w_progress: 0.1,
            w_goal: 10.0,
            w_collision: 10.0,
            w_lane: 0.1,
            w_action: 0.01,
        }
    }
}

/// Full description of one traffic scenario instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub map_kind: MapKind,
    /// Map geometry seed (jitters arm lengths, radii).
    pub map_seed: u64,
    /// Number of solver-controlled agents.
    pub n_agents: usize,
    /// Extra rule-based vehicles: observed, collide, but not optimized.
    pub n_uncontrolled: usize,
    /// Episode horizon, steps.
    pub horizon: usize,
    /// Step length, seconds.
    pub dt: f64,
    /// Per-agent spawn points (controlled then uncontrolled). Empty means
    /// auto-layout from the map's entry lanes.
    pub spawn: Vec<SpawnSpec>,
    /// Per-agent goals; empty means auto-layout.
    pub goals: Vec<GoalSpec>,
    pub vehicle_dims: VehicleDims,
    pub reward_weights: RewardWeights,
    /// Constraint distance, meters: cost fires below this gap.
    pub d_thresh: f64,
    /// Shaped cost `max(0, d_thresh - d)/d_thresh` instead of the 0/1
    /// indicator.
    pub shaped_cost: bool,
    pub v_max: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub dtheta_max: f64,
    /// Stacked observation history frames.
    pub history_frames: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            map_kind: MapKind::Merge,
            map_seed: 0,
            n_agents: 3,
            n_uncontrolled: 0,
            horizon: 100,
            dt: 0.1,
            spawn: Vec::new(),
            goals: Vec::new(),
            vehicle_dims: VehicleDims::default(),
            reward_weights: RewardWeights::default(),
            d_thresh: 4.0,
            shaped_cost: false,
            v_max: 20.0,
            a_min: -4.0,
            a_max: 3.0,
            dtheta_max: 0.1,
            history_frames: 3,
        }
    }
}

impl ScenarioConfig {
    /// Scenario with auto-laid-out spawns and goals for the given kind.
    pub fn default_for(kind: MapKind, n_agents: usize) -> Self {
        let mut cfg = Self {
            map_kind: kind,
            n_agents,
            ..Self::default()
        };
        let map = build_map(kind, cfg.map_seed);
        let (spawn, goals) = auto_layout(&map, n_agents + cfg.n_uncontrolled);
        cfg.spawn = spawn;
        cfg.goals = goals;
        cfg
    }

    pub fn total_vehicles(&self) -> usize {
        self.n_agents + self.n_uncontrolled
    }

    /// Builds the map and fills in any missing spawn/goal layout.
    pub fn resolve(&self) -> Result<(RoadMap, Vec<SpawnSpec>, Vec<GoalSpec>), EnvironmentError> {
        let map = build_map(self.map_kind, self.map_seed);
        let total = self.total_vehicles();
        let (spawn, goals) = if self.spawn.is_empty() || self.goals.is_empty() {
            auto_layout(&map, total)
        } else {
            (self.spawn.clone(), self.goals.clone())
        };
        if spawn.len() < total || goals.len() < total {
            return Err(EnvironmentError::InvalidConfig(format!(
                "need {total} spawns and goals, got {} and {}",
                spawn.len(),
                goals.len()
            )));
        }
        for s in &spawn[..total] {
            if s.lane >= map.lanes.len() {
                return Err(EnvironmentError::InvalidConfig(format!(
                    "spawn lane {} out of range",
                    s.lane
                )));
            }
        }
        for g in &goals[..total] {
            if g.lane >= map.lanes.len() {
                return Err(EnvironmentError::InvalidConfig(format!(
                    "goal lane {} out of range",
                    g.lane
                )));
            }
        }
        // Goals must be reachable through the successor graph.
        for (i, (s, g)) in spawn[..total].iter().zip(goals[..total].iter()).enumerate() {
            map.route_lanes(s.lane, g.lane).map_err(|_| {
                EnvironmentError::InvalidConfig(format!(
                    "agent {i}: goal lane {} unreachable from spawn lane {}",
                    g.lane, s.lane
                ))
            })?;
        }
        Ok((map, spawn[..total].to_vec(), goals[..total].to_vec()))
    }
}

/// Distributes vehicles over the map's entry lanes, spaced back from the
/// junction, each routed to a reachable exit.
fn auto_layout(map: &RoadMap, total: usize) -> (Vec<SpawnSpec>, Vec<GoalSpec>) {
    let entries = map.entry_lanes();
    let exits: Vec<usize> = (0..map.lanes.len())
        .filter(|&i| map.successors[i].is_empty())
        .collect();
    let speed = (0.6 * map.speed_limit).min(9.0);
    let mut spawn = Vec::with_capacity(total);
    let mut goals = Vec::with_capacity(total);
    let mut per_entry_count = vec![0usize; entries.len()];
    for v in 0..total {
        let e = v % entries.len();
        let lane = entries[e];
        let lane_len = map.lanes[lane].centerline.length();
        // Later vehicles on the same entry spawn further back; the first
        // sits well before the junction so cross-entry gaps stay open.
        let rank = per_entry_count[e] as f64;
        per_entry_count[e] += 1;
        let arc = (lane_len - 22.0 - 15.0 * rank).max(0.5);
        spawn.push(SpawnSpec { lane, arc, speed });
        // Pick the v-th reachable exit, round-robin for destination
        // diversity.
        let reachable: Vec<usize> = exits
            .iter()
            .copied()
            .filter(|&x| map.route_lanes(lane, x).is_ok())
            .collect();
        let goal_lane = reachable[v % reachable.len()];
        let goal_arc = (map.lanes[goal_lane].centerline.length() - 5.0).max(1.0);
        goals.push(GoalSpec {
            lane: goal_lane,
            arc: goal_arc,
        });
    }
    (spawn, goals)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_resolves_for_all_kinds() {
        for kind in MapKind::ALL {
            let cfg = ScenarioConfig::default_for(kind, 4);
            let (map, spawn, goals) = cfg.resolve().unwrap();
            assert_eq!(spawn.len(), 4);
            assert_eq!(goals.len(), 4);
            for (s, g) in spawn.iter().zip(goals.iter()) {
                assert!(map.route_lanes(s.lane, g.lane).is_ok());
                assert!(s.arc >= 0.0 && s.arc <= map.lanes[s.lane].centerline.length());
            }
        }
    }

    #[test]
    fn unreachable_goal_rejected() {
        let mut cfg = ScenarioConfig::default_for(MapKind::Merge, 1);
        // merged_out (lane 2) has no successors; main_in (0) is unreachable
        // from it.
        cfg.spawn = vec![SpawnSpec {
            lane: 2,
            arc: 1.0,
            speed: 5.0,
        }];
        cfg.goals = vec![GoalSpec { lane: 0, arc: 1.0 }];
        assert!(cfg.resolve().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ScenarioConfig::default_for(MapKind::TJunction, 3);
        let text = toml::to_string(&cfg).unwrap();
        let back: ScenarioConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn unknown_field_rejected() {
        let text = "map_kind = \"merge\"\nwarp_drive = true\n";
        let err = toml::from_str::<ScenarioConfig>(text).unwrap_err();
        assert!(err.to_string().contains("warp_drive"));
    }
}
