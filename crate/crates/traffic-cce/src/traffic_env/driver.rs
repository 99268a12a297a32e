use crate::game_core::{wrap_heading, Action};

use super::env::{EnvState, TrafficEnv};
use super::map::RoadMap;

/// Car-following and steering parameters for the demonstration driver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriverParams {
    /// Free-flow target speed, m/s.
    pub desired_speed: f64,
    /// Standstill minimum bumper gap, m.
    pub min_gap: f64,
    /// Desired time headway, s.
    pub time_headway: f64,
    /// Maximum comfortable acceleration, m/s^2.
    pub accel_max: f64,
    /// Comfortable braking deceleration (positive), m/s^2.
    pub brake_comfort: f64,
    /// Pure-pursuit minimum lookahead, m.
    pub lookahead_min: f64,
    /// Lookahead growth per m/s of speed.
    pub lookahead_gain: f64,
    /// How far ahead along the route to scan for leaders, m.
    pub detect_range: f64,
    /// Lateral corridor half-width for leader detection, m.
    pub lateral_tol: f64,
}

impl DriverParams {
    pub fn for_map(map: &RoadMap) -> Self {
        Self {
            desired_speed: 0.65 * map.speed_limit,
            min_gap: 2.5,
            time_headway: 1.6,
            accel_max: 2.0,
            brake_comfort: 2.5,
            lookahead_min: 4.0,
            lookahead_gain: 0.6,
            detect_range: 50.0,
            lateral_tol: 2.5,
        }
    }
}

/// IDM-style longitudinal control plus pure-pursuit steering along the
/// agent's route centerline; output clamped to the action bounds.
pub fn rule_based_driver(
    env: &TrafficEnv,
    state: &EnvState,
    agent: usize,
    params: &DriverParams,
) -> Action {
    let v = &state.vehicles[agent];
    let route = &env.routes[agent];
    let my_arc = state.progress[agent];
    let dims = env.config.vehicle_dims;

    // Leader: nearest live vehicle ahead within the route corridor, or in
    // a short forward cone (covers crossing traffic the corridor misses).
    let mut lead: Option<(f64, f64)> = None; // (bumper gap, leader speed)
    for j in 0..state.vehicles.len() {
        if j == agent || state.done[j] {
            continue;
        }
        let o = &state.vehicles[j];
        let (arc_j, lat_j) = route.line.project_near([o.x, o.y], my_arc + 15.0, 60.0);
        let ahead = arc_j - my_arc;
        let mut candidate: Option<(f64, f64)> = None;
        if ahead > 0.1 && ahead < params.detect_range && lat_j.abs() < params.lateral_tol {
            candidate = Some(((ahead - dims.length).max(0.05), o.speed));
        } else {
            // Forward cone fallback.
            let dx = o.x - v.x;
            let dy = o.y - v.y;
            let dist = (dx * dx + dy * dy).sqrt();
            if dist < 14.0 {
                let bearing = wrap_heading(dy.atan2(dx) - v.heading);
                if bearing.abs() < 0.5 {
                    candidate = Some(((dist - dims.length).max(0.05), o.speed));
                }
            }
        }
        if let Some((gap, sp)) = candidate {
            if lead.map_or(true, |(g, _)| gap < g) {
                lead = Some((gap, sp));
            }
        }
    }

    let v0 = params.desired_speed.max(0.1);
    let free_term = 1.0 - (v.speed / v0).powi(4);
    let accel = match lead {
        None => params.accel_max * free_term,
        Some((gap, lead_speed)) => {
            let approach = v.speed - lead_speed;
            let s_star = params.min_gap
                + v.speed * params.time_headway
                + v.speed * approach / (2.0 * (params.accel_max * params.brake_comfort).sqrt());
            params.accel_max * (free_term - (s_star.max(0.0) / gap).powi(2))
        }
    };

    // Pure pursuit toward a speed-scaled lookahead point on the route.
    let lookahead = (params.lookahead_min + params.lookahead_gain * v.speed)
        .min(route.line.length() - my_arc)
        .max(1.0);
    let target = route.line.point_at(my_arc + lookahead);
    let bearing = (target[1] - v.y).atan2(target[0] - v.x);
    let alpha = wrap_heading(bearing - v.heading);
    let curvature = 2.0 * alpha.sin() / lookahead;
    let heading_change = curvature * v.speed.max(1.0) * env.config.dt;

    Action::new(accel, heading_change).clamped(
        env.config.a_min,
        env.config.a_max,
        env.config.dtheta_max,
    )
}
