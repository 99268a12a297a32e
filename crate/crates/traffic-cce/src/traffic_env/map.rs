use std::collections::VecDeque;
use std::io::Write;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::geometry::{arc_polyline, line_polyline, Polyline};

#[derive(Debug, Error)]
pub enum MapError {
    #[error("unknown map kind `{0}`")]
    UnknownKind(String),
    #[error("no route from lane {from} to lane {to}")]
    NoRoute { from: usize, to: usize },
}

/// The six supported procedural scenario geometries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    Merge,
    DualIntersection,
    TJunction,
    DenseIntersection,
    Roundabout,
    YJunction,
}

impl MapKind {
    pub const ALL: [MapKind; 6] = [
        MapKind::Merge,
        MapKind::DualIntersection,
        MapKind::TJunction,
        MapKind::DenseIntersection,
        MapKind::Roundabout,
        MapKind::YJunction,
    ];

    pub fn parse(s: &str) -> Result<Self, MapError> {
        match s {
            "merge" => Ok(MapKind::Merge),
            "dual_intersection" => Ok(MapKind::DualIntersection),
            "t_junction" => Ok(MapKind::TJunction),
            "dense_intersection" => Ok(MapKind::DenseIntersection),
            "roundabout" => Ok(MapKind::Roundabout),
            "y_junction" => Ok(MapKind::YJunction),
            other => Err(MapError::UnknownKind(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MapKind::Merge => "merge",
            MapKind::DualIntersection => "dual_intersection",
            MapKind::TJunction => "t_junction",
            MapKind::DenseIntersection => "dense_intersection",
            MapKind::Roundabout => "roundabout",
            MapKind::YJunction => "y_junction",
        }
    }
}

/// One lane: a named centerline polyline.
#[derive(Debug, Clone)]
pub struct Lane {
    pub name: String,
    pub centerline: Polyline,
}

/// Procedural road map: lane centerlines plus a successor graph.
#[derive(Debug, Clone)]
pub struct RoadMap {
    pub kind: MapKind,
    pub lanes: Vec<Lane>,
    /// successors[i] lists lanes drivable immediately after lane i.
    pub successors: Vec<Vec<usize>>,
    /// Speed limit, m/s.
    pub speed_limit: f64,
}

impl RoadMap {
    pub fn lane_index(&self, name: &str) -> Option<usize> {
        self.lanes.iter().position(|l| l.name == name)
    }

    pub fn predecessors(&self) -> Vec<Vec<usize>> {
        let mut preds = vec![Vec::new(); self.lanes.len()];
        for (i, succs) in self.successors.iter().enumerate() {
            for &s in succs {
                preds[s].push(i);
            }
        }
        preds
    }

    /// Lanes with no predecessor (scenario entry points).
    pub fn entry_lanes(&self) -> Vec<usize> {
        self.predecessors()
            .iter()
            .enumerate()
            .filter(|(_, p)| p.is_empty())
            .map(|(i, _)| i)
            .collect()
    }

    /// Shortest lane path (BFS over successors) from one lane to another.
    pub fn route_lanes(&self, from: usize, to: usize) -> Result<Vec<usize>, MapError> {
        if from == to {
            return Ok(vec![from]);
        }
        let mut prev = vec![usize::MAX; self.lanes.len()];
        let mut queue = VecDeque::new();
        queue.push_back(from);
        prev[from] = from;
        while let Some(cur) = queue.pop_front() {
            for &nxt in &self.successors[cur] {
                if prev[nxt] == usize::MAX {
                    prev[nxt] = cur;
                    if nxt == to {
                        let mut path = vec![to];
                        let mut node = to;
                        while node != from {
                            node = prev[node];
                            path.push(node);
                        }
                        path.reverse();
                        return Ok(path);
                    }
                    queue.push_back(nxt);
                }
            }
        }
        Err(MapError::NoRoute { from, to })
    }

    /// Concatenates a lane path into one polyline, dropping duplicated
    /// joint points, and returns it with the arc offsets at which each
    /// lane starts.
    pub fn route_polyline(&self, lane_path: &[usize]) -> (Polyline, Vec<f64>) {
        let mut points: Vec<[f64; 2]> = Vec::new();
        let mut offsets = Vec::with_capacity(lane_path.len());
        let mut arc = 0.0;
        for (k, &li) in lane_path.iter().enumerate() {
            offsets.push(arc);
            let lane = &self.lanes[li];
            let pts = &lane.centerline.points;
            let skip = if k == 0 { 0 } else { 1 };
            points.extend_from_slice(&pts[skip..]);
            arc += lane.centerline.length();
        }
        (Polyline::new(points), offsets)
    }

    /// Axis-aligned bounding box over all lane points: (min, max).
    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for lane in &self.lanes {
            for p in &lane.centerline.points {
                for d in 0..2 {
                    lo[d] = lo[d].min(p[d]);
                    hi[d] = hi[d].max(p[d]);
                }
            }
        }
        (lo, hi)
    }

    /// Writes lane polylines as CSV rows `lane_id,point_index,x,y`.
    pub fn export_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "lane_id,point_index,x,y")?;
        for (li, lane) in self.lanes.iter().enumerate() {
            for (pi, p) in lane.centerline.points.iter().enumerate() {
                writeln!(w, "{li},{pi},{:.6},{:.6}", p[0], p[1])?;
            }
        }
        Ok(())
    }
}

const STEP: f64 = 2.0;

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Cubic Hermite blend between two posed endpoints, for turn connectors.
fn hermite(p0: [f64; 2], h0: f64, p1: [f64; 2], h1: f64, tension: f64, n: usize) -> Vec<[f64; 2]> {
    let t0 = [tension * h0.cos(), tension * h0.sin()];
    let t1 = [tension * h1.cos(), tension * h1.sin()];
    (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            let (t2, t3) = (t * t, t * t * t);
            let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
            let h10 = t3 - 2.0 * t2 + t;
            let h01 = -2.0 * t3 + 3.0 * t2;
            let h11 = t3 - t2;
            [
                h00 * p0[0] + h10 * t0[0] + h01 * p1[0] + h11 * t1[0],
                h00 * p0[1] + h10 * t0[1] + h01 * p1[1] + h11 * t1[1],
            ]
        })
        .collect()
}

/// Builds a deterministic map for `(kind, seed)`. The seed jitters arm
/// lengths and radii mildly; junction joint coordinates are exact so
/// successor endpoints always coincide.
pub fn build_map(kind: MapKind, seed: u64) -> RoadMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4d41505f);
    match kind {
        MapKind::Merge => build_merge(&mut rng),
        MapKind::Roundabout => build_roundabout(&mut rng),
        MapKind::TJunction => build_t_junction(&mut rng),
        MapKind::DualIntersection => build_intersection(&mut rng, 12.0, 4.5, false),
        MapKind::DenseIntersection => build_intersection(&mut rng, 10.0, 3.5, true),
        MapKind::YJunction => build_y_junction(&mut rng),
    }
}

fn build_merge(rng: &mut ChaCha8Rng) -> RoadMap {
    let approach: f64 = 60.0 + rng.gen_range(-5.0..5.0);
    let offset: f64 = 12.0 + rng.gen_range(-2.0..2.0);
    let out_len: f64 = 80.0 + rng.gen_range(-5.0..5.0);

    // Main lane runs straight along y = 0 into the join at the origin.
    let main = line_polyline([-approach, 0.0], [0.0, 0.0], STEP);
    // Ramp runs parallel for the first half, then blends onto the join
    // point, so spawns back on the approaches keep their lateral gap.
    let n = (approach / STEP).ceil() as usize;
    let ramp: Vec<[f64; 2]> = (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            let x = -approach + t * approach;
            let blend = ((t - 0.5) / 0.5).max(0.0);
            let y = offset * (1.0 - smoothstep(blend));
            [x, y]
        })
        .collect();
    let merged = line_polyline([0.0, 0.0], [out_len, 0.0], STEP);

    RoadMap {
        kind: MapKind::Merge,
        lanes: vec![
            Lane {
                name: "main_in".into(),
                centerline: Polyline::new(main),
            },
            Lane {
                name: "ramp_in".into(),
                centerline: Polyline::new(ramp),
            },
            Lane {
                name: "merged_out".into(),
                centerline: Polyline::new(merged),
            },
        ],
        successors: vec![vec![2], vec![2], vec![]],
        speed_limit: 15.0,
    }
}

fn build_roundabout(rng: &mut ChaCha8Rng) -> RoadMap {
    use std::f64::consts::PI;
    let radius: f64 = 16.0 + rng.gen_range(-2.0..2.0);
    let approach: f64 = 35.0 + rng.gen_range(-5.0..5.0);

    let mut lanes = Vec::new();
    let mut successors: Vec<Vec<usize>> = Vec::new();

    // Six 60-degree loop segments, counterclockwise.
    let n_seg = 6usize;
    for k in 0..n_seg {
        let a0 = 2.0 * PI * k as f64 / n_seg as f64;
        let a1 = 2.0 * PI * (k + 1) as f64 / n_seg as f64;
        lanes.push(Lane {
            name: format!("loop_{k}"),
            centerline: Polyline::new(arc_polyline([0.0, 0.0], radius, a0, a1, STEP)),
        });
        successors.push(vec![(k + 1) % n_seg]);
    }

    // Entries feed the loop at segment starts 0, 2, 4; exits leave at
    // segment starts 1, 3, 5.
    for (e, seg) in [0usize, 2, 4].iter().enumerate() {
        let theta = 2.0 * PI * *seg as f64 / n_seg as f64;
        let b = [radius * theta.cos(), radius * theta.sin()];
        let tangent = theta + PI / 2.0; // ccw travel direction
        let outward = theta;
        // Blend in from off-circle: start back along the tangent and
        // shifted outward, ending exactly at the boundary point.
        let n = (approach / STEP).ceil() as usize;
        let pts: Vec<[f64; 2]> = (0..=n)
            .map(|i| {
                let t = i as f64 / n as f64;
                let back = approach * (1.0 - t);
                let out = 10.0 * (1.0 - smoothstep(t));
                [
                    b[0] - back * tangent.cos() + out * outward.cos(),
                    b[1] - back * tangent.sin() + out * outward.sin(),
                ]
            })
            .collect();
        let idx = lanes.len();
        lanes.push(Lane {
            name: format!("entry_{e}"),
            centerline: Polyline::new(pts),
        });
        successors.push(vec![*seg]);
        let _ = idx;
    }
    for (x, seg) in [1usize, 3, 5].iter().enumerate() {
        let theta = 2.0 * PI * *seg as f64 / n_seg as f64;
        let b = [radius * theta.cos(), radius * theta.sin()];
        let tangent = theta + PI / 2.0;
        let outward = theta;
        let n = (approach / STEP).ceil() as usize;
        let pts: Vec<[f64; 2]> = (0..=n)
            .map(|i| {
                let t = i as f64 / n as f64;
                let fwd = approach * t;
                let out = 10.0 * smoothstep(t);
                [
                    b[0] + fwd * tangent.cos() + out * outward.cos(),
                    b[1] + fwd * tangent.sin() + out * outward.sin(),
                ]
            })
            .collect();
        let idx = lanes.len();
        lanes.push(Lane {
            name: format!("exit_{x}"),
            centerline: Polyline::new(pts),
        });
        successors.push(vec![]);
        // The loop segment ending at this boundary also feeds the exit:
        // segment (seg - 1) mod 6 ends at angle seg*60 degrees.
        let feeder = (*seg + n_seg - 1) % n_seg;
        successors[feeder].push(idx);
    }

    RoadMap {
        kind: MapKind::Roundabout,
        lanes,
        successors,
        speed_limit: 10.0,
    }
}

fn build_t_junction(rng: &mut ChaCha8Rng) -> RoadMap {
    let arm: f64 = 55.0 + rng.gen_range(-5.0..5.0);
    let half = 10.0; // junction box half-extent
    let sep = 9.0; // opposing-lane separation

    let mut lanes = Vec::new();
    let mut succ: Vec<Vec<usize>> = Vec::new();
    let add = |lanes: &mut Vec<Lane>,
                   succ: &mut Vec<Vec<usize>>,
                   name: &str,
                   pts: Vec<[f64; 2]>|
     -> usize {
        lanes.push(Lane {
            name: name.into(),
            centerline: Polyline::new(pts),
        });
        succ.push(vec![]);
        lanes.len() - 1
    };

    // Eastbound main road at y = 0; westbound at y = sep; stem from south
    // at x = 0 (northbound).
    let w_in = add(
        &mut lanes,
        &mut succ,
        "west_in",
        line_polyline([-arm - half, 0.0], [-half, 0.0], STEP),
    );
    let c_we = add(
        &mut lanes,
        &mut succ,
        "center_we",
        line_polyline([-half, 0.0], [half, 0.0], STEP),
    );
    let e_out = add(
        &mut lanes,
        &mut succ,
        "east_out",
        line_polyline([half, 0.0], [arm + half, 0.0], STEP),
    );
    let e_in = add(
        &mut lanes,
        &mut succ,
        "east_in",
        line_polyline([arm + half, sep], [half, sep], STEP),
    );
    let c_ew = add(
        &mut lanes,
        &mut succ,
        "center_ew",
        line_polyline([half, sep], [-half, sep], STEP),
    );
    let w_out = add(
        &mut lanes,
        &mut succ,
        "west_out",
        line_polyline([-half, sep], [-arm - half, sep], STEP),
    );
    let s_in = add(
        &mut lanes,
        &mut succ,
        "south_in",
        line_polyline([0.0, -arm - half], [0.0, -half], STEP),
    );
    use std::f64::consts::FRAC_PI_2;
    // Right turn south -> east: quarter arc onto the eastbound lane.
    let c_se = add(
        &mut lanes,
        &mut succ,
        "turn_se",
        arc_polyline([half, -half], half, std::f64::consts::PI, FRAC_PI_2, STEP),
    );
    // Left turn south -> west: blend across the junction onto westbound.
    let c_sw = add(
        &mut lanes,
        &mut succ,
        "turn_sw",
        hermite(
            [0.0, -half],
            FRAC_PI_2,
            [-half, sep],
            std::f64::consts::PI,
            1.6 * (half + sep),
            16,
        ),
    );

    succ[w_in] = vec![c_we];
    succ[c_we] = vec![e_out];
    succ[e_in] = vec![c_ew];
    succ[c_ew] = vec![w_out];
    succ[s_in] = vec![c_se, c_sw];
    succ[c_se] = vec![e_out];
    succ[c_sw] = vec![w_out];

    RoadMap {
        kind: MapKind::TJunction,
        lanes,
        successors: succ,
        speed_limit: 13.0 + rng.gen_range(-1.0..1.0),
    }
}

/// Four-arm crossing; `all_turns` also adds the four left turns (the
/// dense variant), otherwise rights everywhere and lefts for east/west.
fn build_intersection(rng: &mut ChaCha8Rng, half: f64, off: f64, all_turns: bool) -> RoadMap {
    let arm: f64 = 50.0 + rng.gen_range(-5.0..5.0);
    use std::f64::consts::{FRAC_PI_2, PI};

    // Arms indexed 0..4: direction of travel east, north, west, south.
    // In/out points sit on the junction box edge at lane offset `off`
    // (right-hand side of travel).
    let headings = [0.0, FRAC_PI_2, PI, -FRAC_PI_2];
    let mut lanes = Vec::new();
    let mut succ: Vec<Vec<usize>> = Vec::new();
    let add = |lanes: &mut Vec<Lane>,
                   succ: &mut Vec<Vec<usize>>,
                   name: String,
                   pts: Vec<[f64; 2]>|
     -> usize {
        lanes.push(Lane {
            name,
            centerline: Polyline::new(pts),
        });
        succ.push(vec![]);
        lanes.len() - 1
    };
    let rot = |h: f64, p: [f64; 2]| -> [f64; 2] {
        [p[0] * h.cos() - p[1] * h.sin(), p[0] * h.sin() + p[1] * h.cos()]
    };

    let dir_name = ["e", "n", "w", "s"];
    let mut ids_in = [0usize; 4];
    let mut ids_cross = [0usize; 4];
    let mut ids_out = [0usize; 4];
    for d in 0..4 {
        let h = headings[d];
        // Local frame for travel east: in-lane y = -off, from x=-arm-half
        // to x=-half; crossing to x=half; out to x=arm+half.
        let a = rot(h, [-arm - half, -off]);
        let b = rot(h, [-half, -off]);
        let c = rot(h, [half, -off]);
        let e = rot(h, [arm + half, -off]);
        ids_in[d] = add(
            &mut lanes,
            &mut succ,
            format!("{}_in", dir_name[d]),
            line_polyline(a, b, STEP),
        );
        ids_cross[d] = add(
            &mut lanes,
            &mut succ,
            format!("{}_cross", dir_name[d]),
            line_polyline(b, c, STEP),
        );
        ids_out[d] = add(
            &mut lanes,
            &mut succ,
            format!("{}_out", dir_name[d]),
            line_polyline(c, e, STEP),
        );
    }
    for d in 0..4 {
        succ[ids_in[d]].push(ids_cross[d]);
        succ[ids_cross[d]].push(ids_out[d]);
    }
    // Right turns: entering on arm d exits on arm (d - 1) mod 4.
    for d in 0..4 {
        let to = (d + 3) % 4;
        let h_in = headings[d];
        let h_out = headings[to];
        let from_pt = rot(h_in, [-half, -off]);
        let to_pt = rot(h_out, [half, -off]);
        let id = add(
            &mut lanes,
            &mut succ,
            format!("{}_{}_right", dir_name[d], dir_name[to]),
            hermite(from_pt, h_in, to_pt, h_out, 1.2 * half, 12),
        );
        succ[ids_in[d]].push(id);
        succ[id].push(ids_out[to]);
    }
    // Left turns cross oncoming traffic: entering arm d exits arm
    // (d + 1) mod 4.
    let left_arms: Vec<usize> = if all_turns { vec![0, 1, 2, 3] } else { vec![0, 2] };
    for d in left_arms {
        let to = (d + 1) % 4;
        let h_in = headings[d];
        let h_out = headings[to];
        let from_pt = rot(h_in, [-half, -off]);
        let to_pt = rot(h_out, [half, -off]);
        let id = add(
            &mut lanes,
            &mut succ,
            format!("{}_{}_left", dir_name[d], dir_name[to]),
            hermite(from_pt, h_in, to_pt, h_out, 2.0 * half, 16),
        );
        succ[ids_in[d]].push(id);
        succ[id].push(ids_out[to]);
    }

    RoadMap {
        kind: if all_turns {
            MapKind::DenseIntersection
        } else {
            MapKind::DualIntersection
        },
        lanes,
        successors: succ,
        speed_limit: 12.0 + rng.gen_range(-1.0..1.0),
    }
}

fn build_y_junction(rng: &mut ChaCha8Rng) -> RoadMap {
    use std::f64::consts::PI;
    let arm: f64 = 50.0 + rng.gen_range(-5.0..5.0);
    let half = 12.0;
    let off = 4.0;

    // Three arms whose inbound travel directions point at the center,
    // oriented 90, 210 and 330 degrees.
    let arm_angles = [PI / 2.0, PI * 7.0 / 6.0, PI * 11.0 / 6.0];
    let mut lanes = Vec::new();
    let mut succ: Vec<Vec<usize>> = Vec::new();
    let add = |lanes: &mut Vec<Lane>,
                   succ: &mut Vec<Vec<usize>>,
                   name: String,
                   pts: Vec<[f64; 2]>|
     -> usize {
        lanes.push(Lane {
            name,
            centerline: Polyline::new(pts),
        });
        succ.push(vec![]);
        lanes.len() - 1
    };

    let mut ids_in = [0usize; 3];
    let mut ids_out = [0usize; 3];
    let mut in_pose = [[0.0; 3]; 3]; // x, y, heading at the junction edge
    let mut out_pose = [[0.0; 3]; 3];
    for (k, &ang) in arm_angles.iter().enumerate() {
        // Inbound travel heading points from the arm toward the center.
        let inbound = ang + PI;
        let (s, c) = inbound.sin_cos();
        // Right-hand offset perpendicular to travel.
        let right = [s, -c];
        let outer_in = [
            (arm + half) * ang.cos() + off * right[0],
            (arm + half) * ang.sin() + off * right[1],
        ];
        let edge_in = [
            half * ang.cos() + off * right[0],
            half * ang.sin() + off * right[1],
        ];
        ids_in[k] = add(
            &mut lanes,
            &mut succ,
            format!("arm{k}_in"),
            line_polyline(outer_in, edge_in, STEP),
        );
        in_pose[k] = [edge_in[0], edge_in[1], inbound];
        // Outbound lane on the other side of the same arm.
        let left = [-s, c];
        let edge_out = [
            half * ang.cos() + off * left[0],
            half * ang.sin() + off * left[1],
        ];
        let outer_out = [
            (arm + half) * ang.cos() + off * left[0],
            (arm + half) * ang.sin() + off * left[1],
        ];
        ids_out[k] = add(
            &mut lanes,
            &mut succ,
            format!("arm{k}_out"),
            line_polyline(edge_out, outer_out, STEP),
        );
        out_pose[k] = [edge_out[0], edge_out[1], ang];
    }
    // Connectors between every ordered pair of distinct arms.
    for from in 0..3 {
        for to in 0..3 {
            if from == to {
                continue;
            }
            let p0 = [in_pose[from][0], in_pose[from][1]];
            let p1 = [out_pose[to][0], out_pose[to][1]];
            let id = add(
                &mut lanes,
                &mut succ,
                format!("conn_{from}_{to}"),
                hermite(p0, in_pose[from][2], p1, out_pose[to][2], 1.8 * half, 16),
            );
            succ[ids_in[from]].push(id);
            succ[id].push(ids_out[to]);
        }
    }

    RoadMap {
        kind: MapKind::YJunction,
        lanes,
        successors: succ,
        speed_limit: 12.0 + rng.gen_range(-1.0..1.0),
    }
}
