//! Planar geometry: polylines with arc-length parameterization and
//! oriented-rectangle collision/distance tests (separating axis theorem).

/// Oriented rectangle given by center pose and dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedRect {
    pub cx: f64,
    pub cy: f64,
    pub heading: f64,
    pub length: f64,
    pub width: f64,
}

impl OrientedRect {
    pub fn corners(&self) -> [[f64; 2]; 4] {
        let (s, c) = self.heading.sin_cos();
        let hl = 0.5 * self.length;
        let hw = 0.5 * self.width;
        let mut out = [[0.0; 2]; 4];
        for (i, (lx, ly)) in [(hl, hw), (hl, -hw), (-hl, -hw), (-hl, hw)].iter().enumerate() {
            out[i] = [self.cx + lx * c - ly * s, self.cy + lx * s + ly * c];
        }
        out
    }

    fn axes(&self) -> [[f64; 2]; 2] {
        let (s, c) = self.heading.sin_cos();
        [[c, s], [-s, c]]
    }
}

fn project(corners: &[[f64; 2]; 4], axis: [f64; 2]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for p in corners {
        let d = p[0] * axis[0] + p[1] * axis[1];
        lo = lo.min(d);
        hi = hi.max(d);
    }
    (lo, hi)
}

/// Oriented-rectangle overlap via the separating-axis test. Boundary
/// contact counts as a collision.
pub fn rects_collide(a: &OrientedRect, b: &OrientedRect) -> bool {
    let ca = a.corners();
    let cb = b.corners();
    for axis in a.axes().iter().chain(b.axes().iter()) {
        let (alo, ahi) = project(&ca, *axis);
        let (blo, bhi) = project(&cb, *axis);
        if ahi < blo || bhi < alo {
            return false;
        }
    }
    true
}

fn seg_seg_distance(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> f64 {
    fn point_seg(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
        let ab = [b[0] - a[0], b[1] - a[1]];
        let ap = [p[0] - a[0], p[1] - a[1]];
        let len2 = ab[0] * ab[0] + ab[1] * ab[1];
        let t = if len2 > 0.0 {
            ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let d = [ap[0] - t * ab[0], ap[1] - t * ab[1]];
        (d[0] * d[0] + d[1] * d[1]).sqrt()
    }
    fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
        (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    }
    // Proper intersection means zero distance.
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return 0.0;
    }
    point_seg(p1, q1, q2)
        .min(point_seg(p2, q1, q2))
        .min(point_seg(q1, p1, p2))
        .min(point_seg(q2, p1, p2))
}

/// Minimum gap between two oriented rectangles; 0 if they overlap or touch.
pub fn rect_distance(a: &OrientedRect, b: &OrientedRect) -> f64 {
    if rects_collide(a, b) {
        return 0.0;
    }
    let ca = a.corners();
    let cb = b.corners();
    let mut best = f64::INFINITY;
    for i in 0..4 {
        let p1 = ca[i];
        let p2 = ca[(i + 1) % 4];
        for j in 0..4 {
            let q1 = cb[j];
            let q2 = cb[(j + 1) % 4];
            best = best.min(seg_seg_distance(p1, p2, q1, q2));
        }
    }
    best
}

/// Polyline with cached cumulative arc lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub points: Vec<[f64; 2]>,
    cum: Vec<f64>,
}

impl Polyline {
    pub fn new(points: Vec<[f64; 2]>) -> Self {
        assert!(points.len() >= 2, "polyline needs at least two points");
        let mut cum = Vec::with_capacity(points.len());
        cum.push(0.0);
        for w in points.windows(2) {
            let d = ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt();
            assert!(d > 0.0, "zero-length polyline segment");
            cum.push(cum.last().unwrap() + d);
        }
        Self { points, cum }
    }

    pub fn length(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    pub fn start(&self) -> [f64; 2] {
        self.points[0]
    }

    pub fn end(&self) -> [f64; 2] {
        *self.points.last().unwrap()
    }

    fn segment_at(&self, arc: f64) -> (usize, f64) {
        let arc = arc.clamp(0.0, self.length());
        // Binary search over cumulative lengths.
        let mut i = match self
            .cum
            .binary_search_by(|c| c.partial_cmp(&arc).unwrap())
        {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        };
        if i >= self.points.len() - 1 {
            i = self.points.len() - 2;
        }
        let seg_len = self.cum[i + 1] - self.cum[i];
        let t = if seg_len > 0.0 {
            (arc - self.cum[i]) / seg_len
        } else {
            0.0
        };
        (i, t)
    }

    /// Point at the given arc length (clamped to the ends).
    pub fn point_at(&self, arc: f64) -> [f64; 2] {
        let (i, t) = self.segment_at(arc);
        let a = self.points[i];
        let b = self.points[i + 1];
        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
    }

    /// Unit tangent heading (radians) at the given arc length.
    pub fn heading_at(&self, arc: f64) -> f64 {
        let (i, _) = self.segment_at(arc);
        let a = self.points[i];
        let b = self.points[i + 1];
        (b[1] - a[1]).atan2(b[0] - a[0])
    }

    /// Projects a point onto the polyline: returns (arc length, signed
    /// lateral offset). Positive offset is to the left of travel.
    pub fn project(&self, p: [f64; 2]) -> (f64, f64) {
        self.project_segments(p, 0, self.points.len() - 1)
    }

    /// Projection restricted to segments within `window` meters of arc
    /// length around `arc_hint`. Keeps route tracking local on paths that
    /// pass near themselves (roundabout loops, junction connectors).
    pub fn project_near(&self, p: [f64; 2], arc_hint: f64, window: f64) -> (f64, f64) {
        let lo_arc = arc_hint - window;
        let hi_arc = arc_hint + window;
        let lo = match self
            .cum
            .binary_search_by(|c| c.partial_cmp(&lo_arc).unwrap())
        {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        };
        let hi = match self
            .cum
            .binary_search_by(|c| c.partial_cmp(&hi_arc).unwrap())
        {
            Ok(i) => i,
            Err(i) => i,
        }
        .min(self.points.len() - 1);
        if lo >= hi {
            return self.project(p);
        }
        self.project_segments(p, lo, hi)
    }

    fn project_segments(&self, p: [f64; 2], seg_lo: usize, seg_hi: usize) -> (f64, f64) {
        let mut best = (0.0, f64::INFINITY, 0.0); // (arc, |dist|, signed)
        for i in seg_lo..seg_hi {
            let a = self.points[i];
            let b = self.points[i + 1];
            let ab = [b[0] - a[0], b[1] - a[1]];
            let len2 = ab[0] * ab[0] + ab[1] * ab[1];
            let t = (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0);
            let proj = [a[0] + t * ab[0], a[1] + t * ab[1]];
            let d = ((p[0] - proj[0]).powi(2) + (p[1] - proj[1]).powi(2)).sqrt();
            if d < best.1 {
                let cross = ab[0] * (p[1] - a[1]) - ab[1] * (p[0] - a[0]);
                let arc = self.cum[i] + t * (self.cum[i + 1] - self.cum[i]);
                best = (arc, d, if cross >= 0.0 { d } else { -d });
            }
        }
        (best.0, best.2)
    }
}

/// Straight polyline from `a` to `b` sampled roughly every `step` meters.
pub fn line_polyline(a: [f64; 2], b: [f64; 2], step: f64) -> Vec<[f64; 2]> {
    let d = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    let n = (d / step).ceil().max(1.0) as usize;
    (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
        })
        .collect()
}

/// Circular arc polyline around `center` from angle `a0` to `a1`
/// (radians, signed sweep) sampled roughly every `step` meters of arc.
pub fn arc_polyline(center: [f64; 2], radius: f64, a0: f64, a1: f64, step: f64) -> Vec<[f64; 2]> {
    let sweep = a1 - a0;
    let arc_len = sweep.abs() * radius;
    let n = (arc_len / step).ceil().max(2.0) as usize;
    (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            let ang = a0 + t * sweep;
            [center[0] + radius * ang.cos(), center[1] + radius * ang.sin()]
        })
        .collect()
}


#[cfg(test)]
mod prop_tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn collision_symmetry(
            x in -10.0f64..10.0, y in -10.0f64..10.0,
            h1 in -3.0f64..3.0, h2 in -3.0f64..3.0,
        ) {
            let a = OrientedRect { cx: 0.0, cy: 0.0, heading: h1, length: 4.5, width: 2.0 };
            let b = OrientedRect { cx: x, cy: y, heading: h2, length: 4.5, width: 2.0 };
            prop_assert_eq!(rects_collide(&a, &b), rects_collide(&b, &a));
        }

        #[test]
        fn distance_zero_iff_collide(
            x in -8.0f64..8.0, y in -8.0f64..8.0,
            h in -3.0f64..3.0,
        ) {
            let a = OrientedRect { cx: 0.0, cy: 0.0, heading: 0.0, length: 4.5, width: 2.0 };
            let b = OrientedRect { cx: x, cy: y, heading: h, length: 4.5, width: 2.0 };
            let d = rect_distance(&a, &b);
            if rects_collide(&a, &b) {
                prop_assert_eq!(d, 0.0);
            } else {
                prop_assert!(d > 0.0);
            }
        }
    }
}
