use crate::error::{Error, Result};

use super::{cross, left_normal, Vec2};

/// Default spacing of the resampled reference, metres.
pub const DEFAULT_RESAMPLE_STEP: f64 = 0.5;

const DEDUP_EPS: f64 = 1e-9;
const ROOT_EPS: f64 = 1e-9;
const TIE_EPS: f64 = 1e-12;

/// Longitudinal / lateral coordinates along a reference. `d` is positive to
/// the left of the direction of travel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrenetPoint {
    pub s: f64,
    pub d: f64,
}

impl FrenetPoint {
    pub fn new(s: f64, d: f64) -> Self {
        Self { s, d }
    }
}

/// Which part of the reference a point projected onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionKind {
    Interior,
    BeforeStart,
    AfterEnd,
    /// No normal line of the reference passes through the point (behind a
    /// tight bend); `(s, d)` is the nearest point and cannot be inverted.
    Fallback,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// `s` clamped to `[0, L]`.
    pub point: FrenetPoint,
    /// Distance beyond the nearer endpoint along its extended tangent; 0 for
    /// interior projections.
    pub overshoot: f64,
    pub kind: ProjectionKind,
}

impl Projection {
    /// `s` continued along the end tangents: negative before the start,
    /// greater than `L` past the end.
    pub fn extended_s(&self) -> f64 {
        match self.kind {
            ProjectionKind::BeforeStart => self.point.s - self.overshoot,
            ProjectionKind::AfterEnd => self.point.s + self.overshoot,
            _ => self.point.s,
        }
    }

    /// Euclidean distance to the (extended) reference point.
    pub fn distance(&self) -> f64 {
        self.point.d.hypot(self.overshoot)
    }
}

/// An arc-length parameterized polyline.
///
/// Segments longer than the resample step are subdivided uniformly, so
/// original vertices and the total length are kept exactly. Every vertex
/// carries a unit normal that bisects its two segments; inside a segment the
/// normal is blended linearly. The resulting curvilinear frame has no gaps on
/// the outside of bends, which makes [`ParamPolyline::to_cartesian`] an exact
/// inverse of [`ParamPolyline::project`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParamPolyline {
    points: Vec<Vec2>,
    cum: Vec<f64>,
    tangents: Vec<Vec2>,
    normals: Vec<Vec2>,
    curvature: Vec<f64>,
    resample_step: f64,
    /// Bounding circle `(center, radius)` of each run of [`CHUNK`] segments.
    chunks: Vec<(Vec2, f64)>,
}

/// Segments per bounding circle used to prune projections.
const CHUNK: usize = 16;

fn chunk_bounds(points: &[Vec2]) -> Vec<(Vec2, f64)> {
    let nseg = points.len() - 1;
    (0..nseg.div_ceil(CHUNK))
        .map(|c| {
            let pts = &points[c * CHUNK..=((c + 1) * CHUNK).min(nseg)];
            let (mut lo, mut hi) = (pts[0], pts[0]);
            for p in pts {
                lo = lo.inf(p);
                hi = hi.sup(p);
            }
            let center = (lo + hi) / 2.0;
            let r = pts.iter().map(|p| (p - center).norm()).fold(0.0, f64::max);
            (center, r)
        })
        .collect()
}

/// Build a polyline from raw points. Consecutive duplicates are dropped.
pub fn build_polyline(points: &[Vec2], resample_step: f64) -> Result<ParamPolyline> {
    ParamPolyline::new(points, resample_step)
}

/// Signed curvature per resampled point (positive = turning left).
pub fn curvature_profile(poly: &ParamPolyline) -> Vec<f64> {
    poly.curvature.clone()
}

/// Signed curvature of the circle through three points; 0 when collinear.
pub fn circumcircle_curvature(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    let ab = b - a;
    let bc = c - b;
    let ac = c - a;
    let denom = ab.norm() * bc.norm() * ac.norm();
    if denom < 1e-15 {
        return 0.0;
    }
    2.0 * cross(ab, bc) / denom
}

impl ParamPolyline {
    pub fn new(raw: &[Vec2], resample_step: f64) -> Result<Self> {
        if !(resample_step.is_finite() && resample_step > 0.0) {
            return Err(Error::DegeneratePolyline(format!(
                "resample step must be positive, got {resample_step}"
            )));
        }
        if raw.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(Error::DegeneratePolyline("non-finite point".into()));
        }
        let mut vertices: Vec<Vec2> = Vec::with_capacity(raw.len());
        for &p in raw {
            if vertices.last().is_none_or(|q: &Vec2| (p - q).norm() > DEDUP_EPS) {
                vertices.push(p);
            }
        }
        if vertices.len() < 2 {
            return Err(Error::DegeneratePolyline(format!(
                "need at least 2 distinct points, got {}",
                vertices.len()
            )));
        }

        // Vertex curvature from the raw vertices (exact for points on a circle).
        let nv = vertices.len();
        let mut vertex_kappa = vec![0.0; nv];
        for i in 1..nv - 1 {
            vertex_kappa[i] = circumcircle_curvature(vertices[i - 1], vertices[i], vertices[i + 1]);
        }
        if nv >= 3 {
            vertex_kappa[0] = vertex_kappa[1];
            vertex_kappa[nv - 1] = vertex_kappa[nv - 2];
        }

        let mut points = Vec::with_capacity(nv);
        let mut curvature = Vec::with_capacity(nv);
        points.push(vertices[0]);
        curvature.push(vertex_kappa[0]);
        for i in 0..nv - 1 {
            let (a, b) = (vertices[i], vertices[i + 1]);
            let pieces = ((b - a).norm() / resample_step).ceil().max(1.0) as usize;
            for j in 1..pieces {
                let f = j as f64 / pieces as f64;
                points.push(a + (b - a) * f);
                curvature.push(vertex_kappa[i] * (1.0 - f) + vertex_kappa[i + 1] * f);
            }
            points.push(b);
            curvature.push(vertex_kappa[i + 1]);
        }

        let mut cum = Vec::with_capacity(points.len());
        let mut tangents = Vec::with_capacity(points.len() - 1);
        cum.push(0.0);
        for w in points.windows(2) {
            let e = w[1] - w[0];
            let len = e.norm();
            cum.push(cum.last().unwrap() + len);
            tangents.push(e / len);
        }

        let n = points.len();
        let mut normals = Vec::with_capacity(n);
        normals.push(left_normal(tangents[0]));
        for i in 1..n - 1 {
            let sum = left_normal(tangents[i - 1]) + left_normal(tangents[i]);
            let len = sum.norm();
            normals.push(if len < 1e-9 {
                left_normal(tangents[i - 1])
            } else {
                sum / len
            });
        }
        normals.push(left_normal(tangents[n - 2]));

        Ok(Self {
            chunks: chunk_bounds(&points),
            points,
            cum,
            tangents,
            normals,
            curvature,
            resample_step,
        })
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn cum_arclength(&self) -> &[f64] {
        &self.cum
    }

    pub fn segment_tangents(&self) -> &[Vec2] {
        &self.tangents
    }

    pub fn resample_step(&self) -> f64 {
        self.resample_step
    }

    pub fn length(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    pub fn curvature(&self) -> &[f64] {
        &self.curvature
    }

    fn segment_count(&self) -> usize {
        self.points.len() - 1
    }

    /// Segment index and local parameter for an in-range `s`.
    fn locate(&self, s: f64) -> (usize, f64) {
        let s = s.clamp(0.0, self.length());
        let seg = self
            .cum
            .partition_point(|&c| c <= s)
            .saturating_sub(1)
            .min(self.segment_count() - 1);
        let len = self.cum[seg + 1] - self.cum[seg];
        (seg, ((s - self.cum[seg]) / len).clamp(0.0, 1.0))
    }

    fn blended_normal(&self, seg: usize, t: f64) -> Vec2 {
        let n = self.normals[seg] * (1.0 - t) + self.normals[seg + 1] * t;
        n / n.norm()
    }

    /// Point on the reference at arc length `s`, continued along the end
    /// tangents outside `[0, L]`.
    pub fn point_at(&self, s: f64) -> Vec2 {
        self.to_cartesian(FrenetPoint::new(s, 0.0)).0
    }

    /// Unit tangent of the curvilinear frame at `s`.
    pub fn tangent_at(&self, s: f64) -> Vec2 {
        if s <= 0.0 {
            return self.tangents[0];
        }
        if s >= self.length() {
            return *self.tangents.last().unwrap();
        }
        let (seg, t) = self.locate(s);
        let n = self.blended_normal(seg, t);
        Vec2::new(n.y, -n.x)
    }

    pub fn tangent_heading_at(&self, s: f64) -> f64 {
        let t = self.tangent_at(s);
        t.y.atan2(t.x)
    }

    /// Curvature at `s`, linearly interpolated; held constant beyond the ends.
    pub fn curvature_at(&self, s: f64) -> f64 {
        let (seg, t) = self.locate(s);
        self.curvature[seg] * (1.0 - t) + self.curvature[seg + 1] * t
    }

    /// Cartesian position of a Frenet point. The flag is set when `s` lies
    /// outside `[0, L]` and the end tangent was extrapolated.
    pub fn to_cartesian(&self, fp: FrenetPoint) -> (Vec2, bool) {
        let len = self.length();
        if fp.s < 0.0 {
            let t = self.tangents[0];
            return (self.points[0] + t * fp.s + left_normal(t) * fp.d, true);
        }
        if fp.s > len {
            let t = *self.tangents.last().unwrap();
            let end = *self.points.last().unwrap();
            return (end + t * (fp.s - len) + left_normal(t) * fp.d, true);
        }
        let (seg, t) = self.locate(fp.s);
        let base = self.points[seg] + (self.points[seg + 1] - self.points[seg]) * t;
        (base + self.blended_normal(seg, t) * fp.d, false)
    }

    /// Project a Cartesian point onto the reference.
    ///
    /// Returns the candidate with the smallest distance; among equally near
    /// candidates the one with the smallest `s` wins.
    pub fn project(&self, p: Vec2) -> Projection {
        let nseg = self.segment_count();

        // Euclidean distance to each segment bounds |d| of any normal-line
        // solution on it from below, which lets us prune most segments.
        let seg_dist = |i: usize| -> f64 {
            let a = self.points[i];
            let e = self.points[i + 1] - a;
            let w = p - a;
            let t = (w.dot(&e) / e.norm_squared()).clamp(0.0, 1.0);
            (w - e * t).norm()
        };
        // Lower bound of seg_dist over each chunk. Any chunk's exact minimum
        // caps the global one, so chunks above that cap hold no candidate.
        let chunk_lb: Vec<f64> = self
            .chunks
            .iter()
            .map(|(c, r)| ((p - c).norm() - r).max(0.0))
            .collect();
        let chunk_segs = |c: usize| c * CHUNK..((c + 1) * CHUNK).min(nseg);
        let seed = (0..chunk_lb.len())
            .min_by(|&a, &b| chunk_lb[a].total_cmp(&chunk_lb[b]))
            .unwrap_or(0);
        let cap = chunk_segs(seed).map(seg_dist).fold(f64::INFINITY, f64::min);
        let mut nearest = 0;
        let mut nearest_dist = f64::INFINITY;
        for c in (0..chunk_lb.len()).filter(|&c| chunk_lb[c] <= cap) {
            for i in chunk_segs(c) {
                let dist = seg_dist(i);
                if dist < nearest_dist {
                    nearest_dist = dist;
                    nearest = i;
                }
            }
        }

        let mut best: Option<(f64, Projection)> = None;
        let offer = |dist: f64, cand: Projection, best: &mut Option<(f64, Projection)>| {
            let better = match best {
                None => true,
                Some((bd, bp)) => {
                    dist < *bd - TIE_EPS
                        || ((dist - *bd).abs() <= TIE_EPS && cand.extended_s() < bp.extended_s())
                }
            };
            if better {
                *best = Some((dist, cand));
            }
        };

        // Before the start, along the extended first tangent.
        let t0 = self.tangents[0];
        let w0 = p - self.points[0];
        let along0 = w0.dot(&t0);
        if along0 < 0.0 {
            offer(
                w0.norm(),
                Projection {
                    point: FrenetPoint::new(0.0, cross(t0, w0)),
                    overshoot: -along0,
                    kind: ProjectionKind::BeforeStart,
                },
                &mut best,
            );
        }

        let lo = nearest.saturating_sub(2);
        let hi = (nearest + 2).min(nseg - 1);
        let visit = |i: usize, best: &mut Option<(f64, Projection)>| {
            if let Some((bd, _)) = *best {
                if seg_dist(i) > bd + TIE_EPS {
                    return;
                }
            }
            for t in self.normal_line_roots(i, p) {
                let base = self.points[i] + (self.points[i + 1] - self.points[i]) * t;
                let n = self.blended_normal(i, t);
                let d = (p - base).dot(&n);
                let s = self.cum[i] + t * (self.cum[i + 1] - self.cum[i]);
                offer(
                    d.abs(),
                    Projection {
                        point: FrenetPoint::new(s, d),
                        overshoot: 0.0,
                        kind: ProjectionKind::Interior,
                    },
                    best,
                );
            }
        };
        for i in lo..=hi {
            visit(i, &mut best);
        }
        for c in 0..chunk_lb.len() {
            if best.is_some_and(|(bd, _)| chunk_lb[c] > bd + TIE_EPS) {
                continue;
            }
            for i in chunk_segs(c).filter(|i| !(lo..=hi).contains(i)) {
                visit(i, &mut best);
            }
        }

        let tn = *self.tangents.last().unwrap();
        let wn = p - *self.points.last().unwrap();
        let along_n = wn.dot(&tn);
        if along_n > 0.0 {
            offer(
                wn.norm(),
                Projection {
                    point: FrenetPoint::new(self.length(), cross(tn, wn)),
                    overshoot: along_n,
                    kind: ProjectionKind::AfterEnd,
                },
                &mut best,
            );
        }

        if let Some((_, proj)) = best {
            return proj;
        }

        let a = self.points[nearest];
        let e = self.points[nearest + 1] - a;
        let t = ((p - a).dot(&e) / e.norm_squared()).clamp(0.0, 1.0);
        let foot = a + e * t;
        let side = cross(self.tangents[nearest], p - foot).signum();
        Projection {
            point: FrenetPoint::new(self.cum[nearest] + t * e.norm(), side * (p - foot).norm()),
            overshoot: 0.0,
            kind: ProjectionKind::Fallback,
        }
    }

    /// Parameters `t` in `[0, 1]` where the blended normal line of segment
    /// `i` passes through `p`: `(p - a - t e) x (n_a + t (n_b - n_a)) = 0`.
    fn normal_line_roots(&self, i: usize, p: Vec2) -> impl Iterator<Item = f64> {
        let a = self.points[i];
        let e = self.points[i + 1] - a;
        let w = p - a;
        let na = self.normals[i];
        let m = self.normals[i + 1] - na;

        let qa = -cross(e, m);
        let qb = cross(w, m) - cross(e, na);
        let qc = cross(w, na);
        let f = move |t: f64| cross(w - e * t, na + m * t);
        let df = move |t: f64| cross(-e, na + m * t) + cross(w - e * t, m);

        let mut roots = [f64::NAN; 2];
        let scale = qb.abs().max(qc.abs()).max(1e-300);
        if qa.abs() <= 1e-14 * scale {
            if qb != 0.0 {
                roots[0] = -qc / qb;
            }
        } else {
            let disc = qb * qb - 4.0 * qa * qc;
            if disc >= 0.0 {
                let q = -0.5 * (qb + qb.signum() * disc.sqrt());
                roots[0] = q / qa;
                if q != 0.0 {
                    roots[1] = qc / q;
                }
            }
        }
        let normals_ok = move |t: f64| (na + m * t).norm() > 1e-9;
        roots.into_iter().filter_map(move |r| {
            if !r.is_finite() || !(-ROOT_EPS..=1.0 + ROOT_EPS).contains(&r) {
                return None;
            }
            let mut t = r;
            for _ in 0..2 {
                let slope = df(t);
                if slope.abs() > 1e-300 {
                    t -= f(t) / slope;
                }
            }
            let t = t.clamp(0.0, 1.0);
            normals_ok(t).then_some(t)
        })
    }

    /// Raw points between arc lengths `s0 < s1`, with interpolated ends.
    pub fn slice(&self, s0: f64, s1: f64) -> Vec<Vec2> {
        let s0 = s0.clamp(0.0, self.length());
        let s1 = s1.clamp(s0, self.length());
        let mut out = vec![self.point_at(s0)];
        for (i, &c) in self.cum.iter().enumerate() {
            if c > s0 && c < s1 {
                out.push(self.points[i]);
            }
        }
        out.push(self.point_at(s1));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn arc(radius: f64, from: f64, to: f64, samples: usize) -> Vec<Vec2> {
        (0..=samples)
            .map(|i| {
                let a = from + (to - from) * i as f64 / samples as f64;
                Vec2::new(radius * a.cos(), radius * a.sin())
            })
            .collect()
    }

    /// Quarter circle R=10 sampled every degree, counter-clockwise.
    fn quarter_circle() -> ParamPolyline {
        build_polyline(&arc(10.0, 0.0, FRAC_PI_2, 90), 0.5).unwrap()
    }

    fn x_axis(len: f64) -> ParamPolyline {
        build_polyline(&[Vec2::new(0.0, 0.0), Vec2::new(len, 0.0)], 0.5).unwrap()
    }

    #[test]
    fn straight_ten_metres_gives_21_points() {
        let p = x_axis(10.0);
        assert_eq!(p.points().len(), 21);
        assert_eq!(p.length(), 10.0);
        assert_eq!(p.points()[0], Vec2::new(0.0, 0.0));
        assert_eq!(*p.points().last().unwrap(), Vec2::new(10.0, 0.0));
    }

    #[test]
    fn duplicates_are_dropped() {
        let p = build_polyline(
            &[Vec2::new(0.0, 0.0), Vec2::new(0.0, 0.0), Vec2::new(5.0, 0.0)],
            0.5,
        )
        .unwrap();
        assert_eq!(p.length(), 5.0);
        assert!(matches!(
            build_polyline(&[Vec2::new(1.0, 1.0), Vec2::new(1.0, 1.0)], 0.5),
            Err(Error::DegeneratePolyline(_))
        ));
    }

    #[test]
    fn quarter_circle_length_converges_to_arc() {
        let p = quarter_circle();
        assert!((p.length() - 10.0 * FRAC_PI_2).abs() < 2e-3, "{}", p.length());
    }

    #[test]
    fn resampling_preserves_length_and_spacing() {
        let raw = [Vec2::new(0.0, 0.0), Vec2::new(3.3, 1.1), Vec2::new(7.0, -2.0)];
        let p = build_polyline(&raw, 0.5).unwrap();
        let raw_len = (raw[1] - raw[0]).norm() + (raw[2] - raw[1]).norm();
        assert!((p.length() - raw_len).abs() < 1e-9);
        assert!(p
            .cum_arclength()
            .windows(2)
            .all(|w| w[1] > w[0] && w[1] - w[0] <= 0.5 + 1e-12));
        assert!(p
            .segment_tangents()
            .iter()
            .all(|t| (t.norm() - 1.0).abs() < 1e-9));
    }

    #[test]
    fn axis_aligned_projection() {
        let pr = x_axis(100.0).project(Vec2::new(10.0, 2.0));
        assert!((pr.point.s - 10.0).abs() < 1e-12);
        assert!((pr.point.d - 2.0).abs() < 1e-12);
        assert_eq!(pr.overshoot, 0.0);
    }

    #[test]
    fn endpoint_clamp_reports_overshoot() {
        let pr = x_axis(100.0).project(Vec2::new(105.0, 1.0));
        assert_eq!(pr.point.s, 100.0);
        assert!((pr.point.d - 1.0).abs() < 1e-12);
        assert!((pr.overshoot - 5.0).abs() < 1e-12);
        assert_eq!(pr.kind, ProjectionKind::AfterEnd);
        assert!((pr.extended_s() - 105.0).abs() < 1e-12);
    }

    /// Brute-force nearest point on the densely sampled polyline.
    fn dense_oracle(raw: &[Vec2], p: Vec2, res: f64) -> (f64, f64) {
        let mut best = (f64::INFINITY, 0.0, 0.0);
        let mut s0 = 0.0;
        for w in raw.windows(2) {
            let e = w[1] - w[0];
            let len = e.norm();
            let n = (len / res).ceil() as usize;
            for j in 0..=n {
                let f = j as f64 / n as f64;
                let q = w[0] + e * f;
                let dist = (p - q).norm();
                if dist < best.0 {
                    let side = cross(e, p - q).signum();
                    best = (dist, s0 + f * len, side * dist);
                }
            }
            s0 += len;
        }
        (best.1, best.2)
    }

    #[test]
    fn outside_of_ccw_arc_is_right_of_travel() {
        let p = quarter_circle();
        let pr = p.project(Vec2::new(0.0, 11.0));
        let (s_ref, d_ref) = dense_oracle(&arc(10.0, 0.0, FRAC_PI_2, 90), Vec2::new(0.0, 11.0), 1e-3);
        assert!((pr.point.s - 15.708).abs() < 2e-3, "{pr:?}");
        assert!((pr.point.d + 1.0).abs() < 2e-3, "{pr:?}");
        assert!((pr.point.s - s_ref).abs() < 2e-3 && (pr.point.d - d_ref).abs() < 2e-3);
    }

    #[test]
    fn to_cartesian_on_quarter_circle() {
        let circle = quarter_circle();
        let pr = circle.project(Vec2::new(0.0, 11.0));
        let (q, _) = circle.to_cartesian(FrenetPoint::new(pr.extended_s(), pr.point.d));
        assert!((q - Vec2::new(0.0, 11.0)).norm() < 1e-9, "{q:?}");
        let (q, flag) = x_axis(100.0).to_cartesian(FrenetPoint::new(10.0, 2.0));
        assert_eq!(q, Vec2::new(10.0, 2.0));
        assert!(!flag);
    }

    #[test]
    fn straight_curvature_is_zero() {
        let p = build_polyline(&[Vec2::new(0.0, 0.0), Vec2::new(3.0, 4.0), Vec2::new(6.0, 8.0)], 0.5)
            .unwrap();
        assert!(curvature_profile(&p).iter().all(|k| k.abs() < 1e-9));
    }

    #[test]
    fn circle_curvature_sign_follows_turn_direction() {
        let ccw = build_polyline(&arc(20.0, 0.0, PI, 360), 0.5).unwrap();
        assert!(curvature_profile(&ccw).iter().all(|k| (k - 0.05).abs() < 1e-3));
        let cw = build_polyline(&arc(20.0, PI, 0.0, 360), 0.5).unwrap();
        assert!(curvature_profile(&cw).iter().all(|k| (k + 0.05).abs() < 1e-3));
    }

    #[test]
    fn equidistant_point_takes_smallest_s() {
        // A U-turn: the centre is equidistant from both straight legs.
        let mut raw = vec![Vec2::new(-10.0, -5.0), Vec2::new(0.0, -5.0)];
        raw.extend(arc(5.0, -FRAC_PI_2, FRAC_PI_2, 60).into_iter().skip(1));
        raw.push(Vec2::new(-10.0, 5.0));
        let p = build_polyline(&raw, 0.5).unwrap();
        let pr = p.project(Vec2::new(-5.0, 0.0));
        assert!((pr.point.s - 5.0).abs() < 1e-9, "{pr:?}");
        assert!((pr.point.d - 5.0).abs() < 1e-9);
    }

    #[test]
    fn slice_interpolates_ends() {
        let pts = x_axis(10.0).slice(2.25, 7.75);
        assert_eq!(pts[0], Vec2::new(2.25, 0.0));
        assert_eq!(*pts.last().unwrap(), Vec2::new(7.75, 0.0));
    }
}
