//! Road-geometry perturbations ahead of the target vehicle.
//!
//! In a frame centered on the TV and aligned with its heading, every scene
//! point whose longitudinal coordinate exceeds the onset distance `b` is
//! shifted sideways by `g(x - b)`. Three offset families are provided:
//!
//! * `smooth`: `c u^2` up to `u_sat`, then continued along its tangent,
//! * `double`: raised-cosine S-curve `A (1 - cos(2 pi u / lambda)) / 2` for
//!   one wavelength, then back to zero,
//! * `ripple`: `A sin(2 pi u / lambda)` faded in linearly over the first
//!   wavelength so the offset has a continuous slope at the onset.
//!
//! Afterwards the TV history and ground truth are slowed down uniformly, if
//! needed, so the future path never demands more than 0.7 g laterally.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{circumcircle_curvature, heading_vector, normalize_angle, ParamPolyline, Vec2, DEFAULT_RESAMPLE_STEP};
use crate::metrics::{worse_of, SceneMetrics};
use crate::scene::{AgentState, LanePose, PoseAttr, Scene};

pub const GRAVITY: f64 = 9.81;
pub const LATERAL_LIMIT_FRACTION: f64 = 0.7;

const RESCALE_ITERATIONS: usize = 50;
pub const DEFAULT_ONSET: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum AttackFamily {
    Smooth { c: f64, u_sat: f64 },
    Double { amplitude: f64, wavelength: f64 },
    Ripple { amplitude: f64, wavelength: f64 },
}

impl AttackFamily {
    pub fn smooth() -> Self {
        Self::Smooth { c: 0.008, u_sat: 50.0 }
    }

    pub fn double() -> Self {
        Self::Double {
            amplitude: 10.0,
            wavelength: 60.0,
        }
    }

    pub fn ripple() -> Self {
        Self::Ripple {
            amplitude: 3.0,
            wavelength: 30.0,
        }
    }

    pub fn all_defaults() -> [Self; 3] {
        [Self::smooth(), Self::double(), Self::ripple()]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Smooth { .. } => "smooth",
            Self::Double { .. } => "double",
            Self::Ripple { .. } => "ripple",
        }
    }

    /// Same family with its size parameter (`c` or `A`) replaced.
    pub fn with_amplitude(self, a: f64) -> Self {
        match self {
            Self::Smooth { u_sat, .. } => Self::Smooth { c: a, u_sat },
            Self::Double { wavelength, .. } => Self::Double {
                amplitude: a,
                wavelength,
            },
            Self::Ripple { wavelength, .. } => Self::Ripple {
                amplitude: a,
                wavelength,
            },
        }
    }

    pub fn amplitude(&self) -> f64 {
        match *self {
            Self::Smooth { c, .. } => c,
            Self::Double { amplitude, .. } | Self::Ripple { amplitude, .. } => amplitude,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::InvalidParams(format!("{what} = {v}")));
        match *self {
            Self::Smooth { c, u_sat } => {
                if !(c >= 0.0) {
                    return bad("c", c);
                }
                if !(u_sat > 0.0) {
                    return bad("u_sat", u_sat);
                }
            }
            Self::Double { amplitude, wavelength } | Self::Ripple { amplitude, wavelength } => {
                if !(amplitude >= 0.0) {
                    return bad("amplitude", amplitude);
                }
                if !(wavelength > 0.0) {
                    return bad("wavelength", wavelength);
                }
            }
        }
        Ok(())
    }

    /// Default parameters of a family given by name.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "smooth" => Ok(Self::smooth()),
            "double" => Ok(Self::double()),
            "ripple" => Ok(Self::ripple()),
            _ => Err(Error::InvalidParams(format!("unknown attack `{name}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Left,
    Right,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Self::Left => 1.0,
            Self::Right => -1.0,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Left => "left",
            Self::Right => "right",
        })
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(Self::Left),
            "right" => Ok(Self::Right),
            _ => Err(Error::InvalidParams(format!("unknown direction `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackSpec {
    #[serde(flatten)]
    pub family: AttackFamily,
    pub direction: Direction,
    pub b: f64,
    pub g: f64,
    pub a_lat_max_fraction: f64,
}

impl AttackSpec {
    pub fn new(family: AttackFamily, direction: Direction) -> Self {
        Self {
            family,
            direction,
            b: DEFAULT_ONSET,
            g: GRAVITY,
            a_lat_max_fraction: LATERAL_LIMIT_FRACTION,
        }
    }

    pub fn with_onset(mut self, b: f64) -> Self {
        self.b = b;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b > 0.0) {
            return Err(Error::InvalidParams(format!("onset b = {}", self.b)));
        }
        if !(self.g > 0.0 && self.a_lat_max_fraction > 0.0) {
            return Err(Error::InvalidParams("lateral limit must be positive".into()));
        }
        self.family.validate()
    }

    pub fn lateral_limit(&self) -> f64 {
        self.a_lat_max_fraction * self.g
    }
}

/// Unsigned offset `g(u)` and its slope.
fn offset_and_slope(family: &AttackFamily, u: f64) -> (f64, f64) {
    if u <= 0.0 {
        return (0.0, 0.0);
    }
    match *family {
        AttackFamily::Smooth { c, u_sat } => {
            if u <= u_sat {
                (c * u * u, 2.0 * c * u)
            } else {
                let slope = 2.0 * c * u_sat;
                (c * u_sat * u_sat + slope * (u - u_sat), slope)
            }
        }
        AttackFamily::Double { amplitude: a, wavelength: l } => {
            if u <= l {
                let w = TAU / l;
                (a * (1.0 - (w * u).cos()) / 2.0, a * w * (w * u).sin() / 2.0)
            } else {
                (0.0, 0.0)
            }
        }
        AttackFamily::Ripple { amplitude: a, wavelength: l } => {
            let w = TAU / l;
            let (sin, cos) = (w * u).sin_cos();
            if u <= l {
                let ramp = u / l;
                (a * sin * ramp, a * (w * cos * ramp + sin / l))
            } else {
                (a * sin, a * w * cos)
            }
        }
    }
}

/// Signed lateral offset at `u` metres past the onset; zero for `u < 0`.
pub fn lateral_offset(family: &AttackFamily, direction: Direction, u: f64) -> Result<f64> {
    family.validate()?;
    Ok(direction.sign() * offset_and_slope(family, u).0)
}

/// Slope `dg/du` of [`lateral_offset`].
pub fn lateral_slope(family: &AttackFamily, direction: Direction, u: f64) -> Result<f64> {
    family.validate()?;
    Ok(direction.sign() * offset_and_slope(family, u).1)
}

/// TV-centered, heading-aligned coordinates.
#[derive(Debug, Clone, Copy)]
pub struct WorkingFrame {
    origin: Vec2,
    axis: Vec2,
}

impl WorkingFrame {
    pub fn of_tv(scene: &Scene) -> Result<Self> {
        let cur = scene.tv().current();
        if !cur.heading.is_finite() || !(cur.x.is_finite() && cur.y.is_finite()) {
            return Err(Error::InvalidParams("degenerate TV pose".into()));
        }
        Ok(Self {
            origin: cur.position(),
            axis: heading_vector(cur.heading),
        })
    }

    pub fn to_local(&self, p: Vec2) -> Vec2 {
        let q = p - self.origin;
        Vec2::new(self.axis.dot(&q), self.axis.perp(&q))
    }

    pub fn to_world(&self, q: Vec2) -> Vec2 {
        self.origin + self.axis * q.x + Vec2::new(-self.axis.y, self.axis.x) * q.y
    }

    pub fn heading(&self) -> f64 {
        self.axis.y.atan2(self.axis.x)
    }
}

/// The scene shear: positions past the onset move sideways; directions are
/// mapped through the shear's Jacobian.
struct Shear<'a> {
    frame: WorkingFrame,
    spec: &'a AttackSpec,
}

impl Shear<'_> {
    /// Returns `None` for points that stay untouched.
    fn point(&self, p: Vec2) -> Option<Vec2> {
        let q = self.frame.to_local(p);
        if q.x <= self.spec.b {
            return None;
        }
        let (g, _) = offset_and_slope(&self.spec.family, q.x - self.spec.b);
        Some(self.frame.to_world(Vec2::new(q.x, q.y + self.spec.direction.sign() * g)))
    }

    /// Shifted position, new heading and length gain of a unit direction.
    fn pose(&self, p: Vec2, heading: f64) -> Option<(Vec2, f64, f64)> {
        let moved = self.point(p)?;
        let q = self.frame.to_local(p);
        let (_, slope) = offset_and_slope(&self.spec.family, q.x - self.spec.b);
        let rel = heading - self.frame.heading();
        let (dx, dy) = (rel.cos(), rel.sin() + self.spec.direction.sign() * slope * rel.cos());
        let gain = dx.hypot(dy);
        Some((moved, normalize_angle(self.frame.heading() + dy.atan2(dx)), gain))
    }
}

/// Result of [`apply_attack`].
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedScene {
    pub scene: Scene,
    pub spec: AttackSpec,
    pub speed_scale: f64,
    /// Transformed and retimed ground truth (also stored in `scene`).
    pub pseudo_gt: Vec<Vec2>,
    pub kappa_max: f64,
    pub v_peak: f64,
}

/// Perturb every scene point beyond the onset, then slow the TV down if
/// the new path would exceed the lateral-acceleration limit.
pub fn apply_attack(scene: &Scene, spec: &AttackSpec) -> Result<PerturbedScene> {
    spec.validate()?;
    if !scene.is_cartesian() {
        return Err(Error::WrongFrame { expected: "cartesian" });
    }
    let gt = scene
        .gt_future
        .clone()
        .ok_or_else(|| Error::MissingGroundTruth(scene.scene_id.clone()))?;
    let frame = WorkingFrame::of_tv(scene)?;
    if spec.family.amplitude() == 0.0 {
        return Ok(PerturbedScene {
            scene: scene.clone(),
            spec: *spec,
            speed_scale: 1.0,
            pseudo_gt: gt,
            kappa_max: 0.0,
            v_peak: 0.0,
        });
    }
    let shear = Shear { frame, spec };
    let mut out = scene.clone();

    for agent in &mut out.agents {
        for st in &mut agent.states {
            if let Some((p, heading, gain)) = shear.pose(st.position(), st.heading) {
                st.x = p.x;
                st.y = p.y;
                st.heading = heading;
                st.speed *= gain;
            }
        }
    }
    for lane in &mut out.lanes {
        for pose in &mut lane.centerline {
            let PoseAttr::Heading(h) = pose.attr else {
                return Err(Error::WrongFrame { expected: "cartesian" });
            };
            if let Some((p, heading, _)) = shear.pose(pose.position(), h) {
                *pose = LanePose {
                    x: p.x,
                    y: p.y,
                    attr: PoseAttr::Heading(heading),
                };
            }
        }
    }
    let sheared_gt: Vec<Vec2> = gt.iter().map(|&p| shear.point(p).unwrap_or(p)).collect();

    let tv_id = out.tv_id.clone();
    let tv = out.agents.iter_mut().find(|a| a.agent_id == tv_id).expect("tv exists");
    let r = feasibility_rescale(&tv.states, &sheared_gt, spec.lateral_limit())?;
    if r.speed_scale < 1.0 {
        tv.states = r.history;
        out.gt_future = Some(r.pseudo_gt.clone());
    } else {
        out.gt_future = Some(sheared_gt.clone());
    }
    Ok(PerturbedScene {
        pseudo_gt: if r.speed_scale < 1.0 { r.pseudo_gt } else { sheared_gt },
        scene: out,
        spec: *spec,
        speed_scale: r.speed_scale,
        kappa_max: r.kappa_max,
        v_peak: r.v_peak,
    })
}

/// Output of [`feasibility_rescale`].
#[derive(Debug, Clone, PartialEq)]
pub struct Rescaled {
    pub history: Vec<AgentState>,
    pub pseudo_gt: Vec<Vec2>,
    pub speed_scale: f64,
    pub kappa_max: f64,
    pub v_peak: f64,
}

/// The path swept by the future: current position followed by the ground
/// truth. Stationary repeats are dropped.
pub fn future_path(current: Vec2, gt: &[Vec2]) -> Result<ParamPolyline> {
    let mut pts = Vec::with_capacity(gt.len() + 1);
    pts.push(current);
    pts.extend_from_slice(gt);
    // Inserted points only interpolate the vertex curvature.
    ParamPolyline::new(&pts, DEFAULT_RESAMPLE_STEP)
}

/// Finite-difference speeds along `current, gt...`.
pub fn future_speeds(current: Vec2, gt: &[Vec2], dt: f64) -> Vec<f64> {
    std::iter::once(current)
        .chain(gt.iter().copied())
        .collect::<Vec<_>>()
        .windows(2)
        .map(|w| (w[1] - w[0]).norm() / dt)
        .collect()
}

/// Cumulative arc length along a point sequence.
fn arcs(pts: &[Vec2]) -> Vec<f64> {
    let mut out = Vec::with_capacity(pts.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in pts.windows(2) {
        acc += (w[1] - w[0]).norm();
        out.push(acc);
    }
    out
}

/// Point at arc length `a` along `pts` (clamped), with the segment index
/// and local fraction.
fn along(pts: &[Vec2], cum: &[f64], a: f64) -> (Vec2, usize, f64) {
    let last = pts.len() - 1;
    if a <= 0.0 || last == 0 {
        return (pts[0], 0, 0.0);
    }
    if a >= cum[last] {
        return (pts[last], last.saturating_sub(1), 1.0);
    }
    let j = cum.partition_point(|&c| c <= a) - 1;
    let len = cum[j + 1] - cum[j];
    let t = if len > 0.0 { (a - cum[j]) / len } else { 0.0 };
    (pts[j] + (pts[j + 1] - pts[j]) * t, j, t)
}

/// Uniformly slow the TV so that `v^2 kappa` along its future path stays
/// within `limit`; positions slide along the unchanged geometric path with
/// the current position fixed.
pub fn feasibility_rescale(history: &[AgentState], pseudo_gt: &[Vec2], limit: f64) -> Result<Rescaled> {
    let cur = *history
        .last()
        .ok_or_else(|| Error::InsufficientHistory("empty TV history".into()))?;
    if pseudo_gt.is_empty() {
        return Err(Error::InvalidParams("zero-length future path".into()));
    }
    let dt = if history.len() >= 2 {
        cur.t - history[history.len() - 2].t
    } else {
        crate::scene::DT
    };
    // A stationary future has no path to bend.
    let kappa_max = future_path(cur.position(), pseudo_gt)
        .map(|path| path.curvature().iter().fold(0.0f64, |m, k| m.max(k.abs())))
        .unwrap_or(0.0);
    let v_peak = history
        .iter()
        .map(|s| s.speed)
        .chain(future_speeds(cur.position(), pseudo_gt, dt))
        .fold(0.0f64, f64::max);
    let speed_scale = if kappa_max > 0.0 && v_peak > 0.0 {
        ((limit / kappa_max).sqrt() / v_peak).min(1.0)
    } else {
        1.0
    };
    let fut: Vec<Vec2> = std::iter::once(cur.position()).chain(pseudo_gt.iter().copied()).collect();
    let fut_cum = arcs(&fut);
    let retime = |scale: f64| -> Vec<Vec2> {
        fut_cum[1..]
            .iter()
            .map(|&a| along(&fut, &fut_cum, a * scale).0)
            .collect()
    };
    // Retimed waypoints sit between the original vertices, where the chord
    // path bends more sharply; shrink until the output itself complies.
    let mut speed_scale = speed_scale;
    let mut new_gt = retime(speed_scale);
    for _ in 0..RESCALE_ITERATIONS {
        let a = max_lateral_acceleration(cur.position(), &new_gt, dt);
        if a <= limit {
            break;
        }
        // v^2 kappa of the chord path grows at most quadratically and at
        // least linearly in the scale, so this step lands at or below the limit.
        speed_scale *= limit / a;
        new_gt = retime(speed_scale);
    }
    if speed_scale >= 1.0 {
        return Ok(Rescaled {
            history: history.to_vec(),
            pseudo_gt: pseudo_gt.to_vec(),
            speed_scale: 1.0,
            kappa_max,
            v_peak,
        });
    }

    // History walked backwards from the current state.
    let back: Vec<Vec2> = history.iter().rev().map(AgentState::position).collect();
    let back_cum = arcs(&back);
    let n = history.len();
    let new_history = history
        .iter()
        .enumerate()
        .map(|(i, st)| {
            let k = n - 1 - i;
            let (p, j, t) = along(&back, &back_cum, back_cum[k] * speed_scale);
            let h0 = history[n - 1 - j].heading;
            let h1 = history[n - 1 - (j + 1).min(n - 1)].heading;
            AgentState {
                t: st.t,
                x: p.x,
                y: p.y,
                heading: normalize_angle(h0 + normalize_angle(h1 - h0) * t),
                speed: st.speed * speed_scale,
                yaw_rate: st.yaw_rate.map(|w| w * speed_scale),
                accel: st.accel.map(|a| a * speed_scale),
            }
        })
        .collect();
    Ok(Rescaled {
        history: new_history,
        pseudo_gt: new_gt,
        speed_scale,
        kappa_max,
        v_peak,
    })
}

/// Largest `v^2 kappa` over the interior waypoints of `current, gt...`,
/// with central-difference speeds and three-point circle curvature.
pub fn max_lateral_acceleration(current: Vec2, gt: &[Vec2], dt: f64) -> f64 {
    let pts: Vec<Vec2> = std::iter::once(current).chain(gt.iter().copied()).collect();
    pts.windows(3)
        .map(|w| {
            let v = (w[2] - w[0]).norm() / (2.0 * dt);
            v * v * circumcircle_curvature(w[0], w[1], w[2]).abs()
        })
        .fold(0.0, f64::max)
}

/// Reflection across the TV's heading axis.
pub fn mirror_scene(scene: &Scene) -> Result<Scene> {
    let frame = WorkingFrame::of_tv(scene)?;
    let h0 = frame.heading();
    let m = |p: Vec2| {
        let q = frame.to_local(p);
        frame.to_world(Vec2::new(q.x, -q.y))
    };
    let mh = |h: f64| normalize_angle(2.0 * h0 - h);
    let mut out = scene.clone();
    for agent in &mut out.agents {
        for st in &mut agent.states {
            let p = m(st.position());
            st.x = p.x;
            st.y = p.y;
            st.heading = mh(st.heading);
            st.yaw_rate = st.yaw_rate.map(|w| -w);
        }
    }
    for lane in &mut out.lanes {
        for pose in &mut lane.centerline {
            let p = m(pose.position());
            pose.x = p.x;
            pose.y = p.y;
            pose.attr = match pose.attr {
                PoseAttr::Heading(h) => PoseAttr::Heading(mh(h)),
                PoseAttr::Curvature(k) => PoseAttr::Curvature(-k),
            };
        }
    }
    if let Some(gt) = &mut out.gt_future {
        gt.iter_mut().for_each(|p| *p = m(*p));
    }
    Ok(out)
}

/// Points of `original` with working-frame x ≤ b that differ bit-wise in
/// `perturbed`. The TV's own history and future are skipped when the
/// attack retimed them.
pub fn onset_violations(original: &Scene, perturbed: &PerturbedScene) -> Result<Vec<String>> {
    let frame = WorkingFrame::of_tv(original)?;
    let b = perturbed.spec.b;
    let retimed = perturbed.speed_scale < 1.0;
    let mut bad = Vec::new();
    let keep = |p: Vec2| frame.to_local(p).x <= b;
    for (a, a2) in original.agents.iter().zip(&perturbed.scene.agents) {
        if retimed && a.agent_id == original.tv_id {
            continue;
        }
        for (i, (s, s2)) in a.states.iter().zip(&a2.states).enumerate() {
            if keep(s.position()) && s != s2 {
                bad.push(format!("agent {} state {i}", a.agent_id));
            }
        }
    }
    for (l, l2) in original.lanes.iter().zip(&perturbed.scene.lanes) {
        for (i, (p, p2)) in l.centerline.iter().zip(&l2.centerline).enumerate() {
            if keep(p.position()) && p != p2 {
                bad.push(format!("lane {} point {i}", l.id));
            }
        }
    }
    if !retimed {
        if let (Some(g), Some(g2)) = (&original.gt_future, &perturbed.scene.gt_future) {
            for (i, (p, p2)) in g.iter().zip(g2).enumerate() {
                if keep(*p) && p != p2 {
                    bad.push(format!("gt waypoint {i}"));
                }
            }
        }
    }
    Ok(bad)
}

/// Evaluate both directions and keep the worse value of every metric.
pub fn worst_of_directions(
    scene: &Scene,
    family: AttackFamily,
    b: f64,
    mut evaluator: impl FnMut(&PerturbedScene) -> Result<SceneMetrics>,
) -> Result<SceneMetrics> {
    let mut rows = Vec::with_capacity(2);
    for dir in [Direction::Left, Direction::Right] {
        let p = apply_attack(scene, &AttackSpec::new(family, dir).with_onset(b))?;
        let mut row = evaluator(&p)?;
        row.speed_scale = p.speed_scale;
        rows.push(row);
    }
    let mut worst = worse_of(&rows[0], &rows[1]);
    worst.attack = Some(family.name().to_string());
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets_at_reference_points() {
        let l = Direction::Left;
        for f in AttackFamily::all_defaults() {
            assert_eq!(lateral_offset(&f, l, -3.0).unwrap(), 0.0);
        }
        let smooth = AttackFamily::Smooth { c: 0.01, u_sat: 50.0 };
        assert!((lateral_offset(&smooth, l, 10.0).unwrap() - 1.0).abs() < 1e-12);
        let double = AttackFamily::Double {
            amplitude: 8.0,
            wavelength: 40.0,
        };
        assert!((lateral_offset(&double, l, 20.0).unwrap() - 8.0).abs() < 1e-12);
        assert!((lateral_offset(&double, Direction::Right, 20.0).unwrap() + 8.0).abs() < 1e-12);
        assert!(lateral_offset(&AttackFamily::Double { amplitude: 1.0, wavelength: 0.0 }, l, 1.0).is_err());
    }

    #[test]
    fn offsets_are_c1() {
        for f in AttackFamily::all_defaults() {
            let knots = match f {
                AttackFamily::Smooth { u_sat, .. } => vec![0.0, u_sat],
                AttackFamily::Double { wavelength, .. } | AttackFamily::Ripple { wavelength, .. } => {
                    vec![0.0, wavelength]
                }
            };
            for u in knots {
                let e = 1e-7;
                let (g0, d0) = offset_and_slope(&f, u - e);
                let (g1, d1) = offset_and_slope(&f, u + e);
                assert!((g1 - g0).abs() < 1e-5, "{f:?} jumps at {u}");
                assert!((d1 - d0).abs() < 1e-5, "{f:?} kinks at {u}");
            }
            // Slope matches a finite difference of the value.
            for u in [3.3, 17.0, 44.0, 71.0] {
                let e = 1e-6;
                let fd = (offset_and_slope(&f, u + e).0 - offset_and_slope(&f, u - e).0) / (2.0 * e);
                assert!((fd - offset_and_slope(&f, u).1).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn rescale_arithmetic() {
        let limit = LATERAL_LIMIT_FRACTION * GRAVITY;
        let v_max = (limit / 0.05f64).sqrt();
        assert!((v_max - 11.719).abs() < 1e-3);
        assert!((v_max / 20.0 - 0.586).abs() < 1e-3);
    }
}
