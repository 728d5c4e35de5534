//! Scene domain types and the scenario file format.
//!
//! A [`Scene`] holds the timestamped state histories of all agents, a lane
//! graph, the id of the target vehicle (TV) and optionally its ground-truth
//! future. Scenes are either in the Cartesian world frame or in the Frenet
//! frame of one centerline sequence; the frame decides what the third channel
//! of every [`LanePose`] means (tangent heading vs. curvature) and is carried
//! by [`PoseAttr`] so the two can never be confused.
//!
//! On disk a scene is one UTF-8 JSON document:
//!
//! ```text
//! {"scene_id", "dt", "tv_id", "frame": {"tag": "cartesian"|"frenet", "centerline_index"?},
//!  "agents": [{"id", "states": [[t, x, y, heading, speed, yaw_rate, accel], ...]}],
//!  "lanes": [{"id", "width", "centerline": [[x, y, theta_or_kappa], ...],
//!             "successors": [..], "predecessors": [..]}],
//!  "gt_future": [[x, y], ...]?}
//! ```

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, Vec2};

/// Sampling period of histories and futures, seconds.
pub const DT: f64 = 0.1;
/// Past steps before the current state (2 s).
pub const HISTORY_STEPS: usize = 20;
/// Predicted / ground-truth waypoints (3 s).
pub const FUTURE_STEPS: usize = 30;
pub const DEFAULT_LANE_WIDTH: f64 = 3.7;
/// Minimum spacing between consecutive centerline points, metres.
pub const MIN_POINT_SPACING: f64 = 0.01;

const DT_TOLERANCE: f64 = 1e-6;

pub type LaneId = u64;

/// One timestamped agent state. In a Frenet scene `x`/`y` hold `s`/`d` and
/// `heading` is relative to the local reference tangent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
    pub yaw_rate: Option<f64>,
    pub accel: Option<f64>,
}

impl AgentState {
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentHistory {
    pub agent_id: String,
    pub states: Vec<AgentState>,
}

impl AgentHistory {
    /// The state at t = 0.
    pub fn current(&self) -> &AgentState {
        self.states.last().expect("validated history is non-empty")
    }
}

/// Third channel of a lane pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PoseAttr {
    /// Tangent heading, radians (Cartesian scenes).
    Heading(f64),
    /// Reference-line curvature, 1/m (Frenet scenes).
    Curvature(f64),
}

impl PoseAttr {
    pub fn value(self) -> f64 {
        match self {
            PoseAttr::Heading(v) | PoseAttr::Curvature(v) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanePose {
    pub x: f64,
    pub y: f64,
    pub attr: PoseAttr,
}

impl LanePose {
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lane {
    pub id: LaneId,
    pub width: f64,
    pub centerline: Vec<LanePose>,
    pub successors: Vec<LaneId>,
    pub predecessors: Vec<LaneId>,
}

impl Lane {
    pub fn points(&self) -> Vec<Vec2> {
        self.centerline.iter().map(LanePose::position).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "lowercase")]
pub enum Frame {
    Cartesian,
    Frenet { centerline_index: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub scene_id: String,
    pub dt: f64,
    pub tv_id: String,
    pub frame: Frame,
    pub agents: Vec<AgentHistory>,
    pub lanes: Vec<Lane>,
    pub gt_future: Option<Vec<Vec2>>,
}

impl Scene {
    pub fn agent(&self, id: &str) -> Option<&AgentHistory> {
        self.agents.iter().find(|a| a.agent_id == id)
    }

    /// The target vehicle's history. Panics if `tv_id` is dangling, which
    /// validation rules out.
    pub fn tv(&self) -> &AgentHistory {
        self.agent(&self.tv_id)
            .expect("tv_id refers to an existing agent")
    }

    pub fn tv_mut(&mut self) -> &mut AgentHistory {
        let id = self.tv_id.clone();
        self.agents
            .iter_mut()
            .find(|a| a.agent_id == id)
            .expect("tv_id refers to an existing agent")
    }

    pub fn lane(&self, id: LaneId) -> Option<&Lane> {
        self.lanes.iter().find(|l| l.id == id)
    }

    pub fn is_cartesian(&self) -> bool {
        self.frame == Frame::Cartesian
    }

    pub fn from_json_str(s: &str) -> Result<Scene> {
        let file: SceneFile = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        let scene = file.into_scene()?;
        let violations = validate_scene(&scene);
        if violations.is_empty() {
            Ok(scene)
        } else {
            Err(Error::Validation(violations))
        }
    }

    /// Schema-level conversion without invariant checks (used on the
    /// predictor wire, where scenes are already Frenet-transformed).
    pub fn from_json_value(value: serde_json::Value) -> Result<Scene> {
        let file: SceneFile =
            serde_json::from_value(value).map_err(|e| Error::Parse(e.to_string()))?;
        file.into_scene()
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(SceneFile::from_scene(self)).expect("scene serialization is infallible")
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&SceneFile::from_scene(self))
            .expect("scene serialization is infallible")
    }
}

/// One forecast of the TV's future.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub waypoints: Vec<Vec2>,
    pub probability: f64,
    pub source_centerline: Option<usize>,
}

impl Trajectory {
    pub fn endpoint(&self) -> Vec2 {
        *self.waypoints.last().expect("trajectories are non-empty")
    }

    /// Checks the fixed length and finiteness.
    pub fn check(&self) -> Result<()> {
        if self.waypoints.len() != FUTURE_STEPS {
            return Err(Error::LengthMismatch {
                expected: FUTURE_STEPS,
                found: self.waypoints.len(),
            });
        }
        if self.waypoints.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(Error::Shape("non-finite waypoint".into()));
        }
        Ok(())
    }
}

/// Read and validate a scenario file.
pub fn load_scene(path: impl AsRef<Path>) -> Result<Scene> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Scene::from_json_str(&text)
}

pub fn save_scene(scene: &Scene, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = scene.to_json_string();
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// A broken scene invariant. Violations are data, not errors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub subject: String,
    pub message: String,
}

impl Violation {
    fn new(subject: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            subject: subject.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.message)
    }
}

/// Check every type invariant; an empty list means the scene is valid.
pub fn validate_scene(scene: &Scene) -> Vec<Violation> {
    let mut out = Vec::new();

    if !(scene.dt.is_finite() && scene.dt > 0.0) {
        out.push(Violation::new("scene", format!("dt must be positive, got {}", scene.dt)));
    }

    let mut agent_ids = HashSet::new();
    for agent in &scene.agents {
        if !agent_ids.insert(agent.agent_id.as_str()) {
            out.push(Violation::new(
                format!("agent {}", agent.agent_id),
                "duplicate agent id",
            ));
        }
        validate_history(agent, scene.dt, &mut out);
    }
    if !agent_ids.contains(scene.tv_id.as_str()) {
        out.push(Violation::new(
            "scene",
            format!("tv_id {:?} does not refer to an existing agent", scene.tv_id),
        ));
    }

    let mut lane_ids: HashMap<LaneId, &Lane> = HashMap::new();
    for lane in &scene.lanes {
        if lane_ids.insert(lane.id, lane).is_some() {
            out.push(Violation::new(format!("lane {}", lane.id), "duplicate lane id"));
        }
        validate_lane(lane, scene.frame, &mut out);
    }
    for lane in &scene.lanes {
        for succ in &lane.successors {
            match lane_ids.get(succ) {
                None => out.push(Violation::new(
                    format!("lane {}", lane.id),
                    format!("successor {succ} does not exist"),
                )),
                Some(other) if !other.predecessors.contains(&lane.id) => out.push(Violation::new(
                    format!("lane {}", lane.id),
                    format!("successor {succ} does not list it as predecessor"),
                )),
                _ => {}
            }
        }
        for pred in &lane.predecessors {
            match lane_ids.get(pred) {
                None => out.push(Violation::new(
                    format!("lane {}", lane.id),
                    format!("predecessor {pred} does not exist"),
                )),
                Some(other) if !other.successors.contains(&lane.id) => out.push(Violation::new(
                    format!("lane {}", lane.id),
                    format!("predecessor {pred} does not list it as successor"),
                )),
                _ => {}
            }
        }
    }

    if let Some(gt) = &scene.gt_future {
        if gt.len() != FUTURE_STEPS {
            out.push(Violation::new(
                "gt_future",
                format!("expected {FUTURE_STEPS} waypoints, found {}", gt.len()),
            ));
        }
        if gt.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
            out.push(Violation::new("gt_future", "non-finite coordinate"));
        }
    }

    out
}

fn validate_history(agent: &AgentHistory, dt: f64, out: &mut Vec<Violation>) {
    let subject = format!("agent {}", agent.agent_id);
    if agent.states.len() != HISTORY_STEPS + 1 {
        out.push(Violation::new(
            &subject,
            format!(
                "history must have {} states, found {}",
                HISTORY_STEPS + 1,
                agent.states.len()
            ),
        ));
    }
    for (i, st) in agent.states.iter().enumerate() {
        let finite = [st.t, st.x, st.y, st.heading, st.speed].iter().all(|v| v.is_finite())
            && st.yaw_rate.is_none_or(f64::is_finite)
            && st.accel.is_none_or(f64::is_finite);
        if !finite {
            out.push(Violation::new(&subject, format!("state {i} has a non-finite value")));
            continue;
        }
        if !(st.heading > -std::f64::consts::PI && st.heading <= std::f64::consts::PI) {
            out.push(Violation::new(
                &subject,
                format!("state {i} heading {} outside (-pi, pi]", st.heading),
            ));
        }
        if st.speed < 0.0 {
            out.push(Violation::new(&subject, format!("state {i} has negative speed")));
        }
    }
    for (i, w) in agent.states.windows(2).enumerate() {
        let step = w[1].t - w[0].t;
        if (step - dt).abs() > DT_TOLERANCE {
            out.push(Violation::new(
                &subject,
                format!("time step {step:.6} s between states {i} and {} (expected {dt})", i + 1),
            ));
        }
    }
    if let Some(last) = agent.states.last() {
        if last.t.abs() > DT_TOLERANCE {
            out.push(Violation::new(&subject, format!("last state at t = {} instead of 0", last.t)));
        }
    }
}

fn validate_lane(lane: &Lane, frame: Frame, out: &mut Vec<Violation>) {
    let subject = format!("lane {}", lane.id);
    if !(lane.width.is_finite() && lane.width > 0.0) {
        out.push(Violation::new(&subject, format!("width must be positive, got {}", lane.width)));
    }
    if lane.centerline.len() < 2 {
        out.push(Violation::new(&subject, "centerline needs at least 2 points"));
    }
    if lane
        .centerline
        .iter()
        .any(|p| !(p.x.is_finite() && p.y.is_finite() && p.attr.value().is_finite()))
    {
        out.push(Violation::new(&subject, "non-finite centerline value"));
    }
    let close = lane
        .centerline
        .windows(2)
        .filter(|w| (w[1].position() - w[0].position()).norm() < MIN_POINT_SPACING)
        .count();
    if close > 0 {
        out.push(Violation::new(
            &subject,
            format!("{close} consecutive centerline point pair(s) closer than {MIN_POINT_SPACING} m"),
        ));
    }
    let wrong_channel = lane.centerline.iter().any(|p| {
        matches!(
            (frame, p.attr),
            (Frame::Cartesian, PoseAttr::Curvature(_)) | (Frame::Frenet { .. }, PoseAttr::Heading(_))
        )
    });
    if wrong_channel {
        out.push(Violation::new(&subject, "pose channel does not match the scene frame"));
    }
    if frame == Frame::Cartesian
        && lane
            .centerline
            .iter()
            .any(|p| (normalize_angle(p.attr.value()) - p.attr.value()).abs() > 1e-12)
    {
        out.push(Violation::new(&subject, "pose heading outside (-pi, pi]"));
    }
}

// --- file schema -----------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct SceneFile {
    scene_id: String,
    dt: f64,
    tv_id: String,
    frame: Frame,
    agents: Vec<AgentFile>,
    lanes: Vec<LaneFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gt_future: Option<Vec<[f64; 2]>>,
}

#[derive(Serialize, Deserialize)]
struct AgentFile {
    id: String,
    states: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct LaneFile {
    id: LaneId,
    #[serde(default = "default_width")]
    width: f64,
    centerline: Vec<[f64; 3]>,
    #[serde(default)]
    successors: Vec<LaneId>,
    #[serde(default)]
    predecessors: Vec<LaneId>,
}

fn default_width() -> f64 {
    DEFAULT_LANE_WIDTH
}

impl SceneFile {
    fn into_scene(self) -> Result<Scene> {
        let frenet = matches!(self.frame, Frame::Frenet { .. });
        let agents = self
            .agents
            .into_iter()
            .map(|a| {
                let states = a
                    .states
                    .iter()
                    .enumerate()
                    .map(|(i, row)| parse_state_row(row).ok_or_else(|| {
                        Error::Parse(format!(
                            "agent {} state {i}: expected 5 to 7 numbers, found {}",
                            a.id,
                            row.len()
                        ))
                    }))
                    .collect::<Result<Vec<_>>>()?;
                Ok(AgentHistory {
                    agent_id: a.id,
                    states,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let lanes = self
            .lanes
            .into_iter()
            .map(|l| Lane {
                id: l.id,
                width: l.width,
                centerline: l
                    .centerline
                    .iter()
                    .map(|&[x, y, v]| LanePose {
                        x,
                        y,
                        attr: if frenet {
                            PoseAttr::Curvature(v)
                        } else {
                            PoseAttr::Heading(v)
                        },
                    })
                    .collect(),
                successors: l.successors,
                predecessors: l.predecessors,
            })
            .collect();
        Ok(Scene {
            scene_id: self.scene_id,
            dt: self.dt,
            tv_id: self.tv_id,
            frame: self.frame,
            agents,
            lanes,
            gt_future: self
                .gt_future
                .map(|g| g.into_iter().map(|[x, y]| Vec2::new(x, y)).collect()),
        })
    }

    fn from_scene(scene: &Scene) -> Self {
        SceneFile {
            scene_id: scene.scene_id.clone(),
            dt: scene.dt,
            tv_id: scene.tv_id.clone(),
            frame: scene.frame,
            agents: scene
                .agents
                .iter()
                .map(|a| AgentFile {
                    id: a.agent_id.clone(),
                    states: a.states.iter().map(state_row).collect(),
                })
                .collect(),
            lanes: scene
                .lanes
                .iter()
                .map(|l| LaneFile {
                    id: l.id,
                    width: l.width,
                    centerline: l.centerline.iter().map(|p| [p.x, p.y, p.attr.value()]).collect(),
                    successors: l.successors.clone(),
                    predecessors: l.predecessors.clone(),
                })
                .collect(),
            gt_future: scene
                .gt_future
                .as_ref()
                .map(|g| g.iter().map(|p| [p.x, p.y]).collect()),
        }
    }
}

fn parse_state_row(row: &[f64]) -> Option<AgentState> {
    if !(5..=7).contains(&row.len()) {
        return None;
    }
    Some(AgentState {
        t: row[0],
        x: row[1],
        y: row[2],
        heading: row[3],
        speed: row[4],
        yaw_rate: row.get(5).copied(),
        accel: row.get(6).copied(),
    })
}

fn state_row(st: &AgentState) -> Vec<f64> {
    let mut row = vec![st.t, st.x, st.y, st.heading, st.speed];
    match (st.yaw_rate, st.accel) {
        (Some(w), Some(a)) => row.extend([w, a]),
        (Some(w), None) => row.push(w),
        // A row cannot carry accel without yaw_rate; zero keeps positions aligned.
        (None, Some(a)) => row.extend([0.0, a]),
        (None, None) => {}
    }
    row
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    fn state(t: f64, x: f64) -> AgentState {
        AgentState {
            t,
            x,
            y: 0.0,
            heading: 0.0,
            speed: 10.0,
            yaw_rate: Some(0.0),
            accel: Some(0.0),
        }
    }

    pub(crate) fn tiny_scene() -> Scene {
        let history = (0..=HISTORY_STEPS)
            .map(|i| {
                let t = (i as f64 - HISTORY_STEPS as f64) * DT;
                state(t, 10.0 * t)
            })
            .collect();
        Scene {
            scene_id: "tiny".into(),
            dt: DT,
            tv_id: "tv".into(),
            frame: Frame::Cartesian,
            agents: vec![AgentHistory {
                agent_id: "tv".into(),
                states: history,
            }],
            lanes: vec![Lane {
                id: 1,
                width: 3.7,
                centerline: (0..=10)
                    .map(|i| LanePose {
                        x: -50.0 + 20.0 * i as f64,
                        y: 0.0,
                        attr: PoseAttr::Heading(0.0),
                    })
                    .collect(),
                successors: vec![],
                predecessors: vec![],
            }],
            gt_future: Some((1..=FUTURE_STEPS).map(|i| Vec2::new(i as f64, 0.0)).collect()),
        }
    }

    #[test]
    fn valid_scene_has_no_violations() {
        assert!(validate_scene(&tiny_scene()).is_empty());
    }

    #[test]
    fn duplicate_consecutive_points_name_the_lane() {
        let mut s = tiny_scene();
        let p = s.lanes[0].centerline[3];
        s.lanes[0].centerline.insert(3, p);
        let v = validate_scene(&s);
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].subject, "lane 1");
    }

    #[test]
    fn dt_jump_is_one_violation() {
        let mut s = tiny_scene();
        for st in &mut s.agents[0].states[..5] {
            st.t -= 0.1;
        }
        let v = validate_scene(&s);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].message.contains("time step"));
    }

    #[test]
    fn dangling_tv_id_is_rejected_on_load() {
        let mut s = tiny_scene();
        s.tv_id = "ghost".into();
        let err = Scene::from_json_str(&s.to_json_string()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn empty_lane_list_still_loads() {
        let mut s = tiny_scene();
        s.lanes.clear();
        let back = Scene::from_json_str(&s.to_json_string()).unwrap();
        assert!(back.lanes.is_empty());
        assert!(back.gt_future.is_some());
    }

    #[test]
    fn asymmetric_successor_is_a_violation() {
        let mut s = tiny_scene();
        let mut other = s.lanes[0].clone();
        other.id = 2;
        for p in &mut other.centerline {
            p.x += 200.0;
        }
        s.lanes[0].successors.push(2);
        s.lanes.push(other);
        let v = validate_scene(&s);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].message.contains("predecessor"));
    }

    #[test]
    fn frenet_tag_survives_the_file() {
        let mut s = tiny_scene();
        s.frame = Frame::Frenet { centerline_index: 2 };
        for p in &mut s.lanes[0].centerline {
            p.attr = PoseAttr::Curvature(0.01);
        }
        let text = s.to_json_string();
        assert!(text.contains("\"frenet\""));
        assert!(text.contains("\"centerline_index\": 2"));
        let back = Scene::from_json_str(&text).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn heading_channel_in_frenet_scene_is_rejected() {
        let mut s = tiny_scene();
        s.frame = Frame::Frenet { centerline_index: 0 };
        assert!(validate_scene(&s)
            .iter()
            .any(|v| v.message.contains("pose channel")));
    }

    #[test]
    fn short_state_rows_load_without_optional_channels() {
        let mut s = tiny_scene();
        for st in &mut s.agents[0].states {
            st.yaw_rate = None;
            st.accel = None;
        }
        let back = Scene::from_json_str(&s.to_json_string()).unwrap();
        assert_eq!(back.agents[0].states[0].accel, None);
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        assert!(matches!(Scene::from_json_str("{\"scene_id\": 3"), Err(Error::Parse(_))));
    }

    #[test]
    fn unwritable_path_is_an_io_error() {
        let err = save_scene(&tiny_scene(), "/nonexistent-dir/x/scene.json").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
