//! Deterministic synthetic scenes: straight roads, curves, S-curves, forks
//! and crossings.
//!
//! Every scene is built in a local frame (road running along +x), then
//! rotated and translated at random. The TV drives its route at constant
//! speed with a smooth random lateral wobble; stored heading, speed, yaw
//! rate and acceleration are the exact derivatives of its position. The
//! ground truth follows the chosen route without new noise: the current
//! lateral offset fades out over 1.5 s.
//!
//! Per-scene seeds are derived with SplitMix64 from `(corpus seed, index)`.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI, TAU};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::centerlines::enumerate_sequences;
use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, FrenetPoint, ParamPolyline, Vec2, DEFAULT_RESAMPLE_STEP};
use crate::scene::{
    save_scene, AgentHistory, AgentState, Frame, Lane, LaneId, LanePose, PoseAttr, Scene, DEFAULT_LANE_WIDTH, DT,
    FUTURE_STEPS, HISTORY_STEPS,
};
use crate::scene_attack::{GRAVITY, LATERAL_LIMIT_FRACTION};

/// Generated speeds keep this margin below the lateral limit.
const SPEED_MARGIN: f64 = 0.95;
const FORK_RADIUS: f64 = 60.0;
const CROSSING_RADIUS: f64 = 12.0;
const APPROACH: f64 = 100.0;
const EXIT: f64 = 220.0;
const GT_FADE: f64 = 1.5;
/// Vertex spacing of generated lanes; polylines are resampled finer anyway.
const LANE_STEP: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurvePlacement {
    /// Straight history, bend ahead.
    Before,
    /// TV already inside the bend.
    Inside,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Topology {
    Straight,
    Curve { radius: f64, placement: CurvePlacement },
    SCurve { radius: f64 },
    Fork { angle_deg: f64 },
    Crossing,
}

impl Topology {
    pub fn kind(&self) -> TopologyKind {
        match self {
            Self::Straight => TopologyKind::Straight,
            Self::Curve { .. } => TopologyKind::Curve,
            Self::SCurve { .. } => TopologyKind::SCurve,
            Self::Fork { .. } => TopologyKind::Fork,
            Self::Crossing => TopologyKind::Crossing,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Curve { radius, .. } | Self::SCurve { radius } if !(radius >= 10.0) => {
                Err(Error::InvalidParams(format!("curve radius must be at least 10 m, got {radius}")))
            }
            Self::Fork { angle_deg } if !(10.0..=60.0).contains(&angle_deg) => {
                Err(Error::InvalidParams(format!("fork angle must lie in [10, 60] degrees, got {angle_deg}")))
            }
            _ => Ok(()),
        }
    }
}

/// Topology families, as named in mixtures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    Straight,
    Curve,
    SCurve,
    Fork,
    Crossing,
}

impl TopologyKind {
    pub const ALL: [Self; 5] = [Self::Straight, Self::Curve, Self::SCurve, Self::Fork, Self::Crossing];

    pub fn name(self) -> &'static str {
        match self {
            Self::Straight => "straight",
            Self::Curve => "curve",
            Self::SCurve => "s_curve",
            Self::Fork => "fork",
            Self::Crossing => "crossing",
        }
    }

    /// A concrete topology with randomized shape parameters.
    pub fn sample(self, rng: &mut impl Rng) -> Topology {
        match self {
            Self::Straight => Topology::Straight,
            Self::Curve => Topology::Curve {
                radius: (rng.random_range(15f64.ln()..150f64.ln())).exp(),
                placement: if rng.random_bool(0.5) {
                    CurvePlacement::Before
                } else {
                    CurvePlacement::Inside
                },
            },
            Self::SCurve => Topology::SCurve {
                radius: rng.random_range(25.0..100.0),
            },
            Self::Fork => Topology::Fork {
                angle_deg: rng.random_range(20.0..60.0),
            },
            Self::Crossing => Topology::Crossing,
        }
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TopologyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s || (s == "scurve" && *k == Self::SCurve))
            .ok_or_else(|| Error::InvalidParams(format!("unknown topology `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    /// Requested TV speed; drawn from `[8, 16]` m/s when absent.
    pub speed: Option<f64>,
    /// Standard deviation of the lateral wobble, metres.
    pub noise: f64,
    pub lane_width: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            speed: None,
            noise: 0.05,
            lane_width: DEFAULT_LANE_WIDTH,
        }
    }
}

/// Provenance of one generated scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneMeta {
    pub scene_id: String,
    pub topology: Topology,
    pub seed: u64,
    /// Lanes the ground truth drives along.
    pub gt_lane_ids: Vec<LaneId>,
    /// Index of the ground-truth route among the enumerated sequences.
    pub gt_branch: Option<usize>,
    pub speed: f64,
    /// The requested speed was lowered to respect the lateral limit.
    pub speed_reduced: bool,
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub scene: Scene,
    pub meta: SceneMeta,
}

/// SplitMix64 finalizer; used to derive independent per-scene seeds.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn scene_seed(corpus_seed: u64, index: usize) -> u64 {
    splitmix64(splitmix64(corpus_seed) ^ index as u64)
}

/// Turtle that lays down densely sampled centerlines.
#[derive(Clone, Copy)]
struct Pen {
    pos: Vec2,
    heading: f64,
}

impl Pen {
    fn straight(&mut self, len: f64) -> Vec<Vec2> {
        let n = (len / LANE_STEP).ceil().max(1.0) as usize;
        let dir = Vec2::new(self.heading.cos(), self.heading.sin());
        let start = self.pos;
        let pts = (0..=n).map(|i| start + dir * (len * i as f64 / n as f64)).collect();
        self.pos = start + dir * len;
        pts
    }

    /// Arc of `radius` turning by `angle` (positive = left).
    fn arc(&mut self, radius: f64, angle: f64) -> Vec<Vec2> {
        let n = (radius * angle.abs() / LANE_STEP).ceil().max(1.0) as usize;
        let side = angle.signum();
        let center = self.pos + Vec2::new(-self.heading.sin(), self.heading.cos()) * (radius * side);
        let start_phase = self.heading - side * FRAC_PI_2;
        let pts = (0..=n)
            .map(|i| {
                let a = start_phase + angle * i as f64 / n as f64;
                center + Vec2::new(a.cos(), a.sin()) * radius
            })
            .collect::<Vec<_>>();
        self.pos = *pts.last().unwrap();
        self.heading += angle;
        pts
    }
}

struct RoadLayout {
    lanes: Vec<Vec<Vec2>>,
    successors: Vec<Vec<usize>>,
    routes: Vec<Vec<usize>>,
}

impl RoadLayout {
    fn chain(parts: Vec<Vec<Vec2>>) -> Self {
        let n = parts.len();
        Self {
            lanes: parts,
            successors: (0..n).map(|i| if i + 1 < n { vec![i + 1] } else { vec![] }).collect(),
            routes: vec![(0..n).collect()],
        }
    }
}

fn layout(topology: &Topology, left: bool) -> RoadLayout {
    let side = if left { 1.0 } else { -1.0 };
    let mut pen = Pen {
        pos: Vec2::zeros(),
        heading: 0.0,
    };
    match *topology {
        Topology::Straight => RoadLayout::chain(vec![pen.straight(APPROACH + EXIT)]),
        Topology::Curve { radius, .. } => {
            let a = pen.straight(APPROACH);
            let b = pen.arc(radius, side * FRAC_PI_2);
            let c = pen.straight(EXIT);
            RoadLayout::chain(vec![a, b, c])
        }
        Topology::SCurve { radius } => {
            let a = pen.straight(APPROACH);
            let b = pen.arc(radius, side * FRAC_PI_3);
            let c = pen.arc(radius, -side * FRAC_PI_3);
            let d = pen.straight(EXIT);
            RoadLayout::chain(vec![a, b, c, d])
        }
        Topology::Fork { angle_deg } => {
            let trunk = pen.straight(APPROACH);
            let half = angle_deg.to_radians() / 2.0;
            let branch = |turn: f64| {
                let mut p = pen;
                let mut pts = p.arc(FORK_RADIUS, turn);
                pts.extend(p.straight(EXIT).into_iter().skip(1));
                pts
            };
            RoadLayout {
                lanes: vec![trunk, branch(half), branch(-half)],
                successors: vec![vec![1, 2], vec![], vec![]],
                routes: vec![vec![0, 1], vec![0, 2]],
            }
        }
        Topology::Crossing => {
            let approach = pen.straight(APPROACH);
            let mut lanes = vec![approach];
            let mut successors = vec![vec![1, 2, 3]];
            let connectors: [fn(&mut Pen) -> Vec<Vec2>; 3] = [
                |p| p.arc(CROSSING_RADIUS, FRAC_PI_2),
                |p| p.straight(2.0 * CROSSING_RADIUS),
                |p| p.arc(CROSSING_RADIUS, -FRAC_PI_2),
            ];
            let mut exits = Vec::new();
            for make in connectors {
                let mut p = pen;
                lanes.push(make(&mut p));
                exits.push(p.straight(EXIT));
            }
            for (i, e) in exits.into_iter().enumerate() {
                successors.push(vec![4 + i]);
                lanes.push(e);
            }
            successors.extend([vec![], vec![], vec![]]);
            RoadLayout {
                lanes,
                successors,
                routes: vec![vec![0, 1, 4], vec![0, 2, 5], vec![0, 3, 6]],
            }
        }
    }
}

/// Smooth zero-mean random signal with standard deviation about `sigma`.
struct Wobble {
    terms: Vec<(f64, f64, f64)>,
}

impl Wobble {
    fn new(rng: &mut impl Rng, sigma: f64) -> Self {
        const K: usize = 4;
        let terms = (0..K)
            .map(|_| {
                let a: f64 = rng.sample(StandardNormal);
                (
                    sigma * a * (2.0 / K as f64).sqrt(),
                    rng.random_range(0.5..3.0),
                    rng.random_range(0.0..TAU),
                )
            })
            .collect();
        Self { terms }
    }

    fn at(&self, t: f64) -> f64 {
        self.terms.iter().map(|(a, w, ph)| a * (w * t + ph).sin()).sum()
    }
}

/// Lateral offset of the TV from its route over time.
struct Lateral {
    wobble: Wobble,
    /// Drift toward the intended branch, reached at t = 0.
    intent: f64,
}

impl Lateral {
    fn history(&self, t: f64) -> f64 {
        let ramp = (1.0 - (PI * (t / (HISTORY_STEPS as f64 * DT) + 1.0)).cos()) / 2.0;
        self.wobble.at(t) + self.intent * ramp
    }

    fn offset(&self, t: f64) -> f64 {
        if t <= 0.0 {
            self.history(t)
        } else if t < GT_FADE {
            self.history(0.0) * (1.0 + (PI * t / GT_FADE).cos()) / 2.0
        } else {
            0.0
        }
    }
}

/// Position, heading, speed, yaw rate and acceleration along a route.
struct Motion<'a> {
    route: &'a ParamPolyline,
    s0: f64,
    v: f64,
    lateral: Option<&'a Lateral>,
}

impl Motion<'_> {
    fn pos(&self, t: f64) -> Vec2 {
        let d = self.lateral.map_or(0.0, |l| l.offset(t));
        self.route.to_cartesian(FrenetPoint::new(self.s0 + self.v * t, d)).0
    }

    /// Central difference over one sample step, so stored speeds agree with
    /// the speeds recoverable from the sampled positions.
    fn velocity(&self, t: f64) -> Vec2 {
        (self.pos(t + DT) - self.pos(t - DT)) / (2.0 * DT)
    }

    fn state(&self, t: f64) -> AgentState {
        const H: f64 = DT;
        let v = self.velocity(t);
        let heading = v.y.atan2(v.x);
        let (vp, vm) = (self.velocity(t + H), self.velocity(t - H));
        AgentState {
            t,
            x: self.pos(t).x,
            y: self.pos(t).y,
            heading: normalize_angle(heading),
            speed: v.norm(),
            yaw_rate: Some(normalize_angle(vp.y.atan2(vp.x) - vm.y.atan2(vm.x)) / (2.0 * H)),
            accel: Some((vp.norm() - vm.norm()) / (2.0 * H)),
        }
    }

    fn history(&self) -> Vec<AgentState> {
        (0..=HISTORY_STEPS)
            .map(|i| self.state(-((HISTORY_STEPS - i) as f64) * DT))
            .collect()
    }
}

fn max_curvature(route: &ParamPolyline, s0: f64, s1: f64) -> f64 {
    let cum = route.cum_arclength();
    route
        .curvature()
        .iter()
        .zip(cum)
        .filter(|(_, &s)| s >= s0 - 1.0 && s <= s1 + 1.0)
        .fold(0.0, |m, (k, _)| m.max(k.abs()))
}

/// TV position on its route and the feasible speed.
fn place(
    topology: &Topology,
    route: &ParamPolyline,
    requested: f64,
    rng: &mut impl Rng,
) -> (f64, f64) {
    let limit = SPEED_MARGIN * LATERAL_LIMIT_FRACTION * GRAVITY;
    let horizon = FUTURE_STEPS as f64 * DT;
    let u_place: f64 = rng.random();
    let mut v = requested;
    let mut s0 = APPROACH;
    for _ in 0..20 {
        let reach = v * horizon;
        s0 = match *topology {
            Topology::Straight => APPROACH - 20.0,
            Topology::Curve { radius, placement } => match placement {
                CurvePlacement::Before => APPROACH - (5.0 + 20.0 * u_place).min(reach - 5.0).max(1.0),
                CurvePlacement::Inside => APPROACH + radius * FRAC_PI_2 * (0.15 + 0.35 * u_place),
            },
            Topology::SCurve { .. } => APPROACH - (5.0 + 15.0 * u_place).min(reach - 5.0).max(1.0),
            // The ground truth must travel well past the split to be
            // attributable to one branch.
            Topology::Fork { .. } => APPROACH - (3.0 + (reach - 28.0).max(1.0) * u_place),
            Topology::Crossing => APPROACH - (2.0 + (reach - 12.0).max(0.5) * u_place),
        };
        let kappa = max_curvature(route, s0 - 2.0 * v, s0 + reach);
        let v_ok = if kappa > 0.0 { (limit / kappa).sqrt() } else { f64::INFINITY };
        if v <= v_ok + 1e-9 {
            break;
        }
        v = v_ok * 0.999;
    }
    (s0, v)
}

/// Build one scene.
pub fn generate(topology: Topology, seed: u64, params: &GenParams) -> Result<Generated> {
    topology.validate()?;
    if !(params.noise >= 0.0 && params.lane_width > 0.0) {
        return Err(Error::InvalidParams("noise must be non-negative and lane width positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let left = rng.random_bool(0.5);
    let road = layout(&topology, left);
    let route_idx = rng.random_range(0..road.routes.len());
    let route_lanes = &road.routes[route_idx];

    let mut route_pts: Vec<Vec2> = Vec::new();
    for &l in route_lanes {
        route_pts.extend(&road.lanes[l]);
    }
    let route = ParamPolyline::new(&route_pts, DEFAULT_RESAMPLE_STEP)?;

    let requested = match params.speed {
        Some(v) if v > 0.0 => v,
        Some(v) => return Err(Error::InvalidParams(format!("speed must be positive, got {v}"))),
        None => rng.random_range(8.0..16.0),
    };
    let (s0, v) = place(&topology, &route, requested, &mut rng);

    let intent = match topology {
        Topology::Fork { .. } => {
            let m = rng.random_range(0.3..0.9);
            if route_idx == 0 { m } else { -m }
        }
        _ => 0.0,
    };
    let lateral = Lateral {
        wobble: Wobble::new(&mut rng, params.noise),
        intent,
    };
    let tv = Motion {
        route: &route,
        s0,
        v,
        lateral: Some(&lateral),
    };
    let lead = Motion {
        route: &route,
        s0: s0 + rng.random_range(25.0..40.0),
        v,
        lateral: None,
    };
    let gt: Vec<Vec2> = (1..=FUTURE_STEPS).map(|i| tv.pos(i as f64 * DT)).collect();

    // Random rigid placement in the world.
    let theta = rng.random_range(-PI..PI);
    let shift = Vec2::new(rng.random_range(-1000.0..1000.0), rng.random_range(-1000.0..1000.0));
    let (sin, cos) = theta.sin_cos();
    let place_pt = |p: Vec2| Vec2::new(cos * p.x - sin * p.y, sin * p.x + cos * p.y) + shift;
    let place_state = |st: AgentState| {
        let p = place_pt(st.position());
        AgentState {
            x: p.x,
            y: p.y,
            heading: normalize_angle(st.heading + theta),
            ..st
        }
    };

    let mut predecessors: Vec<Vec<usize>> = vec![Vec::new(); road.lanes.len()];
    for (i, succ) in road.successors.iter().enumerate() {
        for &j in succ {
            predecessors[j].push(i);
        }
    }
    let lane_id = |i: usize| (i + 1) as LaneId;
    let lanes = road
        .lanes
        .iter()
        .enumerate()
        .map(|(i, pts)| {
            let placed: Vec<Vec2> = pts.iter().map(|&p| place_pt(p)).collect();
            let centerline = placed
                .iter()
                .enumerate()
                .map(|(j, p)| {
                    let a = placed[j.saturating_sub(1)];
                    let b = placed[(j + 1).min(placed.len() - 1)];
                    LanePose {
                        x: p.x,
                        y: p.y,
                        attr: PoseAttr::Heading(normalize_angle((b - a).y.atan2((b - a).x))),
                    }
                })
                .collect();
            Lane {
                id: lane_id(i),
                width: params.lane_width,
                centerline,
                successors: road.successors[i].iter().map(|&j| lane_id(j)).collect(),
                predecessors: predecessors[i].iter().map(|&j| lane_id(j)).collect(),
            }
        })
        .collect();

    let scene_id = format!("{}_{seed:016x}", topology.kind().name());
    let scene = Scene {
        scene_id: scene_id.clone(),
        dt: DT,
        tv_id: "tv".into(),
        frame: Frame::Cartesian,
        agents: vec![
            AgentHistory {
                agent_id: "tv".into(),
                states: tv.history().into_iter().map(place_state).collect(),
            },
            AgentHistory {
                agent_id: "lead".into(),
                states: lead.history().into_iter().map(place_state).collect(),
            },
        ],
        lanes,
        gt_future: Some(gt.into_iter().map(place_pt).collect()),
    };

    let gt_lane_ids: Vec<LaneId> = route_lanes.iter().map(|&i| lane_id(i)).collect();
    let gt_branch = enumerate_sequences(&scene).ok().and_then(|seqs| {
        // A sequence may start mid-route and stop before the route ends.
        seqs.iter().position(|s| {
            let Some(first) = gt_lane_ids.iter().position(|&l| l == s.lane_ids[0]) else {
                return false;
            };
            let rest = &gt_lane_ids[first..];
            let n = s.lane_ids.len().min(rest.len());
            s.lane_ids[..n] == rest[..n]
        })
    });
    Ok(Generated {
        meta: SceneMeta {
            scene_id,
            topology,
            seed,
            gt_lane_ids,
            gt_branch,
            speed: v,
            speed_reduced: v < requested,
        },
        scene,
    })
}

/// Relative weights of topology families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mixture(pub BTreeMap<TopologyKind, f64>);

impl FromStr for Mixture {
    type Err = Error;

    /// `fork=0.5,curve=0.3,straight=0.2`
    fn from_str(s: &str) -> Result<Self> {
        let mut m = BTreeMap::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, w) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidParams(format!("mixture entry `{part}` is not name=weight")))?;
            let w: f64 = w
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParams(format!("bad weight in `{part}`")))?;
            if !(w >= 0.0) {
                return Err(Error::InvalidParams(format!("negative weight in `{part}`")));
            }
            *m.entry(k.trim().parse()?).or_insert(0.0) += w;
        }
        Ok(Self(m))
    }
}

impl Mixture {
    /// Scene counts per family by largest remainder.
    pub fn allocate(&self, n: usize) -> Result<Vec<(TopologyKind, usize)>> {
        let total: f64 = self.0.values().sum();
        if n == 0 || !(total > 0.0) {
            return Err(Error::InvalidParams("the mixture yields no scenes".into()));
        }
        let exact: Vec<(TopologyKind, f64)> = self.0.iter().map(|(&k, &w)| (k, w / total * n as f64)).collect();
        let mut counts: Vec<(TopologyKind, usize)> = exact.iter().map(|&(k, x)| (k, x.floor() as usize)).collect();
        let mut rest: Vec<usize> = (0..exact.len()).collect();
        rest.sort_by(|&a, &b| {
            let fa = exact[a].1 - exact[a].1.floor();
            let fb = exact[b].1 - exact[b].1.floor();
            fb.total_cmp(&fa).then(a.cmp(&b))
        });
        let assigned: usize = counts.iter().map(|c| c.1).sum();
        for &i in rest.iter().take(n - assigned) {
            counts[i].1 += 1;
        }
        Ok(counts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub mixture: Mixture,
    pub count: usize,
    pub seed: u64,
    pub params: GenParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub spec: CorpusSpec,
    pub scenes: Vec<SceneMeta>,
}

/// Generate a corpus in memory, in scene-index order.
pub fn generate_corpus(spec: &CorpusSpec) -> Result<Vec<Generated>> {
    let counts = spec.mixture.allocate(spec.count)?;
    let mut kinds: Vec<TopologyKind> = counts
        .iter()
        .flat_map(|&(k, n)| std::iter::repeat_n(k, n))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(spec.seed));
    rand::seq::SliceRandom::shuffle(&mut kinds[..], &mut rng);
    kinds
        .par_iter()
        .enumerate()
        .map(|(i, kind)| {
            let seed = scene_seed(spec.seed, i);
            let mut shape_rng = ChaCha8Rng::seed_from_u64(splitmix64(seed));
            let topology = kind.sample(&mut shape_rng);
            let mut g = generate(topology, seed, &spec.params)?;
            let id = format!("{}_{i:05}", kind.name());
            g.scene.scene_id = id.clone();
            g.meta.scene_id = id;
            Ok(g)
        })
        .collect()
}

/// Write scenes and `manifest.json` into `dir`.
pub fn write_corpus(dir: &Path, spec: &CorpusSpec, scenes: &[Generated]) -> Result<CorpusManifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for g in scenes {
        save_scene(&g.scene, dir.join(format!("{}.json", g.scene.scene_id)))?;
    }
    let manifest = CorpusManifest {
        spec: spec.clone(),
        scenes: scenes.iter().map(|g| g.meta.clone()).collect(),
    };
    let path = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::validate_scene;

    #[test]
    fn every_topology_validates() {
        let tops = [
            Topology::Straight,
            Topology::Curve { radius: 30.0, placement: CurvePlacement::Before },
            Topology::Curve { radius: 30.0, placement: CurvePlacement::Inside },
            Topology::SCurve { radius: 40.0 },
            Topology::Fork { angle_deg: 30.0 },
            Topology::Crossing,
        ];
        for (i, t) in tops.iter().enumerate() {
            let g = generate(*t, i as u64, &GenParams::default()).unwrap();
            assert_eq!(validate_scene(&g.scene), vec![], "{t:?}");
            assert!(g.meta.gt_branch.is_some(), "{t:?}");
        }
    }

    #[test]
    fn mixture_parsing_and_allocation() {
        let m: Mixture = "fork=0.5,curve=0.3,straight=0.2".parse().unwrap();
        let c = m.allocate(1000).unwrap();
        assert_eq!(c.iter().map(|x| x.1).sum::<usize>(), 1000);
        assert!(c.contains(&(TopologyKind::Fork, 500)));
        assert!(m.allocate(0).is_err());
        assert!("fork=0".parse::<Mixture>().unwrap().allocate(5).is_err());
        assert!("boat=1".parse::<Mixture>().is_err());
    }

    #[test]
    fn invalid_shapes_are_rejected() {
        assert!(generate(Topology::Curve { radius: 5.0, placement: CurvePlacement::Before }, 0, &GenParams::default()).is_err());
        assert!(generate(Topology::Fork { angle_deg: 70.0 }, 0, &GenParams::default()).is_err());
    }
}
