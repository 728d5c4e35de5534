//! Forecast metrics: minADE, minFDE, off-road probability (ORP), MR1 and
//! mean inter-endpoint distance (MIED).
//!
//! The road is the union of lane corridors, i.e. centerlines buffered by
//! half their width. Points projecting more than 0.5 m past the end of
//! every lane are outside the map.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::aggregation::PredictionSet;
use crate::error::{Error, Result};
use crate::geometry::{ParamPolyline, Vec2, DEFAULT_RESAMPLE_STEP};
use crate::predictors::PROB_TOLERANCE;
use crate::scene::{Scene, Trajectory};

/// Allowed projection overshoot at lane ends, metres.
pub const END_TOLERANCE: f64 = 0.5;
/// Endpoint distance beyond which the top forecast counts as a miss.
pub const MISS_THRESHOLD: f64 = 2.0;

struct Corridor {
    poly: ParamPolyline,
    half_width: f64,
    lo: Vec2,
    hi: Vec2,
}

/// Lane corridors of one scene, prepared for repeated point queries.
pub struct RoadMap {
    corridors: Vec<Corridor>,
}

impl RoadMap {
    pub fn new(scene: &Scene) -> Self {
        let corridors = scene
            .lanes
            .iter()
            .filter_map(|lane| {
                let poly = ParamPolyline::new(&lane.points(), DEFAULT_RESAMPLE_STEP).ok()?;
                let margin = lane.width / 2.0 + END_TOLERANCE;
                let (mut lo, mut hi) = (Vec2::repeat(f64::INFINITY), Vec2::repeat(f64::NEG_INFINITY));
                for p in poly.points() {
                    lo = lo.inf(p);
                    hi = hi.sup(p);
                }
                Some(Corridor {
                    half_width: lane.width / 2.0,
                    lo: lo - Vec2::repeat(margin),
                    hi: hi + Vec2::repeat(margin),
                    poly,
                })
            })
            .collect();
        Self { corridors }
    }

    pub fn is_on_road(&self, p: Vec2) -> bool {
        self.corridors.iter().any(|c| {
            if p.x < c.lo.x || p.y < c.lo.y || p.x > c.hi.x || p.y > c.hi.y {
                return false;
            }
            let pr = c.poly.project(p);
            pr.point.d.abs() <= c.half_width && pr.overshoot <= END_TOLERANCE
        })
    }

    /// True if any waypoint leaves every corridor.
    pub fn off_road(&self, waypoints: &[Vec2]) -> bool {
        waypoints.iter().any(|&p| !self.is_on_road(p))
    }
}

/// Off-road test against the lanes of `scene`.
pub fn off_road(waypoints: &[Vec2], scene: &Scene) -> bool {
    RoadMap::new(scene).off_road(waypoints)
}

fn check_normalized(trajs: &[Trajectory]) -> Result<()> {
    let sum: f64 = trajs.iter().map(|t| t.probability).sum();
    if (sum - 1.0).abs() > PROB_TOLERANCE {
        return Err(Error::NotNormalized(format!("forecast probabilities sum to {sum}")));
    }
    Ok(())
}

/// Probability mass of forecasts with at least one off-road waypoint.
pub fn orp(trajs: &[Trajectory], road: &RoadMap) -> Result<f64> {
    check_normalized(trajs)?;
    Ok(trajs
        .iter()
        .filter(|t| road.off_road(&t.waypoints))
        .fold(0.0, |acc, t| acc + t.probability)
        .clamp(0.0, 1.0))
}

fn check_lengths(trajs: &[Trajectory], gt: &[Vec2]) -> Result<()> {
    if trajs.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    for t in trajs {
        if t.waypoints.len() != gt.len() {
            return Err(Error::LengthMismatch {
                expected: gt.len(),
                found: t.waypoints.len(),
            });
        }
    }
    Ok(())
}

pub fn ade(waypoints: &[Vec2], gt: &[Vec2]) -> f64 {
    waypoints.iter().zip(gt).map(|(a, b)| (a - b).norm()).sum::<f64>() / gt.len() as f64
}

pub fn fde(waypoints: &[Vec2], gt: &[Vec2]) -> f64 {
    (waypoints[waypoints.len() - 1] - gt[gt.len() - 1]).norm()
}

pub fn min_ade(trajs: &[Trajectory], gt: &[Vec2]) -> Result<f64> {
    check_lengths(trajs, gt)?;
    Ok(trajs.iter().map(|t| ade(&t.waypoints, gt)).fold(f64::INFINITY, f64::min))
}

pub fn min_fde(trajs: &[Trajectory], gt: &[Vec2]) -> Result<f64> {
    check_lengths(trajs, gt)?;
    Ok(trajs.iter().map(|t| fde(&t.waypoints, gt)).fold(f64::INFINITY, f64::min))
}

/// 1 if the most probable forecast ends more than 2 m from the truth.
pub fn mr1(trajs: &[Trajectory], gt: &[Vec2]) -> Result<u8> {
    check_lengths(trajs, gt)?;
    let mut top = 0;
    for (i, t) in trajs.iter().enumerate() {
        if t.probability > trajs[top].probability {
            top = i;
        }
    }
    Ok(u8::from(fde(&trajs[top].waypoints, gt) > MISS_THRESHOLD))
}

/// Mean distance of endpoints to their centroid, unweighted.
pub fn mied(trajs: &[Trajectory]) -> f64 {
    if trajs.is_empty() {
        return 0.0;
    }
    let ends: Vec<Vec2> = trajs.iter().map(Trajectory::endpoint).collect();
    // The centroid of identical points carries rounding error.
    if ends.iter().all(|e| *e == ends[0]) {
        return 0.0;
    }
    let centroid = ends.iter().fold(Vec2::zeros(), |a, b| a + b) / ends.len() as f64;
    ends.iter().map(|e| (e - centroid).norm()).sum::<f64>() / ends.len() as f64
}

/// One report row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneMetrics {
    pub scene_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<String>,
    pub min_ade: f64,
    pub min_fde: f64,
    pub orp: f64,
    pub mr1: u8,
    pub mied: f64,
    pub speed_scale: f64,
}

/// All metrics of one forecast against its scene's ground truth.
pub fn evaluate_scene(scene: &Scene, pred: &PredictionSet) -> Result<SceneMetrics> {
    let gt = scene
        .gt_future
        .as_ref()
        .ok_or_else(|| Error::MissingGroundTruth(scene.scene_id.clone()))?;
    let trajs = &pred.trajectories;
    Ok(SceneMetrics {
        scene_id: scene.scene_id.clone(),
        attack: None,
        direction: None,
        min_ade: min_ade(trajs, gt)?,
        min_fde: min_fde(trajs, gt)?,
        orp: orp(trajs, &RoadMap::new(scene))?,
        mr1: mr1(trajs, gt)?,
        mied: mied(trajs),
        speed_scale: 1.0,
    })
}

/// Per-metric worse of two rows of the same scene: larger errors and ORP,
/// smaller MIED, smaller speed scale.
pub fn worse_of(a: &SceneMetrics, b: &SceneMetrics) -> SceneMetrics {
    SceneMetrics {
        scene_id: a.scene_id.clone(),
        attack: a.attack.clone().or_else(|| b.attack.clone()),
        direction: Some("worst".into()),
        min_ade: a.min_ade.max(b.min_ade),
        min_fde: a.min_fde.max(b.min_fde),
        orp: a.orp.max(b.orp),
        mr1: a.mr1.max(b.mr1),
        mied: a.mied.min(b.mied),
        speed_scale: a.speed_scale.min(b.speed_scale),
    }
}

/// Corpus means; ORP in percent, MR1 as a rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub scenes: usize,
    pub min_ade: f64,
    pub min_fde: f64,
    pub orp_percent: f64,
    pub mr1_rate: f64,
    pub mied: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub rows: Vec<SceneMetrics>,
    pub aggregate: AggregateMetrics,
}

impl MetricReport {
    pub fn from_rows(mut rows: Vec<SceneMetrics>) -> Self {
        rows.sort_by(|a, b| {
            (&a.scene_id, &a.attack, &a.direction).cmp(&(&b.scene_id, &b.attack, &b.direction))
        });
        let n = rows.len();
        let mean = |f: fn(&SceneMetrics) -> f64| {
            if n == 0 {
                0.0
            } else {
                rows.iter().map(f).sum::<f64>() / n as f64
            }
        };
        let aggregate = AggregateMetrics {
            scenes: n,
            min_ade: mean(|r| r.min_ade),
            min_fde: mean(|r| r.min_fde),
            orp_percent: 100.0 * mean(|r| r.orp),
            mr1_rate: mean(|r| f64::from(r.mr1)),
            mied: mean(|r| r.mied),
        };
        Self { rows, aggregate }
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Per-scene rows as CSV.
    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)
            .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
        let csv_err = |e: csv::Error| Error::io(path, std::io::Error::other(e));
        w.write_record([
            "scene_id", "attack", "direction", "min_ade", "min_fde", "orp", "mr1", "mied", "speed_scale",
        ])
        .map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.scene_id.clone(),
                r.attack.clone().unwrap_or_default(),
                r.direction.clone().unwrap_or_default(),
                r.min_ade.to_string(),
                r.min_fde.to_string(),
                r.orp.to_string(),
                r.mr1.to_string(),
                r.mied.to_string(),
                r.speed_scale.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::tests::tiny_scene;
    use crate::scene::FUTURE_STEPS;

    fn line(y: f64, p: f64) -> Trajectory {
        Trajectory {
            waypoints: (1..=FUTURE_STEPS).map(|i| Vec2::new(i as f64, y)).collect(),
            probability: p,
            source_centerline: None,
        }
    }

    fn gt() -> Vec<Vec2> {
        line(0.0, 1.0).waypoints
    }

    fn ending_at(end: Vec2, p: f64) -> Trajectory {
        let mut t = line(0.0, p);
        *t.waypoints.last_mut().unwrap() = end;
        t
    }

    #[test]
    fn displacement_errors() {
        assert_eq!(min_ade(&[line(0.0, 1.0)], &gt()).unwrap(), 0.0);
        assert_eq!(min_fde(&[line(0.0, 1.0)], &gt()).unwrap(), 0.0);
        assert_eq!(min_ade(&[line(1.0, 1.0)], &gt()).unwrap(), 1.0);
        assert_eq!(min_fde(&[line(1.0, 1.0)], &gt()).unwrap(), 1.0);
        assert_eq!(min_ade(&[line(3.0, 0.5), line(1.0, 0.5)], &gt()).unwrap(), 1.0);
        let mut short = line(0.0, 1.0);
        short.waypoints.pop();
        assert!(matches!(min_ade(&[short], &gt()), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn miss_rule_uses_top_forecast_only() {
        let end = gt()[FUTURE_STEPS - 1];
        assert_eq!(mr1(&[ending_at(end + Vec2::new(0.0, 2.5), 1.0)], &gt()).unwrap(), 1);
        let t = [ending_at(end + Vec2::new(0.0, 1.9), 0.6), ending_at(end + Vec2::new(0.0, 10.0), 0.4)];
        assert_eq!(mr1(&t, &gt()).unwrap(), 0);
        assert_eq!(mr1(&[ending_at(end + Vec2::new(0.0, 2.0), 1.0)], &gt()).unwrap(), 0);
    }

    #[test]
    fn endpoint_spread() {
        assert_eq!(mied(&[ending_at(Vec2::new(0.0, 0.0), 0.5), ending_at(Vec2::new(2.0, 0.0), 0.5)]), 1.0);
        assert_eq!(mied(&[line(0.0, 1.0)]), 0.0);
        let h = 3f64.sqrt();
        let tri = [
            ending_at(Vec2::new(0.0, 0.0), 0.3),
            ending_at(Vec2::new(2.0, 0.0), 0.3),
            ending_at(Vec2::new(1.0, h), 0.4),
        ];
        assert!((mied(&tri) - 2.0 / h).abs() < 1e-9);
    }

    #[test]
    fn corridor_membership() {
        let scene = tiny_scene();
        let road = RoadMap::new(&scene);
        let lane = &scene.lanes[0];
        let mid = lane.centerline[lane.centerline.len() / 2].position();
        assert!(road.is_on_road(mid));
        let poly = ParamPolyline::new(&lane.points(), DEFAULT_RESAMPLE_STEP).unwrap();
        let pr = poly.project(mid);
        let normal = poly.to_cartesian(crate::geometry::FrenetPoint::new(pr.point.s, 2.0)).0;
        assert!(!road.is_on_road(normal));
        let end = *lane.points().last().unwrap();
        let beyond = poly.to_cartesian(crate::geometry::FrenetPoint::new(poly.length() + 5.0, 0.0)).0;
        assert!(road.is_on_road(end));
        assert!(!road.is_on_road(beyond));
        let mut empty = scene.clone();
        empty.lanes.clear();
        assert!(RoadMap::new(&empty).off_road(&[mid]));
    }

    #[test]
    fn orp_sums_off_road_mass() {
        let scene = tiny_scene();
        let road = RoadMap::new(&scene);
        let far = line(1e4, 0.3);
        let lane = &scene.lanes[0];
        let on = Trajectory {
            waypoints: vec![lane.centerline[1].position(); FUTURE_STEPS],
            probability: 0.7,
            source_centerline: None,
        };
        assert!((orp(&[on.clone(), far.clone()], &road).unwrap() - 0.3).abs() < 1e-12);
        let mut on1 = on.clone();
        on1.probability = 1.0;
        assert_eq!(orp(&[on1], &road).unwrap(), 0.0);
        let mut far1 = far;
        far1.probability = 1.0;
        assert_eq!(orp(&[far1], &road).unwrap(), 1.0);
        assert!(orp(&[on], &road).is_err());
    }
}
