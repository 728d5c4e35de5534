//! Candidate reference paths for the target vehicle.
//!
//! The TV is assigned to the nearest lane whose tangent deviates less than
//! pi/4 from its heading. From there, successors are followed depth-first
//! until 110 m of road lie ahead of the TV or the graph ends; every fork
//! duplicates the path, so one sequence is produced per reachable leaf.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_4;

use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, ParamPolyline, Vec2, DEFAULT_RESAMPLE_STEP};
use crate::scene::{LaneId, Scene};

/// Road length followed ahead of the TV, metres.
pub const HORIZON_AHEAD: f64 = 110.0;
/// Road kept behind the TV for projecting its history, metres.
pub const RETAIN_BEHIND: f64 = 10.0;
/// Junction gaps below this are bridged; larger ones end the branch.
pub const MAX_JUNCTION_GAP: f64 = 0.5;
pub const ORIENTATION_GATE: f64 = FRAC_PI_4;

/// One candidate reference path.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterlineSequence {
    pub index: usize,
    pub lane_ids: Vec<LaneId>,
    pub polyline: ParamPolyline,
    /// Arc length of the TV's projection on `polyline`.
    pub start_s_tv: f64,
}

impl CenterlineSequence {
    /// Road length ahead of the TV.
    pub fn length_ahead(&self) -> f64 {
        self.polyline.length() - self.start_s_tv
    }
}

fn lane_polylines(scene: &Scene) -> HashMap<LaneId, ParamPolyline> {
    scene
        .lanes
        .iter()
        .filter_map(|l| {
            ParamPolyline::new(&l.points(), DEFAULT_RESAMPLE_STEP)
                .ok()
                .map(|p| (l.id, p))
        })
        .collect()
}

fn require_cartesian(scene: &Scene) -> Result<()> {
    if scene.is_cartesian() {
        Ok(())
    } else {
        Err(Error::WrongFrame { expected: "cartesian" })
    }
}

/// The nearest lane passing the orientation gate; ties go to the smaller id.
pub fn assign_current_lane(scene: &Scene) -> Result<LaneId> {
    require_cartesian(scene)?;
    let polys = lane_polylines(scene);
    current_lane(scene, &polys)
}

fn current_lane(scene: &Scene, polys: &HashMap<LaneId, ParamPolyline>) -> Result<LaneId> {
    let tv = scene.tv().current();
    let mut best: Option<(f64, LaneId)> = None;
    for lane in &scene.lanes {
        let Some(poly) = polys.get(&lane.id) else {
            continue;
        };
        let pr = poly.project(tv.position());
        let offset = normalize_angle(tv.heading - poly.tangent_heading_at(pr.point.s));
        if offset.abs() >= ORIENTATION_GATE {
            continue;
        }
        let dist = pr.distance();
        let better = match best {
            None => true,
            Some((bd, bid)) => dist < bd || (dist == bd && lane.id < bid),
        };
        if better {
            best = Some((dist, lane.id));
        }
    }
    best.map(|(_, id)| id)
        .ok_or(Error::NoAssignableLane(scene.lanes.len()))
}

/// All centerline sequences the TV could follow, in depth-first order.
pub fn enumerate_sequences(scene: &Scene) -> Result<Vec<CenterlineSequence>> {
    require_cartesian(scene)?;
    let polys = lane_polylines(scene);
    let current = current_lane(scene, &polys)?;
    let tv_pos = scene.tv().current().position();

    let poly = &polys[&current];
    let s0 = poly.project(tv_pos).point.s;
    let start = (s0 - RETAIN_BEHIND).max(0.0);
    let end = (s0 + HORIZON_AHEAD).min(poly.length());
    let walk = Walk {
        scene,
        polys: &polys,
        tv_pos,
    };
    let mut out = Vec::new();
    walk.expand(
        vec![current],
        poly.slice(start, end),
        end - s0,
        &mut out,
    )?;
    Ok(out)
}

struct Walk<'a> {
    scene: &'a Scene,
    polys: &'a HashMap<LaneId, ParamPolyline>,
    tv_pos: Vec2,
}

impl Walk<'_> {
    fn expand(
        &self,
        path: Vec<LaneId>,
        points: Vec<Vec2>,
        ahead: f64,
        out: &mut Vec<CenterlineSequence>,
    ) -> Result<()> {
        if ahead < HORIZON_AHEAD {
            let last_lane = self.scene.lane(*path.last().unwrap()).unwrap();
            let tail = *points.last().unwrap();
            let mut expanded = false;
            for succ in &last_lane.successors {
                if path.contains(succ) {
                    continue;
                }
                let Some(spoly) = self.polys.get(succ) else {
                    continue;
                };
                let gap = (spoly.points()[0] - tail).norm();
                if gap >= MAX_JUNCTION_GAP {
                    continue;
                }
                let take = (HORIZON_AHEAD - ahead - gap).min(spoly.length());
                let mut next_points = points.clone();
                next_points.extend(spoly.slice(0.0, take.max(0.0)));
                let mut next_path = path.clone();
                next_path.push(*succ);
                self.expand(next_path, next_points, ahead + gap + take.max(0.0), out)?;
                expanded = true;
            }
            if expanded {
                return Ok(());
            }
        }
        let polyline = ParamPolyline::new(&points, DEFAULT_RESAMPLE_STEP)?;
        let start_s_tv = polyline.project(self.tv_pos).extended_s();
        out.push(CenterlineSequence {
            index: out.len(),
            lane_ids: path,
            polyline,
            start_s_tv,
        });
        Ok(())
    }
}

/// Mean |d| of points projected onto a sequence.
pub fn mean_abs_lateral(seq: &CenterlineSequence, points: &[Vec2]) -> f64 {
    let total: f64 = points
        .iter()
        .map(|&p| seq.polyline.project(p).point.d.abs())
        .sum();
    total / points.len().max(1) as f64
}

/// Index of the sequence with minimal mean lateral displacement of the
/// ground-truth future; ties go to the smaller index.
pub fn assign_gt_centerline(scene: &Scene, seqs: &[CenterlineSequence]) -> Result<usize> {
    let gt = scene
        .gt_future
        .as_ref()
        .ok_or_else(|| Error::MissingGroundTruth(scene.scene_id.clone()))?;
    if seqs.is_empty() {
        return Err(Error::InvalidParams("no centerline sequences".into()));
    }
    let mut best = (f64::INFINITY, 0);
    for (i, seq) in seqs.iter().enumerate() {
        let m = mean_abs_lateral(seq, gt);
        if m < best.0 {
            best = (m, i);
        }
    }
    Ok(best.1)
}
