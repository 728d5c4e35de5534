use crate::centerlines::CenterlineSequence;
use crate::error::{Error, Result};
use crate::scene::{AgentState, Frame, LanePose, PoseAttr, Scene};

use super::{normalize_angle, FrenetPoint, ProjectionKind, Vec2};

/// Points that needed special handling during a forward transform.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TransformFlags {
    /// Projected beyond either end of the reference.
    pub extrapolated: usize,
    /// No normal line of the reference passes through the point.
    pub non_invertible: usize,
    /// |d| at or beyond the local radius of curvature.
    pub beyond_radius: usize,
}

impl TransformFlags {
    /// True when back-projection is guaranteed to recover every point.
    pub fn invertible(&self) -> bool {
        self.non_invertible == 0 && self.beyond_radius == 0
    }
}

/// A scene expressed in the Frenet frame of one centerline sequence.
#[derive(Debug, Clone)]
pub struct FrenetScene {
    pub scene: Scene,
    pub reference: CenterlineSequence,
    /// Arc length of the TV's current position on the reference polyline.
    pub origin_s: f64,
    pub flags: TransformFlags,
}

impl FrenetScene {
    /// Re-attach a Frenet-tagged scene (e.g. read from disk) to the
    /// reference it was built on.
    pub fn from_parts(scene: Scene, reference: CenterlineSequence) -> Result<Self> {
        match scene.frame {
            Frame::Frenet { centerline_index } if centerline_index == reference.index => {}
            _ => return Err(Error::WrongFrame { expected: "frenet" }),
        }
        Ok(Self {
            origin_s: reference.start_s_tv,
            scene,
            reference,
            flags: TransformFlags::default(),
        })
    }

    /// Cartesian position of a point given in this frame.
    pub fn point_to_cartesian(&self, p: Vec2) -> Vec2 {
        self.reference
            .polyline
            .to_cartesian(FrenetPoint::new(p.x + self.origin_s, p.y))
            .0
    }
}

/// Express every position of a Cartesian scene in `(s - s_TV, d)` of the
/// reference; headings become relative to the local tangent and lane poses
/// carry the reference curvature instead of their heading.
pub fn scene_to_frenet(scene: &Scene, reference: &CenterlineSequence) -> Result<FrenetScene> {
    if !scene.is_cartesian() {
        return Err(Error::WrongFrame { expected: "cartesian" });
    }
    let poly = &reference.polyline;
    let origin_s = poly.project(scene.tv().current().position()).extended_s();
    let mut flags = TransformFlags::default();

    let mut map = |p: Vec2| -> (f64, f64, f64) {
        let pr = poly.project(p);
        let s = pr.extended_s();
        match pr.kind {
            ProjectionKind::BeforeStart | ProjectionKind::AfterEnd => flags.extrapolated += 1,
            ProjectionKind::Fallback => flags.non_invertible += 1,
            ProjectionKind::Interior => {}
        }
        if pr.point.d.abs() * poly.curvature_at(s).abs() >= 1.0 {
            flags.beyond_radius += 1;
        }
        (s - origin_s, pr.point.d, s)
    };

    let mut out = scene.clone();
    out.frame = Frame::Frenet {
        centerline_index: reference.index,
    };
    for agent in &mut out.agents {
        for st in &mut agent.states {
            let (s, d, s_abs) = map(st.position());
            st.heading = normalize_angle(st.heading - poly.tangent_heading_at(s_abs));
            st.x = s;
            st.y = d;
        }
    }
    for lane in &mut out.lanes {
        for pose in &mut lane.centerline {
            let (s, d, s_abs) = map(pose.position());
            *pose = LanePose {
                x: s,
                y: d,
                attr: PoseAttr::Curvature(poly.curvature_at(s_abs)),
            };
        }
    }
    if let Some(gt) = &mut out.gt_future {
        for p in gt.iter_mut() {
            let (s, d, _) = map(*p);
            *p = Vec2::new(s, d);
        }
    }

    Ok(FrenetScene {
        scene: out,
        reference: reference.clone(),
        origin_s,
        flags,
    })
}

/// Inverse of [`scene_to_frenet`]. Lane headings are re-derived from the
/// back-projected neighbouring points.
pub fn scene_to_cartesian(fscene: &FrenetScene) -> Result<Scene> {
    match fscene.scene.frame {
        Frame::Frenet { centerline_index } if centerline_index == fscene.reference.index => {}
        Frame::Frenet { .. } => {
            return Err(Error::InvalidParams(
                "frenet scene does not carry its reference centerline".into(),
            ))
        }
        Frame::Cartesian => return Err(Error::WrongFrame { expected: "frenet" }),
    }
    let poly = &fscene.reference.polyline;
    let back = |s: f64, d: f64| poly.to_cartesian(FrenetPoint::new(s + fscene.origin_s, d)).0;

    let mut out = fscene.scene.clone();
    out.frame = Frame::Cartesian;
    for agent in &mut out.agents {
        for st in &mut agent.states {
            let s_abs = st.x + fscene.origin_s;
            let p = back(st.x, st.y);
            *st = AgentState {
                x: p.x,
                y: p.y,
                heading: normalize_angle(st.heading + poly.tangent_heading_at(s_abs)),
                ..*st
            };
        }
    }
    for lane in &mut out.lanes {
        let pts: Vec<Vec2> = lane.centerline.iter().map(|q| back(q.x, q.y)).collect();
        lane.centerline = pts
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let prev = pts[i.saturating_sub(1)];
                let next = pts[(i + 1).min(pts.len() - 1)];
                let dir = next - prev;
                LanePose {
                    x: p.x,
                    y: p.y,
                    attr: PoseAttr::Heading(normalize_angle(dir.y.atan2(dir.x))),
                }
            })
            .collect();
    }
    if let Some(gt) = &mut out.gt_future {
        for p in gt.iter_mut() {
            *p = back(p.x, p.y);
        }
    }
    Ok(out)
}
