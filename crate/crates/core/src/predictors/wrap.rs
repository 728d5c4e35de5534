use crate::centerlines::{enumerate_sequences, CenterlineSequence};
use crate::error::{Error, Result};
use crate::geometry::{scene_to_frenet, Vec2};
use crate::scene::Scene;

use super::{validate_response, Predictor, PredictorRequest};

/// A back-projected trajectory with its probability given its reference.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub waypoints: Vec<Vec2>,
    pub conditional_prob: f64,
    /// `None` for predictions made directly in the Cartesian frame.
    pub source_centerline: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct WrappedPrediction {
    pub sequences: Vec<CenterlineSequence>,
    /// `k` candidates per sequence, grouped by sequence.
    pub candidates: Vec<Candidate>,
}

/// Predict once per centerline sequence in that sequence's Frenet frame and
/// map every waypoint back to Cartesian coordinates.
pub fn wrap_frenet(
    scene: &Scene,
    predictor: &mut dyn Predictor,
    k: usize,
) -> Result<WrappedPrediction> {
    let sequences = enumerate_sequences(scene)?;
    wrap_with_sequences(scene, sequences, predictor, k)
}

/// As [`wrap_frenet`] with an explicit set of references.
pub fn wrap_with_sequences(
    scene: &Scene,
    sequences: Vec<CenterlineSequence>,
    predictor: &mut dyn Predictor,
    k: usize,
) -> Result<WrappedPrediction> {
    if sequences.is_empty() {
        return Err(Error::InvalidParams("no centerline sequences".into()));
    }
    let frames = sequences
        .iter()
        .map(|seq| scene_to_frenet(scene, seq))
        .collect::<Result<Vec<_>>>()?;
    let requests: Vec<PredictorRequest> = frames
        .iter()
        .map(|f| {
            let mut s = f.scene.clone();
            s.gt_future = None;
            PredictorRequest {
                frame_index: f.reference.index,
                k,
                scene: s,
            }
        })
        .collect();
    let responses = predictor.predict(&scene.scene_id, &requests)?;
    if responses.len() != requests.len() {
        return Err(Error::Shape(format!(
            "expected {} frames, found {}",
            requests.len(),
            responses.len()
        )));
    }
    let mut candidates = Vec::with_capacity(k * frames.len());
    for ((req, resp), frame) in requests.iter().zip(&responses).zip(&frames) {
        validate_response(req, resp)?;
        for (traj, &p) in resp.trajectories.iter().zip(&resp.probs) {
            candidates.push(Candidate {
                waypoints: traj.iter().map(|&q| frame.point_to_cartesian(q)).collect(),
                conditional_prob: p,
                source_centerline: Some(frame.reference.index),
            });
        }
    }
    Ok(WrappedPrediction {
        sequences,
        candidates,
    })
}

/// Query the predictor once on the untransformed scene.
pub fn predict_cartesian(
    scene: &Scene,
    predictor: &mut dyn Predictor,
    k: usize,
) -> Result<Vec<Candidate>> {
    if !scene.is_cartesian() {
        return Err(Error::WrongFrame { expected: "cartesian" });
    }
    let mut s = scene.clone();
    s.gt_future = None;
    let req = PredictorRequest {
        frame_index: 0,
        k,
        scene: s,
    };
    let resp = predictor
        .predict(&scene.scene_id, std::slice::from_ref(&req))?
        .pop()
        .ok_or_else(|| Error::Shape("no frames in response".into()))?;
    validate_response(&req, &resp)?;
    Ok(resp
        .trajectories
        .into_iter()
        .zip(resp.probs)
        .map(|(waypoints, conditional_prob)| Candidate {
            waypoints,
            conditional_prob,
            source_centerline: None,
        })
        .collect())
}
