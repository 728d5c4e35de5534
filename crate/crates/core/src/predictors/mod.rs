//! The predictor contract and its implementations.
//!
//! A predictor receives one batch of requests per scene, one per reference
//! frame, and answers each with exactly `k` trajectories of
//! [`FUTURE_STEPS`] waypoints plus conditional probabilities that sum to 1.
//! Responses are validated at this boundary so downstream code can rely on
//! the shape.

mod ca;
mod external;
mod wrap;

pub use ca::{ca_profile, current_acceleration, predict_ca, CaPredictor, CA_ACCELERATIONS, CA_K};
pub use external::{serve_loopback, ExternalPredictor, LoopbackFault, DEFAULT_TIMEOUT};
pub use wrap::{predict_cartesian, wrap_frenet, wrap_with_sequences, Candidate, WrappedPrediction};

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::scene::{Scene, FUTURE_STEPS};

/// Tolerance on the per-frame probability sum.
pub const PROB_TOLERANCE: f64 = 1e-6;

/// One frame of a batched prediction request.
#[derive(Debug, Clone)]
pub struct PredictorRequest {
    pub frame_index: usize,
    pub k: usize,
    /// Cartesian or Frenet-tagged scene, stripped of its ground truth.
    pub scene: Scene,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictorResponse {
    pub frame_index: usize,
    /// `k` trajectories in the request's frame.
    pub trajectories: Vec<Vec<Vec2>>,
    /// Probabilities conditioned on the request's reference.
    pub probs: Vec<f64>,
}

pub trait Predictor {
    /// Answer all frames of one scene in a single call.
    fn predict(&mut self, scene_id: &str, requests: &[PredictorRequest])
        -> Result<Vec<PredictorResponse>>;
}

/// Checks a response against its request.
pub fn validate_response(req: &PredictorRequest, resp: &PredictorResponse) -> Result<()> {
    let i = req.frame_index;
    if resp.frame_index != i {
        return Err(Error::Shape(format!(
            "response for frame {} answers request for frame {i}",
            resp.frame_index
        )));
    }
    if resp.trajectories.len() != req.k {
        return Err(Error::Shape(format!(
            "frame {i}: expected {} trajectories, found {}",
            req.k,
            resp.trajectories.len()
        )));
    }
    if resp.probs.len() != req.k {
        return Err(Error::Shape(format!(
            "frame {i}: expected {} probabilities, found {}",
            req.k,
            resp.probs.len()
        )));
    }
    for (j, traj) in resp.trajectories.iter().enumerate() {
        if traj.len() != FUTURE_STEPS {
            return Err(Error::Shape(format!(
                "frame {i} trajectory {j}: expected {FUTURE_STEPS} waypoints, found {}",
                traj.len()
            )));
        }
        if traj.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(Error::Shape(format!("frame {i} trajectory {j}: non-finite waypoint")));
        }
    }
    let sum: f64 = resp.probs.iter().sum();
    if resp.probs.iter().any(|p| !(p.is_finite() && *p >= 0.0))
        || !((sum - 1.0).abs() <= PROB_TOLERANCE)
    {
        return Err(Error::Normalization { frame_index: i, sum });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::tests::tiny_scene;

    fn response(k: usize) -> PredictorResponse {
        PredictorResponse {
            frame_index: 2,
            trajectories: vec![vec![Vec2::zeros(); FUTURE_STEPS]; k],
            probs: vec![1.0 / k as f64; k],
        }
    }

    fn request(k: usize) -> PredictorRequest {
        PredictorRequest {
            frame_index: 2,
            k,
            scene: tiny_scene(),
        }
    }

    #[test]
    fn well_formed_response_passes() {
        validate_response(&request(6), &response(6)).unwrap();
    }

    #[test]
    fn five_trajectories_for_six_is_a_shape_error() {
        let mut r = response(6);
        r.trajectories.pop();
        assert!(matches!(validate_response(&request(6), &r), Err(Error::Shape(_))));
    }

    #[test]
    fn probs_summing_to_point_eight_name_the_frame() {
        let mut r = response(4);
        r.probs = vec![0.2; 4];
        match validate_response(&request(4), &r) {
            Err(Error::Normalization { frame_index, sum }) => {
                assert_eq!(frame_index, 2);
                assert!((sum - 0.8).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
