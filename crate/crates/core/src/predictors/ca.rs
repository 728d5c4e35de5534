use crate::error::{Error, Result};
use crate::geometry::{heading_vector, Vec2};
use crate::scene::{Frame, Scene, FUTURE_STEPS};

use super::{Predictor, PredictorRequest, PredictorResponse};

/// Fixed branches; a sixth, listed first, uses the TV's current acceleration.
pub const CA_ACCELERATIONS: [f64; 5] = [-4.0, -2.0, 0.0, 2.0, 4.0];
pub const CA_K: usize = 6;

/// Current longitudinal acceleration of the TV: the accel channel when
/// present, else the finite difference of the last two speeds.
pub fn current_acceleration(scene: &Scene) -> Result<f64> {
    let states = &scene.tv().states;
    let cur = states
        .last()
        .ok_or_else(|| Error::InsufficientHistory("empty TV history".into()))?;
    if let Some(a) = cur.accel {
        return Ok(a);
    }
    if states.len() < 2 {
        return Err(Error::InsufficientHistory(
            "need two states to derive acceleration".into(),
        ));
    }
    let prev = &states[states.len() - 2];
    let dt = cur.t - prev.t;
    if !(dt > 0.0) {
        return Err(Error::InsufficientHistory("non-increasing timestamps".into()));
    }
    Ok((cur.speed - prev.speed) / dt)
}

/// `(displacement, speed)` after each of `steps` steps of constant
/// acceleration `a`, stopping instead of reversing.
pub fn ca_profile(v0: f64, a: f64, dt: f64, steps: usize) -> Vec<(f64, f64)> {
    let t_stop = if a < 0.0 { v0 / -a } else { f64::INFINITY };
    (1..=steps)
        .map(|i| {
            let t = (i as f64 * dt).min(t_stop);
            (v0 * t + 0.5 * a * t * t, v0 + a * t)
        })
        .collect()
}

/// Six constant-acceleration rollouts of the TV with uniform probabilities.
///
/// In a Cartesian scene the TV continues along its current heading; in a
/// Frenet scene it advances in `s` at constant lateral offset.
pub fn predict_ca(scene: &Scene, k: usize) -> Result<PredictorResponse> {
    if k != CA_K {
        return Err(Error::InvalidParams(format!(
            "the constant-acceleration model yields {CA_K} trajectories, {k} requested"
        )));
    }
    let a_t = current_acceleration(scene)?;
    let cur = *scene.tv().current();
    let origin = cur.position();
    let axis = match scene.frame {
        Frame::Cartesian => heading_vector(cur.heading),
        Frame::Frenet { .. } => Vec2::new(1.0, 0.0),
    };
    // The current acceleration leads, so probability ties favour it.
    let trajectories = std::iter::once(a_t)
        .chain(CA_ACCELERATIONS)
        .map(|a| {
            ca_profile(cur.speed, a, scene.dt, FUTURE_STEPS)
                .into_iter()
                .map(|(disp, _)| origin + axis * disp)
                .collect()
        })
        .collect();
    Ok(PredictorResponse {
        frame_index: match scene.frame {
            Frame::Frenet { centerline_index } => centerline_index,
            Frame::Cartesian => 0,
        },
        trajectories,
        probs: vec![1.0 / CA_K as f64; CA_K],
    })
}

/// In-process constant-acceleration predictor.
#[derive(Debug, Default, Clone, Copy)]
pub struct CaPredictor;

impl Predictor for CaPredictor {
    fn predict(
        &mut self,
        _scene_id: &str,
        requests: &[PredictorRequest],
    ) -> Result<Vec<PredictorResponse>> {
        requests
            .iter()
            .map(|r| {
                let mut resp = predict_ca(&r.scene, r.k)?;
                resp.frame_index = r.frame_index;
                Ok(resp)
            })
            .collect()
    }
}
