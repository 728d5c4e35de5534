//! End-to-end forecasting of one scene: predictor, optional Frenet
//! wrapping, marginalization and selection.

use std::fmt;
use std::str::FromStr;

use crate::aggregation::{aggregate, marginalize, select, AggregationConfig, PredictionSet};
use crate::error::{Error, Result};
use crate::lane_scorer::LaneScorer;
use crate::predictors::{predict_cartesian, wrap_frenet, Predictor, CA_K};
use crate::scene::Scene;

/// Which predictor to run and in which frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelSpec {
    /// Constant acceleration in the Cartesian frame.
    Ca,
    /// Constant acceleration wrapped in every centerline's Frenet frame.
    CaSd,
    /// Child process speaking the line protocol, wrapped like `CaSd`.
    External(String),
}

impl ModelSpec {
    pub fn wrapped(&self) -> bool {
        !matches!(self, Self::Ca)
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ca" => Ok(Self::Ca),
            "ca-sd" => Ok(Self::CaSd),
            _ => match s.strip_prefix("external:") {
                Some(cmd) if !cmd.trim().is_empty() => Ok(Self::External(cmd.to_string())),
                _ => Err(Error::InvalidParams(format!(
                    "unknown model `{s}` (expected ca, ca-sd or external:<command>)"
                ))),
            },
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Ca => f.write_str("ca"),
            Self::CaSd => f.write_str("ca-sd"),
            Self::External(cmd) => write!(f, "external:{cmd}"),
        }
    }
}

/// Forecast one scene with `predictor` producing `k` trajectories per frame.
///
/// Unwrapped predictions form a single group with prior 1 and go straight
/// to selection.
pub fn forecast(
    scene: &Scene,
    predictor: &mut dyn Predictor,
    wrapped: bool,
    k: usize,
    config: &AggregationConfig,
    scorer: Option<&LaneScorer>,
) -> Result<PredictionSet> {
    if wrapped {
        let w = wrap_frenet(scene, predictor, k)?;
        aggregate(scene, &w, config, scorer)
    } else {
        config.validate()?;
        let candidates = predict_cartesian(scene, predictor, k)?;
        select(&scene.scene_id, marginalize(&candidates, &[1.0])?, config)
    }
}

/// [`forecast`] with the built-in constant-acceleration predictor.
pub fn forecast_ca(
    scene: &Scene,
    wrapped: bool,
    config: &AggregationConfig,
    scorer: Option<&LaneScorer>,
) -> Result<PredictionSet> {
    forecast(scene, &mut crate::predictors::CaPredictor, wrapped, CA_K, config, scorer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::tests::tiny_scene;

    #[test]
    fn model_names_round_trip() {
        for s in ["ca", "ca-sd", "external:python3 model.py"] {
            assert_eq!(s.parse::<ModelSpec>().unwrap().to_string(), s);
        }
        assert!("external:".parse::<ModelSpec>().is_err());
        assert!("lanegcn".parse::<ModelSpec>().is_err());
    }

    #[test]
    fn straight_road_forecasts_agree() {
        let scene = tiny_scene();
        let cfg = AggregationConfig::default();
        let a = forecast_ca(&scene, false, &cfg, None).unwrap();
        let b = forecast_ca(&scene, true, &cfg, None).unwrap();
        assert_eq!(a.trajectories.len(), b.trajectories.len());
        assert!((a.total_probability() - 1.0).abs() < 1e-9);
        for (x, y) in a.trajectories.iter().zip(&b.trajectories) {
            assert!((x.endpoint() - y.endpoint()).norm() < 1e-6);
        }
    }
}
