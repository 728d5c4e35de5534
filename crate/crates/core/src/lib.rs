pub mod aggregation;
pub mod centerlines;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod lane_scorer;
pub mod metrics;
pub mod pipeline;
pub mod predictors;
pub mod scene;
pub mod scene_attack;
pub mod synthgen;

pub use error::{Error, Result};
