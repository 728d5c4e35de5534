use std::path::{Path, PathBuf};

use anyhow::Context as _;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::aggregation::PredictionSet;
use crate::geometry::Vec2;
use crate::scene::{Trajectory, FUTURE_STEPS};

pub const MANIFEST: &str = "manifest.json";

/// Prediction file: one scene's selected trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionFile {
    pub scene_id: String,
    pub trajectories: Vec<Vec<[f64; 2]>>,
    pub probs: Vec<f64>,
    pub source_centerlines: Vec<Option<usize>>,
}

impl PredictionFile {
    pub fn from_set(set: &PredictionSet) -> Self {
        let t = &set.trajectories;
        Self {
            scene_id: set.scene_id.clone(),
            trajectories: t.iter().map(|t| t.waypoints.iter().map(|p| [p.x, p.y]).collect()).collect(),
            probs: t.iter().map(|t| t.probability).collect(),
            source_centerlines: t.iter().map(|t| t.source_centerline).collect(),
        }
    }

    pub fn to_set(&self) -> anyhow::Result<PredictionSet> {
        let n = self.trajectories.len();
        if self.probs.len() != n || self.source_centerlines.len() != n {
            anyhow::bail!(
                "prediction for {}: {n} trajectories, {} probs, {} sources",
                self.scene_id,
                self.probs.len(),
                self.source_centerlines.len()
            );
        }
        let trajectories = self
            .trajectories
            .iter()
            .zip(&self.probs)
            .zip(&self.source_centerlines)
            .map(|((w, &p), &src)| {
                let t = Trajectory {
                    waypoints: w.iter().map(|q| Vec2::new(q[0], q[1])).collect(),
                    probability: p,
                    source_centerline: src,
                };
                t.check().map(|_| t)
            })
            .collect::<crate::Result<Vec<_>>>()
            .with_context(|| format!("prediction for {}", self.scene_id))?;
        debug_assert!(trajectories.iter().all(|t| t.waypoints.len() == FUTURE_STEPS));
        Ok(PredictionSet {
            scene_id: self.scene_id.clone(),
            refilled: vec![false; trajectories.len()],
            trajectories,
        })
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Scene (or prediction) files of a directory, sorted by name; the
/// manifest is skipped. A single file is returned as is.
pub fn list_scene_files(path: &Path) -> anyhow::Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files = Vec::new();
    for entry in std::fs::read_dir(path).with_context(|| format!("listing {}", path.display()))? {
        let p = entry?.path();
        let is_json = p.extension().is_some_and(|e| e == "json");
        if is_json && p.file_name().is_some_and(|n| n != MANIFEST) {
            files.push(p);
        }
    }
    files.sort();
    Ok(files)
}

pub fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_json(path: &Path) -> anyhow::Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// `manifest.json` with the command, its resolved settings and its results.
pub fn write_manifest(dir: &Path, command: &str, config: Value, body: Value) -> anyhow::Result<()> {
    let mut m = serde_json::json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config,
    });
    if let (Some(m), Value::Object(body)) = (m.as_object_mut(), body) {
        m.extend(body);
    }
    write_json(&dir.join(MANIFEST), &m)
}

/// Error listing the scenes a command could not process.
pub fn partial_failure(what: &str, failures: &[(String, anyhow::Error)]) -> anyhow::Result<()> {
    if failures.is_empty() {
        return Ok(());
    }
    for (id, e) in failures {
        eprintln!("{id}: {e:#}");
    }
    let ids: Vec<&str> = failures.iter().map(|(id, _)| id.as_str()).collect();
    anyhow::bail!("{what} failed for {} scene(s): {}", ids.len(), ids.join(", "))
}

/// File stem used as the scene key when a file cannot be parsed.
pub fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}
