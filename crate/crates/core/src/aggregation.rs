//! Reduce the K·N per-centerline candidates to a final forecast.
//!
//! Candidates are first marginalized against a prior over centerlines
//! (uniform, learned, or the ground-truth one), then thinned either by
//! greedy endpoint suppression or by k-means over endpoints.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::centerlines::{assign_gt_centerline, CenterlineSequence};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::lane_scorer::LaneScorer;
use crate::predictors::{Candidate, WrappedPrediction, PROB_TOLERANCE};
use crate::scene::{Scene, Trajectory};

pub const DEFAULT_NMS_RADIUS: f64 = 1.0;
pub const DEFAULT_K_HAT: usize = 6;
const KMEANS_MAX_ITER: usize = 100;
const KMEANS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    GreedySampling,
    LaneScoring,
    Kmeans,
    Uniform,
    Privileged,
    All,
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "greedy_sampling" | "greedy" => Self::GreedySampling,
            "lane_scoring" => Self::LaneScoring,
            "kmeans" => Self::Kmeans,
            "uniform" => Self::Uniform,
            "privileged" => Self::Privileged,
            "all" => Self::All,
            _ => return Err(Error::InvalidParams(format!("unknown strategy `{s}`"))),
        })
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::GreedySampling => "greedy_sampling",
            Self::LaneScoring => "lane_scoring",
            Self::Kmeans => "kmeans",
            Self::Uniform => "uniform",
            Self::Privileged => "privileged",
            Self::All => "all",
        })
    }
}

/// Where the prior over centerlines comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorSource {
    Uniform,
    Scorer,
    Privileged,
}

impl FromStr for PriorSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "uniform" => Self::Uniform,
            "scorer" => Self::Scorer,
            "privileged" => Self::Privileged,
            _ => return Err(Error::InvalidParams(format!("unknown prior `{s}`"))),
        })
    }
}

/// Size of the final set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KHat {
    Fixed(usize),
    /// Keep every candidate.
    All,
}

impl FromStr for KHat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "all" {
            return Ok(Self::All);
        }
        match s.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Self::Fixed(n)),
            _ => Err(Error::InvalidParams(format!("k_hat must be a positive integer or `all`, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregationConfig {
    pub strategy: Strategy,
    pub k_hat: KHat,
    pub nms_radius: f64,
    /// Defaults to the prior implied by the strategy.
    pub prior: Option<PriorSource>,
    pub seed: u64,
}

impl Default for AggregationConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::GreedySampling,
            k_hat: KHat::Fixed(DEFAULT_K_HAT),
            nms_radius: DEFAULT_NMS_RADIUS,
            prior: None,
            seed: 0,
        }
    }
}

impl AggregationConfig {
    /// The prior actually used, rejecting contradictory combinations.
    pub fn effective_prior(&self) -> Result<PriorSource> {
        let implied = match self.strategy {
            Strategy::LaneScoring => Some(PriorSource::Scorer),
            Strategy::Uniform => Some(PriorSource::Uniform),
            Strategy::Privileged => Some(PriorSource::Privileged),
            _ => None,
        };
        match (implied, self.prior) {
            (Some(a), Some(b)) if a != b => Err(Error::InvalidParams(format!(
                "strategy {} cannot use a {b:?} prior",
                self.strategy
            ))),
            (Some(a), _) => Ok(a),
            (None, Some(b)) => Ok(b),
            (None, None) => Ok(PriorSource::Uniform),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nms_radius > 0.0) {
            return Err(Error::InvalidParams(format!("nms radius must be positive, got {}", self.nms_radius)));
        }
        self.effective_prior().map(|_| ())
    }
}

/// The final forecast for one scene.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub scene_id: String,
    pub trajectories: Vec<Trajectory>,
    /// Parallel to `trajectories`: member was re-admitted after suppression.
    pub refilled: Vec<bool>,
}

impl PredictionSet {
    pub fn total_probability(&self) -> f64 {
        self.trajectories.iter().map(|t| t.probability).sum()
    }
}

fn group(c: &Candidate) -> usize {
    c.source_centerline.unwrap_or(0)
}

/// `p(t) = p(t | C) p(C)` for every candidate.
pub fn marginalize(candidates: &[Candidate], priors: &[f64]) -> Result<Vec<Trajectory>> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let prior_sum: f64 = priors.iter().sum();
    if priors.iter().any(|p| !(*p >= 0.0)) || (prior_sum - 1.0).abs() > PROB_TOLERANCE {
        return Err(Error::NotNormalized(format!("priors sum to {prior_sum}")));
    }
    let mut cond_sums = vec![0.0; priors.len()];
    for c in candidates {
        let g = group(c);
        let slot = cond_sums.get_mut(g).ok_or_else(|| {
            Error::InvalidParams(format!("candidate references centerline {g} of {}", priors.len()))
        })?;
        *slot += c.conditional_prob;
    }
    let present: Vec<bool> = {
        let mut v = vec![false; priors.len()];
        candidates.iter().for_each(|c| v[group(c)] = true);
        v
    };
    for (g, (&sum, &here)) in cond_sums.iter().zip(&present).enumerate() {
        if here && (sum - 1.0).abs() > PROB_TOLERANCE {
            return Err(Error::Normalization { frame_index: g, sum });
        }
    }
    Ok(candidates
        .iter()
        .map(|c| Trajectory {
            waypoints: c.waypoints.clone(),
            probability: c.conditional_prob * priors[group(c)],
            source_centerline: c.source_centerline,
        })
        .collect())
}

/// Indices sorted by descending probability; ties keep input order.
fn by_probability(trajs: &[Trajectory]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..trajs.len()).collect();
    order.sort_by(|&a, &b| trajs[b].probability.total_cmp(&trajs[a].probability));
    order
}

fn renormalized(scene_id: &str, picked: Vec<(Trajectory, bool)>) -> Result<PredictionSet> {
    let total: f64 = picked.iter().map(|(t, _)| t.probability).sum();
    let n = picked.len() as f64;
    let (trajectories, refilled) = picked
        .into_iter()
        .map(|(mut t, r)| {
            // All-zero mass (e.g. only zero-prior candidates) falls back to uniform.
            t.probability = if total > 0.0 { t.probability / total } else { 1.0 / n };
            (t, r)
        })
        .unzip();
    Ok(PredictionSet {
        scene_id: scene_id.to_string(),
        trajectories,
        refilled,
    })
}

/// Greedy endpoint non-maximum suppression with refill.
///
/// Output is ordered by descending probability; members admitted only
/// through refill are flagged.
pub fn greedy_select(
    scene_id: &str,
    candidates: &[Trajectory],
    k_hat: usize,
    nms_radius: f64,
) -> Result<PredictionSet> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let order = by_probability(candidates);
    let mut selected: Vec<usize> = Vec::new();
    let mut suppressed: Vec<usize> = Vec::new();
    let mut alive = vec![true; candidates.len()];
    for &i in &order {
        if selected.len() == k_hat {
            break;
        }
        if !alive[i] {
            continue;
        }
        selected.push(i);
        alive[i] = false;
        let e = candidates[i].endpoint();
        for &j in &order {
            if alive[j] && (candidates[j].endpoint() - e).norm() <= nms_radius {
                alive[j] = false;
                suppressed.push(j);
            }
        }
    }
    let mut picked: Vec<(usize, bool)> = selected.iter().map(|&i| (i, false)).collect();
    if picked.len() < k_hat {
        suppressed.sort_by(|&a, &b| {
            candidates[b]
                .probability
                .total_cmp(&candidates[a].probability)
                .then(a.cmp(&b))
        });
        picked.extend(suppressed.into_iter().take(k_hat - picked.len()).map(|i| (i, true)));
    }
    picked.sort_by(|a, b| {
        candidates[b.0]
            .probability
            .total_cmp(&candidates[a.0].probability)
            .then(a.1.cmp(&b.1))
    });
    renormalized(
        scene_id,
        picked
            .into_iter()
            .map(|(i, r)| (candidates[i].clone(), r))
            .collect(),
    )
}

/// Harmonic number H(n).
pub fn harmonic(n: usize) -> f64 {
    (1..=n).map(|i| 1.0 / i as f64).sum()
}

/// Plain k-means on 2-D points with k-means++ seeding; returns assignments
/// and centroids.
pub fn kmeans(points: &[Vec2], k: usize, seed: u64) -> (Vec<usize>, Vec<Vec2>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = points.len();
    let mut centroids = vec![points[rng.random_range(0..n)]];
    while centroids.len() < k {
        let d2: Vec<f64> = points
            .iter()
            .map(|p| {
                centroids
                    .iter()
                    .map(|c| (p - c).norm_squared())
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if r < w {
                    pick = i;
                    break;
                }
                r -= w;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        centroids.push(points[next]);
    }

    let mut assign = vec![0usize; n];
    for _ in 0..KMEANS_MAX_ITER {
        for (i, p) in points.iter().enumerate() {
            let mut best = (f64::INFINITY, 0);
            for (c, q) in centroids.iter().enumerate() {
                let d = (p - q).norm_squared();
                if d < best.0 {
                    best = (d, c);
                }
            }
            assign[i] = best.1;
        }
        // Re-seed empty clusters with the farthest member of the largest one.
        for c in 0..k {
            if assign.iter().any(|&a| a == c) {
                continue;
            }
            let mut counts = vec![0usize; k];
            assign.iter().for_each(|&a| counts[a] += 1);
            let big = (0..k).max_by_key(|&j| (counts[j], std::cmp::Reverse(j))).unwrap();
            if counts[big] < 2 {
                break;
            }
            let far = (0..n)
                .filter(|&i| assign[i] == big)
                .max_by(|&a, &b| {
                    (points[a] - centroids[big])
                        .norm_squared()
                        .total_cmp(&(points[b] - centroids[big]).norm_squared())
                })
                .unwrap();
            assign[far] = c;
        }
        let mut shift: f64 = 0.0;
        for (c, centroid) in centroids.iter_mut().enumerate() {
            let members: Vec<Vec2> = (0..n).filter(|&i| assign[i] == c).map(|i| points[i]).collect();
            if members.is_empty() {
                continue;
            }
            let mean = members.iter().fold(Vec2::zeros(), |a, b| a + b) / members.len() as f64;
            shift = shift.max((mean - *centroid).norm());
            *centroid = mean;
        }
        if shift < KMEANS_TOL {
            break;
        }
    }
    (assign, centroids)
}

/// Endpoint clustering; each cluster's most central member represents it
/// with probability proportional to the inverse rank of the cluster.
pub fn kmeans_select(
    scene_id: &str,
    candidates: &[Trajectory],
    k_hat: usize,
    seed: u64,
) -> Result<PredictionSet> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let inverse_rank = |picked: Vec<Trajectory>| {
        let h = harmonic(picked.len());
        let trajectories: Vec<Trajectory> = picked
            .into_iter()
            .enumerate()
            .map(|(r, mut t)| {
                t.probability = 1.0 / ((r + 1) as f64 * h);
                t
            })
            .collect();
        PredictionSet {
            scene_id: scene_id.to_string(),
            refilled: vec![false; trajectories.len()],
            trajectories,
        }
    };
    if candidates.len() <= k_hat {
        let order = by_probability(candidates);
        return Ok(inverse_rank(order.into_iter().map(|i| candidates[i].clone()).collect()));
    }
    let endpoints: Vec<Vec2> = candidates.iter().map(Trajectory::endpoint).collect();
    let (assign, centroids) = kmeans(&endpoints, k_hat, seed);
    let mut clusters: Vec<(usize, f64, usize)> = Vec::new();
    for (c, centroid) in centroids.iter().enumerate() {
        let members: Vec<usize> = (0..candidates.len()).filter(|&i| assign[i] == c).collect();
        if members.is_empty() {
            continue;
        }
        let mass: f64 = members.iter().map(|&i| candidates[i].probability).sum();
        let rep = *members
            .iter()
            .min_by(|&&a, &&b| {
                (endpoints[a] - centroid)
                    .norm_squared()
                    .total_cmp(&(endpoints[b] - centroid).norm_squared())
            })
            .unwrap();
        clusters.push((members.len(), mass, rep));
    }
    clusters.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.total_cmp(&a.1)).then(a.2.cmp(&b.2)));
    Ok(inverse_rank(
        clusters.into_iter().map(|(_, _, i)| candidates[i].clone()).collect(),
    ))
}

pub fn uniform_prior(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// All mass on the centerline the ground truth follows.
pub fn privileged_prior(scene: &Scene, seqs: &[CenterlineSequence]) -> Result<Vec<f64>> {
    let idx = assign_gt_centerline(scene, seqs)?;
    let mut p = vec![0.0; seqs.len()];
    p[idx] = 1.0;
    Ok(p)
}

/// Prior over the wrapped prediction's centerlines.
pub fn resolve_prior(
    scene: &Scene,
    wrapped: &WrappedPrediction,
    source: PriorSource,
    scorer: Option<&LaneScorer>,
) -> Result<Vec<f64>> {
    let seqs = &wrapped.sequences;
    match source {
        PriorSource::Uniform => Ok(uniform_prior(seqs.len().max(1))),
        PriorSource::Privileged => privileged_prior(scene, seqs),
        PriorSource::Scorer => {
            let scorer = scorer.ok_or_else(|| {
                Error::InvalidParams("the scorer prior needs a lane-scoring model".into())
            })?;
            scorer.score_centerlines(scene, seqs)
        }
    }
}

/// Marginalize and select according to `config`.
pub fn aggregate(
    scene: &Scene,
    wrapped: &WrappedPrediction,
    config: &AggregationConfig,
    scorer: Option<&LaneScorer>,
) -> Result<PredictionSet> {
    config.validate()?;
    let priors = if wrapped.sequences.is_empty() {
        vec![1.0]
    } else {
        resolve_prior(scene, wrapped, config.effective_prior()?, scorer)?
    };
    let mut marginal = marginalize(&wrapped.candidates, &priors)?;
    if config.effective_prior()? == PriorSource::Privileged {
        marginal.retain(|t| t.probability > 0.0);
    }
    select(&scene.scene_id, marginal, config)
}

/// Selection step alone, for candidates that already carry marginals.
pub fn select(scene_id: &str, marginal: Vec<Trajectory>, config: &AggregationConfig) -> Result<PredictionSet> {
    let k_hat = match config.k_hat {
        KHat::Fixed(n) => n,
        KHat::All => marginal.len(),
    };
    match config.strategy {
        Strategy::All => {
            let order = by_probability(&marginal);
            renormalized(
                scene_id,
                order.into_iter().map(|i| (marginal[i].clone(), false)).collect(),
            )
        }
        Strategy::Kmeans => kmeans_select(scene_id, &marginal, k_hat, config.seed),
        Strategy::GreedySampling | Strategy::LaneScoring | Strategy::Uniform | Strategy::Privileged => {
            greedy_select(scene_id, &marginal, k_hat, config.nms_radius)
        }
    }
}
