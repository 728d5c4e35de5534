//! Feedforward centerline scorer.
//!
//! Each centerline sequence gets a logit from the TV history and ten points
//! sampled along the sequence, both expressed relative to the TV's current
//! pose. A softmax across the scene's sequences turns logits into a prior.
//!
//! ```text
//! history (84) -> affine -> 64 \
//!                               concat(128) -> 512 -> relu -> 512 -> relu -> 1
//! points  (20) -> affine -> 64 /
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{concatenate, s, Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::centerlines::{CenterlineSequence, HORIZON_AHEAD};
use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, Vec2};
use crate::scene::{Scene, HISTORY_STEPS};

pub const EMBED: usize = 64;
pub const CENTERLINE_POINTS: usize = 10;
pub const HIDDEN: usize = 512;
pub const HISTORY_FEATURES: usize = (HISTORY_STEPS + 1) * 4;
pub const CENTERLINE_FEATURES: usize = CENTERLINE_POINTS * 2;
const MODEL_VERSION: u64 = 1;

/// Feature scales: positions in units of 20 m, speed in units of 10 m/s.
const POSITION_SCALE: f64 = 20.0;
const SPEED_SCALE: f64 = 10.0;

/// Encoded inputs of one scene: the shared history row and one row per
/// centerline sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ScorerInput {
    pub history: Array1<f64>,
    pub centerlines: Array2<f64>,
}

fn to_tv_frame(origin: Vec2, heading: f64) -> impl Fn(Vec2) -> Vec2 {
    let (sin, cos) = heading.sin_cos();
    move |p: Vec2| {
        let q = p - origin;
        Vec2::new(cos * q.x + sin * q.y, -sin * q.x + cos * q.y)
    }
}

/// History features: `(x, y, heading, speed)` per state, TV-relative.
pub fn encode_history(scene: &Scene) -> Result<Array1<f64>> {
    let tv = scene.tv();
    if tv.states.len() != HISTORY_STEPS + 1 {
        return Err(Error::InsufficientHistory(format!(
            "scorer needs {} states, found {}",
            HISTORY_STEPS + 1,
            tv.states.len()
        )));
    }
    let cur = *tv.current();
    let rel = to_tv_frame(cur.position(), cur.heading);
    let mut out = Vec::with_capacity(HISTORY_FEATURES);
    for st in &tv.states {
        let p = rel(st.position());
        out.extend([
            p.x / POSITION_SCALE,
            p.y / POSITION_SCALE,
            normalize_angle(st.heading - cur.heading),
            st.speed / SPEED_SCALE,
        ]);
    }
    Ok(Array1::from(out))
}

/// Ten points spread evenly over the road ahead of the TV, TV-relative.
pub fn encode_centerline(scene: &Scene, seq: &CenterlineSequence) -> [f64; CENTERLINE_FEATURES] {
    let cur = *scene.tv().current();
    let rel = to_tv_frame(cur.position(), cur.heading);
    let step = HORIZON_AHEAD / CENTERLINE_POINTS as f64;
    let mut out = [0.0; CENTERLINE_FEATURES];
    for i in 0..CENTERLINE_POINTS {
        let s = (seq.start_s_tv + step * (i + 1) as f64).min(seq.polyline.length());
        let p = rel(seq.polyline.point_at(s));
        out[2 * i] = p.x / POSITION_SCALE;
        out[2 * i + 1] = p.y / POSITION_SCALE;
    }
    out
}

pub fn encode(scene: &Scene, seqs: &[CenterlineSequence]) -> Result<ScorerInput> {
    let history = encode_history(scene)?;
    let mut centerlines = Array2::zeros((seqs.len(), CENTERLINE_FEATURES));
    for (i, seq) in seqs.iter().enumerate() {
        centerlines
            .row_mut(i)
            .assign(&ArrayView1::from(&encode_centerline(scene, seq)[..]));
    }
    Ok(ScorerInput {
        history,
        centerlines,
    })
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|x| x / z).collect()
}

/// All trainable tensors. Weights are stored `(fan_in, fan_out)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScorerParams {
    pub hist_w: Array2<f64>,
    pub hist_b: Array1<f64>,
    pub cl_w: Array2<f64>,
    pub cl_b: Array1<f64>,
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub w3: Array2<f64>,
    pub b3: Array1<f64>,
}

macro_rules! for_each_block {
    ($m:ident) => {
        $m!(hist_w, hist_b, cl_w, cl_b, w1, b1, w2, b2, w3, b3)
    };
}

impl ScorerParams {
    /// Uniform in ±sqrt(6 / (fan_in + fan_out)) for weights, zero biases.
    pub fn init(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = |fan_in: usize, fan_out: usize| {
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            Array2::from_shape_simple_fn((fan_in, fan_out), || rng.random_range(-a..a))
        };
        Self {
            hist_w: w(HISTORY_FEATURES, EMBED),
            hist_b: Array1::zeros(EMBED),
            cl_w: w(CENTERLINE_FEATURES, EMBED),
            cl_b: Array1::zeros(EMBED),
            w1: w(2 * EMBED, HIDDEN),
            b1: Array1::zeros(HIDDEN),
            w2: w(HIDDEN, HIDDEN),
            b2: Array1::zeros(HIDDEN),
            w3: w(HIDDEN, 1),
            b3: Array1::zeros(1),
        }
    }

    fn zeros_like(&self) -> Self {
        macro_rules! z {
            ($($f:ident),*) => { Self { $($f: ndarray::Array::zeros(self.$f.raw_dim())),* } };
        }
        for_each_block!(z)
    }

    /// Named flat views of every block, in a fixed order.
    pub fn blocks(&self) -> Vec<(&'static str, Vec<usize>, &[f64])> {
        macro_rules! b {
            ($($f:ident),*) => {
                vec![$((stringify!($f), self.$f.shape().to_vec(),
                        self.$f.as_slice().expect("standard layout"))),*]
            };
        }
        for_each_block!(b)
    }

    fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        macro_rules! b {
            ($($f:ident),*) => {
                vec![$(self.$f.as_slice_mut().expect("standard layout")),*]
            };
        }
        for_each_block!(b)
    }

    pub fn is_finite(&self) -> bool {
        self.blocks().iter().all(|(_, _, d)| d.iter().all(|x| x.is_finite()))
    }
}

struct Cache {
    xh: Array2<f64>,
    xc: Array2<f64>,
    z0: Array2<f64>,
    z1: Array2<f64>,
    a1: Array2<f64>,
    z2: Array2<f64>,
    a2: Array2<f64>,
    logits: Array1<f64>,
}

fn relu(z: &Array2<f64>) -> Array2<f64> {
    z.mapv(|v| v.max(0.0))
}

impl ScorerParams {
    fn forward(&self, xh: Array2<f64>, xc: Array2<f64>) -> Cache {
        let h = xh.dot(&self.hist_w) + &self.hist_b;
        let c = xc.dot(&self.cl_w) + &self.cl_b;
        let z0 = concatenate![Axis(1), h, c];
        let z1 = z0.dot(&self.w1) + &self.b1;
        let a1 = relu(&z1);
        let z2 = a1.dot(&self.w2) + &self.b2;
        let a2 = relu(&z2);
        let logits = (a2.dot(&self.w3) + &self.b3).column(0).to_owned();
        Cache {
            xh,
            xc,
            z0,
            z1,
            a1,
            z2,
            a2,
            logits,
        }
    }

    fn backward(&self, cache: &Cache, dlogits: &Array1<f64>) -> ScorerParams {
        let dl = dlogits.view().insert_axis(Axis(1));
        let w3 = cache.a2.t().dot(&dl);
        let b3 = dl.sum_axis(Axis(0));
        let mut dz2 = dl.dot(&self.w3.t());
        dz2.zip_mut_with(&cache.z2, |g, &z| if z <= 0.0 { *g = 0.0 });
        let w2 = cache.a1.t().dot(&dz2);
        let b2 = dz2.sum_axis(Axis(0));
        let mut dz1 = dz2.dot(&self.w2.t());
        dz1.zip_mut_with(&cache.z1, |g, &z| if z <= 0.0 { *g = 0.0 });
        let w1 = cache.z0.t().dot(&dz1);
        let b1 = dz1.sum_axis(Axis(0));
        let dz0 = dz1.dot(&self.w1.t());
        let dh = dz0.slice(s![.., ..EMBED]);
        let dc = dz0.slice(s![.., EMBED..]);
        let std = |a: Array2<f64>| a.as_standard_layout().into_owned();
        ScorerParams {
            hist_w: std(cache.xh.t().dot(&dh)),
            hist_b: dh.sum_axis(Axis(0)),
            cl_w: std(cache.xc.t().dot(&dc)),
            cl_b: dc.sum_axis(Axis(0)),
            w1: std(w1),
            b1,
            w2: std(w2),
            b2,
            w3: std(w3),
            b3,
        }
    }

    /// Logits of one scene's sequences.
    pub fn logits(&self, input: &ScorerInput) -> Vec<f64> {
        let n = input.centerlines.nrows();
        let xh = input
            .history
            .broadcast((n, HISTORY_FEATURES))
            .expect("history row broadcasts")
            .to_owned();
        self.forward(xh, input.centerlines.clone()).logits.to_vec()
    }
}

/// One training example: encoded scene and the index of its true sequence.
#[derive(Debug, Clone)]
pub struct ScorerSample {
    pub input: ScorerInput,
    pub gt_index: usize,
}

/// Stack samples into batch matrices; returns (xh, xc, groups of (start, len, gt)).
fn stack(samples: &[&ScorerSample]) -> (Array2<f64>, Array2<f64>, Vec<(usize, usize, usize)>) {
    let rows: usize = samples.iter().map(|s| s.input.centerlines.nrows()).sum();
    let mut xh = Array2::zeros((rows, HISTORY_FEATURES));
    let mut xc = Array2::zeros((rows, CENTERLINE_FEATURES));
    let mut groups = Vec::with_capacity(samples.len());
    let mut r = 0;
    for s in samples {
        let n = s.input.centerlines.nrows();
        for i in 0..n {
            xh.row_mut(r + i).assign(&s.input.history);
        }
        xc.slice_mut(s![r..r + n, ..]).assign(&s.input.centerlines);
        groups.push((r, n, s.gt_index));
        r += n;
    }
    (xh, xc, groups)
}

/// Mean cross-entropy of a batch and its logit gradient.
fn cross_entropy(logits: &Array1<f64>, groups: &[(usize, usize, usize)]) -> (f64, Array1<f64>) {
    let b = groups.len() as f64;
    let mut loss = 0.0;
    let mut grad = Array1::zeros(logits.len());
    for &(start, n, gt) in groups {
        let p = softmax(&logits.as_slice().unwrap()[start..start + n]);
        loss -= p[gt].max(f64::MIN_POSITIVE).ln();
        for (j, pj) in p.iter().enumerate() {
            grad[start + j] = (pj - if j == gt { 1.0 } else { 0.0 }) / b;
        }
    }
    (loss / b, grad)
}

impl ScorerParams {
    /// Mean cross-entropy over `samples` and its parameter gradient.
    pub fn loss_and_grad(&self, samples: &[&ScorerSample]) -> (f64, ScorerParams) {
        let (xh, xc, groups) = stack(samples);
        let cache = self.forward(xh, xc);
        let (loss, dl) = cross_entropy(&cache.logits, &groups);
        (loss, self.backward(&cache, &dl))
    }

    pub fn loss(&self, samples: &[&ScorerSample]) -> f64 {
        let (xh, xc, groups) = stack(samples);
        cross_entropy(&self.forward(xh, xc).logits, &groups).0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    /// Mini-batch gradient descent with heavy-ball momentum.
    Momentum,
    Adam,
}

impl std::str::FromStr for Optimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "momentum" | "sgd" => Ok(Self::Momentum),
            "adam" => Ok(Self::Adam),
            _ => Err(Error::InvalidParams(format!("unknown optimizer `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub optimizer: Optimizer,
    pub momentum: f64,
    pub seed: u64,
    /// Stop after this many updates (0 = no limit).
    pub max_steps: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            lr: 1e-4,
            batch_size: 128,
            optimizer: Optimizer::Adam,
            momentum: 0.9,
            seed: 0,
            max_steps: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean training loss before any update.
    pub initial_loss: f64,
    /// Mean training loss after each epoch.
    pub epoch_losses: Vec<f64>,
    pub steps: usize,
    /// Samples dropped because they have a single sequence.
    pub skipped: usize,
}

struct OptState {
    m: ScorerParams,
    v: ScorerParams,
    t: i32,
}

fn apply_update(params: &mut ScorerParams, grad: &ScorerParams, st: &mut OptState, cfg: &TrainConfig) {
    st.t += 1;
    let (b1, b2, eps) = (0.9, 0.999, 1e-8);
    let c1 = 1.0 - f64::powi(b1, st.t);
    let c2 = 1.0 - f64::powi(b2, st.t);
    let g_blocks = grad.blocks();
    for (((p, (_, _, g)), m), v) in params
        .blocks_mut()
        .into_iter()
        .zip(g_blocks)
        .zip(st.m.blocks_mut())
        .zip(st.v.blocks_mut())
    {
        match cfg.optimizer {
            Optimizer::Momentum => {
                for ((p, &g), m) in p.iter_mut().zip(g).zip(m.iter_mut()) {
                    *m = cfg.momentum * *m + g;
                    *p -= cfg.lr * *m;
                }
            }
            Optimizer::Adam => {
                for (((p, &g), m), v) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    *p -= cfg.lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                }
            }
        }
    }
}

/// Mini-batch training on mean cross-entropy. Deterministic for a fixed seed.
pub fn train_scorer(samples: &[ScorerSample], cfg: &TrainConfig) -> Result<(LaneScorer, TrainReport)> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if cfg.batch_size == 0 || !(cfg.lr > 0.0) {
        return Err(Error::InvalidParams("batch size and learning rate must be positive".into()));
    }
    let usable: Vec<&ScorerSample> = samples
        .iter()
        .filter(|s| s.input.centerlines.nrows() >= 2)
        .collect();
    for s in &usable {
        if s.gt_index >= s.input.centerlines.nrows() {
            return Err(Error::InvalidParams(format!(
                "label {} out of range for {} sequences",
                s.gt_index,
                s.input.centerlines.nrows()
            )));
        }
    }
    let skipped = samples.len() - usable.len();
    let mut params = ScorerParams::init(cfg.seed);
    if usable.is_empty() {
        log::warn!("no sample has more than one centerline; the scorer stays at its initialization");
        let report = TrainReport {
            initial_loss: 0.0,
            epoch_losses: vec![0.0; cfg.epochs],
            steps: 0,
            skipped,
        };
        return Ok((LaneScorer::new(params, cfg.clone()), report));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_0f_ba7c4);
    let mut st = OptState {
        m: params.zeros_like(),
        v: params.zeros_like(),
        t: 0,
    };
    let initial_loss = params.loss(&usable);
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..usable.len()).collect();
    let mut steps = 0;
    'outer: for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&ScorerSample> = chunk.iter().map(|&i| usable[i]).collect();
            let (_, grad) = params.loss_and_grad(&batch);
            apply_update(&mut params, &grad, &mut st, cfg);
            steps += 1;
            if cfg.max_steps > 0 && steps >= cfg.max_steps {
                epoch_losses.push(params.loss(&usable));
                break 'outer;
            }
        }
        let loss = params.loss(&usable);
        log::info!("epoch {}: loss {loss:.5}", epoch_losses.len() + 1);
        epoch_losses.push(loss);
    }
    if !params.is_finite() {
        return Err(Error::Model("training diverged to non-finite parameters".into()));
    }
    let report = TrainReport {
        initial_loss,
        epoch_losses,
        steps,
        skipped,
    };
    Ok((LaneScorer::new(params, cfg.clone()), report))
}

/// A trained scorer plus the settings it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct LaneScorer {
    pub params: ScorerParams,
    pub meta: Value,
}

impl LaneScorer {
    pub fn new(params: ScorerParams, cfg: TrainConfig) -> Self {
        Self {
            params,
            meta: json!({
                "init": "uniform_glorot",
                "train": cfg,
                "position_scale": POSITION_SCALE,
                "speed_scale": SPEED_SCALE,
            }),
        }
    }

    /// Probabilities over `seqs`, summing to 1.
    pub fn score_centerlines(&self, scene: &Scene, seqs: &[CenterlineSequence]) -> Result<Vec<f64>> {
        match seqs.len() {
            0 => Err(Error::InvalidParams("no centerline sequences to score".into())),
            1 => Ok(vec![1.0]),
            _ => Ok(softmax(&self.params.logits(&encode(scene, seqs)?))),
        }
    }

    /// Index of the most probable sequence for an already encoded scene.
    pub fn predict_index(&self, input: &ScorerInput) -> usize {
        let logits = self.params.logits(input);
        (0..logits.len())
            .max_by(|&a, &b| logits[a].total_cmp(&logits[b]).then(b.cmp(&a)))
            .unwrap_or(0)
    }

    pub fn to_json(&self) -> Value {
        let tensors: BTreeMap<&str, Value> = self
            .params
            .blocks()
            .into_iter()
            .map(|(name, shape, data)| (name, json!([shape, data])))
            .collect();
        json!({
            "version": MODEL_VERSION,
            "e": EMBED,
            "p": CENTERLINE_POINTS,
            "tensors": tensors,
            "meta": self.meta,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let version = v.get("version").and_then(Value::as_u64);
        if version != Some(MODEL_VERSION) {
            return Err(Error::Model(format!("unsupported model version {version:?}")));
        }
        let e = v.get("e").and_then(Value::as_u64);
        let p = v.get("p").and_then(Value::as_u64);
        if e != Some(EMBED as u64) || p != Some(CENTERLINE_POINTS as u64) {
            return Err(Error::Model(format!("expected e={EMBED}, p={CENTERLINE_POINTS}, found {e:?}, {p:?}")));
        }
        let tensors = v
            .get("tensors")
            .and_then(Value::as_object)
            .ok_or_else(|| Error::Model("missing tensors".into()))?;
        let mut params = ScorerParams::init(0);
        let names: Vec<&'static str> = params.blocks().iter().map(|b| b.0).collect();
        let shapes: Vec<Vec<usize>> = params.blocks().iter().map(|b| b.1.clone()).collect();
        for ((name, shape), dst) in names.iter().zip(&shapes).zip(params.blocks_mut()) {
            let (file_shape, data): (Vec<usize>, Vec<f64>) = serde_json::from_value(
                tensors
                    .get(*name)
                    .cloned()
                    .ok_or_else(|| Error::Model(format!("missing tensor {name}")))?,
            )
            .map_err(|e| Error::Model(format!("tensor {name}: {e}")))?;
            if &file_shape != shape || data.len() != dst.len() {
                return Err(Error::Model(format!("tensor {name}: shape {file_shape:?}, expected {shape:?}")));
            }
            dst.copy_from_slice(&data);
        }
        if !params.is_finite() {
            return Err(Error::Model("non-finite parameters".into()));
        }
        Ok(Self {
            params,
            meta: v.get("meta").cloned().unwrap_or(Value::Null),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string(&self.to_json())?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&serde_json::from_str(&text)?)
    }
}

/// Central finite-difference estimate of `d loss / d block[i]`.
pub fn numeric_gradient(params: &ScorerParams, samples: &[&ScorerSample], block: usize, i: usize, eps: f64) -> f64 {
    let mut p = params.clone();
    let orig = p.blocks_mut()[block][i];
    p.blocks_mut()[block][i] = orig + eps;
    let up = p.loss(samples);
    p.blocks_mut()[block][i] = orig - eps;
    let down = p.loss(samples);
    (up - down) / (2.0 * eps)
}
