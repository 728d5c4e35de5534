use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{anyhow, bail, Context as _};
use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::Config;
use super::files::{list_scene_files, partial_failure, read_json, stem, write_json, write_manifest, PredictionFile, MANIFEST};
use super::plot::render_svg;
use super::{EvaluateArgs, ExportArgs, GenerateArgs, LoopbackArgs, PerturbArgs, PlotArgs, PredictArgs, TrainArgs};
use crate::aggregation::{AggregationConfig, KHat, PredictionSet, PriorSource, Strategy};
use crate::centerlines::{assign_gt_centerline, enumerate_sequences};
use crate::geometry::scene_to_frenet;
use crate::lane_scorer::{self, encode, LaneScorer, Optimizer, ScorerSample, TrainConfig};
use crate::metrics::{evaluate_scene, worse_of, MetricReport, SceneMetrics};
use crate::pipeline::{forecast, ModelSpec};
use crate::predictors::{serve_loopback, CaPredictor, ExternalPredictor, LoopbackFault, Predictor, CA_K, DEFAULT_TIMEOUT};
use crate::scene::{load_scene, save_scene, Scene};
use crate::scene_attack::{apply_attack, onset_violations, AttackFamily, AttackSpec, Direction, DEFAULT_ONSET};
use crate::synthgen::{generate_corpus, write_corpus, CorpusSpec, GenParams, Mixture};

/// Scenes checked for onset invariance after every perturbation run.
const ONSET_CHECKS: usize = 10;
const DEFAULT_MIX: &str = "straight=0.2,curve=0.3,s_curve=0.1,fork=0.3,crossing=0.1";

pub struct Context {
    pub config: Config,
    pub seed: u64,
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Every scene of a corpus, loaded in parallel, keyed by file.
fn load_corpus(dir: &Path) -> anyhow::Result<Vec<(PathBuf, crate::Result<Scene>)>> {
    let files = list_scene_files(dir)?;
    if files.is_empty() {
        bail!("no scene files in {}", dir.display());
    }
    Ok(files
        .into_par_iter()
        .map(|f| {
            let s = load_scene(&f);
            (f, s)
        })
        .collect())
}

/// Loaded scenes; unreadable files abort the command with their names.
fn load_all(dir: &Path) -> anyhow::Result<Vec<Scene>> {
    let mut scenes = Vec::new();
    let mut failures = Vec::new();
    for (path, s) in load_corpus(dir)? {
        match s {
            Ok(s) => scenes.push(s),
            Err(e) => failures.push((stem(&path), anyhow::Error::new(e))),
        }
    }
    partial_failure("loading", &failures)?;
    Ok(scenes)
}

pub fn generate(ctx: &Context, a: GenerateArgs) -> anyhow::Result<()> {
    let cfg = &ctx.config;
    let mixture: Mixture = cfg.resolve(a.mix, "mix", DEFAULT_MIX.to_string())?.parse()?;
    let count = cfg.resolve(a.n, "n", 100usize)?;
    let defaults = GenParams::default();
    let params = GenParams {
        speed: cfg.resolve_opt(a.speed, "speed")?,
        noise: cfg.resolve(a.noise, "noise", defaults.noise)?,
        lane_width: cfg.resolve(None, "lane_width", defaults.lane_width)?,
    };
    let spec = CorpusSpec {
        mixture,
        count,
        seed: ctx.seed,
        params,
    };
    let corpus = generate_corpus(&spec)?;
    let manifest = write_corpus(&a.out, &spec, &corpus)?;
    let reduced = manifest.scenes.iter().filter(|m| m.speed_reduced).count();
    println!("generated {} scenes in {} ({reduced} with reduced speed)", corpus.len(), a.out.display());
    Ok(())
}

fn attack_families(name: &str, amplitude: Option<f64>) -> anyhow::Result<Vec<AttackFamily>> {
    let families = if name == "all" {
        AttackFamily::all_defaults().to_vec()
    } else {
        vec![AttackFamily::by_name(name)?]
    };
    Ok(families
        .into_iter()
        .map(|f| amplitude.map_or(f, |a| f.with_amplitude(a)))
        .collect())
}

pub fn perturb(ctx: &Context, a: PerturbArgs) -> anyhow::Result<()> {
    let cfg = &ctx.config;
    let attack = cfg.resolve(a.attack, "attack", "all".to_string())?;
    let b = cfg.resolve(a.b, "b", DEFAULT_ONSET)?;
    let amplitude = cfg.resolve_opt(a.amplitude, "amplitude")?;
    let families = attack_families(&attack, amplitude)?;
    let specs: Vec<AttackSpec> = families
        .iter()
        .flat_map(|&f| [Direction::Left, Direction::Right].map(|d| AttackSpec::new(f, d).with_onset(b)))
        .collect();
    for s in &specs {
        s.validate()?;
    }
    let scenes = load_all(&a.input)?;
    create_dir(&a.output)?;

    let results: Vec<(String, anyhow::Result<Vec<Value>>)> = scenes
        .par_iter()
        .map(|scene| {
            let run = || -> anyhow::Result<Vec<Value>> {
                let mut rows = Vec::new();
                for spec in &specs {
                    let mut p = apply_attack(scene, spec)?;
                    let id = format!("{}__{}_{}", scene.scene_id, spec.family.name(), spec.direction);
                    p.scene.scene_id = id.clone();
                    save_scene(&p.scene, a.output.join(format!("{id}.json")))?;
                    rows.push(json!({
                        "scene_id": id,
                        "source_scene_id": scene.scene_id,
                        "attack": spec.family.name(),
                        "direction": spec.direction.to_string(),
                        "spec": spec,
                        "speed_scale": p.speed_scale,
                        "kappa_max": p.kappa_max,
                        "v_peak": p.v_peak,
                    }));
                }
                Ok(rows)
            };
            (scene.scene_id.clone(), run())
        })
        .collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (id, r) in results {
        match r {
            Ok(r) => rows.extend(r),
            Err(e) => failures.push((id, e)),
        }
    }

    // Self-check: nothing at or before the onset may move.
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let sample: Vec<&Scene> = scenes.choose_multiple(&mut rng, ONSET_CHECKS).collect();
    let mut checked = 0;
    for scene in sample {
        for spec in &specs {
            let p = apply_attack(scene, spec)?;
            let bad = onset_violations(scene, &p)?;
            if !bad.is_empty() {
                bail!("onset invariance violated on {} ({}): {}", scene.scene_id, spec.family.name(), bad.join(", "));
            }
            checked += 1;
        }
    }

    write_manifest(
        &a.output,
        "perturb",
        json!({ "attack": attack, "b": b, "amplitude": amplitude, "seed": ctx.seed, "families": families }),
        json!({ "onset_checks": checked, "perturbations": rows }),
    )?;
    println!("wrote {} perturbed scenes to {}", rows.len(), a.output.display());
    partial_failure("perturb", &failures)
}

fn aggregation_config(ctx: &Context, a: &PredictArgs) -> anyhow::Result<AggregationConfig> {
    let cfg = &ctx.config;
    let d = AggregationConfig::default();
    let strategy: Strategy = cfg.resolve(a.agg.clone(), "agg", d.strategy.to_string())?.parse()?;
    let k_hat: KHat = match cfg.resolve_opt(a.khat.clone(), "khat")? {
        Some(k) => k.parse()?,
        None => d.k_hat,
    };
    let prior: Option<PriorSource> = cfg
        .resolve_opt(a.prior.clone(), "prior")?
        .map(|p| p.parse())
        .transpose()?;
    let config = AggregationConfig {
        strategy,
        k_hat,
        nms_radius: cfg.resolve(a.nms_radius, "nms_radius", d.nms_radius)?,
        prior,
        seed: ctx.seed,
    };
    config.validate()?;
    Ok(config)
}

pub fn predict(ctx: &Context, a: PredictArgs) -> anyhow::Result<()> {
    let cfg = &ctx.config;
    let model: ModelSpec = cfg.resolve(a.model.clone(), "model", "ca-sd".to_string())?.parse()?;
    let agg = aggregation_config(ctx, &a)?;
    let k = cfg.resolve(a.k, "k", CA_K)?;
    let timeout = cfg
        .resolve_opt(a.timeout, "timeout")?
        .map_or(DEFAULT_TIMEOUT, Duration::from_secs_f64);
    let scorer_path = cfg.resolve_opt(a.scorer.clone().map(|p| p.display().to_string()), "scorer")?;
    let scorer = scorer_path.as_deref().map(LaneScorer::load).transpose()?;
    if agg.effective_prior()? == PriorSource::Scorer && scorer.is_none() {
        bail!("the `{}` aggregation needs --scorer", agg.strategy);
    }
    let scenes = load_all(&a.input)?;
    create_dir(&a.output)?;

    let run = |scene: &Scene, predictor: &mut dyn Predictor| -> anyhow::Result<()> {
        let set = forecast(scene, predictor, model.wrapped(), k, &agg, scorer.as_ref())?;
        write_json(&a.output.join(format!("{}.json", scene.scene_id)), &PredictionFile::from_set(&set))
    };
    let mut failures = Vec::new();
    match &model {
        ModelSpec::External(cmd) => {
            // One child answers all scenes in order.
            let mut child = ExternalPredictor::spawn(cmd, timeout)?;
            for scene in &scenes {
                if let Err(e) = run(scene, &mut child) {
                    let fatal = matches!(
                        e.downcast_ref::<crate::Error>(),
                        Some(crate::Error::Protocol(_) | crate::Error::Timeout(_) | crate::Error::ChildExit(_))
                    );
                    if fatal {
                        return Err(e.context(format!("external predictor on {}", scene.scene_id)));
                    }
                    failures.push((scene.scene_id.clone(), e));
                }
            }
        }
        _ => {
            failures = scenes
                .par_iter()
                .filter_map(|s| run(s, &mut CaPredictor).err().map(|e| (s.scene_id.clone(), e)))
                .collect();
        }
    }
    write_manifest(
        &a.output,
        "predict",
        json!({
            "model": model.to_string(),
            "agg": agg.strategy.to_string(),
            "khat": match agg.k_hat { KHat::All => json!("all"), KHat::Fixed(n) => json!(n) },
            "prior": agg.effective_prior()?,
            "nms_radius": agg.nms_radius,
            "k": k,
            "scorer": scorer_path,
            "seed": ctx.seed,
            "timeout_s": timeout.as_secs_f64(),
        }),
        json!({
            "scenes": scenes.len() - failures.len(),
            "failed": failures.iter().map(|f| &f.0).collect::<Vec<_>>(),
        }),
    )?;
    println!("wrote {} predictions to {}", scenes.len() - failures.len(), a.output.display());
    partial_failure("prediction", &failures)
}

/// Attack provenance of perturbed scenes, read from the perturb manifest.
struct Provenance {
    source: String,
    attack: String,
    direction: String,
    speed_scale: f64,
}

fn read_provenance(dir: &Path) -> anyhow::Result<BTreeMap<String, Provenance>> {
    let path = dir.join(MANIFEST);
    let mut out = BTreeMap::new();
    if !path.is_file() {
        return Ok(out);
    }
    let m = read_json(&path)?;
    let Some(rows) = m.get("perturbations").and_then(Value::as_array) else {
        return Ok(out);
    };
    for r in rows {
        let field = |k: &str| {
            r.get(k)
                .and_then(Value::as_str)
                .map(str::to_string)
                .ok_or_else(|| anyhow!("perturbation row without `{k}` in {}", path.display()))
        };
        out.insert(
            field("scene_id")?,
            Provenance {
                source: field("source_scene_id")?,
                attack: field("attack")?,
                direction: field("direction")?,
                speed_scale: r.get("speed_scale").and_then(Value::as_f64).unwrap_or(1.0),
            },
        );
    }
    Ok(out)
}

/// First few ids of a list, for error messages.
fn id_list(ids: &[&String]) -> String {
    const SHOWN: usize = 8;
    let mut out = ids.iter().take(SHOWN).map(|s| s.as_str()).collect::<Vec<_>>().join(", ");
    if ids.len() > SHOWN {
        out.push_str(&format!(", ... {} more", ids.len() - SHOWN));
    }
    out
}

pub fn evaluate(_ctx: &Context, a: EvaluateArgs) -> anyhow::Result<()> {
    let scenes: BTreeMap<String, Scene> = load_all(&a.scenes)?
        .into_iter()
        .map(|s| (s.scene_id.clone(), s))
        .collect();
    let mut preds: BTreeMap<String, PredictionSet> = BTreeMap::new();
    for f in list_scene_files(&a.predictions)? {
        let p = PredictionFile::load(&f)?;
        preds.insert(p.scene_id.clone(), p.to_set()?);
    }
    let orphans: Vec<&String> = preds.keys().filter(|id| !scenes.contains_key(*id)).collect();
    let missing: Vec<&String> = scenes.keys().filter(|id| !preds.contains_key(*id)).collect();
    if !orphans.is_empty() || !missing.is_empty() {
        bail!(
            "cannot join predictions to scenes: {} prediction(s) without a scene [{}], {} scene(s) without a prediction [{}]",
            orphans.len(),
            id_list(&orphans),
            missing.len(),
            id_list(&missing)
        );
    }
    let provenance = read_provenance(&a.scenes)?;

    let results: Vec<(String, crate::Result<SceneMetrics>)> = scenes
        .par_iter()
        .map(|(id, s)| {
            let row = evaluate_scene(s, &preds[id]).map(|mut row| {
                if let Some(p) = provenance.get(id) {
                    row.attack = Some(p.attack.clone());
                    row.direction = Some(p.direction.clone());
                    row.speed_scale = p.speed_scale;
                }
                row
            });
            (id.clone(), row)
        })
        .collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (id, r) in results {
        match r {
            Ok(r) => rows.push(r),
            Err(e) => failures.push((id, anyhow::Error::new(e))),
        }
    }
    partial_failure("evaluation", &failures)?;

    if !a.per_direction && !provenance.is_empty() {
        let mut grouped: BTreeMap<(String, String), SceneMetrics> = BTreeMap::new();
        for row in rows {
            let p = &provenance[&row.scene_id];
            let key = (p.source.clone(), p.attack.clone());
            let mut row = row;
            row.scene_id = p.source.clone();
            let merged = match grouped.remove(&key) {
                Some(prev) => worse_of(&prev, &row),
                None => row,
            };
            grouped.insert(key, merged);
        }
        rows = grouped.into_values().collect();
    }
    let report = MetricReport::from_rows(rows);
    create_dir(&a.out)?;
    report.save_json(a.out.join("report.json"))?;
    report.save_csv(a.out.join("report.csv"))?;
    write_manifest(
        &a.out,
        "evaluate",
        json!({
            "scenes": a.scenes,
            "predictions": a.predictions,
            "per_direction": a.per_direction,
        }),
        json!({ "aggregate": report.aggregate }),
    )?;
    let g = &report.aggregate;
    println!(
        "{} rows: minADE {:.3}  minFDE {:.3}  ORP {:.2}%  MR1 {:.3}  MIED {:.3}",
        g.scenes, g.min_ade, g.min_fde, g.orp_percent, g.mr1_rate, g.mied
    );
    Ok(())
}

pub fn train_scorer(ctx: &Context, a: TrainArgs) -> anyhow::Result<()> {
    let cfg = &ctx.config;
    let d = TrainConfig::default();
    let tc = TrainConfig {
        epochs: cfg.resolve(a.epochs, "epochs", d.epochs)?,
        lr: cfg.resolve(a.lr, "lr", d.lr)?,
        batch_size: cfg.resolve(a.batch_size, "batch_size", d.batch_size)?,
        optimizer: match cfg.resolve_opt(a.optimizer, "optimizer")? {
            Some(o) => o.parse::<Optimizer>()?,
            None => d.optimizer,
        },
        momentum: cfg.resolve(None, "momentum", d.momentum)?,
        seed: ctx.seed,
        max_steps: cfg.resolve(None, "max_steps", d.max_steps)?,
    };
    let scenes = load_all(&a.input)?;
    let labelled: Vec<(String, crate::Result<ScorerSample>)> = scenes
        .par_iter()
        .map(|s| {
            let sample = enumerate_sequences(s).and_then(|seqs| {
                Ok(ScorerSample {
                    gt_index: assign_gt_centerline(s, &seqs)?,
                    input: encode(s, &seqs)?,
                })
            });
            (s.scene_id.clone(), sample)
        })
        .collect();
    let mut samples = Vec::new();
    let mut unlabelled = Vec::new();
    for (id, s) in labelled {
        match s {
            Ok(s) => samples.push(s),
            Err(e) => {
                log::warn!("{id}: no training label: {e}");
                unlabelled.push(id);
            }
        }
    }
    let (model, report) = lane_scorer::train_scorer(&samples, &tc)?;
    if report.steps == 0 {
        eprintln!("warning: no scene has more than one centerline; the model is untrained");
    }
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    model.save(&a.out)?;
    write_json(
        &a.out.with_extension("manifest.json"),
        &json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "command": "train-scorer",
            "config": tc,
            "input": a.input,
            "samples": samples.len(),
            "single_centerline": report.skipped,
            "unlabelled": unlabelled,
            "steps": report.steps,
            "initial_loss": report.initial_loss,
            "epoch_losses": report.epoch_losses,
        }),
    )?;
    println!(
        "trained on {} samples ({} single-centerline skipped), {} steps, final loss {:.4}",
        samples.len() - report.skipped,
        report.skipped,
        report.steps,
        report.epoch_losses.last().copied().unwrap_or(report.initial_loss)
    );
    Ok(())
}

pub fn export_frenet(_ctx: &Context, a: ExportArgs) -> anyhow::Result<()> {
    let scenes = load_all(&a.input)?;
    create_dir(&a.output)?;
    let results: Vec<(String, anyhow::Result<Option<Value>>)> = scenes
        .par_iter()
        .map(|s| {
            let run = || -> anyhow::Result<Option<Value>> {
                if s.gt_future.is_none() {
                    return Ok(None);
                }
                let seqs = enumerate_sequences(s)?;
                let idx = assign_gt_centerline(s, &seqs)?;
                let f = scene_to_frenet(s, &seqs[idx])?;
                save_scene(&f.scene, a.output.join(format!("{}.json", s.scene_id)))?;
                Ok(Some(json!({
                    "scene_id": s.scene_id,
                    "centerline_index": idx,
                    "lane_ids": f.reference.lane_ids,
                    "origin_s": f.origin_s,
                    "extrapolated": f.flags.extrapolated,
                    "non_invertible": f.flags.non_invertible,
                    "beyond_radius": f.flags.beyond_radius,
                })))
            };
            (s.scene_id.clone(), run())
        })
        .collect();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let mut failures = Vec::new();
    for (id, r) in results {
        match r {
            Ok(Some(row)) => rows.push(row),
            Ok(None) => skipped.push(id),
            Err(e) => failures.push((id, e)),
        }
    }
    write_manifest(
        &a.output,
        "export-frenet",
        json!({ "input": a.input }),
        json!({ "exported": rows, "skipped_missing_gt": skipped }),
    )?;
    println!(
        "exported {} scenes to {}; skipped {} without ground truth",
        rows.len(),
        a.output.display(),
        skipped.len()
    );
    partial_failure("export", &failures)
}

pub fn plot(_ctx: &Context, a: PlotArgs) -> anyhow::Result<()> {
    let scenes = if a.input.is_file() {
        vec![load_scene(&a.input)?]
    } else {
        load_all(&a.input)?
    };
    create_dir(&a.out)?;
    let results: Vec<(String, anyhow::Result<()>)> = scenes
        .par_iter()
        .map(|s| {
            let run = || -> anyhow::Result<()> {
                let preds = match &a.preds {
                    Some(dir) => {
                        let f = dir.join(format!("{}.json", s.scene_id));
                        Some(PredictionFile::load(&f)?.to_set()?)
                    }
                    None => None,
                };
                if !s.is_cartesian() {
                    bail!("only Cartesian scenes can be drawn");
                }
                let svg = render_svg(s, preds.as_ref());
                let path = a.out.join(format!("{}.svg", s.scene_id));
                std::fs::write(&path, svg).with_context(|| format!("writing {}", path.display()))
            };
            (s.scene_id.clone(), run())
        })
        .collect();
    let failures: Vec<(String, anyhow::Error)> = results
        .into_iter()
        .filter_map(|(id, r)| r.err().map(|e| (id, e)))
        .collect();
    write_manifest(
        &a.out,
        "plot",
        json!({ "input": a.input, "preds": a.preds }),
        json!({ "plots": scenes.len() - failures.len() }),
    )?;
    partial_failure("plot", &failures)
}

pub fn loopback(a: LoopbackArgs) -> anyhow::Result<()> {
    let fault = a.fault.as_deref().map(str::parse::<LoopbackFault>).transpose()?;
    let stdin = std::io::stdin();
    let input: Box<dyn BufRead> = Box::new(stdin.lock());
    serve_loopback(input, std::io::stdout().lock(), fault)?;
    Ok(())
}
