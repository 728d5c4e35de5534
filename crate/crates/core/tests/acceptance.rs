//! Acceptance suite: every criterion prints one `[PASS]` or `[FAIL]` line
//! and the test fails if any criterion does.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the report.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use frenet_wrap::aggregation::{
    aggregate, harmonic, kmeans_select, AggregationConfig, KHat, PredictionSet, PriorSource, Strategy,
};
use frenet_wrap::centerlines::{assign_gt_centerline, enumerate_sequences};
use frenet_wrap::geometry::{build_polyline, circumcircle_curvature, curvature_profile, FrenetPoint, Vec2};
use frenet_wrap::lane_scorer::{
    encode, numeric_gradient, train_scorer, Optimizer, ScorerParams, ScorerSample, TrainConfig,
};
use frenet_wrap::metrics::{evaluate_scene, mied, min_ade, min_fde, mr1, off_road, orp, MetricReport, RoadMap, SceneMetrics};
use frenet_wrap::pipeline::forecast_ca;
use frenet_wrap::predictors::{
    predict_ca, wrap_frenet, wrap_with_sequences, CaPredictor, ExternalPredictor, CA_K,
};
use frenet_wrap::scene::{Lane, LanePose, PoseAttr, Scene, Trajectory, FUTURE_STEPS};
use frenet_wrap::scene_attack::{
    apply_attack, onset_violations, worst_of_directions, AttackFamily, AttackSpec, Direction, PerturbedScene,
    DEFAULT_ONSET, GRAVITY, LATERAL_LIMIT_FRACTION,
};
use frenet_wrap::synthgen::{generate_corpus, CorpusSpec, GenParams};
use frenet_wrap::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn corpus(mix: &str, count: usize, seed: u64) -> Vec<Scene> {
    let spec = CorpusSpec {
        mixture: mix.parse().unwrap(),
        count,
        seed,
        params: GenParams::default(),
    };
    generate_corpus(&spec).unwrap().into_iter().map(|g| g.scene).collect()
}

/// Greedy selection of six with a uniform centerline prior.
fn greedy6() -> AggregationConfig {
    AggregationConfig {
        strategy: Strategy::GreedySampling,
        k_hat: KHat::Fixed(6),
        prior: Some(PriorSource::Uniform),
        ..AggregationConfig::default()
    }
}

// 1. Projection against a brute-force oracle on the underlying circle.
fn geometry_oracle() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_s, mut worst_d, mut worst_rt) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..1000 {
        let radius = (rng.random_range(10f64.ln()..500f64.ln())).exp();
        let length = rng.random_range(20.0..150.0f64).min(0.9 * PI * radius);
        let ccw = rng.random_bool(0.5);
        let sign = if ccw { 1.0 } else { -1.0 };
        let rot = rng.random_range(-PI..PI);
        let center = Vec2::new(rng.random_range(-500.0..500.0), rng.random_range(-500.0..500.0));
        // Arc angle phi(s) of the point at arc length s; travel direction set by `sign`.
        let phi0 = rot;
        let on_circle = |s: f64, r: f64| {
            let phi = phi0 + sign * s / radius;
            center + Vec2::new(phi.cos(), phi.sin()) * r
        };
        let spacing = rng.random_range(0.2..0.5);
        let n = (length / spacing).ceil() as usize;
        let raw: Vec<Vec2> = (0..=n).map(|i| on_circle(length * i as f64 / n as f64, radius)).collect();
        let poly = build_polyline(&raw, 0.5).unwrap();

        // In-corridor query point with a known foot on the arc.
        let s_true = rng.random_range(0.02 * length..0.98 * length);
        let d_true = rng.random_range(-3.0..3.0f64).clamp(-0.5 * radius, 0.5 * radius);
        // Left of the travel direction is toward the center for CCW arcs.
        let p = on_circle(s_true, radius - sign * d_true);

        // Oracle: 1 mm sampling of the arc.
        let samples = (length / 1e-3) as usize;
        let (mut best, mut best_i) = (f64::INFINITY, 0);
        for i in 0..=samples {
            let q = on_circle(i as f64 * 1e-3, radius);
            let dist = (q - p).norm_squared();
            if dist < best {
                best = dist;
                best_i = i;
            }
        }
        let inside = (p - center).norm() < radius;
        let d_oracle = best.sqrt() * if inside == ccw { 1.0 } else { -1.0 };
        let s_oracle = best_i as f64 * 1e-3;

        let pr = poly.project(p);
        worst_s = worst_s.max((pr.extended_s() - s_oracle).abs());
        worst_d = worst_d.max((pr.point.d - d_oracle).abs());
        let back = poly.to_cartesian(FrenetPoint::new(pr.extended_s(), pr.point.d)).0;
        worst_rt = worst_rt.max((back - p).norm());
    }
    let elapsed = t0.elapsed();
    check(
        worst_s < 0.01 && worst_d < 0.01 && worst_rt < 1e-6 && elapsed < Duration::from_secs(10),
        format!(
            "max |s err| {worst_s:.2e} m, max |d err| {worst_d:.2e} m, max round trip {worst_rt:.2e} m, {elapsed:.1?}"
        ),
    )
}

// 2. Curvature of circles and lines.
fn curvature() -> Outcome {
    let mut worst = 0.0f64;
    for radius in [5.0, 20.0, 100.0] {
        for sign in [1.0, -1.0] {
            let n = (PI * radius / 0.5).ceil() as usize;
            let raw: Vec<Vec2> = (0..=n)
                .map(|i| {
                    let a = PI * i as f64 / n as f64;
                    Vec2::new(radius * a.sin(), sign * radius * (1.0 - a.cos()))
                })
                .collect();
            let poly = build_polyline(&raw, 0.5).unwrap();
            for k in curvature_profile(&poly) {
                worst = worst.max((k - sign / radius).abs());
            }
        }
    }
    let line: Vec<Vec2> = (0..50).map(|i| Vec2::new(0.7 * i as f64, -0.3 * i as f64 + 2.0)).collect();
    let flat = curvature_profile(&build_polyline(&line, 0.5).unwrap())
        .into_iter()
        .fold(0.0f64, |m, k| m.max(k.abs()));
    check(
        worst < 1e-3 && flat < 1e-9,
        format!("max circle error {worst:.2e} 1/m, max line curvature {flat:.2e} 1/m"),
    )
}

struct Suite {
    scenes: Vec<Scene>,
}

impl Suite {
    fn new() -> Self {
        Self {
            scenes: corpus("curve=0.5,fork=0.5", 500, 7),
        }
    }

    fn clean(&self, wrapped: bool) -> MetricReport {
        let cfg = greedy6();
        let rows: Vec<SceneMetrics> = self
            .scenes
            .par_iter()
            .map(|s| evaluate_scene(s, &forecast_ca(s, wrapped, &cfg, None).unwrap()).unwrap())
            .collect();
        MetricReport::from_rows(rows)
    }

    fn attacked(&self, wrapped: bool) -> MetricReport {
        let cfg = greedy6();
        let rows: Vec<SceneMetrics> = self
            .scenes
            .par_iter()
            .flat_map_iter(|s| {
                AttackFamily::all_defaults().into_iter().map(|family| {
                    worst_of_directions(s, family, DEFAULT_ONSET, |p| {
                        evaluate_scene(&p.scene, &forecast_ca(&p.scene, wrapped, &cfg, None)?)
                    })
                    .unwrap()
                })
            })
            .collect();
        MetricReport::from_rows(rows)
    }

    fn perturbed(&self) -> Vec<(usize, PerturbedScene)> {
        self.scenes
            .par_iter()
            .enumerate()
            .flat_map_iter(|(i, s)| {
                AttackFamily::all_defaults().into_iter().flat_map(move |family| {
                    [Direction::Left, Direction::Right].map(|d| {
                        (i, apply_attack(s, &AttackSpec::new(family, d).with_onset(DEFAULT_ONSET)).unwrap())
                    })
                })
            })
            .collect()
    }
}

// 3. CA against CA-SD under attack.
fn attacked_contrast(suite: &Suite) -> Outcome {
    let t0 = Instant::now();
    let ca = suite.attacked(false).aggregate;
    let sd = suite.attacked(true).aggregate;
    let elapsed = t0.elapsed();
    let ratio = ca.orp_percent / sd.orp_percent.max(f64::MIN_POSITIVE);
    check(
        ca.orp_percent > 30.0
            && sd.orp_percent < 2.0
            && ca.orp_percent >= 15.0 * sd.orp_percent
            && sd.min_ade < ca.min_ade
            && elapsed < Duration::from_secs(120),
        format!(
            "{} rows; ORP CA {:.2}% vs CA-SD {:.2}% (ratio {}), minADE CA {:.3} vs CA-SD {:.3}, {elapsed:.1?}",
            ca.scenes,
            ca.orp_percent,
            sd.orp_percent,
            if ratio.is_finite() && ratio < 1e12 { format!("{ratio:.1}") } else { "inf".into() },
            ca.min_ade,
            sd.min_ade
        ),
    )
}

// 4. CA against CA-SD on the clean suite.
fn clean_contrast(suite: &Suite) -> Outcome {
    let ca = suite.clean(false).aggregate;
    let sd = suite.clean(true).aggregate;
    check(
        sd.orp_percent < 1.0 && sd.min_ade < ca.min_ade,
        format!(
            "{} scenes; ORP CA {:.2}% vs CA-SD {:.2}%, minADE CA {:.3} vs CA-SD {:.3}",
            ca.scenes, ca.orp_percent, sd.orp_percent, ca.min_ade, sd.min_ade
        ),
    )
}

/// Largest v^2 kappa along a waypoint sequence starting at `current`,
/// from central-difference speeds and three-point circumcircle curvature.
fn lateral_acceleration_oracle(current: Vec2, gt: &[Vec2], dt: f64) -> f64 {
    let pts: Vec<Vec2> = std::iter::once(current).chain(gt.iter().copied()).collect();
    (1..pts.len() - 1)
        .map(|i| {
            let v = (pts[i + 1] - pts[i - 1]).norm() / (2.0 * dt);
            v * v * circumcircle_curvature(pts[i - 1], pts[i], pts[i + 1]).abs()
        })
        .fold(0.0, f64::max)
}

// 5. Feasibility and onset invariance over every perturbed scene.
fn feasibility(suite: &Suite) -> Outcome {
    let limit = LATERAL_LIMIT_FRACTION * GRAVITY;
    let perturbed = suite.perturbed();
    let mut worst = 0.0f64;
    let mut infeasible = 0;
    let mut onset_bad = 0;
    for (i, p) in &perturbed {
        let current = p.scene.tv().current().position();
        let a = lateral_acceleration_oracle(current, &p.pseudo_gt, p.scene.dt);
        worst = worst.max(a);
        if a > limit + 1e-6 {
            infeasible += 1;
        }
        if !onset_violations(&suite.scenes[*i], p).unwrap().is_empty() {
            onset_bad += 1;
        }
    }
    check(
        infeasible == 0 && onset_bad == 0,
        format!(
            "{} perturbed scenes; max v^2*kappa {worst:.4} (limit {limit:.4}) m/s^2, {infeasible} infeasible, {onset_bad} onset violations",
            perturbed.len()
        ),
    )
}

fn endpoints_separated(set: &PredictionSet, radius: f64) -> bool {
    let kept: Vec<Vec2> = set
        .trajectories
        .iter()
        .zip(&set.refilled)
        .filter(|(_, r)| !**r)
        .map(|(t, _)| t.endpoint())
        .collect();
    kept.iter()
        .enumerate()
        .all(|(i, a)| kept[i + 1..].iter().all(|b| (a - b).norm() > radius))
}

// 6. Aggregation guarantees on the wrapped candidates of the suite.
fn aggregation(suite: &Suite) -> Outcome {
    let cfg = greedy6();
    let h6 = 1.0 / harmonic(6);
    let mut failures = Vec::new();
    let mut max_sum_err = 0.0f64;
    for s in suite.scenes.iter().take(200) {
        let w = wrap_frenet(s, &mut CaPredictor, CA_K).unwrap();
        let greedy = aggregate(s, &w, &cfg, None).unwrap();
        max_sum_err = max_sum_err.max((greedy.total_probability() - 1.0).abs());
        if !endpoints_separated(&greedy, cfg.nms_radius) {
            failures.push(format!("{}: greedy endpoints within radius", s.scene_id));
        }
        let marginal: Vec<Trajectory> = w
            .candidates
            .iter()
            .map(|c| Trajectory {
                waypoints: c.waypoints.clone(),
                probability: c.conditional_prob / w.sequences.len() as f64,
                source_centerline: c.source_centerline,
            })
            .collect();
        let km = kmeans_select(&s.scene_id, &marginal, 6, 0).unwrap();
        max_sum_err = max_sum_err.max((km.total_probability() - 1.0).abs());
        if (km.trajectories[0].probability - h6).abs() > 1e-12 {
            failures.push(format!("{}: k-means top probability {}", s.scene_id, km.trajectories[0].probability));
        }
        let privileged = AggregationConfig {
            strategy: Strategy::Privileged,
            prior: None,
            ..cfg.clone()
        };
        let gt_index = assign_gt_centerline(s, &w.sequences).unwrap();
        let pv = aggregate(s, &w, &privileged, None).unwrap();
        let mass: f64 = pv
            .trajectories
            .iter()
            .filter(|t| t.source_centerline == Some(gt_index))
            .map(|t| t.probability)
            .sum();
        if (mass - 1.0).abs() > 1e-9 {
            failures.push(format!("{}: privileged mass on C* is {mass}", s.scene_id));
        }
    }
    if max_sum_err > 1e-6 {
        failures.push(format!("probability sum off by {max_sum_err:.2e}"));
    }
    check(
        failures.is_empty(),
        if failures.is_empty() {
            format!("200 scenes; max |sum - 1| {max_sum_err:.1e}; k-means top 1/H6 = {h6:.4}; privileged mass on C* = 1")
        } else {
            failures.join("; ")
        },
    )
}

// 7. All-candidates MIED against a single centerline on forks.
fn diversity() -> Outcome {
    let scenes = corpus("fork=1", 200, 11);
    let all = AggregationConfig {
        strategy: Strategy::All,
        k_hat: KHat::All,
        prior: Some(PriorSource::Uniform),
        ..AggregationConfig::default()
    };
    let (mut multi, mut single) = (0.0, 0.0);
    for s in &scenes {
        let w = wrap_frenet(s, &mut CaPredictor, CA_K).unwrap();
        multi += mied(&aggregate(s, &w, &all, None).unwrap().trajectories);
        let one = vec![w.sequences[0].clone()];
        let w1 = wrap_with_sequences(s, one, &mut CaPredictor, CA_K).unwrap();
        single += mied(&aggregate(s, &w1, &all, None).unwrap().trajectories);
    }
    let n = scenes.len() as f64;
    let (multi, single) = (multi / n, single / n);
    check(
        multi >= 1.10 * single,
        format!(
            "fork MIED all-candidates {multi:.3} m vs single centerline {single:.3} m (+{:.1}%)",
            100.0 * (multi / single - 1.0)
        ),
    )
}

fn fork_samples(count: usize, seed: u64) -> Vec<ScorerSample> {
    corpus("fork=1", count, seed)
        .iter()
        .map(|s| {
            let seqs = enumerate_sequences(s).unwrap();
            ScorerSample {
                gt_index: assign_gt_centerline(s, &seqs).unwrap(),
                input: encode(s, &seqs).unwrap(),
            }
        })
        .collect()
}

// 8. Lane scorer: gradients, memorization, held-out accuracy.
fn lane_scorer() -> Outcome {
    let t0 = Instant::now();
    let train = fork_samples(2000, 1);
    let test = fork_samples(500, 2);

    // Gradient check on a few entries of every block.
    let params = ScorerParams::init(3);
    let batch: Vec<&ScorerSample> = train.iter().take(4).collect();
    let (_, grad) = params.loss_and_grad(&batch);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_rel = 0.0f64;
    for (b, (_, _, g)) in grad.blocks().into_iter().enumerate() {
        for _ in 0..6 {
            let i = rng.random_range(0..g.len());
            let num = numeric_gradient(&params, &batch, b, i, 1e-6);
            let rel = (num - g[i]).abs() / num.abs().max(g[i].abs()).max(1e-6);
            worst_rel = worst_rel.max(rel);
        }
    }

    // Memorize one sample.
    let one = vec![train[0].clone()];
    let memo_cfg = TrainConfig {
        lr: 1e-3,
        batch_size: 1,
        epochs: 200,
        max_steps: 200,
        optimizer: Optimizer::Adam,
        ..TrainConfig::default()
    };
    let (_, memo) = train_scorer(&one, &memo_cfg).unwrap();
    let memo_loss = *memo.epoch_losses.last().unwrap();

    // Held-out accuracy with ten epochs at lr 1e-4, batch 128.
    let (model, report) = train_scorer(&train, &TrainConfig::default()).unwrap();
    let hits = test.iter().filter(|s| model.predict_index(&s.input) == s.gt_index).count();
    let acc = hits as f64 / test.len() as f64;
    let elapsed = t0.elapsed();
    check(
        worst_rel < 1e-4 && memo_loss < 0.01 && memo.steps <= 200 && acc > 0.9 && elapsed < Duration::from_secs(300),
        format!(
            "max gradient rel. error {worst_rel:.1e}; single-sample CE {memo_loss:.2e} after {} steps; held-out top-1 {:.1}% after {} epochs ({} steps); {elapsed:.1?}",
            memo.steps,
            100.0 * acc,
            report.epoch_losses.len(),
            report.steps
        ),
    )
}

fn straight_lane_scene() -> Scene {
    let mut scene = frenet_wrap::scene::load_scene(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/straight_1.json")).unwrap();
    scene.lanes = vec![Lane {
        id: 1,
        width: 3.7,
        centerline: (0..=20)
            .map(|i| LanePose {
                x: 5.0 * i as f64,
                y: 0.0,
                attr: PoseAttr::Heading(0.0),
            })
            .collect(),
        successors: vec![],
        predecessors: vec![],
    }];
    scene
}

fn traj(points: Vec<Vec2>, p: f64) -> Trajectory {
    Trajectory {
        waypoints: points,
        probability: p,
        source_centerline: None,
    }
}

fn line(y: f64, x_end: f64) -> Vec<Vec2> {
    (1..=FUTURE_STEPS)
        .map(|i| Vec2::new(x_end * i as f64 / FUTURE_STEPS as f64, y))
        .collect()
}

// 9. Metric unit examples.
fn metric_units() -> Outcome {
    let scene = straight_lane_scene();
    let road = RoadMap::new(&scene);
    let gt = line(0.0, 30.0);
    let mut bad = Vec::new();
    let mut expect = |name: &str, ok: bool| {
        if !ok {
            bad.push(name.to_string());
        }
    };
    expect("centered waypoint on-road", !off_road(&[Vec2::new(50.0, 0.0)], &scene));
    expect("|d| = 2.0 off-road", off_road(&[Vec2::new(50.0, 2.0)], &scene));
    expect("5 m past the end off-road", off_road(&line(0.0, 105.0), &scene));
    let on = traj(line(0.0, 30.0), 1.0);
    expect("all on-road ORP 0", orp(&[on.clone()], &road).unwrap() == 0.0);
    let two = [traj(line(0.0, 30.0), 0.7), traj(line(3.0, 30.0), 0.3)];
    expect("single off-road prob 0.3", (orp(&two, &road).unwrap() - 0.3).abs() < 1e-12);
    expect("all off-road ORP 1", orp(&[traj(line(5.0, 30.0), 1.0)], &road).unwrap() == 1.0);
    expect("exact gt ADE/FDE 0", min_ade(&[on.clone()], &gt).unwrap() == 0.0 && min_fde(&[on.clone()], &gt).unwrap() == 0.0);
    let off1 = traj(line(1.0, 30.0), 1.0);
    expect(
        "1 m offset ADE/FDE 1",
        (min_ade(&[off1.clone()], &gt).unwrap() - 1.0).abs() < 1e-9 && (min_fde(&[off1.clone()], &gt).unwrap() - 1.0).abs() < 1e-9,
    );
    let pair = [traj(line(1.0, 30.0), 0.5), traj(line(3.0, 30.0), 0.5)];
    expect("min of offsets 1 and 3", (min_ade(&pair, &gt).unwrap() - 1.0).abs() < 1e-9);
    expect("top endpoint 2.5 m away", mr1(&[traj(line(2.5, 30.0), 1.0)], &gt).unwrap() == 1);
    expect(
        "top endpoint 1.9 m away",
        mr1(&[traj(line(1.9, 30.0), 0.6), traj(line(10.0, 30.0), 0.4)], &gt).unwrap() == 0,
    );
    expect("exactly 2.0 m", mr1(&[traj(line(2.0, 30.0), 1.0)], &gt).unwrap() == 0);
    let ends = |pts: &[Vec2]| -> Vec<Trajectory> {
        pts.iter()
            .map(|&e| traj(vec![e; FUTURE_STEPS], 1.0 / pts.len() as f64))
            .collect()
    };
    expect("MIED of two endpoints", (mied(&ends(&[Vec2::new(0.0, 0.0), Vec2::new(2.0, 0.0)])) - 1.0).abs() < 1e-9);
    expect("MIED single", mied(&ends(&[Vec2::new(3.0, 4.0)])) == 0.0);
    let tri = ends(&[Vec2::new(0.0, 0.0), Vec2::new(2.0, 0.0), Vec2::new(1.0, 3f64.sqrt())]);
    expect("MIED equilateral", (mied(&tri) - 2.0 / 3f64.sqrt()).abs() < 1e-9);
    check(bad.is_empty(), if bad.is_empty() { "15 examples".into() } else { format!("failed: {}", bad.join(", ")) })
}

fn loopback_command(fault: Option<&str>) -> String {
    let exe = env!("CARGO_BIN_EXE_frenet-wrap");
    match fault {
        Some(f) => format!("'{exe}' loopback-predictor --fault {f}"),
        None => format!("'{exe}' loopback-predictor"),
    }
}

// 10. Loopback conformance and protocol errors.
fn protocol(suite: &Suite) -> Outcome {
    let mut worst = 0.0f64;
    let mut child = ExternalPredictor::spawn(&loopback_command(None), Duration::from_secs(30)).map_err(|e| e.to_string())?;
    for s in suite.scenes.iter().take(20) {
        let ext = wrap_frenet(s, &mut child, CA_K).map_err(|e| e.to_string())?;
        let local = wrap_frenet(s, &mut CaPredictor, CA_K).unwrap();
        for (a, b) in ext.candidates.iter().zip(&local.candidates) {
            worst = worst.max((a.conditional_prob - b.conditional_prob).abs());
            for (p, q) in a.waypoints.iter().zip(&b.waypoints) {
                worst = worst.max((p - q).norm());
            }
        }
        // The Cartesian model goes through the same channel.
        let direct = predict_ca(s, CA_K).unwrap();
        let via = frenet_wrap::predictors::predict_cartesian(s, &mut child, CA_K).unwrap();
        for (t, c) in direct.trajectories.iter().zip(&via) {
            for (p, q) in t.iter().zip(&c.waypoints) {
                worst = worst.max((p - q).norm());
            }
        }
    }
    drop(child);

    let scene = &suite.scenes[0];
    let outcome = |fault: &str, timeout: Duration| -> Result<Error, String> {
        let run = ExternalPredictor::spawn(&loopback_command(Some(fault)), timeout)
            .and_then(|mut c| wrap_frenet(scene, &mut c, CA_K).map(|_| ()));
        match run {
            Ok(()) => Err(format!("fault {fault} went unnoticed")),
            Err(e) => Ok(e),
        }
    };
    let mut bad = Vec::new();
    let cases: [(&str, fn(&Error) -> bool); 5] = [
        ("no-handshake", |e| matches!(e, Error::Protocol(m) if m.contains("refusing"))),
        ("drop-trajectory", |e| matches!(e, Error::Shape(_))),
        ("bad-probs", |e| matches!(e, Error::Normalization { .. })),
        ("garbage", |e| matches!(e, Error::Protocol(_))),
        ("silent", |e| matches!(e, Error::Timeout(_))),
    ];
    for (fault, expected) in cases {
        match outcome(fault, Duration::from_millis(1500)) {
            Ok(e) if expected(&e) => {}
            Ok(e) => bad.push(format!("{fault}: unexpected {e}")),
            Err(m) => bad.push(m),
        }
    }
    check(
        worst < 1e-9 && bad.is_empty(),
        if bad.is_empty() {
            format!("20 scenes, max deviation from in-process CA {worst:.1e}; 5 faults rejected with the expected errors")
        } else {
            format!("max deviation {worst:.1e}; {}", bad.join("; "))
        },
    )
}

#[test]
fn acceptance() {
    println!();
    let suite = Suite::new();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("1 geometry oracle", Box::new(geometry_oracle)),
        ("2 curvature", Box::new(curvature)),
        ("3 attacked CA vs CA-SD", Box::new(|| attacked_contrast(&suite))),
        ("4 clean CA vs CA-SD", Box::new(|| clean_contrast(&suite))),
        ("5 feasibility and onset", Box::new(|| feasibility(&suite))),
        ("6 aggregation", Box::new(|| aggregation(&suite))),
        ("7 diversity", Box::new(diversity)),
        ("8 lane scorer", Box::new(lane_scorer)),
        ("9 metric units", Box::new(metric_units)),
        ("10 protocol", Box::new(|| protocol(&suite))),
    ];
    let mut failed = Vec::new();
    for (name, run) in &criteria {
        match run() {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(detail) => {
                println!("[FAIL] {name}: {detail}");
                failed.push(*name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
