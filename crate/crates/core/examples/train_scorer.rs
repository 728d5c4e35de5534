//! Train the lane scorer on synthetic forks and report held-out top-1
//! accuracy for both optimizers.
//!
//! `cargo run --release --example train_scorer -- [train scenes] [test scenes]`

use std::time::Instant;

use frenet_wrap::centerlines::{assign_gt_centerline, enumerate_sequences};
use frenet_wrap::lane_scorer::{encode, train_scorer, Optimizer, ScorerSample, TrainConfig};
use frenet_wrap::synthgen::{generate_corpus, CorpusSpec, GenParams};

fn samples(count: usize, seed: u64) -> anyhow::Result<Vec<ScorerSample>> {
    let spec = CorpusSpec {
        mixture: "fork=1".parse()?,
        count,
        seed,
        params: GenParams::default(),
    };
    generate_corpus(&spec)?
        .iter()
        .map(|g| {
            let seqs = enumerate_sequences(&g.scene)?;
            Ok(ScorerSample {
                gt_index: assign_gt_centerline(&g.scene, &seqs)?,
                input: encode(&g.scene, &seqs)?,
            })
        })
        .collect()
}

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let n_train = args.next().map(|s| s.parse()).transpose()?.unwrap_or(2000);
    let n_test = args.next().map(|s| s.parse()).transpose()?.unwrap_or(500);
    let train = samples(n_train, 1)?;
    let test = samples(n_test, 2)?;

    for optimizer in [Optimizer::Momentum, Optimizer::Adam] {
        let cfg = TrainConfig {
            optimizer,
            ..TrainConfig::default()
        };
        let t0 = Instant::now();
        let (model, report) = train_scorer(&train, &cfg)?;
        let hits = test
            .iter()
            .filter(|s| model.predict_index(&s.input) == s.gt_index)
            .count();
        println!(
            "{optimizer:?}: loss {:.4} -> {:.4}, {} steps in {:.1?}, held-out top-1 {:.1}%",
            report.initial_loss,
            report.epoch_losses.last().copied().unwrap_or(f64::NAN),
            report.steps,
            t0.elapsed(),
            100.0 * hits as f64 / test.len() as f64
        );
    }
    Ok(())
}
