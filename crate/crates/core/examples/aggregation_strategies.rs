//! Reduce the K x N wrapped candidates of a fork scene to a final set with
//! every aggregation strategy.

use frenet_wrap::aggregation::{aggregate, AggregationConfig, KHat, Strategy};
use frenet_wrap::metrics::evaluate_scene;
use frenet_wrap::predictors::{wrap_frenet, CaPredictor, CA_K};
use frenet_wrap::synthgen::{generate, GenParams, Topology};

fn main() -> anyhow::Result<()> {
    let scene = generate(Topology::Fork { angle_deg: 25.0 }, 5, &GenParams::default())?.scene;
    let wrapped = wrap_frenet(&scene, &mut CaPredictor, CA_K)?;
    println!("{} candidates from {} centerlines", wrapped.candidates.len(), wrapped.sequences.len());

    for strategy in [Strategy::GreedySampling, Strategy::Kmeans, Strategy::Uniform, Strategy::Privileged, Strategy::All] {
        let cfg = AggregationConfig {
            strategy,
            k_hat: if strategy == Strategy::All { KHat::All } else { KHat::Fixed(2) },
            ..AggregationConfig::default()
        };
        let set = aggregate(&scene, &wrapped, &cfg, None)?;
        let m = evaluate_scene(&scene, &set)?;
        let probs: Vec<String> = set.trajectories.iter().map(|t| format!("{:.3}", t.probability)).collect();
        println!(
            "{:16} {} kept [{}]  minADE {:.3}  MIED {:.2}",
            strategy.to_string(),
            set.trajectories.len(),
            probs.join(" "),
            m.min_ade,
            m.mied
        );
    }
    Ok(())
}
