//! CA against CA-SD on a perturbed synthetic suite of curves and forks.
//!
//! `cargo run --release --example attack_benchmark -- [scenes] [seed]`

use frenet_wrap::aggregation::AggregationConfig;
use frenet_wrap::metrics::{evaluate_scene, MetricReport};
use frenet_wrap::pipeline::forecast_ca;
use frenet_wrap::scene_attack::{worst_of_directions, AttackFamily, DEFAULT_ONSET};
use frenet_wrap::synthgen::{generate_corpus, CorpusSpec, GenParams};
use rayon::prelude::*;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let count = args.next().map(|s| s.parse()).transpose()?.unwrap_or(500);
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(7);
    let spec = CorpusSpec {
        mixture: "curve=0.5,fork=0.5".parse()?,
        count,
        seed,
        params: GenParams::default(),
    };
    let corpus = generate_corpus(&spec)?;
    let cfg = &AggregationConfig::default();

    for (name, wrapped) in [("CA", false), ("CA-SD", true)] {
        let clean: Vec<_> = corpus
            .par_iter()
            .map(|g| evaluate_scene(&g.scene, &forecast_ca(&g.scene, wrapped, cfg, None)?))
            .collect::<frenet_wrap::Result<_>>()?;
        let attacked: Vec<_> = corpus
            .par_iter()
            .flat_map_iter(|g| {
                AttackFamily::all_defaults().into_iter().map(move |family| {
                    worst_of_directions(&g.scene, family, DEFAULT_ONSET, |p| {
                        evaluate_scene(&p.scene, &forecast_ca(&p.scene, wrapped, cfg, None)?)
                    })
                })
            })
            .collect::<frenet_wrap::Result<_>>()?;
        let c = MetricReport::from_rows(clean).aggregate;
        let a = MetricReport::from_rows(attacked).aggregate;
        println!(
            "{name:6} clean: ORP {:6.2}%  minADE {:.3}  minFDE {:.3}  MR1 {:.3}  MIED {:.3}",
            c.orp_percent, c.min_ade, c.min_fde, c.mr1_rate, c.mied
        );
        println!(
            "{name:6} attacked: ORP {:6.2}%  minADE {:.3}  minFDE {:.3}  MR1 {:.3}  MIED {:.3}",
            a.orp_percent, a.min_ade, a.min_fde, a.mr1_rate, a.mied
        );
    }
    Ok(())
}
