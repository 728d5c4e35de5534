//! Score greedy CA-SD forecasts on a small mixed corpus and write the
//! report as JSON and CSV.
//!
//! `cargo run --example metrics_report -- [out dir]`

use frenet_wrap::aggregation::AggregationConfig;
use frenet_wrap::metrics::{evaluate_scene, MetricReport};
use frenet_wrap::pipeline::forecast_ca;
use frenet_wrap::synthgen::{generate_corpus, CorpusSpec, GenParams};

fn main() -> anyhow::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "target/metrics_report".into());
    let spec = CorpusSpec {
        mixture: "straight=0.25,curve=0.25,fork=0.25,crossing=0.25".parse()?,
        count: 40,
        seed: 1,
        params: GenParams::default(),
    };
    let cfg = AggregationConfig::default();
    let rows = generate_corpus(&spec)?
        .iter()
        .map(|g| evaluate_scene(&g.scene, &forecast_ca(&g.scene, true, &cfg, None)?))
        .collect::<Result<Vec<_>, _>>()?;
    let report = MetricReport::from_rows(rows);
    std::fs::create_dir_all(&out)?;
    report.save_json(format!("{out}/report.json"))?;
    report.save_csv(format!("{out}/report.csv"))?;
    let a = &report.aggregate;
    println!(
        "{} scenes: minADE {:.3}  minFDE {:.3}  MR1 {:.3}  ORP {:.2}%  MIED {:.2}",
        a.scenes, a.min_ade, a.min_fde, a.mr1_rate, a.orp_percent, a.mied
    );
    println!("wrote {out}/report.json and {out}/report.csv");
    Ok(())
}
