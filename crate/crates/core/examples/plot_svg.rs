//! Draw a fork scene with its greedy CA-SD forecast as SVG.
//!
//! `cargo run --example plot_svg -- [out.svg]`

use frenet_wrap::aggregation::AggregationConfig;
use frenet_wrap::cli::render_svg;
use frenet_wrap::pipeline::forecast_ca;
use frenet_wrap::synthgen::{generate, GenParams, Topology};

fn main() -> anyhow::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "target/fork.svg".into());
    let scene = generate(Topology::Fork { angle_deg: 30.0 }, 3, &GenParams::default())?.scene;
    let preds = forecast_ca(&scene, true, &AggregationConfig::default(), None)?;
    std::fs::write(&out, render_svg(&scene, Some(&preds)))?;
    println!("wrote {out} ({} trajectories)", preds.trajectories.len());
    Ok(())
}
