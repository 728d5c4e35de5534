//! The constant-acceleration baseline in the Cartesian frame and wrapped
//! in the Frenet frame of every centerline (CA-SD), on a scene where the
//! road bends ahead.

use frenet_wrap::aggregation::AggregationConfig;
use frenet_wrap::metrics::evaluate_scene;
use frenet_wrap::pipeline::forecast_ca;
use frenet_wrap::predictors::{current_acceleration, predict_ca, wrap_frenet, CaPredictor, CA_K};
use frenet_wrap::synthgen::{generate, CurvePlacement, GenParams, Topology};

fn main() -> anyhow::Result<()> {
    let topology = Topology::Curve { radius: 35.0, placement: CurvePlacement::Before };
    let scene = generate(topology, 2, &GenParams::default())?.scene;
    let tv = scene.tv().current();
    println!("TV speed {:.2} m/s, current acceleration {:.3} m/s^2", tv.speed, current_acceleration(&scene)?);

    let cart = predict_ca(&scene, CA_K)?;
    let wrapped = wrap_frenet(&scene, &mut CaPredictor, CA_K)?;
    println!("{} Cartesian rollouts, {} wrapped over {} references", cart.trajectories.len(), wrapped.candidates.len(), wrapped.sequences.len());
    for (t, c) in cart.trajectories.iter().zip(&wrapped.candidates) {
        let (a, b) = (t[t.len() - 1], c.waypoints[c.waypoints.len() - 1]);
        println!("  endpoint CA ({:7.2}, {:7.2})   CA-SD ({:7.2}, {:7.2})", a.x, a.y, b.x, b.y);
    }

    let cfg = AggregationConfig::default();
    for (name, wrapped) in [("CA", false), ("CA-SD", true)] {
        let m = evaluate_scene(&scene, &forecast_ca(&scene, wrapped, &cfg, None)?)?;
        println!("{name:6} minADE {:.3}  minFDE {:.3}  ORP {:.2}  MR1 {}", m.min_ade, m.min_fde, m.orp, m.mr1);
    }
    Ok(())
}
