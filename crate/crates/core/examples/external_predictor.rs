//! Drive a predictor in a child process over the line protocol. Defaults
//! to the reference loopback server built into the `frenet-wrap` binary.
//!
//! `cargo build && cargo run --example external_predictor -- ["<command>"]`

use std::time::Duration;

use frenet_wrap::predictors::{wrap_frenet, CaPredictor, ExternalPredictor, CA_K};
use frenet_wrap::synthgen::{generate, GenParams, Topology};

fn main() -> anyhow::Result<()> {
    let command = std::env::args().nth(1).unwrap_or_else(|| {
        let exe = std::env::current_exe().expect("example path");
        let bin = exe.parent().and_then(|p| p.parent()).expect("target dir").join("frenet-wrap");
        format!("'{}' loopback-predictor", bin.display())
    });
    let mut child = ExternalPredictor::spawn(&command, Duration::from_secs(30))?;
    println!("handshake ok: {}", child.command());

    let scene = generate(Topology::Fork { angle_deg: 35.0 }, 9, &GenParams::default())?.scene;
    let ext = wrap_frenet(&scene, &mut child, CA_K)?;
    let local = wrap_frenet(&scene, &mut CaPredictor, CA_K)?;
    let dev = ext
        .candidates
        .iter()
        .zip(&local.candidates)
        .flat_map(|(a, b)| a.waypoints.iter().zip(&b.waypoints).map(|(p, q)| (p - q).norm()))
        .fold(0.0, f64::max);
    println!("{} trajectories over {} frames; max deviation from the in-process model {dev:.1e} m", ext.candidates.len(), ext.sequences.len());

    let faulty = command.clone() + " --fault bad-probs";
    if command.contains("loopback-predictor") {
        let err = ExternalPredictor::spawn(&faulty, Duration::from_secs(5)).and_then(|mut c| wrap_frenet(&scene, &mut c, CA_K));
        println!("faulty child: {}", err.err().map_or("accepted?".into(), |e| e.to_string()));
    }
    Ok(())
}
