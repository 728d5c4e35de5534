//! Express a curved scene in the Frenet frame of each of its centerline
//! sequences and map it back.
//!
//! `cargo run --example frenet_transform -- [seed]`

use frenet_wrap::centerlines::enumerate_sequences;
use frenet_wrap::geometry::{scene_to_cartesian, scene_to_frenet};
use frenet_wrap::synthgen::{generate, CurvePlacement, GenParams, Topology};

fn main() -> anyhow::Result<()> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(4);
    let topology = Topology::Curve { radius: 40.0, placement: CurvePlacement::Before };
    let scene = generate(topology, seed, &GenParams::default())?.scene;
    let tv = scene.tv().current();
    println!("scene {}: TV at ({:.2}, {:.2}), heading {:.3} rad", scene.scene_id, tv.x, tv.y, tv.heading);

    for seq in enumerate_sequences(&scene)? {
        let f = scene_to_frenet(&scene, &seq)?;
        let ftv = f.scene.tv().current();
        let gt = f.scene.gt_future.as_ref().unwrap();
        println!(
            "reference {} (lanes {:?}, {:.1} m ahead): TV s={:.3} d={:.3}, gt end s={:.2} d={:.2}, flags {:?}",
            seq.index,
            seq.lane_ids,
            seq.length_ahead(),
            ftv.x,
            ftv.y,
            gt[gt.len() - 1].x,
            gt[gt.len() - 1].y,
            f.flags
        );
        let back = scene_to_cartesian(&f)?;
        let err = back
            .gt_future
            .unwrap()
            .iter()
            .zip(scene.gt_future.as_ref().unwrap())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        println!("  round trip of the ground truth: max error {err:.2e} m");
    }
    Ok(())
}
