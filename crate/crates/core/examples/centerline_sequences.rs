//! Enumerate the reference paths a TV could follow at a fork and at a
//! crossing, and pick the one its ground truth takes.

use frenet_wrap::centerlines::{assign_current_lane, assign_gt_centerline, enumerate_sequences, mean_abs_lateral};
use frenet_wrap::synthgen::{generate, GenParams, Topology};

fn main() -> anyhow::Result<()> {
    for (name, topology) in [("fork", Topology::Fork { angle_deg: 30.0 }), ("crossing", Topology::Crossing)] {
        let g = generate(topology, 11, &GenParams::default())?;
        let scene = &g.scene;
        let seqs = enumerate_sequences(scene)?;
        println!("{name}: TV on lane {}, {} sequences", assign_current_lane(scene)?, seqs.len());
        let gt = scene.gt_future.as_ref().unwrap();
        for s in &seqs {
            println!(
                "  #{} lanes {:?}: {:.1} m ahead, mean |d| of gt {:.2} m",
                s.index,
                s.lane_ids,
                s.length_ahead(),
                mean_abs_lateral(s, gt)
            );
        }
        println!("  ground truth follows #{}", assign_gt_centerline(scene, &seqs)?);
    }
    Ok(())
}
