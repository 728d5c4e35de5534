//! Apply the three map attacks in both directions to one scene and report
//! how far the TV had to be slowed.

use frenet_wrap::scene_attack::{apply_attack, onset_violations, AttackFamily, AttackSpec, Direction};
use frenet_wrap::synthgen::{generate, GenParams, Topology};

fn main() -> anyhow::Result<()> {
    let scene = generate(Topology::Straight, 8, &GenParams { speed: Some(14.0), ..GenParams::default() })?.scene;
    println!("TV speed {:.2} m/s", scene.tv().current().speed);
    for family in AttackFamily::all_defaults() {
        for dir in [Direction::Left, Direction::Right] {
            let spec = AttackSpec::new(family, dir);
            let p = apply_attack(&scene, &spec)?;
            let end = p.pseudo_gt[p.pseudo_gt.len() - 1];
            println!(
                "{:6} {:5}: kappa_max {:.4} 1/m, speed scale {:.3}, gt end ({:.1}, {:.1}), onset violations {}",
                family.name(),
                dir.to_string(),
                p.kappa_max,
                p.speed_scale,
                end.x,
                end.y,
                onset_violations(&scene, &p)?.len()
            );
        }
    }
    Ok(())
}
