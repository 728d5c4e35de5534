//! Generate a seeded corpus, write it to disk and summarize it.
//!
//! `cargo run --example synthgen_corpus -- [out dir] [count]`

use std::path::PathBuf;

use frenet_wrap::synthgen::{generate_corpus, write_corpus, CorpusSpec, GenParams};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "target/synthgen_corpus".into()));
    let count = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20);
    let spec = CorpusSpec {
        mixture: "straight=0.2,curve=0.3,s_curve=0.1,fork=0.3,crossing=0.1".parse()?,
        count,
        seed: 42,
        params: GenParams::default(),
    };
    let corpus = generate_corpus(&spec)?;
    let manifest = write_corpus(&out, &spec, &corpus)?;
    for m in manifest.scenes.iter().take(8) {
        println!(
            "{:14} {:?} speed {:.2} m/s{} gt lanes {:?}",
            m.scene_id,
            m.topology,
            m.speed,
            if m.speed_reduced { " (reduced)" } else { "" },
            m.gt_lane_ids
        );
    }
    println!("wrote {} scenes and manifest.json to {}", corpus.len(), out.display());
    Ok(())
}
