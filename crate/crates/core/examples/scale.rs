//! Ingest and query timing on a synthetic 10,000-frame scene.
//!
//!     cargo run --release --example scale -- [frames]

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use siq::engine::Engine;
use siq::rules::RelParams;
use siq::synth::{random_scene, SceneSpec};

fn main() -> anyhow::Result<()> {
    let frames = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(10_000);
    // Exactly ten detections per frame.
    let spec = SceneSpec { frames, max_detections: 10, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut scene = random_scene(&mut rng, &spec);
    while scene.detections.len() < frames * 10 {
        let extra = random_scene(&mut rng, &spec);
        for (f, dets) in extra.by_frame() {
            if scene.detections.len() >= frames * 10 {
                break;
            }
            scene.push_frame(f, dets.iter().map(|d| (d.label.clone(), d.confidence, d.bbox)).take(1));
        }
    }
    println!("{} frames, {} detections", scene.frames.len(), scene.detections.len());

    let t = Instant::now();
    let mut engine = Engine::from_scene(&scene, RelParams::default())?;
    println!("ingest: {:.2?} ({} atoms)", t.elapsed(), engine.store().len());

    for q in ["FIND FRAMES WHERE person INSIDE car", "FIND FRAMES WHERE person LEFT_OF car", "FIND FRAMES WHERE vase ON \"dining table\""] {
        let t = Instant::now();
        let r = engine.query_text(q)?;
        println!("{q}: {} frames, {} groundings in {:.2?}", r.frames.len(), r.grounding_count(), t.elapsed());
    }
    Ok(())
}
