//! Compare engine answers with direct geometry on a random scene.
//!
//!     cargo run --release --example oracle_check -- [seed]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use siq::engine::Engine;
use siq::oracle::oracle_retrieve;
use siq::rules::{RelKind, RelParams};
use siq::synth::{conjunction_query, random_scene, single_query, SceneSpec};

fn main() -> anyhow::Result<()> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(7);
    let spec = SceneSpec::default();
    let params = RelParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scene = random_scene(&mut rng, &spec);
    let mut engine = Engine::from_scene(&scene, params)?;
    println!("seed {seed}: {} frames, {} detections", scene.frames.len(), scene.detections.len());

    let mut disagreements = 0;
    for rel in RelKind::ALL {
        for q in [single_query(&mut rng, &spec.classes, rel), conjunction_query(&mut rng, &spec.classes, rel)] {
            let want: std::collections::BTreeSet<(String, Vec<u32>)> =
                oracle_retrieve(&q, &scene, &params).map_err(anyhow::Error::msg)?.into_iter().map(|m| (m.frame, m.assignment)).collect();
            let got = engine.query(&q)?.assignments();
            let ok = got == want;
            disagreements += usize::from(!ok);
            println!("{} {q}: {} assignments", if ok { "ok  " } else { "DIFF" }, want.len());
        }
    }
    println!("{disagreements} disagreements");
    Ok(())
}
