//! Answer queries by backward chaining: only the rules a query needs run.
//!
//!     cargo run --example backward_query -- ["FIND FRAMES WHERE ..."]

use siq::engine::Engine;
use siq::ingest::parse_detections;
use siq::rules::RelParams;

fn main() -> anyhow::Result<()> {
    let scene = parse_detections(concat!(env!("CARGO_MANIFEST_DIR"), "/data/demo.jsonl"))?;
    let mut engine = Engine::from_scene(&scene, RelParams::default())?;
    let queries: Vec<String> = match std::env::args().nth(1) {
        Some(q) => vec![q],
        None => vec![
            "FIND FRAMES WHERE person INSIDE car".into(),
            "FIND FRAMES WHERE person WITH tie".into(),
            "FIND FRAMES WHERE car:c CONTAINS person AND person INSIDE car:c".into(),
            // Repeated: the facts already exist, so nothing is added.
            "FIND FRAMES WHERE person INSIDE car".into(),
        ],
    };
    for q in &queries {
        let result = engine.query_text(q)?;
        println!("{q}");
        for entry in &result.log {
            println!("  {entry}");
        }
        for f in &result.frames {
            for g in &f.groundings {
                let objs: Vec<String> = g.iter().map(|b| format!("{}={} {}", b.var, b.detection.bb_name(), b.detection.label)).collect();
                println!("  frame {}: {}", f.frame, objs.join(", "));
            }
        }
        if result.is_empty() {
            println!("  no matches");
        }
    }
    Ok(())
}
