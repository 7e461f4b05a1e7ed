//! Draw the matching boxes of each answer frame as SVG.
//!
//!     cargo run --example render_svg -- [out-dir]

use siq::cli::render::{frame_svg, svg_file_name};
use siq::engine::Engine;
use siq::ingest::parse_detections;
use siq::rules::RelParams;

fn main() -> anyhow::Result<()> {
    let out = std::env::args().nth(1).map(std::path::PathBuf::from).unwrap_or_else(std::env::temp_dir);
    let scene = parse_detections(concat!(env!("CARGO_MANIFEST_DIR"), "/data/demo.jsonl"))?;
    let mut engine = Engine::from_scene(&scene, RelParams::default())?;
    let result = engine.query_text("FIND FRAMES WHERE person WITH backpack")?;
    for f in &result.frames {
        let path = out.join(svg_file_name(&f.frame));
        std::fs::write(&path, frame_svg(f))?;
        println!("{}", path.display());
    }
    Ok(())
}
