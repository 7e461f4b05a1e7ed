//! Load detector output (JSON lines) into the atom store.
//!
//!     cargo run --example ingest_scene -- [detections.jsonl]

use siq::atomese::print_atom;
use siq::atomstore::AtomStore;
use siq::ingest::{build_graph, decode_scene, parse_detections};

fn main() -> anyhow::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/vase_flowers.jsonl").into());
    let scene = parse_detections(&path)?;
    let mut store = AtomStore::new();
    let added = build_graph(&scene, &mut store);
    println!("{} frames, {} detections -> {added} atoms", scene.frames.len(), scene.detections.len());

    // Ingest is idempotent.
    assert_eq!(build_graph(&scene, &mut store), 0);

    let first = &scene.detections[0];
    let bb = store.find_node("ConceptNode", &first.bb_name()).expect("ingested");
    println!("atoms mentioning {}:", first.bb_name());
    for &link in store.get_incoming(bb)? {
        println!("{}", print_atom(&store, link));
    }
    for d in decode_scene(&store) {
        println!("{} {} {:.2} {:?}", d.bb_name(), d.label, d.confidence, d.bbox.as_array());
    }
    Ok(())
}
