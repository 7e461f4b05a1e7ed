//! Run the RightTo pattern straight through the matcher.
//!
//!     cargo run --example right_to_pattern

use siq::atomese::parse;
use siq::atomstore::AtomStore;
use siq::ingest::{build_graph, parse_detections};
use siq::matcher::{match_pattern, Evaluators, Pattern};

fn main() -> anyhow::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    let doc = parse(&std::fs::read_to_string(format!("{dir}/right_to.ats"))?)?;
    let pattern = Pattern::from_tree(&doc.roots[0]);
    println!("{} clauses over {:?}", pattern.clauses().len(), pattern.variables());

    let scene = parse_detections(format!("{dir}/demo.jsonl"))?;
    let mut store = AtomStore::new();
    build_graph(&scene, &mut store);
    // GreaterThanLink is the only evaluatable this pattern needs.
    for g in match_pattern(&pattern, &store, &Evaluators::default())? {
        let name = |v: &str| store.name(g.get(v).unwrap()).unwrap().to_string();
        println!("{} is right of {} (left {} > right {})", name("$BB1"), name("$BB2"), name("$Left1"), name("$Right2"));
    }
    Ok(())
}
