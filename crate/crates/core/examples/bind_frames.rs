//! A Bind rule: for every match, instantiate a resultant into the store.
//!
//!     cargo run --example bind_frames

use siq::atomese::{parse, print_atom};
use siq::atomstore::AtomStore;
use siq::ingest::{build_graph, parse_detections};
use siq::matcher::{execute_bind, BindRule};
use siq::rules::evaluators;

fn main() -> anyhow::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    let doc = parse(&std::fs::read_to_string(format!("{dir}/right_to_bind.ats"))?)?;
    let rule = BindRule::from_tree("right_to", &doc.roots[0])?;

    let mut store = AtomStore::new();
    build_graph(&parse_detections(format!("{dir}/demo.jsonl"))?, &mut store);
    let before = store.len();
    let out = execute_bind(&rule, &mut store, &evaluators())?;
    println!("{} groundings, {} new atoms", out.groundings, out.atoms_added);
    for id in store.ids().skip(before) {
        if store.atom_type(id) == "EvaluationLink" {
            println!("{}", print_atom(&store, id));
        }
    }

    // Running it again adds nothing.
    assert_eq!(execute_bind(&rule, &mut store, &evaluators())?.atoms_added, 0);
    Ok(())
}
