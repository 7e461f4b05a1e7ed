//! Derive every spatial relation for a scene by forward chaining.
//!
//!     cargo run --example forward_chaining

use std::collections::BTreeMap;

use siq::atomstore::AtomStore;
use siq::chainer::Chainer;
use siq::ingest::{build_graph, parse_detections};
use siq::rules::{builtin_rules, evaluators, RelParams};

fn main() -> anyhow::Result<()> {
    let scene = parse_detections(concat!(env!("CARGO_MANIFEST_DIR"), "/data/demo.jsonl"))?;
    let mut store = AtomStore::new();
    build_graph(&scene, &mut store);
    let base = store.len();

    let rules = builtin_rules(&RelParams::default());
    let mut chainer = Chainer::new();
    let added = chainer.forward_chain(&rules, &mut store, &evaluators())?;
    println!("{} rules, {base} base atoms, {added} derived", rules.len());
    for entry in chainer.log() {
        println!("  {entry}");
    }

    // Count facts per predicate.
    let mut facts: BTreeMap<&str, usize> = BTreeMap::new();
    for &ev in store.atoms_of_type("EvaluationLink") {
        let pred = store.outgoing(ev)[0];
        *facts.entry(store.name(pred).unwrap()).or_default() += 1;
    }
    for (pred, n) in facts {
        println!("{pred}: {n}");
    }
    Ok(())
}
