//! Parse Atomese text, load it into a store and print it back.
//!
//!     cargo run --example atomese_roundtrip

use siq::atomese::{load, parse, print_store};
use siq::atomstore::AtomStore;

const TEXT: &str = r#"; a detection and its class
InheritanceLink
  ConceptNode "BB#1-1"
  ConceptNode "dining table"
MemberLink
  InheritanceLink
    NumberNode "80.0"
    Node "Left"
  ConceptNode "BB#1-1"
"#;

fn main() -> anyhow::Result<()> {
    let doc = parse(TEXT)?;
    let mut store = AtomStore::new();
    load(&doc, &mut store)?;
    let printed = print_store(&store);
    print!("{printed}");

    // Printing is canonical: a second load-and-print is identical.
    let mut again = AtomStore::new();
    load(&parse(&printed)?, &mut again)?;
    assert_eq!(print_store(&again), printed);
    println!("; {} atoms, round trip stable", store.len());
    Ok(())
}
