//! Nodes, links, deduplication and the incoming/position indexes.
//!
//!     cargo run --example atomspace_basics

use siq::atomstore::AtomStore;

fn main() -> anyhow::Result<()> {
    let mut store = AtomStore::new();
    let person = store.add_node("ConceptNode", "person");
    let bb = store.add_node("ConceptNode", "BB#1-1");
    let isa = store.add_link("InheritanceLink", &[bb, person])?;

    // Adding the same atom again returns the same handle.
    assert_eq!(store.add_node("ConceptNode", "person"), person);
    assert_eq!(store.add_link("InheritanceLink", &[bb, person])?, isa);

    // Numbers are stored under a canonical name.
    let a = store.add_number(80.0);
    let b = store.add_number(80.00);
    assert_eq!(a, b);
    println!("number node name: {:?}", store.name(a).unwrap());

    println!("{} atoms", store.len());
    println!("incoming of person: {:?}", store.get_incoming(person)?);
    println!("InheritanceLinks with person at position 1: {:?}", store.find_links("InheritanceLink", 1, person)?);
    println!("lookup by name: {:?}", store.find_node("ConceptNode", "BB#1-1"));
    for (id, atom) in store.iter() {
        println!("  {id:?} {} {:?} {:?}", store.type_name(atom.atom_type()), atom.name(), atom.outgoing());
    }
    Ok(())
}
