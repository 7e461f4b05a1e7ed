//! Random stores and patterns, and a matcher reference that tries every
//! assignment of atoms to variables.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use siq::atomstore::{AtomId, AtomStore, NUMBER_NODE};
use siq::matcher::{Grounding, Pattern, Term, GREATER_THAN_LINK};

const NODE_TYPES: [&str; 3] = ["ConceptNode", "PredicateNode", NUMBER_NODE];
const LINK_TYPES: [&str; 4] = ["ListLink", "MemberLink", "EvaluationLink", "InheritanceLink"];
const NAMES: [&str; 5] = ["a", "b", "c", "with space", "q\"uote"];
pub const VARS: [&str; 3] = ["$x", "$y", "$z"];

/// Up to `max_atoms` atoms, mixing nodes and links of arity 1..=3 over
/// earlier atoms.
pub fn random_store(rng: &mut impl Rng, max_atoms: usize) -> AtomStore {
    let mut s = AtomStore::new();
    let target = rng.gen_range(1..=max_atoms);
    let mut attempts = 0;
    while s.len() < target && attempts < 10 * max_atoms {
        attempts += 1;
        if s.is_empty() || rng.gen_bool(0.4) {
            let t = *NODE_TYPES.choose(rng).unwrap();
            if t == NUMBER_NODE {
                s.add_number(rng.gen_range(0..6) as f64 * 0.5);
            } else {
                s.add_node(t, NAMES.choose(rng).unwrap());
            }
        } else {
            let ids: Vec<AtomId> = s.ids().collect();
            let arity = rng.gen_range(1..=3);
            let kids: Vec<AtomId> = (0..arity).map(|_| *ids.choose(rng).unwrap()).collect();
            s.add_link(LINK_TYPES.choose(rng).unwrap(), &kids).unwrap();
        }
    }
    s
}

fn holes(t: &Term, rng: &mut impl Rng, vars: &[&str], depth: usize) -> Term {
    if depth > 0 && rng.gen_bool(0.35) {
        return Term::var(vars.choose(rng).unwrap());
    }
    match t {
        Term::Link { atom_type, children } => {
            Term::link(atom_type, children.iter().map(|c| holes(c, rng, vars, depth + 1)).collect())
        }
        Term::Node { atom_type, name } if rng.gen_bool(0.05) => Term::node(atom_type, &format!("{name}-absent")),
        other => other.clone(),
    }
}

/// 1..=3 clauses using at most `nvars` variables. Structural clauses are
/// existing links with random subterms replaced by variables; sometimes a
/// `GreaterThanLink` over bound variables is added. May be ill-formed.
pub fn random_pattern(rng: &mut impl Rng, store: &AtomStore, nvars: usize) -> Pattern {
    let vars = &VARS[..nvars.clamp(1, VARS.len())];
    let links: Vec<AtomId> = store.ids().filter(|&id| !store.outgoing(id).is_empty()).collect();
    let mut clauses = Vec::new();
    for _ in 0..rng.gen_range(1..=3) {
        let t = match links.choose(rng) {
            Some(&l) if rng.gen_bool(0.9) => holes(&Term::from_atom(store, l), rng, vars, 0),
            _ => Term::link(LINK_TYPES.choose(rng).unwrap(), vec![Term::var(vars.choose(rng).unwrap())]),
        };
        clauses.push(t);
    }
    let used = Pattern::new(clauses.clone()).variables();
    if !used.is_empty() && rng.gen_bool(0.3) {
        let a = Term::var(used.choose(rng).unwrap());
        let b = if rng.gen_bool(0.7) { Term::var(used.choose(rng).unwrap()) } else { Term::number(1.0) };
        clauses.push(Term::link(GREATER_THAN_LINK, vec![a, b]));
    }
    Pattern::new(clauses)
}

fn ground(t: &Term, vars: &[String], assign: &[AtomId], store: &AtomStore) -> Option<AtomId> {
    match t {
        Term::Var(v) => Some(assign[vars.iter().position(|x| x == v)?]),
        Term::Node { atom_type, name } => store.find_node(atom_type, name),
        Term::Link { atom_type, children } => {
            let kids: Option<Vec<AtomId>> = children.iter().map(|c| ground(c, vars, assign, store)).collect();
            store.find_link(atom_type, &kids?)
        }
    }
}

fn numeric(t: &Term, vars: &[String], assign: &[AtomId], store: &AtomStore) -> Option<f64> {
    match t {
        Term::Var(v) => store.number_value(assign[vars.iter().position(|x| x == v)?]),
        Term::Node { atom_type, name } if atom_type == NUMBER_NODE => name.parse().ok(),
        _ => None,
    }
}

/// Every assignment of store atoms to the pattern's variables under which
/// each structural clause denotes a stored atom and each `GreaterThanLink`
/// compares two numbers correctly.
pub fn exhaustive_match(pattern: &Pattern, store: &AtomStore) -> BTreeSet<Grounding> {
    let vars = pattern.variables();
    let atoms: Vec<AtomId> = store.ids().collect();
    let mut out = BTreeSet::new();
    let mut assign = vec![atoms[0]; vars.len()];
    let total = atoms.len().pow(vars.len() as u32);
    for mut n in 0..total {
        for slot in assign.iter_mut() {
            *slot = atoms[n % atoms.len()];
            n /= atoms.len();
        }
        let ok = pattern.clauses().iter().all(|c| {
            if c.atom_type() == GREATER_THAN_LINK {
                let k = c.children();
                matches!(
                    (numeric(&k[0], &vars, &assign, store), numeric(&k[1], &vars, &assign, store)),
                    (Some(a), Some(b)) if a > b
                )
            } else {
                ground(c, &vars, &assign, store).is_some()
            }
        });
        if ok {
            out.insert(vars.iter().cloned().zip(assign.iter().copied()).collect());
        }
    }
    out
}
