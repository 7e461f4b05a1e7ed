//! Deduplicating, append-only hypergraph store.
//!
//! Atoms are either nodes (a type plus a name) or links (a type plus an
//! ordered list of children). Every atom is stored once: adding an atom that
//! already exists returns the existing handle. The store keeps four indices
//! next to the atom table:
//!
//! * `(type, name)` and `(type, outgoing)` for deduplication and lookup,
//! * incoming sets (all links that mention an atom),
//! * per-type atom lists,
//! * `(link type, position, child)` lists, used by the matcher to enumerate
//!   candidate links for a partially bound template.
//!
//! Nothing is ever removed, so handles stay valid for the lifetime of the
//! store and every index list is sorted by handle.

use std::fmt;

use rustc_hash::FxHashMap;
use thiserror::Error;

/// Atom type used for numeric constants.
pub const NUMBER_NODE: &str = "NumberNode";

/// Handle of an atom inside one [`AtomStore`]. Dense, assigned in insertion
/// order, never reused.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomId(pub(crate) u32);

impl AtomId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for AtomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Interned atom type name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeSym(u32);

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Atom {
    Node { atom_type: TypeSym, name: Box<str> },
    Link { atom_type: TypeSym, outgoing: Box<[AtomId]> },
}

impl Atom {
    pub fn atom_type(&self) -> TypeSym {
        match self {
            Atom::Node { atom_type, .. } | Atom::Link { atom_type, .. } => *atom_type,
        }
    }

    pub fn name(&self) -> Option<&str> {
        match self {
            Atom::Node { name, .. } => Some(name),
            Atom::Link { .. } => None,
        }
    }

    pub fn outgoing(&self) -> &[AtomId] {
        match self {
            Atom::Node { .. } => &[],
            Atom::Link { outgoing, .. } => outgoing,
        }
    }

    pub fn is_link(&self) -> bool {
        matches!(self, Atom::Link { .. })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StoreError {
    #[error("unknown atom {0}")]
    UnknownAtom(AtomId),
    #[error("link of type {0} has no children")]
    EmptyLink(String),
}

/// Canonical name of a `NumberNode`: the shortest decimal that round-trips
/// to the same 64-bit float. Names that do not parse as a float are kept
/// verbatim.
pub fn canonical_number(name: &str) -> String {
    match name.trim().parse::<f64>() {
        Ok(v) => format_number(v),
        Err(_) => name.to_string(),
    }
}

/// Shortest round-trip decimal rendering of `v`.
pub fn format_number(v: f64) -> String {
    // `Display` for f64 never uses exponent notation and emits the shortest
    // digit string that parses back to the same bits.
    format!("{v}")
}

#[derive(Default, Clone)]
pub struct AtomStore {
    atoms: Vec<Atom>,
    type_names: Vec<Box<str>>,
    type_syms: FxHashMap<Box<str>, TypeSym>,
    node_index: FxHashMap<TypeSym, FxHashMap<Box<str>, AtomId>>,
    link_index: FxHashMap<TypeSym, FxHashMap<Box<[AtomId]>, AtomId>>,
    incoming: Vec<Vec<AtomId>>,
    type_index: Vec<Vec<AtomId>>,
    pos_index: FxHashMap<(TypeSym, u32, AtomId), Vec<AtomId>>,
}

impl fmt::Debug for AtomStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AtomStore")
            .field("atoms", &self.atoms.len())
            .field("types", &self.type_names.len())
            .finish()
    }
}

impl AtomStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Interns `name` as an atom type.
    pub fn intern_type(&mut self, name: &str) -> TypeSym {
        if let Some(sym) = self.type_syms.get(name) {
            return *sym;
        }
        let sym = TypeSym(self.type_names.len() as u32);
        self.type_names.push(name.into());
        self.type_syms.insert(name.into(), sym);
        self.type_index.push(Vec::new());
        sym
    }

    /// Looks up an already interned type.
    pub fn type_sym(&self, name: &str) -> Option<TypeSym> {
        self.type_syms.get(name).copied()
    }

    pub fn type_name(&self, sym: TypeSym) -> &str {
        &self.type_names[sym.0 as usize]
    }

    pub fn add_node(&mut self, atom_type: &str, name: &str) -> AtomId {
        assert!(!atom_type.is_empty(), "atom type must be non-empty");
        let canonical;
        let name = if atom_type == NUMBER_NODE {
            canonical = canonical_number(name);
            canonical.as_str()
        } else {
            name
        };
        let sym = self.intern_type(atom_type);
        if let Some(id) = self.node_index.get(&sym).and_then(|m| m.get(name)) {
            return *id;
        }
        let id = self.push(Atom::Node { atom_type: sym, name: name.into() });
        self.node_index.entry(sym).or_default().insert(name.into(), id);
        id
    }

    /// Convenience for `add_node("NumberNode", ..)` from a float.
    pub fn add_number(&mut self, value: f64) -> AtomId {
        self.add_node(NUMBER_NODE, &format_number(value))
    }

    pub fn add_link(&mut self, atom_type: &str, outgoing: &[AtomId]) -> Result<AtomId, StoreError> {
        assert!(!atom_type.is_empty(), "atom type must be non-empty");
        if outgoing.is_empty() {
            return Err(StoreError::EmptyLink(atom_type.to_string()));
        }
        if let Some(bad) = outgoing.iter().find(|c| c.index() >= self.atoms.len()) {
            return Err(StoreError::UnknownAtom(*bad));
        }
        let sym = self.intern_type(atom_type);
        if let Some(id) = self.link_index.get(&sym).and_then(|m| m.get(outgoing)) {
            return Ok(*id);
        }
        let id = self.push(Atom::Link { atom_type: sym, outgoing: outgoing.into() });
        for (pos, child) in outgoing.iter().enumerate() {
            let inc = &mut self.incoming[child.index()];
            // A child repeated within one link is recorded once.
            if inc.last() != Some(&id) {
                inc.push(id);
            }
            self.pos_index.entry((sym, pos as u32, *child)).or_default().push(id);
        }
        self.link_index.entry(sym).or_default().insert(outgoing.into(), id);
        Ok(id)
    }

    fn push(&mut self, atom: Atom) -> AtomId {
        let id = AtomId(u32::try_from(self.atoms.len()).expect("atom store overflow"));
        self.type_index[atom.atom_type().0 as usize].push(id);
        self.atoms.push(atom);
        self.incoming.push(Vec::new());
        id
    }

    pub fn get(&self, id: AtomId) -> Option<&Atom> {
        self.atoms.get(id.index())
    }

    pub fn atom(&self, id: AtomId) -> Result<&Atom, StoreError> {
        self.get(id).ok_or(StoreError::UnknownAtom(id))
    }

    pub fn contains(&self, id: AtomId) -> bool {
        id.index() < self.atoms.len()
    }

    /// Type name of an atom. Panics on a handle from another store.
    pub fn atom_type(&self, id: AtomId) -> &str {
        self.type_name(self.atoms[id.index()].atom_type())
    }

    pub fn name(&self, id: AtomId) -> Option<&str> {
        self.get(id).and_then(Atom::name)
    }

    pub fn outgoing(&self, id: AtomId) -> &[AtomId] {
        self.get(id).map(Atom::outgoing).unwrap_or(&[])
    }

    /// Numeric value of a `NumberNode`, `None` for any other atom.
    pub fn number_value(&self, id: AtomId) -> Option<f64> {
        match self.get(id)? {
            Atom::Node { atom_type, name } if self.type_name(*atom_type) == NUMBER_NODE => {
                name.parse().ok()
            }
            _ => None,
        }
    }

    pub fn find_node(&self, atom_type: &str, name: &str) -> Option<AtomId> {
        let sym = self.type_sym(atom_type)?;
        let map = self.node_index.get(&sym)?;
        if atom_type == NUMBER_NODE {
            map.get(canonical_number(name).as_str()).copied()
        } else {
            map.get(name).copied()
        }
    }

    pub fn find_link(&self, atom_type: &str, outgoing: &[AtomId]) -> Option<AtomId> {
        let sym = self.type_sym(atom_type)?;
        self.find_link_sym(sym, outgoing)
    }

    pub fn find_link_sym(&self, sym: TypeSym, outgoing: &[AtomId]) -> Option<AtomId> {
        self.link_index.get(&sym)?.get(outgoing).copied()
    }

    /// All links that have `a` among their children, ascending.
    pub fn get_incoming(&self, a: AtomId) -> Result<&[AtomId], StoreError> {
        self.incoming.get(a.index()).map(Vec::as_slice).ok_or(StoreError::UnknownAtom(a))
    }

    /// Links of `atom_type` whose child at `position` is `child`, ascending.
    pub fn find_links(&self, atom_type: &str, position: usize, child: AtomId) -> Result<&[AtomId], StoreError> {
        if !self.contains(child) {
            return Err(StoreError::UnknownAtom(child));
        }
        Ok(match self.type_sym(atom_type) {
            Some(sym) => self.links_at(sym, position, child),
            None => &[],
        })
    }

    /// Unchecked variant of [`find_links`](Self::find_links) on an interned type.
    pub fn links_at(&self, sym: TypeSym, position: usize, child: AtomId) -> &[AtomId] {
        self.pos_index
            .get(&(sym, position as u32, child))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Every atom of the given type, ascending.
    pub fn atoms_of_type(&self, atom_type: &str) -> &[AtomId] {
        match self.type_sym(atom_type) {
            Some(sym) => self.atoms_of_sym(sym),
            None => &[],
        }
    }

    pub fn atoms_of_sym(&self, sym: TypeSym) -> &[AtomId] {
        &self.type_index[sym.0 as usize]
    }

    pub fn ids(&self) -> impl ExactSizeIterator<Item = AtomId> + '_ {
        (0..self.atoms.len() as u32).map(AtomId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (AtomId, &Atom)> + '_ {
        self.atoms.iter().enumerate().map(|(i, a)| (AtomId(i as u32), a))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    #[test]
    fn node_dedup() {
        let mut s = AtomStore::new();
        let a = s.add_node("ConceptNode", "Frame#1");
        let b = s.add_node("ConceptNode", "Frame#1");
        assert_eq!(a, b);
        assert_eq!(s.len(), 1);
        let bb1 = s.add_node("ConceptNode", "BB#1-1");
        let bb2 = s.add_node("ConceptNode", "BB#1-2");
        assert_ne!(bb1, bb2);
        // Same name, different type.
        assert_ne!(s.add_node("PredicateNode", "Frame#1"), a);
    }

    #[test]
    fn number_canonicalization() {
        let mut s = AtomStore::new();
        let a = s.add_node(NUMBER_NODE, "60");
        assert_eq!(s.number_value(a), Some(60.0));
        assert_eq!(s.add_node(NUMBER_NODE, "60.0"), a);
        assert_eq!(s.add_node(NUMBER_NODE, "6e1"), a);
        assert_eq!(s.add_number(60.0), a);
        assert_eq!(s.name(a), Some("60"));
        assert_ne!(s.add_node(NUMBER_NODE, "0.1"), s.add_node(NUMBER_NODE, "0.10000000000000002"));
        assert_ne!(s.add_node(NUMBER_NODE, "0"), s.add_node(NUMBER_NODE, "-0"));
        assert_eq!(s.find_node(NUMBER_NODE, "60.000"), Some(a));
    }

    #[test]
    fn link_dedup_and_order() {
        let mut s = AtomStore::new();
        let bb1 = s.add_node("ConceptNode", "BB#1-1");
        let f = s.add_node("ConceptNode", "Frame#1");
        let m1 = s.add_link("MemberLink", &[bb1, f]).unwrap();
        assert_eq!(s.add_link("MemberLink", &[bb1, f]).unwrap(), m1);
        let m2 = s.add_link("MemberLink", &[f, bb1]).unwrap();
        assert_ne!(m1, m2);
        assert_eq!(s.len(), 4);
    }

    #[test]
    fn link_errors() {
        let mut s = AtomStore::new();
        let a = s.add_node("ConceptNode", "a");
        let err = s.add_link("ListLink", &[a, AtomId(7)]).unwrap_err();
        assert_eq!(err, StoreError::UnknownAtom(AtomId(7)));
        assert!(matches!(s.add_link("ListLink", &[]), Err(StoreError::EmptyLink(_))));
        assert_eq!(s.len(), 1);
        assert!(s.get_incoming(AtomId(3)).is_err());
        assert!(s.find_links("ListLink", 0, AtomId(3)).is_err());
    }

    #[test]
    fn incoming_and_positions() {
        let mut s = AtomStore::new();
        let bb1 = s.add_node("ConceptNode", "BB#1-1");
        let bb2 = s.add_node("ConceptNode", "BB#1-2");
        let bb3 = s.add_node("ConceptNode", "BB#1-3");
        let f = s.add_node("ConceptNode", "Frame#1");
        let other = s.add_node("ConceptNode", "unrelated");
        let l = s.add_link("ListLink", &[bb1, bb2, f]).unwrap();
        assert!(s.get_incoming(bb1).unwrap().contains(&l));
        let members: Vec<_> = [bb1, bb2, bb3]
            .iter()
            .map(|bb| s.add_link("MemberLink", &[*bb, f]).unwrap())
            .collect();
        assert_eq!(s.find_links("MemberLink", 1, f).unwrap(), members.as_slice());
        assert!(s.find_links("MemberLink", 0, other).unwrap().is_empty());
        assert!(s.find_links("NoSuchLink", 0, f).unwrap().is_empty());
        // Repeated child recorded once in incoming, at both positions in pos index.
        let dup = s.add_link("ListLink", &[bb3, bb3]).unwrap();
        assert_eq!(s.get_incoming(bb3).unwrap().iter().filter(|x| **x == dup).count(), 1);
        assert_eq!(s.find_links("ListLink", 1, bb3).unwrap(), &[dup]);
    }

    /// Random store: nodes from a small vocabulary, links over earlier atoms.
    fn build_random(ops: &[(bool, u8, Vec<u16>)]) -> AtomStore {
        let mut s = AtomStore::new();
        for (is_node, t, kids) in ops {
            let ty = ["ConceptNode", "NumberNode", "ListLink", "MemberLink", "InheritanceLink"][*t as usize % 5];
            if *is_node || s.is_empty() {
                let name = kids.first().copied().unwrap_or(0) % 17;
                let ty = if ty.ends_with("Link") { "ConceptNode" } else { ty };
                s.add_node(ty, &name.to_string());
            } else {
                let out: Vec<AtomId> = kids.iter().map(|k| AtomId(*k as u32 % s.len() as u32)).collect();
                let ty = if ty.ends_with("Node") { "ListLink" } else { ty };
                if !out.is_empty() {
                    s.add_link(ty, &out).unwrap();
                }
            }
        }
        s
    }

    fn op_strategy() -> impl Strategy<Value = Vec<(bool, u8, Vec<u16>)>> {
        prop::collection::vec((any::<bool>(), 0u8..5, prop::collection::vec(any::<u16>(), 0..4)), 0..1200)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn indices_agree_with_full_scan(ops in op_strategy()) {
            let s = build_random(&ops);
            for id in s.ids() {
                let scan: Vec<AtomId> = s.iter()
                    .filter(|(_, a)| a.outgoing().contains(&id))
                    .map(|(l, _)| l)
                    .collect();
                prop_assert_eq!(s.get_incoming(id).unwrap(), scan.as_slice());
            }
            for (l, atom) in s.iter() {
                for (pos, c) in atom.outgoing().iter().enumerate() {
                    let ty = s.type_name(atom.atom_type());
                    let scan: Vec<AtomId> = s.iter()
                        .filter(|(_, a)| a.atom_type() == atom.atom_type() && a.outgoing().get(pos) == Some(c))
                        .map(|(x, _)| x)
                        .collect();
                    let found = s.find_links(ty, pos, *c).unwrap();
                    prop_assert!(found.contains(&l));
                    prop_assert_eq!(found, scan.as_slice());
                }
            }
            // Dedup: no two atoms share (type, name) or (type, outgoing).
            let mut seen = BTreeSet::new();
            for (_, a) in s.iter() {
                let key = (a.atom_type(), a.name().map(str::to_string), a.outgoing().to_vec());
                prop_assert!(seen.insert(key));
            }
        }

        #[test]
        fn replay_is_deterministic(ops in op_strategy()) {
            let a = build_random(&ops);
            let b = build_random(&ops);
            prop_assert_eq!(a.len(), b.len());
            for ((_, x), (_, y)) in a.iter().zip(b.iter()) {
                prop_assert_eq!(x, y);
            }
        }

        #[test]
        fn number_collision_iff_bit_equal(x in any::<f64>(), y in any::<f64>(), pick in 0u8..3) {
            let y = match pick { 0 => x, 1 => y, _ => f64::from_bits(x.to_bits() ^ 1) };
            let mut s = AtomStore::new();
            let a = s.add_node(NUMBER_NODE, &format!("{x:e}"));
            let b = s.add_node(NUMBER_NODE, &format!("{y:?}"));
            let px: f64 = format!("{x:e}").parse().unwrap();
            let py: f64 = format!("{y:?}").parse().unwrap();
            prop_assert_eq!(a == b, px.to_bits() == py.to_bits());
        }
    }
}
