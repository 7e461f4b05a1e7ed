//! Indentation-based text form of atoms.
//!
//! ```text
//! EvaluationLink
//!   PredicateNode "RightTo"
//!   ListLink
//!     ConceptNode "BB#1-1"
//!     ConceptNode "BB#1-2"
//! ```
//!
//! One atom per line: a type token, optionally followed by a double-quoted
//! name. Children sit on the following lines, indented by exactly two more
//! spaces than their parent. Types that are `Node` or end in `Node` carry a
//! name and no children; every other type is a link with at least one child.
//! Blank lines and `;` comments are ignored. Tabs in indentation are an error.

use std::fmt::Write as _;

use thiserror::Error;

use crate::atomstore::{Atom, AtomId, AtomStore, StoreError};

/// One parsed atom with its subtree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tree {
    pub atom_type: String,
    pub name: Option<String>,
    pub children: Vec<Tree>,
}

impl Tree {
    pub fn node(atom_type: &str, name: &str) -> Self {
        Tree { atom_type: atom_type.to_string(), name: Some(name.to_string()), children: Vec::new() }
    }

    pub fn link(atom_type: &str, children: Vec<Tree>) -> Self {
        Tree { atom_type: atom_type.to_string(), name: None, children }
    }

    pub fn is_node(&self) -> bool {
        self.name.is_some()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AtomeseDoc {
    pub roots: Vec<Tree>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AtomeseError {
    #[error("line {line}: indentation error: {msg}")]
    Indent { line: usize, msg: String },
    #[error("line {line}: {msg}")]
    Name { line: usize, msg: String },
    #[error("line {line}: link {atom_type} has no children")]
    EmptyLink { line: usize, atom_type: String },
    #[error("line {line}, column {column}: {msg}")]
    Syntax { line: usize, column: usize, msg: String },
}

/// Whether atoms of this type are nodes (named, childless).
pub fn is_node_type(atom_type: &str) -> bool {
    atom_type.ends_with("Node")
}

struct Open {
    tree: Tree,
    line: usize,
}

pub fn parse(text: &str) -> Result<AtomeseDoc, AtomeseError> {
    let mut roots = Vec::new();
    let mut stack: Vec<Open> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let Some((level, atom_type, name)) = parse_line(raw, line_no)? else {
            continue;
        };
        if level > stack.len() {
            return Err(AtomeseError::Indent {
                line: line_no,
                msg: format!("expected at most {} levels, found {level}", stack.len()),
            });
        }
        while stack.len() > level {
            close(&mut stack, &mut roots)?;
        }
        if let Some(parent) = stack.last() {
            if parent.tree.is_node() {
                return Err(AtomeseError::Indent {
                    line: line_no,
                    msg: format!("node {} cannot have children", parent.tree.atom_type),
                });
            }
        }
        let tree = match (is_node_type(&atom_type), name) {
            (true, Some(name)) => Tree { atom_type, name: Some(name), children: Vec::new() },
            (true, None) => {
                return Err(AtomeseError::Name { line: line_no, msg: format!("node {atom_type} needs a name") })
            }
            (false, Some(_)) => {
                return Err(AtomeseError::Name {
                    line: line_no,
                    msg: format!("link {atom_type} cannot have a name"),
                })
            }
            (false, None) => Tree::link(&atom_type, Vec::new()),
        };
        stack.push(Open { tree, line: line_no });
    }
    while !stack.is_empty() {
        close(&mut stack, &mut roots)?;
    }
    Ok(AtomeseDoc { roots })
}

fn close(stack: &mut Vec<Open>, roots: &mut Vec<Tree>) -> Result<(), AtomeseError> {
    let open = stack.pop().expect("close on empty stack");
    if !open.tree.is_node() && open.tree.children.is_empty() {
        return Err(AtomeseError::EmptyLink { line: open.line, atom_type: open.tree.atom_type });
    }
    match stack.last_mut() {
        Some(parent) => parent.tree.children.push(open.tree),
        None => roots.push(open.tree),
    }
    Ok(())
}

/// Splits one line into (level, type, name). `None` for blank or comment lines.
fn parse_line(raw: &str, line: usize) -> Result<Option<(usize, String, Option<String>)>, AtomeseError> {
    let chars: Vec<char> = raw.trim_end_matches('\r').chars().collect();
    let syntax = |column: usize, msg: &str| AtomeseError::Syntax { line, column: column + 1, msg: msg.to_string() };

    let mut i = 0;
    while i < chars.len() && (chars[i] == ' ' || chars[i] == '\t') {
        if chars[i] == '\t' {
            return Err(AtomeseError::Indent { line, msg: "tab in indentation".into() });
        }
        i += 1;
    }
    if i == chars.len() || chars[i] == ';' {
        return Ok(None);
    }
    if i % 2 != 0 {
        return Err(AtomeseError::Indent { line, msg: format!("odd indentation of {i} spaces") });
    }
    let level = i / 2;

    let start = i;
    if !chars[i].is_ascii_alphabetic() {
        return Err(syntax(i, "expected an atom type"));
    }
    while i < chars.len() && chars[i].is_ascii_alphanumeric() {
        i += 1;
    }
    let atom_type: String = chars[start..i].iter().collect();

    let mut name = None;
    let mut seen_space = false;
    while i < chars.len() {
        match chars[i] {
            ' ' => {
                seen_space = true;
                i += 1;
            }
            ';' => break,
            '"' if seen_space && name.is_none() => {
                let (s, next) = scan_string(&chars, i).map_err(|col| syntax(col, "unterminated string"))?;
                name = Some(s);
                i = next;
                seen_space = false;
            }
            '\t' => return Err(syntax(i, "tab outside indentation")),
            _ => return Err(syntax(i, "unexpected character")),
        }
    }
    Ok(Some((level, atom_type, name)))
}

/// Scans a quoted string starting at `chars[start] == '"'`. Returns the
/// unescaped contents and the index after the closing quote.
fn scan_string(chars: &[char], start: usize) -> Result<(String, usize), usize> {
    let mut out = String::new();
    let mut i = start + 1;
    while i < chars.len() {
        match chars[i] {
            '"' => return Ok((out, i + 1)),
            '\\' => {
                let c = *chars.get(i + 1).ok_or(i)?;
                out.push(c);
                i += 2;
            }
            c => {
                out.push(c);
                i += 1;
            }
        }
    }
    Err(start)
}

pub fn quote(name: &str) -> String {
    let mut s = String::with_capacity(name.len() + 2);
    s.push('"');
    for c in name.chars() {
        if c == '"' || c == '\\' {
            s.push('\\');
        }
        s.push(c);
    }
    s.push('"');
    s
}

fn write_tree(out: &mut String, tree: &Tree, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
    out.push_str(&tree.atom_type);
    if let Some(name) = &tree.name {
        out.push(' ');
        out.push_str(&quote(name));
    }
    out.push('\n');
    for child in &tree.children {
        write_tree(out, child, level + 1);
    }
}

pub fn print_tree(tree: &Tree) -> String {
    let mut out = String::new();
    write_tree(&mut out, tree, 0);
    out
}

pub fn print_doc(doc: &AtomeseDoc) -> String {
    let mut out = String::new();
    for tree in &doc.roots {
        write_tree(&mut out, tree, 0);
    }
    out
}

/// Subtree of a stored atom.
pub fn tree_of(store: &AtomStore, id: AtomId) -> Tree {
    match store.get(id).expect("atom handle from another store") {
        Atom::Node { atom_type, name } => Tree::node(store.type_name(*atom_type), name),
        Atom::Link { atom_type, outgoing } => Tree::link(
            store.type_name(*atom_type),
            outgoing.iter().map(|c| tree_of(store, *c)).collect(),
        ),
    }
}

pub fn print_atom(store: &AtomStore, id: AtomId) -> String {
    print_tree(&tree_of(store, id))
}

/// Atoms with no incoming links, in handle order.
pub fn root_atoms(store: &AtomStore) -> impl Iterator<Item = AtomId> + '_ {
    store.ids().filter(|id| store.get_incoming(*id).map(<[_]>::is_empty).unwrap_or(true))
}

/// Dumps the whole store: every root atom with its subtree, in handle order.
/// Shared subtrees are repeated; loading deduplicates them again.
pub fn print_store(store: &AtomStore) -> String {
    let mut out = String::new();
    for id in root_atoms(store) {
        write_atom(&mut out, store, id, 0);
    }
    out
}

fn write_atom(out: &mut String, store: &AtomStore, id: AtomId, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
    match store.get(id).expect("atom handle from another store") {
        Atom::Node { atom_type, name } => {
            let _ = writeln!(out, "{} {}", store.type_name(*atom_type), quote(name));
        }
        Atom::Link { atom_type, outgoing } => {
            let _ = writeln!(out, "{}", store.type_name(*atom_type));
            for c in outgoing.iter() {
                write_atom(out, store, *c, level + 1);
            }
        }
    }
}

pub fn load_tree(tree: &Tree, store: &mut AtomStore) -> Result<AtomId, StoreError> {
    match &tree.name {
        Some(name) => Ok(store.add_node(&tree.atom_type, name)),
        None => {
            let kids = tree
                .children
                .iter()
                .map(|c| load_tree(c, store))
                .collect::<Result<Vec<_>, _>>()?;
            store.add_link(&tree.atom_type, &kids)
        }
    }
}

/// Inserts every tree bottom-up; returns the root handles in document order.
pub fn load(doc: &AtomeseDoc, store: &mut AtomStore) -> Result<Vec<AtomId>, StoreError> {
    doc.roots.iter().map(|t| load_tree(t, store)).collect()
}
