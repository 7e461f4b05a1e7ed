//! Query to goal pattern.

use std::collections::{BTreeMap, BTreeSet};

use super::query::{ClassRef, QueryAst, QueryError};
use super::{relation_fact, RelKind, RelParams, DISTINCT_LINK};
use crate::ingest::{CONCEPT_NODE, INHERITANCE_LINK, MEMBER_LINK};
use crate::matcher::{Pattern, Term};

/// Variable bound to the frame node shared by every object in a query.
pub const FRAME_VAR: &str = "$Frame";

#[derive(Clone, Debug, PartialEq)]
pub struct CompiledQuery {
    pub goal: Pattern,
    pub needed_predicates: BTreeSet<RelKind>,
    /// One variable per object, in order of first appearance in the query.
    pub object_vars: Vec<String>,
    /// Class of each object variable.
    pub object_classes: Vec<String>,
}

/// Builds the goal pattern for a query: per clause, both objects' class
/// links and frame memberships plus the derived relation fact. Unaliased
/// objects get a fresh variable per occurrence; the two objects of a clause
/// must be different BBs.
pub fn compile_query(ast: &QueryAst, _params: &RelParams) -> Result<CompiledQuery, QueryError> {
    if ast.clauses.is_empty() {
        return Err(QueryError::EmptyQuery);
    }
    let mut alias_class: BTreeMap<&str, &str> = BTreeMap::new();
    for c in &ast.clauses {
        for r in [&c.left, &c.right] {
            if let Some(a) = &r.alias {
                if format!("${a}") == FRAME_VAR {
                    return Err(QueryError::ReservedAlias(a.clone()));
                }
                match alias_class.get(a.as_str()) {
                    Some(prev) if *prev != r.class => {
                        return Err(QueryError::AliasClassMismatch {
                            alias: a.clone(),
                            first: prev.to_string(),
                            second: r.class.clone(),
                        })
                    }
                    _ => {
                        alias_class.insert(a, &r.class);
                    }
                }
            }
        }
    }

    let mut fresh = FreshNames { used: alias_class.keys().map(|a| a.to_string()).collect(), next: 0 };
    let mut object_vars: Vec<String> = Vec::new();
    let mut object_classes = Vec::new();
    let mut var_for = |r: &ClassRef| -> String {
        let v = match &r.alias {
            Some(a) => format!("${a}"),
            None => fresh.next(),
        };
        if !object_vars.contains(&v) {
            object_vars.push(v.clone());
            object_classes.push(r.class.clone());
        }
        v
    };

    let mut clauses: Vec<Term> = Vec::new();
    let mut push = |t: Term| {
        if !clauses.contains(&t) {
            clauses.push(t);
        }
    };
    let mut needed = BTreeSet::new();
    for c in &ast.clauses {
        let a = var_for(&c.left);
        let b = var_for(&c.right);
        for (v, r) in [(&a, &c.left), (&b, &c.right)] {
            push(Term::link(INHERITANCE_LINK, vec![Term::var(v), Term::node(CONCEPT_NODE, &r.class)]));
            push(Term::link(MEMBER_LINK, vec![Term::var(v), Term::var(FRAME_VAR)]));
        }
        push(relation_fact(c.rel.predicate(), Term::var(&a), Term::var(&b)));
        if a != b {
            push(Term::link(DISTINCT_LINK, vec![Term::var(&a), Term::var(&b)]));
        }
        needed.insert(c.rel);
    }
    Ok(CompiledQuery { goal: Pattern::new(clauses), needed_predicates: needed, object_vars, object_classes })
}

/// `$a`, `$b`, ... `$z`, `$v26`, ... skipping names taken by aliases.
struct FreshNames {
    used: BTreeSet<String>,
    next: usize,
}

impl FreshNames {
    fn next(&mut self) -> String {
        loop {
            let n = self.next;
            self.next += 1;
            let name = if n < 26 { ((b'a' + n as u8) as char).to_string() } else { format!("v{n}") };
            if !self.used.contains(&name) && format!("${name}") != FRAME_VAR {
                return format!("${name}");
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::parse_query;

    fn compile(text: &str) -> Result<CompiledQuery, QueryError> {
        compile_query(&parse_query(text)?, &RelParams::default())
    }

    #[test]
    fn person_inside_car() {
        let q = compile("FIND FRAMES WHERE person INSIDE car").unwrap();
        let mut vars = q.goal.variables();
        vars.sort();
        assert_eq!(vars, ["$Frame", "$a", "$b"]);
        assert_eq!(q.object_vars, ["$a", "$b"]);
        assert_eq!(q.object_classes, ["person", "car"]);
        assert_eq!(q.needed_predicates, BTreeSet::from([RelKind::Inside]));
        assert!(q.goal.clauses().contains(&relation_fact("Inside", Term::var("$a"), Term::var("$b"))));
        assert!(q.goal.clauses().contains(&Term::link(MEMBER_LINK, vec![Term::var("$a"), Term::var(FRAME_VAR)])));
        assert!(q.goal.clauses().contains(&Term::link(MEMBER_LINK, vec![Term::var("$b"), Term::var(FRAME_VAR)])));
    }

    #[test]
    fn alias_shared_across_clauses() {
        let q = compile("FIND FRAMES WHERE person:p WITH tie AND person:p LEFT_OF car").unwrap();
        assert_eq!(q.object_vars, ["$p", "$a", "$b"]);
        assert!(q.goal.clauses().contains(&relation_fact("With", Term::var("$p"), Term::var("$a"))));
        assert!(q.goal.clauses().contains(&relation_fact("LeftTo", Term::var("$p"), Term::var("$b"))));
        let class_links = q
            .goal
            .clauses()
            .iter()
            .filter(|c| c.atom_type() == INHERITANCE_LINK && c.children()[0] == Term::var("$p"))
            .count();
        assert_eq!(class_links, 1);
        assert_eq!(q.needed_predicates, BTreeSet::from([RelKind::With, RelKind::LeftOf]));
    }

    #[test]
    fn same_class_objects_must_differ() {
        let q = compile("FIND FRAMES WHERE person INSIDE person").unwrap();
        assert!(q.goal.clauses().contains(&Term::link(DISTINCT_LINK, vec![Term::var("$a"), Term::var("$b")])));
    }

    #[test]
    fn fresh_names_skip_aliases() {
        let q = compile("FIND FRAMES WHERE person:a WITH tie AND car LEFT_OF dog").unwrap();
        assert_eq!(q.object_vars, ["$a", "$b", "$c", "$d"]);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            compile("FIND FRAMES WHERE person:p WITH tie AND car:p LEFT_OF car"),
            Err(QueryError::AliasClassMismatch { .. })
        ));
        assert!(matches!(compile("FIND FRAMES WHERE person:Frame WITH tie"), Err(QueryError::ReservedAlias(_))));
        assert_eq!(compile_query(&QueryAst { clauses: vec![] }, &RelParams::default()), Err(QueryError::EmptyQuery));
    }
}
