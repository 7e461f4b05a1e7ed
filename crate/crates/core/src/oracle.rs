//! Brute-force reference evaluator.
//!
//! Answers queries straight from detection lists with nested loops. It
//! shares no code with the atom store, matcher, chainer or rule library:
//! the relation arithmetic below is written out separately on purpose, so a
//! change to either side shows up as a disagreement.

use std::collections::BTreeSet;

use crate::ingest::{BBox, Detection, Scene};
use crate::rules::{QueryAst, RelKind, RelParams};

/// Direct geometric test of `rel(a, b)`; `a` is the subject.
pub fn oracle_relation(rel: RelKind, a: &BBox, b: &BBox, params: &RelParams) -> bool {
    match rel {
        RelKind::RightOf => a.left > b.right,
        RelKind::LeftOf => a.right < b.left,
        RelKind::Above => a.bottom < b.top,
        RelKind::Below => a.top > b.bottom,
        RelKind::Inside => contained(a, b, params.inside_slack),
        RelKind::Contains => contained(b, a, params.inside_slack),
        RelKind::Intersects => overlaps(a, b),
        RelKind::On => {
            let shared = a.right.min(b.right) - a.left.max(b.left);
            let gap = (a.bottom - b.top).abs();
            shared.max(0.0) >= params.on_overlap_min * a.width() && gap <= params.on_tau * b.height()
        }
        RelKind::With => overlaps(a, b) || contained(a, b, params.inside_slack) || contained(b, a, params.inside_slack),
    }
}

fn contained(inner: &BBox, outer: &BBox, slack: f64) -> bool {
    let s = slack;
    inner.left >= outer.left - s && inner.top >= outer.top - s && inner.right <= outer.right + s && inner.bottom <= outer.bottom + s
}

fn overlaps(a: &BBox, b: &BBox) -> bool {
    // Strict on every side: boxes sharing only an edge do not overlap.
    let x = a.left < b.right && b.left < a.right;
    let y = a.top < b.bottom && b.top < a.bottom;
    x && y
}

/// One satisfying assignment: the frame and, per query object in order of
/// first appearance, the 1-based detection index within that frame.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OracleMatch {
    pub frame: String,
    pub assignment: Vec<u32>,
}

/// Each slot's class, and per clause the (left, right) slot pair.
pub type Slots = (Vec<String>, Vec<(usize, usize)>);

/// Object slots of a query: aliased references share a slot, every
/// unaliased reference gets its own.
pub fn query_slots(ast: &QueryAst) -> Result<Slots, String> {
    let mut classes: Vec<String> = Vec::new();
    let mut aliases: Vec<(String, usize)> = Vec::new();
    let mut pairs = Vec::new();
    for clause in &ast.clauses {
        let mut slot_of = |class: &str, alias: &Option<String>| -> Result<usize, String> {
            if let Some(a) = alias {
                if let Some((_, s)) = aliases.iter().find(|(x, _)| x == a) {
                    if classes[*s] != class {
                        return Err(format!("alias {a} names both {} and {class}", classes[*s]));
                    }
                    return Ok(*s);
                }
                aliases.push((a.clone(), classes.len()));
            }
            classes.push(class.to_string());
            Ok(classes.len() - 1)
        };
        let l = slot_of(&clause.left.class, &clause.left.alias)?;
        let r = slot_of(&clause.right.class, &clause.right.alias)?;
        pairs.push((l, r));
    }
    Ok((classes, pairs))
}

/// Every assignment of detections to query objects, frame by frame, under
/// which all clauses hold. The two objects of a clause must be different
/// detections.
pub fn oracle_retrieve(ast: &QueryAst, scene: &Scene, params: &RelParams) -> Result<BTreeSet<OracleMatch>, String> {
    if ast.clauses.is_empty() {
        return Err("query has no clauses".into());
    }
    let (classes, pairs) = query_slots(ast)?;
    let mut out = BTreeSet::new();
    for (frame, dets) in scene.by_frame() {
        let mut chosen: Vec<&Detection> = Vec::with_capacity(classes.len());
        enumerate(&classes, &pairs, ast, &dets, params, &mut chosen, &mut |picked| {
            out.insert(OracleMatch { frame: frame.to_string(), assignment: picked.iter().map(|d| d.index).collect() });
        });
    }
    Ok(out)
}

fn enumerate<'d>(
    classes: &[String],
    pairs: &[(usize, usize)],
    ast: &QueryAst,
    dets: &[&'d Detection],
    params: &RelParams,
    chosen: &mut Vec<&'d Detection>,
    emit: &mut dyn FnMut(&[&'d Detection]),
) {
    let slot = chosen.len();
    if slot == classes.len() {
        emit(chosen);
        return;
    }
    for d in dets.iter().filter(|d| d.label == classes[slot]) {
        chosen.push(d);
        // Check every clause whose later slot is the one just filled.
        let ok = pairs.iter().zip(&ast.clauses).all(|(&(l, r), clause)| {
            if l.max(r) != slot {
                return true;
            }
            let (a, b) = (chosen[l], chosen[r]);
            !std::ptr::eq(a, b) && oracle_relation(clause.rel, &a.bbox, &b.bbox, params)
        });
        if ok {
            enumerate(classes, pairs, ast, dets, params, chosen, emit);
        }
        chosen.pop();
    }
}

/// Frame ids with at least one match.
pub fn oracle_frames(matches: &BTreeSet<OracleMatch>) -> BTreeSet<String> {
    matches.iter().map(|m| m.frame.clone()).collect()
}
