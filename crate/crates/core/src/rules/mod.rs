//! Spatial-relation rules over ingested bounding boxes.
//!
//! Each relation is one or more [`BindRule`]s. A rule binds two BBs of the
//! same frame together with the coordinates it needs and inserts
//!
//! ```text
//! EvaluationLink
//!   PredicateNode "<Relation>"
//!   ListLink
//!     <subject BB>
//!     <object BB>
//! ```
//!
//! for every pair that satisfies the geometry. Plain orderings (right of,
//! left of, above, below, intersects) are written as `GreaterThanLink`
//! clauses. Containment, "on" and the distinctness check are evaluatable
//! link types registered by [`evaluators`]; their thresholds travel inside
//! the clause as `NumberNode` arguments.

mod compile;
mod query;

pub use compile::{compile_query, CompiledQuery, FRAME_VAR};
pub use query::{parse_query, ClassRef, QueryAst, QueryClause, QueryError};

use std::fmt;
use std::str::FromStr;

use crate::atomstore::AtomStore;
use crate::ingest::{BOTTOM, INHERITANCE_LINK, LEFT, MEMBER_LINK, RIGHT, ROLE_NODE, TOP};
use crate::matcher::{
    BindRule, EvalArg, Evaluators, MatchError, Pattern, Term, EVALUATION_LINK, GREATER_THAN_LINK, PREDICATE_NODE,
};

pub const INSIDE_LINK: &str = "InsideLink";
pub const ON_LINK: &str = "OnLink";
pub const DISTINCT_LINK: &str = "DistinctLink";
pub const LIST_LINK: &str = "ListLink";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RelKind {
    RightOf,
    LeftOf,
    Above,
    Below,
    Inside,
    Contains,
    Intersects,
    On,
    With,
}

impl RelKind {
    pub const ALL: [RelKind; 9] = [
        RelKind::RightOf,
        RelKind::LeftOf,
        RelKind::Above,
        RelKind::Below,
        RelKind::Inside,
        RelKind::Contains,
        RelKind::Intersects,
        RelKind::On,
        RelKind::With,
    ];

    /// Query-language keyword.
    pub fn keyword(self) -> &'static str {
        match self {
            RelKind::RightOf => "RIGHT_OF",
            RelKind::LeftOf => "LEFT_OF",
            RelKind::Above => "ABOVE",
            RelKind::Below => "BELOW",
            RelKind::Inside => "INSIDE",
            RelKind::Contains => "CONTAINS",
            RelKind::Intersects => "INTERSECTS",
            RelKind::On => "ON",
            RelKind::With => "WITH",
        }
    }

    /// Name of the derived `PredicateNode`.
    pub fn predicate(self) -> &'static str {
        match self {
            RelKind::RightOf => "RightTo",
            RelKind::LeftOf => "LeftTo",
            RelKind::Above => "Above",
            RelKind::Below => "Below",
            RelKind::Inside => "Inside",
            RelKind::Contains => "Contains",
            RelKind::Intersects => "Intersects",
            RelKind::On => "On",
            RelKind::With => "With",
        }
    }

    pub fn from_predicate(name: &str) -> Option<RelKind> {
        RelKind::ALL.into_iter().find(|r| r.predicate() == name)
    }
}

impl fmt::Display for RelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

impl FromStr for RelKind {
    type Err = String;

    /// Case-insensitive keyword lookup.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RelKind::ALL
            .into_iter()
            .find(|r| r.keyword().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown relation {s:?}"))
    }
}

/// Thresholds for the relations that have no exact geometric reading.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelParams {
    /// Allowed vertical gap between the subject's bottom and the object's
    /// top for ON, as a fraction of the object's height.
    pub on_tau: f64,
    /// Minimum horizontal overlap for ON, as a fraction of the subject's width.
    pub on_overlap_min: f64,
    /// Pixels by which an INSIDE subject may stick out of the object.
    pub inside_slack: f64,
}

impl Default for RelParams {
    fn default() -> Self {
        RelParams { on_tau: 0.15, on_overlap_min: 0.5, inside_slack: 0.0 }
    }
}

impl RelParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.on_tau >= 0.0 && self.on_tau.is_finite()) {
            return Err(format!("on_tau must be >= 0, got {}", self.on_tau));
        }
        if !(self.on_overlap_min > 0.0 && self.on_overlap_min <= 1.0) {
            return Err(format!("on_overlap_min must be in (0, 1], got {}", self.on_overlap_min));
        }
        if !(self.inside_slack >= 0.0 && self.inside_slack.is_finite()) {
            return Err(format!("inside_slack must be >= 0, got {}", self.inside_slack));
        }
        Ok(())
    }
}

impl fmt::Display for RelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "on_tau={} on_overlap_min={} inside_slack={}",
            self.on_tau, self.on_overlap_min, self.inside_slack
        )
    }
}

// ---------------------------------------------------------------------------
// Geometry used by the registered evaluatables. Boxes are [left, top, right, bottom].

fn inside(a: [f64; 4], b: [f64; 4], slack: f64) -> bool {
    a[0] >= b[0] - slack && a[2] <= b[2] + slack && a[1] >= b[1] - slack && a[3] <= b[3] + slack
}

fn on_top(a: [f64; 4], b: [f64; 4], tau: f64, overlap_min: f64) -> bool {
    let overlap = (a[2].min(b[2]) - a[0].max(b[0])).max(0.0);
    overlap >= overlap_min * (a[2] - a[0]) && (a[3] - b[1]).abs() <= tau * (b[3] - b[1])
}

fn numbers<const N: usize>(args: &[EvalArg<'_>], store: &AtomStore) -> Result<[f64; N], MatchError> {
    let mut out = [0.0; N];
    for (slot, arg) in out.iter_mut().zip(args) {
        *slot = arg.number(store)?;
    }
    Ok(out)
}

fn eval_inside(args: &[EvalArg<'_>], store: &AtomStore) -> Result<bool, MatchError> {
    let v: [f64; 9] = numbers(args, store)?;
    Ok(inside([v[1], v[2], v[3], v[4]], [v[5], v[6], v[7], v[8]], v[0]))
}

fn eval_on(args: &[EvalArg<'_>], store: &AtomStore) -> Result<bool, MatchError> {
    let v: [f64; 10] = numbers(args, store)?;
    Ok(on_top([v[2], v[3], v[4], v[5]], [v[6], v[7], v[8], v[9]], v[0], v[1]))
}

fn eval_distinct(args: &[EvalArg<'_>], store: &AtomStore) -> Result<bool, MatchError> {
    Ok(!args[0].same_as(&args[1], store))
}

/// Matcher registry with `GreaterThanLink` plus the relation evaluatables.
pub fn evaluators() -> Evaluators {
    let mut ev = Evaluators::default();
    ev.register(INSIDE_LINK, 9, eval_inside);
    ev.register(ON_LINK, 10, eval_on);
    ev.register(DISTINCT_LINK, 2, eval_distinct);
    ev
}

// ---------------------------------------------------------------------------
// Rule construction

const SUBJECT: &str = "$BB1";
const OBJECT: &str = "$BB2";
const ROLES: [&str; 4] = [LEFT, TOP, RIGHT, BOTTOM];

/// `MemberLink(InheritanceLink($<role><n>, Node <role>), $BB<n>)`
fn coord_clause(role: &str, n: u8) -> Term {
    Term::link(
        MEMBER_LINK,
        vec![
            Term::link(INHERITANCE_LINK, vec![coord_var(role, n), Term::node(ROLE_NODE, role)]),
            Term::var(&format!("$BB{n}")),
        ],
    )
}

fn coord_var(role: &str, n: u8) -> Term {
    Term::var(&format!("${role}{n}"))
}

fn box_vars(n: u8) -> Vec<Term> {
    ROLES.iter().map(|r| coord_var(r, n)).collect()
}

fn greater(a: Term, b: Term) -> Term {
    Term::link(GREATER_THAN_LINK, vec![a, b])
}

/// `EvaluationLink(PredicateNode <pred>, ListLink(a, b))`
pub fn relation_fact(pred: &str, a: Term, b: Term) -> Term {
    Term::link(EVALUATION_LINK, vec![Term::node(PREDICATE_NODE, pred), Term::link(LIST_LINK, vec![a, b])])
}

/// Coordinate clauses for `roles` of both boxes, then same-frame membership,
/// then the tests.
fn pair_rule(name: &str, rel: RelKind, roles: &[(&str, u8)], distinct: bool, tests: Vec<Term>) -> BindRule {
    let mut clauses: Vec<Term> = roles.iter().map(|(r, n)| coord_clause(r, *n)).collect();
    clauses.push(Term::link(MEMBER_LINK, vec![Term::var(SUBJECT), Term::var(FRAME_VAR)]));
    clauses.push(Term::link(MEMBER_LINK, vec![Term::var(OBJECT), Term::var(FRAME_VAR)]));
    if distinct {
        clauses.push(Term::link(DISTINCT_LINK, vec![Term::var(SUBJECT), Term::var(OBJECT)]));
    }
    clauses.extend(tests);
    BindRule::new(name, Pattern::new(clauses), relation_fact(rel.predicate(), Term::var(SUBJECT), Term::var(OBJECT)))
        .expect("builtin rules are well-formed")
}

fn all_roles() -> Vec<(&'static str, u8)> {
    [1, 2].iter().flat_map(|n| ROLES.iter().map(move |r| (*r, *n))).collect()
}

fn inside_test(sub: u8, obj: u8, params: &RelParams) -> Term {
    let mut args = vec![Term::number(params.inside_slack)];
    args.extend(box_vars(sub));
    args.extend(box_vars(obj));
    Term::link(INSIDE_LINK, args)
}

fn intersects_tests() -> Vec<Term> {
    vec![
        greater(coord_var(RIGHT, 2), coord_var(LEFT, 1)),
        greater(coord_var(RIGHT, 1), coord_var(LEFT, 2)),
        greater(coord_var(BOTTOM, 2), coord_var(TOP, 1)),
        greater(coord_var(BOTTOM, 1), coord_var(TOP, 2)),
    ]
}

/// Rules deriving one relation. WITH has three, one per alternative.
pub fn rules_for(rel: RelKind, params: &RelParams) -> Vec<BindRule> {
    match rel {
        RelKind::RightOf => vec![pair_rule(
            "right_of",
            rel,
            &[(LEFT, 1), (RIGHT, 2)],
            false,
            vec![greater(coord_var(LEFT, 1), coord_var(RIGHT, 2))],
        )],
        RelKind::LeftOf => vec![pair_rule(
            "left_of",
            rel,
            &[(RIGHT, 1), (LEFT, 2)],
            false,
            vec![greater(coord_var(LEFT, 2), coord_var(RIGHT, 1))],
        )],
        RelKind::Above => vec![pair_rule(
            "above",
            rel,
            &[(BOTTOM, 1), (TOP, 2)],
            false,
            vec![greater(coord_var(TOP, 2), coord_var(BOTTOM, 1))],
        )],
        RelKind::Below => vec![pair_rule(
            "below",
            rel,
            &[(TOP, 1), (BOTTOM, 2)],
            false,
            vec![greater(coord_var(TOP, 1), coord_var(BOTTOM, 2))],
        )],
        RelKind::Inside => vec![pair_rule("inside", rel, &all_roles(), true, vec![inside_test(1, 2, params)])],
        RelKind::Contains => vec![pair_rule("contains", rel, &all_roles(), true, vec![inside_test(2, 1, params)])],
        RelKind::Intersects => vec![pair_rule("intersects", rel, &all_roles(), true, intersects_tests())],
        RelKind::On => {
            let mut args = vec![Term::number(params.on_tau), Term::number(params.on_overlap_min)];
            args.extend(box_vars(1));
            args.extend(box_vars(2));
            vec![pair_rule("on", rel, &all_roles(), true, vec![Term::link(ON_LINK, args)])]
        }
        RelKind::With => vec![
            pair_rule("with_intersects", rel, &all_roles(), true, intersects_tests()),
            pair_rule("with_inside", rel, &all_roles(), true, vec![inside_test(1, 2, params)]),
            pair_rule("with_contains", rel, &all_roles(), true, vec![inside_test(2, 1, params)]),
        ],
    }
}

/// The full rule library, in [`RelKind::ALL`] order.
pub fn builtin_rules(params: &RelParams) -> Vec<BindRule> {
    RelKind::ALL.iter().flat_map(|r| rules_for(*r, params)).collect()
}
