//! Template pattern matching and Bind-rule execution.
//!
//! A [`Pattern`] is a conjunction of template clauses. Templates are term
//! trees whose `VariableNode` leaves are variables. Clauses whose type is a
//! registered evaluatable (by default only `GreaterThanLink`) are computed
//! from the bound values; every other clause must exist in the store.
//!
//! The search backtracks over structural clauses, always expanding the
//! clause with the fewest candidate atoms under the current bindings.
//! Candidates come from the store's `(type, position, child)` index through
//! the most selective bound or constant child, falling back to the per-type
//! list. Evaluatable clauses run as soon as all their variables are bound.

use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::atomese::{is_node_type, Tree};
use crate::atomstore::{Atom, AtomId, AtomStore, StoreError, TypeSym, NUMBER_NODE};

pub const VARIABLE_NODE: &str = "VariableNode";
pub const VARIABLE_LIST: &str = "VariableList";
pub const AND_LINK: &str = "AndLink";
pub const BIND_LINK: &str = "BindLink";
pub const GREATER_THAN_LINK: &str = "GreaterThanLink";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatchError {
    #[error("ill-formed pattern: {0}")]
    IllFormed(String),
    #[error("not numeric: {0}")]
    NotNumeric(String),
    #[error("variable {0} is unbound")]
    Unbound(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Template term: a variable, a constant node, or a link over terms.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Node { atom_type: String, name: String },
    Link { atom_type: String, children: Vec<Term> },
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Var(name.to_string())
    }

    pub fn node(atom_type: &str, name: &str) -> Self {
        Term::Node { atom_type: atom_type.to_string(), name: name.to_string() }
    }

    pub fn link(atom_type: &str, children: Vec<Term>) -> Self {
        Term::Link { atom_type: atom_type.to_string(), children }
    }

    pub fn number(v: f64) -> Self {
        Term::node(NUMBER_NODE, &crate::atomstore::format_number(v))
    }

    pub fn atom_type(&self) -> &str {
        match self {
            Term::Var(_) => VARIABLE_NODE,
            Term::Node { atom_type, .. } | Term::Link { atom_type, .. } => atom_type,
        }
    }

    pub fn children(&self) -> &[Term] {
        match self {
            Term::Link { children, .. } => children,
            _ => &[],
        }
    }

    pub fn from_tree(tree: &Tree) -> Self {
        match &tree.name {
            Some(name) if tree.atom_type == VARIABLE_NODE => Term::Var(name.clone()),
            Some(name) => Term::node(&tree.atom_type, name),
            None => Term::link(&tree.atom_type, tree.children.iter().map(Term::from_tree).collect()),
        }
    }

    pub fn to_tree(&self) -> Tree {
        match self {
            Term::Var(name) => Tree::node(VARIABLE_NODE, name),
            Term::Node { atom_type, name } => Tree::node(atom_type, name),
            Term::Link { atom_type, children } => Tree::link(atom_type, children.iter().map(Term::to_tree).collect()),
        }
    }

    /// Reads a stored atom back as a template (`VariableNode`s become variables).
    pub fn from_atom(store: &AtomStore, id: AtomId) -> Self {
        match store.get(id).expect("atom handle from another store") {
            Atom::Node { atom_type, name } => {
                let ty = store.type_name(*atom_type);
                if ty == VARIABLE_NODE {
                    Term::var(name)
                } else {
                    Term::node(ty, name)
                }
            }
            Atom::Link { atom_type, outgoing } => Term::link(
                store.type_name(*atom_type),
                outgoing.iter().map(|c| Term::from_atom(store, *c)).collect(),
            ),
        }
    }

    /// Appends variables in first-appearance order, without repeats.
    pub fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::Node { .. } => {}
            Term::Link { children, .. } => children.iter().for_each(|c| c.collect_vars(out)),
        }
    }

    pub fn vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    /// Replaces bound variables with the constant terms of their atoms.
    pub fn substitute(&self, g: &Grounding, store: &AtomStore) -> Term {
        match self {
            Term::Var(v) => match g.get(v) {
                Some(id) => Term::from_atom(store, id),
                None => self.clone(),
            },
            Term::Node { .. } => self.clone(),
            Term::Link { atom_type, children } => {
                Term::link(atom_type, children.iter().map(|c| c.substitute(g, store)).collect())
            }
        }
    }

    /// Handle of the atom this ground term denotes, if present in the store.
    pub fn lookup(&self, store: &AtomStore) -> Option<AtomId> {
        match self {
            Term::Var(_) => None,
            Term::Node { atom_type, name } => store.find_node(atom_type, name),
            Term::Link { atom_type, children } => {
                let kids = children.iter().map(|c| c.lookup(store)).collect::<Option<Vec<_>>>()?;
                store.find_link(atom_type, &kids)
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Node { atom_type, name } => write!(f, "{atom_type} {}", crate::atomese::quote(name)),
            Term::Link { atom_type, children } => {
                write!(f, "{atom_type}(")?;
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Conjunction of template clauses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    clauses: Vec<Term>,
}

impl Pattern {
    pub fn new(clauses: Vec<Term>) -> Self {
        Pattern { clauses }
    }

    /// An `AndLink` contributes its children as clauses; anything else is a
    /// single clause.
    pub fn from_term(term: Term) -> Self {
        match term {
            Term::Link { atom_type, children } if atom_type == AND_LINK => Pattern { clauses: children },
            other => Pattern { clauses: vec![other] },
        }
    }

    pub fn from_tree(tree: &Tree) -> Self {
        Self::from_term(Term::from_tree(tree))
    }

    pub fn clauses(&self) -> &[Term] {
        &self.clauses
    }

    /// Variables in first-appearance order.
    pub fn variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        for c in &self.clauses {
            c.collect_vars(&mut out);
        }
        out
    }

    pub fn to_term(&self) -> Term {
        match self.clauses.as_slice() {
            [single] if single.atom_type() != AND_LINK => single.clone(),
            _ => Term::link(AND_LINK, self.clauses.clone()),
        }
    }

    pub fn to_tree(&self) -> Tree {
        self.to_term().to_tree()
    }
}

/// Assignment of atoms to every variable of a pattern.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Grounding(BTreeMap<String, AtomId>);

impl Grounding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, var: &str) -> Option<AtomId> {
        self.0.get(var).copied()
    }

    pub fn insert(&mut self, var: &str, id: AtomId) {
        self.0.insert(var.to_string(), id);
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, AtomId)> + '_ {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

impl FromIterator<(String, AtomId)> for Grounding {
    fn from_iter<I: IntoIterator<Item = (String, AtomId)>>(iter: I) -> Self {
        Grounding(iter.into_iter().collect())
    }
}

/// Argument of an evaluatable clause after variable resolution.
#[derive(Clone, Copy, Debug)]
pub enum EvalArg<'a> {
    Atom(AtomId),
    Const(&'a Term),
}

impl EvalArg<'_> {
    pub fn number(&self, store: &AtomStore) -> Result<f64, MatchError> {
        match self {
            EvalArg::Atom(id) => store.number_value(*id).ok_or_else(|| {
                MatchError::NotNumeric(format!("{}", Term::from_atom(store, *id)))
            }),
            EvalArg::Const(Term::Node { atom_type, name }) if atom_type == NUMBER_NODE => {
                name.trim().parse().map_err(|_| MatchError::NotNumeric(format!("{NUMBER_NODE} {name:?}")))
            }
            EvalArg::Const(t) => Err(MatchError::NotNumeric(t.to_string())),
        }
    }

    /// Structural identity of two arguments.
    pub fn same_as(&self, other: &EvalArg<'_>, store: &AtomStore) -> bool {
        match (self, other) {
            (EvalArg::Atom(a), EvalArg::Atom(b)) => a == b,
            (EvalArg::Atom(a), EvalArg::Const(t)) | (EvalArg::Const(t), EvalArg::Atom(a)) => t.lookup(store) == Some(*a),
            (EvalArg::Const(a), EvalArg::Const(b)) => a == b,
        }
    }
}

pub type EvalFn = fn(&[EvalArg<'_>], &AtomStore) -> Result<bool, MatchError>;

#[derive(Clone, Copy)]
pub struct Evaluator {
    pub arity: usize,
    pub eval: EvalFn,
}

/// Registry of evaluatable clause types.
#[derive(Clone)]
pub struct Evaluators {
    table: BTreeMap<String, Evaluator>,
}

impl Default for Evaluators {
    fn default() -> Self {
        let mut table = BTreeMap::new();
        table.insert(GREATER_THAN_LINK.to_string(), Evaluator { arity: 2, eval: greater_than });
        Evaluators { table }
    }
}

impl fmt::Debug for Evaluators {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.table.keys()).finish()
    }
}

impl Evaluators {
    pub fn register(&mut self, atom_type: &str, arity: usize, eval: EvalFn) {
        self.table.insert(atom_type.to_string(), Evaluator { arity, eval });
    }

    pub fn get(&self, atom_type: &str) -> Option<&Evaluator> {
        self.table.get(atom_type)
    }

    pub fn is_evaluatable(&self, atom_type: &str) -> bool {
        self.table.contains_key(atom_type)
    }
}

fn greater_than(args: &[EvalArg<'_>], store: &AtomStore) -> Result<bool, MatchError> {
    Ok(args[0].number(store)? > args[1].number(store)?)
}

/// Evaluates one evaluatable clause under a grounding.
pub fn eval_clause(clause: &Term, g: &Grounding, store: &AtomStore, evals: &Evaluators) -> Result<bool, MatchError> {
    let ev = evals
        .get(clause.atom_type())
        .ok_or_else(|| MatchError::IllFormed(format!("{} is not evaluatable", clause.atom_type())))?;
    let kids = clause.children();
    if kids.len() != ev.arity {
        return Err(MatchError::IllFormed(format!(
            "{} takes {} arguments, got {}",
            clause.atom_type(),
            ev.arity,
            kids.len()
        )));
    }
    let args = kids
        .iter()
        .map(|k| match k {
            Term::Var(v) => g.get(v).map(EvalArg::Atom).ok_or_else(|| MatchError::Unbound(v.clone())),
            t => Ok(EvalArg::Const(t)),
        })
        .collect::<Result<Vec<_>, _>>()?;
    (ev.eval)(&args, store)
}

// ---------------------------------------------------------------------------
// Search

#[derive(Debug)]
enum CTerm {
    Var(usize),
    Atom(AtomId),
    /// Ground, but absent from the store.
    Missing,
    Link { sym: TypeSym, kids: Vec<CTerm> },
}

enum Resolved {
    Atom(AtomId),
    Missing,
    Open,
}

enum CArg<'p> {
    Var(usize),
    Const(&'p Term),
}

struct CEval<'p> {
    eval: EvalFn,
    args: Vec<CArg<'p>>,
    vars: Vec<usize>,
}

struct Search<'s, 'p> {
    store: &'s AtomStore,
    clauses: Vec<CTerm>,
    evals: Vec<CEval<'p>>,
    binding: Vec<Option<AtomId>>,
    trail: Vec<usize>,
    /// Structural clauses mentioning each variable.
    var_clauses: Vec<Vec<usize>>,
    /// Cached candidate plans; cleared when a clause's variables change.
    estimates: Vec<Option<(usize, Plan)>>,
    args: Vec<EvalArg<'p>>,
    done: Vec<bool>,
    eval_done: Vec<bool>,
    eval_trail: Vec<usize>,
    out: Vec<Vec<AtomId>>,
}

/// Checks well-formedness and splits clauses into structural and evaluatable.
fn classify<'p>(pattern: &'p Pattern, evals: &Evaluators) -> Result<(Vec<&'p Term>, Vec<&'p Term>), MatchError> {
    if pattern.clauses.is_empty() {
        return Err(MatchError::IllFormed("empty pattern".into()));
    }
    let mut structural = Vec::new();
    let mut evaluatable = Vec::new();
    for clause in &pattern.clauses {
        check_types(clause)?;
        match clause {
            Term::Var(v) => return Err(MatchError::IllFormed(format!("bare variable {v} as a clause"))),
            Term::Link { atom_type, children } if evals.is_evaluatable(atom_type) => {
                let ev = evals.get(atom_type).expect("checked");
                if children.len() != ev.arity {
                    return Err(MatchError::IllFormed(format!(
                        "{atom_type} takes {} arguments, got {}",
                        ev.arity,
                        children.len()
                    )));
                }
                if let Some(bad) = children.iter().find(|c| matches!(c, Term::Link { .. })) {
                    return Err(MatchError::IllFormed(format!("nested link {bad} inside {atom_type}")));
                }
                evaluatable.push(clause);
            }
            _ => structural.push(clause),
        }
    }
    let mut bound = Vec::new();
    for c in &structural {
        c.collect_vars(&mut bound);
    }
    for c in &evaluatable {
        if let Some(v) = c.vars().into_iter().find(|v| !bound.contains(v)) {
            return Err(MatchError::IllFormed(format!("variable {v} occurs only in evaluatable clauses")));
        }
    }
    Ok((structural, evaluatable))
}

fn check_types(t: &Term) -> Result<(), MatchError> {
    match t {
        Term::Var(_) => Ok(()),
        Term::Node { atom_type, .. } => {
            if is_node_type(atom_type) {
                Ok(())
            } else {
                Err(MatchError::IllFormed(format!("node with link type {atom_type}")))
            }
        }
        Term::Link { atom_type, children } => {
            if atom_type == VARIABLE_NODE {
                return Err(MatchError::IllFormed("variable in link-type position".into()));
            }
            if children.is_empty() {
                return Err(MatchError::IllFormed(format!("{atom_type} has no children")));
            }
            children.iter().try_for_each(check_types)
        }
    }
}

fn compile_term(t: &Term, vars: &[String], store: &AtomStore) -> CTerm {
    match t {
        Term::Var(v) => CTerm::Var(vars.iter().position(|x| x == v).expect("collected")),
        Term::Node { atom_type, name } => store.find_node(atom_type, name).map_or(CTerm::Missing, CTerm::Atom),
        Term::Link { atom_type, children } => {
            let Some(sym) = store.type_sym(atom_type) else {
                return CTerm::Missing;
            };
            let kids: Vec<CTerm> = children.iter().map(|c| compile_term(c, vars, store)).collect();
            if kids.iter().any(|k| matches!(k, CTerm::Missing)) {
                return CTerm::Missing;
            }
            let ground: Option<Vec<AtomId>> =
                kids.iter().map(|k| if let CTerm::Atom(a) = k { Some(*a) } else { None }).collect();
            match ground {
                Some(out) => store.find_link_sym(sym, &out).map_or(CTerm::Missing, CTerm::Atom),
                None => CTerm::Link { sym, kids },
            }
        }
    }
}

impl<'s, 'p> Search<'s, 'p> {
    fn resolve(&self, t: &CTerm) -> Resolved {
        match t {
            CTerm::Var(i) => self.binding[*i].map_or(Resolved::Open, Resolved::Atom),
            CTerm::Atom(a) => Resolved::Atom(*a),
            CTerm::Missing => Resolved::Missing,
            CTerm::Link { sym, kids } => {
                // Most links are short; avoid allocating on this hot path.
                let mut small = [AtomId(0); 8];
                let mut big = Vec::new();
                let out: &mut [AtomId] = if kids.len() <= small.len() {
                    &mut small[..kids.len()]
                } else {
                    big.resize(kids.len(), AtomId(0));
                    &mut big
                };
                for (slot, k) in out.iter_mut().zip(kids) {
                    match self.resolve(k) {
                        Resolved::Atom(a) => *slot = a,
                        Resolved::Missing => return Resolved::Missing,
                        Resolved::Open => return Resolved::Open,
                    }
                }
                self.store.find_link_sym(*sym, out).map_or(Resolved::Missing, Resolved::Atom)
            }
        }
    }

    /// Cheapest candidate source for an open link term, with its estimated size.
    fn plan(&self, sym: TypeSym, kids: &[CTerm]) -> (usize, Plan) {
        let mut best = (self.store.atoms_of_sym(sym).len(), Plan::Type);
        for (i, k) in kids.iter().enumerate() {
            match self.resolve(k) {
                Resolved::Atom(a) => {
                    let n = self.store.links_at(sym, i, a).len();
                    if n < best.0 {
                        best = (n, Plan::Ground(i, a));
                    }
                }
                Resolved::Missing => return (0, Plan::Empty),
                Resolved::Open => {
                    if let CTerm::Link { .. } = k {
                        let n = self.estimate(k);
                        if n < best.0 {
                            best = (n, Plan::Nested(i));
                        }
                    }
                }
            }
        }
        best
    }

    fn estimate(&self, t: &CTerm) -> usize {
        match self.resolve(t) {
            Resolved::Atom(_) => 1,
            Resolved::Missing => 0,
            Resolved::Open => match t {
                CTerm::Link { sym, kids } => self.plan(*sym, kids).0,
                _ => usize::MAX,
            },
        }
    }

    fn top_plan(&self, t: &CTerm) -> (usize, Plan) {
        match self.resolve(t) {
            Resolved::Atom(a) => (1, Plan::Exact(a)),
            Resolved::Missing => (0, Plan::Empty),
            Resolved::Open => match t {
                CTerm::Link { sym, kids } => self.plan(*sym, kids),
                _ => unreachable!("open top-level variable"),
            },
        }
    }

    fn candidates(&self, t: &CTerm) -> Cow<'s, [AtomId]> {
        self.candidates_by(t, self.top_plan(t).1)
    }

    fn candidates_by(&self, t: &CTerm, plan: Plan) -> Cow<'s, [AtomId]> {
        let CTerm::Link { sym, kids } = t else {
            return match plan {
                Plan::Exact(a) => Cow::Owned(vec![a]),
                _ => Cow::Borrowed(&[]),
            };
        };
        match plan {
            Plan::Exact(a) => Cow::Owned(vec![a]),
            Plan::Empty => Cow::Borrowed(&[]),
            Plan::Type => Cow::Borrowed(self.store.atoms_of_sym(*sym)),
            Plan::Ground(i, a) => Cow::Borrowed(self.store.links_at(*sym, i, a)),
            Plan::Nested(i) => {
                let inner = self.candidates(&kids[i]);
                let mut out = Vec::new();
                for c in inner.iter() {
                    out.extend_from_slice(self.store.links_at(*sym, i, *c));
                }
                Cow::Owned(out)
            }
        }
    }

    fn unify(&mut self, t: &CTerm, atom: AtomId) -> bool {
        match t {
            CTerm::Var(i) => match self.binding[*i] {
                Some(b) => b == atom,
                None => {
                    self.binding[*i] = Some(atom);
                    self.trail.push(*i);
                    self.touch(*i);
                    true
                }
            },
            CTerm::Atom(a) => *a == atom,
            CTerm::Missing => false,
            CTerm::Link { sym, kids } => {
                let store = self.store;
                match store.get(atom) {
                    Some(Atom::Link { atom_type, outgoing }) if atom_type == sym && outgoing.len() == kids.len() => {
                        kids.iter().zip(outgoing.iter()).all(|(k, c)| self.unify(k, *c))
                    }
                    _ => false,
                }
            }
        }
    }

    fn touch(&mut self, var: usize) {
        for &c in &self.var_clauses[var] {
            self.estimates[c] = None;
        }
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let v = self.trail.pop().expect("non-empty");
            self.binding[v] = None;
            self.touch(v);
        }
    }

    /// Runs every evaluatable whose variables just became bound.
    fn check_evals(&mut self) -> bool {
        for (i, ev) in self.evals.iter().enumerate() {
            if self.eval_done[i] || ev.vars.iter().any(|v| self.binding[*v].is_none()) {
                continue;
            }
            self.eval_done[i] = true;
            self.eval_trail.push(i);
            let mut args = std::mem::take(&mut self.args);
            args.clear();
            args.extend(ev.args.iter().map(|a| match a {
                CArg::Var(v) => EvalArg::Atom(self.binding[*v].expect("bound")),
                CArg::Const(t) => EvalArg::Const(t),
            }));
            // A non-numeric binding makes the clause false, whatever order
            // the clauses are visited in.
            let ok = (ev.eval)(&args, self.store).unwrap_or(false);
            self.args = args;
            if !ok {
                return false;
            }
        }
        true
    }

    fn undo_evals(&mut self, mark: usize) {
        while self.eval_trail.len() > mark {
            let i = self.eval_trail.pop().expect("non-empty");
            self.eval_done[i] = false;
        }
    }

    fn solve(&mut self) {
        let mut pick = None;
        let mut best = usize::MAX;
        for i in 0..self.clauses.len() {
            if self.done[i] {
                continue;
            }
            let (n, plan) = match self.estimates[i] {
                Some(e) => e,
                None => {
                    let e = self.top_plan(&self.clauses[i]);
                    self.estimates[i] = Some(e);
                    e
                }
            };
            if pick.is_none() || n < best {
                pick = Some((i, plan));
                best = n;
            }
            if n <= 1 {
                break;
            }
        }
        let Some((ci, plan)) = pick else {
            self.out.push(self.binding.iter().map(|b| b.expect("all variables bound")).collect());
            return;
        };
        if best == 0 {
            return;
        }
        let clause = std::mem::replace(&mut self.clauses[ci], CTerm::Missing);
        let cands = self.candidates_by(&clause, plan);
        self.done[ci] = true;
        for cand in cands.iter() {
            let mark = self.trail.len();
            let emark = self.eval_trail.len();
            if self.unify(&clause, *cand) && self.check_evals() {
                self.solve();
            }
            self.undo_evals(emark);
            self.undo(mark);
        }
        self.done[ci] = false;
        self.clauses[ci] = clause;
    }
}

#[derive(Clone, Copy)]
enum Plan {
    Exact(AtomId),
    Empty,
    Type,
    Ground(usize, AtomId),
    Nested(usize),
}

/// All groundings of `pattern` against `store`.
pub fn match_pattern(
    pattern: &Pattern,
    store: &AtomStore,
    evals: &Evaluators,
) -> Result<BTreeSet<Grounding>, MatchError> {
    let (structural, evaluatable) = classify(pattern, evals)?;
    let vars = pattern.variables();
    let clauses: Vec<CTerm> = structural.iter().map(|t| compile_term(t, &vars, store)).collect();
    if clauses.iter().any(|c| matches!(c, CTerm::Missing)) {
        return Ok(BTreeSet::new());
    }
    let compiled_evals = evaluatable
        .iter()
        .map(|t| {
            let kids = t.children();
            let args: Vec<CArg> = kids
                .iter()
                .map(|k| match k {
                    Term::Var(v) => CArg::Var(vars.iter().position(|x| x == v).expect("collected")),
                    other => CArg::Const(other),
                })
                .collect();
            let mut vs: Vec<usize> = args.iter().filter_map(|a| if let CArg::Var(v) = a { Some(*v) } else { None }).collect();
            vs.dedup();
            CEval { eval: evals.get(t.atom_type()).expect("classified").eval, args, vars: vs }
        })
        .collect::<Vec<_>>();

    let n_clauses = clauses.len();
    let n_evals = compiled_evals.len();
    let mut var_clauses = vec![Vec::new(); vars.len()];
    for (i, t) in structural.iter().enumerate() {
        for v in t.vars() {
            var_clauses[vars.iter().position(|x| *x == v).expect("collected")].push(i);
        }
    }
    let mut search = Search {
        store,
        clauses,
        evals: compiled_evals,
        binding: vec![None; vars.len()],
        trail: Vec::new(),
        var_clauses,
        estimates: vec![None; n_clauses],
        args: Vec::new(),
        done: vec![false; n_clauses],
        eval_done: vec![false; n_evals],
        eval_trail: Vec::new(),
        out: Vec::new(),
    };
    // Evaluatables over constants only.
    if search.check_evals() {
        search.solve();
    }
    Ok(search
        .out
        .into_iter()
        .map(|row| vars.iter().cloned().zip(row).collect())
        .collect())
}

// ---------------------------------------------------------------------------
// Bind rules

/// Named rule: a pattern plus a resultant template instantiated per grounding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BindRule {
    pub name: String,
    pub variables: Vec<String>,
    pub pattern: Pattern,
    pub resultant: Term,
}

impl BindRule {
    pub fn new(name: &str, pattern: Pattern, resultant: Term) -> Result<Self, MatchError> {
        let variables = pattern.variables();
        Self::with_variables(name, variables, pattern, resultant)
    }

    /// Rule with an explicit variable declaration.
    pub fn with_variables(
        name: &str,
        variables: Vec<String>,
        pattern: Pattern,
        resultant: Term,
    ) -> Result<Self, MatchError> {
        let in_pattern = pattern.variables();
        if let Some(v) = resultant.vars().into_iter().find(|v| !in_pattern.contains(v)) {
            return Err(MatchError::IllFormed(format!("rule {name}: resultant variable {v} not in pattern")));
        }
        if let Some(v) = variables.iter().find(|v| !in_pattern.contains(v)) {
            return Err(MatchError::IllFormed(format!("rule {name}: declared variable {v} not in pattern")));
        }
        Ok(BindRule { name: name.to_string(), variables, pattern, resultant })
    }

    /// Reads `BindLink([VariableList], body, resultant)`.
    pub fn from_tree(name: &str, tree: &Tree) -> Result<Self, MatchError> {
        if tree.atom_type != BIND_LINK {
            return Err(MatchError::IllFormed(format!("expected {BIND_LINK}, found {}", tree.atom_type)));
        }
        let kids: Vec<Term> = tree.children.iter().map(Term::from_tree).collect();
        match kids.as_slice() {
            [decl, body, resultant] => {
                let variables = match decl {
                    Term::Var(v) => vec![v.clone()],
                    Term::Link { atom_type, children } if atom_type == VARIABLE_LIST => children
                        .iter()
                        .map(|c| match c {
                            Term::Var(v) => Ok(v.clone()),
                            other => Err(MatchError::IllFormed(format!("{other} in {VARIABLE_LIST}"))),
                        })
                        .collect::<Result<_, _>>()?,
                    other => return Err(MatchError::IllFormed(format!("bad variable declaration {other}"))),
                };
                Self::with_variables(name, variables, Pattern::from_term(body.clone()), resultant.clone())
            }
            [body, resultant] => Self::new(name, Pattern::from_term(body.clone()), resultant.clone()),
            _ => Err(MatchError::IllFormed(format!("{BIND_LINK} needs 2 or 3 children, found {}", kids.len()))),
        }
    }

    pub fn to_tree(&self) -> Tree {
        let mut kids = Vec::new();
        if !self.variables.is_empty() {
            kids.push(Tree::link(VARIABLE_LIST, self.variables.iter().map(|v| Tree::node(VARIABLE_NODE, v)).collect()));
        }
        kids.push(self.pattern.to_tree());
        kids.push(self.resultant.to_tree());
        Tree::link(BIND_LINK, kids)
    }

    /// Name of the predicate when the resultant is
    /// `EvaluationLink(PredicateNode <name>, ..)`.
    pub fn resultant_predicate(&self) -> Option<&str> {
        evaluation_predicate(&self.resultant)
    }
}

pub const EVALUATION_LINK: &str = "EvaluationLink";
pub const PREDICATE_NODE: &str = "PredicateNode";

/// Predicate name of an `EvaluationLink(PredicateNode <name>, ..)` term.
pub fn evaluation_predicate(t: &Term) -> Option<&str> {
    match t {
        Term::Link { atom_type, children } if atom_type == EVALUATION_LINK => match children.first() {
            Some(Term::Node { atom_type, name }) if atom_type == PREDICATE_NODE => Some(name),
            _ => None,
        },
        _ => None,
    }
}

/// Inserts `term` with variables replaced by their bindings.
pub fn instantiate(term: &Term, g: &Grounding, store: &mut AtomStore) -> Result<AtomId, MatchError> {
    match term {
        Term::Var(v) => g.get(v).ok_or_else(|| MatchError::Unbound(v.clone())),
        Term::Node { atom_type, name } => Ok(store.add_node(atom_type, name)),
        Term::Link { atom_type, children } => {
            let kids = children.iter().map(|c| instantiate(c, g, store)).collect::<Result<Vec<_>, _>>()?;
            Ok(store.add_link(atom_type, &kids)?)
        }
    }
}

/// Result of one rule execution.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BindOutcome {
    /// Instantiated resultants, deduplicated, in grounding order.
    pub roots: Vec<AtomId>,
    pub groundings: usize,
    pub atoms_added: usize,
}

pub fn execute_bind(rule: &BindRule, store: &mut AtomStore, evals: &Evaluators) -> Result<BindOutcome, MatchError> {
    let groundings = match_pattern(&rule.pattern, store, evals)?;
    let before = store.len();
    let mut roots = Vec::new();
    let mut seen = BTreeSet::new();
    for g in &groundings {
        let id = instantiate(&rule.resultant, g, store)?;
        if seen.insert(id) {
            roots.push(id);
        }
    }
    Ok(BindOutcome { roots, groundings: groundings.len(), atoms_added: store.len() - before })
}
