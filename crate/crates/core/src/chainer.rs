//! Forward and backward chaining over Bind rules.
//!
//! Rules are indexed by the predicate their resultant asserts
//! (`EvaluationLink(PredicateNode <name>, ..)`). Backward chaining looks at
//! the predicates a goal mentions, runs exactly the rules that produce them
//! (after the rules those rules depend on), then matches the goal.
//!
//! Derived facts stay in the store. A [`Chainer`] remembers the store size
//! at which each rule was last brought up to date and skips rules whose
//! inputs cannot have changed since. The store is append-only, so an
//! unchanged size means unchanged content.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::atomstore::AtomStore;
use crate::matcher::{
    evaluation_predicate, execute_bind, match_pattern, BindRule, Evaluators, Grounding, MatchError, Pattern, Term,
    EVALUATION_LINK,
};

pub const DEFAULT_MAX_PASSES: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error("no fixpoint after {0} forward passes")]
    FixpointLimit(usize),
    #[error("cyclic rule dependencies: {}", .0.join(" -> "))]
    CyclicRules(Vec<String>),
    #[error(transparent)]
    Match(#[from] MatchError),
}

/// One rule application.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogEntry {
    pub rule: String,
    pub groundings: usize,
    pub atoms_added: usize,
    /// The rule was already up to date and did not run.
    pub cached: bool,
}

impl fmt::Display for LogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.cached {
            write!(f, "rule {}: up to date", self.rule)
        } else {
            write!(f, "rule {}: {} groundings, {} atoms added", self.rule, self.groundings, self.atoms_added)
        }
    }
}

/// Predicates a pattern reads. `any` is set when some `EvaluationLink`
/// has a non-constant predicate.
#[derive(Debug, Default)]
struct Reads {
    names: BTreeSet<String>,
    any: bool,
}

fn collect_reads(t: &Term, out: &mut Reads) {
    if t.atom_type() == EVALUATION_LINK {
        match evaluation_predicate(t) {
            Some(p) => {
                out.names.insert(p.to_string());
            }
            None => out.any = true,
        }
    }
    for c in t.children() {
        collect_reads(c, out);
    }
}

fn pattern_reads(p: &Pattern) -> Reads {
    let mut r = Reads::default();
    for c in p.clauses() {
        collect_reads(c, &mut r);
    }
    r
}

fn collect_types<'t>(t: &'t Term, out: &mut BTreeSet<&'t str>) {
    if let Term::Link { atom_type, children } = t {
        out.insert(atom_type);
        children.iter().for_each(|c| collect_types(c, out));
    }
}

/// Whether every derived atom this rule's pattern can observe is reached
/// through a named `EvaluationLink`. Only such rules are cached.
fn cacheable(rule: &BindRule, produced: &BTreeSet<&str>) -> bool {
    fn visit(t: &Term, produced: &BTreeSet<&str>) -> bool {
        if evaluation_predicate(t).is_some() {
            return true;
        }
        match t {
            Term::Link { atom_type, children } => {
                !produced.contains(atom_type.as_str()) && children.iter().all(|c| visit(c, produced))
            }
            _ => true,
        }
    }
    rule.pattern.clauses().iter().all(|c| visit(c, produced))
}

#[derive(Debug)]
pub struct Chainer {
    pub max_passes: usize,
    log: Vec<LogEntry>,
    /// Rule name -> store size at which the rule was last known complete.
    fresh_at: HashMap<String, usize>,
}

impl Default for Chainer {
    fn default() -> Self {
        Chainer { max_passes: DEFAULT_MAX_PASSES, log: Vec::new(), fresh_at: HashMap::new() }
    }
}

impl Chainer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    pub fn take_log(&mut self) -> Vec<LogEntry> {
        std::mem::take(&mut self.log)
    }

    /// Forgets which rules are up to date.
    pub fn invalidate(&mut self) {
        self.fresh_at.clear();
    }

    fn is_fresh(&self, key: &str, store: &AtomStore) -> bool {
        self.fresh_at.get(key) == Some(&store.len())
    }

    fn run(&mut self, rule: &BindRule, store: &mut AtomStore, evals: &Evaluators) -> Result<usize, ChainError> {
        self.run_keyed(&rule.name, rule, store, evals)
    }

    /// Runs `rule` unless it, or the unrestricted rule of the same name, is
    /// up to date under `key`.
    fn run_keyed(
        &mut self,
        key: &str,
        rule: &BindRule,
        store: &mut AtomStore,
        evals: &Evaluators,
    ) -> Result<usize, ChainError> {
        if self.is_fresh(&rule.name, store) || self.is_fresh(key, store) {
            self.log.push(LogEntry { rule: rule.name.clone(), groundings: 0, atoms_added: 0, cached: true });
            return Ok(0);
        }
        let out = execute_bind(rule, store, evals)?;
        self.log.push(LogEntry {
            rule: rule.name.clone(),
            groundings: out.groundings,
            atoms_added: out.atoms_added,
            cached: false,
        });
        Ok(out.atoms_added)
    }

    fn mark_fresh<'r>(&mut self, rules: impl IntoIterator<Item = (String, &'r BindRule)>, all: &[BindRule], store: &AtomStore) {
        let mut produced = BTreeSet::new();
        for r in all {
            collect_types(&r.resultant, &mut produced);
        }
        for (key, r) in rules {
            if cacheable(r, &produced) {
                self.fresh_at.insert(key, store.len());
            } else {
                self.fresh_at.remove(&key);
            }
        }
    }

    /// Applies every rule until a full pass adds nothing. Returns the number
    /// of atoms added.
    pub fn forward_chain(
        &mut self,
        rules: &[BindRule],
        store: &mut AtomStore,
        evals: &Evaluators,
    ) -> Result<usize, ChainError> {
        let mut total = 0;
        for _ in 0..self.max_passes {
            let mut added = 0;
            for rule in rules {
                added += self.run(rule, store, evals)?;
            }
            total += added;
            if added == 0 {
                self.mark_fresh(rules.iter().map(|r| (r.name.clone(), r)), rules, store);
                return Ok(total);
            }
        }
        Err(ChainError::FixpointLimit(self.max_passes))
    }

    /// Rules needed to answer `goal`, dependencies first.
    pub fn plan<'r>(&self, goal: &Pattern, rules: &'r [BindRule]) -> Result<Vec<&'r BindRule>, ChainError> {
        let mut producers: BTreeMap<&str, Vec<&BindRule>> = BTreeMap::new();
        for r in rules {
            if let Some(p) = r.resultant_predicate() {
                producers.entry(p).or_default().push(r);
            }
        }
        let all_preds: Vec<String> = producers.keys().map(|s| s.to_string()).collect();
        let expand = |reads: Reads| -> Vec<String> {
            if reads.any {
                all_preds.clone()
            } else {
                reads.names.into_iter().collect()
            }
        };

        #[derive(Clone, Copy, PartialEq)]
        enum State {
            Active,
            Done,
        }
        let mut state: HashMap<String, State> = HashMap::new();
        let mut order: Vec<&BindRule> = Vec::new();
        let mut path: Vec<String> = Vec::new();

        fn visit<'r>(
            pred: &str,
            producers: &BTreeMap<&str, Vec<&'r BindRule>>,
            expand: &dyn Fn(Reads) -> Vec<String>,
            state: &mut HashMap<String, State>,
            path: &mut Vec<String>,
            order: &mut Vec<&'r BindRule>,
        ) -> Result<(), ChainError> {
            match state.get(pred) {
                Some(State::Done) => return Ok(()),
                Some(State::Active) => {
                    let start = path.iter().position(|p| p == pred).unwrap_or(0);
                    let mut cycle = path[start..].to_vec();
                    cycle.push(pred.to_string());
                    return Err(ChainError::CyclicRules(cycle));
                }
                None => {}
            }
            let Some(rs) = producers.get(pred) else {
                // Asserted directly in the store, if at all.
                state.insert(pred.to_string(), State::Done);
                return Ok(());
            };
            state.insert(pred.to_string(), State::Active);
            path.push(pred.to_string());
            for r in rs {
                for dep in expand(pattern_reads(&r.pattern)) {
                    visit(&dep, producers, expand, state, path, order)?;
                }
            }
            path.pop();
            state.insert(pred.to_string(), State::Done);
            order.extend(rs.iter().copied());
            Ok(())
        }

        for pred in expand(pattern_reads(goal)) {
            visit(&pred, &producers, &expand, &mut state, &mut path, &mut order)?;
        }
        Ok(order)
    }

    /// Runs the rules `goal` depends on, then matches it.
    ///
    /// A rule whose predicate only the goal reads is run once per goal
    /// clause it can produce, restricted by the goal's constraints on that
    /// clause's arguments; rules feeding other rules run in full.
    pub fn backward_chain(
        &mut self,
        goal: &Pattern,
        rules: &[BindRule],
        store: &mut AtomStore,
        evals: &Evaluators,
    ) -> Result<BTreeSet<Grounding>, ChainError> {
        let plan = self.plan(goal, rules)?;
        let mut produced = BTreeSet::new();
        for r in rules {
            collect_types(&r.resultant, &mut produced);
        }
        let mut feeds = Reads::default();
        for r in &plan {
            for c in r.pattern.clauses() {
                collect_reads(c, &mut feeds);
            }
        }
        let mut done: Vec<(String, BindRule)> = Vec::new();
        for rule in plan {
            let pred = rule.resultant_predicate();
            let only_goal = !feeds.any && pred.is_some_and(|p| !feeds.names.contains(p));
            let sites: Vec<&Term> = goal.clauses().iter().filter(|c| pred.is_some() && evaluation_predicate(c) == pred).collect();
            let restricted: Option<Vec<(String, BindRule)>> = if only_goal && !sites.is_empty() {
                sites.iter().map(|site| restrict(rule, site, goal, &produced)).collect()
            } else {
                None
            };
            let runs = restricted.unwrap_or_else(|| vec![(rule.name.clone(), rule.clone())]);
            for (key, r) in runs {
                self.run_keyed(&key, &r, store, evals)?;
                done.push((key, r));
            }
        }
        self.mark_fresh(done.iter().map(|(k, r)| (k.clone(), r)), rules, store);
        Ok(match_pattern(goal, store, evals)?)
    }
}

/// `rule` narrowed to the groundings that can contribute to `site`, a goal
/// clause its resultant produces: every goal clause that constrains only
/// `site`'s variables and reads no derived atoms is added to the rule's
/// pattern, renamed into the rule's variables. Returns the cache key with
/// the rule; `None` if the resultant does not line up with `site`.
fn restrict(rule: &BindRule, site: &Term, goal: &Pattern, produced: &BTreeSet<&str>) -> Option<(String, BindRule)> {
    fn align(r: &Term, g: &Term, map: &mut BTreeMap<String, String>) -> bool {
        match (r, g) {
            (Term::Var(rv), Term::Var(gv)) => match map.get(gv) {
                Some(prev) => prev == rv,
                None => {
                    map.insert(gv.clone(), rv.clone());
                    true
                }
            },
            (Term::Link { atom_type: a, children: ac }, Term::Link { atom_type: b, children: bc }) => {
                a == b && ac.len() == bc.len() && ac.iter().zip(bc).all(|(x, y)| align(x, y, map))
            }
            (Term::Node { .. }, Term::Node { .. }) => r == g,
            _ => false,
        }
    }
    fn reads_derived(t: &Term, produced: &BTreeSet<&str>) -> bool {
        match t {
            Term::Link { atom_type, children } => {
                atom_type == EVALUATION_LINK
                    || produced.contains(atom_type.as_str())
                    || children.iter().any(|c| reads_derived(c, produced))
            }
            _ => false,
        }
    }
    fn rename(t: &Term, map: &BTreeMap<String, String>) -> Term {
        match t {
            Term::Var(v) => Term::Var(map[v].clone()),
            Term::Link { atom_type, children } => {
                Term::Link { atom_type: atom_type.clone(), children: children.iter().map(|c| rename(c, map)).collect() }
            }
            node => node.clone(),
        }
    }

    let mut map = BTreeMap::new();
    if !align(&rule.resultant, site, &mut map) {
        return None;
    }
    // Two goal variables on one rule variable would need an equality the
    // pattern cannot express.
    let targets: BTreeSet<&String> = map.values().collect();
    if targets.len() != map.len() {
        return None;
    }
    let mut clauses = rule.pattern.clauses().to_vec();
    let mut extra = Vec::new();
    for c in goal.clauses() {
        let vars = c.vars();
        if c == site || vars.is_empty() || !vars.iter().all(|v| map.contains_key(v)) || reads_derived(c, produced) {
            continue;
        }
        let t = rename(c, &map);
        if !clauses.contains(&t) {
            extra.push(t.to_string());
            clauses.push(t);
        }
    }
    if extra.is_empty() {
        return Some((rule.name.clone(), rule.clone()));
    }
    let key = format!("{} | {}", rule.name, extra.join(" | "));
    let narrowed = BindRule {
        name: rule.name.clone(),
        variables: rule.variables.clone(),
        pattern: Pattern::new(clauses),
        resultant: rule.resultant.clone(),
    };
    Some((key, narrowed))
}
