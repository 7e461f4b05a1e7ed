//! One retrieval session: a store, the rule library for a parameter set,
//! and a chainer whose derived facts persist between queries.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::atomstore::AtomStore;
use crate::chainer::{ChainError, Chainer, LogEntry};
use crate::ingest::{build_graph, compare_frames, decode_bb, frame_id_of, Detection, Scene};
use crate::matcher::{BindRule, Evaluators, Grounding, Pattern};
use crate::rules::{builtin_rules, compile_query, evaluators, parse_query, QueryAst, QueryError, RelParams, FRAME_VAR};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

/// A query variable and the detection it is bound to.
#[derive(Clone, Debug, PartialEq)]
pub struct Binding {
    pub var: String,
    pub detection: Detection,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameResult {
    pub frame: String,
    /// One entry per grounding, each listing its objects in query order.
    pub groundings: Vec<Vec<Binding>>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct QueryResult {
    pub object_vars: Vec<String>,
    pub frames: Vec<FrameResult>,
    /// Chainer activity for this query.
    pub log: Vec<LogEntry>,
}

impl QueryResult {
    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame_ids(&self) -> Vec<&str> {
        self.frames.iter().map(|f| f.frame.as_str()).collect()
    }

    pub fn grounding_count(&self) -> usize {
        self.frames.iter().map(|f| f.groundings.len()).sum()
    }

    /// `(frame, detection indices in query-object order)` per grounding.
    pub fn assignments(&self) -> BTreeSet<(String, Vec<u32>)> {
        self.frames
            .iter()
            .flat_map(|f| f.groundings.iter().map(|g| (f.frame.clone(), g.iter().map(|b| b.detection.index).collect())))
            .collect()
    }
}

pub struct Engine {
    store: AtomStore,
    params: RelParams,
    rules: Vec<BindRule>,
    evals: Evaluators,
    chainer: Chainer,
}

impl Engine {
    pub fn new(params: RelParams) -> Result<Self, EngineError> {
        Self::with_store(AtomStore::new(), params)
    }

    pub fn with_store(store: AtomStore, params: RelParams) -> Result<Self, EngineError> {
        params.validate().map_err(EngineError::Params)?;
        Ok(Engine { store, rules: builtin_rules(&params), params, evals: evaluators(), chainer: Chainer::new() })
    }

    pub fn from_scene(scene: &Scene, params: RelParams) -> Result<Self, EngineError> {
        let mut e = Self::new(params)?;
        e.ingest(scene);
        Ok(e)
    }

    /// Adds a scene's detections; returns the number of new atoms.
    pub fn ingest(&mut self, scene: &Scene) -> usize {
        build_graph(scene, &mut self.store)
    }

    pub fn store(&self) -> &AtomStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut AtomStore {
        &mut self.store
    }

    pub fn into_store(self) -> AtomStore {
        self.store
    }

    pub fn params(&self) -> &RelParams {
        &self.params
    }

    /// Switches parameters. Facts derived under the old values stay in the
    /// store, so a session that changes thresholds should start from a fresh
    /// store if it needs exact answers.
    pub fn set_params(&mut self, params: RelParams) -> Result<(), EngineError> {
        params.validate().map_err(EngineError::Params)?;
        self.rules = builtin_rules(&params);
        self.params = params;
        self.chainer.invalidate();
        Ok(())
    }

    pub fn rules(&self) -> &[BindRule] {
        &self.rules
    }

    pub fn evaluators(&self) -> &Evaluators {
        &self.evals
    }

    pub fn query_text(&mut self, text: &str) -> Result<QueryResult, EngineError> {
        self.query(&parse_query(text)?)
    }

    pub fn query(&mut self, ast: &QueryAst) -> Result<QueryResult, EngineError> {
        let compiled = compile_query(ast, &self.params)?;
        let groundings = self.chainer.backward_chain(&compiled.goal, &self.rules, &mut self.store, &self.evals)?;
        let log = self.chainer.take_log();
        Ok(QueryResult { log, ..collect_results(&self.store, &groundings, &compiled.object_vars) })
    }

    /// Backward-chains an arbitrary goal. Object variables are the goal's
    /// variables that are bound to a BB in every grounding.
    pub fn query_pattern(&mut self, goal: &Pattern) -> Result<QueryResult, EngineError> {
        let groundings = self.chainer.backward_chain(goal, &self.rules, &mut self.store, &self.evals)?;
        let log = self.chainer.take_log();
        let vars: Vec<String> = goal
            .variables()
            .into_iter()
            .filter(|v| v != FRAME_VAR && groundings.iter().all(|g| g.get(v).is_some_and(|id| decode_bb(&self.store, id).is_some())))
            .collect();
        Ok(QueryResult { log, ..collect_results(&self.store, &groundings, &vars) })
    }

    /// Runs every rule to fixpoint; returns the number of atoms added.
    pub fn forward_all(&mut self) -> Result<usize, EngineError> {
        let n = self.chainer.forward_chain(&self.rules, &mut self.store, &self.evals)?;
        Ok(n)
    }

    pub fn take_log(&mut self) -> Vec<LogEntry> {
        self.chainer.take_log()
    }
}

/// Groups groundings by frame. Frames come out in numeric-aware order and
/// groundings within a frame by their BB names.
pub fn collect_results(store: &AtomStore, groundings: &BTreeSet<Grounding>, object_vars: &[String]) -> QueryResult {
    let mut by_frame: BTreeMap<String, Vec<Vec<Binding>>> = BTreeMap::new();
    for g in groundings {
        let bindings: Vec<Binding> = object_vars
            .iter()
            .filter_map(|v| {
                let detection = decode_bb(store, g.get(v)?)?;
                Some(Binding { var: v.clone(), detection })
            })
            .collect();
        let frame = g
            .get(FRAME_VAR)
            .and_then(|f| frame_id_of(store, f))
            .map(str::to_string)
            .or_else(|| bindings.first().map(|b| b.detection.frame_id.clone()))
            .unwrap_or_default();
        by_frame.entry(frame).or_default().push(bindings);
    }
    let mut frames: Vec<FrameResult> = by_frame
        .into_iter()
        .map(|(frame, mut groundings)| {
            groundings.sort_by_cached_key(|g| g.iter().map(|b| b.detection.index).collect::<Vec<_>>());
            FrameResult { frame, groundings }
        })
        .collect();
    frames.sort_by(|a, b| compare_frames(&a.frame, &b.frame));
    QueryResult { object_vars: object_vars.to_vec(), frames, log: Vec::new() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_detections_str;

    const SCENE: &str = r#"{"frame":"10","detections":[{"label":"person","conf":0.9,"box":[80,40,150,110]},{"label":"car","conf":0.8,"box":[60,20,200,120]}]}
{"frame":"2","detections":[{"label":"person","conf":0.9,"box":[80,40,150,110]},{"label":"car","conf":0.8,"box":[60,20,200,120]},{"label":"person","conf":0.5,"box":[70,30,90,60]}]}
{"frame":"3","detections":[{"label":"person","conf":0.9,"box":[10,20,50,100]},{"label":"car","conf":0.8,"box":[60,20,200,120]}]}"#;

    fn engine() -> Engine {
        Engine::from_scene(&parse_detections_str(SCENE).unwrap(), RelParams::default()).unwrap()
    }

    #[test]
    fn frames_sorted_numerically() {
        let mut e = engine();
        let r = e.query_text("FIND FRAMES WHERE person INSIDE car").unwrap();
        assert_eq!(r.frame_ids(), ["2", "10"]);
        assert_eq!(r.frames[0].groundings.len(), 2);
        let firsts: Vec<u32> = r.frames[0].groundings.iter().map(|g| g[0].detection.index).collect();
        assert_eq!(firsts, [1, 3]);
        assert_eq!(r.object_vars, ["$a", "$b"]);
        assert_eq!(r.frames[1].groundings[0][1].detection.label, "car");
    }

    #[test]
    fn assignments_and_log() {
        let mut e = engine();
        let r = e.query_text("FIND FRAMES WHERE person LEFT_OF car").unwrap();
        assert_eq!(r.assignments(), BTreeSet::from([("3".to_string(), vec![1, 2])]));
        assert_eq!(r.log.iter().map(|l| l.rule.as_str()).collect::<Vec<_>>(), ["left_of"]);
        // Nothing changed since, so the rule is not re-run.
        let again = e.query_text("FIND FRAMES WHERE person LEFT_OF car").unwrap();
        assert!(again.log.iter().all(|l| l.cached));
        assert_eq!(again.frames, r.frames);
    }

    #[test]
    fn pattern_query_finds_object_vars() {
        let mut e = engine();
        let compiled = compile_query(&parse_query("FIND FRAMES WHERE person INSIDE car").unwrap(), e.params()).unwrap();
        let r = e.query_pattern(&compiled.goal).unwrap();
        assert_eq!(r.object_vars, ["$a", "$b"]);
        assert_eq!(r.frame_ids(), ["2", "10"]);
    }

    #[test]
    fn bad_params_rejected() {
        assert!(matches!(
            Engine::new(RelParams { on_overlap_min: 2.0, ..Default::default() }),
            Err(EngineError::Params(_))
        ));
    }
}
