//! Detector output to graph.
//!
//! Input is JSON Lines, one frame per line:
//!
//! ```text
//! {"frame": "1", "detections": [{"label": "person", "conf": 0.9, "box": [10, 20, 50, 100]}]}
//! ```
//!
//! Each detection becomes a `ConceptNode "BB#<frame>-<k>"` (k counts from 1
//! within a frame) wired up as:
//!
//! ```text
//! MemberLink(BB, ConceptNode "Frame#<frame>")
//! InheritanceLink(BB, ConceptNode <label>)
//! MemberLink(InheritanceLink(NumberNode <v>, Node <role>), BB)   role in Left/Right/Top/Bottom/Confidence
//! ```

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use serde_json::Value;
use thiserror::Error;

use crate::atomstore::{AtomId, AtomStore};

pub const MEMBER_LINK: &str = "MemberLink";
pub const INHERITANCE_LINK: &str = "InheritanceLink";
pub const CONCEPT_NODE: &str = "ConceptNode";
pub const ROLE_NODE: &str = "Node";

pub const LEFT: &str = "Left";
pub const RIGHT: &str = "Right";
pub const TOP: &str = "Top";
pub const BOTTOM: &str = "Bottom";
pub const CONFIDENCE: &str = "Confidence";

/// Box roles in the order `[left, top, right, bottom]` used by detection files.
pub const BOX_ROLES: [&str; 4] = [LEFT, TOP, RIGHT, BOTTOM];

/// Axis-aligned pixel rectangle; x grows rightward, y grows downward.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BBox {
    pub left: f64,
    pub top: f64,
    pub right: f64,
    pub bottom: f64,
}

impl BBox {
    /// Builds a box, rejecting non-finite coordinates and zero or negative area.
    pub fn new(left: f64, top: f64, right: f64, bottom: f64) -> Option<Self> {
        let all_finite = [left, top, right, bottom].iter().all(|v| v.is_finite());
        (all_finite && left < right && top < bottom).then_some(BBox { left, top, right, bottom })
    }

    pub fn width(&self) -> f64 {
        self.right - self.left
    }

    pub fn height(&self) -> f64 {
        self.bottom - self.top
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.left, self.top, self.right, self.bottom]
    }

    fn role_values(&self) -> [f64; 4] {
        self.as_array()
    }
}

impl fmt::Display for BBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}, {}, {}]", self.left, self.top, self.right, self.bottom)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Detection {
    pub frame_id: String,
    /// 1-based position within the frame.
    pub index: u32,
    pub label: String,
    pub confidence: f64,
    pub bbox: BBox,
}

impl Detection {
    pub fn bb_name(&self) -> String {
        bb_node_name(&self.frame_id, self.index)
    }
}

pub fn bb_node_name(frame_id: &str, index: u32) -> String {
    format!("BB#{frame_id}-{index}")
}

pub fn frame_node_name(frame_id: &str) -> String {
    format!("Frame#{frame_id}")
}

/// Detections grouped by frame. Frames with no detections are kept so
/// that their frame node still exists after ingest.
#[derive(Clone, Debug, Default)]
pub struct Scene {
    /// Frame ids in order of first appearance.
    pub frames: Vec<String>,
    pub detections: Vec<Detection>,
    /// Highest index handed out per frame by `push_frame`.
    last_index: HashMap<String, u32>,
}

impl PartialEq for Scene {
    fn eq(&self, other: &Self) -> bool {
        self.frames == other.frames && self.detections == other.detections
    }
}

impl Scene {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a frame's detections, numbering them after any detections the
    /// frame already has.
    pub fn push_frame<I>(&mut self, frame_id: &str, dets: I)
    where
        I: IntoIterator<Item = (String, f64, BBox)>,
    {
        let next = match self.last_index.get_mut(frame_id) {
            Some(n) => n,
            None => {
                self.frames.push(frame_id.to_string());
                self.last_index.entry(frame_id.to_string()).or_insert(0)
            }
        };
        for (label, confidence, bbox) in dets {
            *next += 1;
            self.detections.push(Detection { frame_id: frame_id.to_string(), index: *next, label, confidence, bbox });
        }
    }

    /// Drops detections below `min_conf`. Remaining detections keep their
    /// original per-frame index so BB names are stable across thresholds.
    pub fn filter_min_conf(&self, min_conf: f64) -> Scene {
        Scene {
            frames: self.frames.clone(),
            detections: self.detections.iter().filter(|d| d.confidence >= min_conf).cloned().collect(),
            last_index: self.last_index.clone(),
        }
    }

    pub fn by_frame(&self) -> BTreeMap<&str, Vec<&Detection>> {
        let mut out: BTreeMap<&str, Vec<&Detection>> = self.frames.iter().map(|f| (f.as_str(), Vec::new())).collect();
        for d in &self.detections {
            out.entry(d.frame_id.as_str()).or_default().push(d);
        }
        out
    }

    /// JSON Lines rendering accepted by [`parse_detections_str`].
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for (frame, dets) in self.by_frame_in_order() {
            let dets: Vec<Value> = dets
                .iter()
                .map(|d| {
                    serde_json::json!({
                        "label": d.label,
                        "conf": d.confidence,
                        "box": d.bbox.as_array(),
                    })
                })
                .collect();
            out.push_str(&serde_json::json!({ "frame": frame, "detections": dets }).to_string());
            out.push('\n');
        }
        out
    }

    fn by_frame_in_order(&self) -> Vec<(&str, Vec<&Detection>)> {
        let mut grouped = self.by_frame();
        self.frames.iter().map(|f| (f.as_str(), grouped.remove(f.as_str()).unwrap_or_default())).collect()
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("line {line}: degenerate box {bbox:?}")]
    Geometry { line: usize, bbox: [f64; 4] },
    #[error("line {line}: confidence {value} outside [0, 1]")]
    Range { line: usize, value: f64 },
}

pub fn parse_detections(path: impl AsRef<Path>) -> Result<Scene, IngestError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| IngestError::Io { path: path.display().to_string(), source })?;
    parse_detections_str(&text)
}

pub fn parse_detections_str(text: &str) -> Result<Scene, IngestError> {
    let mut scene = Scene::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let format = |msg: String| IngestError::Format { line, msg };
        let value: Value = serde_json::from_str(raw).map_err(|e| format(e.to_string()))?;
        let frame = match value.get("frame") {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Number(n)) if n.is_i64() || n.is_u64() => n.to_string(),
            Some(other) => return Err(format(format!("frame must be a string or integer, got {other}"))),
            None => return Err(format("missing \"frame\"".into())),
        };
        let dets = value
            .get("detections")
            .and_then(Value::as_array)
            .ok_or_else(|| format("missing \"detections\" array".into()))?;
        let mut parsed = Vec::with_capacity(dets.len());
        for (j, det) in dets.iter().enumerate() {
            let label = det
                .get("label")
                .and_then(Value::as_str)
                .filter(|l| !l.is_empty())
                .ok_or_else(|| format(format!("detection {j}: missing or empty \"label\"")))?;
            let conf = det
                .get("conf")
                .and_then(Value::as_f64)
                .ok_or_else(|| format(format!("detection {j}: missing numeric \"conf\"")))?;
            if !(0.0..=1.0).contains(&conf) {
                return Err(IngestError::Range { line, value: conf });
            }
            let coords: Vec<f64> = det
                .get("box")
                .and_then(Value::as_array)
                .filter(|a| a.len() == 4)
                .and_then(|a| a.iter().map(Value::as_f64).collect())
                .ok_or_else(|| format(format!("detection {j}: \"box\" must be 4 numbers")))?;
            let bbox = BBox::new(coords[0], coords[1], coords[2], coords[3])
                .ok_or(IngestError::Geometry { line, bbox: [coords[0], coords[1], coords[2], coords[3]] })?;
            parsed.push((label.to_string(), conf, bbox));
        }
        scene.push_frame(&frame, parsed);
    }
    Ok(scene)
}

/// Writes the scene into the store. Returns the number of atoms added;
/// ingesting the same scene twice adds nothing the second time.
pub fn build_graph(scene: &Scene, store: &mut AtomStore) -> usize {
    let before = store.len();
    for frame in &scene.frames {
        store.add_node(CONCEPT_NODE, &frame_node_name(frame));
    }
    let roles: Vec<AtomId> = [LEFT, TOP, RIGHT, BOTTOM, CONFIDENCE].iter().map(|r| store.add_node(ROLE_NODE, r)).collect();
    for det in &scene.detections {
        let frame = store.add_node(CONCEPT_NODE, &frame_node_name(&det.frame_id));
        let bb = store.add_node(CONCEPT_NODE, &det.bb_name());
        let class = store.add_node(CONCEPT_NODE, &det.label);
        link(store, MEMBER_LINK, &[bb, frame]);
        link(store, INHERITANCE_LINK, &[bb, class]);
        let values = det.bbox.role_values().into_iter().chain([det.confidence]);
        for (value, role) in values.zip(&roles) {
            let num = store.add_number(value);
            let inh = link(store, INHERITANCE_LINK, &[num, *role]);
            link(store, MEMBER_LINK, &[inh, bb]);
        }
    }
    store.len() - before
}

fn link(store: &mut AtomStore, ty: &str, out: &[AtomId]) -> AtomId {
    store.add_link(ty, out).expect("children were just inserted")
}

/// Frame id of a `ConceptNode "Frame#<id>"`.
pub fn frame_id_of(store: &AtomStore, frame_node: AtomId) -> Option<&str> {
    if store.atom_type(frame_node) != CONCEPT_NODE {
        return None;
    }
    store.name(frame_node)?.strip_prefix("Frame#")
}

/// Value attached to `bb` under `role`, if exactly one exists.
pub fn role_value(store: &AtomStore, bb: AtomId, role: &str) -> Option<f64> {
    let role_node = store.find_node(ROLE_NODE, role)?;
    let mut found = None;
    for m in store.find_links(MEMBER_LINK, 1, bb).ok()? {
        let inh = store.outgoing(*m)[0];
        if store.atom_type(inh) == INHERITANCE_LINK && store.outgoing(inh).get(1) == Some(&role_node) {
            if found.is_some() {
                return None;
            }
            found = store.number_value(store.outgoing(inh)[0]);
        }
    }
    found
}

/// Reconstructs the detection a BB node was built from by walking the graph.
pub fn decode_bb(store: &AtomStore, bb: AtomId) -> Option<Detection> {
    let name = store.name(bb)?;
    let index: u32 = name.rsplit_once('-')?.1.parse().ok()?;
    let frame_id = store
        .find_links(MEMBER_LINK, 0, bb)
        .ok()?
        .iter()
        .find_map(|m| frame_id_of(store, store.outgoing(*m)[1]))?
        .to_string();
    let label = store
        .find_links(INHERITANCE_LINK, 0, bb)
        .ok()?
        .iter()
        .map(|l| store.outgoing(*l)[1])
        .find(|c| store.atom_type(*c) == CONCEPT_NODE)
        .and_then(|c| store.name(c))?
        .to_string();
    let [l, t, r, b] = BOX_ROLES.map(|role| role_value(store, bb, role));
    let bbox = BBox::new(l?, t?, r?, b?)?;
    let confidence = role_value(store, bb, CONFIDENCE)?;
    Some(Detection { frame_id, index, label, confidence, bbox })
}

/// Every detection recoverable from the store, ordered by frame then index.
pub fn decode_scene(store: &AtomStore) -> Vec<Detection> {
    let mut out: Vec<Detection> = store
        .atoms_of_type(CONCEPT_NODE)
        .iter()
        .filter(|id| store.name(**id).is_some_and(|n| n.starts_with("BB#")))
        .filter_map(|id| decode_bb(store, *id))
        .collect();
    out.sort_by(|a, b| compare_frames(&a.frame_id, &b.frame_id).then(a.index.cmp(&b.index)));
    out
}

/// Checks that `det` is present in the store with the full schema. Returns
/// the BB node on success, or a description of the first missing piece.
pub fn check_schema(store: &AtomStore, det: &Detection) -> Result<AtomId, String> {
    let bb = store.find_node(CONCEPT_NODE, &det.bb_name()).ok_or("missing BB node")?;
    let frame = store.find_node(CONCEPT_NODE, &frame_node_name(&det.frame_id)).ok_or("missing frame node")?;
    let class = store.find_node(CONCEPT_NODE, &det.label).ok_or("missing class node")?;
    store.find_link(MEMBER_LINK, &[bb, frame]).ok_or("missing frame membership")?;
    store.find_link(INHERITANCE_LINK, &[bb, class]).ok_or("missing class link")?;
    let values = det.bbox.role_values().into_iter().chain([det.confidence]);
    for (value, role) in values.zip([LEFT, TOP, RIGHT, BOTTOM, CONFIDENCE]) {
        let role_node = store.find_node(ROLE_NODE, role).ok_or_else(|| format!("missing role {role}"))?;
        let num = store.find_node("NumberNode", &value.to_string()).ok_or_else(|| format!("missing number {value}"))?;
        let inh = store.find_link(INHERITANCE_LINK, &[num, role_node]).ok_or_else(|| format!("missing {role} value"))?;
        store.find_link(MEMBER_LINK, &[inh, bb]).ok_or_else(|| format!("missing {role} membership"))?;
    }
    Ok(bb)
}

/// Numeric-aware ordering of frame ids: digit runs compare by value, so
/// "2" < "10" and "img2" < "img10".
pub fn compare_frames(a: &str, b: &str) -> Ordering {
    let (mut x, mut y) = (a, b);
    loop {
        match (x.is_empty(), y.is_empty()) {
            (true, true) => return a.cmp(b),
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        let (cx, rx) = split_chunk(x);
        let (cy, ry) = split_chunk(y);
        let both_digits = cx.as_bytes()[0].is_ascii_digit() && cy.as_bytes()[0].is_ascii_digit();
        let ord = if both_digits {
            let tx = cx.trim_start_matches('0');
            let ty = cy.trim_start_matches('0');
            tx.len().cmp(&ty.len()).then_with(|| tx.cmp(ty))
        } else {
            cx.cmp(cy)
        };
        if ord != Ordering::Equal {
            return ord;
        }
        x = rx;
        y = ry;
    }
}

fn split_chunk(s: &str) -> (&str, &str) {
    let digit = s.as_bytes()[0].is_ascii_digit();
    let end = s.bytes().position(|c| c.is_ascii_digit() != digit).unwrap_or(s.len());
    s.split_at(end)
}
