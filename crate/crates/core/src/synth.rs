//! Seeded random scenes and queries for equivalence testing and benchmarks.
//!
//! Boxes are snapped to a coarse grid and many are derived from a box already
//! in the frame (nested, stacked, edge-touching, duplicated) so that the
//! boundary cases of every relation come up often.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::ingest::{BBox, Scene};
use crate::rules::{ClassRef, QueryAst, QueryClause, RelKind};

pub const CLASSES: [&str; 10] =
    ["person", "car", "tie", "backpack", "dog", "vase", "flowers", "dining table", "bicycle", "traffic light"];

#[derive(Clone, Debug)]
pub struct SceneSpec {
    pub frames: usize,
    pub max_detections: usize,
    pub classes: Vec<String>,
    pub width: f64,
    pub height: f64,
    /// Coordinate granularity in pixels.
    pub grid: f64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            frames: 200,
            max_detections: 10,
            classes: CLASSES.iter().map(|c| c.to_string()).collect(),
            width: 640.0,
            height: 480.0,
            grid: 10.0,
        }
    }
}

impl SceneSpec {
    fn snap(&self, v: f64) -> f64 {
        (v / self.grid).round() * self.grid
    }

    fn uniform_box(&self, rng: &mut impl Rng) -> BBox {
        loop {
            let w = self.snap(rng.gen_range(self.grid..self.width / 3.0));
            let h = self.snap(rng.gen_range(self.grid..self.height / 3.0));
            let l = self.snap(rng.gen_range(0.0..self.width - w));
            let t = self.snap(rng.gen_range(0.0..self.height - h));
            if let Some(b) = BBox::new(l, t, l + w, t + h) {
                return b;
            }
        }
    }

    /// A box standing in some relation to `base`, or uniform if none fits.
    fn related_box(&self, rng: &mut impl Rng, base: &BBox) -> BBox {
        let g = self.grid;
        let (w, h) = (base.width(), base.height());
        let cand = match rng.gen_range(0..7) {
            // nested
            0 => {
                let dl = self.snap(rng.gen_range(0.0..=w / 2.0));
                let dt = self.snap(rng.gen_range(0.0..=h / 2.0));
                let dr = self.snap(rng.gen_range(0.0..=w / 2.0));
                let db = self.snap(rng.gen_range(0.0..=h / 2.0));
                BBox::new(base.left + dl, base.top + dt, base.right - dr, base.bottom - db)
            }
            // enclosing
            1 => {
                let m = self.snap(rng.gen_range(0.0..3.0 * g));
                BBox::new(base.left - m, base.top - m, base.right + m, base.bottom + m)
            }
            // resting on top, bottom edge within a grid step of base.top
            2 => {
                let bw = self.snap(rng.gen_range(g..=w.max(g)));
                let bh = self.snap(rng.gen_range(g..=h.max(g)));
                let l = base.left + self.snap(rng.gen_range(-bw / 2.0..=w / 2.0));
                let bottom = base.top + g * rng.gen_range(-1..=1) as f64;
                BBox::new(l, bottom - bh, l + bw, bottom)
            }
            // touching an edge
            3 => {
                let bw = self.snap(rng.gen_range(g..=w.max(g)));
                if rng.gen() {
                    BBox::new(base.right, base.top, base.right + bw, base.bottom)
                } else {
                    BBox::new(base.left - bw, base.top, base.left, base.bottom)
                }
            }
            4 => Some(*base),
            // shifted copy, overlapping
            5 => {
                let dx = self.snap(rng.gen_range(-w / 2.0..=w / 2.0));
                let dy = self.snap(rng.gen_range(-h / 2.0..=h / 2.0));
                BBox::new(base.left + dx, base.top + dy, base.right + dx, base.bottom + dy)
            }
            // stacked vertically with a gap of at most one step
            _ => {
                let bh = self.snap(rng.gen_range(g..=h.max(g)));
                let gap = g * rng.gen_range(0..=1) as f64;
                BBox::new(base.left, base.bottom + gap, base.right, base.bottom + gap + bh)
            }
        };
        cand.unwrap_or_else(|| self.uniform_box(rng))
    }
}

/// Generates frames "1".."n". Each detection is either uniform or related to
/// an earlier detection in the same frame.
pub fn random_scene(rng: &mut impl Rng, spec: &SceneSpec) -> Scene {
    let mut scene = Scene::new();
    for f in 1..=spec.frames {
        let n = rng.gen_range(0..=spec.max_detections);
        let mut boxes: Vec<BBox> = Vec::with_capacity(n);
        let mut dets = Vec::with_capacity(n);
        for _ in 0..n {
            let b = match boxes.choose(rng) {
                Some(base) if rng.gen_bool(0.6) => spec.related_box(rng, base),
                _ => spec.uniform_box(rng),
            };
            boxes.push(b);
            let label = spec.classes.choose(rng).cloned().unwrap_or_else(|| "object".into());
            let conf = (rng.gen_range(0.05..1.0f64) * 100.0).round() / 100.0;
            dets.push((label, conf, b));
        }
        scene.push_frame(&f.to_string(), dets);
    }
    scene
}

fn pick(rng: &mut impl Rng, classes: &[String]) -> String {
    classes.choose(rng).cloned().unwrap_or_else(|| "object".into())
}

pub fn single_query(rng: &mut impl Rng, classes: &[String], rel: RelKind) -> QueryAst {
    QueryAst {
        clauses: vec![QueryClause { left: ClassRef::new(&pick(rng, classes)), rel, right: ClassRef::new(&pick(rng, classes)) }],
    }
}

/// Two clauses sharing one aliased object; `rel` is the first clause's
/// relation, the second is random. The shared object sits in a random
/// position in each clause.
pub fn conjunction_query(rng: &mut impl Rng, classes: &[String], rel: RelKind) -> QueryAst {
    let shared = ClassRef::aliased(&pick(rng, classes), "x");
    let other = *RelKind::ALL.choose(rng).unwrap_or(&rel);
    let clause = |rng: &mut _, rel| {
        let fresh = ClassRef::new(&pick(rng, classes));
        if Rng::gen_bool(rng, 0.5) {
            QueryClause { left: shared.clone(), rel, right: fresh }
        } else {
            QueryClause { left: fresh, rel, right: shared.clone() }
        }
    };
    let first = clause(rng, rel);
    let second = clause(rng, other);
    QueryAst { clauses: vec![first, second] }
}
