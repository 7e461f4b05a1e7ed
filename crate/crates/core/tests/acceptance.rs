//! Acceptance checks, one line per criterion:
//!
//! 1. planted-scenario fixtures retrieve exactly the planted frames
//! 2. RightTo pattern vs. the strict inequality on 10^4 random box pairs
//! 3. engine vs. brute force on 100 random scenes
//! 4. matcher vs. exhaustive enumeration on 500 random stores
//! 5. backward chaining vs. forward chaining plus match; goal-directedness
//! 6. vase/flowers/table fixture
//! 7. Atomese and ingest round-trips
//! 8. ingest and query timing at 10^5 detections
//!
//! Run with `cargo test --test acceptance`; exits non-zero if any fail.

mod common;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use siq::atomese::{self, print_store};
use siq::atomstore::AtomStore;
use siq::chainer::Chainer;
use siq::engine::Engine;
use siq::ingest::{build_graph, parse_detections, BBox, Detection, Scene};
use siq::matcher::{match_pattern, Evaluators, Grounding, MatchError, Pattern};
use siq::oracle::{oracle_relation, oracle_retrieve, OracleMatch};
use siq::rules::{builtin_rules, compile_query, evaluators, parse_query, rules_for, QueryAst, RelKind, RelParams};
use siq::synth::{conjunction_query, random_scene, single_query, SceneSpec};

type Outcome = Result<String, String>;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn oracle_set(m: &BTreeSet<OracleMatch>) -> BTreeSet<(String, Vec<u32>)> {
    m.iter().map(|m| (m.frame.clone(), m.assignment.clone())).collect()
}

fn named(store: &AtomStore, gs: &BTreeSet<Grounding>) -> BTreeSet<Vec<(String, String)>> {
    gs.iter()
        .map(|g| g.iter().map(|(v, id)| (v.to_string(), store.name(id).unwrap_or_default().to_string())).collect())
        .collect()
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let scene = parse_detections(data("demo.jsonl")).map_err(|e| e.to_string())?;
    let params = RelParams::default();
    let mut engine = Engine::from_scene(&scene, params).map_err(|e| e.to_string())?;
    let planted = [
        ("FIND FRAMES WHERE person INSIDE car", "1"),
        ("FIND FRAMES WHERE person LEFT_OF car", "2"),
        ("FIND FRAMES WHERE person WITH tie", "3"),
        ("FIND FRAMES WHERE person WITH backpack", "4"),
    ];
    for (q, frame) in planted {
        let r = engine.query_text(q).map_err(|e| e.to_string())?;
        ensure(r.frame_ids() == [frame], || format!("{q}: got frames {:?}, planted [{frame}]", r.frame_ids()))?;
        ensure(r.grounding_count() == 1, || format!("{q}: {} groundings", r.grounding_count()))?;
        let want = oracle_retrieve(&parse_query(q).unwrap(), &scene, &params)?;
        ensure(r.assignments() == oracle_set(&want), || format!("{q}: oracle disagrees"))?;
    }
    let elapsed = t.elapsed();
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:.2?}"))?;
    Ok(format!("4 queries, each exactly its planted frame, {} frames in fixture, {elapsed:.2?}", scene.frames.len()))
}

fn criterion_2() -> Outcome {
    let text = std::fs::read_to_string(data("right_to.ats")).map_err(|e| e.to_string())?;
    let doc = atomese::parse(&text).map_err(|e| e.to_string())?;
    let pattern = Pattern::from_tree(&doc.roots[0]);
    ensure(pattern.clauses().len() == 5, || "listing should have five clauses".into())?;
    let right_of = &rules_for(RelKind::RightOf, &RelParams::default())[0];
    ensure(right_of.pattern == pattern, || "builtin RIGHT_OF pattern differs from the listing".into())?;

    // Coordinates on a 0..20 grid so that left(a) == right(b) is common.
    let mut rng = ChaCha8Rng::seed_from_u64(0x51);
    let mut scene = Scene::new();
    let coord_box = |rng: &mut ChaCha8Rng| loop {
        let (l, t) = (rng.gen_range(0..20) as f64, rng.gen_range(0..20) as f64);
        let (w, h) = (rng.gen_range(1..8) as f64, rng.gen_range(1..8) as f64);
        if let Some(b) = BBox::new(l, t, l + w, t + h) {
            return b;
        }
    };
    let pairs = 10_000;
    for f in 0..pairs {
        let (a, b) = (coord_box(&mut rng), coord_box(&mut rng));
        scene.push_frame(&f.to_string(), [("a".to_string(), 1.0, a), ("b".to_string(), 1.0, b)]);
    }
    let mut store = AtomStore::new();
    build_graph(&scene, &mut store);
    let got = match_pattern(&pattern, &store, &Evaluators::default()).map_err(|e| e.to_string())?;
    let got: BTreeSet<(String, String)> = got
        .iter()
        .map(|g| (store.name(g.get("$BB1").unwrap()).unwrap().to_string(), store.name(g.get("$BB2").unwrap()).unwrap().to_string()))
        .collect();

    let mut want = BTreeSet::new();
    let mut ties = 0;
    for (_, dets) in scene.by_frame() {
        for x in &dets {
            for y in &dets {
                if x.bbox.left == y.bbox.right {
                    ties += 1;
                }
                if oracle_relation(RelKind::RightOf, &x.bbox, &y.bbox, &RelParams::default()) {
                    want.insert((x.bb_name(), y.bb_name()));
                }
            }
        }
    }
    ensure(got == want, || {
        format!("{} matches vs {} expected; {} spurious", got.len(), want.len(), got.difference(&want).count())
    })?;
    ensure(ties > 100, || format!("only {ties} tie cases generated"))?;
    Ok(format!("{pairs} box pairs, {} ordered matches, {ties} tie cases all rejected", want.len()))
}

struct SceneRun {
    queries: usize,
    nonempty: usize,
    assignments: usize,
}

/// Nine single-relation queries and 180 conjunctions over one random scene.
fn scene_and_queries(seed: u64) -> (Scene, Vec<QueryAst>) {
    let spec = SceneSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scene = random_scene(&mut rng, &spec);
    let mut queries: Vec<QueryAst> = Vec::new();
    for rel in RelKind::ALL {
        queries.push(single_query(&mut rng, &spec.classes, rel));
        for _ in 0..20 {
            queries.push(conjunction_query(&mut rng, &spec.classes, rel));
        }
    }
    (scene, queries)
}

fn engine_vs_oracle(seed: u64) -> Result<SceneRun, String> {
    let params = RelParams::default();
    let (scene, queries) = scene_and_queries(seed);
    let mut engine = Engine::from_scene(&scene, params).map_err(|e| e.to_string())?;
    let mut run = SceneRun { queries: 0, nonempty: 0, assignments: 0 };
    for q in &queries {
        let want = oracle_retrieve(q, &scene, &params)?;
        let got = engine.query(q).map_err(|e| e.to_string())?;
        let got_frames: BTreeSet<&str> = got.frame_ids().into_iter().collect();
        let want_frames: BTreeSet<&str> = want.iter().map(|m| m.frame.as_str()).collect();
        ensure(got_frames == want_frames && got.grounding_count() == want.len(), || {
            format!(
                "seed {seed} `{q}`: engine {} frames/{} assignments, oracle {}/{}",
                got_frames.len(),
                got.grounding_count(),
                want_frames.len(),
                want.len()
            )
        })?;
        ensure(got.assignments() == oracle_set(&want), || format!("seed {seed} `{q}`: assignments differ"))?;
        run.queries += 1;
        run.nonempty += usize::from(!want.is_empty());
        run.assignments += want.len();
    }
    Ok(run)
}

/// Backward chaining on one persistent store per scene against a fully
/// forward-chained copy. Returns the number of goals checked.
fn backward_vs_forward(seed: u64) -> Result<usize, String> {
    let params = RelParams::default();
    let (scene, queries) = scene_and_queries(seed);
    let rules = builtin_rules(&params);
    let evals = evaluators();
    let mut forward = AtomStore::new();
    build_graph(&scene, &mut forward);
    Chainer::new().forward_chain(&rules, &mut forward, &evals).map_err(|e| e.to_string())?;
    let mut backward = AtomStore::new();
    build_graph(&scene, &mut backward);
    let mut chainer = Chainer::new();
    for q in &queries {
        let goal = compile_query(q, &params).map_err(|e| e.to_string())?.goal;
        let b = chainer.backward_chain(&goal, &rules, &mut backward, &evals).map_err(|e| e.to_string())?;
        let f = match_pattern(&goal, &forward, &evals).map_err(|e| e.to_string())?;
        ensure(named(&backward, &b) == named(&forward, &f), || format!("seed {seed} `{q}`: backward != forward"))?;
        let log = chainer.take_log();
        let ran: BTreeSet<&str> = log.iter().map(|e| e.rule.as_str()).collect();
        let allowed: BTreeSet<String> = q.clauses.iter().flat_map(|c| rules_for(c.rel, &params)).map(|r| r.name).collect();
        ensure(ran.iter().all(|r| allowed.contains(*r)), || format!("seed {seed} `{q}`: ran {ran:?}"))?;
        if q.clauses.len() == 1 {
            let exact: BTreeSet<&str> = allowed.iter().map(String::as_str).collect();
            ensure(ran == exact, || format!("seed {seed} `{q}`: ran {ran:?}, expected {exact:?}"))?;
        }
    }
    Ok(queries.len())
}

fn criterion_3() -> Outcome {
    let t = Instant::now();
    let (mut queries, mut nonempty, mut assignments) = (0, 0, 0);
    for seed in 0..100 {
        let r = engine_vs_oracle(seed)?;
        queries += r.queries;
        nonempty += r.nonempty;
        assignments += r.assignments;
    }
    let elapsed = t.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:.2?}"))?;
    Ok(format!(
        "100 scenes x 200 frames, {queries} queries ({nonempty} with answers, {assignments} assignments) agree, {elapsed:.2?}"
    ))
}

fn criterion_4() -> Outcome {
    let evals = Evaluators::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x4);
    let (mut checked, mut nonempty, mut groundings) = (0, 0, 0);
    while checked < 500 {
        let store = common::random_store(&mut rng, 40);
        let pattern = common::random_pattern(&mut rng, &store, 3);
        let got = match match_pattern(&pattern, &store, &evals) {
            Ok(g) => g,
            Err(MatchError::IllFormed(_)) => continue,
            Err(e) => return Err(e.to_string()),
        };
        let want = common::exhaustive_match(&pattern, &store);
        ensure(got == want, || format!("pattern {} : {} vs {} groundings", pattern.to_term(), got.len(), want.len()))?;
        checked += 1;
        nonempty += usize::from(!want.is_empty());
        groundings += want.len();
    }
    Ok(format!("{checked} stores/patterns ({nonempty} with matches, {groundings} groundings) equal exhaustive enumeration"))
}

fn criterion_5() -> Outcome {
    let t = Instant::now();
    let (mut checked, mut scenes) = (0, 0);
    for seed in 0..100 {
        checked += backward_vs_forward(seed)?;
        scenes += 1;
    }
    Ok(format!("{checked} goals on {scenes} scenes: backward = forward + match; only needed rules ran, {:.2?}", t.elapsed()))
}

fn criterion_6() -> Outcome {
    let scene = parse_detections(data("vase_flowers.jsonl")).map_err(|e| e.to_string())?;
    let d = |label: &str| -> &Detection { scene.detections.iter().find(|d| d.label == label).unwrap() };
    let (vase, table) = (d("vase"), d("dining table"));
    let params = RelParams::default();
    let mut engine = Engine::from_scene(&scene, params).map_err(|e| e.to_string())?;

    let inside = engine.query_text("FIND FRAMES WHERE vase INSIDE flowers").map_err(|e| e.to_string())?;
    ensure(inside.frame_ids() == ["1"], || "vase INSIDE flowers should match".into())?;

    let on_expected = oracle_relation(RelKind::On, &vase.bbox, &table.bbox, &params);
    let on = engine.query_text("FIND FRAMES WHERE vase ON \"dining table\"").map_err(|e| e.to_string())?;
    ensure(on_expected, || "oracle says ON is false at default thresholds".into())?;
    ensure(!on.is_empty() == on_expected, || "engine disagrees with oracle on ON".into())?;

    let strict = RelParams { on_tau: 0.05, ..params };
    let mut strict_engine = Engine::from_scene(&scene, strict).map_err(|e| e.to_string())?;
    let on_strict = strict_engine.query_text("FIND FRAMES WHERE vase ON \"dining table\"").map_err(|e| e.to_string())?;
    ensure(on_strict.is_empty() && !oracle_relation(RelKind::On, &vase.bbox, &table.bbox, &strict), || {
        "ON should fail at on_tau=0.05".into()
    })?;
    Ok("vase INSIDE flowers matches; vase ON table true at on_tau=0.15, false at 0.05".into())
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7);
    for i in 0..500 {
        let store = common::random_store(&mut rng, 60);
        let text = print_store(&store);
        let doc = atomese::parse(&text).map_err(|e| format!("store {i}: {e}"))?;
        ensure(atomese::print_doc(&doc) == text, || format!("store {i}: print(parse(text)) != text"))?;
        let mut again = AtomStore::new();
        atomese::load(&doc, &mut again).map_err(|e| e.to_string())?;
        ensure(again.len() == store.len(), || format!("store {i}: {} atoms reloaded, {} before", again.len(), store.len()))?;
        ensure(print_store(&again) == text, || format!("store {i}: dump -> load -> dump differs"))?;
    }

    let mut engine = Engine::from_scene(&random_scene(&mut rng, &SceneSpec::default()), RelParams::default())
        .map_err(|e| e.to_string())?;
    engine.forward_all().map_err(|e| e.to_string())?;
    let dump = print_store(engine.store());
    let mut loaded = AtomStore::new();
    atomese::load(&atomese::parse(&dump).map_err(|e| e.to_string())?, &mut loaded).map_err(|e| e.to_string())?;
    ensure(print_store(&loaded) == dump, || "scene dump -> load -> dump differs".into())?;

    for seed in 0..10 {
        let scene = random_scene(&mut ChaCha8Rng::seed_from_u64(seed), &SceneSpec::default());
        let mut store = AtomStore::new();
        let first = build_graph(&scene, &mut store);
        let second = build_graph(&scene, &mut store);
        ensure(first > 0 && second == 0, || format!("seed {seed}: second ingest added {second} atoms"))?;
    }
    Ok(format!("500 random stores round-trip; scene dump of {} atoms byte-identical; re-ingest adds 0 atoms", loaded.len()))
}

fn criterion_8() -> Outcome {
    let spec = SceneSpec { frames: 1, max_detections: 10, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(0x8);
    let mut scene = Scene::new();
    for f in 1..=10_000 {
        let mut dets = Vec::with_capacity(10);
        while dets.len() < 10 {
            let one = random_scene(&mut rng, &spec);
            dets.extend(one.detections.into_iter().map(|d| (d.label, d.confidence, d.bbox)));
        }
        dets.truncate(10);
        scene.push_frame(&f.to_string(), dets);
    }
    let t = Instant::now();
    let mut engine = Engine::from_scene(&scene, RelParams::default()).map_err(|e| e.to_string())?;
    let ingest = t.elapsed();
    let t = Instant::now();
    let r = engine.query_text("FIND FRAMES WHERE person INSIDE car").map_err(|e| e.to_string())?;
    let query = t.elapsed();
    ensure(ingest < Duration::from_secs(10), || format!("ingest took {ingest:.2?}"))?;
    ensure(query < Duration::from_secs(1), || format!("query took {query:.2?}"))?;
    Ok(format!(
        "ingest {} detections in {ingest:.2?} ({} atoms); person INSIDE car: {} frames in {query:.2?}",
        scene.detections.len(),
        engine.store().len(),
        r.frames.len()
    ))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("planted-scenario fixtures", criterion_1),
        ("RightTo anchor", criterion_2),
        ("engine/oracle equivalence", criterion_3),
        ("matcher completeness", criterion_4),
        ("chainer equivalence", criterion_5),
        ("vase/flowers/table", criterion_6),
        ("round-trips", criterion_7),
        ("desk-scale performance", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {} [{name}]: PASS — {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} [{name}]: FAIL — {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
