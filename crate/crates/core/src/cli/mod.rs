//! The `siq` command line.

pub mod render;

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fs;
use std::io::{self, BufRead, IsTerminal, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::atomese::{self, print_store};
use crate::atomstore::AtomStore;
use crate::engine::{Engine, QueryResult};
use crate::ingest::{check_schema, compare_frames, decode_scene, parse_detections, Scene};
use crate::matcher::{BindRule, Pattern, BIND_LINK};
use crate::oracle::oracle_retrieve;
use crate::rules::{parse_query, ClassRef, QueryAst, QueryClause, RelKind, RelParams};

#[derive(Parser, Debug)]
#[command(name = "siq", version, about = "Spatial queries over object-detector output")]
struct Cli {
    #[command(flatten)]
    params: ParamArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct ParamArgs {
    /// ON: max gap between the upper box's bottom and the lower box's top,
    /// as a fraction of the lower box's height.
    #[arg(long, global = true, env = "SIQ_ON_TAU")]
    on_tau: Option<f64>,
    /// ON: min horizontal overlap, as a fraction of the upper box's width.
    #[arg(long, global = true, env = "SIQ_ON_OVERLAP_MIN")]
    on_overlap_min: Option<f64>,
    /// INSIDE: pixels a box may stick out of its container.
    #[arg(long, global = true, env = "SIQ_INSIDE_SLACK")]
    inside_slack: Option<f64>,
    /// Drop detections below this confidence before building the graph.
    #[arg(long, global = true, env = "SIQ_MIN_CONF")]
    min_conf: Option<f64>,
}

impl ParamArgs {
    fn rel_params(&self) -> RelParams {
        let d = RelParams::default();
        RelParams {
            on_tau: self.on_tau.unwrap_or(d.on_tau),
            on_overlap_min: self.on_overlap_min.unwrap_or(d.on_overlap_min),
            inside_slack: self.inside_slack.unwrap_or(d.inside_slack),
        }
    }
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
struct Input {
    /// Detections, one JSON object per frame per line.
    #[arg(long)]
    detections: Option<PathBuf>,
    /// A store previously written by `dump`.
    #[arg(long)]
    store: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the graph and report its size; optionally write it out.
    Ingest {
        #[command(flatten)]
        input: Input,
        /// Write the store as Atomese.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a query. Exit 0 with matches, 1 without, 2 on error.
    Query {
        #[command(flatten)]
        input: Input,
        /// Surface query, e.g. "FIND FRAMES WHERE person INSIDE car".
        #[arg(long, conflicts_with = "atomese", required_unless_present = "atomese")]
        q: Option<String>,
        /// Goal pattern (or BindLink) in Atomese.
        #[arg(long)]
        atomese: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Append the chainer log.
        #[arg(long)]
        explain: bool,
    },
    /// Compare engine answers with brute-force enumeration. With no --q,
    /// checks every relation between every pair of classes present.
    Check {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        q: Vec<String>,
    },
    /// Write the whole store as Atomese.
    Dump {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Read an Atomese dump; optionally write it back out.
    Load {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One query per line; `:params [k=v ...]`, `:explain on|off`, `:quit`.
    Repl {
        #[command(flatten)]
        input: Input,
    },
    /// One SVG overlay per matching frame.
    Render {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        q: String,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

/// Entry point used by the `siq` binary.
pub fn main() -> i32 {
    let stdin = io::stdin();
    let interactive = stdin.is_terminal();
    run(std::env::args_os(), &mut stdin.lock(), &mut io::stdout().lock(), &mut io::stderr().lock(), interactive)
}

/// Runs one command line. Returns the process exit code.
pub fn run<I, T>(args: I, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write, interactive: bool) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli, input, out, err, interactive) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            2
        }
    }
}

fn dispatch(cli: Cli, stdin: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write, interactive: bool) -> Result<i32> {
    let params = cli.params.rel_params();
    params.validate().map_err(|e| anyhow!(e))?;
    if let Some(c) = cli.params.min_conf {
        if !(0.0..=1.0).contains(&c) {
            bail!("--min-conf must be in [0, 1], got {c}");
        }
    }
    let min_conf = cli.params.min_conf;
    match cli.command {
        Command::Ingest { input, out: path } => {
            let (scene, store) = open(&input, min_conf)?;
            for d in &scene.detections {
                check_schema(&store, d).map_err(|e| anyhow!("schema check failed: {e}"))?;
            }
            writeln!(
                out,
                "{} frames, {} detections, {} atoms",
                scene.frames.len(),
                scene.detections.len(),
                store.len()
            )?;
            if let Some(p) = path {
                write_file(&p, &print_store(&store))?;
            }
            Ok(0)
        }
        Command::Query { input, q, atomese: ats, format, explain } => {
            let (_, store) = open(&input, min_conf)?;
            let mut engine = Engine::with_store(store, params)?;
            let result = match (q, ats) {
                (Some(q), _) => engine.query_text(&q)?,
                (None, Some(path)) => engine.query_pattern(&read_goal(&path)?)?,
                (None, None) => bail!("one of --q or --atomese is required"),
            };
            match format {
                Format::Text => {
                    write_text(out, &result)?;
                    if explain {
                        write_log(out, &result)?;
                    }
                }
                Format::Json => {
                    write_json(out, &result)?;
                    if explain {
                        write_log(err, &result)?;
                    }
                }
            }
            Ok(if result.is_empty() { 1 } else { 0 })
        }
        Command::Check { input, q } => {
            let (scene, store) = open(&input, min_conf)?;
            let queries = if q.is_empty() {
                all_pair_queries(&scene)
            } else {
                q.iter().map(|t| parse_query(t)).collect::<Result<Vec<_>, _>>()?
            };
            let mut engine = Engine::with_store(store, params)?;
            let mut failures = 0;
            for ast in &queries {
                if !check_one(&mut engine, &scene, ast, out)? {
                    failures += 1;
                }
            }
            writeln!(out, "{} queries checked, {failures} disagreements", queries.len())?;
            Ok(if failures == 0 { 0 } else { 1 })
        }
        Command::Dump { input, out: path } => {
            let (_, store) = open(&input, min_conf)?;
            emit(out, path.as_deref(), &print_store(&store))?;
            Ok(0)
        }
        Command::Load { file, out: path } => {
            let store = load_store(&file)?;
            match path {
                Some(p) => write_file(&p, &print_store(&store))?,
                None => writeln!(out, "{} atoms", store.len())?,
            }
            Ok(0)
        }
        Command::Repl { input } => {
            let (scene, store) = open(&input, min_conf)?;
            repl(scene, Engine::with_store(store, params)?, stdin, out, interactive)?;
            Ok(0)
        }
        Command::Render { input, q, out_dir } => {
            let (_, store) = open(&input, min_conf)?;
            let mut engine = Engine::with_store(store, params)?;
            let result = engine.query_text(&q)?;
            fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
            for frame in &result.frames {
                let path = out_dir.join(render::svg_file_name(&frame.frame));
                write_file(&path, &render::frame_svg(frame))?;
                writeln!(out, "{}", path.display())?;
            }
            Ok(if result.is_empty() { 1 } else { 0 })
        }
    }
}

/// The scene (for the oracle) and its graph.
fn open(input: &Input, min_conf: Option<f64>) -> Result<(Scene, AtomStore)> {
    let mut store = AtomStore::new();
    let scene = match (&input.detections, &input.store) {
        (Some(path), _) => {
            let mut scene = parse_detections(path)?;
            if let Some(c) = min_conf {
                scene = scene.filter_min_conf(c);
            }
            crate::ingest::build_graph(&scene, &mut store);
            scene
        }
        (None, Some(path)) => {
            store = load_store(path)?;
            let mut scene = scene_of(&store);
            if let Some(c) = min_conf {
                scene = scene.filter_min_conf(c);
            }
            scene
        }
        (None, None) => bail!("one of --detections or --store is required"),
    };
    Ok((scene, store))
}

fn scene_of(store: &AtomStore) -> Scene {
    let mut by_frame: BTreeMap<String, Vec<_>> = BTreeMap::new();
    for d in decode_scene(store) {
        by_frame.entry(d.frame_id.clone()).or_default().push(d);
    }
    let mut frames: Vec<_> = by_frame.into_iter().collect();
    frames.sort_by(|a, b| compare_frames(&a.0, &b.0));
    let mut scene = Scene::new();
    for (frame, mut dets) in frames {
        dets.sort_by_key(|d| d.index);
        scene.push_frame(&frame, dets.into_iter().map(|d| (d.label, d.confidence, d.bbox)));
    }
    scene
}

fn load_store(path: &Path) -> Result<AtomStore> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let doc = atomese::parse(&text).with_context(|| format!("parsing {}", path.display()))?;
    let mut store = AtomStore::new();
    atomese::load(&doc, &mut store)?;
    Ok(store)
}

fn read_goal(path: &Path) -> Result<Pattern> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let doc = atomese::parse(&text).with_context(|| format!("parsing {}", path.display()))?;
    let [root] = doc.roots.as_slice() else {
        bail!("{}: expected exactly one top-level expression, found {}", path.display(), doc.roots.len());
    };
    if root.atom_type == BIND_LINK {
        return Ok(BindRule::from_tree("goal", root)?.pattern);
    }
    Ok(Pattern::from_tree(root))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_file(p, text),
        None => Ok(out.write_all(text.as_bytes())?),
    }
}

pub fn write_text(out: &mut dyn Write, result: &QueryResult) -> io::Result<()> {
    for f in &result.frames {
        writeln!(out, "frame {}", f.frame)?;
        for g in &f.groundings {
            let parts: Vec<String> = g
                .iter()
                .map(|b| {
                    let d = &b.detection;
                    format!("{}={} {} {} {}", b.var, d.bb_name(), d.label, d.confidence, d.bbox)
                })
                .collect();
            writeln!(out, "  {}", parts.join("  "))?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct JsonObject<'a> {
    bb: String,
    label: &'a str,
    conf: f64,
    #[serde(rename = "box")]
    bbox: [f64; 4],
}

#[derive(Serialize)]
struct JsonGrounding<'a> {
    vars: BTreeMap<&'a str, JsonObject<'a>>,
}

#[derive(Serialize)]
struct JsonFrame<'a> {
    frame: &'a str,
    groundings: Vec<JsonGrounding<'a>>,
}

/// One JSON object per matching frame, one per line.
pub fn write_json(out: &mut dyn Write, result: &QueryResult) -> io::Result<()> {
    for f in &result.frames {
        let frame = JsonFrame {
            frame: &f.frame,
            groundings: f
                .groundings
                .iter()
                .map(|g| JsonGrounding {
                    vars: g
                        .iter()
                        .map(|b| {
                            let d = &b.detection;
                            let obj = JsonObject { bb: d.bb_name(), label: &d.label, conf: d.confidence, bbox: d.bbox.as_array() };
                            (b.var.as_str(), obj)
                        })
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_writer(&mut *out, &frame)?;
        writeln!(out)?;
    }
    Ok(())
}

fn write_log(out: &mut dyn Write, result: &QueryResult) -> io::Result<()> {
    writeln!(out, "-- chainer log")?;
    for e in &result.log {
        writeln!(out, "{e}")?;
    }
    Ok(())
}

fn all_pair_queries(scene: &Scene) -> Vec<QueryAst> {
    let classes: BTreeSet<&str> = scene.detections.iter().map(|d| d.label.as_str()).collect();
    let mut out = Vec::new();
    for a in &classes {
        for b in &classes {
            for rel in RelKind::ALL {
                out.push(QueryAst { clauses: vec![QueryClause { left: ClassRef::new(a), rel, right: ClassRef::new(b) }] });
            }
        }
    }
    out
}

/// Prints a line per disagreement; returns whether both sides agree on the
/// frame set and on the number of assignments.
fn check_one(engine: &mut Engine, scene: &Scene, ast: &QueryAst, out: &mut dyn Write) -> Result<bool> {
    let params = *engine.params();
    let got = engine.query(ast)?;
    let want = oracle_retrieve(ast, scene, &params).map_err(|e| anyhow!(e))?;
    let got_frames: BTreeSet<&str> = got.frame_ids().into_iter().collect();
    let want_frames: BTreeSet<&str> = want.iter().map(|m| m.frame.as_str()).collect();
    let same = got_frames == want_frames && got.grounding_count() == want.len();
    if !same {
        writeln!(out, "MISMATCH {ast}")?;
        writeln!(out, "  engine: {} frames, {} assignments", got_frames.len(), got.grounding_count())?;
        writeln!(out, "  oracle: {} frames, {} assignments", want_frames.len(), want.len())?;
        for f in got_frames.difference(&want_frames) {
            writeln!(out, "  only engine: frame {f}")?;
        }
        for f in want_frames.difference(&got_frames) {
            writeln!(out, "  only oracle: frame {f}")?;
        }
    }
    Ok(same)
}

fn repl(scene: Scene, mut engine: Engine, input: &mut dyn BufRead, out: &mut dyn Write, interactive: bool) -> Result<()> {
    let mut explain = false;
    let mut line = String::new();
    loop {
        if interactive {
            write!(out, "siq> ")?;
            out.flush()?;
        }
        line.clear();
        if input.read_line(&mut line)? == 0 {
            return Ok(());
        }
        let cmd = line.trim();
        if cmd.is_empty() {
            continue;
        }
        if let Some(rest) = cmd.strip_prefix(':') {
            let mut words = rest.split_whitespace();
            match words.next() {
                Some("quit") | Some("q") => return Ok(()),
                Some("explain") => match words.next() {
                    Some("on") => explain = true,
                    Some("off") => explain = false,
                    _ => writeln!(out, "usage: :explain on|off")?,
                },
                Some("params") => {
                    let updates: Vec<&str> = words.collect();
                    if !updates.is_empty() {
                        match apply_params(*engine.params(), &updates) {
                            Ok(p) => {
                                // Facts derived under the old thresholds would
                                // leak into answers; start from raw detections.
                                let mut fresh = Engine::new(p)?;
                                fresh.ingest(&scene);
                                engine = fresh;
                            }
                            Err(e) => {
                                writeln!(out, "error: {e}")?;
                                continue;
                            }
                        }
                    }
                    writeln!(out, "{}", engine.params())?;
                }
                _ => writeln!(out, "unknown command :{rest}; try :params, :explain on|off, :quit")?,
            }
            continue;
        }
        match engine.query_text(cmd) {
            Ok(r) => {
                if r.is_empty() {
                    writeln!(out, "no matches")?;
                } else {
                    write_text(out, &r)?;
                }
                if explain {
                    write_log(out, &r)?;
                }
            }
            Err(e) => writeln!(out, "error: {e}")?,
        }
    }
}

fn apply_params(mut p: RelParams, updates: &[&str]) -> Result<RelParams> {
    for u in updates {
        let (k, v) = u.split_once('=').ok_or_else(|| anyhow!("expected key=value, got {u:?}"))?;
        let v: f64 = v.parse().with_context(|| format!("bad number for {k}"))?;
        match k {
            "on_tau" => p.on_tau = v,
            "on_overlap_min" => p.on_overlap_min = v,
            "inside_slack" => p.inside_slack = v,
            _ => bail!("unknown parameter {k:?}"),
        }
    }
    p.validate().map_err(|e| anyhow!(e))?;
    Ok(p)
}
