//! Spatial retrieval over object-detector output.
//!
//! Detections (labelled boxes per frame) are loaded into a hypergraph atom
//! store. Spatial relations between boxes are derived by Bind rules, and
//! queries such as `FIND FRAMES WHERE person INSIDE car` are answered by
//! backward chaining plus pattern matching.
//!
//! ```
//! use siq::engine::Engine;
//! use siq::ingest::parse_detections_str;
//! use siq::rules::RelParams;
//!
//! let scene = parse_detections_str(
//!     r#"{"frame":"1","detections":[{"label":"person","conf":0.9,"box":[80,40,150,110]},{"label":"car","conf":0.8,"box":[60,20,200,120]}]}"#,
//! )
//! .unwrap();
//! let mut engine = Engine::from_scene(&scene, RelParams::default()).unwrap();
//! let result = engine.query_text("FIND FRAMES WHERE person INSIDE car").unwrap();
//! assert_eq!(result.frame_ids(), ["1"]);
//! ```

pub mod atomese;
pub mod atomstore;
pub mod chainer;
pub mod cli;
pub mod engine;
pub mod ingest;
pub mod matcher;
pub mod oracle;
pub mod rules;
pub mod synth;
