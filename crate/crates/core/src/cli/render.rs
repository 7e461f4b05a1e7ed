//! SVG overlays of matched frames: one rectangle per grounded box, no image
//! underneath.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::engine::FrameResult;
use crate::ingest::{BBox, Detection};

pub const MARGIN: f64 = 10.0;

const PALETTE: [&str; 8] = ["#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4", "#42d4f4", "#f032e6", "#9a6324"];

fn color(label: &str) -> &'static str {
    let h = label.bytes().fold(0usize, |h, b| h.wrapping_mul(31).wrapping_add(b as usize));
    PALETTE[h % PALETTE.len()]
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            c => out.push(c),
        }
    }
    out
}

/// Bounding extent of `boxes` grown by [`MARGIN`] on every side.
pub fn viewport(boxes: &[BBox]) -> Option<BBox> {
    let first = boxes.first()?;
    let ext = boxes.iter().fold(*first, |a, b| BBox {
        left: a.left.min(b.left),
        top: a.top.min(b.top),
        right: a.right.max(b.right),
        bottom: a.bottom.max(b.bottom),
    });
    BBox::new(ext.left - MARGIN, ext.top - MARGIN, ext.right + MARGIN, ext.bottom + MARGIN)
}

/// Draws every box bound in any grounding of the frame, once, labelled with
/// the query variables it was bound to.
pub fn frame_svg(frame: &FrameResult) -> String {
    let mut boxes: BTreeMap<u32, (&Detection, Vec<&str>)> = BTreeMap::new();
    for g in &frame.groundings {
        for b in g {
            let entry = boxes.entry(b.detection.index).or_insert((&b.detection, Vec::new()));
            if !entry.1.contains(&b.var.as_str()) {
                entry.1.push(&b.var);
            }
        }
    }
    let all: Vec<BBox> = boxes.values().map(|(d, _)| d.bbox).collect();
    let Some(vp) = viewport(&all) else {
        return String::new();
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="{}" height="{}">"#,
        vp.left,
        vp.top,
        vp.width(),
        vp.height(),
        vp.width(),
        vp.height()
    );
    let _ = writeln!(s, "  <title>frame {}</title>", escape(&frame.frame));
    for (det, vars) in boxes.values() {
        let b = det.bbox;
        let c = color(&det.label);
        let _ = writeln!(
            s,
            r#"  <rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="{c}" stroke-width="2"/>"#,
            b.left,
            b.top,
            b.width(),
            b.height()
        );
        let _ = writeln!(
            s,
            r#"  <text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="{c}">{} {} {}</text>"#,
            b.left + 2.0,
            b.top + 12.0,
            escape(&vars.join(",")),
            escape(&det.label),
            det.confidence
        );
    }
    s.push_str("</svg>\n");
    s
}

/// File name for a frame's overlay; anything outside `[A-Za-z0-9._-]` in
/// the frame id becomes `_`.
pub fn svg_file_name(frame: &str) -> String {
    let safe: String = frame.chars().map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' }).collect();
    format!("frame_{safe}.svg")
}
