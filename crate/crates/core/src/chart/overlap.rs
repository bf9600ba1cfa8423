use serde::{Deserialize, Serialize};

use super::layout::LayoutedFigure;
use super::scene::{text_box, Anchor};
use super::Rect;

/// Rounding in the emitted coordinates stays well below this.
const EPS: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapKind {
    TextText,
    TextMark,
    OutOfCanvas,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapViolation {
    pub kind: OverlapKind,
    pub first: String,
    /// Second element id, or `canvas` for out-of-bounds text.
    pub second: String,
    pub area: f64,
}

#[derive(Debug)]
struct Boxed {
    id: String,
    rect: Rect,
}

fn attr_f64(n: &roxmltree::Node, name: &str) -> Option<f64> {
    n.attribute(name)?.trim().parse().ok()
}

fn node_id(n: &roxmltree::Node) -> String {
    n.attribute("id")
        .map(str::to_string)
        .unwrap_or_else(|| format!("{}@{}", n.tag_name().name(), n.range().start))
}

fn is_mark(n: &roxmltree::Node) -> bool {
    n.attribute("class")
        .is_some_and(|c| c.split_whitespace().any(|t| t == "mark"))
}

/// Scans rendered SVG for text boxes that collide with other text, sit on
/// a mark without being contained by it, or leave the canvas.
///
/// Text boxes are rebuilt from the SVG attributes with the same glyph
/// metrics layout uses. Marks are `rect` and `circle` elements whose class
/// includes `mark`. Unparseable SVG yields a single violation.
pub fn detect_overlaps(figure: &LayoutedFigure, svg: &str) -> Vec<OverlapViolation> {
    let doc = match roxmltree::Document::parse(svg) {
        Ok(d) => d,
        Err(e) => {
            return vec![OverlapViolation {
                kind: OverlapKind::OutOfCanvas,
                first: format!("unparseable svg: {e}"),
                second: "canvas".into(),
                area: 0.0,
            }]
        }
    };
    let mut texts = Vec::new();
    let mut marks = Vec::new();
    for n in doc.descendants().filter(|n| n.is_element()) {
        match n.tag_name().name() {
            "text" => {
                let content: String = n.descendants().filter(|d| d.is_text()).filter_map(|d| d.text()).collect();
                if content.is_empty() {
                    continue;
                }
                let (Some(x), Some(y)) = (attr_f64(&n, "x"), attr_f64(&n, "y")) else { continue };
                let size = attr_f64(&n, "font-size").unwrap_or(16.0);
                let anchor = Anchor::parse(n.attribute("text-anchor").unwrap_or("start"));
                texts.push(Boxed {
                    id: node_id(&n),
                    rect: text_box(x, y, size, anchor, &content),
                });
            }
            "rect" if is_mark(&n) => {
                let r = Rect::new(
                    attr_f64(&n, "x").unwrap_or(0.0),
                    attr_f64(&n, "y").unwrap_or(0.0),
                    attr_f64(&n, "width").unwrap_or(0.0),
                    attr_f64(&n, "height").unwrap_or(0.0),
                );
                marks.push(Boxed { id: node_id(&n), rect: r });
            }
            "circle" if is_mark(&n) => {
                let (cx, cy, r) = (
                    attr_f64(&n, "cx").unwrap_or(0.0),
                    attr_f64(&n, "cy").unwrap_or(0.0),
                    attr_f64(&n, "r").unwrap_or(0.0),
                );
                marks.push(Boxed {
                    id: node_id(&n),
                    rect: Rect::new(cx - r, cy - r, 2.0 * r, 2.0 * r),
                });
            }
            _ => {}
        }
    }

    let mut out = Vec::new();
    for t in &texts {
        if !figure.canvas.contains(&t.rect, EPS) {
            out.push(OverlapViolation {
                kind: OverlapKind::OutOfCanvas,
                first: t.id.clone(),
                second: "canvas".into(),
                area: t.rect.area(),
            });
        }
    }
    for (i, a) in texts.iter().enumerate() {
        for b in &texts[i + 1..] {
            if a.rect.intersects(&b.rect, EPS) {
                let (w, h) = a.rect.overlap_extent(&b.rect);
                out.push(OverlapViolation {
                    kind: OverlapKind::TextText,
                    first: a.id.clone(),
                    second: b.id.clone(),
                    area: w * h,
                });
            }
        }
    }
    for t in &texts {
        for m in &marks {
            if t.rect.intersects(&m.rect, EPS) && !m.rect.contains(&t.rect, EPS) {
                let (w, h) = t.rect.overlap_extent(&m.rect);
                out.push(OverlapViolation {
                    kind: OverlapKind::TextMark,
                    first: t.id.clone(),
                    second: m.id.clone(),
                    area: w * h,
                });
            }
        }
    }
    out
}
