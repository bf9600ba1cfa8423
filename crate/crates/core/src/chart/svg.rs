use std::fmt::Write;

use super::layout::{layout, LayoutedFigure};
use super::scene::{build_scene, Element, TEXT_COLOR};
use super::{ChartError, ChartIR};

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c if (c as u32) < 0x20 && c != '\t' => out.push(' '),
            c => out.push(c),
        }
    }
    out
}

fn element(out: &mut String, e: &Element, indent: &str) {
    // Writing to a String cannot fail.
    let _ = match e {
        Element::Text {
            id,
            class,
            x,
            y,
            size,
            anchor,
            bold,
            fill,
            content,
        } => writeln!(
            out,
            r#"{indent}<text id="{id}" class="{class}" x="{x:.2}" y="{y:.2}" font-size="{size}" text-anchor="{}"{} fill="{fill}">{}</text>"#,
            anchor.as_str(),
            if *bold { r#" font-weight="bold""# } else { "" },
            escape(content)
        ),
        Element::Rect { id, class, rect, fill } => writeln!(
            out,
            r#"{indent}<rect id="{id}" class="{class}" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
            rect.x, rect.y, rect.w, rect.h
        ),
        Element::Circle { id, class, cx, cy, r, fill } => writeln!(
            out,
            r#"{indent}<circle id="{id}" class="{class}" cx="{cx:.2}" cy="{cy:.2}" r="{r:.2}" fill="{fill}"/>"#
        ),
        Element::Line { class, x1, y1, x2, y2, stroke } => writeln!(
            out,
            r#"{indent}<line class="{class}" x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}" stroke-width="1"/>"#
        ),
        Element::Path {
            class,
            d,
            fill,
            stroke,
            opacity,
        } => writeln!(
            out,
            r#"{indent}<path class="{class}" d="{d}" fill="{fill}" stroke="{stroke}" stroke-width="1.5" opacity="{opacity}"/>"#
        ),
    };
}

/// Serializes a laid-out figure as a standalone SVG 1.1 document. Output
/// is a pure function of the inputs, byte for byte.
pub fn render_svg(figure: &LayoutedFigure, ir: &ChartIR) -> String {
    let scene = build_scene(figure, ir);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w:.2}" height="{h:.2}" viewBox="0 0 {w:.2} {h:.2}" font-family="monospace">"#,
        w = scene.width,
        h = scene.height
    );
    let _ = writeln!(out, r##"  <rect class="background" x="0" y="0" width="{:.2}" height="{:.2}" fill="#ffffff"/>"##, scene.width, scene.height);
    if !scene.figure.is_empty() {
        let _ = writeln!(out, r#"  <g class="figure-title" fill="{TEXT_COLOR}">"#);
        for e in &scene.figure {
            element(&mut out, e, "    ");
        }
        out.push_str("  </g>\n");
    }
    for (i, (panel, elements)) in ir.panels.iter().zip(&scene.panels).enumerate() {
        let _ = writeln!(out, r#"  <g class="panel" id="panel-{}" data-kind="{}">"#, i + 1, escape(panel.kind.as_str()));
        for e in elements {
            element(&mut out, e, "    ");
        }
        out.push_str("  </g>\n");
    }
    out.push_str("</svg>\n");
    out
}

/// Compile-free convenience: lay out then render.
pub fn layout_and_render(ir: &ChartIR) -> Result<(LayoutedFigure, String), ChartError> {
    let fig = layout(ir)?;
    let svg = render_svg(&fig, ir);
    Ok((fig, svg))
}
