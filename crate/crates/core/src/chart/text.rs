//! Fixed text metrics. No font is rasterized: every glyph is assumed to be
//! `GLYPH_WIDTH_FACTOR * size` wide, which keeps layout identical on every
//! platform.

pub const GLYPH_WIDTH_FACTOR: f64 = 0.6;
pub const LINE_HEIGHT_FACTOR: f64 = 1.2;
/// Baseline offset from the top of a line box.
pub const BASELINE_FACTOR: f64 = 0.9;

pub const FONT_TITLE: f64 = 20.0;
pub const FONT_SUBTITLE: f64 = 12.0;
pub const FONT_HEADING: f64 = 14.0;
pub const FONT_SMALL: f64 = 11.0;

pub fn char_width(size: f64) -> f64 {
    GLYPH_WIDTH_FACTOR * size
}

pub fn line_height(size: f64) -> f64 {
    LINE_HEIGHT_FACTOR * size
}

pub fn text_width(text: &str, size: f64) -> f64 {
    text.chars().count() as f64 * char_width(size)
}

/// Greedy word wrap into lines no wider than `max_width`. Words longer than
/// a line are hard-broken. Whitespace runs collapse to one space.
pub fn wrap(text: &str, max_width: f64, size: f64) -> Vec<String> {
    let per_line = ((max_width / char_width(size)) + 1e-9).floor().max(1.0) as usize;
    let mut lines = Vec::new();
    let mut current = String::new();
    let mut current_len = 0usize;
    for word in text.split_whitespace() {
        let mut chars: Vec<char> = word.chars().collect();
        while chars.len() > per_line {
            if current_len > 0 {
                lines.push(std::mem::take(&mut current));
                current_len = 0;
            }
            lines.push(chars[..per_line].iter().collect());
            chars.drain(..per_line);
        }
        if chars.is_empty() {
            continue;
        }
        let needed = if current_len == 0 { chars.len() } else { current_len + 1 + chars.len() };
        if needed > per_line {
            lines.push(std::mem::take(&mut current));
            current_len = 0;
        }
        if current_len > 0 {
            current.push(' ');
            current_len += 1;
        }
        current.extend(chars.iter());
        current_len += chars.len();
    }
    if current_len > 0 {
        lines.push(current);
    }
    lines
}

/// Height of `n` lines at `size`.
pub fn block_height(n: usize, size: f64) -> f64 {
    n as f64 * line_height(size)
}
