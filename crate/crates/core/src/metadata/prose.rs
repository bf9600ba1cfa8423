//! Reader for metadata written as labelled sentences, e.g.
//!
//! ```text
//! Subchart 1: This is a bar chart. The X-axis represents ... The statistics
//! are: A: 35%, B: 63%. The text associated with this subchart is "U.S.
//! adults". The position of the subchart is the first one in the image, and
//! the text is positioned above the corresponding subchart. The background is
//! white, with dimensions of 510px width and 45px height. The fonts used are
//! Arial.
//! ```

use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;

use super::{Alignment, AxisSpec, ChartKind, Dimensions, MetadataDoc, MetadataError, StatBlock, Subchart};

macro_rules! re {
    ($name:ident, $pat:expr) => {
        fn $name() -> &'static Regex {
            static RE: OnceLock<Regex> = OnceLock::new();
            RE.get_or_init(|| Regex::new($pat).unwrap())
        }
    };
}

re!(section_re, r"(?i)(?:^|\s)[*_#\\]*\s*sub-?chart[ _]*(\d+)?\s*[*_]*\s*:");
re!(title_re, r"(?im)^[\s*#]*title[*\s]*:\s*(.+)$");
re!(summary_re, r"(?im)^[\s*#]*summary[*\s]*:\s*(.+)$");
re!(
    kind_re,
    r"(?i)\bthis is (?:also |again )?(?:another |an? )?(?:also )?([a-z][a-z \-]*?)\s*(?:chart|graph|plot|diagram)\b"
);
re!(kind_label_re, r"(?i)\b(?:type|kind)\s*[:\-]\s*([^.\n]+)");
re!(axis_sentence_re, r"(?i)\b[xy][- ]?axis\b|^(?:the )?axes\b");
re!(stats_re, r"(?i)\b(?:statistics|data points|values) (?:are|is|include)\s*:?\s*");
re!(text_re, r#"(?i)(?:text associated with (?:this|the) subchart is|(?:title|heading) (?:is|reads))\s*[“"]([^"”]*)["”]"#);
re!(
    position_re,
    r"(?i)(?:the position of the subchart is|(?:the |this )?subchart is (?:positioned|located|placed)(?: as)?)\s+"
);
re!(background_re, r"(?i)\bthe background is\s+([^,.;]+)");
re!(dimensions_re, r"(?i)\bdimensions? (?:of|are|is|:)\s*(.+)");
re!(fonts_re, r"(?i)\bfonts? used (?:are|is)\s+(.+)");
re!(alignment_re, r"(?i)\balignment (?:is|:)\s*([a-z]+)");
re!(sub_summary_re, r"(?i)\bsummary\s*:\s*(.+)");

/// Parses a whole prose document into metadata.
pub fn parse_prose(text: &str) -> Result<MetadataDoc, MetadataError> {
    let text = text.replace("**", "").replace("\\\\", "\n");
    let starts: Vec<_> = section_re().captures_iter(&text).collect();
    if starts.is_empty() {
        return Err(MetadataError::MalformedDocument(
            "no JSON object and no `Subchart N:` sections".into(),
        ));
    }

    let head = &text[..starts[0].get(0).unwrap().start()];
    let title = title_re()
        .captures(head)
        .map(|c| c[1].trim().to_string())
        .unwrap_or_default();
    let summary = summary_re()
        .captures(head)
        .map(|c| c[1].trim().to_string())
        .unwrap_or_default();

    let mut seen = BTreeSet::new();
    let mut subcharts = Vec::new();
    for (i, caps) in starts.iter().enumerate() {
        let idx: u32 = match caps.get(1) {
            Some(m) => m
                .as_str()
                .parse()
                .map_err(|_| MetadataError::MalformedDocument("bad subchart number".into()))?,
            None => i as u32 + 1,
        };
        if !seen.insert(idx) {
            return Err(MetadataError::DuplicateSubchartIndex(idx));
        }
        let body_start = caps.get(0).unwrap().end();
        let body_end = starts.get(i + 1).map_or(text.len(), |n| n.get(0).unwrap().start());
        subcharts.push((idx, parse_section(&text[body_start..body_end])));
    }
    if seen.contains(&0) {
        return Err(MetadataError::MalformedDocument("subchart numbering starts at 1".into()));
    }
    let max = *seen.iter().next_back().unwrap();
    if let Some(gap) = (1..=max).find(|i| !seen.contains(i)) {
        return Err(MetadataError::MissingField(format!("subchart_{gap}")));
    }
    subcharts.sort_by_key(|(idx, _)| *idx);
    Ok(MetadataDoc {
        title,
        summary,
        subcharts: subcharts.into_iter().map(|(_, s)| s).collect(),
    })
}

/// Splits prose into sentences at `.`, `!` or `?` followed by whitespace and
/// an uppercase letter or quote, so abbreviations like "U.S. adults" survive.
fn sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    for (n, &(i, c)) in chars.iter().enumerate() {
        if !matches!(c, '.' | '!' | '?' | '\n') {
            continue;
        }
        let split = if c == '\n' {
            true
        } else {
            let mut k = n + 1;
            if k >= chars.len() {
                true
            } else if !chars[k].1.is_whitespace() {
                false
            } else {
                while k < chars.len() && chars[k].1.is_whitespace() {
                    k += 1;
                }
                k >= chars.len() || chars[k].1.is_uppercase() || matches!(chars[k].1, '"' | '“')
            }
        };
        if split {
            let s = text[start..i + c.len_utf8()].trim();
            if !s.is_empty() {
                out.push(s);
            }
            start = i + c.len_utf8();
        }
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail);
    }
    out
}

fn strip_period(s: &str) -> String {
    s.trim().trim_end_matches(['.', ',']).trim().to_string()
}

/// Parses one subchart description.
pub fn parse_section(body: &str) -> Subchart {
    let mut sub = Subchart::default();
    let sents = sentences(body);

    sub.kind = kind_re()
        .captures(body)
        .map(|c| ChartKind::normalize(c[1].trim()))
        .or_else(|| kind_label_re().captures(body).map(|c| ChartKind::normalize(c[1].trim())))
        .unwrap_or_default();

    let axis_raw = sents
        .iter()
        .filter(|s| axis_sentence_re().is_match(s))
        .copied()
        .collect::<Vec<_>>()
        .join(" ");
    sub.axis = AxisSpec::from_text(&axis_raw);

    for s in &sents {
        if let Some(m) = stats_re().find(s) {
            sub.stats = StatBlock::from_text(&strip_period(&s[m.end()..]));
            break;
        }
    }

    if let Some(c) = text_re().captures(body) {
        sub.text = c[1].trim().to_string();
    }

    for s in &sents {
        if let Some(m) = position_re().find(s) {
            let rest = strip_period(&s[m.end()..]);
            let lower = rest.to_lowercase();
            match lower.find(", and the text ").or_else(|| lower.find(" and the text ")) {
                Some(cut) => {
                    let text_part = &rest[cut..];
                    let text_part = text_part[text_part.to_lowercase().find("the text ").unwrap() + 9..].trim();
                    let text_part = text_part.strip_prefix("is ").unwrap_or(text_part);
                    sub.position_chart = rest[..cut].trim().to_string();
                    sub.position_chart_text = Some(text_part.to_string());
                }
                None => sub.position_chart = rest,
            }
            break;
        }
    }
    if sub.position_chart_text.is_none() {
        for s in &sents {
            let lower = s.to_lowercase();
            if let Some(at) = lower.find("the text is ") {
                if !lower.contains("associated with") {
                    sub.position_chart_text = Some(strip_period(&s[at + 12..]));
                    break;
                }
            }
        }
    }

    for s in &sents {
        if sub.background.is_empty() {
            if let Some(c) = background_re().captures(s) {
                sub.background = c[1].trim().to_string();
            }
        }
        if sub.dimensions.raw.is_empty() {
            if let Some(c) = dimensions_re().captures(s) {
                sub.dimensions = Dimensions::from_text(&strip_period(&c[1]));
            }
        }
        if sub.fonts.is_empty() {
            if let Some(c) = fonts_re().captures(s) {
                sub.fonts = strip_period(&c[1]);
            }
        }
        if sub.alignment == Alignment::Unspecified {
            if let Some(c) = alignment_re().captures(s) {
                sub.alignment = Alignment::parse(&c[1]);
            }
        }
        if sub.summary.is_empty() {
            if let Some(c) = sub_summary_re().captures(s) {
                sub.summary = strip_period(&c[1]);
            }
        }
    }
    sub
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sentence_splitting_keeps_abbreviations() {
        let s = sentences("The Y-axis represents U.S. adults. The statistics are: A: 1.5%, B: 2. Done");
        assert_eq!(s, ["The Y-axis represents U.S. adults.", "The statistics are: A: 1.5%, B: 2.", "Done"]);
    }

    #[test]
    fn section_fields() {
        let sub = parse_section(
            "This is also a bar chart. The X-axis is not specified, and the Y-axis represents groups. \
             The statistics are: High: Yes: 40%, No: 59%; Low: Yes: 48%, No: 51%. \
             The text associated with this subchart is \"Among Republicans\". \
             The subchart is positioned below the first subchart, and the text is located above it. \
             The background is white, with dimensions of 510px width and 50px height. \
             The fonts used are Arial, bold for the title, and Arial for the labels.",
        );
        assert_eq!(sub.kind, ChartKind::Bar);
        assert_eq!(sub.axis.y_label.as_deref(), Some("groups"));
        assert_eq!(sub.stats.value_count(), 4);
        assert_eq!(sub.stats.series[1].category, "Low");
        assert_eq!(sub.text, "Among Republicans");
        assert_eq!(sub.position_chart, "below the first subchart");
        assert_eq!(sub.position_chart_text.as_deref(), Some("located above it"));
        assert_eq!(sub.background, "white");
        assert_eq!(sub.dimensions.size(), Some((510, 50)));
        assert_eq!(sub.fonts, "Arial, bold for the title, and Arial for the labels");
    }

    #[test]
    fn kind_phrasings() {
        assert_eq!(parse_section("This is another bar chart.").kind, ChartKind::Bar);
        assert_eq!(parse_section("This is a horizontal bar chart.").kind, ChartKind::HorizontalBar);
        assert_eq!(parse_section("This is a pie chart.").kind, ChartKind::Pie);
        assert_eq!(parse_section("Type: line").kind, ChartKind::Line);
    }

    #[test]
    fn document_with_title_and_unnumbered_section() {
        let doc = parse_prose("Title: Trust\nSummary: Most trust it.\nSubchart: This is a pie chart.").unwrap();
        assert_eq!(doc.title, "Trust");
        assert_eq!(doc.summary, "Most trust it.");
        assert_eq!(doc.subcharts.len(), 1);
    }

    #[test]
    fn duplicate_and_gap() {
        assert_eq!(
            parse_prose("Subchart 1: a. Subchart 1: b.").unwrap_err(),
            MetadataError::DuplicateSubchartIndex(1)
        );
        assert_eq!(
            parse_prose("Subchart 1: a.\nSubchart 3: b.").unwrap_err(),
            MetadataError::MissingField("subchart_2".into())
        );
    }
}
