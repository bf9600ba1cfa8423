//! Number scanning shared by the stats parser, the grounding heuristic and
//! the curation coverage check.

use std::sync::OnceLock;

use regex::Regex;

#[derive(Debug, Clone, PartialEq)]
pub struct NumberToken {
    pub value: f64,
    pub percent: bool,
    /// Byte span of the token in the scanned text, sign and unit included.
    pub start: usize,
    pub end: usize,
}

fn number_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)(-)?(\d{1,3}(?:,\d{3})+|\d+)(\.\d+)?(\s*%|\s*per ?cent\b)?").unwrap()
    })
}

/// Scans `text` for decimal numbers, left to right.
///
/// Thousands separators are accepted (`1,000`), a `%` or "percent" suffix
/// sets `percent`, and a leading minus only counts when it is not a range
/// dash (`18-29` yields 18 and 29). Digits glued to letters (`Q3`, `H2O`)
/// are skipped.
pub fn scan_numbers(text: &str) -> Vec<NumberToken> {
    let mut out = Vec::new();
    for caps in number_re().captures_iter(text) {
        let whole = caps.get(0).unwrap();
        let digits = caps.get(2).unwrap();
        let before = text[..digits.start()].chars().next_back();
        let sign = caps.get(1);
        let mut start = digits.start();
        let mut negative = false;
        if let Some(sign) = sign {
            let prev = text[..sign.start()].chars().next_back();
            if prev.is_some_and(|c| c.is_alphanumeric()) {
                // range dash, e.g. "18-29"
            } else {
                negative = true;
                start = sign.start();
            }
        } else if before.is_some_and(|c| c.is_alphabetic() || c == '.') {
            continue;
        }
        let after = text[whole.end()..].chars().next();
        if caps.get(4).is_none() && after.is_some_and(|c| c.is_alphabetic()) {
            // "2nd", "3rd" ordinals and unit-glued words like "510px" are
            // still numbers, but "H2O"-style identifiers are filtered above.
            let tail: String = text[whole.end()..].chars().take(2).collect();
            if matches!(tail.to_lowercase().as_str(), "st" | "nd" | "rd" | "th") {
                continue;
            }
        }
        let mut literal = digits.as_str().replace(',', "");
        if let Some(frac) = caps.get(3) {
            literal.push_str(frac.as_str());
        }
        let Ok(mut value) = literal.parse::<f64>() else {
            continue;
        };
        if !value.is_finite() {
            continue;
        }
        if negative {
            value = -value;
        }
        out.push(NumberToken {
            value,
            percent: caps.get(4).is_some(),
            start,
            end: whole.end(),
        });
    }
    out
}

/// Values of every number in `text`.
pub fn numbers_in(text: &str) -> Vec<f64> {
    scan_numbers(text).into_iter().map(|t| t.value).collect()
}

/// Equality used wherever statistics are compared; percent values compare by
/// magnitude.
pub fn same_value(a: f64, b: f64) -> bool {
    (a - b).abs() <= crate::metadata::VALUE_TOLERANCE
}
