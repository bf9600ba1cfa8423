//! Scanner for synthesized passages that give away how the source looked:
//! chart vocabulary, panel counts or where the data came from.

use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeakCategory {
    ChartKind,
    LayoutWord,
    PanelCount,
    SourceAttribution,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Leak {
    pub category: LeakCategory,
    /// The offending text as it appears in the passage.
    pub matched: String,
}

/// Kind vocabulary. Bare "line" and "area" are ordinary nouns ("front
/// line", "rural area"), so only their chart compounds are listed.
pub const KIND_TERMS: [&str; 14] = [
    "bar",
    "bars",
    "pie",
    "pies",
    "histogram",
    "histograms",
    "line graph",
    "line chart",
    "line plot",
    "area chart",
    "scatter plot",
    "scatterplot",
    "donut",
    "doughnut",
];

pub const LAYOUT_TERMS: [&str; 17] = [
    "chart",
    "charts",
    "subchart",
    "subcharts",
    "sub-chart",
    "sub-charts",
    "image",
    "images",
    "section",
    "sections",
    "graph",
    "graphs",
    "plot",
    "plots",
    "panel",
    "panels",
    "infographic",
];

const COUNT_WORDS: &str = "one|two|three|four|five|six|seven|eight|nine|ten|eleven|twelve|\\d+";
const COUNTED_THINGS: &str = "sub-?charts?|charts?|panels?|sections?|graphs?|plots?|parts|figures?|visuals?";

fn word_alternation(terms: &[&str]) -> String {
    terms.iter().map(|t| regex::escape(t)).collect::<Vec<_>>().join("|")
}

fn ci(pattern: &str) -> Regex {
    RegexBuilder::new(pattern).case_insensitive(true).build().expect("leak pattern compiles")
}

/// Compiled leak patterns for one set of source names.
#[derive(Debug, Clone)]
pub struct LeakScanner {
    patterns: Vec<(LeakCategory, Regex)>,
}

impl LeakScanner {
    pub fn new(source_names: &[String]) -> Self {
        let mut patterns = vec![
            (LeakCategory::PanelCount, ci(&format!(r"\b(?:{COUNT_WORDS})\s+(?:{COUNTED_THINGS})\b"))),
            (LeakCategory::ChartKind, ci(&format!(r"\b(?:{})\b", word_alternation(&KIND_TERMS)))),
            (LeakCategory::LayoutWord, ci(&format!(r"\b(?:{})\b", word_alternation(&LAYOUT_TERMS)))),
            (LeakCategory::SourceAttribution, ci(r"\bsources?\s*:|\b(?:data|figures|numbers)\s+(?:come|comes|came)\s+from\b")),
        ];
        let names: Vec<&str> = source_names.iter().map(String::as_str).filter(|n| !n.trim().is_empty()).collect();
        if !names.is_empty() {
            patterns.push((LeakCategory::SourceAttribution, ci(&format!(r"\b(?:{})\b", word_alternation(&names)))));
        }
        LeakScanner { patterns }
    }

    /// Every leak in `text`, grouped by category in declaration order.
    pub fn scan(&self, text: &str) -> Vec<Leak> {
        self.patterns
            .iter()
            .flat_map(|(category, re)| {
                re.find_iter(text).map(|m| Leak { category: *category, matched: m.as_str().to_string() })
            })
            .collect()
    }

    pub fn is_clean(&self, text: &str) -> bool {
        self.patterns.iter().all(|(_, re)| !re.is_match(text))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scanner() -> LeakScanner {
        LeakScanner::new(&["Pew Research Center".to_string()])
    }

    #[test]
    fn finds_each_category() {
        let s = scanner();
        let cats = |t: &str| s.scan(t).into_iter().map(|l| l.category).collect::<Vec<_>>();
        assert_eq!(cats("as shown in the bar chart"), [LeakCategory::ChartKind, LeakCategory::LayoutWord]);
        assert_eq!(cats("The Image shows"), [LeakCategory::LayoutWord]);
        assert!(cats("Across three panels, support grew").contains(&LeakCategory::PanelCount));
        assert_eq!(cats("Source: survey of adults"), [LeakCategory::SourceAttribution]);
        assert_eq!(cats("a Pew Research Center survey"), [LeakCategory::SourceAttribution]);
    }

    #[test]
    fn ordinary_prose_passes() {
        let s = scanner();
        for t in [
            "Most adults in rural areas say the front line workers deserve more support.",
            "About 35% of Republicans and 63% of Democrats trust scientists, a barrier for some.",
            "Sectional interests and imagery aside, 12 states reported gains.",
        ] {
            assert!(s.is_clean(t), "{t}: {:?}", s.scan(t));
        }
    }
}
