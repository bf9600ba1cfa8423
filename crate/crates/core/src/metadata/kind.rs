use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Chart family of a single subchart.
///
/// Normalization is total: any string maps to exactly one variant, and
/// strings that match no known family are kept verbatim in `Unknown`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ChartKind {
    Bar,
    HorizontalBar,
    GroupedBar,
    StackedBar,
    Line,
    Pie,
    Histogram,
    Area,
    Unknown(String),
}

impl Default for ChartKind {
    fn default() -> Self {
        ChartKind::Unknown(String::new())
    }
}

impl ChartKind {
    pub const KNOWN: [ChartKind; 8] = [
        ChartKind::Bar,
        ChartKind::HorizontalBar,
        ChartKind::GroupedBar,
        ChartKind::StackedBar,
        ChartKind::Line,
        ChartKind::Pie,
        ChartKind::Histogram,
        ChartKind::Area,
    ];

    /// Maps a free-text chart description onto a kind, case-insensitively.
    pub fn normalize(raw: &str) -> ChartKind {
        let lowered = raw.to_lowercase();
        let tokens: Vec<&str> = lowered
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .collect();
        let has = |w: &str| tokens.contains(&w);
        let barish = has("bar") || has("bars") || has("column") || has("columns");

        if has("area") {
            ChartKind::Area
        } else if has("pie") || has("piechart") {
            ChartKind::Pie
        } else if has("histogram") || has("histograms") {
            ChartKind::Histogram
        } else if has("line") || has("lines") || has("linechart") {
            ChartKind::Line
        } else if has("stacked") && (barish || tokens.len() <= 2) {
            ChartKind::StackedBar
        } else if (has("grouped") || has("clustered") || has("group")) && (barish || tokens.len() <= 2)
        {
            ChartKind::GroupedBar
        } else if has("barh") || has("hbar") || (has("horizontal") && barish) {
            ChartKind::HorizontalBar
        } else if barish || has("barchart") {
            ChartKind::Bar
        } else {
            ChartKind::Unknown(raw.trim().to_string())
        }
    }

    /// Canonical serialized name; `Unknown` yields its raw text.
    pub fn as_str(&self) -> &str {
        match self {
            ChartKind::Bar => "bar",
            ChartKind::HorizontalBar => "horizontal_bar",
            ChartKind::GroupedBar => "grouped_bar",
            ChartKind::StackedBar => "stacked_bar",
            ChartKind::Line => "line",
            ChartKind::Pie => "pie",
            ChartKind::Histogram => "histogram",
            ChartKind::Area => "area",
            ChartKind::Unknown(raw) => raw,
        }
    }

    pub fn is_known(&self) -> bool {
        !matches!(self, ChartKind::Unknown(_))
    }

    /// Comparison key used by the evaluation metrics. Unknown kinds compare
    /// by their lowercased raw text.
    pub fn key(&self) -> String {
        match self {
            ChartKind::Unknown(raw) => format!("?{}", raw.trim().to_lowercase()),
            known => known.as_str().to_string(),
        }
    }

    /// Kinds drawn on a Cartesian plane (everything except pie).
    pub fn is_cartesian(&self) -> bool {
        !matches!(self, ChartKind::Pie | ChartKind::Unknown(_))
    }
}

impl fmt::Display for ChartKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for ChartKind {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for ChartKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        Ok(ChartKind::normalize(&raw))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synonym_table() {
        let table = [
            ("bar", ChartKind::Bar),
            ("Bar Chart", ChartKind::Bar),
            ("vertical bar chart", ChartKind::Bar),
            ("column chart", ChartKind::Bar),
            ("horizontal bar chart", ChartKind::HorizontalBar),
            ("Horizontal Bar", ChartKind::HorizontalBar),
            ("horizontal_bar", ChartKind::HorizontalBar),
            ("barh", ChartKind::HorizontalBar),
            ("grouped bar chart", ChartKind::GroupedBar),
            ("grouped_bar", ChartKind::GroupedBar),
            ("clustered column chart", ChartKind::GroupedBar),
            ("stacked bar chart", ChartKind::StackedBar),
            ("stacked_bar", ChartKind::StackedBar),
            ("Stacked horizontal bar", ChartKind::StackedBar),
            ("line graph", ChartKind::Line),
            ("LINE", ChartKind::Line),
            ("pie chart", ChartKind::Pie),
            ("histogram", ChartKind::Histogram),
            ("area chart", ChartKind::Area),
            ("stacked area chart", ChartKind::Area),
        ];
        for (raw, want) in table {
            assert_eq!(ChartKind::normalize(raw), want, "{raw}");
        }
    }

    #[test]
    fn unknown_keeps_raw() {
        assert_eq!(ChartKind::normalize("donut"), ChartKind::Unknown("donut".into()));
        assert_eq!(ChartKind::normalize(""), ChartKind::Unknown(String::new()));
        assert_eq!(ChartKind::Unknown("donut".into()).as_str(), "donut");
    }

    #[test]
    fn canonical_names_are_fixed_points() {
        for k in ChartKind::KNOWN {
            assert_eq!(ChartKind::normalize(k.as_str()), k);
            assert_eq!(ChartKind::normalize(&k.as_str().to_uppercase()), k);
        }
    }
}
