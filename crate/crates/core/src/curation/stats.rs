use serde::{Deserialize, Serialize};

use crate::eval::tokenize;
use crate::metadata::{metadata_text, MetadataDoc};

/// Row labels of the dataset summary, in the order [`DatasetStats::rows`]
/// returns them.
pub const STATS_LABELS: [&str; 11] = [
    "# of data points",
    "Avg. # of words in metadata",
    "Median # of words in metadata",
    "Avg. # of words in input text",
    "Median # of words in input text",
    "Avg. # of sentences in metadata",
    "Avg. # of sentences in input text",
    "Avg. # of sub-charts in each metadata",
    "Median # of sub-charts in each metadata",
    "Maximum # of sub-charts in each metadata",
    "Minimum # of sub-charts in each metadata",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_records: usize,
    pub avg_words_metadata: f64,
    pub median_words_metadata: f64,
    pub avg_words_input_text: f64,
    pub median_words_input_text: f64,
    pub avg_sentences_metadata: f64,
    pub avg_sentences_input_text: f64,
    pub avg_subcharts: f64,
    pub median_subcharts: f64,
    pub max_subcharts: usize,
    pub min_subcharts: usize,
}

/// Sentences end at a run of `.`, `!` or `?` followed by whitespace or the
/// end of the text; a trailing fragment without terminal punctuation also
/// counts. Segments without a letter or digit are ignored, and decimals
/// such as `3.5` never split.
pub fn count_sentences(text: &str) -> usize {
    let chars: Vec<char> = text.chars().collect();
    let mut count = 0;
    let mut has_word = false;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if matches!(c, '.' | '!' | '?') {
            let mut j = i;
            while j < chars.len() && matches!(chars[j], '.' | '!' | '?') {
                j += 1;
            }
            if j == chars.len() || chars[j].is_whitespace() {
                if has_word {
                    count += 1;
                }
                has_word = false;
            }
            i = j;
            continue;
        }
        if c.is_alphanumeric() {
            has_word = true;
        }
        i += 1;
    }
    count + usize::from(has_word)
}

fn mean(v: &[usize]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.iter().sum::<usize>() as f64 / v.len() as f64
}

/// Middle value; the mean of the two middle values for even lengths.
fn median(v: &[usize]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mut s = v.to_vec();
    s.sort_unstable();
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2] as f64
    } else {
        (s[n / 2 - 1] + s[n / 2]) as f64 / 2.0
    }
}

/// Summary statistics over (input text, metadata) records. Words are
/// evaluation-tokenizer tokens; metadata text is its human-readable field
/// text.
pub fn dataset_stats<'a>(records: impl IntoIterator<Item = (&'a str, &'a MetadataDoc)>) -> DatasetStats {
    let mut words_meta = Vec::new();
    let mut words_text = Vec::new();
    let mut sent_meta = Vec::new();
    let mut sent_text = Vec::new();
    let mut subcharts = Vec::new();
    for (text, doc) in records {
        let meta = metadata_text(doc);
        words_meta.push(tokenize(&meta).len());
        words_text.push(tokenize(text).len());
        sent_meta.push(count_sentences(&meta));
        sent_text.push(count_sentences(text));
        subcharts.push(doc.subcharts.len());
    }
    DatasetStats {
        n_records: subcharts.len(),
        avg_words_metadata: mean(&words_meta),
        median_words_metadata: median(&words_meta),
        avg_words_input_text: mean(&words_text),
        median_words_input_text: median(&words_text),
        avg_sentences_metadata: mean(&sent_meta),
        avg_sentences_input_text: mean(&sent_text),
        avg_subcharts: mean(&subcharts),
        median_subcharts: median(&subcharts),
        max_subcharts: subcharts.iter().copied().max().unwrap_or(0),
        min_subcharts: subcharts.iter().copied().min().unwrap_or(0),
    }
}

impl DatasetStats {
    pub fn rows(&self) -> Vec<(&'static str, f64)> {
        let values = [
            self.n_records as f64,
            self.avg_words_metadata,
            self.median_words_metadata,
            self.avg_words_input_text,
            self.median_words_input_text,
            self.avg_sentences_metadata,
            self.avg_sentences_input_text,
            self.avg_subcharts,
            self.median_subcharts,
            self.max_subcharts as f64,
            self.min_subcharts as f64,
        ];
        STATS_LABELS.into_iter().zip(values).collect()
    }

    /// Two-column text table; whole numbers print without decimals.
    pub fn to_table(&self) -> String {
        let width = STATS_LABELS.iter().map(|l| l.len()).max().unwrap_or(0);
        let mut out = format!("{:<width$} | Value\n{}-|------\n", "Statistic", "-".repeat(width));
        for (label, v) in self.rows() {
            let shown = if v.fract() == 0.0 { format!("{v:.0}") } else { format!("{v:.2}") };
            out.push_str(&format!("{label:<width$} | {shown}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metadata::{ChartKind, Subchart};

    #[test]
    fn sentence_rules() {
        assert_eq!(count_sentences(""), 0);
        assert_eq!(count_sentences("One. Two! Three?"), 3);
        assert_eq!(count_sentences("Rates rose 3.5 points... then fell"), 2);
        assert_eq!(count_sentences("... !"), 0);
        assert_eq!(count_sentences("no terminal"), 1);
    }

    #[test]
    fn single_record_is_degenerate() {
        let doc = MetadataDoc {
            title: "one two three four five six".into(),
            summary: String::new(),
            subcharts: vec![
                Subchart { kind: ChartKind::Bar, ..Subchart::default() },
                Subchart { kind: ChartKind::Pie, text: "seven eight".into(), ..Subchart::default() },
            ],
        };
        let text = "a b c d e f g h";
        let s = dataset_stats([(text, &doc)]);
        assert_eq!(s.n_records, 1);
        assert_eq!((s.avg_words_metadata, s.median_words_metadata), (10.0, 10.0));
        assert_eq!((s.avg_words_input_text, s.median_words_input_text), (8.0, 8.0));
        assert_eq!((s.avg_subcharts, s.median_subcharts, s.max_subcharts, s.min_subcharts), (2.0, 2.0, 2, 2));
        assert_eq!(s.rows().len(), STATS_LABELS.len());
        assert!(s.to_table().contains("Maximum # of sub-charts in each metadata | 2"));
    }
}
