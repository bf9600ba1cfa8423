use serde::{Deserialize, Serialize};

/// Lowercased whitespace tokens with punctuation trimmed from both ends.
/// Tokens that are pure punctuation vanish.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

/// Longest common subsequence length, O(|a|·|b|) time and O(|b|) space.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RougeVariant {
    /// LCS length over reference length.
    #[default]
    Recall,
    /// Harmonic mean of LCS precision and recall.
    F1,
}

/// Recall-form ROUGE-L. An empty reference scores 1 against an empty
/// candidate and 0 otherwise.
pub fn rouge_l(candidate: &str, reference: &str) -> f64 {
    rouge_l_with(candidate, reference, RougeVariant::Recall)
}

pub fn rouge_l_with(candidate: &str, reference: &str, variant: RougeVariant) -> f64 {
    let (c, r) = (tokenize(candidate), tokenize(reference));
    if r.is_empty() {
        return if c.is_empty() { 1.0 } else { 0.0 };
    }
    let lcs = lcs_len(&c, &r) as f64;
    match variant {
        RougeVariant::Recall => lcs / r.len() as f64,
        RougeVariant::F1 => {
            if lcs == 0.0 {
                return 0.0;
            }
            let (p, rec) = (lcs / c.len() as f64, lcs / r.len() as f64);
            2.0 * p * rec / (p + rec)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(rouge_l("a b c", "a b c"), 1.0);
        assert_eq!(rouge_l("a b c", "a b d"), 2.0 / 3.0);
        assert_eq!(rouge_l("", "x y"), 0.0);
        assert_eq!(rouge_l("", ""), 1.0);
        assert_eq!(rouge_l("x", ""), 0.0);
        assert_eq!(rouge_l("alpha beta", "alpha gamma"), 0.5);
    }

    #[test]
    fn tokenizer_trims_edges_only() {
        assert_eq!(tokenize("  Hello, World! U.S. 18-29 ... "), ["hello", "world", "u.s", "18-29"]);
    }

    #[test]
    fn f1_variant() {
        // LCS 2, precision 2/4, recall 2/3.
        let f = rouge_l_with("a b x y", "a b c", RougeVariant::F1);
        assert!((f - 2.0 * 0.5 * (2.0 / 3.0) / (0.5 + 2.0 / 3.0)).abs() < 1e-12);
        assert_eq!(rouge_l_with("q", "a", RougeVariant::F1), 0.0);
    }
}
