//! Per-pair metric kernels. Each returns raw counts or a fraction in [0,1];
//! corpus aggregation and percent scaling happen in the parent module.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::rouge::{rouge_l_with, RougeVariant};
use crate::metadata::{MetadataDoc, Subchart, VALUE_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SummaryAggregation {
    /// Best score over every (predicted, gold) summary pair.
    #[default]
    Max,
    /// For each gold summary the best predicted match, averaged over gold.
    BestMatchMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatMatching {
    /// Two-pointer walk over both sorted lists; a missing value costs
    /// exactly one match.
    #[default]
    SortedMerge,
    /// Index-by-index comparison of the sorted lists.
    Positional,
}

fn subchart_matches(p: &Subchart, g: &Subchart) -> bool {
    p.kind == g.kind && p.alignment == g.alignment
}

/// Gold subcharts, in index order, that claim the first unused predicted
/// subchart with the same kind and alignment.
pub fn correct_subcharts(pred: &MetadataDoc, gold: &MetadataDoc) -> usize {
    let mut used = vec![false; pred.subcharts.len()];
    let mut correct = 0;
    for g in &gold.subcharts {
        if let Some(j) = (0..pred.subcharts.len()).find(|&j| !used[j] && subchart_matches(&pred.subcharts[j], g)) {
            used[j] = true;
            correct += 1;
        }
    }
    correct
}

/// Size of the multiset intersection of predicted and gold kinds.
pub fn type_matches(pred: &MetadataDoc, gold: &MetadataDoc) -> usize {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for s in &pred.subcharts {
        *counts.entry(s.kind.key()).or_default() += 1;
    }
    gold.subcharts
        .iter()
        .filter(|g| match counts.get_mut(&g.kind.key()) {
            Some(n) if *n > 0 => {
                *n -= 1;
                true
            }
            _ => false,
        })
        .count()
}

/// Matched statistics between two ascending lists.
pub fn stat_matches(pred: &[f64], gold: &[f64], matching: StatMatching) -> usize {
    let close = |a: f64, b: f64| (a - b).abs() <= VALUE_TOLERANCE;
    match matching {
        StatMatching::Positional => pred.iter().zip(gold).filter(|(p, g)| close(**p, **g)).count(),
        StatMatching::SortedMerge => {
            let (mut i, mut j, mut n) = (0, 0, 0);
            while i < pred.len() && j < gold.len() {
                if close(pred[i], gold[j]) {
                    n += 1;
                    i += 1;
                    j += 1;
                } else if pred[i] < gold[j] {
                    i += 1;
                } else {
                    j += 1;
                }
            }
            n
        }
    }
}

/// Subchart summary agreement, or `None` when either side has no subcharts.
pub fn subchart_summary_rouge_with(
    pred: &MetadataDoc,
    gold: &MetadataDoc,
    aggregation: SummaryAggregation,
    variant: RougeVariant,
) -> Option<f64> {
    if pred.subcharts.is_empty() || gold.subcharts.is_empty() {
        return None;
    }
    let best_for = |g: &Subchart| {
        pred.subcharts
            .iter()
            .map(|p| rouge_l_with(&p.summary, &g.summary, variant))
            .fold(0.0, f64::max)
    };
    Some(match aggregation {
        SummaryAggregation::Max => gold.subcharts.iter().map(best_for).fold(0.0, f64::max),
        SummaryAggregation::BestMatchMean => {
            gold.subcharts.iter().map(best_for).sum::<f64>() / gold.subcharts.len() as f64
        }
    })
}

/// Maximum recall ROUGE-L over all summary pairs; 0 when either side has no
/// subcharts.
pub fn subchart_summary_rouge(pred: &MetadataDoc, gold: &MetadataDoc) -> f64 {
    subchart_summary_rouge_with(pred, gold, SummaryAggregation::Max, RougeVariant::Recall).unwrap_or(0.0)
}

/// Root mean squared difference between predicted and gold subchart counts.
pub fn rse_of_counts(counts: &[(usize, usize)]) -> f64 {
    if counts.is_empty() {
        return 0.0;
    }
    let sq: f64 = counts.iter().map(|&(p, g)| (p as f64 - g as f64).powi(2)).sum();
    (sq / counts.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metadata::ChartKind;

    fn doc(kinds: &[&str]) -> MetadataDoc {
        MetadataDoc {
            title: String::new(),
            summary: String::new(),
            subcharts: kinds.iter().map(|k| Subchart { kind: ChartKind::normalize(k), ..Subchart::default() }).collect(),
        }
    }

    #[test]
    fn count_accuracy_examples() {
        assert_eq!(correct_subcharts(&doc(&["bar", "bar"]), &doc(&["bar", "bar", "bar"])), 2);
        assert_eq!(correct_subcharts(&doc(&[]), &doc(&["bar"])), 0);
        // Greedy matching skips the unmatched pie rather than stopping at it.
        assert_eq!(correct_subcharts(&doc(&["pie", "bar"]), &doc(&["bar", "line"])), 1);
    }

    #[test]
    fn alignment_must_agree() {
        let mut p = doc(&["bar"]);
        let g = doc(&["bar"]);
        p.subcharts[0].alignment = crate::metadata::Alignment::Horizontal;
        assert_eq!(correct_subcharts(&p, &g), 0);
        assert_eq!(type_matches(&p, &g), 1);
    }

    #[test]
    fn type_multiset() {
        assert_eq!(type_matches(&doc(&["bar", "line"]), &doc(&["bar", "bar"])), 1);
        assert_eq!(type_matches(&doc(&["bar", "bar", "pie"]), &doc(&["pie", "bar", "bar"])), 3);
        assert_eq!(type_matches(&doc(&[]), &doc(&["bar"])), 0);
    }

    #[test]
    fn rse_examples() {
        assert!((rse_of_counts(&[(2, 2), (3, 2)]) - 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(rse_of_counts(&[(5, 2)]), 3.0);
        assert_eq!(rse_of_counts(&[(4, 4), (1, 1)]), 0.0);
    }

    #[test]
    fn stat_matching_variants() {
        assert_eq!(stat_matches(&[35.0, 60.0], &[35.0, 63.0], StatMatching::SortedMerge), 1);
        assert_eq!(stat_matches(&[35.0, 60.0], &[35.0, 63.0], StatMatching::Positional), 1);
        // One missing low value shifts every position but costs merge one match.
        let g = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(stat_matches(&g[1..], &g, StatMatching::SortedMerge), 3);
        assert_eq!(stat_matches(&g[1..], &g, StatMatching::Positional), 0);
        assert_eq!(stat_matches(&[], &g, StatMatching::SortedMerge), 0);
    }

    #[test]
    fn summary_rouge_forms() {
        let mut p = doc(&["bar"]);
        let mut g = doc(&["bar", "bar"]);
        p.subcharts[0].summary = "alpha beta".into();
        g.subcharts[0].summary = "alpha gamma".into();
        g.subcharts[1].summary = "delta".into();
        assert_eq!(subchart_summary_rouge(&p, &g), 0.5);
        let avg = subchart_summary_rouge_with(&p, &g, SummaryAggregation::BestMatchMean, RougeVariant::Recall);
        assert_eq!(avg, Some(0.25));
        assert_eq!(subchart_summary_rouge_with(&doc(&[]), &g, SummaryAggregation::Max, RougeVariant::Recall), None);
        p.subcharts[0].summary.clear();
        assert_eq!(subchart_summary_rouge(&p, &g), 0.0);
    }
}
