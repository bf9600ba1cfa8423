use infochart::eval::{
    correct_subcharts, evaluate_corpus, rouge_l, stat_matches, tokenize, type_matches, EvalOptions, EvalPair,
    StatMatching,
};
use infochart::metadata::{Alignment, ChartKind, MetadataDoc, StatBlock, StatSeries, StatValue, Subchart};
use proptest::prelude::*;

/// Longest common subsequence by exhaustive search: every subset of the
/// candidate is tested for being a subsequence of the reference.
fn brute_lcs(a: &[String], b: &[String]) -> usize {
    let is_subseq = |picked: &[&String]| {
        let mut it = b.iter();
        picked.iter().all(|p| it.any(|x| x == *p))
    };
    (0u32..1 << a.len())
        .filter_map(|mask| {
            let picked: Vec<&String> = (0..a.len()).filter(|i| mask & (1 << i) != 0).map(|i| &a[i]).collect();
            is_subseq(&picked).then_some(picked.len())
        })
        .max()
        .unwrap_or(0)
}

fn oracle_rouge(c: &str, r: &str) -> f64 {
    let (c, r) = (tokenize(c), tokenize(r));
    if r.is_empty() {
        return if c.is_empty() { 1.0 } else { 0.0 };
    }
    brute_lcs(&c, &r) as f64 / r.len() as f64
}

const VOCAB: [&str; 6] = ["a", "b", "c", "The", "d,", "e."];

fn sentence() -> impl Strategy<Value = String> {
    prop::collection::vec(0..VOCAB.len(), 0..=8).prop_map(|ix| ix.into_iter().map(|i| VOCAB[i]).collect::<Vec<_>>().join(" "))
}

fn stat_doc(kinds: Vec<(usize, bool)>, values: Vec<i32>) -> MetadataDoc {
    let mut vals = values.into_iter().cycle();
    MetadataDoc {
        title: "t".into(),
        summary: "s".into(),
        subcharts: kinds
            .into_iter()
            .map(|(k, h)| Subchart {
                kind: ChartKind::KNOWN[k % 4].clone(),
                alignment: if h { Alignment::Horizontal } else { Alignment::Vertical },
                stats: StatBlock {
                    series: vec![StatSeries {
                        category: String::new(),
                        values: (0..3)
                            .map(|i| StatValue { label: format!("L{i}"), value: vals.next().unwrap() as f64, unit: None })
                            .collect(),
                    }],
                    raw: String::new(),
                },
                ..Subchart::default()
            })
            .collect(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn rouge_matches_exhaustive_oracle(c in sentence(), r in sentence()) {
        prop_assert_eq!(rouge_l(&c, &r), oracle_rouge(&c, &r));
    }
}

proptest! {
    #[test]
    fn bounds_hold(
        kp in prop::collection::vec((0usize..4, any::<bool>()), 0..5),
        kg in prop::collection::vec((0usize..4, any::<bool>()), 1..5),
        vp in prop::collection::vec(0i32..10, 1..12),
        vg in prop::collection::vec(0i32..10, 1..12),
    ) {
        let pair = EvalPair::new("x", stat_doc(kg, vg), stat_doc(kp, vp));
        let r = evaluate_corpus(&[pair], &EvalOptions::default()).unwrap();
        for v in [r.subchart_accuracy, r.subchart_type_accuracy, r.statistical_accuracy] {
            prop_assert!((0.0..=100.0).contains(&v));
        }
        for v in [r.title_rouge_l, r.summary_rouge_l, r.subchart_summary_rouge_l] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!(r.rse >= 0.0);
    }

    #[test]
    fn dropping_a_predicted_subchart_never_helps(
        kg in prop::collection::vec((0usize..4, any::<bool>()), 1..6),
        drop in 0usize..6,
    ) {
        let gold = stat_doc(kg, vec![1]);
        let mut pred = gold.clone();
        let drop = drop % pred.subcharts.len();
        let (c0, t0) = (correct_subcharts(&pred, &gold), type_matches(&pred, &gold));
        pred.subcharts.remove(drop);
        prop_assert!(correct_subcharts(&pred, &gold) <= c0);
        prop_assert!(type_matches(&pred, &gold) <= t0);
        prop_assert_eq!(correct_subcharts(&pred, &gold), c0 - 1);
    }

    #[test]
    fn stat_accuracy_ignores_stat_order(triples in prop::collection::vec(prop::array::uniform3(-50i32..50), 1..5), seed in any::<u64>()) {
        let values: Vec<i32> = triples.concat();
        let gold = stat_doc(vec![(0, false); values.len().div_ceil(3)], values.clone());
        let mut shuffled = values.clone();
        let k = shuffled.len();
        shuffled.rotate_left((seed as usize) % k);
        if seed % 2 == 0 { shuffled.reverse(); }
        let pred = stat_doc(vec![(0, false); values.len().div_ceil(3)], shuffled);
        for m in [StatMatching::SortedMerge, StatMatching::Positional] {
            let g = gold.extract_numbers();
            prop_assert_eq!(stat_matches(&pred.extract_numbers(), &g, m), g.len());
        }
    }

    #[test]
    fn removing_one_number_costs_one_match(values in prop::collection::vec(-50i32..50, 1..20), pick in any::<usize>()) {
        let g: Vec<f64> = { let mut v: Vec<f64> = values.iter().map(|&x| x as f64).collect(); v.sort_by(f64::total_cmp); v };
        let mut p = g.clone();
        p.remove(pick % p.len());
        prop_assert_eq!(stat_matches(&p, &g, StatMatching::SortedMerge), g.len() - 1);
    }
}
