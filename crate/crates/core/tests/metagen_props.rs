use infochart::metagen::{heuristic_score, rank, CandidateMetadata, HeuristicWeights, RankMethod, Signals, StageConfig};
use proptest::prelude::*;

const DOC: &str = r#"{"title":"t","summary":"s","subchart_1":{"kind":"pie","stats":"A: 40%, B: 60%"}}"#;

fn signals() -> impl Strategy<Value = Signals> {
    (any::<bool>(), any::<bool>(), any::<bool>()).prop_map(|(known_kinds, stats_present, stats_grounded)| Signals {
        parsed: true,
        known_kinds,
        stats_present,
        stats_grounded,
    })
}

fn weights() -> impl Strategy<Value = HeuristicWeights> {
    (0.01f64..5.0, 0.0f64..5.0, 0.0f64..5.0, 0.0f64..5.0).prop_map(|(parsed, known_kinds, stats_present, stats_grounded)| {
        HeuristicWeights { parsed, known_kinds, stats_present, stats_grounded }
    })
}

proptest! {
    #[test]
    fn turning_on_a_signal_never_lowers_the_score(s in signals(), w in weights(), which in 0usize..3) {
        let mut more = s;
        match which {
            0 => more.known_kinds = true,
            1 => more.stats_present = true,
            _ => more.stats_grounded = true,
        }
        let (a, b) = (heuristic_score(s, &w), heuristic_score(more, &w));
        prop_assert!(b >= a);
        prop_assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
    }

    #[test]
    fn scaling_weights_keeps_the_fallback_choice(sigs in prop::collection::vec(signals(), 1..6), w in weights(), k in 0.1f64..50.0) {
        let scaled = HeuristicWeights {
            parsed: w.parsed * k,
            known_kinds: w.known_kinds * k,
            stats_present: w.stats_present * k,
            stats_grounded: w.stats_grounded * k,
        };
        let choose = |w: &HeuristicWeights| {
            let cands: Vec<CandidateMetadata> = sigs
                .iter()
                .map(|s| {
                    let mut c = CandidateMetadata::from_reply("g", DOC.to_string());
                    c.signals = *s;
                    c.heuristic_score = heuristic_score(*s, w);
                    c
                })
                .collect();
            let d = rank("", &cands, &StageConfig::default(), None, None).unwrap();
            assert_eq!(d.method, RankMethod::HeuristicFallback);
            d.chosen_index
        };
        prop_assert_eq!(choose(&w), choose(&scaled));
    }
}
