use infochart::metadata::{parse_metadata, serialize_metadata, Alignment, AxisSpec, ChartKind, Dimensions, MetadataDoc, StatBlock, StatSeries, StatValue, Subchart};
use proptest::prelude::*;

fn text() -> impl Strategy<Value = String> {
    prop_oneof![
        Just(String::new()),
        "[a-zA-Z0-9 ,.;:%()'-]{1,40}",
        "\\PC{0,24}",
        Just("quotes \" and \\ backslashes".to_string()),
    ]
}

fn kind() -> impl Strategy<Value = ChartKind> {
    prop_oneof![
        (0usize..ChartKind::KNOWN.len()).prop_map(|i| ChartKind::KNOWN[i].clone()),
        prop::sample::select(vec!["radar", "treemap", "sankey"]).prop_map(|s| ChartKind::Unknown(s.into())),
    ]
}

fn stat_value() -> impl Strategy<Value = StatValue> {
    (text(), prop::num::f64::NORMAL | prop::num::f64::ZERO, prop::option::of(Just("percent".to_string())))
        .prop_map(|(label, value, unit)| StatValue { label, value, unit })
}

fn stats() -> impl Strategy<Value = StatBlock> {
    (prop::collection::vec((text(), prop::collection::vec(stat_value(), 1..5)), 1..4), text()).prop_map(|(series, raw)| StatBlock {
        series: series.into_iter().map(|(category, values)| StatSeries { category, values }).collect(),
        raw,
    })
}

fn axis() -> impl Strategy<Value = AxisSpec> {
    (prop::option::of(text()), prop::option::of(text()), prop::option::of(text()), prop::option::of(text()), text())
        .prop_map(|(x_label, y_label, x_units, y_units, raw)| AxisSpec { x_label, y_label, x_units, y_units, raw })
}

fn subchart() -> impl Strategy<Value = Subchart> {
    (
        kind(),
        axis(),
        stats(),
        (text(), text(), prop::option::of(text()), text()),
        (prop::option::of(1u32..4000), prop::option::of(1u32..4000), text()),
        (text(), prop::sample::select(vec![Alignment::Horizontal, Alignment::Vertical, Alignment::Unspecified]), text()),
    )
        .prop_map(|(kind, axis, stats, (t, pos, pos_text, bg), (w, h, raw), (fonts, alignment, summary))| Subchart {
            kind,
            axis,
            stats,
            text: t,
            position_chart: pos,
            position_chart_text: pos_text,
            background: bg,
            dimensions: Dimensions { width_px: w, height_px: h, raw },
            fonts,
            alignment,
            summary,
        })
}

fn doc() -> impl Strategy<Value = MetadataDoc> {
    (text(), text(), prop::collection::vec(subchart(), 1..6)).prop_map(|(title, summary, subcharts)| MetadataDoc { title, summary, subcharts })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn serialize_then_parse_is_identity(d in doc()) {
        let text = serialize_metadata(&d);
        let back = parse_metadata(&text).unwrap();
        prop_assert_eq!(&back, &d);
        prop_assert_eq!(serialize_metadata(&back), text);
    }
}
