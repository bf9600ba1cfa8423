use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use infochart::chart::{compile_metadata, layout_and_render};
use infochart::eval::{evaluate_corpus, rouge_l, EvalOptions, EvalPair};
use infochart::metadata::{parse_metadata, serialize_metadata};

const EXAMPLE: &str = include_str!("../../core/fixtures/example_1.txt");

fn sentence(n: usize, shift: usize) -> String {
    const WORDS: [&str; 9] = ["trust", "in", "science", "rose", "among", "younger", "adults", "this", "year"];
    (0..n).map(|i| WORDS[(i * 7 + shift) % WORDS.len()]).collect::<Vec<_>>().join(" ")
}

fn rouge(c: &mut Criterion) {
    let mut g = c.benchmark_group("rouge_l");
    for n in [16, 128, 512] {
        let (a, b) = (sentence(n, 0), sentence(n, 3));
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |bench, _| bench.iter(|| rouge_l(black_box(&a), black_box(&b))));
    }
    g.finish();
}

fn metadata(c: &mut Criterion) {
    c.bench_function("parse_prose_metadata", |b| b.iter(|| parse_metadata(black_box(EXAMPLE)).unwrap()));
    let doc = parse_metadata(EXAMPLE).unwrap();
    let json = serialize_metadata(&doc);
    c.bench_function("parse_json_metadata", |b| b.iter(|| parse_metadata(black_box(&json)).unwrap()));
}

fn render(c: &mut Criterion) {
    let doc = parse_metadata(EXAMPLE).unwrap();
    c.bench_function("compile_layout_render", |b| {
        b.iter(|| {
            let ir = compile_metadata(black_box(&doc)).unwrap();
            layout_and_render(&ir).unwrap()
        })
    });
}

fn corpus(c: &mut Criterion) {
    let doc = parse_metadata(EXAMPLE).unwrap();
    let pairs: Vec<EvalPair> = (0..500).map(|i| EvalPair::new(format!("p{i}"), doc.clone(), doc.clone())).collect();
    c.bench_function("evaluate_corpus_500", |b| b.iter(|| evaluate_corpus(black_box(&pairs), &EvalOptions::default()).unwrap()));
}

criterion_group!(benches, rouge, metadata, render, corpus);
criterion_main!(benches);
