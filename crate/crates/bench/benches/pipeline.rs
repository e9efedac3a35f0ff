use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kgr_bench::{random_vectors, synthetic_graph};
use kgr_core::hig::build_document_graph;
use kgr_core::providers::mock::MockEmbedder;
use kgr_core::{bleu, retrieve, rouge_l, EmbeddingProvider, RetrievalParams, Strategy};
use std::hint::black_box;

const DIM: usize = 64;

fn document_graph(c: &mut Criterion) {
    let mut group = c.benchmark_group("document_graph");
    group.sample_size(10);
    for docs in [200, 1000] {
        let vectors = random_vectors(7, docs, DIM);
        group.bench_with_input(BenchmarkId::from_parameter(docs), &vectors, |b, v| {
            b.iter(|| build_document_graph(black_box(v), 3).unwrap())
        });
    }
    group.finish();
}

fn retrieval(c: &mut Criterion) {
    let embed = MockEmbedder::with_dimension(3, DIM);
    let graph = synthetic_graph(11, 2000, 5, DIM, 3, &embed.identity());
    let mut group = c.benchmark_group("retrieve");
    for strategy in [Strategy::OneHop, Strategy::Attentive, Strategy::MultiHop { hops: 3 }] {
        let params = RetrievalParams {
            n: 3,
            t: 30,
            lambda: 0.1,
            strategy,
        };
        group.bench_function(strategy.name(), |b| {
            b.iter(|| retrieve(black_box("where was the composer born"), &graph, &params, &embed).unwrap())
        });
    }
    group.finish();
}

fn metrics(c: &mut Criterion) {
    let pred = "the film was scored by a composer who also worked on several later sequels in the series";
    let gold = ["the score of the film was written by the composer who returned for the sequels"];
    c.bench_function("bleu", |b| b.iter(|| bleu(black_box(pred), &gold)));
    c.bench_function("rouge_l", |b| b.iter(|| rouge_l(black_box(pred), &gold)));
}

criterion_group!(benches, document_graph, retrieval, metrics);
criterion_main!(benches);
