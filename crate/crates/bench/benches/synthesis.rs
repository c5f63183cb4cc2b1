use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use rpl_core::synthesis::{synthesize_all, EntryMode};
use rpl_core::{build_language_graph, builtin_catalog, export_dot, Capability, DesignQuery, EdgeOverlay, FaultModelClass};

fn graph_build(c: &mut Criterion) {
    let catalog = builtin_catalog();
    c.bench_function("build_language_graph", |b| {
        b.iter(|| build_language_graph(black_box(&catalog), &EdgeOverlay::empty()).unwrap())
    });
    let g = build_language_graph(&catalog, &EdgeOverlay::empty()).unwrap();
    c.bench_function("export_dot", |b| b.iter(|| export_dot(black_box(&g))));
}

fn synthesis(c: &mut Criterion) {
    let catalog = builtin_catalog();
    let g = build_language_graph(&catalog, &EdgeOverlay::empty()).unwrap();
    let queries = [
        ("failure-recovery", DesignQuery::new([FaultModelClass::Failure], [Capability::Recovery])),
        (
            "error-detect-recover",
            DesignQuery::new([FaultModelClass::Error], [Capability::Detection, Capability::Recovery]),
        ),
        ("everything", DesignQuery::new(FaultModelClass::ALL, Capability::ALL)),
    ];
    let mut group = c.benchmark_group("synthesize_all");
    for (name, q) in &queries {
        for mode in [EntryMode::FaultModelFirst, EntryMode::CapabilityFirst] {
            let q = q.clone().with_mode(mode);
            group.bench_with_input(BenchmarkId::new(*name, format!("{mode:?}")), &q, |b, q| {
                b.iter(|| synthesize_all(&g, &catalog, q))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, graph_build, synthesis);
criterion_main!(benches);
