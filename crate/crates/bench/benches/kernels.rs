//! Benchmarks for the hot kernels: continued fractions, blowup walks,
//! subdivision search, quotients, and template recognition.

use criterion::{black_box, criterion_group, criterion_main, Criterion};

use skelred::annuli::{blowup_resolution, minimal_regular_subdivision, FractionalAnnulus};
use skelred::elliptic::{graph_from_type, type_from_graph, KodairaType};
use skelred::exactmath::{cf_expand, Rational};
use skelred::galois::GaloisSkeleton;

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n, d).unwrap()
}

fn bench_cf(c: &mut Criterion) {
    // consecutive Fibonacci numbers maximize the expansion length
    let worst = q(10946, 6765);
    c.bench_function("cf_expand fibonacci 10946/6765", |b| {
        b.iter(|| cf_expand(black_box(&worst)))
    });
}

fn bench_blowups(c: &mut Criterion) {
    let target = q(355, 113);
    c.bench_function("blowup_resolution 355/113", |b| {
        b.iter(|| blowup_resolution(black_box(&target)).unwrap())
    });
}

fn bench_subdivision(c: &mut Criterion) {
    let ann = FractionalAnnulus::new(q(22, 7), q(0, 1)).unwrap();
    c.bench_function("minimal_regular_subdivision {22/7, 0}", |b| {
        b.iter(|| minimal_regular_subdivision(black_box(&ann)).unwrap())
    });
}

fn large_cycle_with_reflection(n: usize) -> GaloisSkeleton {
    let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let mut sk = GaloisSkeleton::new(
        names.iter().map(|s| (s.as_str(), 0)).collect(),
        (0..n)
            .map(|i| (names[i].as_str(), names[(i + 1) % n].as_str()))
            .collect(),
    )
    .unwrap();
    sk.set_group(vec!["1", "s"], vec![vec![0, 1], vec![1, 0]]).unwrap();
    let vmap: Vec<(String, String)> =
        (0..n).map(|v| (names[v].clone(), names[(n - v) % n].clone())).collect();
    sk.set_action(
        "s",
        vmap.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect(),
        (0..n).map(|e| (e, (2 * n - e - 1) % n, true)).collect(),
    )
    .unwrap();
    sk
}

fn bench_quotient(c: &mut Criterion) {
    let sk = large_cycle_with_reflection(200);
    c.bench_function("quotient 200-cycle with reflection", |b| {
        b.iter(|| black_box(&sk).quotient().unwrap())
    });
}

fn bench_recognition(c: &mut Criterion) {
    let g = graph_from_type(&KodairaType::IIstar).unwrap();
    c.bench_function("type_from_graph II*", |b| {
        b.iter(|| type_from_graph(black_box(&g)).unwrap())
    });
}

criterion_group!(
    benches,
    bench_cf,
    bench_blowups,
    bench_subdivision,
    bench_quotient,
    bench_recognition
);
criterion_main!(benches);
