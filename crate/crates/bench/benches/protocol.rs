// SPDX-License-Identifier: Apache-2.0

use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};
use pepsi_bench::{pair_for, populated_table, rng};
use pepsi_core::node::{make_report, Measurement};
use pepsi_core::pairing::{hash_to_g1, hash_to_g2, pair};

const LABEL: &[&str] = &["Temp", "Irvine, CA"];

fn report_generation(c: &mut Criterion) {
    let (node, _) = pair_for(LABEL);
    let m = Measurement::new(b"74 F".to_vec()).unwrap();
    let mut r = rng(3);
    let mut g = c.benchmark_group("make_report");
    g.bench_function("cold", |b| {
        b.iter(|| make_report(black_box(node.key()), &m, &mut r))
    });
    g.bench_function("warm", |b| b.iter(|| node.report(black_box(&m), &mut r)));
    g.finish();
}

fn pairing(c: &mut Criterion) {
    let p = hash_to_g1(b"bench", b"bench-g1");
    let q = hash_to_g2(b"bench", b"bench-g2");
    c.bench_function("pair", |b| b.iter(|| pair(black_box(&p), black_box(&q))));
    c.bench_function("hash_to_g2", |b| b.iter(|| hash_to_g2(black_box(b"bench"), b"bench-g2")));
}

fn matching(c: &mut Criterion) {
    let (node, querier) = pair_for(LABEL);
    let frame = node.report_frame(b"74 F", &mut rng(4)).unwrap();
    let mut g = c.benchmark_group("match_report");
    for n in [10_000usize, 100_000] {
        let table = populated_table(n, &querier);
        g.bench_function(format!("{n}_subscriptions"), |b| {
            b.iter_batched(
                || frame.clone(),
                |f| table.match_report(&f).unwrap(),
                BatchSize::SmallInput,
            )
        });
    }
    g.finish();
}

criterion_group!(benches, report_generation, pairing, matching);
criterion_main!(benches);
