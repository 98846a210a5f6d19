use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use nnlab_bench::random_stream;
use nnlab_core::cesaro::{CesaroLadder, LadderConfig, Mode};
use nnlab_core::words::Block;

fn pushes(c: &mut Criterion) {
    let mut group = c.benchmark_group("ladder push");
    group.sample_size(10);
    let blocks: Vec<Block> = (1..=3).map(|d| Block::new(vec![d]).unwrap()).collect();
    for len in [500usize, 2000] {
        let stream = random_stream(1, len, 3);
        for (name, mode) in [("exact", Mode::Exact), ("float", Mode::Float)] {
            group.bench_with_input(BenchmarkId::new(name, len), &stream, |b, stream| {
                b.iter(|| {
                    let config = LadderConfig::new(1, 3, mode).exact_cap(len).track(blocks.iter().cloned());
                    let mut ladder = CesaroLadder::new(config).unwrap();
                    ladder.push_word(stream).unwrap();
                    black_box(ladder.value_f64(&blocks[0], 3).unwrap())
                })
            });
        }
    }
    group.finish();
}

fn exact_values(c: &mut Criterion) {
    let stream = random_stream(2, 2000, 3);
    let blocks: Vec<Block> = (1..=3).map(|d| Block::new(vec![d]).unwrap()).collect();
    let config = LadderConfig::new(1, 3, Mode::Exact).track(blocks.iter().cloned());
    let mut ladder = CesaroLadder::new(config).unwrap();
    ladder.push_word(&stream).unwrap();
    c.bench_function("exact level-3 value at n = 2000", |b| b.iter(|| black_box(ladder.value(&blocks[1], 3).unwrap())));
}

criterion_group!(benches, pushes, exact_values);
criterion_main!(benches);
