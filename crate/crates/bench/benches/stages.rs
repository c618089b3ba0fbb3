use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;
use varprune::{build_mask, compensate, Criterion as Score, EcMode, PruneSettings, SparsitySpec};
use varprune_bench::{layer, SIZES};

fn settings(criterion: Score) -> PruneSettings {
    PruneSettings {
        criterion,
        ..PruneSettings::default()
    }
}

fn scoring(c: &mut Criterion) {
    let mut group = c.benchmark_group("scoring");
    group.sample_size(10);
    for n in SIZES {
        let l = layer(n, 1);
        group.throughput(Throughput::Elements((n * n) as u64));
        for criterion in [Score::Magnitude, Score::Wanda, Score::Cvr] {
            let s = settings(criterion);
            group.bench_with_input(BenchmarkId::new(criterion.to_string(), n), &l, |b, l| {
                b.iter(|| black_box(l.scores(&s)))
            });
        }
    }
    group.finish();
}

fn masking(c: &mut Criterion) {
    let mut group = c.benchmark_group("masking");
    group.sample_size(10);
    for n in SIZES {
        let l = layer(n, 2);
        let scores = l.scores(&settings(Score::Cvr));
        group.throughput(Throughput::Elements((n * n) as u64));
        for spec in [
            SparsitySpec::Unstructured { ratio: 0.5 },
            SparsitySpec::Structured { n: 2, m: 4 },
        ] {
            let group_mode = PruneSettings::default().group;
            group.bench_with_input(BenchmarkId::new(spec.to_string(), n), &scores, |b, s| {
                b.iter(|| black_box(build_mask(s, spec, group_mode).unwrap()))
            });
        }
    }
    group.finish();
}

fn energy(c: &mut Criterion) {
    let mut group = c.benchmark_group("compensation");
    group.sample_size(10);
    for n in SIZES {
        let l = layer(n, 3);
        let s = settings(Score::Cvr);
        let mask = l.mask(&s);
        group.throughput(Throughput::Elements((n * n) as u64));
        for mode in [EcMode::Off, EcMode::Col, EcMode::On] {
            group.bench_with_input(BenchmarkId::new(mode.to_string(), n), &mask, |b, m| {
                b.iter(|| black_box(compensate(&l.weights, m, &s.ec_cfg, mode).unwrap()))
            });
        }
    }
    group.finish();
}

criterion_group!(stages, scoring, masking, energy);
criterion_main!(stages);
