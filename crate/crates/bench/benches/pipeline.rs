use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion, Throughput};
use pupilclean_bench::synthetic_recording;
use pupilclean_core::series::SeriesChannel;
use pupilclean_core::{apply_chain, envelope, read_compressed, write_compressed, FilterConfig};
use std::hint::black_box;

const RATE: f64 = 300.0;

fn chain(c: &mut Criterion) {
    let chain = FilterConfig::recommended_chain();
    let mut group = c.benchmark_group("recommended_chain");
    group.sample_size(10);
    for n in [18_000, 180_000] {
        let rec = synthetic_recording(n, RATE);
        group.throughput(Throughput::Elements(n as u64));
        group.bench_with_input(BenchmarkId::from_parameter(n), &rec, |b, rec| {
            b.iter(|| apply_chain(black_box(rec), &chain).unwrap())
        });
    }
    group.finish();
}

fn single_filters(c: &mut Criterion) {
    let rec = synthetic_recording(180_000, RATE);
    let mut group = c.benchmark_group("filter");
    group.sample_size(10);
    for filter in FilterConfig::recommended_chain() {
        let name = format!("{:?}", filter.kind());
        let steps = vec![FilterConfig::LinearInterpolation, filter];
        group.bench_function(name, |b| {
            b.iter_batched(|| rec.clone(), |r| apply_chain(&r, &steps).unwrap(), BatchSize::LargeInput)
        });
    }
    group.finish();
}

fn codec(c: &mut Criterion) {
    let rec = synthetic_recording(180_000, RATE);
    let bytes = write_compressed(&rec);
    let mut group = c.benchmark_group("codec");
    group.throughput(Throughput::Bytes(bytes.len() as u64));
    group.bench_function("write", |b| b.iter(|| write_compressed(black_box(&rec))));
    group.bench_function("read", |b| b.iter(|| read_compressed(black_box(&bytes), Some(RATE)).unwrap()));
    group.finish();
}

fn envelopes(c: &mut Criterion) {
    let rec = synthetic_recording(180_000, RATE);
    let mut group = c.benchmark_group("envelope");
    for points in [200, 2000, 20_000] {
        group.bench_with_input(BenchmarkId::from_parameter(points), &points, |b, &points| {
            b.iter(|| envelope(&rec, SeriesChannel::PupilLeft, None, None, points).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, chain, single_filters, codec, envelopes);
criterion_main!(benches);
