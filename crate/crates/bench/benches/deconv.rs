use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use revdeconv::{deconv_layer, deconv_reference};
use revdeconv_bench::{bench_layer, pruned_weights, FRAC_BITS};

/// Scatter-style reference versus the reverse-loop kernel on one layer.
fn kernel_vs_reference(c: &mut Criterion) {
    let (params, w, x) = bench_layer();
    let mut group = c.benchmark_group("deconv");
    group.bench_function("reference_scatter", |b| {
        b.iter(|| deconv_reference(black_box(&x), &w, &params, FRAC_BITS).unwrap())
    });
    group.bench_function("reverse_loop", |b| {
        b.iter(|| {
            deconv_layer(
                black_box(&x),
                &w,
                &params,
                params.out_height,
                FRAC_BITS,
                false,
                1,
            )
            .unwrap()
        })
    });
    group.finish();
}

/// Output tiling factor sweep: smaller tiles redo more halo work.
fn tiling_factors(c: &mut Criterion) {
    let (params, w, x) = bench_layer();
    let mut group = c.benchmark_group("tiling");
    for t_oh in [4usize, 7, 14, 28] {
        group.bench_with_input(BenchmarkId::from_parameter(t_oh), &t_oh, |b, &t| {
            b.iter(|| deconv_layer(black_box(&x), &w, &params, t, FRAC_BITS, false, 1).unwrap())
        });
    }
    group.finish();
}

/// Zero-skipping on dense weights is pure overhead; on 90%-pruned weights
/// it should win. Both cases produce bit-identical outputs either way.
fn zero_skipping(c: &mut Criterion) {
    let (params, w, x) = bench_layer();
    let sparse = pruned_weights(&w);
    let mut group = c.benchmark_group("zero_skip");
    group.bench_function("dense_off", |b| {
        b.iter(|| {
            deconv_layer(black_box(&x), &w, &params, params.out_height, FRAC_BITS, false, 1)
                .unwrap()
        })
    });
    group.bench_function("pruned_off", |b| {
        b.iter(|| {
            deconv_layer(
                black_box(&x),
                &sparse,
                &params,
                params.out_height,
                FRAC_BITS,
                false,
                1,
            )
            .unwrap()
        })
    });
    group.bench_function("pruned_on", |b| {
        b.iter(|| {
            deconv_layer(
                black_box(&x),
                &sparse,
                &params,
                params.out_height,
                FRAC_BITS,
                true,
                1,
            )
            .unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, kernel_vs_reference, tiling_factors, zero_skipping);
criterion_main!(benches);
