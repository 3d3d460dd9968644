use criterion::{criterion_group, criterion_main, Criterion};
use mrpi_bench::disk_image;
use mrpi_core::{
    canny_edges, edge_indicator, evolve_step, init_dense_random, postprocess_pipeline,
    run_multi_rpi, CannyParams, DrlseParams, RpiConfig, ThresholdBand,
};

fn bench_evolve_step(c: &mut Criterion) {
    let img = disk_image(128, 40.0);
    let g = edge_indicator(&img, 1.5).unwrap();
    let params = DrlseParams::default();
    let phi = init_dense_random(128, 128, 0.01, 7).unwrap();
    c.bench_function("evolve_step_128", |b| {
        b.iter(|| evolve_step(&phi, &g, &params).unwrap())
    });
}

fn bench_full_pipeline(c: &mut Criterion) {
    let img = disk_image(64, 20.0);
    let cfg = RpiConfig {
        m: 5,
        seed: 3,
        ..RpiConfig::default()
    };
    c.bench_function("mrpi_pipeline_64", |b| {
        b.iter(|| {
            let phi_bar = run_multi_rpi(&img, &cfg).unwrap();
            postprocess_pipeline(&phi_bar, ThresholdBand::default(), 3).unwrap()
        })
    });
}

fn bench_canny(c: &mut Criterion) {
    let img = disk_image(128, 40.0);
    let params = CannyParams::default();
    c.bench_function("canny_128", |b| {
        b.iter(|| canny_edges(&img, &params).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = bench_evolve_step, bench_full_pipeline, bench_canny
}
criterion_main!(benches);
