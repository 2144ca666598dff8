use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use geomprobe_bench::{quantised_lengths, rim_points};
use geomprobe_core::circle_fit::fit_circle;
use geomprobe_core::constructs::{builtin_catalog, run_battery, scan_values};
use geomprobe_core::nullmodel::{estimate_fpr, HitRule, NullPrior};
use geomprobe_core::survey::{Source, SurveySite};

fn circle_fit(c: &mut Criterion) {
    let mut group = c.benchmark_group("fit_circle");
    for n in [20, 200, 2000] {
        let set = rim_points(n, 300.0, 3.0);
        group.bench_with_input(BenchmarkId::from_parameter(n), &set, |b, s| {
            b.iter(|| fit_circle(black_box(s)).unwrap())
        });
    }
    group.finish();
}

fn battery(c: &mut Criterion) {
    let site = SurveySite::sun_temple();
    let catalog = builtin_catalog();
    c.bench_function("run_battery", |b| {
        b.iter(|| run_battery(black_box(&site), &catalog, 0.05, &Source::ALL).unwrap())
    });
}

fn quantogram(c: &mut Criterion) {
    let lengths = quantised_lengths(18, 30.5);
    c.bench_function("quantogram_scan_2000", |b| {
        b.iter(|| scan_values(black_box(&lengths), 10.0, 60.0, 2000).unwrap())
    });
}

fn null_model(c: &mut Criterion) {
    let prior = NullPrior::default();
    let catalog = builtin_catalog();
    let site = SurveySite::sun_temple();
    let mut group = c.benchmark_group("estimate_fpr");
    group.sample_size(10);
    for threads in [1, 0] {
        group.bench_with_input(
            BenchmarkId::new("1000_trials_threads", threads),
            &threads,
            |b, &t| {
                b.iter(|| {
                    estimate_fpr(&prior, &catalog, &site, HitRule::default(), 1000, 42, t).unwrap()
                })
            },
        );
    }
    group.finish();
}

criterion_group!(benches, circle_fit, battery, quantogram, null_model);
criterion_main!(benches);
