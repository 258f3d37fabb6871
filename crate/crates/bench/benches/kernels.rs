use std::hint::black_box;

use advsample::adversary::{uniform_stream, BinarySearchAdversary, IidWeights};
use advsample::cover::{noisy_labels, run_dynamic_set, run_mw, Rational};
use advsample::game::{app_error, sweep};
use advsample::sampler::make_sampler;
use advsample::{
    build_family, run_game, AdversaryKind, AdversarySpec, ExperimentConfig, FamilySpec, Limits, Littlestone, Metric,
    SamplerScheme, SchemeKind, Thresholds,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn ldim(c: &mut Criterion) {
    let mut group = c.benchmark_group("ldim");
    for spec in ["thresholds:63", "powerset:6", "halflines:5:1"] {
        let family = build_family(&FamilySpec::parse(spec).unwrap(), 0).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(spec), &family, |b, f| {
            b.iter(|| {
                let mut engine = Littlestone::new(f).unwrap();
                let root = engine.root();
                black_box(engine.ldim(root))
            })
        });
    }
    group.finish();
}

fn dynamic_set(c: &mut Criterion) {
    let family = build_family(&FamilySpec::Thresholds { m: 63 }, 0).unwrap();
    let stream = uniform_stream(63, 512, 7).unwrap();
    let index: Vec<usize> = (0..512).step_by(97).collect();
    let mut engine = Littlestone::new(&family).unwrap();
    c.bench_function("dynamic_set/thresholds:63/n=512", |b| {
        b.iter(|| black_box(run_dynamic_set(&mut engine, &index, &stream).unwrap()))
    });
}

fn mw(c: &mut Criterion) {
    let family = build_family(&FamilySpec::Thresholds { m: 63 }, 0).unwrap();
    let mut group = c.benchmark_group("run_mw");
    group.sample_size(10);
    for rounds in [256usize, 1024] {
        let labeled = noisy_labels(&family, rounds, Rational::new(1, 10), 3).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(rounds), &labeled, |b, l| {
            b.iter(|| {
                let mut engine = Littlestone::new(&family).unwrap();
                black_box(run_mw(&mut engine, l, None, 5, &Limits::default()).unwrap())
            })
        });
    }
    group.finish();
}

fn bsearch_app_error(c: &mut Criterion) {
    let n = 4096;
    let scheme = SamplerScheme::new(SchemeKind::Uniform { k: 256 }, n).unwrap();
    c.bench_function("app_error/bsearch/n=4096", |b| {
        b.iter(|| {
            let mut sampler = make_sampler(scheme, 11).unwrap();
            let mut adv = BinarySearchAdversary::new(n);
            let tr = run_game(&mut sampler, &mut adv, n).unwrap();
            black_box(app_error(&Thresholds, &tr))
        })
    });
}

fn sweep_small(c: &mut Criterion) {
    let n = 64;
    let config = ExperimentConfig {
        family: Some(FamilySpec::Powerset { m: 4 }),
        sampler: SchemeKind::Reservoir { k: 16 },
        adversary: AdversarySpec::new(
            AdversaryKind::Iid {
                weights: IidWeights::Uniform { domain: 4 },
                seed: 1,
            },
            n,
        ),
        n,
        trials: 200,
        seed: 9,
        metrics: vec![Metric::App, Metric::Disc],
        eps: Some(0.25),
        net: None,
        jobs: Some(1),
        record_timing: false,
    };
    c.bench_function("sweep/powerset:4/res:k=16/200", |b| b.iter(|| black_box(sweep(&config).unwrap())));
}

criterion_group!(benches, ldim, dynamic_set, mw, bsearch_app_error, sweep_small);
criterion_main!(benches);
