use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use ctaudit::analysis::stylometry_report;
use ctaudit::learners::fit;
use ctaudit::selftrain::{mask_labels, self_train, SelfTrainConfig};
use ctaudit::synth::generate_dataset;
use ctaudit::ModelKind;

fn learners(c: &mut Criterion) {
    let data = generate_dataset(42);
    let mut g = c.benchmark_group("fit");
    g.sample_size(10);
    for kind in [ModelKind::Knn, ModelKind::Logistic, ModelKind::Tree, ModelKind::Forest] {
        let spec = kind.default_spec();
        g.bench_with_input(BenchmarkId::from_parameter(kind.as_str()), &spec, |b, spec| {
            b.iter(|| fit(spec, data.matrix(), 42).unwrap())
        });
    }
    g.finish();

    let model = fit(&ModelKind::Forest.default_spec(), data.matrix(), 42).unwrap();
    c.bench_function("predict_rows/RF", |b| b.iter(|| model.predict_rows(data.matrix().rows()).unwrap()));
}

fn selftraining(c: &mut Criterion) {
    let data = generate_dataset(42);
    let split = mask_labels(&data, 0.01, 42).unwrap();
    let mut g = c.benchmark_group("self_train");
    g.sample_size(10);
    for kind in [ModelKind::Tree, ModelKind::Logistic] {
        let mut cfg = SelfTrainConfig::new(kind.default_spec());
        cfg.labeled_fraction = 0.01;
        g.bench_function(kind.as_str(), |b| {
            b.iter(|| self_train(&split.labeled, &split.unlabeled, &cfg).unwrap())
        });
    }
    g.finish();
}

fn stylometry(c: &mut Criterion) {
    let ct: Vec<String> = (0..2000).map(|i| format!("Follow me 🔥🔥 nice pic {i}!!")).collect();
    let real: Vec<String> = (0..2000)
        .map(|i| format!("What a lovely place. We went there in {i} and loved it 😍"))
        .collect();
    let ct: Vec<&str> = ct.iter().map(String::as_str).collect();
    let real: Vec<&str> = real.iter().map(String::as_str).collect();
    c.bench_function("stylometry_report/4000", |b| b.iter(|| stylometry_report(&ct, &real).unwrap()));
}

criterion_group!(benches, learners, selftraining, stylometry);
criterion_main!(benches);
