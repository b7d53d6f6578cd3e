use criterion::{black_box, criterion_group, criterion_main, Criterion};
use pipegrid_bench::baseline_training;
use pipegrid_core::evaluation::{inner_select_many, weighted_metrics, InnerScheme, SearchData};
use pipegrid_core::learners::{train, ClassWeight, Criterion as Split, LearnerParams, LearnerSpec};
use pipegrid_core::pipeline::{enumerate_grid, prepare};
use pipegrid_core::selection::smote;
use pipegrid_core::Algorithm;

fn learners(c: &mut Criterion) {
    let (x, y, kinds) = baseline_training();
    let std = prepare(&x, &kinds).unwrap().std_view;
    let mut g = c.benchmark_group("fit");
    let cases = [
        ("svm", LearnerParams::Svm { c: 1.0, gamma: 0.01, class_weight: ClassWeight::Balanced }),
        (
            "forest_100",
            LearnerParams::Forest { n_estimators: 100, criterion: Split::Gini, max_depth: None, class_weight: ClassWeight::Unweighted },
        ),
        ("mlp_30", LearnerParams::Mlp { alpha: 0.01, hidden: vec![30] }),
    ];
    for (name, params) in cases {
        let spec = LearnerSpec { params, seed: 1 };
        g.bench_function(name, |b| b.iter(|| train(black_box(&spec), &std, &y, None).unwrap()));
    }
    g.finish();
}

fn sampling_and_metrics(c: &mut Criterion) {
    let (x, y, kinds) = baseline_training();
    let std = prepare(&x, &kinds).unwrap().std_view;
    c.bench_function("smote_k5", |b| b.iter(|| smote(black_box(&std), &y, 5, 3).unwrap()));
    let pred: Vec<u8> = y.iter().rev().copied().collect();
    c.bench_function("weighted_metrics_29", |b| b.iter(|| weighted_metrics(black_box(&y), &pred, None).unwrap()));
}

fn inner_search(c: &mut Criterion) {
    let (x, y, kinds) = baseline_training();
    let d = SearchData { x: &x, y: &y, kinds: &kinds };
    let families: Vec<_> = enumerate_grid().into_iter().filter(|f| f.classifier == Algorithm::KNN).collect();
    let mut g = c.benchmark_group("inner");
    g.sample_size(10);
    g.bench_function("knn_16_families", |b| b.iter(|| inner_select_many(&families, d, InnerScheme::default(), 7)));
    g.finish();
}

criterion_group!(benches, learners, sampling_and_metrics, inner_search);
criterion_main!(benches);
