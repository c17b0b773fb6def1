//! Criterion benches comparing the rayon data-parallel kernels against the
//! sequential fallback on the two hot loops: corpus-wide sandwich
//! certification and Monte Carlo trial batches.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use robustht::adversary::{run_oblivious_trial, TestSpec};
use robustht::dist::Model;
use robustht::exec;
use robustht::experiments::{random_corpus, sandwich_certify};
use robustht::lfd::build_lfds;

fn bench_sandwich(c: &mut Criterion) {
    let corpus = random_corpus(64, 2024);
    let mut group = c.benchmark_group("sandwich_certify");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("parallel", corpus.len()), |b| {
        b.iter(|| sandwich_certify(black_box(&corpus), 1.0).unwrap())
    });
    group.bench_function(BenchmarkId::new("sequential", corpus.len()), |b| {
        b.iter(|| {
            // Same per-instance work, driven by the sequential helper.
            let reports = exec::map_collect_seq(corpus.len(), |i| {
                sandwich_certify(std::slice::from_ref(&corpus[i]), 1.0).unwrap()
            });
            black_box(reports.len())
        })
    });
    group.finish();
}

fn bench_trials(c: &mut Criterion) {
    let p = robustht::dist::Dist::new(vec![0.3, 0.66, 0.04]).unwrap();
    let q = robustht::dist::Dist::new(vec![0.5, 0.5, 0.0]).unwrap();
    let lfd = build_lfds(&p, &q, 0.02, Model::Tv).unwrap();
    let test = TestSpec::clipped_lr(lfd.clone());
    let mut group = c.benchmark_group("monte_carlo_trials");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| run_oblivious_trial(&lfd.p_star, &lfd.q_star, &test, 400, 500, 7).unwrap())
    });
    group.bench_function("sequential", |b| {
        b.iter(|| {
            // One-trial batches force the fan-out down to a single worker
            // item each, approximating the sequential path while keeping
            // the identical per-trial arithmetic.
            let mut acc = 0.0;
            for t in 0..500u64 {
                let r =
                    run_oblivious_trial(&lfd.p_star, &lfd.q_star, &test, 400, 1, 7 ^ t).unwrap();
                acc += r.type1 + r.type2;
            }
            black_box(acc)
        })
    });
    group.finish();
}

criterion_group!(benches, bench_sandwich, bench_trials);
criterion_main!(benches);
