use std::path::PathBuf;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use framescope::backends::{build_backend, BackendConfig, OraclePolicy};
use framescope::corpus::{load_dataset, load_lexicon, Dataset, LexiconVersion, Split};
use framescope::evalkit::{gold_map, run_eval, EvalInputs, RunSpec};
use framescope::promptkit::{Granularity, PromptConfig, PromptFormat};

fn mini() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/mini")
}

/// One seed over the mini train split (100 instances) with a mock that
/// sleeps per request, so the comparison reflects request concurrency.
fn bench_driver(c: &mut Criterion) {
    let lexicon = load_lexicon(&mini().join("lexicons/fn17"), LexiconVersion::Fn17).unwrap();
    let instances = load_dataset(&mini().join("datasets/fn17"), Dataset::Fn17, Split::Train, None).unwrap();
    let inputs = EvalInputs { lexicon: &lexicon, instances: &instances, train: &[], definitions: None };
    let mut group = c.benchmark_group("run_eval");
    group.sample_size(10);
    for latency_ms in [0, 2] {
        for parallelism in [1, 8] {
            let mut policy = OraclePolicy::accuracy(0.8, 1);
            policy.latency_ms = latency_ms;
            let mut backend = BackendConfig::mock(policy);
            backend.parallelism = parallelism;
            let mut spec = RunSpec::new(
                Dataset::Fn17,
                Split::Train,
                PromptConfig::new(PromptFormat::DirectQa, Granularity::NamesDefsLuDefs, 0),
                backend,
            );
            spec.seeds = vec![1];
            let oracle = build_backend(&spec.backend, gold_map(&spec, &instances)).unwrap();
            let mode = if parallelism == 1 { "sequential" } else { "parallel8" };
            group.bench_with_input(BenchmarkId::new(mode, format!("{latency_ms}ms")), &spec, |b, spec| {
                b.iter(|| run_eval(spec, &inputs, oracle.as_ref(), None).unwrap().mean_accuracy)
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_driver);
criterion_main!(benches);
