use criterion::{criterion_group, criterion_main, Criterion};
use fairmtl_core::data::{synth_generate, SynthConfig};
use fairmtl_core::mtl::{backward, train};
use fairmtl_core::pipeline::{network_config, Architecture};
use fairmtl_core::{MtlNetwork, TaskWeights, YotoConfig};

fn network(c: &mut Criterion) {
    let ds = synth_generate(&SynthConfig {
        n: 2000,
        ..SynthConfig::default()
    })
    .unwrap();
    let yoto = YotoConfig {
        epochs: 1,
        ..YotoConfig::default()
    };
    let net = MtlNetwork::init(network_config(&ds, &Architecture::default(), &yoto, 0)).unwrap();
    let lambda = TaskWeights::new(vec![1.0, 0.5]).unwrap();
    let batch = net.encode_batch(&ds, &(0..64).collect::<Vec<_>>()).unwrap();

    c.bench_function("predict_dataset/2000", |b| b.iter(|| net.predict_dataset(&ds, &lambda).unwrap()));
    c.bench_function("backward/batch64", |b| b.iter(|| backward(&net, &batch, &lambda).unwrap()));
    let mut group = c.benchmark_group("train");
    group.sample_size(10);
    group.bench_function("epoch/2000", |b| b.iter(|| train(&net, &ds, &yoto).unwrap()));
    group.finish();
}

criterion_group!(benches, network);
criterion_main!(benches);
