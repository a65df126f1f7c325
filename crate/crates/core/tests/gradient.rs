//! Analytic gradients against central finite differences.

use fairmtl_core::data::{Dataset, TaskColumn};
use fairmtl_core::mtl::{backward, Activation, HeadConfig, LossKind, MtlNetwork, NetworkConfig, TaskWeights};
use fairmtl_core::{GroupLabel, TaskKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-5;

fn random_dataset(rng: &mut ChaCha8Rng, n: usize, d: usize, kinds: &[TaskKind]) -> Dataset {
    let features = (0..n * d).map(|_| rng.random_range(-2.0..2.0)).collect();
    let mut groups: Vec<GroupLabel> = (0..n).map(|_| GroupLabel(rng.random_range(0..3))).collect();
    groups[0] = GroupLabel(0);
    groups[1] = GroupLabel(1);
    let tasks = kinds
        .iter()
        .enumerate()
        .map(|(t, &k)| {
            let values = (0..n)
                .map(|_| match k {
                    TaskKind::Regression => rng.random_range(-3.0..3.0),
                    TaskKind::BinaryScore => f64::from(rng.random_bool(0.5)),
                })
                .collect();
            let present = (0..n).map(|_| rng.random_bool(0.8)).collect();
            TaskColumn::new(format!("y{t}"), k, values, present).unwrap()
        })
        .collect();
    Dataset::new(d, features, groups, tasks).unwrap()
}

fn check(cfg: NetworkConfig, data_seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(data_seed);
    let kinds: Vec<TaskKind> = cfg.heads.iter().map(|h| h.kind).collect();
    let ds = random_dataset(&mut rng, 12, cfg.n_features, &kinds);
    let mut net = MtlNetwork::init(cfg).unwrap();
    // move FiLM parameters off their neutral initial values
    for (_, block) in net.params.blocks_mut() {
        block.iter_mut().for_each(|v| *v += rng.random_range(-0.3..0.3));
    }
    let lambda = TaskWeights::new((0..kinds.len()).map(|_| rng.random_range(0.2..3.0)).collect()).unwrap();
    let idx: Vec<usize> = (0..ds.len()).collect();
    let batch = net.encode_batch(&ds, &idx).unwrap();
    let (_, grads) = backward(&net, &batch, &lambda).unwrap();

    let names: Vec<String> = grads.blocks().iter().map(|(n, _)| n.clone()).collect();
    for (b, name) in names.iter().enumerate() {
        let analytic = grads.blocks()[b].1.to_vec();
        for (k, &a) in analytic.iter().enumerate() {
            let orig = net.params.blocks()[b].1[k];
            net.params.blocks_mut()[b].1[k] = orig + H;
            let up = net.batch_loss(&batch, &lambda).unwrap();
            net.params.blocks_mut()[b].1[k] = orig - H;
            let down = net.batch_loss(&batch, &lambda).unwrap();
            net.params.blocks_mut()[b].1[k] = orig;
            let numeric = (up - down) / (2.0 * H);
            let scale = a.abs().max(numeric.abs());
            if scale < 1e-10 {
                continue;
            }
            let rel = (a - numeric).abs() / scale;
            assert!(rel < 1e-4, "{name}[{k}]: analytic {a}, numeric {numeric}, rel {rel}");
        }
    }
}

#[test]
fn two_task_tanh() {
    check(
        NetworkConfig {
            n_features: 3,
            groups: vec![GroupLabel(0), GroupLabel(1), GroupLabel(2)],
            hidden: vec![5, 4],
            repr_dim: 3,
            heads: vec![
                HeadConfig::for_task(TaskKind::Regression),
                HeadConfig::for_task(TaskKind::BinaryScore),
            ],
            activation: Activation::Tanh,
            lambda_center: 1.05,
            seed: 11,
        },
        1,
    );
}

#[test]
fn single_head_no_hidden() {
    check(
        NetworkConfig {
            n_features: 4,
            groups: vec![GroupLabel(0), GroupLabel(1), GroupLabel(2)],
            hidden: vec![],
            repr_dim: 6,
            heads: vec![HeadConfig::for_task(TaskKind::Regression)],
            activation: Activation::Tanh,
            lambda_center: 0.5,
            seed: 12,
        },
        2,
    );
}

#[test]
fn cross_entropy_score_heads() {
    let mut ce = HeadConfig::for_task(TaskKind::BinaryScore);
    ce.loss = LossKind::CrossEntropy;
    check(
        NetworkConfig {
            n_features: 2,
            groups: vec![GroupLabel(0), GroupLabel(1), GroupLabel(2)],
            hidden: vec![7],
            repr_dim: 4,
            heads: vec![HeadConfig::for_task(TaskKind::Regression), ce, HeadConfig::for_task(TaskKind::BinaryScore)],
            activation: Activation::Tanh,
            lambda_center: 2.0,
            seed: 13,
        },
        3,
    );
}
