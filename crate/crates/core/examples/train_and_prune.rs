//! Train a 784-64-64-64-64-10 MLP on the bundled MNIST subset, prune it to
//! 90% sparsity, and compare the n-cut before and after pruning.
//!
//! ```text
//! python3 scripts/fetch_mnist_subset.py   # once, if data/mnist10k is missing
//! cargo run --release --example train_and_prune -- [dropout] [epochs] [prune epochs]
//! ```

use std::time::Instant;

use modgraph::netio::{find_idx_pair, load_idx};
use modgraph::spectral::{cluster_network, ClusterConfig};
use modgraph::trainer::{accuracy, train, PruneConfig, TrainConfig};
use modgraph::LayeredNetwork;

fn main() -> modgraph::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let dropout = args.first().copied().unwrap_or(0.0);
    let epochs = args.get(1).copied().unwrap_or(5.0) as usize;
    let prune_epochs = args.get(2).copied().unwrap_or(5.0) as usize;

    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/mnist10k");
    let (images, labels) = find_idx_pair(dir, "train")?;
    let all = load_idx(images, labels)?;
    let (train_set, test_set) = (all.slice(0, 8000), all.slice(8000, all.len()));
    println!("{} training and {} test examples", train_set.len(), test_set.len());

    let net = LayeredNetwork::glorot_uniform(&[784, 64, 64, 64, 64, 10], 1)?;
    let mut cfg = TrainConfig {
        epochs,
        dropout_rate: dropout,
        seed: 7,
        ..TrainConfig::default()
    };
    cfg.prune = Some(PruneConfig::cubic(prune_epochs, cfg.steps_per_epoch(train_set.len())));

    let start = Instant::now();
    let out = train(&net, &train_set, &cfg)?;
    for m in &out.metrics {
        println!(
            "epoch {:2}  loss {:.4}  train acc {:.4}  sparsity {:.3}",
            m.epoch, m.loss, m.train_acc, m.sparsity
        );
    }
    println!("trained in {:.1?}", start.elapsed());
    println!("test accuracy {:.4}", accuracy(&out.network, &test_set)?);

    let cluster_cfg = ClusterConfig::with_seed(3);
    if let Some(pre) = &out.pre_pruning {
        println!("n-cut before pruning {:.4}", cluster_network(pre, 4, &cluster_cfg)?.ncut_value);
    }
    let pruned = cluster_network(&out.network, 4, &cluster_cfg)?;
    println!(
        "n-cut after pruning  {:.4}  (cluster sizes {:?})",
        pruned.ncut_value,
        pruned.partition.cluster_sizes()
    );
    Ok(())
}
