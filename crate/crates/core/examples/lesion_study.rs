//! Train and prune a small MNIST network, cluster it into 10 modules, then
//! lesion each sub-module alone and important pairs together.
//!
//! ```text
//! cargo run --release --example lesion_study -- [n null] [workers]
//! ```

use modgraph::lesion::{
    derive_dependency_graph, double_lesion_study, important_pairs, single_lesion_study, write_dot,
    write_single_lesion_csv, Importance, LesionConfig,
};
use modgraph::netio::{find_idx_pair, load_idx};
use modgraph::spectral::{cluster_network_with_graph, ClusterConfig};
use modgraph::trainer::{accuracy, train, PruneConfig, TrainConfig};
use modgraph::LayeredNetwork;

fn main() -> modgraph::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let n_null = args.first().copied().unwrap_or(50);
    let workers = args.get(1).copied().unwrap_or(4);

    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/mnist10k");
    let (images, labels) = find_idx_pair(dir, "train")?;
    let all = load_idx(images, labels)?;
    let (train_set, test_set) = (all.slice(0, 8000), all.slice(8000, all.len()));

    let net = LayeredNetwork::glorot_uniform(&[784, 64, 64, 64, 64, 10], 2)?;
    let mut cfg = TrainConfig {
        epochs: 5,
        seed: 5,
        ..TrainConfig::default()
    };
    cfg.prune = Some(PruneConfig::cubic(5, cfg.steps_per_epoch(train_set.len())));
    let trained = train(&net, &train_set, &cfg)?.network;
    println!("test accuracy {:.4}", accuracy(&trained, &test_set)?);

    let (g, clustering) = cluster_network_with_graph(&trained, 10, &ClusterConfig::with_seed(1))?;
    println!("n-cut with 10 clusters {:.4}", clustering.ncut_value);

    let mut single = LesionConfig::single(9);
    single.n_null = n_null;
    single.workers = workers;
    let outcomes = single_lesion_study(&trained, &g, &clustering.partition, &test_set, &single)?;
    write_single_lesion_csv(&outcomes, std::io::stdout().lock()).map_err(|e| modgraph::Error::io("stdout", e))?;
    let important = outcomes
        .iter()
        .filter(|o| o.classification == Importance::Important)
        .count();
    println!("{important} of {} sub-modules are important", outcomes.len());

    let mut double = LesionConfig::double(9);
    double.workers = workers;
    let pairs = important_pairs(&outcomes);
    let table: Vec<_> = double_lesion_study(&trained, &g, &pairs, &test_set, &double)?
        .into_iter()
        .map(|p| p.flags)
        .collect();
    let edges = derive_dependency_graph(&table)?;
    let mut nodes: Vec<_> = pairs.iter().flat_map(|(a, b)| [a.id(), b.id()]).collect();
    nodes.sort();
    nodes.dedup();
    write_dot(&nodes, &edges, std::io::stdout().lock()).map_err(|e| modgraph::Error::io("stdout", e))?;
    Ok(())
}
