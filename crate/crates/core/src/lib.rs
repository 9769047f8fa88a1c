//! Spectral clusterability analysis for multi-layer perceptrons.
//!
//! A trained MLP is viewed as a weighted undirected graph whose vertices are
//! neurons (inputs and logits included) and whose edge weights are absolute
//! connection weights. The graph is partitioned by normalized spectral
//! clustering and scored by its normalized cut (n-cut); lower is more modular.
//!
//! The crate is organised by pipeline stage:
//!
//! | module        | purpose                                                        |
//! |---------------|----------------------------------------------------------------|
//! | [`netio`]     | networks, the `.mg` archive format, IDX and random datasets    |
//! | [`graph`]     | network → graph, volume, cut weight, n-cut, stub sampling       |
//! | [`spectral`]  | normalized Laplacian, k smallest eigenpairs, k-means, pipeline  |
//! | [`nullmodel`] | weight shuffles, permutation p-values, Cohen's d                |
//! | [`trainer`]   | MLP forward/backward, Adam, dropout, magnitude pruning          |
//! | [`lesion`]    | single/double lesion studies and sub-module dependency graphs   |
//! | [`cli`]       | the subcommands behind the `modgraph` binary                    |
//!
//! ```no_run
//! use modgraph::netio::LayeredNetwork;
//! use modgraph::spectral::{cluster_network, ClusterConfig};
//!
//! let net = LayeredNetwork::glorot_uniform(&[784, 256, 256, 256, 256, 10], 7).unwrap();
//! let result = cluster_network(&net, 4, &ClusterConfig::with_seed(1)).unwrap();
//! println!("n-cut = {:.3}", result.ncut_value);
//! ```

pub mod cli;
pub mod error;
pub mod graph;
pub mod lesion;
pub mod netio;
pub mod nullmodel;
pub mod seed;
pub mod spectral;
pub mod trainer;

pub use error::{Error, Result};
pub use graph::{network_to_graph, ncut, Partition, WeightedGraph};
pub use netio::{Dataset, LayeredNetwork};
pub use spectral::{cluster_network, ClusterConfig, ClusteringResult};
