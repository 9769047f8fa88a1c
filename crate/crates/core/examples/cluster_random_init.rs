//! Spectrally cluster freshly initialized networks and print their n-cuts.
//!
//! ```text
//! cargo run --release --example cluster_random_init -- [count] [k] [hidden width]
//! ```

use std::time::Instant;

use modgraph::spectral::{cluster_network_with_graph, ClusterConfig};
use modgraph::LayeredNetwork;

fn main() -> modgraph::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let count = args.first().copied().unwrap_or(3);
    let k = args.get(1).copied().unwrap_or(4);
    let width = args.get(2).copied().unwrap_or(256);
    let dims = [784, width, width, width, width, 10];

    for i in 0..count as u64 {
        let start = Instant::now();
        let net = LayeredNetwork::glorot_uniform(&dims, i)?;
        let (g, r) = cluster_network_with_graph(&net, k, &ClusterConfig::with_seed(i))?;
        println!(
            "net {i}: {} vertices, n-cut {:.4}, cluster sizes {:?}, eigenvalues {:?} ({:.1?})",
            g.num_vertices(),
            r.ncut_value,
            r.partition.cluster_sizes(),
            r.embedding
                .eigenvalues
                .iter()
                .map(|l| format!("{l:.4}"))
                .collect::<Vec<_>>(),
            start.elapsed()
        );
    }
    Ok(())
}
