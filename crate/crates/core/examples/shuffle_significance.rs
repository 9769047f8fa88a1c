//! Compare the n-cut of a planted-module network with shuffled copies of it.
//!
//! ```text
//! cargo run --release --example shuffle_significance -- [n shuffles] [workers]
//! ```

use modgraph::nullmodel::{cohens_d, null_distribution, NullConfig, ShuffleKind};
use modgraph::LayeredNetwork;
use ndarray::Array2;
use rand::Rng;

/// 16-wide layers split into 4 blocks; cross-block weights are mostly pruned.
fn planted_modules(seed: u64) -> modgraph::Result<LayeredNetwork> {
    let mut rng = modgraph::seed::rng(seed);
    let dims = [16usize, 16, 16, 16, 8];
    let weights = dims
        .windows(2)
        .map(|w| {
            Array2::from_shape_fn((w[0], w[1]), |(i, j)| {
                let same = i * 4 / w[0] == j * 4 / w[1];
                let v: f32 = rng.random_range(-1.0..1.0);
                if same || rng.random::<f64>() < 0.1 {
                    v
                } else {
                    0.0
                }
            })
        })
        .collect();
    LayeredNetwork::new(weights, None)
}

fn main() -> modgraph::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let n = args.first().copied().unwrap_or(100);
    let workers = args.get(1).copied().unwrap_or(1);
    let net = planted_modules(4)?;

    let mut results = Vec::new();
    for kind in [ShuffleKind::FullLayer, ShuffleKind::NonzeroPreserving] {
        let mut cfg = NullConfig::new(kind, n, 11);
        cfg.workers = workers;
        let dist = null_distribution(&net, 4, &cfg)?;
        println!(
            "{kind:>18}: observed {:.4}, nulls {:.4} ± {:.4}, p = {:.3}",
            dist.observed_ncut,
            dist.mean(),
            dist.std(),
            dist.p_value
        );
        results.push(dist);
    }
    let d = cohens_d(&results[0].null_ncuts, &results[1].null_ncuts)?;
    println!("Cohen's d between the two null distributions: {d:.2}");
    println!("{}", serde_json::to_string_pretty(&results[0].summary())?);
    Ok(())
}
