//! Compare analytic gradients with central differences on tiny networks.
//!
//! ```text
//! cargo run --release --example gradient_check
//! ```

use modgraph::netio::make_random_dataset;
use modgraph::trainer::{backward_check, backward_check_with_dropout, loss_and_gradients, WeightMask};
use modgraph::LayeredNetwork;
use ndarray::Array1;

fn main() -> modgraph::Result<()> {
    for seed in 0..5u64 {
        // nonzero biases keep units off the ReLU kink when dropout silences
        // every input of a unit
        let init = LayeredNetwork::glorot_uniform(&[5, 4, 4, 3], seed)?;
        let biases = init.layer_dims()[1..]
            .iter()
            .map(|&d| Array1::from_shape_fn(d, |j| 0.05 + 0.01 * j as f32))
            .collect();
        let net = LayeredNetwork::new(init.weights().to_vec(), Some(biases))?;
        let batch = make_random_dataset(6, 5, 3, seed + 100)?;
        let plain = backward_check(&net, &batch)?;
        let dropped = backward_check_with_dropout(&net, &batch, Some((0.3, seed)))?;
        println!("net {seed}: max relative error {plain:.2e}, with a fixed dropout mask {dropped:.2e}");
    }

    // masked weights get exactly zero gradient
    let net = LayeredNetwork::glorot_uniform(&[5, 4, 3], 9)?;
    let pruned = net.with_weights(
        net.weights()
            .iter()
            .map(|w| w.mapv(|v| if v.abs() < 0.3 { 0.0 } else { v }))
            .collect(),
    )?;
    let mask = WeightMask::from_zeros(&pruned);
    let batch = make_random_dataset(8, 5, 3, 1)?;
    let grads = loss_and_gradients(&pruned, &batch, None, Some(&mask))?;
    let leaked = grads
        .weights
        .iter()
        .zip(mask.layers())
        .flat_map(|(g, m)| g.iter().zip(m.iter()))
        .filter(|(g, &m)| m && **g != 0.0)
        .count();
    println!("masked entries: {:?}, nonzero masked gradients: {leaked}", mask.sparsity());
    Ok(())
}
