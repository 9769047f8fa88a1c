//! Build the weight graph of a small network, save and reload it as an
//! archive, and score a hand-made partition.
//!
//! ```text
//! cargo run --release --example network_graph
//! ```

use modgraph::graph::{cluster_cut_and_volume, stub_failure_probability, write_partition_csv};
use modgraph::netio::{load_archive, save_archive};
use modgraph::{ncut, network_to_graph, LayeredNetwork, Partition};
use ndarray::array;

fn main() -> modgraph::Result<()> {
    // two towers joined by a few weak weights; input 3 has no weights at all,
    // so it is dead and gets dropped
    let net = LayeredNetwork::new(
        vec![
            array![[0.9f32, 0.05], [0.02, -1.1], [0.8, 0.0], [0.0, 0.0]],
            array![[1.2f32, -0.03], [0.04, 0.7]],
            array![[-0.6f32, 0.01], [0.0, 0.0]],
        ],
        None,
    )?;

    let path = std::env::temp_dir().join("modgraph_example.mg");
    save_archive(&net, &path)?;
    let reloaded = load_archive(&path)?;
    assert!(reloaded.bit_eq(&net));
    println!("archive round trip ok ({} bytes)", std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0));

    let g = network_to_graph(&reloaded)?;
    println!("{} vertices, {} edges", g.num_vertices(), g.num_edges());
    for (v, (layer, neuron)) in g.original_index().iter().enumerate() {
        println!("  vertex {v}: layer {layer} neuron {neuron}, degree {:.3}", g.degree(v));
    }

    // one cluster per tower
    let assignment = g
        .original_index()
        .iter()
        .map(|&(layer, neuron)| match (layer, neuron) {
            (0, 1) => 1,
            (_, 0) => 0,
            (0, 2) => 0,
            _ => 1,
        })
        .collect();
    let p = Partition::new(assignment, 2)?;
    for (i, (cut, vol)) in cluster_cut_and_volume(&g, &p)?.iter().enumerate() {
        println!("cluster {i}: cut {cut:.3}, volume {vol:.3}");
    }
    let value = ncut(&g, &p)?;
    println!("n-cut {value:.5}");
    let mc = stub_failure_probability(&g, &p, 200_000, 1)?;
    println!("stub sampling failure rate {mc:.5} vs n-cut / k = {:.5}", value / 2.0);

    let mut csv = Vec::new();
    write_partition_csv(&g, &p, &mut csv).expect("writing to memory");
    print!("{}", String::from_utf8_lossy(&csv));
    Ok(())
}
