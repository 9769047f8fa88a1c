//! Neural networks as weighted undirected graphs, and the graph functionals
//! used to score partitions: degree, volume, cut weight and n-cut.
//!
//! Every neuron with at least one nonzero incident weight becomes a vertex;
//! an edge joins neurons in adjacent layers with weight `|w|`. Biases are not
//! part of the graph. Vertices are numbered layer-major: all surviving input
//! neurons first, then the first hidden layer, and so on.
//!
//! The n-cut of a partition `X_1..X_k` is `Σ_i W(X_i, V \ X_i) / vol(X_i)`,
//! i.e. half the value of the more common normalization; it lies in `[0, k]`.

use std::io::{BufRead, Write};

use rand::Rng;

use crate::error::{Error, Result};
use crate::netio::LayeredNetwork;
use crate::seed;

/// Symmetric nonnegative adjacency in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    degrees: Vec<f64>,
    layer_of: Vec<usize>,
    original_index: Vec<(usize, usize)>,
}

impl WeightedGraph {
    /// Build a graph from an undirected edge list over `n` vertices.
    ///
    /// Duplicate edges are summed and zero weights dropped. Every vertex must
    /// end up with positive degree. Layer metadata is set to layer 0 with
    /// `original_index = (0, i)`; the adjacent-layer property only holds for
    /// graphs built by [`network_to_graph`].
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::DegenerateInput("graph has no vertices".into()));
        }
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::Validation(format!("edge ({i}, {j}) out of range for {n} vertices")));
            }
            if i == j {
                return Err(Error::Validation(format!("self-loop at vertex {i}")));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::Validation(format!("edge ({i}, {j}) has weight {w}")));
            }
            if w > 0.0 {
                rows[i].push((j, w));
                rows[j].push((i, w));
            }
        }
        let graph = Self::from_rows(rows, vec![0; n], (0..n).map(|i| (0, i)).collect());
        if let Some(v) = graph.degrees.iter().position(|&d| d <= 0.0) {
            return Err(Error::DegenerateInput(format!("vertex {v} has no incident edges")));
        }
        Ok(graph)
    }

    fn from_rows(
        mut rows: Vec<Vec<(usize, f64)>>,
        layer_of: Vec<usize>,
        original_index: Vec<(usize, usize)>,
    ) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut degrees = Vec::with_capacity(n);
        row_ptr.push(0);
        for row in &mut rows {
            row.sort_by_key(|&(j, _)| j);
            let mut degree = 0.0;
            let mut last: Option<usize> = None;
            for &(j, w) in row.iter() {
                if last == Some(j) {
                    *values.last_mut().unwrap() += w;
                } else {
                    col_idx.push(j);
                    values.push(w);
                    last = Some(j);
                }
                degree += w;
            }
            degrees.push(degree);
            row_ptr.push(col_idx.len());
        }
        WeightedGraph {
            row_ptr,
            col_idx,
            values,
            degrees,
            layer_of,
            original_index,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.degrees.len()
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.col_idx.len() / 2
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn degree(&self, v: usize) -> f64 {
        self.degrees[v]
    }

    /// Layer (0 = input) each vertex came from.
    pub fn layer_of(&self) -> &[usize] {
        &self.layer_of
    }

    /// `(layer, neuron)` coordinates of each vertex in the source network.
    pub fn original_index(&self) -> &[(usize, usize)] {
        &self.original_index
    }

    /// Vertex id of `(layer, neuron)`, if that neuron survived.
    pub fn vertex_of(&self, layer: usize, neuron: usize) -> Option<usize> {
        self.original_index.binary_search(&(layer, neuron)).ok()
    }

    /// `(neighbor, weight)` pairs of vertex `v`, neighbors ascending.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[v]..self.row_ptr[v + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    /// `A_ij` (zero when there is no edge).
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(pos) => self.values[range.start + pos],
            Err(_) => 0.0,
        }
    }

    /// `y = A x`.
    pub fn adjacency_matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[p] * x[self.col_idx[p]];
            }
            *yi = acc;
        }
    }

    /// Sum of all edge weights (each undirected edge once).
    pub fn total_weight(&self) -> f64 {
        self.values.iter().sum::<f64>() / 2.0
    }

    /// Dense copy of `A`, row-major. Intended for small graphs and tests.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.num_vertices();
        let mut a = vec![vec![0.0; n]; n];
        for (i, row) in a.iter_mut().enumerate() {
            for (j, w) in self.neighbors(i) {
                row[j] = w;
            }
        }
        a
    }
}

/// The graph of a network: one vertex per neuron with a nonzero incident
/// weight, edges `|w|` between adjacent layers.
///
/// Removing a dead neuron can strand a neighbor whose only nonzero weights
/// led to it, so removal repeats until no vertex has zero degree.
pub fn network_to_graph(net: &LayeredNetwork) -> Result<WeightedGraph> {
    let dims = net.layer_dims();
    let weights = net.weights();
    let mut alive: Vec<Vec<bool>> = dims.iter().map(|&d| vec![true; d]).collect();

    loop {
        let mut changed = false;
        for l in 0..dims.len() {
            for i in 0..dims[l] {
                if !alive[l][i] {
                    continue;
                }
                let incoming = l > 0
                    && weights[l - 1]
                        .column(i)
                        .iter()
                        .zip(&alive[l - 1])
                        .any(|(w, &a)| a && *w != 0.0);
                let outgoing = l + 1 < dims.len()
                    && weights[l]
                        .row(i)
                        .iter()
                        .zip(&alive[l + 1])
                        .any(|(w, &a)| a && *w != 0.0);
                if !incoming && !outgoing {
                    alive[l][i] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }

    let mut id = vec![Vec::new(); dims.len()];
    let mut layer_of = Vec::new();
    let mut original_index = Vec::new();
    for l in 0..dims.len() {
        id[l] = vec![usize::MAX; dims[l]];
        for i in 0..dims[l] {
            if alive[l][i] {
                id[l][i] = layer_of.len();
                layer_of.push(l);
                original_index.push((l, i));
            }
        }
    }
    if layer_of.is_empty() {
        return Err(Error::DegenerateInput(
            "every neuron is dead: the network has no nonzero weights".into(),
        ));
    }

    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(layer_of.len());
    for &(l, i) in &original_index {
        let mut row = Vec::new();
        if l > 0 {
            for (j, w) in weights[l - 1].column(i).iter().enumerate() {
                if *w != 0.0 && alive[l - 1][j] {
                    row.push((id[l - 1][j], (*w as f64).abs()));
                }
            }
        }
        if l + 1 < dims.len() {
            for (j, w) in weights[l].row(i).iter().enumerate() {
                if *w != 0.0 && alive[l + 1][j] {
                    row.push((id[l + 1][j], (*w as f64).abs()));
                }
            }
        }
        rows.push(row);
    }
    Ok(WeightedGraph::from_rows(rows, layer_of, original_index))
}

/// Assignment of every vertex to one of `k` clusters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    assignment: Vec<usize>,
    k: usize,
}

impl Partition {
    pub fn new(assignment: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Validation("a partition needs k >= 1".into()));
        }
        if let Some((v, &c)) = assignment.iter().enumerate().find(|(_, &c)| c >= k) {
            return Err(Error::Validation(format!(
                "vertex {v} assigned to cluster {c}, outside [0, {k})"
            )));
        }
        Ok(Partition { assignment, k })
    }

    /// Partition from explicit vertex sets; they must be disjoint and cover `0..n`.
    pub fn from_sets(n: usize, sets: &[Vec<usize>]) -> Result<Self> {
        let mut assignment = vec![usize::MAX; n];
        for (c, set) in sets.iter().enumerate() {
            for &v in set {
                if v >= n {
                    return Err(Error::Validation(format!("vertex {v} out of range")));
                }
                if assignment[v] != usize::MAX {
                    return Err(Error::Contract(format!("vertex {v} appears in two sets")));
                }
                assignment[v] = c;
            }
        }
        if let Some(v) = assignment.iter().position(|&c| c == usize::MAX) {
            return Err(Error::Contract(format!("vertex {v} is in no set")));
        }
        Self::new(assignment, sets.len())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn cluster(&self, c: usize) -> Vec<usize> {
        (0..self.len()).filter(|&v| self.assignment[v] == c).collect()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }
}

/// `vol(X) = Σ_{i∈X} d_i`.
pub fn volume(g: &WeightedGraph, x: &[usize]) -> f64 {
    x.iter().map(|&i| g.degrees[i]).sum()
}

/// `W(X, Y) = Σ_{i∈X, j∈Y} A_ij` for disjoint `X`, `Y`.
pub fn cut_weight(g: &WeightedGraph, x: &[usize], y: &[usize]) -> Result<f64> {
    let n = g.num_vertices();
    let mut in_y = vec![false; n];
    for &j in y {
        in_y[j] = true;
    }
    if let Some(&v) = x.iter().find(|&&i| in_y[i]) {
        return Err(Error::Contract(format!("vertex {v} is in both sets")));
    }
    Ok(x
        .iter()
        .flat_map(|&i| g.neighbors(i))
        .filter(|&(j, _)| in_y[j])
        .map(|(_, w)| w)
        .sum())
}

/// Per-cluster `(W(X_i, X̄_i), vol(X_i))`.
pub fn cluster_cut_and_volume(g: &WeightedGraph, p: &Partition) -> Result<Vec<(f64, f64)>> {
    if p.len() != g.num_vertices() {
        return Err(Error::Validation(format!(
            "partition covers {} vertices, graph has {}",
            p.len(),
            g.num_vertices()
        )));
    }
    let a = p.assignment();
    let mut stats = vec![(0.0, 0.0); p.k()];
    for i in 0..g.num_vertices() {
        let c = a[i];
        stats[c].1 += g.degrees[i];
        for (j, w) in g.neighbors(i) {
            if a[j] != c {
                stats[c].0 += w;
            }
        }
    }
    Ok(stats)
}

/// `n-cut(X_1..X_k) = Σ_i W(X_i, X̄_i) / vol(X_i)`.
pub fn ncut(g: &WeightedGraph, p: &Partition) -> Result<f64> {
    let stats = cluster_cut_and_volume(g, p)?;
    let sizes = p.cluster_sizes();
    let mut total = 0.0;
    for (c, (cut, vol)) in stats.into_iter().enumerate() {
        if sizes[c] == 0 {
            return Err(Error::DegeneratePartition(format!("cluster {c} is empty")));
        }
        if vol <= 0.0 {
            return Err(Error::DegeneratePartition(format!("cluster {c} has zero volume")));
        }
        total += cut / vol;
    }
    Ok(total)
}

/// Monte-Carlo estimate of the stub-sampling failure probability.
///
/// Each trial picks a cluster uniformly, then a stub (half-edge) attached to
/// that cluster with probability proportional to its weight, and fails when
/// the stub's edge leaves the cluster. The exact failure probability is
/// `ncut / k`.
pub fn stub_failure_probability(
    g: &WeightedGraph,
    p: &Partition,
    num_samples: usize,
    seed: u64,
) -> Result<f64> {
    if p.len() != g.num_vertices() {
        return Err(Error::Validation("partition does not match graph".into()));
    }
    if num_samples == 0 {
        return Err(Error::Validation("num_samples must be positive".into()));
    }
    let k = p.k();
    // Per cluster: members and the running sum of their degrees.
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (v, &c) in p.assignment().iter().enumerate() {
        members[c].push(v);
    }
    let mut cum_degree: Vec<Vec<f64>> = Vec::with_capacity(k);
    for (c, m) in members.iter().enumerate() {
        if m.is_empty() {
            return Err(Error::DegeneratePartition(format!("cluster {c} is empty")));
        }
        let mut acc = 0.0;
        cum_degree.push(
            m.iter()
                .map(|&v| {
                    acc += g.degrees[v];
                    acc
                })
                .collect(),
        );
    }
    let mut cum_row = vec![0.0; g.values.len()];
    for i in 0..g.num_vertices() {
        let mut acc = 0.0;
        for p in g.row_ptr[i]..g.row_ptr[i + 1] {
            acc += g.values[p];
            cum_row[p] = acc;
        }
    }

    let mut rng = seed::rng(seed);
    let a = p.assignment();
    let mut failures = 0usize;
    for _ in 0..num_samples {
        let c = rng.random_range(0..k);
        let cum = &cum_degree[c];
        let target = rng.random::<f64>() * cum[cum.len() - 1];
        let idx = cum.partition_point(|&s| s <= target).min(cum.len() - 1);
        let v = members[c][idx];
        let row = &cum_row[g.row_ptr[v]..g.row_ptr[v + 1]];
        let target = rng.random::<f64>() * row[row.len() - 1];
        let e = row.partition_point(|&s| s <= target).min(row.len() - 1);
        if a[g.col_idx[g.row_ptr[v] + e]] != c {
            failures += 1;
        }
    }
    Ok(failures as f64 / num_samples as f64)
}

/// One row per vertex: `layer,neuron_index,cluster`.
pub fn write_partition_csv<W: Write>(
    g: &WeightedGraph,
    p: &Partition,
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "layer,neuron_index,cluster")?;
    for (v, &(layer, neuron)) in g.original_index().iter().enumerate() {
        writeln!(out, "{layer},{neuron},{}", p.assignment()[v])?;
    }
    Ok(())
}

/// A cluster label for one neuron of a network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct NeuronLabel {
    pub layer: usize,
    pub neuron: usize,
    pub cluster: usize,
}

/// Attach the graph's `(layer, neuron)` coordinates to a partition.
pub fn label_neurons(g: &WeightedGraph, p: &Partition) -> Vec<NeuronLabel> {
    g.original_index()
        .iter()
        .zip(p.assignment())
        .map(|(&(layer, neuron), &cluster)| NeuronLabel {
            layer,
            neuron,
            cluster,
        })
        .collect()
}

pub fn read_partition_csv<R: BufRead>(input: R) -> Result<Vec<NeuronLabel>> {
    let mut labels = Vec::new();
    for (line_no, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<partition csv>", e))?;
        let line = line.trim();
        if line.is_empty() || (line_no == 0 && line.starts_with("layer")) {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parse = |s: &str| {
            s.parse::<usize>().map_err(|_| Error::Format {
                offset: line_no as u64,
                message: format!("line {}: expected an unsigned integer, got {s:?}", line_no + 1),
            })
        };
        if fields.len() != 3 {
            return Err(Error::Format {
                offset: line_no as u64,
                message: format!("line {}: expected 3 columns", line_no + 1),
            });
        }
        labels.push(NeuronLabel {
            layer: parse(fields[0])?,
            neuron: parse(fields[1])?,
            cluster: parse(fields[2])?,
        });
    }
    Ok(labels)
}
