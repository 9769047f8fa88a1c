//! Normalized spectral clustering.
//!
//! 1. form `L_norm = D⁻¹(D − A)`;
//! 2. take the eigenvectors `u_1..u_k` of its `k` least eigenvalues (the
//!    constant vector for eigenvalue 0 included);
//! 3. embed vertex `n` as `y_n = (u_1[n], ..., u_k[n])`;
//! 4. run k-means on the `y_n` and report the n-cut of the resulting clusters.
//!
//! Embedding rows are not normalized. Eigenvectors carry no sign convention;
//! k-means only sees distances, so signs do not matter.

mod eigen;
mod kmeans;
mod laplacian;

use serde::{Deserialize, Serialize};

pub use eigen::{dense_symmetric_eigen, smallest_eigenvectors, EigenConfig, SolverKind, SpectralEmbedding};
pub use kmeans::{kmeans, KMeansConfig, KMeansResult};
pub use laplacian::NormalizedLaplacian;

use crate::error::Result;
use crate::graph::{self, network_to_graph, Partition, WeightedGraph};
use crate::netio::LayeredNetwork;
use crate::seed;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub seed: u64,
    pub eigen: EigenConfig,
    pub kmeans: KMeansConfig,
}

impl ClusterConfig {
    pub fn with_seed(seed: u64) -> Self {
        ClusterConfig {
            seed,
            eigen: EigenConfig::default(),
            kmeans: KMeansConfig::default(),
        }
    }
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self::with_seed(0)
    }
}

#[derive(Debug, Clone)]
pub struct ClusteringResult {
    pub partition: Partition,
    pub ncut_value: f64,
    pub embedding: SpectralEmbedding,
    pub kmeans_inertia: f64,
    pub seed: u64,
}

/// Spectral clustering of an existing graph.
pub fn cluster_graph(g: &WeightedGraph, k: usize, cfg: &ClusterConfig) -> Result<ClusteringResult> {
    let eigen_cfg = EigenConfig {
        seed: seed::derive_seed(cfg.seed, 0),
        ..cfg.eigen.clone()
    };
    let embedding = smallest_eigenvectors(g, k, &eigen_cfg)?;
    let points = embedding.points();
    let km = kmeans(points.view(), k, seed::derive_seed(cfg.seed, 1), &cfg.kmeans)?;
    let ncut_value = graph::ncut(g, &km.partition)?;
    Ok(ClusteringResult {
        partition: km.partition,
        ncut_value,
        embedding,
        kmeans_inertia: km.inertia,
        seed: cfg.seed,
    })
}

/// Graph construction, spectral embedding, k-means and n-cut in one call.
pub fn cluster_network(net: &LayeredNetwork, k: usize, cfg: &ClusterConfig) -> Result<ClusteringResult> {
    let g = network_to_graph(net)?;
    cluster_graph(&g, k, cfg)
}

/// Same as [`cluster_network`] but also hands back the graph.
pub fn cluster_network_with_graph(
    net: &LayeredNetwork,
    k: usize,
    cfg: &ClusterConfig,
) -> Result<(WeightedGraph, ClusteringResult)> {
    let g = network_to_graph(net)?;
    let result = cluster_graph(&g, k, cfg)?;
    Ok((g, result))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct VertexAssignment {
    pub layer: usize,
    pub neuron: usize,
    pub cluster: usize,
}

/// JSON form of a [`ClusteringResult`].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ClusteringReport {
    pub ncut: f64,
    pub k: usize,
    pub seed: u64,
    pub num_vertices: usize,
    pub cluster_sizes: Vec<usize>,
    pub eigenvalues: Vec<f64>,
    pub solver: SolverDiagnostics,
    pub kmeans_inertia: f64,
    pub assignment: Vec<VertexAssignment>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SolverDiagnostics {
    pub kind: SolverKind,
    pub tol: f64,
    pub residuals: Vec<f64>,
    pub matvecs: usize,
}

impl ClusteringResult {
    pub fn report(&self, g: &WeightedGraph, tol: f64) -> ClusteringReport {
        ClusteringReport {
            ncut: self.ncut_value,
            k: self.partition.k(),
            seed: self.seed,
            num_vertices: g.num_vertices(),
            cluster_sizes: self.partition.cluster_sizes(),
            eigenvalues: self.embedding.eigenvalues.clone(),
            solver: SolverDiagnostics {
                kind: self.embedding.solver,
                tol,
                residuals: self.embedding.residuals.clone(),
                matvecs: self.embedding.matvecs,
            },
            kmeans_inertia: self.kmeans_inertia,
            assignment: graph::label_neurons(g, &self.partition)
                .into_iter()
                .map(|l| VertexAssignment {
                    layer: l.layer,
                    neuron: l.neuron,
                    cluster: l.cluster,
                })
                .collect(),
        }
    }
}
