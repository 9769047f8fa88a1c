use faer::Mat;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

/// `L_norm = D⁻¹(D − A)` and its symmetric twin `L_sym = D^{-1/2}(D − A)D^{-1/2}`.
///
/// `L_sym v = λ v` iff `L_norm (D^{-1/2} v) = λ (D^{-1/2} v)`, so the two share
/// a spectrum and eigenvectors map across by a diagonal scaling.
pub struct NormalizedLaplacian<'g> {
    graph: &'g WeightedGraph,
    inv_sqrt_degree: Vec<f64>,
}

impl<'g> NormalizedLaplacian<'g> {
    pub fn new(graph: &'g WeightedGraph) -> Result<Self> {
        let inv_sqrt_degree = graph
            .degrees()
            .iter()
            .enumerate()
            .map(|(i, &d)| {
                if d > 0.0 {
                    Ok(1.0 / d.sqrt())
                } else {
                    Err(Error::Contract(format!("vertex {i} has zero degree")))
                }
            })
            .collect::<Result<_>>()?;
        Ok(NormalizedLaplacian {
            graph,
            inv_sqrt_degree,
        })
    }

    pub fn dim(&self) -> usize {
        self.inv_sqrt_degree.len()
    }

    pub fn graph(&self) -> &WeightedGraph {
        self.graph
    }

    /// `y = L_norm x = x − D⁻¹ A x`.
    pub fn apply_norm(&self, x: &[f64], y: &mut [f64]) {
        self.graph.adjacency_matvec(x, y);
        for ((yi, &xi), &d) in y.iter_mut().zip(x).zip(self.graph.degrees()) {
            *yi = xi - *yi / d;
        }
    }

    /// `y = D^{-1/2} A D^{-1/2} x`, the normalized adjacency.
    pub fn apply_normalized_adjacency(&self, x: &[f64], y: &mut [f64]) {
        let scaled: Vec<f64> = x
            .iter()
            .zip(&self.inv_sqrt_degree)
            .map(|(a, b)| a * b)
            .collect();
        self.graph.adjacency_matvec(&scaled, y);
        for (yi, s) in y.iter_mut().zip(&self.inv_sqrt_degree) {
            *yi *= s;
        }
    }

    /// `y = L_sym x`.
    pub fn apply_sym(&self, x: &[f64], y: &mut [f64]) {
        self.apply_normalized_adjacency(x, y);
        for (yi, &xi) in y.iter_mut().zip(x) {
            *yi = xi - *yi;
        }
    }

    /// Dense `L_sym`.
    pub fn dense_sym(&self) -> Mat<f64> {
        let n = self.dim();
        let mut m = Mat::<f64>::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
            for (j, w) in self.graph.neighbors(i) {
                m[(i, j)] = -w * self.inv_sqrt_degree[i] * self.inv_sqrt_degree[j];
            }
        }
        m
    }

    /// `u = D^{-1/2} v`: an `L_sym` eigenvector to an `L_norm` eigenvector.
    pub fn sym_to_norm(&self, v: &[f64]) -> Vec<f64> {
        v.iter().zip(&self.inv_sqrt_degree).map(|(a, b)| a * b).collect()
    }

    /// `v = D^{1/2} u`.
    pub fn norm_to_sym(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(&self.inv_sqrt_degree)
            .map(|(a, b)| a / b)
            .collect()
    }

    /// `‖L_norm u − λ u‖ / ‖u‖`.
    pub fn relative_residual(&self, u: &[f64], lambda: f64) -> f64 {
        let mut y = vec![0.0; u.len()];
        self.apply_norm(u, &mut y);
        let r: f64 = y
            .iter()
            .zip(u)
            .map(|(a, b)| (a - lambda * b).powi(2))
            .sum::<f64>()
            .sqrt();
        r / norm(u)
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}
