use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self_adjoint_evd, self_adjoint_evd_scratch, ComputeEigenvectors};
use faer::diag::Diag;
use faer::{Mat, Par};
use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::laplacian::{norm, NormalizedLaplacian};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    /// Dense below [`EigenConfig::dense_limit`] vertices, block Krylov above.
    Auto,
    /// Full dense symmetric eigendecomposition of `L_sym`.
    Dense,
    /// Restarted block Krylov (Lanczos/Davidson) on `2I − L_sym`.
    BlockKrylov,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenConfig {
    /// Bound on `‖L_norm u − λu‖ / ‖u‖` for every returned pair.
    pub tol: f64,
    pub solver: SolverKind,
    pub dense_limit: usize,
    /// Start block for the iterative solver.
    pub seed: u64,
    /// Matrix-vector product budget for the iterative solver.
    pub max_matvecs: usize,
}

impl Default for EigenConfig {
    fn default() -> Self {
        EigenConfig {
            tol: 1e-8,
            solver: SolverKind::Auto,
            dense_limit: 3000,
            seed: 0,
            max_matvecs: 20_000,
        }
    }
}

/// The `k` least eigenpairs of `L_norm`.
#[derive(Debug, Clone)]
pub struct SpectralEmbedding {
    /// `k × N`; row `j` is the unit-norm eigenvector `u_j`.
    pub vectors: Array2<f64>,
    /// Nondecreasing, nonnegative.
    pub eigenvalues: Vec<f64>,
    /// Relative `L_norm` residual of each pair.
    pub residuals: Vec<f64>,
    /// The solver that actually ran.
    pub solver: SolverKind,
    pub matvecs: usize,
}

impl SpectralEmbedding {
    pub fn k(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `N × k`: row `n` is the embedding `y_n` of vertex `n`.
    pub fn points(&self) -> Array2<f64> {
        self.vectors.t().to_owned()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Eigenvectors for the `k` smallest eigenvalues of `L_norm`, obtained from
/// the symmetric problem and mapped back through `D^{-1/2}`.
pub fn smallest_eigenvectors(
    g: &WeightedGraph,
    k: usize,
    cfg: &EigenConfig,
) -> Result<SpectralEmbedding> {
    let n = g.num_vertices();
    if k == 0 || k > n {
        return Err(Error::Contract(format!(
            "need 1 <= k <= N, got k = {k} with N = {n}"
        )));
    }
    if !(cfg.tol > 0.0) {
        return Err(Error::Contract(format!("tol must be positive, got {}", cfg.tol)));
    }
    let lap = NormalizedLaplacian::new(g)?;
    let solver = match cfg.solver {
        SolverKind::Auto if n <= cfg.dense_limit => SolverKind::Dense,
        SolverKind::Auto => SolverKind::BlockKrylov,
        other => other,
    };
    let (eigenvalues, sym_vectors, matvecs) = match solver {
        SolverKind::Dense => {
            let (values, vectors) = dense_smallest(&lap, k);
            (values, vectors, 0)
        }
        _ => block_krylov_smallest(&lap, k, cfg)?,
    };

    let mut vectors = Array2::zeros((k, n));
    let mut residuals = Vec::with_capacity(k);
    let mut values = Vec::with_capacity(k);
    for (j, (lambda, v)) in eigenvalues.into_iter().zip(sym_vectors).enumerate() {
        let lambda = lambda.max(0.0);
        let mut u = lap.sym_to_norm(&v);
        let scale = 1.0 / norm(&u);
        u.iter_mut().for_each(|x| *x *= scale);
        residuals.push(lap.relative_residual(&u, lambda));
        values.push(lambda);
        vectors.row_mut(j).assign(&ndarray::ArrayView1::from(&u));
    }
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    if worst > cfg.tol {
        return Err(Error::Solver {
            message: format!("{solver:?} solver missed the residual bound {:.1e}", cfg.tol),
            achieved_residual: worst,
        });
    }
    Ok(SpectralEmbedding {
        vectors,
        eigenvalues: values,
        residuals,
        solver,
        matvecs,
    })
}

/// Full eigendecomposition of a dense symmetric matrix, ascending eigenvalues.
///
/// Runs single-threaded so that results do not depend on the thread pool.
pub fn dense_symmetric_eigen(m: &Mat<f64>) -> (Vec<f64>, Mat<f64>) {
    let n = m.nrows();
    let mut s = Diag::<f64>::zeros(n);
    let mut u = Mat::<f64>::zeros(n, n);
    let params = Default::default();
    let req = self_adjoint_evd_scratch::<f64>(n, ComputeEigenvectors::Yes, Par::Seq, params);
    let mut buf = MemBuffer::new(req);
    let solved = self_adjoint_evd(
        m.as_ref(),
        s.as_mut(),
        Some(u.as_mut()),
        Par::Seq,
        MemStack::new(&mut buf),
        params,
    );
    if solved.is_err() {
        // only reachable for non-finite input; NaNs surface in the residual check
        s.column_vector_mut().fill(f64::NAN);
    }
    let s = s.column_vector();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
    let values = order.iter().map(|&i| s[i]).collect();
    let vectors = Mat::from_fn(n, n, |r, c| u[(r, order[c])]);
    (values, vectors)
}

fn dense_smallest(lap: &NormalizedLaplacian<'_>, k: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let (values, vectors) = dense_symmetric_eigen(&lap.dense_sym());
    let n = lap.dim();
    let vecs = (0..k)
        .map(|j| (0..n).map(|i| vectors[(i, j)]).collect())
        .collect();
    (values[..k].to_vec(), vecs)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Orthogonalize `v` against `basis` (two Gram-Schmidt passes) and normalize.
/// Returns `None` if nothing independent remains.
fn orthonormalize_against(basis: &[Vec<f64>], mut v: Vec<f64>) -> Option<Vec<f64>> {
    let before = norm(&v);
    if before == 0.0 {
        return None;
    }
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, &v);
            axpy(-c, q, &mut v);
        }
    }
    let after = norm(&v);
    if after <= 1e-10 * before {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= after);
    Some(v)
}

/// Largest eigenpairs of `M = 2I − L_sym` (i.e. smallest of `L_sym`) by a
/// block Davidson iteration without preconditioning, whose search space is a
/// block Krylov space. The basis is thick-restarted from the best Ritz
/// vectors when it reaches its size cap.
fn block_krylov_smallest(
    lap: &NormalizedLaplacian<'_>,
    k: usize,
    cfg: &EigenConfig,
) -> Result<(Vec<f64>, Vec<Vec<f64>>, usize)> {
    let n = lap.dim();
    let block = (k + 2).min(n);
    let max_basis = (10 * block).max(60).min(n);
    let apply = |x: &[f64]| -> Vec<f64> {
        let mut y = vec![0.0; n];
        lap.apply_normalized_adjacency(x, &mut y);
        y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += xi);
        y
    };
    // Inner target on L_sym residuals; the L_norm bound is checked afterwards.
    let inner_tol = cfg.tol * 1e-2;

    let mut rng = seed::rng(cfg.seed);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut images: Vec<Vec<f64>> = Vec::new();
    let mut matvecs = 0;
    let mut pending: Vec<Vec<f64>> = (0..block)
        .map(|_| (0..n).map(|_| rng.random::<f64>() - 0.5).collect())
        .collect();
    loop {
        for v in pending.drain(..) {
            if let Some(q) = orthonormalize_against(&basis, v) {
                images.push(apply(&q));
                basis.push(q);
                matvecs += 1;
            }
        }
        let m = basis.len();
        let t = Mat::from_fn(m, m, |i, j| 0.5 * (dot(&basis[i], &images[j]) + dot(&basis[j], &images[i])));
        let (theta, s) = dense_symmetric_eigen(&t);
        // descending θ == ascending λ
        let wanted: Vec<usize> = (0..m).rev().take(block.min(m)).collect();
        let mut ritz = Vec::with_capacity(wanted.len());
        let mut residual_vecs = Vec::with_capacity(wanted.len());
        let mut worst = 0.0f64;
        for (rank, &c) in wanted.iter().enumerate() {
            let mut x = vec![0.0; n];
            let mut mx = vec![0.0; n];
            for i in 0..m {
                let coef = s[(i, c)];
                axpy(coef, &basis[i], &mut x);
                axpy(coef, &images[i], &mut mx);
            }
            let mut r = mx.clone();
            axpy(-theta[c], &x, &mut r);
            let rn = norm(&r);
            if rank < k {
                worst = worst.max(rn);
            }
            ritz.push((theta[c], x, mx));
            residual_vecs.push((rn, r));
        }

        if worst <= inner_tol || m == n {
            let values = ritz.iter().take(k).map(|(th, _, _)| 2.0 - th).collect();
            let vectors = ritz.into_iter().take(k).map(|(_, x, _)| x).collect();
            return Ok((values, vectors, matvecs));
        }
        if matvecs >= cfg.max_matvecs {
            return Err(Error::Solver {
                message: format!("block Krylov budget of {} products exhausted", cfg.max_matvecs),
                achieved_residual: worst,
            });
        }

        pending = residual_vecs
            .into_iter()
            .filter(|(rn, _)| *rn > inner_tol * 1e-3)
            .map(|(_, r)| r)
            .collect();
        if basis.len() + pending.len() > max_basis {
            // thick restart on the current Ritz vectors
            basis = ritz.iter().map(|(_, x, _)| x.clone()).collect();
            images = ritz.into_iter().map(|(_, _, mx)| mx).collect();
        }
        if pending.is_empty() {
            // stagnation: expand with fresh random directions
            pending = (0..block)
                .map(|_| (0..n).map(|_| rng.random::<f64>() - 0.5).collect())
                .collect();
        }
    }
}
