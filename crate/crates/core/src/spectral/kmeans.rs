//! Lloyd's k-means with k-means++ seeding and restarts.
//!
//! Nearest-centroid ties go to the lowest cluster index. A cluster left empty
//! after an assignment step takes over the point farthest from its own
//! centroid among clusters that can spare one, so no cluster is ever returned
//! empty as long as there are at least `k` points.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Partition;
use crate::seed;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop when inertia improves by less than this fraction.
    pub rel_tol: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            restarts: 10,
            max_iter: 300,
            rel_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub partition: Partition,
    pub centroids: Array2<f64>,
    pub inertia: f64,
    pub iterations: usize,
    /// Which restart won.
    pub restart: usize,
}

fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Cluster the rows of `points` into `k` groups; best of `cfg.restarts` runs.
pub fn kmeans(points: ArrayView2<'_, f64>, k: usize, seed: u64, cfg: &KMeansConfig) -> Result<KMeansResult> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(Error::Contract(format!("k-means needs 1 <= k <= {n} points, got k = {k}")));
    }
    if cfg.restarts == 0 {
        return Err(Error::Contract("k-means needs at least one restart".into()));
    }
    let mut best: Option<KMeansResult> = None;
    for r in 0..cfg.restarts {
        let run = single_run(points, k, seed::derive_seed(seed, r as u64), cfg, r);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.unwrap())
}

fn plus_plus_init(points: ArrayView2<'_, f64>, k: usize, rng: &mut impl Rng) -> Array2<f64> {
    let n = points.nrows();
    let mut centroids = Array2::zeros((k, points.ncols()));
    let first = rng.random_range(0..n);
    centroids.row_mut(0).assign(&points.row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(points.row(i), points.row(first))).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let chosen = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if acc > target {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).assign(&points.row(chosen));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(points.row(i), points.row(chosen)));
        }
    }
    centroids
}

fn assign(points: ArrayView2<'_, f64>, centroids: &Array2<f64>, labels: &mut [usize], dists: &mut [f64]) {
    for i in 0..points.nrows() {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for c in 0..centroids.nrows() {
            let d = sq_dist(points.row(i), centroids.row(c));
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        labels[i] = best;
        dists[i] = best_d;
    }
}

/// Move points into empty clusters. Returns true if anything moved.
fn fill_empty(points: ArrayView2<'_, f64>, centroids: &mut Array2<f64>, labels: &mut [usize], dists: &mut [f64], k: usize) -> bool {
    let mut sizes = vec![0usize; k];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    let mut moved = false;
    for c in 0..k {
        if sizes[c] > 0 {
            continue;
        }
        let mut pick = None;
        let mut pick_d = f64::NEG_INFINITY;
        for i in 0..labels.len() {
            if sizes[labels[i]] > 1 && dists[i] > pick_d {
                pick_d = dists[i];
                pick = Some(i);
            }
        }
        let i = pick.expect("k <= n guarantees a donor cluster");
        sizes[labels[i]] -= 1;
        sizes[c] = 1;
        labels[i] = c;
        dists[i] = 0.0;
        centroids.row_mut(c).assign(&points.row(i));
        moved = true;
    }
    moved
}

fn update_centroids(points: ArrayView2<'_, f64>, labels: &[usize], k: usize) -> Array2<f64> {
    let mut sums = Array2::zeros((k, points.ncols()));
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        let mut row = sums.row_mut(l);
        row += &points.row(i);
        counts[l] += 1;
    }
    for (c, &count) in counts.iter().enumerate() {
        if count > 0 {
            sums.row_mut(c).mapv_inplace(|v| v / count as f64);
        }
    }
    sums
}

fn inertia_of(points: ArrayView2<'_, f64>, centroids: &Array2<f64>, labels: &[usize]) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| sq_dist(points.row(i), centroids.row(l)))
        .sum()
}

fn single_run(points: ArrayView2<'_, f64>, k: usize, seed: u64, cfg: &KMeansConfig, restart: usize) -> KMeansResult {
    let n = points.nrows();
    let mut rng = seed::rng(seed);
    let mut centroids = plus_plus_init(points, k, &mut rng);
    let mut labels = vec![0usize; n];
    let mut dists = vec![0.0; n];
    let mut previous = f64::INFINITY;
    let mut iterations = 0;
    for it in 0..cfg.max_iter.max(1) {
        iterations = it + 1;
        let before = labels.clone();
        assign(points, &centroids, &mut labels, &mut dists);
        fill_empty(points, &mut centroids, &mut labels, &mut dists, k);
        centroids = update_centroids(points, &labels, k);
        let inertia = inertia_of(points, &centroids, &labels);
        let stalled = it > 0 && labels == before;
        let converged = previous.is_finite() && (previous - inertia) <= cfg.rel_tol * previous;
        previous = inertia;
        if stalled || converged {
            break;
        }
    }
    let inertia = inertia_of(points, &centroids, &labels);
    KMeansResult {
        partition: Partition::new(labels, k).expect("labels are below k"),
        centroids,
        inertia,
        iterations,
        restart,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn duplicate_groups_are_recovered_exactly() {
        let pts = array![
            [0.0, 0.0],
            [5.0, 5.0],
            [0.0, 0.0],
            [-3.0, 4.0],
            [5.0, 5.0],
            [-3.0, 4.0],
            [0.0, 0.0]
        ];
        let r = kmeans(pts.view(), 3, 1, &KMeansConfig::default()).unwrap();
        assert_eq!(r.inertia, 0.0);
        let a = r.partition.assignment();
        assert_eq!(a[0], a[2]);
        assert_eq!(a[0], a[6]);
        assert_eq!(a[1], a[4]);
        assert_eq!(a[3], a[5]);
        assert_ne!(a[0], a[1]);
        assert_ne!(a[0], a[3]);
        assert_ne!(a[1], a[3]);
    }

    #[test]
    fn identical_points_still_fill_every_cluster() {
        let pts = Array2::from_elem((6, 3), 1.5);
        for k in 1..=6 {
            let r = kmeans(pts.view(), k, 4, &KMeansConfig::default()).unwrap();
            assert!(r.partition.cluster_sizes().iter().all(|&s| s > 0), "k={k}");
            assert_eq!(r.inertia, 0.0);
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let mut rng = seed::rng(0);
        let pts = Array2::from_shape_simple_fn((50, 3), || rng.random::<f64>());
        let a = kmeans(pts.view(), 4, 77, &KMeansConfig::default()).unwrap();
        let b = kmeans(pts.view(), 4, 77, &KMeansConfig::default()).unwrap();
        assert_eq!(a.partition, b.partition);
        assert_eq!(a.inertia, b.inertia);
    }

    #[test]
    fn rejects_k_above_n() {
        let pts = Array2::<f64>::zeros((2, 2));
        assert!(kmeans(pts.view(), 3, 0, &KMeansConfig::default()).is_err());
    }

    /// Exhaustive 2-partition oracle: minimum within-cluster sum of squares.
    fn brute_force_two_means(pts: &Array2<f64>) -> (f64, Vec<usize>) {
        let n = pts.nrows();
        let mut best = (f64::INFINITY, vec![]);
        for mask in 1u32..(1 << n) - 1 {
            if mask & 1 == 0 {
                continue; // fix point 0 in cluster 0's complement to skip mirror images
            }
            let labels: Vec<usize> = (0..n).map(|i| ((mask >> i) & 1) as usize).collect();
            let c = update_centroids(pts.view(), &labels, 2);
            let ss = inertia_of(pts.view(), &c, &labels);
            if ss < best.0 {
                best = (ss, labels);
            }
        }
        best
    }

    #[test]
    fn two_blobs_match_exhaustive_optimum() {
        for trial in 0..20u64 {
            let mut rng = seed::rng(100 + trial);
            let mut pts = Array2::zeros((8, 2));
            for i in 0..8 {
                let centre = if i % 2 == 0 { [0.0, 0.0] } else { [3.0, 1.0] };
                for d in 0..2 {
                    // crude gaussian: sum of uniforms
                    let g: f64 = (0..6).map(|_| rng.random::<f64>() - 0.5).sum::<f64>() * 0.6;
                    pts[[i, d]] = centre[d] + g;
                }
            }
            let (best_ss, best_labels) = brute_force_two_means(&pts);
            let r = kmeans(pts.view(), 2, trial, &KMeansConfig::default()).unwrap();
            assert!((r.inertia - best_ss).abs() < 1e-12, "trial {trial}");
            let a = r.partition.assignment();
            let same = (0..8).all(|i| (a[i] == a[0]) == (best_labels[i] == best_labels[0]));
            assert!(same, "trial {trial}");
        }
    }
}
