//! Shuffle null models and permutation statistics.
//!
//! A trained network's n-cut is compared against the n-cuts of networks whose
//! weight matrices have been shuffled layer by layer. Two null models exist:
//! a full shuffle of every entry, and a topology-preserving shuffle that only
//! permutes the nonzero values among the nonzero positions.
//!
//! The one-sided p-value is `(r + 1) / (n + 1)` where `r` counts null n-cuts
//! less than or equal to the observed one; it is never zero. A partition that
//! cuts exactly along a layer boundary has the same n-cut in every shuffle, so
//! nulls can tie with the observed value; ties count against significance.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netio::LayeredNetwork;
use crate::seed;
use crate::spectral::{cluster_network, ClusterConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShuffleKind {
    /// Permute every entry of each weight matrix.
    FullLayer,
    /// Permute nonzero values among nonzero positions; zeros stay put.
    NonzeroPreserving,
}

impl fmt::Display for ShuffleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShuffleKind::FullLayer => "full-layer",
            ShuffleKind::NonzeroPreserving => "nonzero-preserving",
        })
    }
}

impl FromStr for ShuffleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" | "layer" | "full-layer" => Ok(ShuffleKind::FullLayer),
            "nonzero" | "layer-nonzero" | "nonzero-preserving" => Ok(ShuffleKind::NonzeroPreserving),
            other => Err(Error::Config(format!("unknown shuffle kind {other:?}"))),
        }
    }
}

fn shuffle_matrix(w: &Array2<f32>, rng: &mut impl rand::Rng) -> Array2<f32> {
    let mut values: Vec<f32> = w.iter().copied().collect();
    values.shuffle(rng);
    Array2::from_shape_vec(w.dim(), values).unwrap()
}

fn shuffle_matrix_nonzero(w: &Array2<f32>, rng: &mut impl rand::Rng) -> Array2<f32> {
    let mut out = w.clone();
    let mut values: Vec<f32> = w.iter().copied().filter(|v| *v != 0.0).collect();
    values.shuffle(rng);
    let mut it = values.into_iter();
    for v in out.iter_mut() {
        if *v != 0.0 {
            *v = it.next().unwrap();
        }
    }
    out
}

/// Uniformly permute the entries of every weight matrix. Biases are kept.
pub fn shuffle_layers(net: &LayeredNetwork, seed: u64) -> LayeredNetwork {
    let weights = net
        .weights()
        .iter()
        .enumerate()
        .map(|(l, w)| shuffle_matrix(w, &mut seed::rng(seed::derive_seed(seed, l as u64))))
        .collect();
    net.with_weights(weights).expect("a permutation preserves validity")
}

/// Uniformly permute the nonzero entries of every weight matrix among the
/// nonzero positions, keeping the sparsity mask.
pub fn shuffle_nonzero(net: &LayeredNetwork, seed: u64) -> LayeredNetwork {
    let weights = net
        .weights()
        .iter()
        .enumerate()
        .map(|(l, w)| shuffle_matrix_nonzero(w, &mut seed::rng(seed::derive_seed(seed, l as u64))))
        .collect();
    net.with_weights(weights).expect("a permutation preserves validity")
}

pub fn shuffle(net: &LayeredNetwork, kind: ShuffleKind, seed: u64) -> LayeredNetwork {
    match kind {
        ShuffleKind::FullLayer => shuffle_layers(net, seed),
        ShuffleKind::NonzeroPreserving => shuffle_nonzero(net, seed),
    }
}

/// `(r + 1) / (n + 1)` with `r = #{null ≤ observed}`.
pub fn one_sided_p_value(observed: f64, nulls: &[f64]) -> f64 {
    let r = nulls.iter().filter(|&&x| x <= observed).count();
    (r + 1) as f64 / (nulls.len() + 1) as f64
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct NullDistribution {
    pub observed_ncut: f64,
    pub null_ncuts: Vec<f64>,
    pub shuffle_kind: ShuffleKind,
    pub p_value: f64,
    pub k: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct NullSummary {
    pub observed: f64,
    pub mean: f64,
    pub std: f64,
    pub p_value: f64,
    pub kind: ShuffleKind,
    pub n_samples: usize,
    pub k: usize,
    pub seed: u64,
}

impl NullDistribution {
    pub fn mean(&self) -> f64 {
        mean(&self.null_ncuts)
    }

    /// Sample standard deviation (`n − 1` denominator; 0 for one sample).
    pub fn std(&self) -> f64 {
        sample_std(&self.null_ncuts)
    }

    pub fn summary(&self) -> NullSummary {
        NullSummary {
            observed: self.observed_ncut,
            mean: self.mean(),
            std: self.std(),
            p_value: self.p_value,
            kind: self.shuffle_kind,
            n_samples: self.null_ncuts.len(),
            k: self.k,
            seed: self.seed,
        }
    }

    /// `sample,ncut` rows for each null draw.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "sample,ncut")?;
        for (i, v) in self.null_ncuts.iter().enumerate() {
            writeln!(out, "{i},{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct NullConfig {
    pub kind: ShuffleKind,
    pub n_samples: usize,
    pub seed: u64,
    pub workers: usize,
    /// Clustering settings; its seed is replaced per sample.
    pub cluster: ClusterConfig,
}

impl NullConfig {
    pub fn new(kind: ShuffleKind, n_samples: usize, seed: u64) -> Self {
        NullConfig {
            kind,
            n_samples,
            seed,
            workers: 1,
            cluster: ClusterConfig::with_seed(seed),
        }
    }
}

/// Seeds of null sample `i`: one for the shuffle, one for clustering.
pub fn sample_seeds(master: u64, i: usize) -> (u64, u64) {
    (
        seed::derive_seed2(master, 1, i as u64),
        seed::derive_seed2(master, 2, i as u64),
    )
}

/// Cluster `net` and `n_samples` shuffles of it, and compare.
///
/// Sample `i` depends only on `(cfg.seed, i)`, so the result is the same for
/// every worker count.
pub fn null_distribution(net: &LayeredNetwork, k: usize, cfg: &NullConfig) -> Result<NullDistribution> {
    if cfg.n_samples == 0 {
        return Err(Error::Contract("n_samples must be at least 1".into()));
    }
    let observed_cfg = ClusterConfig {
        seed: seed::derive_seed(cfg.seed, 0),
        ..cfg.cluster.clone()
    };
    let observed = cluster_network(net, k, &observed_cfg)?.ncut_value;

    let run = |i: usize| -> Result<f64> {
        let (shuffle_seed, cluster_seed) = sample_seeds(cfg.seed, i);
        let shuffled = shuffle(net, cfg.kind, shuffle_seed);
        let c = ClusterConfig {
            seed: cluster_seed,
            ..cfg.cluster.clone()
        };
        cluster_network(&shuffled, k, &c)
            .map(|r| r.ncut_value)
            .map_err(|e| Error::Sample {
                index: i,
                source: Box::new(e),
            })
    };
    let nulls: Result<Vec<f64>> = if cfg.workers <= 1 {
        (0..cfg.n_samples).map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| (0..cfg.n_samples).into_par_iter().map(run).collect())
    };
    let null_ncuts = nulls?;
    Ok(NullDistribution {
        p_value: one_sided_p_value(observed, &null_ncuts),
        observed_ncut: observed,
        null_ncuts,
        shuffle_kind: cfg.kind,
        k,
        seed: cfg.seed,
    })
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn sample_variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64
}

pub fn sample_std(x: &[f64]) -> f64 {
    sample_variance(x).sqrt()
}

/// Cohen's d with pooled sample standard deviation:
/// `(μ_a − μ_b) / sqrt(((n_a − 1)σ_a² + (n_b − 1)σ_b²) / (n_a + n_b − 2))`.
pub fn cohens_d(a: &[f64], b: &[f64]) -> Result<f64> {
    let (na, nb) = (a.len(), b.len());
    if na == 0 || nb == 0 || na + nb < 3 {
        return Err(Error::UndefinedStatistic(format!(
            "Cohen's d needs nonempty samples with n1 + n2 >= 3, got {na} and {nb}"
        )));
    }
    let pooled = (((na - 1) as f64 * sample_variance(a) + (nb - 1) as f64 * sample_variance(b))
        / (na + nb - 2) as f64)
        .sqrt();
    if pooled == 0.0 {
        return Err(Error::UndefinedStatistic("pooled standard deviation is zero".into()));
    }
    Ok((mean(a) - mean(b)) / pooled)
}

/// One-sample Kolmogorov–Smirnov test against Uniform(0, 1).
///
/// Returns the statistic `D` and its asymptotic p-value.
pub fn ks_uniform(samples: &[f64]) -> (f64, f64) {
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let d = x
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let v = v.clamp(0.0, 1.0);
            ((i + 1) as f64 / n - v).max(v - i as f64 / n)
        })
        .fold(0.0, f64::max);
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let term = 2.0 * (-2.0 * (k as f64).powi(2) * lambda * lambda).exp();
        p += if k % 2 == 1 { term } else { -term };
    }
    (d, p.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::Rng;
    use std::collections::HashMap;

    fn sorted(w: &Array2<f32>) -> Vec<u32> {
        let mut v: Vec<u32> = w.iter().map(|x| x.to_bits()).collect();
        v.sort_unstable();
        v
    }

    #[test]
    fn constant_matrix_is_unchanged() {
        let net = LayeredNetwork::new(vec![Array2::from_elem((3, 4), 0.7f32)], None).unwrap();
        assert!(shuffle_layers(&net, 1).bit_eq(&net));
    }

    #[test]
    fn single_nonzero_per_layer_is_unchanged() {
        let net = LayeredNetwork::new(
            vec![array![[0.0f32, 2.0], [0.0, 0.0]], array![[0.0f32], [-1.0]]],
            None,
        )
        .unwrap();
        assert!(shuffle_nonzero(&net, 5).bit_eq(&net));
    }

    #[test]
    fn all_24_permutations_are_reachable_and_uniform() {
        let net = LayeredNetwork::new(vec![array![[1.0f32, 2.0], [3.0, 4.0]]], None).unwrap();
        let draws = 100_000;
        let mut counts: HashMap<Vec<u32>, usize> = HashMap::new();
        for s in 0..draws {
            let out = shuffle_layers(&net, s);
            *counts.entry(out.weights()[0].iter().map(|v| *v as u32).collect()).or_default() += 1;
        }
        assert_eq!(counts.len(), 24);
        let expected = draws as f64 / 24.0;
        let chi2: f64 = counts.values().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // chi-square, 23 dof: P(X > 49.73) = 0.001
        assert!(chi2 < 49.73, "chi2 = {chi2}");
    }

    #[test]
    fn p_value_formula() {
        let nulls: Vec<f64> = (0..320).map(|i| 2.0 + i as f64 * 1e-3).collect();
        let p = one_sided_p_value(1.5, &nulls);
        assert_eq!(p, 1.0 / 321.0);
        assert_eq!(format!("{p:.3}"), "0.003");
        assert_eq!(one_sided_p_value(9.0, &nulls), 1.0);
        assert_eq!(one_sided_p_value(2.0, &[2.0]), 1.0);
        assert_eq!(one_sided_p_value(1.0, &[2.0]), 0.5);
    }

    #[test]
    fn cohens_d_examples() {
        assert_eq!(cohens_d(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap(), -1.0);
        assert_eq!(cohens_d(&[2.0, 3.0, 4.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(cohens_d(&[1.0, 5.0, 2.0], &[1.0, 5.0, 2.0]).unwrap(), 0.0);
        assert!(matches!(cohens_d(&[1.0, 1.0], &[1.0, 1.0]), Err(Error::UndefinedStatistic(_))));
        assert!(matches!(cohens_d(&[1.0], &[2.0]), Err(Error::UndefinedStatistic(_))));
    }

    #[test]
    fn null_distribution_is_worker_independent() {
        let net = LayeredNetwork::glorot_uniform(&[12, 8, 8, 4], 21).unwrap();
        let mut cfg = NullConfig::new(ShuffleKind::FullLayer, 12, 99);
        let one = null_distribution(&net, 3, &cfg).unwrap();
        for workers in [2, 8] {
            cfg.workers = workers;
            assert_eq!(null_distribution(&net, 3, &cfg).unwrap(), one);
        }
        assert_eq!(one.null_ncuts.len(), 12);
        assert_eq!(one.p_value, one_sided_p_value(one.observed_ncut, &one.null_ncuts));
        let mut csv = Vec::new();
        one.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 13);
    }

    fn sparse_net(seed: u64) -> LayeredNetwork {
        let net = LayeredNetwork::glorot_uniform(&[6, 5, 4], seed).unwrap();
        let mut rng = seed::rng(seed);
        let weights = net
            .weights()
            .iter()
            .map(|w| w.mapv(|v| if rng.random::<f64>() < 0.5 { 0.0 } else { v }))
            .collect();
        net.with_weights(weights).unwrap()
    }

    proptest! {
        #[test]
        fn shuffles_preserve_multisets(seed in any::<u64>(), s in any::<u64>()) {
            let net = sparse_net(seed);
            for kind in [ShuffleKind::FullLayer, ShuffleKind::NonzeroPreserving] {
                let out = shuffle(&net, kind, s);
                prop_assert_eq!(out.biases(), net.biases());
                for (a, b) in net.weights().iter().zip(out.weights()) {
                    prop_assert_eq!(a.dim(), b.dim());
                    prop_assert_eq!(sorted(a), sorted(b));
                    if kind == ShuffleKind::NonzeroPreserving {
                        let mask_a: Vec<bool> = a.iter().map(|v| *v != 0.0).collect();
                        let mask_b: Vec<bool> = b.iter().map(|v| *v != 0.0).collect();
                        prop_assert_eq!(mask_a, mask_b);
                    }
                }
            }
        }

        #[test]
        fn p_value_bounds_and_monotonicity(nulls in proptest::collection::vec(0.0f64..3.0, 1..50), a in 0.0f64..3.0, b in 0.0f64..3.0) {
            let n = nulls.len() as f64;
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let p_lo = one_sided_p_value(lo, &nulls);
            let p_hi = one_sided_p_value(hi, &nulls);
            prop_assert!(p_lo >= 1.0 / (n + 1.0) && p_hi <= 1.0);
            prop_assert!(p_lo <= p_hi);
        }

        #[test]
        fn cohens_d_is_antisymmetric(a in proptest::collection::vec(-5.0f64..5.0, 2..20), b in proptest::collection::vec(-5.0f64..5.0, 2..20)) {
            let (Ok(ab), Ok(ba)) = (cohens_d(&a, &b), cohens_d(&b, &a)) else { return Ok(()); };
            prop_assert_eq!(ab, -ba);
        }
    }

    #[test]
    fn dense_network_shuffles_agree_in_distribution() {
        // With no zeros both shuffles draw uniform permutations of the same values.
        let net = LayeredNetwork::new(vec![array![[1.0f32, 2.0], [3.0, 4.0]]], None).unwrap();
        let count = |kind| {
            let mut first_is_one = 0;
            for s in 0..20_000 {
                if shuffle(&net, kind, s).weights()[0][[0, 0]] == 1.0 {
                    first_is_one += 1;
                }
            }
            first_is_one as f64 / 20_000.0
        };
        let full = count(ShuffleKind::FullLayer);
        let nz = count(ShuffleKind::NonzeroPreserving);
        assert!((full - 0.25).abs() < 0.015 && (nz - 0.25).abs() < 0.015, "{full} {nz}");
    }

    #[test]
    fn ks_detects_non_uniform_samples() {
        let uniform: Vec<f64> = (0..200).map(|i| (i as f64 + 0.5) / 200.0).collect();
        assert!(ks_uniform(&uniform).1 > 0.99);
        let skewed: Vec<f64> = uniform.iter().map(|u| u * u).collect();
        assert!(ks_uniform(&skewed).1 < 1e-3);
    }

    #[test]
    fn p_values_are_calibrated_when_the_net_is_itself_a_shuffle() {
        // Small nets with k = 2 tend to split along a layer boundary, whose n-cut
        // every shuffle preserves; ties then make p conservative, not uniform.
        let base = LayeredNetwork::glorot_uniform(&[12, 12, 12, 12], 3).unwrap();
        let ps: Vec<f64> = (0..200u64)
            .map(|t| {
                let observed = shuffle_layers(&base, seed::derive_seed(1000, t));
                let cfg = NullConfig::new(ShuffleKind::FullLayer, 99, t);
                null_distribution(&observed, 3, &cfg).unwrap().p_value
            })
            .collect();
        let (d, p) = ks_uniform(&ps);
        assert!(p > 0.01, "D = {d}, p = {p}");
    }
}
