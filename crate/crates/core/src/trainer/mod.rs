//! A small MLP trainer: rectifier hidden layers, softmax cross-entropy,
//! Adam, inverted dropout and magnitude pruning.
//!
//! Training runs a dense phase of `epochs` epochs, then (if pruning is on) a
//! further `prune.epochs` epochs during which the weights are masked to the
//! scheduled sparsity every `prune.frequency` steps. Arithmetic is f64; the
//! returned networks store f32.

mod mlp;
mod prune;

use std::io::Write;

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netio::{Dataset, LayeredNetwork};
use crate::seed;

pub use mlp::{
    accuracy, backward_check, backward_check_with_dropout, correct_count, forward, loss_and_gradients,
    ForwardPass, Gradients, GRADIENT_CHECK_STEP,
};
pub use prune::{PruneConfig, WeightMask};

pub(crate) use mlp::{argmax_rows, softmax_rows, Params};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub dropout_rate: f64,
    pub prune: Option<PruneConfig>,
    pub seed: u64,
    pub shuffle_each_epoch: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            batch_size: 128,
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-7,
            dropout_rate: 0.0,
            prune: None,
            seed: 0,
            shuffle_each_epoch: true,
        }
    }
}

impl TrainConfig {
    pub fn steps_per_epoch(&self, num_examples: usize) -> usize {
        num_examples.div_ceil(self.batch_size.max(1))
    }

    pub fn validate(&self, num_examples: usize) -> Result<()> {
        if self.epochs == 0 && self.prune.is_none() {
            return Err(Error::Config("nothing to train: zero epochs and no pruning".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate {} is not positive", self.learning_rate)));
        }
        for (name, b) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(b > 0.0 && b < 1.0) {
                return Err(Error::Config(format!("{name} = {b} is outside (0, 1)")));
            }
        }
        if !(self.adam_epsilon > 0.0) {
            return Err(Error::Config("adam_epsilon must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!("dropout rate {} is outside [0, 1)", self.dropout_rate)));
        }
        if let Some(p) = &self.prune {
            p.validate()?;
            let available = p.epochs * self.steps_per_epoch(num_examples);
            if p.total_pruning_steps > available {
                return Err(Error::Config(format!(
                    "pruning ramps over {} steps but the pruning phase only has {available}",
                    p.total_pruning_steps
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    /// Mean training-batch loss over the epoch (dropout active).
    pub loss: f64,
    /// Accuracy on the whole training set at the end of the epoch, dropout off.
    pub train_acc: f64,
    /// Fraction of zero weights over all layers at the end of the epoch.
    pub sparsity: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub network: LayeredNetwork,
    /// Snapshot taken just before the first pruning event.
    pub pre_pruning: Option<LayeredNetwork>,
    pub metrics: Vec<EpochMetrics>,
}

pub fn write_metrics_csv<W: Write>(metrics: &[EpochMetrics], mut out: W) -> std::io::Result<()> {
    writeln!(out, "epoch,loss,train_acc,sparsity")?;
    for m in metrics {
        writeln!(out, "{},{},{},{}", m.epoch, m.loss, m.train_acc, m.sparsity)?;
    }
    Ok(())
}

struct Adam {
    beta1: f64,
    beta2: f64,
    eps: f64,
    lr: f64,
    t: i32,
    m_w: Vec<Array2<f64>>,
    v_w: Vec<Array2<f64>>,
    m_b: Vec<Array1<f64>>,
    v_b: Vec<Array1<f64>>,
}

impl Adam {
    fn new(p: &Params, cfg: &TrainConfig) -> Self {
        Adam {
            beta1: cfg.adam_beta1,
            beta2: cfg.adam_beta2,
            eps: cfg.adam_epsilon,
            lr: cfg.learning_rate,
            t: 0,
            m_w: p.weights.iter().map(|w| Array2::zeros(w.dim())).collect(),
            v_w: p.weights.iter().map(|w| Array2::zeros(w.dim())).collect(),
            m_b: p.biases.iter().map(|b| Array1::zeros(b.len())).collect(),
            v_b: p.biases.iter().map(|b| Array1::zeros(b.len())).collect(),
        }
    }

    fn step(&mut self, p: &mut Params, g: &Gradients) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let (b1, b2, eps, lr) = (self.beta1, self.beta2, self.eps, self.lr);
        let update = |w: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *w -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
        };
        for l in 0..p.weights.len() {
            ndarray::Zip::from(&mut p.weights[l])
                .and(&mut self.m_w[l])
                .and(&mut self.v_w[l])
                .and(&g.weights[l])
                .for_each(|w, m, v, &g| update(w, m, v, g));
            ndarray::Zip::from(&mut p.biases[l])
                .and(&mut self.m_b[l])
                .and(&mut self.v_b[l])
                .and(&g.biases[l])
                .for_each(|w, m, v, &g| update(w, m, v, g));
        }
    }
}

fn overall_sparsity(p: &Params) -> f64 {
    let zeros: usize = p.weights.iter().map(|w| w.iter().filter(|v| **v == 0.0).count()).sum();
    let total: usize = p.weights.iter().map(|w| w.len()).sum();
    zeros as f64 / total as f64
}

/// Train `net` on `data`. Deterministic for a fixed configuration.
pub fn train(net: &LayeredNetwork, data: &Dataset, cfg: &TrainConfig) -> Result<TrainOutput> {
    if data.is_empty() {
        return Err(Error::Validation("training set is empty".into()));
    }
    if data.input_dim() != net.input_dim() {
        return Err(Error::Validation(format!(
            "data has {} features, network expects {}",
            data.input_dim(),
            net.input_dim()
        )));
    }
    if data.num_classes() > net.output_dim() {
        return Err(Error::Validation(format!(
            "data has {} classes, network has {} outputs",
            data.num_classes(),
            net.output_dim()
        )));
    }
    cfg.validate(data.len())?;

    let mut params = Params::from_network(net);
    let mut adam = Adam::new(&params, cfg);
    let x_all = data.images().mapv(f64::from);
    let n = data.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut dropout_rng = seed::rng(seed::derive_seed(cfg.seed, 1));
    let prune_epochs = cfg.prune.as_ref().map_or(0, |p| p.epochs);
    let mut mask: Option<WeightMask> = None;
    let mut pre_pruning = None;
    let mut prune_step = 0usize;
    let mut metrics = Vec::new();

    for epoch in 0..cfg.epochs + prune_epochs {
        let pruning = epoch >= cfg.epochs;
        if cfg.shuffle_each_epoch {
            order = (0..n).collect();
            order.shuffle(&mut seed::rng(seed::derive_seed2(cfg.seed, 2, epoch as u64)));
        }
        let mut loss_sum = 0.0;
        let mut batches = 0;
        for (b, idx) in order.chunks(cfg.batch_size).enumerate() {
            if pruning {
                let pc = cfg.prune.as_ref().unwrap();
                if pc.prunes_at(prune_step) {
                    if pre_pruning.is_none() {
                        pre_pruning = Some(params.to_network()?);
                    }
                    let m = mask.get_or_insert_with(|| WeightMask::empty(net));
                    m.grow(&params.weights, pc.sparsity_at(prune_step));
                    m.apply_f64(&mut params.weights);
                }
            }
            let x = x_all.select(Axis(0), idx);
            let labels: Vec<usize> = idx.iter().map(|&i| data.labels()[i]).collect();
            let fp = mlp::forward_params(&params, x.view(), cfg.dropout_rate, true, &mut dropout_rng)?;
            let grads = mlp::backward(&params, &fp, &labels, mask.as_ref());
            if !grads.loss.is_finite() {
                return Err(Error::Training {
                    epoch,
                    step: b,
                    message: format!("loss is {}", grads.loss),
                });
            }
            adam.step(&mut params, &grads);
            if let Some(m) = &mask {
                m.apply_f64(&mut params.weights);
            }
            if params.weights.iter().any(|w| w.iter().any(|v| !v.is_finite())) {
                return Err(Error::Training {
                    epoch,
                    step: b,
                    message: "non-finite weight after update".into(),
                });
            }
            loss_sum += grads.loss;
            batches += 1;
            if pruning {
                prune_step += 1;
            }
        }
        if pruning && epoch + 1 == cfg.epochs + prune_epochs {
            let pc = cfg.prune.as_ref().unwrap();
            if pc.prunes_at(prune_step) {
                let m = mask.get_or_insert_with(|| WeightMask::empty(net));
                m.grow(&params.weights, pc.sparsity_at(prune_step));
                m.apply_f64(&mut params.weights);
            }
        }
        let correct = mlp::correct_count_params(&params, data)?;
        metrics.push(EpochMetrics {
            epoch: epoch + 1,
            loss: loss_sum / batches as f64,
            train_acc: correct as f64 / n as f64,
            sparsity: overall_sparsity(&params),
        });
    }
    Ok(TrainOutput {
        network: params.to_network()?,
        pre_pruning,
        metrics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netio::make_random_dataset;

    fn small_cfg() -> TrainConfig {
        TrainConfig {
            epochs: 2,
            batch_size: 16,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn adam_with_zero_gradient_is_a_no_op() {
        let net = LayeredNetwork::glorot_uniform(&[3, 4, 2], 0).unwrap();
        let mut p = Params::from_network(&net);
        let before = p.clone();
        let mut adam = Adam::new(&p, &TrainConfig::default());
        let zero = Gradients {
            loss: 0.0,
            weights: p.weights.iter().map(|w| Array2::zeros(w.dim())).collect(),
            biases: p.biases.iter().map(|b| Array1::zeros(b.len())).collect(),
        };
        for _ in 0..5 {
            adam.step(&mut p, &zero);
        }
        assert_eq!(p.weights, before.weights);
        assert!(adam.m_w.iter().chain(&adam.v_w).all(|m| m.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn training_is_deterministic_and_lowers_loss() {
        let data = make_random_dataset(64, 8, 3, 5).unwrap();
        let net = LayeredNetwork::glorot_uniform(&[8, 16, 3], 2).unwrap();
        let cfg = TrainConfig {
            epochs: 30,
            ..small_cfg()
        };
        let a = train(&net, &data, &cfg).unwrap();
        let b = train(&net, &data, &cfg).unwrap();
        assert!(a.network.bit_eq(&b.network));
        assert_eq!(a.metrics, b.metrics);
        assert!(a.metrics.last().unwrap().loss < a.metrics[0].loss);
        assert!(a.pre_pruning.is_none());
    }

    #[test]
    fn pruning_reaches_final_sparsity_and_masks_stick() {
        let data = make_random_dataset(96, 10, 4, 1).unwrap();
        let net = LayeredNetwork::glorot_uniform(&[10, 12, 12, 4], 3).unwrap();
        let cfg = TrainConfig {
            epochs: 1,
            batch_size: 16,
            dropout_rate: 0.3,
            prune: Some(PruneConfig {
                frequency: 2,
                ..PruneConfig::cubic(3, 96usize.div_ceil(16))
            }),
            ..TrainConfig::default()
        };
        let out = train(&net, &data, &cfg).unwrap();
        for (l, s) in out.network.sparsity().iter().enumerate() {
            let n = out.network.weights()[l].len() as f64;
            assert!(*s >= 0.9 && *s <= 0.9 + 1.0 / n + 1e-12, "layer {l}: {s}");
        }
        let pre = out.pre_pruning.unwrap();
        assert!(pre.sparsity().iter().all(|&s| s < 0.5));
        assert_eq!(out.metrics.len(), 4);
    }

    #[test]
    fn schedule_longer_than_phase_is_rejected() {
        let data = make_random_dataset(32, 4, 2, 1).unwrap();
        let net = LayeredNetwork::glorot_uniform(&[4, 3, 2], 3).unwrap();
        let cfg = TrainConfig {
            prune: Some(PruneConfig {
                total_pruning_steps: 1000,
                ..PruneConfig::cubic(1, 2)
            }),
            ..small_cfg()
        };
        assert!(matches!(train(&net, &data, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn metrics_csv_shape() {
        let m = vec![EpochMetrics {
            epoch: 1,
            loss: 0.5,
            train_acc: 0.75,
            sparsity: 0.0,
        }];
        let mut out = Vec::new();
        write_metrics_csv(&m, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "epoch,loss,train_acc,sparsity\n1,0.5,0.75,0\n");
    }
}
