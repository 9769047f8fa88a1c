//! Magnitude pruning on a polynomial sparsity schedule.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netio::LayeredNetwork;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneConfig {
    pub initial_sparsity: f64,
    pub final_sparsity: f64,
    /// Optimizer steps between pruning events.
    pub frequency: usize,
    /// Steps over which sparsity ramps from initial to final (`T`).
    pub total_pruning_steps: usize,
    pub exponent: u32,
    /// Epochs of training with pruning, after the dense phase.
    pub epochs: usize,
}

impl PruneConfig {
    /// 0.5 → 0.9, cubic, every 10 steps, ramping over the whole pruning phase.
    pub fn cubic(epochs: usize, steps_per_epoch: usize) -> Self {
        PruneConfig {
            initial_sparsity: 0.5,
            final_sparsity: 0.9,
            frequency: 10,
            total_pruning_steps: epochs * steps_per_epoch,
            exponent: 3,
            epochs,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s_i = self.initial_sparsity;
        let s_f = self.final_sparsity;
        if !(0.0..1.0).contains(&s_i) || !(s_i < s_f && s_f < 1.0) {
            return Err(Error::Config(format!(
                "pruning needs 0 <= initial < final < 1, got {s_i} and {s_f}"
            )));
        }
        if self.frequency == 0 || self.total_pruning_steps == 0 || self.exponent == 0 || self.epochs == 0 {
            return Err(Error::Config(
                "pruning frequency, total steps, exponent and epochs must be positive".into(),
            ));
        }
        Ok(())
    }

    /// `s(t) = s_f + (s_i - s_f)(1 - t/T)^e`, held at `s_f` past `T`.
    pub fn sparsity_at(&self, step: usize) -> f64 {
        let frac = (step as f64 / self.total_pruning_steps as f64).min(1.0);
        self.final_sparsity
            + (self.initial_sparsity - self.final_sparsity) * (1.0 - frac).powi(self.exponent as i32)
    }

    /// Whether a pruning event happens before pruning-phase step `step`.
    pub fn prunes_at(&self, step: usize) -> bool {
        step <= self.total_pruning_steps && (step % self.frequency == 0 || step == self.total_pruning_steps)
    }
}

/// Which weights are pruned (`true`), one boolean matrix per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMask {
    layers: Vec<Array2<bool>>,
}

impl WeightMask {
    pub fn empty(net: &LayeredNetwork) -> Self {
        WeightMask {
            layers: net.weights().iter().map(|w| Array2::from_elem(w.dim(), false)).collect(),
        }
    }

    /// Mask every weight that is exactly zero.
    pub fn from_zeros(net: &LayeredNetwork) -> Self {
        WeightMask {
            layers: net.weights().iter().map(|w| w.mapv(|v| v == 0.0)).collect(),
        }
    }

    pub fn layers(&self) -> &[Array2<bool>] {
        &self.layers
    }

    pub fn num_masked(&self, layer: usize) -> usize {
        self.layers[layer].iter().filter(|&&m| m).count()
    }

    pub fn sparsity(&self) -> Vec<f64> {
        (0..self.layers.len())
            .map(|l| self.num_masked(l) as f64 / self.layers[l].len() as f64)
            .collect()
    }

    pub(crate) fn apply_f64(&self, weights: &mut [Array2<f64>]) {
        for (w, m) in weights.iter_mut().zip(&self.layers) {
            ndarray::Zip::from(w).and(m).for_each(|v, &masked| {
                if masked {
                    *v = 0.0;
                }
            });
        }
    }

    /// Grow the mask of every layer to `ceil(sparsity * n)` entries by
    /// smallest magnitude. Already-masked entries go first, so the mask never
    /// shrinks.
    pub(crate) fn grow(&mut self, weights: &[Array2<f64>], sparsity: f64) {
        for (w, m) in weights.iter().zip(self.layers.iter_mut()) {
            let n = w.len();
            let target = ((sparsity * n as f64).ceil() as usize).min(n);
            let mut order: Vec<(bool, f64, usize)> = w
                .iter()
                .zip(m.iter())
                .enumerate()
                .map(|(i, (&v, &masked))| (!masked, v.abs(), i))
                .collect();
            order.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
            let flat = m.as_slice_mut().expect("standard layout");
            for &(_, _, i) in order.iter().take(target) {
                flat[i] = true;
            }
        }
    }
}
