use ndarray::{Array1, Array2};
use rand::Rng;

use crate::error::{Error, Result};
use crate::seed;

/// Weights and biases of a fully connected feed-forward network.
///
/// `weights[l]` has shape `(layer_dims[l], layer_dims[l + 1])`, so row `i`
/// holds the outgoing weights of neuron `i` in layer `l` and column `j` the
/// incoming weights of neuron `j` in layer `l + 1`. Biases are used for
/// inference only; graph construction ignores them.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredNetwork {
    layer_dims: Vec<usize>,
    weights: Vec<Array2<f32>>,
    biases: Option<Vec<Array1<f32>>>,
}

impl LayeredNetwork {
    /// Build a network from its weight matrices, checking every invariant.
    pub fn new(weights: Vec<Array2<f32>>, biases: Option<Vec<Array1<f32>>>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Validation("network has no weight matrices".into()));
        }
        let mut layer_dims = vec![weights[0].nrows()];
        for (l, w) in weights.iter().enumerate() {
            if w.nrows() != *layer_dims.last().unwrap() {
                return Err(Error::Validation(format!(
                    "layer {l}: weight matrix has {} rows, previous layer has {} neurons",
                    w.nrows(),
                    layer_dims.last().unwrap()
                )));
            }
            layer_dims.push(w.ncols());
        }
        let net = LayeredNetwork {
            layer_dims,
            weights,
            biases,
        };
        net.validate()?;
        Ok(net)
    }

    /// Glorot-uniform weights (limit `sqrt(6 / (fan_in + fan_out))`), zero biases.
    pub fn glorot_uniform(layer_dims: &[usize], seed: u64) -> Result<Self> {
        check_dims(layer_dims)?;
        let mut rng = seed::rng(seed);
        let weights = layer_dims
            .windows(2)
            .map(|w| {
                let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
                Array2::from_shape_simple_fn((w[0], w[1]), || {
                    rng.random_range(-limit..limit) as f32
                })
            })
            .collect();
        let biases = layer_dims[1..].iter().map(|&d| Array1::zeros(d)).collect();
        Self::new(weights, Some(biases))
    }

    pub fn validate(&self) -> Result<()> {
        check_dims(&self.layer_dims)?;
        if self.weights.len() != self.layer_dims.len() - 1 {
            return Err(Error::Validation(format!(
                "{} weight matrices for {} layers",
                self.weights.len(),
                self.layer_dims.len()
            )));
        }
        for (l, w) in self.weights.iter().enumerate() {
            let expected = (self.layer_dims[l], self.layer_dims[l + 1]);
            if w.dim() != expected {
                return Err(Error::Validation(format!(
                    "layer {l}: weight matrix is {:?}, expected {:?}",
                    w.dim(),
                    expected
                )));
            }
            if let Some(pos) = w.iter().position(|v| !v.is_finite()) {
                return Err(Error::Validation(format!(
                    "layer {l}: non-finite weight at flat index {pos}"
                )));
            }
        }
        if let Some(biases) = &self.biases {
            if biases.len() != self.weights.len() {
                return Err(Error::Validation(format!(
                    "{} bias vectors for {} weight matrices",
                    biases.len(),
                    self.weights.len()
                )));
            }
            for (l, b) in biases.iter().enumerate() {
                if b.len() != self.layer_dims[l + 1] {
                    return Err(Error::Validation(format!(
                        "layer {l}: bias has length {}, expected {}",
                        b.len(),
                        self.layer_dims[l + 1]
                    )));
                }
                if b.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Validation(format!("layer {l}: non-finite bias")));
                }
            }
        }
        Ok(())
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    /// Number of weight matrices (one less than the number of neuron layers).
    pub fn num_weight_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn weights(&self) -> &[Array2<f32>] {
        &self.weights
    }

    pub fn biases(&self) -> Option<&[Array1<f32>]> {
        self.biases.as_deref()
    }

    pub fn bias(&self, layer: usize) -> Option<&Array1<f32>> {
        self.biases.as_ref().map(|b| &b[layer])
    }

    pub fn num_weights(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum()
    }

    /// Replace the weight matrices, keeping shapes and biases.
    pub fn with_weights(&self, weights: Vec<Array2<f32>>) -> Result<Self> {
        let net = LayeredNetwork {
            layer_dims: self.layer_dims.clone(),
            weights,
            biases: self.biases.clone(),
        };
        net.validate()?;
        Ok(net)
    }

    /// Multiply every weight by `c` (biases untouched).
    pub fn scaled(&self, c: f32) -> Result<Self> {
        self.with_weights(self.weights.iter().map(|w| w * c).collect())
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [Array2<f32>] {
        &mut self.weights
    }

    pub(crate) fn biases_mut(&mut self) -> Option<&mut [Array1<f32>]> {
        self.biases.as_deref_mut()
    }

    /// Bitwise equality of all stored values (distinguishes `-0.0` from `0.0`).
    pub fn bit_eq(&self, other: &Self) -> bool {
        fn same<'a>(a: impl Iterator<Item = &'a f32>, b: impl Iterator<Item = &'a f32>) -> bool {
            a.zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
        }
        self.layer_dims == other.layer_dims
            && self
                .weights
                .iter()
                .zip(&other.weights)
                .all(|(a, b)| a.dim() == b.dim() && same(a.iter(), b.iter()))
            && match (&self.biases, &other.biases) {
                (None, None) => true,
                (Some(a), Some(b)) => a
                    .iter()
                    .zip(b)
                    .all(|(x, y)| x.len() == y.len() && same(x.iter(), y.iter())),
                _ => false,
            }
    }

    /// Fraction of exactly-zero entries in each weight matrix.
    pub fn sparsity(&self) -> Vec<f64> {
        self.weights
            .iter()
            .map(|w| w.iter().filter(|v| **v == 0.0).count() as f64 / w.len() as f64)
            .collect()
    }
}

fn check_dims(layer_dims: &[usize]) -> Result<()> {
    if layer_dims.len() < 2 {
        return Err(Error::Validation(format!(
            "need at least two layers, got {layer_dims:?}"
        )));
    }
    if let Some(l) = layer_dims.iter().position(|&d| d == 0) {
        return Err(Error::Validation(format!("layer {l} has zero neurons")));
    }
    Ok(())
}
