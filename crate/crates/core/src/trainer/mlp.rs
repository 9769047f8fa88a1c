//! Forward and backward passes of a rectifier MLP with a softmax head.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;

use crate::error::{Error, Result};
use crate::netio::{Dataset, LayeredNetwork};
use crate::seed;

use super::prune::WeightMask;

/// f64 working copy of a network's parameters.
#[derive(Debug, Clone)]
pub(crate) struct Params {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl Params {
    pub fn from_network(net: &LayeredNetwork) -> Self {
        let weights = net.weights().iter().map(|w| w.mapv(f64::from)).collect();
        let biases = match net.biases() {
            Some(b) => b.iter().map(|b| b.mapv(f64::from)).collect(),
            None => net.layer_dims()[1..].iter().map(|&d| Array1::zeros(d)).collect(),
        };
        Params { weights, biases }
    }

    pub fn to_network(&self) -> Result<LayeredNetwork> {
        LayeredNetwork::new(
            self.weights.iter().map(|w| w.mapv(|v| v as f32)).collect(),
            Some(self.biases.iter().map(|b| b.mapv(|v| v as f32)).collect()),
        )
    }
}

/// Everything the backward pass needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    /// Input to each weight layer after dropout: `inputs[l]` feeds `weights[l]`.
    pub inputs: Vec<Array2<f64>>,
    /// Hidden pre-activations, one per hidden layer.
    pub pre_activations: Vec<Array2<f64>>,
    /// Dropout scale factors (`0` or `1/(1-p)`) per non-output layer; empty when off.
    pub dropout_masks: Vec<Array2<f64>>,
    pub probabilities: Array2<f64>,
}

impl ForwardPass {
    /// Hidden-layer activations after the rectifier (before dropout).
    pub fn hidden_activations(&self) -> Vec<Array2<f64>> {
        self.pre_activations.iter().map(|z| z.mapv(relu)).collect()
    }
}

fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

pub(crate) fn softmax_rows(z: &mut Array2<f64>) {
    for mut row in z.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
}

fn dropout_mask(shape: (usize, usize), rate: f64, rng: &mut impl Rng) -> Array2<f64> {
    let keep = 1.0 / (1.0 - rate);
    Array2::from_shape_simple_fn(shape, || if rng.random::<f64>() < rate { 0.0 } else { keep })
}

pub(crate) fn forward_params(
    p: &Params,
    batch: ArrayView2<'_, f64>,
    dropout_rate: f64,
    training: bool,
    rng: &mut impl Rng,
) -> Result<ForwardPass> {
    if batch.ncols() != p.weights[0].nrows() {
        return Err(Error::Validation(format!(
            "batch has {} columns, network expects {}",
            batch.ncols(),
            p.weights[0].nrows()
        )));
    }
    let use_dropout = training && dropout_rate > 0.0;
    let num_layers = p.weights.len();
    let mut inputs = Vec::with_capacity(num_layers);
    let mut pre_activations = Vec::with_capacity(num_layers - 1);
    let mut dropout_masks = Vec::new();

    let mut a = batch.to_owned();
    for l in 0..num_layers {
        if use_dropout {
            let m = dropout_mask(a.dim(), dropout_rate, rng);
            a *= &m;
            dropout_masks.push(m);
        }
        let mut z = a.dot(&p.weights[l]);
        z += &p.biases[l];
        inputs.push(a);
        if l + 1 < num_layers {
            a = z.mapv(relu);
            pre_activations.push(z);
        } else {
            softmax_rows(&mut z);
            a = z;
        }
    }
    Ok(ForwardPass {
        inputs,
        pre_activations,
        dropout_masks,
        probabilities: a,
    })
}

/// Forward pass of `net` on the rows of `batch`.
///
/// With `training` set and a positive `dropout_rate`, every non-output layer
/// (input included) is dropped with probability `dropout_rate` and survivors
/// are scaled by `1 / (1 - dropout_rate)`.
pub fn forward(
    net: &LayeredNetwork,
    batch: ArrayView2<'_, f32>,
    dropout_rate: f64,
    training: bool,
    seed: u64,
) -> Result<ForwardPass> {
    let p = Params::from_network(net);
    forward_params(&p, batch.mapv(f64::from).view(), dropout_rate, training, &mut seed::rng(seed))
}

/// Loss gradients with respect to every parameter.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub loss: f64,
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// Mean cross-entropy of a forward pass.
pub(crate) fn cross_entropy(probs: &Array2<f64>, labels: &[usize]) -> f64 {
    let total: f64 = labels
        .iter()
        .enumerate()
        .map(|(i, &y)| -probs[[i, y]].max(f64::MIN_POSITIVE).ln())
        .sum();
    total / labels.len() as f64
}

pub(crate) fn backward(p: &Params, fp: &ForwardPass, labels: &[usize], mask: Option<&WeightMask>) -> Gradients {
    let batch = labels.len() as f64;
    let num_layers = p.weights.len();
    let mut dz = fp.probabilities.clone();
    for (i, &y) in labels.iter().enumerate() {
        dz[[i, y]] -= 1.0;
    }
    dz /= batch;

    let mut gw = vec![Array2::zeros((0, 0)); num_layers];
    let mut gb = vec![Array1::zeros(0); num_layers];
    for l in (0..num_layers).rev() {
        gw[l] = fp.inputs[l].t().dot(&dz);
        gb[l] = dz.sum_axis(Axis(0));
        if l == 0 {
            break;
        }
        let mut da = dz.dot(&p.weights[l].t());
        if !fp.dropout_masks.is_empty() {
            da *= &fp.dropout_masks[l];
        }
        Zip::from(&mut da)
            .and(&fp.pre_activations[l - 1])
            .for_each(|d, &z| {
                if z <= 0.0 {
                    *d = 0.0;
                }
            });
        dz = da;
    }
    if let Some(mask) = mask {
        mask.apply_f64(&mut gw);
    }
    Gradients {
        loss: cross_entropy(&fp.probabilities, labels),
        weights: gw,
        biases: gb,
    }
}

/// Analytic gradients of the mean cross-entropy on `batch`.
///
/// `dropout` fixes a mask via `(rate, seed)`. Entries pruned by `mask` get a
/// gradient of exactly zero.
pub fn loss_and_gradients(
    net: &LayeredNetwork,
    batch: &Dataset,
    dropout: Option<(f64, u64)>,
    mask: Option<&WeightMask>,
) -> Result<Gradients> {
    let p = Params::from_network(net);
    let x = batch.images().mapv(f64::from);
    let (rate, s) = dropout.unwrap_or((0.0, 0));
    let fp = forward_params(&p, x.view(), rate, dropout.is_some(), &mut seed::rng(s))?;
    Ok(backward(&p, &fp, batch.labels(), mask))
}

fn loss_with_masks(p: &Params, x: ArrayView2<'_, f64>, labels: &[usize], masks: &[Array2<f64>]) -> f64 {
    let mut a = x.to_owned();
    let n = p.weights.len();
    for l in 0..n {
        if !masks.is_empty() {
            a *= &masks[l];
        }
        let mut z = a.dot(&p.weights[l]);
        z += &p.biases[l];
        if l + 1 < n {
            a = z.mapv(relu);
        } else {
            softmax_rows(&mut z);
            a = z;
        }
    }
    cross_entropy(&a, labels)
}

/// Step of the central difference.
pub const GRADIENT_CHECK_STEP: f64 = 1e-5;

/// Largest relative gap between analytic and central-difference gradients
/// over all weights and biases, `|g - ĝ| / max(|g| + |ĝ|, 1e-8)`.
pub fn backward_check(net: &LayeredNetwork, batch: &Dataset) -> Result<f64> {
    backward_check_with_dropout(net, batch, None)
}

/// [`backward_check`] with a dropout mask held fixed across all evaluations.
pub fn backward_check_with_dropout(net: &LayeredNetwork, batch: &Dataset, dropout: Option<(f64, u64)>) -> Result<f64> {
    let mut p = Params::from_network(net);
    let x = batch.images().mapv(f64::from);
    let labels = batch.labels();
    let (rate, s) = dropout.unwrap_or((0.0, 0));
    let fp = forward_params(&p, x.view(), rate, dropout.is_some(), &mut seed::rng(s))?;
    let masks = fp.dropout_masks.clone();
    let grads = backward(&p, &fp, labels, None);

    let h = GRADIENT_CHECK_STEP;
    let rel = |a: f64, n: f64| (a - n).abs() / (a.abs() + n.abs()).max(1e-8);
    let mut worst: f64 = 0.0;
    for l in 0..p.weights.len() {
        for idx in 0..p.weights[l].len() {
            let (r, c) = (idx / p.weights[l].ncols(), idx % p.weights[l].ncols());
            let orig = p.weights[l][[r, c]];
            p.weights[l][[r, c]] = orig + h;
            let up = loss_with_masks(&p, x.view(), labels, &masks);
            p.weights[l][[r, c]] = orig - h;
            let down = loss_with_masks(&p, x.view(), labels, &masks);
            p.weights[l][[r, c]] = orig;
            worst = worst.max(rel(grads.weights[l][[r, c]], (up - down) / (2.0 * h)));
        }
        for j in 0..p.biases[l].len() {
            let orig = p.biases[l][j];
            p.biases[l][j] = orig + h;
            let up = loss_with_masks(&p, x.view(), labels, &masks);
            p.biases[l][j] = orig - h;
            let down = loss_with_masks(&p, x.view(), labels, &masks);
            p.biases[l][j] = orig;
            worst = worst.max(rel(grads.biases[l][j], (up - down) / (2.0 * h)));
        }
    }
    Ok(worst)
}

/// Index of the largest entry in each row; ties go to the lowest index.
pub(crate) fn argmax_rows(m: &Array2<f64>) -> Vec<usize> {
    m.rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

const EVAL_CHUNK: usize = 2048;

pub(crate) fn correct_count_params(p: &Params, data: &Dataset) -> Result<usize> {
    let mut correct = 0;
    let mut rng = seed::rng(0);
    let mut start = 0;
    while start < data.len() {
        let chunk = data.slice(start, start + EVAL_CHUNK);
        let x = chunk.images().mapv(f64::from);
        let fp = forward_params(p, x.view(), 0.0, false, &mut rng)?;
        correct += argmax_rows(&fp.probabilities)
            .iter()
            .zip(chunk.labels())
            .filter(|(a, b)| a == b)
            .count();
        start += EVAL_CHUNK;
    }
    Ok(correct)
}

/// Number of examples whose argmax prediction equals the label.
pub fn correct_count(net: &LayeredNetwork, data: &Dataset) -> Result<usize> {
    correct_count_params(&Params::from_network(net), data)
}

/// Fraction of argmax-correct predictions, dropout off.
pub fn accuracy(net: &LayeredNetwork, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Validation("accuracy of an empty dataset".into()));
    }
    Ok(correct_count(net, data)? as f64 / data.len() as f64)
}
