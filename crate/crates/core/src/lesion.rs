//! Lesion experiments on sub-modules.
//!
//! A sub-module is the set of neurons of one cluster that sit in one hidden
//! layer. Lesioning a neuron zeroes its column of incoming weights (its bias
//! is kept unless [`LesionMode::Activations`] is asked for, which also zeroes
//! the bias so the rectifier outputs exactly zero).
//!
//! Accuracies are tracked as integer counts of correct predictions, so
//! `δ(Y, X) + ℓ(X) = ℓ(X ∪ Y)` holds exactly.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use ndarray::Array2;
use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Partition, WeightedGraph};
use crate::netio::{Dataset, LayeredNetwork};
use crate::seed;
use crate::trainer::{argmax_rows, softmax_rows, Params};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubModuleId {
    pub layer: usize,
    pub module: usize,
}

impl fmt::Display for SubModuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.layer, self.module)
    }
}

impl FromStr for SubModuleId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("sub-module id {s:?} is not of the form layer-module"));
        let (l, m) = s.trim().split_once('-').ok_or_else(bad)?;
        Ok(SubModuleId {
            layer: l.parse().map_err(|_| bad())?,
            module: m.parse().map_err(|_| bad())?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubModule {
    pub layer: usize,
    pub module: usize,
    pub neurons: Vec<usize>,
    /// `|neurons|` over the number of surviving neurons in the layer.
    pub proportion: f64,
}

impl SubModule {
    pub fn id(&self) -> SubModuleId {
        SubModuleId {
            layer: self.layer,
            module: self.module,
        }
    }

    fn targets(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neurons.iter().map(move |&n| (self.layer, n))
    }
}

/// Surviving neurons of each hidden layer, by layer index.
fn surviving_hidden(net: &LayeredNetwork, g: &WeightedGraph) -> BTreeMap<usize, Vec<usize>> {
    let last = net.layer_dims().len() - 1;
    let mut out: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(layer, neuron) in g.original_index() {
        if layer > 0 && layer < last {
            out.entry(layer).or_default().push(neuron);
        }
    }
    out
}

/// Intersections of clusters with hidden layers, ordered by (layer, module).
pub fn sub_modules(net: &LayeredNetwork, g: &WeightedGraph, partition: &Partition) -> Result<Vec<SubModule>> {
    if partition.len() != g.num_vertices() {
        return Err(Error::Contract(format!(
            "partition covers {} vertices, graph has {}",
            partition.len(),
            g.num_vertices()
        )));
    }
    let survivors = surviving_hidden(net, g);
    let mut groups: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (v, &(layer, neuron)) in g.original_index().iter().enumerate() {
        if survivors.contains_key(&layer) {
            groups.entry((layer, partition.assignment()[v])).or_default().push(neuron);
        }
    }
    Ok(groups
        .into_iter()
        .map(|((layer, module), neurons)| SubModule {
            layer,
            module,
            proportion: neurons.len() as f64 / survivors[&layer].len() as f64,
            neurons,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LesionMode {
    /// Zero the incoming weights; the bias stays.
    #[default]
    IncomingWeights,
    /// Zero incoming weights and bias, so the unit's output is zero.
    Activations,
}

impl FromStr for LesionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "weights" | "incoming-weights" => Ok(LesionMode::IncomingWeights),
            "activations" => Ok(LesionMode::Activations),
            other => Err(Error::Config(format!("unknown lesion mode {other:?}"))),
        }
    }
}

fn check_targets(net: &LayeredNetwork, targets: &[(usize, usize)]) -> Result<()> {
    let dims = net.layer_dims();
    for &(layer, neuron) in targets {
        if layer == 0 || layer + 1 >= dims.len() || neuron >= dims[layer] {
            return Err(Error::Contract(format!(
                "lesion target ({layer}, {neuron}) is not a hidden neuron"
            )));
        }
    }
    Ok(())
}

/// Copy of `net` with every target's incoming weight column zeroed.
pub fn lesion_net(net: &LayeredNetwork, targets: &[(usize, usize)]) -> Result<LayeredNetwork> {
    lesion_net_with_mode(net, targets, LesionMode::IncomingWeights)
}

pub fn lesion_net_with_mode(net: &LayeredNetwork, targets: &[(usize, usize)], mode: LesionMode) -> Result<LayeredNetwork> {
    check_targets(net, targets)?;
    let mut out = net.clone();
    for &(layer, neuron) in targets {
        out.weights_mut()[layer - 1].column_mut(neuron).fill(0.0);
        if mode == LesionMode::Activations {
            if let Some(b) = out.biases_mut() {
                b[layer - 1][neuron] = 0.0;
            }
        }
    }
    Ok(out)
}

const CHUNK: usize = 2048;

/// Counts correct predictions of lesioned copies of one network, reusing the
/// intact hidden pre-activations so only layers at or after the earliest
/// lesion are recomputed.
pub struct LesionEvaluator {
    params: Params,
    mode: LesionMode,
    labels: Vec<usize>,
    /// `chunks[c][l]` is the pre-activation of hidden layer `l + 1` on chunk `c`.
    chunks: Vec<Vec<Array2<f64>>>,
    dims: Vec<usize>,
    intact: usize,
}

impl LesionEvaluator {
    pub fn new(net: &LayeredNetwork, data: &Dataset, mode: LesionMode) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Validation("lesion evaluation needs a nonempty dataset".into()));
        }
        if data.input_dim() != net.input_dim() {
            return Err(Error::Validation(format!(
                "data has {} features, network expects {}",
                data.input_dim(),
                net.input_dim()
            )));
        }
        if net.layer_dims().len() < 3 {
            return Err(Error::Contract("lesioning needs at least one hidden layer".into()));
        }
        let params = Params::from_network(net);
        let mut chunks = Vec::new();
        let mut start = 0;
        while start < data.len() {
            let x = data.slice(start, start + CHUNK).images().mapv(f64::from);
            let mut a = x;
            let mut pre = Vec::new();
            for l in 0..params.weights.len() - 1 {
                let mut z = a.dot(&params.weights[l]);
                z += &params.biases[l];
                a = z.mapv(|v| if v > 0.0 { v } else { 0.0 });
                pre.push(z);
            }
            chunks.push(pre);
            start += CHUNK;
        }
        let mut ev = LesionEvaluator {
            params,
            mode,
            labels: data.labels().to_vec(),
            chunks,
            dims: net.layer_dims().to_vec(),
            intact: 0,
        };
        ev.intact = ev.correct_with(&[])?;
        Ok(ev)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn intact_correct(&self) -> usize {
        self.intact
    }

    /// Correct predictions with `targets` lesioned.
    pub fn correct_with(&self, targets: &[(usize, usize)]) -> Result<usize> {
        let hidden = self.dims.len() - 2;
        let mut by_layer: Vec<Vec<usize>> = vec![Vec::new(); hidden + 1];
        for &(layer, neuron) in targets {
            if layer == 0 || layer > hidden || neuron >= self.dims[layer] {
                return Err(Error::Contract(format!(
                    "lesion target ({layer}, {neuron}) is not a hidden neuron"
                )));
            }
            by_layer[layer].push(neuron);
        }
        let first = (1..=hidden).find(|&l| !by_layer[l].is_empty()).unwrap_or(hidden);
        let num_w = self.params.weights.len();
        let mut correct = 0;
        for (c, pre) in self.chunks.iter().enumerate() {
            let mut z = pre[first - 1].clone();
            for layer in first..=hidden {
                if layer > first {
                    z = self.next_pre(&z, layer - 1);
                }
                for &n in &by_layer[layer] {
                    let fill = match self.mode {
                        LesionMode::IncomingWeights => self.params.biases[layer - 1][n],
                        LesionMode::Activations => 0.0,
                    };
                    z.column_mut(n).fill(fill);
                }
            }
            let logits = self.next_pre(&z, num_w - 1);
            let mut probs = logits;
            softmax_rows(&mut probs);
            let offset = c * CHUNK;
            correct += argmax_rows(&probs)
                .iter()
                .enumerate()
                .filter(|(i, &p)| self.labels[offset + i] == p)
                .count();
        }
        Ok(correct)
    }

    /// `relu(z) · W_l + b_l`.
    fn next_pre(&self, z: &Array2<f64>, l: usize) -> Array2<f64> {
        let mut out = z.mapv(|v| if v > 0.0 { v } else { 0.0 }).dot(&self.params.weights[l]);
        out += &self.params.biases[l];
        out
    }

    /// Loss of accuracy, as a count, from lesioning `targets`.
    pub fn damage(&self, targets: &[(usize, usize)]) -> Result<i64> {
        Ok(self.intact as i64 - self.correct_with(targets)? as i64)
    }

    fn fraction(&self, count: i64) -> f64 {
        count as f64 / self.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Importance {
    Important,
    SigButNotDiff,
    Small,
    Other,
}

impl fmt::Display for Importance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Importance::Important => "important",
            Importance::SigButNotDiff => "sig-but-not-diff",
            Importance::Small => "small",
            Importance::Other => "other",
        })
    }
}

impl FromStr for Importance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "important" => Ok(Importance::Important),
            "sig-but-not-diff" => Ok(Importance::SigButNotDiff),
            "small" => Ok(Importance::Small),
            "other" => Ok(Importance::Other),
            other => Err(Error::Config(format!("unknown importance label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Drop must exceed this to be practically important.
    pub min_drop: f64,
    /// Sub-modules below this share of their layer are small.
    pub min_proportion: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            min_drop: 0.01,
            min_proportion: 0.05,
        }
    }
}

/// Label a sub-module from its accuracy drop, layer share and significance.
pub fn classify(acc_drop: f64, proportion: f64, significant: bool, t: &Thresholds) -> Importance {
    if proportion < t.min_proportion {
        Importance::Small
    } else if significant && acc_drop > t.min_drop {
        Importance::Important
    } else if significant {
        Importance::SigButNotDiff
    } else {
        Importance::Other
    }
}

/// `drop` beats every null draw strictly.
pub fn beats_all(drop: f64, nulls: &[f64]) -> bool {
    nulls.iter().all(|&d| drop > d)
}

/// `(#{null >= drop} + 1) / (n + 1)`.
pub fn lesion_p_value(drop: f64, nulls: &[f64]) -> f64 {
    let r = nulls.iter().filter(|&&d| d >= drop).count();
    (r + 1) as f64 / (nulls.len() + 1) as f64
}

#[derive(Debug, Clone)]
pub struct LesionConfig {
    pub n_null: usize,
    pub seed: u64,
    pub workers: usize,
    pub mode: LesionMode,
    pub thresholds: Thresholds,
}

impl LesionConfig {
    pub fn single(seed: u64) -> Self {
        LesionConfig {
            n_null: 100,
            seed,
            workers: 1,
            mode: LesionMode::IncomingWeights,
            thresholds: Thresholds::default(),
        }
    }

    pub fn double(seed: u64) -> Self {
        LesionConfig {
            n_null: 50,
            ..Self::single(seed)
        }
    }

    fn map<T: Send>(&self, n: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
        if self.workers <= 1 {
            return (0..n).map(f).collect();
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| (0..n).into_par_iter().map(f).collect())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LesionOutcome {
    pub sub_module: SubModule,
    /// Intact minus lesioned accuracy.
    pub acc_drop: f64,
    pub null_drops: Vec<f64>,
    pub p_value: f64,
    /// `acc_drop` exceeds every null drop.
    pub significant: bool,
    pub classification: Importance,
}

impl LesionOutcome {
    pub fn null_mean(&self) -> f64 {
        crate::nullmodel::mean(&self.null_drops)
    }

    pub fn null_std(&self) -> f64 {
        crate::nullmodel::sample_std(&self.null_drops)
    }
}

fn random_subset(pool: &[usize], size: usize, seed: u64) -> Vec<usize> {
    let mut rng = seed::rng(seed);
    index::sample(&mut rng, pool.len(), size)
        .into_iter()
        .map(|i| pool[i])
        .collect()
}

/// Lesion each sub-module and compare its damage with `n_null` random
/// same-size lesions of surviving neurons in the same layer.
pub fn single_lesion_study(
    net: &LayeredNetwork,
    g: &WeightedGraph,
    partition: &Partition,
    data: &Dataset,
    cfg: &LesionConfig,
) -> Result<Vec<LesionOutcome>> {
    if cfg.n_null == 0 {
        return Err(Error::Contract("n_null must be at least 1".into()));
    }
    let survivors = surviving_hidden(net, g);
    let subs = sub_modules(net, g, partition)?;
    let ev = LesionEvaluator::new(net, data, cfg.mode)?;
    let base = seed::derive_seed(cfg.seed, 0);
    subs.into_iter()
        .map(|sm| {
            let targets: Vec<_> = sm.targets().collect();
            let drop = ev.fraction(ev.damage(&targets)?);
            let pool = &survivors[&sm.layer];
            let stream = seed::derive_seed2(base, sm.layer as u64, sm.module as u64);
            let null_drops = cfg.map(cfg.n_null, |i| {
                let picked = random_subset(pool, sm.neurons.len(), seed::derive_seed(stream, i as u64));
                let t: Vec<_> = picked.into_iter().map(|n| (sm.layer, n)).collect();
                Ok(ev.fraction(ev.damage(&t)?))
            })?;
            let significant = beats_all(drop, &null_drops);
            Ok(LesionOutcome {
                classification: classify(drop, sm.proportion, significant, &cfg.thresholds),
                p_value: lesion_p_value(drop, &null_drops),
                acc_drop: drop,
                null_drops,
                significant,
                sub_module: sm,
            })
        })
        .collect()
}

/// Whether each of a pair is important given the other, with `δ` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalImportance {
    /// The earlier sub-module.
    pub x: SubModuleId,
    pub y: SubModuleId,
    pub x_given_y: bool,
    pub y_given_x: bool,
    /// `ℓ(X ∪ Y) − ℓ(Y)`.
    pub delta_xy: f64,
    /// `ℓ(X ∪ Y) − ℓ(X)`.
    pub delta_yx: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairOutcome {
    pub flags: ConditionalImportance,
    /// Damage counts (intact minus lesioned correct predictions).
    pub loss_x: i64,
    pub loss_y: i64,
    pub loss_xy: i64,
    /// `ℓ(X′ ∪ Y)` draws, as counts.
    pub null_x: Vec<i64>,
    /// `ℓ(X ∪ Y′)` draws, as counts.
    pub null_y: Vec<i64>,
    pub num_examples: usize,
}

/// Double lesions of sub-module pairs from different layers.
pub fn double_lesion_study(
    net: &LayeredNetwork,
    g: &WeightedGraph,
    pairs: &[(SubModule, SubModule)],
    data: &Dataset,
    cfg: &LesionConfig,
) -> Result<Vec<PairOutcome>> {
    if cfg.n_null == 0 {
        return Err(Error::Contract("n_null must be at least 1".into()));
    }
    let survivors = surviving_hidden(net, g);
    let ev = &LesionEvaluator::new(net, data, cfg.mode)?;
    let base = seed::derive_seed(cfg.seed, 1);
    let n = ev.len() as f64;
    pairs
        .iter()
        .map(|(a, b)| {
            if a.layer == b.layer {
                return Err(Error::Contract(format!(
                    "sub-modules {} and {} share a layer",
                    a.id(),
                    b.id()
                )));
            }
            let (x, y) = if a.layer < b.layer { (a, b) } else { (b, a) };
            for sm in [x, y] {
                if !survivors.contains_key(&sm.layer) {
                    return Err(Error::Contract(format!("sub-module {} is not in a hidden layer", sm.id())));
                }
            }
            let tx: Vec<_> = x.targets().collect();
            let ty: Vec<_> = y.targets().collect();
            let txy: Vec<_> = tx.iter().chain(&ty).copied().collect();
            let loss_x = ev.damage(&tx)?;
            let loss_y = ev.damage(&ty)?;
            let loss_xy = ev.damage(&txy)?;
            let stream = seed::derive_seed2(
                base,
                (x.layer as u64) << 32 | x.module as u64,
                (y.layer as u64) << 32 | y.module as u64,
            );
            let draws = |fixed: &[(usize, usize)], vary: &SubModule, side: u64| {
                let pool = &survivors[&vary.layer];
                let s = seed::derive_seed(stream, side);
                cfg.map(cfg.n_null, move |i| {
                    let mut t = fixed.to_vec();
                    t.extend(
                        random_subset(pool, vary.neurons.len(), seed::derive_seed(s, i as u64))
                            .into_iter()
                            .map(|nn| (vary.layer, nn)),
                    );
                    ev.damage(&t)
                })
            };
            let null_y = draws(&tx, y, 0)?;
            let null_x = draws(&ty, x, 1)?;
            let delta_xy = loss_xy - loss_y;
            let delta_yx = loss_xy - loss_x;
            let min = cfg.thresholds.min_drop;
            Ok(PairOutcome {
                flags: ConditionalImportance {
                    x: x.id(),
                    y: y.id(),
                    x_given_y: null_x.iter().all(|&d| loss_xy > d) && delta_xy as f64 / n > min,
                    y_given_x: null_y.iter().all(|&d| loss_xy > d) && delta_yx as f64 / n > min,
                    delta_xy: delta_xy as f64 / n,
                    delta_yx: delta_yx as f64 / n,
                },
                loss_x,
                loss_y,
                loss_xy,
                null_x,
                null_y,
                num_examples: ev.len(),
            })
        })
        .collect()
}

/// Pairs of important sub-modules in different layers, earlier one first.
pub fn important_pairs(outcomes: &[LesionOutcome]) -> Vec<(SubModule, SubModule)> {
    let imp: Vec<&SubModule> = outcomes
        .iter()
        .filter(|o| o.classification == Importance::Important)
        .map(|o| &o.sub_module)
        .collect();
    let mut pairs = Vec::new();
    for (i, a) in imp.iter().enumerate() {
        for b in &imp[i + 1..] {
            if a.layer < b.layer {
                pairs.push(((*a).clone(), (*b).clone()));
            } else if b.layer < a.layer {
                pairs.push(((*b).clone(), (*a).clone()));
            }
        }
    }
    pairs.sort_by_key(|(a, b)| (a.id(), b.id()));
    pairs
}

/// Pairs of all sub-modules in different layers, earlier one first.
pub fn all_cross_layer_pairs(subs: &[SubModule]) -> Vec<(SubModule, SubModule)> {
    let mut pairs = Vec::new();
    for a in subs {
        for b in subs {
            if a.layer < b.layer {
                pairs.push((a.clone(), b.clone()));
            }
        }
    }
    pairs
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependencyEdge {
    pub from: SubModuleId,
    pub to: SubModuleId,
    pub evidence: ConditionalImportance,
}

/// Decides whether a pair's conditional importances imply information flow.
pub trait DependencyRule {
    fn has_edge(&self, pair: &ConditionalImportance) -> bool;
}

/// Edge unless each sub-module stays important given the other.
#[derive(Debug, Clone, Copy, Default)]
pub struct NotMutuallyImportant;

impl DependencyRule for NotMutuallyImportant {
    fn has_edge(&self, pair: &ConditionalImportance) -> bool {
        !(pair.x_given_y && pair.y_given_x)
    }
}

/// Edges from earlier to later sub-module for every pair the rule accepts.
pub fn derive_dependency_graph(table: &[ConditionalImportance]) -> Result<Vec<DependencyEdge>> {
    derive_dependency_graph_with(table, &NotMutuallyImportant)
}

pub fn derive_dependency_graph_with(
    table: &[ConditionalImportance],
    rule: &dyn DependencyRule,
) -> Result<Vec<DependencyEdge>> {
    let mut edges = Vec::new();
    for row in table {
        if row.x.layer >= row.y.layer {
            return Err(Error::Contract(format!(
                "pair ({}, {}) is not ordered by layer",
                row.x, row.y
            )));
        }
        if rule.has_edge(row) {
            edges.push(DependencyEdge {
                from: row.x,
                to: row.y,
                evidence: row.clone(),
            });
        }
    }
    Ok(edges)
}

/// Columns: layer, label, acc_diff (lesioned minus intact), p_value,
/// proportion, type, null_mean, null_std.
pub fn write_single_lesion_csv<W: Write>(outcomes: &[LesionOutcome], mut out: W) -> std::io::Result<()> {
    writeln!(out, "layer,label,acc_diff,p_value,proportion,type,null_mean,null_std")?;
    for o in outcomes {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            o.sub_module.layer,
            o.sub_module.module,
            0.0 - o.acc_drop,
            o.p_value,
            o.sub_module.proportion,
            o.classification,
            0.0 - o.null_mean(),
            o.null_std()
        )?;
    }
    Ok(())
}

/// Columns: x, y, x_given_y, y_given_x, delta_xy, delta_yx.
pub fn write_pair_csv<W: Write>(rows: &[ConditionalImportance], mut out: W) -> std::io::Result<()> {
    writeln!(out, "x,y,x_given_y,y_given_x,delta_xy,delta_yx")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.x, r.y, r.x_given_y, r.y_given_x, r.delta_xy, r.delta_yx
        )?;
    }
    Ok(())
}

/// Graphviz digraph with one node per sub-module named `layer-module`.
pub fn write_dot<W: Write>(nodes: &[SubModuleId], edges: &[DependencyEdge], mut out: W) -> std::io::Result<()> {
    writeln!(out, "digraph dependencies {{")?;
    for n in nodes {
        writeln!(out, "  \"{n}\";")?;
    }
    for e in edges {
        writeln!(out, "  \"{}\" -> \"{}\";", e.from, e.to)?;
    }
    writeln!(out, "}}")
}

/// Partition of `g` reconstructed from per-neuron cluster labels.
pub fn partition_from_labels(g: &WeightedGraph, labels: &[crate::graph::NeuronLabel]) -> Result<Partition> {
    let mut assignment = vec![usize::MAX; g.num_vertices()];
    let mut k = 0;
    for l in labels {
        let v = g.vertex_of(l.layer, l.neuron).ok_or_else(|| {
            Error::Validation(format!(
                "partition names neuron ({}, {}) which is not in the graph",
                l.layer, l.neuron
            ))
        })?;
        assignment[v] = l.cluster;
        k = k.max(l.cluster + 1);
    }
    if let Some(v) = assignment.iter().position(|&c| c == usize::MAX) {
        let (layer, neuron) = g.original_index()[v];
        return Err(Error::Validation(format!(
            "partition has no cluster for neuron ({layer}, {neuron})"
        )));
    }
    Partition::new(assignment, k)
}
