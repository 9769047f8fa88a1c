//! Command-line front end.
//!
//! Every subcommand takes its settings from flags, then from the matching
//! table of an optional `--config` TOML file (`[train]`, `[cluster]`,
//! `[shuffle-test]`, `[lesion]`, keys named like the long flags with `-` or
//! `_`), then from built-in defaults. A run without `--seed` draws one,
//! prints it and records it in its outputs.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{network_to_graph, read_partition_csv, write_partition_csv};
use crate::lesion::{self, LesionConfig, LesionMode};
use crate::netio::{self, Dataset, LayeredNetwork};
use crate::nullmodel::{self, NullConfig, ShuffleKind};
use crate::seed;
use crate::spectral::{cluster_graph, ClusterConfig, EigenConfig, SolverKind};
use crate::trainer::{self, PruneConfig, TrainConfig};

#[derive(Debug, Parser)]
#[command(name = "modgraph", version, about = "Clusterability of MLP weight graphs")]
pub struct Cli {
    /// TOML file with per-subcommand defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train (and optionally prune) an MLP.
    Train(TrainArgs),
    /// Spectrally cluster a network and report its n-cut.
    Cluster(ClusterArgs),
    /// Compare a network's n-cut with shuffled copies.
    ShuffleTest(ShuffleArgs),
    /// Single and double lesion studies over sub-modules.
    Lesion(LesionArgs),
}

#[derive(Debug, Args, Default)]
pub struct DataArgs {
    /// Directory holding an IDX image/label pair.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Which IDX pair to read: train or test.
    #[arg(long)]
    pub split: Option<String>,
    /// Skip this many leading examples.
    #[arg(long)]
    pub skip: Option<usize>,
    /// Use at most this many examples.
    #[arg(long)]
    pub take: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// `idx` (read --data) or `random`; `mnist` is an alias of `idx`.
    #[arg(long)]
    pub dataset: Option<String>,
    #[command(flatten)]
    pub data: DataArgs,
    /// Examples in the random dataset.
    #[arg(long)]
    pub examples: Option<usize>,
    /// Input width of the random dataset.
    #[arg(long)]
    pub input_dim: Option<usize>,
    #[arg(long)]
    pub classes: Option<usize>,
    /// Hidden layer widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub dropout: Option<f64>,
    /// Add a pruning phase after the dense epochs.
    #[arg(long)]
    pub prune: bool,
    #[arg(long)]
    pub prune_epochs: Option<usize>,
    #[arg(long)]
    pub initial_sparsity: Option<f64>,
    #[arg(long)]
    pub final_sparsity: Option<f64>,
    #[arg(long)]
    pub prune_frequency: Option<usize>,
    /// Keep the example order fixed across epochs.
    #[arg(long)]
    pub no_shuffle_epochs: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    pub network: PathBuf,
    #[arg(long, short)]
    pub k: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// auto, dense or block-krylov.
    #[arg(long)]
    pub solver: Option<String>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ShuffleArgs {
    pub network: PathBuf,
    #[arg(long, short)]
    pub k: Option<usize>,
    #[arg(long)]
    pub n_shuffles: Option<usize>,
    /// full or nonzero.
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = "MODGRAPH_WORKERS")]
    pub workers: Option<usize>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LesionArgs {
    pub network: PathBuf,
    /// Partition CSV written by `cluster`.
    pub partition: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub n_null: Option<usize>,
    /// Double-lesion important pairs and emit the dependency graph.
    #[arg(long)]
    pub pairs: bool,
    /// Double-lesion every cross-layer pair of sub-modules.
    #[arg(long)]
    pub all_pairs: bool,
    #[arg(long)]
    pub pair_n_null: Option<usize>,
    /// weights or activations.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = "MODGRAPH_WORKERS")]
    pub workers: Option<usize>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

/// Values from the config file's table for one subcommand.
struct ConfigTable(toml::Table);

impl ConfigTable {
    fn load(path: Option<&Path>, section: &str) -> Result<Self> {
        let Some(path) = path else {
            return Ok(ConfigTable(toml::Table::new()));
        };
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let root: toml::Table = text
            .parse()
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        match root.get(section) {
            None => Ok(ConfigTable(toml::Table::new())),
            Some(toml::Value::Table(t)) => Ok(ConfigTable(t.clone())),
            Some(_) => Err(Error::Config(format!("[{section}] in {} is not a table", path.display()))),
        }
    }

    fn get<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>> {
        let value = self.0.get(key).or_else(|| self.0.get(&key.replace('-', "_")));
        value
            .map(|v| {
                v.clone()
                    .try_into()
                    .map_err(|e| Error::Config(format!("config key {key}: {e}")))
            })
            .transpose()
    }

    /// Flag value, else config value, else `default`.
    fn pick<T: DeserializeOwned>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        Ok(match flag {
            Some(v) => v,
            None => self.get(key)?.unwrap_or(default),
        })
    }

    fn pick_opt<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        Ok(match flag {
            Some(v) => Some(v),
            None => self.get(key)?,
        })
    }

    fn switch(&self, flag: bool, key: &str) -> Result<bool> {
        Ok(flag || self.get(key)?.unwrap_or(false))
    }
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = seed::fresh_seed();
        eprintln!("seed: {s}");
        s
    })
}

fn out_dir(cfg: &ConfigTable, flag: Option<PathBuf>) -> Result<PathBuf> {
    let dir = cfg.pick(flag, "out", PathBuf::from("."))?;
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

fn load_data(cfg: &ConfigTable, args: DataArgs, default_split: &str) -> Result<Dataset> {
    let dir: PathBuf = cfg
        .pick_opt(args.data, "data")?
        .ok_or_else(|| Error::Config("--data <DIR> is required".into()))?;
    let split = cfg.pick(args.split, "split", default_split.to_string())?;
    let (images, labels) = netio::find_idx_pair(&dir, &split)?;
    let data = netio::load_idx(images, labels)?;
    let skip = cfg.pick(args.skip, "skip", 0)?;
    let take = cfg.pick(args.take, "take", usize::MAX)?;
    let data = data.slice(skip, skip.saturating_add(take));
    if data.is_empty() {
        return Err(Error::Validation(format!("no examples left after skipping {skip}")));
    }
    Ok(data)
}

#[derive(Serialize)]
struct TrainReport {
    seed: u64,
    layer_dims: Vec<usize>,
    num_examples: usize,
    config: TrainConfig,
    final_train_acc: f64,
    final_sparsity: Vec<f64>,
}

pub fn cmd_train(args: TrainArgs, config: Option<&Path>) -> Result<()> {
    let cfg = ConfigTable::load(config, "train")?;
    let seed = resolve_seed(cfg.pick_opt(args.seed, "seed")?);
    let kind = cfg.pick(args.dataset, "dataset", "idx".to_string())?;
    let data = match kind.as_str() {
        "random" => netio::make_random_dataset(
            cfg.pick(args.examples, "examples", 3000)?,
            cfg.pick(args.input_dim, "input-dim", 784)?,
            cfg.pick(args.classes, "classes", 10)?,
            seed::derive_seed(seed, 100),
        )?,
        "idx" | "mnist" | "fashion" => load_data(&cfg, args.data, "train")?,
        other => return Err(Error::Config(format!("unknown dataset {other:?}"))),
    };
    let hidden = cfg.pick(args.hidden, "hidden", vec![64, 64, 64, 64])?;
    let mut dims = vec![data.input_dim()];
    dims.extend(&hidden);
    dims.push(data.num_classes().max(cfg.pick(args.classes, "classes", 0)?));
    let net = LayeredNetwork::glorot_uniform(&dims, seed::derive_seed(seed, 101))?;

    let batch_size = cfg.pick(args.batch_size, "batch-size", 128)?;
    let mut train_cfg = TrainConfig {
        epochs: cfg.pick(args.epochs, "epochs", 20)?,
        batch_size,
        learning_rate: cfg.pick(args.lr, "lr", 1e-3)?,
        dropout_rate: cfg.pick(args.dropout, "dropout", 0.0)?,
        seed,
        shuffle_each_epoch: !cfg.switch(args.no_shuffle_epochs, "no-shuffle-epochs")?,
        ..TrainConfig::default()
    };
    if cfg.switch(args.prune, "prune")? {
        let epochs = cfg.pick(args.prune_epochs, "prune-epochs", 20)?;
        let mut p = PruneConfig::cubic(epochs, train_cfg.steps_per_epoch(data.len()));
        p.initial_sparsity = cfg.pick(args.initial_sparsity, "initial-sparsity", p.initial_sparsity)?;
        p.final_sparsity = cfg.pick(args.final_sparsity, "final-sparsity", p.final_sparsity)?;
        p.frequency = cfg.pick(args.prune_frequency, "prune-frequency", p.frequency)?;
        train_cfg.prune = Some(p);
    }

    let out = trainer::train(&net, &data, &train_cfg)?;
    let dir = out_dir(&cfg, args.out)?;
    netio::save_archive(&out.network, dir.join("final.mg"))?;
    if let Some(pre) = &out.pre_pruning {
        netio::save_archive(pre, dir.join("pre_pruning.mg"))?;
    }
    write_with(&dir.join("metrics.csv"), |w| trainer::write_metrics_csv(&out.metrics, w))?;
    let report = TrainReport {
        seed,
        layer_dims: dims,
        num_examples: data.len(),
        final_train_acc: out.metrics.last().map_or(0.0, |m| m.train_acc),
        final_sparsity: out.network.sparsity(),
        config: train_cfg,
    };
    write_json(&dir.join("train.json"), &report)?;
    println!(
        "trained {} epochs, train accuracy {:.4}, wrote {}",
        out.metrics.len(),
        report.final_train_acc,
        dir.display()
    );
    Ok(())
}

fn parse_solver(s: &str) -> Result<SolverKind> {
    match s {
        "auto" => Ok(SolverKind::Auto),
        "dense" => Ok(SolverKind::Dense),
        "block-krylov" | "krylov" => Ok(SolverKind::BlockKrylov),
        other => Err(Error::Config(format!("unknown solver {other:?}"))),
    }
}

pub fn cmd_cluster(args: ClusterArgs, config: Option<&Path>) -> Result<()> {
    let cfg = ConfigTable::load(config, "cluster")?;
    let k = cfg.pick(args.k, "k", 4)?;
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let seed = resolve_seed(cfg.pick_opt(args.seed, "seed")?);
    let eigen = EigenConfig {
        tol: cfg.pick(args.tol, "tol", EigenConfig::default().tol)?,
        solver: parse_solver(&cfg.pick(args.solver, "solver", "auto".to_string())?)?,
        ..EigenConfig::default()
    };
    let cluster_cfg = ClusterConfig {
        eigen,
        ..ClusterConfig::with_seed(seed)
    };
    let net = netio::load_archive(&args.network)?;
    let g = network_to_graph(&net)?;
    let result = cluster_graph(&g, k, &cluster_cfg)?;
    let dir = out_dir(&cfg, args.out)?;
    write_json(&dir.join("clustering.json"), &result.report(&g, cluster_cfg.eigen.tol))?;
    write_with(&dir.join("partition.csv"), |w| write_partition_csv(&g, &result.partition, w))?;
    println!("n-cut {:.6} (k = {k}, {} vertices)", result.ncut_value, g.num_vertices());
    Ok(())
}

pub fn cmd_shuffle_test(args: ShuffleArgs, config: Option<&Path>) -> Result<()> {
    let cfg = ConfigTable::load(config, "shuffle-test")?;
    let k = cfg.pick(args.k, "k", 4)?;
    let n = cfg.pick(args.n_shuffles, "n-shuffles", 320)?;
    if k == 0 || n == 0 {
        return Err(Error::Config("k and n-shuffles must be at least 1".into()));
    }
    let kind: ShuffleKind = cfg.pick(args.kind, "kind", "full".to_string())?.parse()?;
    let seed = resolve_seed(cfg.pick_opt(args.seed, "seed")?);
    let mut null_cfg = NullConfig::new(kind, n, seed);
    null_cfg.workers = cfg.pick(args.workers, "workers", 1)?.max(1);
    let net = netio::load_archive(&args.network)?;
    let dist = nullmodel::null_distribution(&net, k, &null_cfg)?;
    let dir = out_dir(&cfg, args.out)?;
    write_with(&dir.join("nulls.csv"), |w| dist.write_csv(w))?;
    write_json(&dir.join("summary.json"), &dist.summary())?;
    println!(
        "observed {:.4}, null {:.4} ± {:.4}, p = {:.3}",
        dist.observed_ncut,
        dist.mean(),
        dist.std(),
        dist.p_value
    );
    Ok(())
}

#[derive(Serialize)]
struct LesionReport {
    seed: u64,
    mode: LesionMode,
    num_examples: usize,
    single: Vec<lesion::LesionOutcome>,
    pairs: Vec<lesion::PairOutcome>,
    edges: Vec<lesion::DependencyEdge>,
}

pub fn cmd_lesion(args: LesionArgs, config: Option<&Path>) -> Result<()> {
    let cfg = ConfigTable::load(config, "lesion")?;
    let seed = resolve_seed(cfg.pick_opt(args.seed, "seed")?);
    let mode: LesionMode = cfg.pick(args.mode, "mode", "weights".to_string())?.parse()?;
    let workers = cfg.pick(args.workers, "workers", 1)?.max(1);
    let net = netio::load_archive(&args.network)?;
    let g = network_to_graph(&net)?;
    let file = File::open(&args.partition).map_err(|e| Error::io(&args.partition, e))?;
    let labels = read_partition_csv(BufReader::new(file))?;
    let partition = lesion::partition_from_labels(&g, &labels)?;
    let data = load_data(&cfg, args.data, "test")?;

    let single_cfg = LesionConfig {
        n_null: cfg.pick(args.n_null, "n-null", 100)?,
        workers,
        mode,
        ..LesionConfig::single(seed)
    };
    let single = lesion::single_lesion_study(&net, &g, &partition, &data, &single_cfg)?;
    let dir = out_dir(&cfg, args.out)?;
    write_with(&dir.join("single_lesion.csv"), |w| lesion::write_single_lesion_csv(&single, w))?;

    let all_pairs = cfg.switch(args.all_pairs, "all-pairs")?;
    let mut pairs = Vec::new();
    let mut edges = Vec::new();
    if cfg.switch(args.pairs, "pairs")? || all_pairs {
        let pair_cfg = LesionConfig {
            n_null: cfg.pick(args.pair_n_null, "pair-n-null", 50)?,
            ..single_cfg.clone()
        };
        let important = lesion::important_pairs(&single);
        let selected = if all_pairs {
            let subs: Vec<_> = single.iter().map(|o| o.sub_module.clone()).collect();
            lesion::all_cross_layer_pairs(&subs)
        } else {
            important.clone()
        };
        pairs = lesion::double_lesion_study(&net, &g, &selected, &data, &pair_cfg)?;
        let is_important = |p: &lesion::PairOutcome| {
            important
                .iter()
                .any(|(a, b)| a.id() == p.flags.x && b.id() == p.flags.y)
        };
        let table: Vec<_> = pairs.iter().filter(|p| is_important(p)).map(|p| p.flags.clone()).collect();
        edges = lesion::derive_dependency_graph(&table)?;
        write_with(&dir.join("pairs.csv"), |w| lesion::write_pair_csv(&table, w))?;
        if all_pairs {
            let all: Vec<_> = pairs.iter().map(|p| p.flags.clone()).collect();
            write_with(&dir.join("all_pairs.csv"), |w| lesion::write_pair_csv(&all, w))?;
        }
        let mut nodes: Vec<_> = single
            .iter()
            .filter(|o| o.classification == lesion::Importance::Important)
            .map(|o| o.sub_module.id())
            .collect();
        nodes.sort();
        write_with(&dir.join("dependencies.dot"), |w| lesion::write_dot(&nodes, &edges, w))?;
    }
    let important = single
        .iter()
        .filter(|o| o.classification == lesion::Importance::Important)
        .count();
    write_json(
        &dir.join("lesion.json"),
        &LesionReport {
            seed,
            mode,
            num_examples: data.len(),
            single,
            pairs,
            edges,
        },
    )?;
    println!("{important} important sub-modules, wrote {}", dir.display());
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    let config = cli.config.as_deref();
    match cli.command {
        Command::Train(a) => cmd_train(a, config),
        Command::Cluster(a) => cmd_cluster(a, config),
        Command::ShuffleTest(a) => cmd_shuffle_test(a, config),
        Command::Lesion(a) => cmd_lesion(a, config),
    }
}

/// Parse `std::env::args`, run, and map errors to a nonzero exit status.
pub fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
