use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use decl::io::{read_dataset, read_json, write_dataset, write_json, Dataset};
use decl::lab::{
    evaluate, exactness_certificate_cor1, exactness_probe_sampling_with, gen_synthetic, run_benchmark, Algorithm,
    BenchConfig, ProbeConfig, SyntheticConfig, SyntheticFamily,
};
use decl::learning::{global_objective, train_local, train_subgradient, LossFn, StepSchedule, TrainConfig};
use decl::model::{Family, Instance, WeightVector};
use decl::Decomposition;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::manifest::{load_config, now, RunManifest};
use crate::Globals;

fn prepare_out(out: &Path) -> CliResult<()> {
    fs::create_dir_all(out)?;
    Ok(())
}

fn required(path: &Option<PathBuf>, field: &str) -> CliResult<PathBuf> {
    path.clone()
        .ok_or_else(|| CliError::config(field, format!("missing; pass --{field} or set it in the config file")))
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FamilyArg {
    Singleton,
    Chain,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    /// Number of random linear constraints.
    #[arg(long)]
    constraints: Option<usize>,
    /// Number of random positive OR clauses.
    #[arg(long)]
    clauses: Option<usize>,
    #[arg(long)]
    min_feasible: Option<usize>,
    /// Comma-separated training sizes; the largest is generated.
    #[arg(long, value_delimiter = ',')]
    train_sizes: Option<Vec<usize>>,
    #[arg(long)]
    test_size: Option<usize>,
    #[arg(long)]
    validation_size: Option<usize>,
    #[arg(long, value_enum)]
    family: Option<FamilyArg>,
    #[arg(long)]
    alphabet: Option<usize>,
    /// Use one input row per instance for every variable.
    #[arg(long)]
    shared_input: bool,
}

pub fn gen(globals: &Globals, args: GenArgs) -> CliResult<()> {
    let started = now();
    let mut cfg: SyntheticConfig = load_config(globals.config.as_deref(), "gen")?;
    macro_rules! set {
        ($($field:ident),*) => { $( if let Some(v) = args.$field { cfg.$field = v; } )* };
    }
    set!(n, d, constraints, clauses, min_feasible, train_sizes, test_size, validation_size, alphabet);
    if let Some(f) = args.family {
        cfg.family = match f {
            FamilyArg::Singleton => SyntheticFamily::Singleton,
            FamilyArg::Chain => SyntheticFamily::Chain,
        };
    }
    if args.shared_input {
        cfg.shared_input = true;
    }
    if let Some(seed) = globals.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;

    let data = gen_synthetic(&cfg)?;
    prepare_out(&globals.out)?;
    let written = write_dataset(&globals.out, &data, &cfg)?;
    let feasible = data.space.count_feasible()?;
    RunManifest::write(&globals.out, "gen", &cfg, cfg.seed, written, started)?;
    println!(
        "generated {} train, {} validation and {} test instances; {feasible} feasible outputs after {} attempt(s)",
        data.train.len(),
        data.validation.len(),
        data.test.len(),
        data.attempts
    );
    Ok(())
}

/// Which trainer `train` runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum TrainAlgo {
    Local,
    Global,
    DeclK(usize),
    DeclSpair,
}

fn parse_algo(name: &str, k: Option<usize>) -> CliResult<TrainAlgo> {
    match name {
        "ll" => Ok(TrainAlgo::Local),
        "gl" => Ok(TrainAlgo::Global),
        "decl-spair" => Ok(TrainAlgo::DeclSpair),
        "decl-k" => k
            .map(TrainAlgo::DeclK)
            .ok_or_else(|| CliError::config("k", "decl-k needs --k")),
        _ => name
            .strip_prefix("decl-")
            .and_then(|k| k.parse().ok())
            .map(TrainAlgo::DeclK)
            .ok_or_else(|| {
                CliError::config("algo", format!("unknown algorithm `{name}`; expected ll, gl, decl-k or decl-spair"))
            }),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    pub data: Option<PathBuf>,
    pub algo: String,
    pub k: Option<usize>,
    pub loss: LossFn,
    /// Train on this many leading training instances.
    pub size: Option<usize>,
    pub train: TrainConfig,
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings {
            data: None,
            algo: "decl-k".to_string(),
            k: Some(2),
            loss: LossFn::Hamming,
            size: None,
            train: TrainConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ScheduleArg {
    Constant,
    Inverse,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset directory written by `gen`.
    #[arg(long)]
    data: Option<PathBuf>,
    /// ll, gl, decl-k (with --k), decl-<k> or decl-spair.
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    /// hamming, zero-one or perceptron.
    #[arg(long)]
    loss: Option<LossFn>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, value_enum)]
    schedule: Option<ScheduleArg>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Visit this many random sets per example instead of all of them.
    #[arg(long)]
    sample_sets: Option<usize>,
    #[arg(long)]
    size: Option<usize>,
    /// Write the averaged weights.
    #[arg(long)]
    averaging: bool,
    /// Visit examples in file order.
    #[arg(long)]
    no_shuffle: bool,
    #[arg(long)]
    early_stop: bool,
    /// Also trace the global objective every epoch.
    #[arg(long)]
    track_global: bool,
}

fn spair_decompositions(ds: &Dataset, train: &[Instance]) -> CliResult<Vec<Decomposition>> {
    if ds.model.family() != Family::PairwiseNetwork {
        return Err(CliError::config(
            "algo",
            "decl-spair requires a pairwise model: its sets come from the edges of the model graph, and this dataset's model is singleton",
        ));
    }
    match (&ds.meta, ds.model.alphabet()) {
        (Some(meta), 2) => train
            .iter()
            .map(|inst| {
                let pot = ds.model.potentials(&meta.w_star, &inst.x)?;
                Ok(Decomposition::s_pair_from_potentials(&inst.y, &pot)?)
            })
            .collect(),
        _ if ds.model.is_chain() => Ok(train.iter().map(|inst| Decomposition::s_pair_blocks(&inst.y)).collect()),
        _ => Err(CliError::config(
            "algo",
            "decl-spair on a non-chain model needs binary labels and the generating weights in meta.json",
        )),
    }
}

pub fn train(globals: &Globals, args: TrainArgs) -> CliResult<()> {
    let started = now();
    let mut s: TrainSettings = load_config(globals.config.as_deref(), "train")?;
    if args.data.is_some() {
        s.data = args.data;
    }
    if let Some(a) = args.algo {
        s.algo = a;
    }
    if args.k.is_some() {
        s.k = args.k;
    }
    if let Some(l) = args.loss {
        s.loss = l;
    }
    if args.size.is_some() {
        s.size = args.size;
    }
    let t = &mut s.train;
    if let Some(v) = args.epochs {
        t.epochs = v;
    }
    if let Some(v) = args.eta {
        t.eta0 = v;
    }
    if let Some(v) = args.schedule {
        t.schedule = match v {
            ScheduleArg::Constant => StepSchedule::Constant,
            ScheduleArg::Inverse => StepSchedule::Inverse,
        };
    }
    if let Some(v) = args.lambda {
        t.lambda = v;
    }
    if args.sample_sets.is_some() {
        t.sample_sets = args.sample_sets;
    }
    t.averaging |= args.averaging;
    t.shuffle &= !args.no_shuffle;
    t.early_stop |= args.early_stop;
    t.track_global |= args.track_global;
    if let Some(seed) = globals.seed {
        t.seed = seed;
    }
    t.validate()?;
    let algo = parse_algo(&s.algo, s.k)?;

    let ds = read_dataset(&required(&s.data, "data")?)?;
    let train = match s.size {
        Some(0) => return Err(CliError::config("size", "must be positive")),
        Some(m) => &ds.train[..m.min(ds.train.len())],
        None => &ds.train[..],
    };
    let n = ds.model.n();
    let report = match algo {
        TrainAlgo::Local => train_local(&ds.model, train, &ds.space, &s.train)?,
        TrainAlgo::Global => {
            let full = vec![Decomposition::full(n); train.len()];
            let report = train_subgradient(&ds.model, train, &full, &ds.space, s.loss, &s.train)?;
            let glob = global_objective(&ds.model, &report.weights, train, &ds.space, s.loss)?;
            let last = report.final_objective().unwrap_or(glob);
            if last.to_bits() != glob.to_bits() {
                return Err(CliError::RouteMismatch { decl: last, global: glob });
            }
            report
        }
        TrainAlgo::DeclK(k) => {
            let s_k = vec![Decomposition::decl_k(n, k)?; train.len()];
            train_subgradient(&ds.model, train, &s_k, &ds.space, s.loss, &s.train)?
        }
        TrainAlgo::DeclSpair => {
            let decomps = spair_decompositions(&ds, train)?;
            train_subgradient(&ds.model, train, &decomps, &ds.space, s.loss, &s.train)?
        }
    };

    prepare_out(&globals.out)?;
    let weights_path = globals.out.join("weights.json");
    write_json(&weights_path, report.predictor())?;
    let report_path = globals.out.join("report.json");
    fs::write(&report_path, report.to_json()? + "\n")?;
    let trace_path = globals.out.join("trace.csv");
    report.write_trace_csv(BufWriter::new(File::create(&trace_path)?))?;
    RunManifest::write(
        &globals.out,
        "train",
        &s,
        s.train.seed,
        vec![weights_path, report_path, trace_path],
        started,
    )?;
    println!(
        "trained {} on {} instances for {} epochs; final objective {}, {:.3}s",
        s.algo,
        train.len(),
        report.epochs_run,
        report.final_objective().unwrap_or(f64::NAN),
        report.train_seconds()
    );
    Ok(())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Split {
    Train,
    Validation,
    #[default]
    Test,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    pub data: Option<PathBuf>,
    pub weights: Option<PathBuf>,
    pub constraints: bool,
    pub split: Split,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            data: None,
            weights: None,
            constraints: true,
            split: Split::Test,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    /// Weight file written by `train`.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Decode over the constrained space (on) or ignore constraints (off).
    #[arg(long, value_enum)]
    constraints: Option<Switch>,
    #[arg(long, value_enum)]
    split: Option<Split>,
}

pub fn eval(globals: &Globals, args: EvalArgs) -> CliResult<()> {
    let started = now();
    let mut s: EvalSettings = load_config(globals.config.as_deref(), "eval")?;
    if args.data.is_some() {
        s.data = args.data;
    }
    if args.weights.is_some() {
        s.weights = args.weights;
    }
    if let Some(c) = args.constraints {
        s.constraints = c == Switch::On;
    }
    if let Some(split) = args.split {
        s.split = split;
    }
    let ds = read_dataset(&required(&s.data, "data")?)?;
    let w: WeightVector = read_json(&required(&s.weights, "weights")?)?;
    ds.model.check_weights(&w)?;
    let instances = match s.split {
        Split::Train => &ds.train,
        Split::Validation => &ds.validation,
        Split::Test => &ds.test,
    };
    let metrics = evaluate(&ds.model, &w, instances, &ds.space, s.constraints)?;
    prepare_out(&globals.out)?;
    let path = globals.out.join("metrics.json");
    write_json(&path, &metrics)?;
    RunManifest::write(&globals.out, "eval", &s, 0, vec![path], started)?;
    println!("{}", serde_json::to_string_pretty(&metrics).map_err(decl::Error::from)?);
    Ok(())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    #[default]
    Certificate,
    Sampling,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSettings {
    pub data: Option<PathBuf>,
    pub mode: ModeArg,
    /// `full`, `decl-<k>` or a path to a decomposition JSON file.
    pub decomp: String,
    pub probes: usize,
    pub loss: LossFn,
    pub size: Option<usize>,
    pub budget: ProbeConfig,
    pub seed: u64,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        ProbeSettings {
            data: None,
            mode: ModeArg::Certificate,
            decomp: "decl-2".to_string(),
            probes: 200,
            loss: LossFn::Hamming,
            size: None,
            budget: ProbeConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// full, decl-<k>, or a decomposition JSON file.
    #[arg(long)]
    decomp: Option<String>,
    /// Number of sampling probes.
    #[arg(long)]
    probes: Option<usize>,
    /// Loss whose subadditivity the certificate checks.
    #[arg(long)]
    loss: Option<LossFn>,
    /// Use this many leading training instances.
    #[arg(long)]
    size: Option<usize>,
    /// Training epochs per sampling probe.
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    eta: Option<f64>,
}

fn parse_decomp(name: &str, n: usize) -> CliResult<Decomposition> {
    if name == "full" {
        return Ok(Decomposition::full(n));
    }
    if let Some(k) = name.strip_prefix("decl-").and_then(|k| k.parse().ok()) {
        return Ok(Decomposition::decl_k(n, k)?);
    }
    let path = Path::new(name);
    if path.exists() {
        let layout = read_json(path)?;
        return Ok(Decomposition::from_layout(&layout, n)?);
    }
    Err(CliError::config(
        "decomp",
        format!("`{name}` is neither full, decl-<k> nor an existing file"),
    ))
}

pub fn probe(globals: &Globals, args: ProbeArgs) -> CliResult<()> {
    let started = now();
    let mut s: ProbeSettings = load_config(globals.config.as_deref(), "probe")?;
    if args.data.is_some() {
        s.data = args.data;
    }
    if let Some(m) = args.mode {
        s.mode = m;
    }
    if let Some(d) = args.decomp {
        s.decomp = d;
    }
    if let Some(p) = args.probes {
        s.probes = p;
    }
    if let Some(l) = args.loss {
        s.loss = l;
    }
    if args.size.is_some() {
        s.size = args.size;
    }
    if let Some(e) = args.epochs {
        s.budget.epochs = e;
    }
    if let Some(e) = args.eta {
        s.budget.eta0 = e;
    }
    if let Some(seed) = globals.seed {
        s.seed = seed;
    }
    let ds = read_dataset(&required(&s.data, "data")?)?;
    let data = match s.size {
        Some(m) => &ds.train[..m.min(ds.train.len())],
        None => &ds.train[..],
    };
    let decomposition = parse_decomp(&s.decomp, ds.model.n())?;
    let decomps = vec![decomposition; data.len()];
    let verdict = match s.mode {
        ModeArg::Certificate => exactness_certificate_cor1(&ds.model, data, &ds.space, &decomps, &s.loss)?,
        ModeArg::Sampling => {
            if s.probes == 0 {
                return Err(CliError::config("probes", "must be at least 1"));
            }
            exactness_probe_sampling_with(&ds.model, data, &ds.space, &decomps, s.probes, s.seed, &s.budget)?
        }
    };
    prepare_out(&globals.out)?;
    let path = globals.out.join("verdict.json");
    write_json(&path, &verdict)?;
    RunManifest::write(&globals.out, "probe", &s, s.seed, vec![path], started)?;
    println!("{}", serde_json::to_string_pretty(&verdict).map_err(decl::Error::from)?);
    Ok(())
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Comma-separated training sizes.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    /// Comma-separated algorithms: ll, ll+c, decl-<k>, gl.
    #[arg(long, value_delimiter = ',')]
    algorithms: Option<Vec<String>>,
    /// Train with λ = 0 instead of tuning it on validation data.
    #[arg(long)]
    no_tune: bool,
}

pub fn bench(globals: &Globals, args: BenchArgs) -> CliResult<()> {
    let started = now();
    let mut cfg: BenchConfig = load_config(globals.config.as_deref(), "bench")?;
    if let Some(t) = args.trials {
        cfg.synthetic.trials = t;
    }
    if let Some(e) = args.epochs {
        cfg.epochs = e;
    }
    if let Some(sizes) = args.sizes {
        cfg.synthetic.train_sizes = sizes;
    }
    if let Some(algs) = args.algorithms {
        cfg.algorithms = algs
            .iter()
            .map(|a| a.parse::<Algorithm>())
            .collect::<Result<_, _>>()?;
    }
    if args.no_tune {
        cfg.tune_lambda = false;
    }
    if let Some(t) = globals.threads {
        cfg.threads = t;
    }
    if let Some(seed) = globals.seed {
        cfg.synthetic.seed = seed;
    }
    cfg.validate()?;
    let result = run_benchmark(&cfg)?;
    prepare_out(&globals.out)?;
    let csv_path = globals.out.join("results.csv");
    result.write_csv(BufWriter::new(File::create(&csv_path)?))?;
    let agg_path = globals.out.join("aggregates.json");
    write_json(&agg_path, &result.aggregates)?;
    RunManifest::write(
        &globals.out,
        "bench",
        &cfg,
        cfg.synthetic.seed,
        vec![csv_path, agg_path],
        started,
    )?;
    println!("{:<8} {:>6} {:>12} {:>12}", "size", "algo", "per-bit err", "seconds");
    for a in &result.aggregates {
        println!(
            "{:<8} {:>6} {:>12.4} {:>12.4}",
            a.train_size,
            a.algorithm.to_string(),
            a.per_bit_error.mean,
            a.train_seconds.mean
        );
    }
    Ok(())
}
