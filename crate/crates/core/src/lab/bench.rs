use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::decomposition::Decomposition;
use crate::error::{Error, Result};
use crate::lab::metrics::{evaluate, Metrics};
use crate::lab::synthetic::{gen_synthetic, SyntheticConfig, SyntheticData};
use crate::learning::{train_global, train_local, train_subgradient, LossFn, StepSchedule, TrainConfig, TrainReport};
use crate::rng::child_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    /// Local learning, unconstrained prediction.
    Ll,
    /// Local learning, constrained prediction.
    LlC,
    /// Decomposed learning over all subsets of this size.
    Decl(usize),
    Gl,
}

impl Algorithm {
    pub fn uses_constraints_at_test(self) -> bool {
        self != Algorithm::Ll
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::Ll => f.write_str("ll"),
            Algorithm::LlC => f.write_str("ll+c"),
            Algorithm::Decl(k) => write!(f, "decl-{k}"),
            Algorithm::Gl => f.write_str("gl"),
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ll" => Ok(Algorithm::Ll),
            "ll+c" => Ok(Algorithm::LlC),
            "gl" => Ok(Algorithm::Gl),
            _ => s
                .strip_prefix("decl-")
                .and_then(|k| k.parse().ok())
                .filter(|&k| k > 0)
                .map(Algorithm::Decl)
                .ok_or_else(|| Error::config("algorithms", format!("unknown algorithm `{s}`"))),
        }
    }
}

impl Serialize for Algorithm {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Algorithm {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub synthetic: SyntheticConfig,
    pub algorithms: Vec<Algorithm>,
    pub epochs: usize,
    pub eta0: f64,
    pub schedule: StepSchedule,
    pub averaging: bool,
    pub loss: LossFn,
    /// Pick λ from `lambda_grid` by validation Hamming loss.
    pub tune_lambda: bool,
    pub lambda_grid: Vec<f64>,
    /// Used when `tune_lambda` is off.
    pub lambda: f64,
    pub threads: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            synthetic: SyntheticConfig::default(),
            algorithms: vec![
                Algorithm::LlC,
                Algorithm::Decl(1),
                Algorithm::Decl(2),
                Algorithm::Decl(3),
                Algorithm::Gl,
            ],
            epochs: 50,
            eta0: 0.1,
            schedule: StepSchedule::Constant,
            averaging: true,
            loss: LossFn::Hamming,
            tune_lambda: true,
            lambda_grid: vec![0.0, 1e-4, 1e-3, 1e-2, 1e-1],
            lambda: 0.0,
            threads: 1,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        self.synthetic.validate()?;
        if self.algorithms.is_empty() {
            return Err(Error::config("algorithms", "must not be empty"));
        }
        for alg in &self.algorithms {
            if let Algorithm::Decl(k) = alg {
                if *k > self.synthetic.n {
                    return Err(Error::KOutOfRange { k: *k, n: self.synthetic.n });
                }
            }
        }
        if self.tune_lambda && self.lambda_grid.is_empty() {
            return Err(Error::config("lambda_grid", "must not be empty when tuning"));
        }
        if self.threads == 0 {
            return Err(Error::config("threads", "must be at least 1"));
        }
        self.train_config(self.lambda, 0).validate()?;
        for &l in &self.lambda_grid {
            self.train_config(l, 0).validate()?;
        }
        Ok(())
    }

    fn train_config(&self, lambda: f64, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            schedule: self.schedule,
            eta0: self.eta0,
            lambda,
            seed,
            averaging: self.averaging,
            ..TrainConfig::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub trial: usize,
    pub train_size: usize,
    pub algorithm: Algorithm,
    pub avg_hamming: f64,
    pub avg_f1: f64,
    pub train_seconds: f64,
    pub per_bit_error: f64,
    pub infeasible_rate: f64,
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and sample standard deviation (0 for a single value).
    pub fn of(values: &[f64]) -> MeanStd {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        MeanStd { mean, std }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchAggregate {
    pub train_size: usize,
    pub algorithm: Algorithm,
    pub trials: usize,
    pub avg_hamming: MeanStd,
    pub per_bit_error: MeanStd,
    pub avg_f1: MeanStd,
    pub train_seconds: MeanStd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub threads: usize,
    /// Ordered by trial, then train size, then algorithm as configured.
    pub rows: Vec<BenchRow>,
    pub aggregates: Vec<BenchAggregate>,
}

impl BenchResult {
    pub fn aggregate(&self, train_size: usize, algorithm: Algorithm) -> Option<&BenchAggregate> {
        self.aggregates
            .iter()
            .find(|a| a.train_size == train_size && a.algorithm == algorithm)
    }

    /// One `# threads=N` comment line, then the header
    /// `trial,train_size,algorithm,avg_hamming,avg_f1,train_seconds`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# threads={}", self.threads)?;
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["trial", "train_size", "algorithm", "avg_hamming", "avg_f1", "train_seconds"])?;
        for r in &self.rows {
            wtr.write_record([
                r.trial.to_string(),
                r.train_size.to_string(),
                r.algorithm.to_string(),
                r.avg_hamming.to_string(),
                r.avg_f1.to_string(),
                r.train_seconds.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Trains `algorithm` on `train`.
pub fn train_algorithm(
    algorithm: Algorithm,
    data: &SyntheticData,
    train: &[crate::model::Instance],
    loss: LossFn,
    config: &TrainConfig,
) -> Result<TrainReport> {
    let model = &data.model;
    match algorithm {
        Algorithm::Ll | Algorithm::LlC => train_local(model, train, &data.space, config),
        Algorithm::Decl(k) => {
            let s = vec![Decomposition::decl_k(model.n(), k)?; train.len()];
            train_subgradient(model, train, &s, &data.space, loss, config)
        }
        Algorithm::Gl => train_global(model, train, &data.space, loss, config),
    }
}

fn run_cell(
    config: &BenchConfig,
    data: &SyntheticData,
    trial: usize,
    size: usize,
    algorithm: Algorithm,
) -> Result<BenchRow> {
    let train = data.train_prefix(size);
    let seed = child_seed(data.seed, size as u64);
    let constrained = algorithm.uses_constraints_at_test();
    let grid = if config.tune_lambda { config.lambda_grid.clone() } else { vec![config.lambda] };
    let mut best: Option<(f64, f64, TrainReport)> = None;
    for lambda in grid {
        let report = train_algorithm(algorithm, data, train, config.loss, &config.train_config(lambda, seed))?;
        let score = if config.tune_lambda {
            evaluate(&data.model, report.predictor(), &data.validation, &data.space, constrained)?.avg_hamming
        } else {
            0.0
        };
        if best.as_ref().is_none_or(|(s, _, _)| score < *s) {
            best = Some((score, lambda, report));
        }
    }
    let (_, lambda, report) = best.expect("grid is non-empty");
    let m: Metrics = evaluate(&data.model, report.predictor(), &data.test, &data.space, constrained)?;
    Ok(BenchRow {
        trial,
        train_size: size,
        algorithm,
        avg_hamming: m.avg_hamming,
        avg_f1: m.avg_f1,
        train_seconds: report.train_seconds(),
        per_bit_error: m.per_bit_error,
        infeasible_rate: m.infeasible_rate,
        lambda,
    })
}

fn run_trial(config: &BenchConfig, trial: usize) -> Result<Vec<BenchRow>> {
    let synthetic = SyntheticConfig {
        seed: child_seed(config.synthetic.seed, trial as u64),
        ..config.synthetic.clone()
    };
    let data = gen_synthetic(&synthetic)?;
    let mut rows = Vec::new();
    for &size in &config.synthetic.train_sizes {
        for &alg in &config.algorithms {
            rows.push(run_cell(config, &data, trial, size, alg)?);
        }
    }
    Ok(rows)
}

fn aggregate(config: &BenchConfig, rows: &[BenchRow]) -> Vec<BenchAggregate> {
    let mut out = Vec::new();
    for &size in &config.synthetic.train_sizes {
        for &alg in &config.algorithms {
            let cell: Vec<&BenchRow> = rows
                .iter()
                .filter(|r| r.train_size == size && r.algorithm == alg)
                .collect();
            let col = |f: fn(&BenchRow) -> f64| MeanStd::of(&cell.iter().map(|r| f(r)).collect::<Vec<_>>());
            out.push(BenchAggregate {
                train_size: size,
                algorithm: alg,
                trials: cell.len(),
                avg_hamming: col(|r| r.avg_hamming),
                per_bit_error: col(|r| r.per_bit_error),
                avg_f1: col(|r| r.avg_f1),
                train_seconds: col(|r| r.train_seconds),
            });
        }
    }
    out
}

/// Trains and evaluates every algorithm on every (trial, train size) cell.
///
/// Each trial draws a fresh problem from a child of the configured seed;
/// all algorithms in a trial see the same data and shuffling seed. Trials
/// run on `threads` worker threads.
pub fn run_benchmark(config: &BenchConfig) -> Result<BenchResult> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::config("threads", e.to_string()))?;
    let per_trial: Vec<Result<Vec<BenchRow>>> = pool.install(|| {
        (0..config.synthetic.trials)
            .into_par_iter()
            .map(|t| run_trial(config, t))
            .collect()
    });
    let mut rows = Vec::new();
    for r in per_trial {
        rows.extend(r?);
    }
    let aggregates = aggregate(config, &rows);
    Ok(BenchResult {
        threads: config.threads,
        rows,
        aggregates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> BenchConfig {
        BenchConfig {
            synthetic: SyntheticConfig {
                n: 6,
                d: 4,
                constraints: 2,
                min_feasible: 10,
                train_sizes: vec![1, 8],
                test_size: 10,
                validation_size: 5,
                trials: 2,
                ..Default::default()
            },
            epochs: 3,
            lambda_grid: vec![0.0, 0.01],
            ..Default::default()
        }
    }

    #[test]
    fn algorithm_names_round_trip() {
        for s in ["ll", "ll+c", "decl-1", "decl-12", "gl"] {
            assert_eq!(s.parse::<Algorithm>().unwrap().to_string(), s);
        }
        assert!("decl-0".parse::<Algorithm>().is_err());
        assert!("svm".parse::<Algorithm>().is_err());
    }

    #[test]
    fn row_count_and_order() {
        let r = run_benchmark(&tiny()).unwrap();
        assert_eq!(r.rows.len(), 2 * 2 * 5);
        assert_eq!(r.rows[0].trial, 0);
        assert_eq!(r.rows[0].train_size, 1);
        assert_eq!(r.rows[0].algorithm, Algorithm::LlC);
        assert_eq!(r.rows[19].algorithm, Algorithm::Gl);
        assert_eq!(r.aggregates.len(), 10);
        assert!(r.rows.iter().all(|row| row.avg_hamming.is_finite() && row.train_seconds >= 0.0));
        assert!(r
            .rows
            .iter()
            .filter(|row| row.algorithm != Algorithm::Ll)
            .all(|row| row.infeasible_rate == 0.0));
    }

    #[test]
    fn csv_layout() {
        let r = run_benchmark(&BenchConfig { algorithms: vec![Algorithm::Ll, Algorithm::Gl], ..tiny() }).unwrap();
        let mut out = Vec::new();
        r.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# threads=1");
        assert_eq!(lines[1], "trial,train_size,algorithm,avg_hamming,avg_f1,train_seconds");
        assert_eq!(lines.len(), 2 + 2 * 2 * 2);
    }

    #[test]
    fn deterministic_metrics_across_thread_counts() {
        let a = run_benchmark(&tiny()).unwrap();
        let b = run_benchmark(&BenchConfig { threads: 2, ..tiny() }).unwrap();
        let strip = |r: &BenchResult| {
            r.rows
                .iter()
                .map(|row| (row.trial, row.train_size, row.algorithm, row.avg_hamming, row.lambda))
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&a), strip(&b));
    }

    #[test]
    fn k_beyond_n_is_rejected() {
        let c = BenchConfig { algorithms: vec![Algorithm::Decl(7)], ..tiny() };
        assert!(matches!(c.validate(), Err(Error::KOutOfRange { .. })));
    }

    #[test]
    fn mean_std() {
        let m = MeanStd::of(&[1.0, 3.0]);
        assert_eq!(m.mean, 2.0);
        assert!((m.std - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(MeanStd::of(&[4.0]).std, 0.0);
    }
}
