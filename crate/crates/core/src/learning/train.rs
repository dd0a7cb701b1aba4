use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::decomposition::Decomposition;
use crate::error::{Error, Result};
use crate::inference::{decomposed_on, loss_augmented_on, SetSelection};
use crate::learning::objective::{check_lengths, decl_objective, global_objective};
use crate::learning::LossFn;
use crate::model::{Instance, ScoringModel, WeightVector};
use crate::rng::{stream, Stream};
use crate::space::OutputSpace;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepSchedule {
    /// `η_t = η0`
    #[default]
    Constant,
    /// `η_t = η0 / (1 + t)` with `t` the zero-based epoch.
    Inverse,
}

impl StepSchedule {
    pub fn step(self, eta0: f64, epoch: usize) -> f64 {
        match self {
            StepSchedule::Constant => eta0,
            StepSchedule::Inverse => eta0 / (1.0 + epoch as f64),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub schedule: StepSchedule,
    pub eta0: f64,
    /// L2 shrinkage strength; 0 disables it.
    pub lambda: f64,
    pub seed: u64,
    /// Visit only this many randomly drawn sets per example.
    pub sample_sets: Option<usize>,
    pub averaging: bool,
    pub shuffle: bool,
    /// Stop after the first epoch whose training objective is exactly 0.
    pub early_stop: bool,
    /// Also trace the global objective each epoch (enumerates the space).
    pub track_global: bool,
    /// Keep the weights after every inner step.
    pub record_trajectory: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            schedule: StepSchedule::Constant,
            eta0: 0.1,
            lambda: 0.0,
            seed: 0,
            sample_sets: None,
            averaging: false,
            shuffle: true,
            early_stop: false,
            track_global: false,
            record_trajectory: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("epochs", "must be at least 1"));
        }
        if !(self.eta0.is_finite() && self.eta0 > 0.0) {
            return Err(Error::config("eta0", "must be a positive finite number"));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::config("lambda", "must be a nonnegative finite number"));
        }
        if self.sample_sets == Some(0) {
            return Err(Error::config("sample_sets", "must be at least 1 when set"));
        }
        Ok(())
    }
}

/// What the per-epoch `objective` trace measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveKind {
    Decomposed,
    Global,
    /// Summed per-variable perceptron hinge of the independent classifiers.
    Local,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub weights: WeightVector,
    pub averaged: Option<WeightVector>,
    pub objective_kind: ObjectiveKind,
    /// Training objective after each epoch, at the current (not averaged) weights.
    pub objective: Vec<f64>,
    pub global_objective: Option<Vec<f64>>,
    /// Wall-clock seconds spent in each epoch's update loop.
    pub epoch_seconds: Vec<f64>,
    pub updates: u64,
    pub epochs_run: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Vec<WeightVector>>,
}

impl TrainReport {
    /// Averaged weights when averaging was on, final weights otherwise.
    pub fn predictor(&self) -> &WeightVector {
        self.averaged.as_ref().unwrap_or(&self.weights)
    }

    pub fn train_seconds(&self) -> f64 {
        self.epoch_seconds.iter().sum()
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.objective.last().copied()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes `epoch,decl_objective,global_objective,seconds`, one row per
    /// epoch with 1-based epochs; the global column is empty when untracked.
    pub fn write_trace_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["epoch", "decl_objective", "global_objective", "seconds"])?;
        for e in 0..self.epochs_run {
            let global = self
                .global_objective
                .as_ref()
                .map(|g| g[e].to_string())
                .unwrap_or_default();
            wtr.write_record([
                (e + 1).to_string(),
                self.objective[e].to_string(),
                global,
                self.epoch_seconds[e].to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum Route<'a> {
    Decomposed(&'a [Decomposition]),
    Global,
}

/// Running mean of the weights after every inner step.
struct Averager {
    sum: Vec<f64>,
    count: u64,
}

impl Averager {
    fn new(dim: usize) -> Self {
        Averager { sum: vec![0.0; dim], count: 0 }
    }

    fn add(&mut self, w: &[f64]) {
        for (s, v) in self.sum.iter_mut().zip(w) {
            *s += v;
        }
        self.count += 1;
    }

    fn mean(&self, fallback: &WeightVector) -> WeightVector {
        if self.count == 0 {
            return fallback.clone();
        }
        let c = self.count as f64;
        WeightVector(self.sum.iter().map(|s| s / c).collect())
    }
}

fn check_data(model: &ScoringModel, data: &[Instance], space: &OutputSpace) -> Result<()> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if space.n() != model.n() || space.alphabet() != model.alphabet() {
        return Err(Error::DimensionMismatch {
            axis: "output space variables",
            expected: model.n(),
            got: space.n(),
        });
    }
    for inst in data {
        model.check_input(&inst.x)?;
        inst.y.check(model.n(), model.alphabet())?;
        if !space.is_feasible(&inst.y)? {
            return Err(Error::Infeasible);
        }
    }
    Ok(())
}

fn shrink(w: &mut [f64], eta: f64, lambda: f64) {
    if lambda > 0.0 {
        let factor = 1.0 - eta * lambda;
        for v in w.iter_mut() {
            *v *= factor;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run(
    model: &ScoringModel,
    data: &[Instance],
    route: Route<'_>,
    space: &OutputSpace,
    loss: LossFn,
    config: &TrainConfig,
    init: WeightVector,
) -> Result<TrainReport> {
    config.validate()?;
    check_data(model, data, space)?;
    model.check_weights(&init)?;
    if let Route::Decomposed(sets) = route {
        check_lengths(data, sets)?;
        for s in sets {
            s.validate(model.n()).map_err(Error::InvalidDecomposition)?;
        }
    }
    let mut w = init;
    let mut averager = config.averaging.then(|| Averager::new(w.len()));
    let mut shuffle_rng = stream(config.seed, Stream::Shuffle);
    let mut set_rng = stream(config.seed, Stream::Sets);
    let selection = SetSelection::from(config.sample_sets);
    let mut order: Vec<usize> = (0..data.len()).collect();

    let mut objective = Vec::with_capacity(config.epochs);
    let mut global_trace = config.track_global.then(|| Vec::with_capacity(config.epochs));
    let mut epoch_seconds = Vec::with_capacity(config.epochs);
    let mut trajectory = config.record_trajectory.then(Vec::new);
    let mut updates = 0u64;

    for epoch in 0..config.epochs {
        let eta = config.schedule.step(config.eta0, epoch);
        let start = Instant::now();
        if config.shuffle {
            order.shuffle(&mut shuffle_rng);
        }
        for &j in &order {
            let inst = &data[j];
            let pot = model.potentials_unchecked(&w, &inst.x);
            let y_prime = match route {
                Route::Decomposed(sets) => {
                    decomposed_on(&pot, &inst.y, &sets[j], space, loss, selection, &mut set_rng)?
                }
                Route::Global => loss_augmented_on(&pot, &inst.y, space, loss)?,
            }
            .argmax;
            shrink(&mut w.0, eta, config.lambda);
            if y_prime != inst.y {
                model.add_feature_difference(&mut w.0, &inst.x, &inst.y, &y_prime, eta);
                updates += 1;
            }
            if let Some(avg) = averager.as_mut() {
                avg.add(&w.0);
            }
            if let Some(t) = trajectory.as_mut() {
                t.push(w.clone());
            }
        }
        epoch_seconds.push(start.elapsed().as_secs_f64());

        let value = match route {
            Route::Decomposed(sets) => decl_objective(model, &w, data, sets, space, loss)?,
            Route::Global => global_objective(model, &w, data, space, loss)?,
        };
        objective.push(value);
        if let Some(g) = global_trace.as_mut() {
            g.push(global_objective(model, &w, data, space, loss)?);
        }
        if config.early_stop && value == 0.0 {
            break;
        }
    }

    let averaged = averager.map(|a| a.mean(&w));
    Ok(TrainReport {
        averaged,
        objective_kind: match route {
            Route::Decomposed(_) => ObjectiveKind::Decomposed,
            Route::Global => ObjectiveKind::Global,
        },
        epochs_run: objective.len(),
        objective,
        global_objective: global_trace,
        epoch_seconds,
        updates,
        trajectory,
        weights: w,
    })
}

/// Subgradient training of the decomposed hinge objective from `w = 0`.
///
/// Every example's inner maximization runs over its own decomposition; with
/// full-set decompositions this is global training.
pub fn train_subgradient(
    model: &ScoringModel,
    data: &[Instance],
    decompositions: &[Decomposition],
    space: &OutputSpace,
    loss: LossFn,
    config: &TrainConfig,
) -> Result<TrainReport> {
    let init = WeightVector::zeros(model.dim());
    train_subgradient_from(model, data, decompositions, space, loss, config, init)
}

/// [`train_subgradient`] from the given starting weights.
pub fn train_subgradient_from(
    model: &ScoringModel,
    data: &[Instance],
    decompositions: &[Decomposition],
    space: &OutputSpace,
    loss: LossFn,
    config: &TrainConfig,
    init: WeightVector,
) -> Result<TrainReport> {
    run(model, data, Route::Decomposed(decompositions), space, loss, config, init)
}

/// Global training: the inner maximization enumerates the whole feasible
/// space. Produces the same weights as [`train_subgradient`] with
/// [`Decomposition::full`] for every example.
pub fn train_global(
    model: &ScoringModel,
    data: &[Instance],
    space: &OutputSpace,
    loss: LossFn,
    config: &TrainConfig,
) -> Result<TrainReport> {
    let init = WeightVector::zeros(model.dim());
    run(model, data, Route::Global, space, loss, config, init)
}

/// Independent per-variable perceptrons over the node blocks.
///
/// Constraints and edge potentials are ignored; edge weights stay zero.
/// Each variable predicts its highest-scoring label (smallest on ties) and
/// on a mistake moves the gold block toward `x_i` and the predicted block away.
pub fn train_local(
    model: &ScoringModel,
    data: &[Instance],
    space: &OutputSpace,
    config: &TrainConfig,
) -> Result<TrainReport> {
    config.validate()?;
    check_data(model, data, space)?;
    let n = model.n();
    let alphabet = model.alphabet();
    let mut w = WeightVector::zeros(model.dim());
    let mut averager = config.averaging.then(|| Averager::new(w.len()));
    let mut shuffle_rng = stream(config.seed, Stream::Shuffle);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut objective = Vec::with_capacity(config.epochs);
    let mut epoch_seconds = Vec::with_capacity(config.epochs);
    let mut trajectory = config.record_trajectory.then(Vec::new);
    let mut updates = 0u64;
    let mut pred = vec![0u8; n];

    for epoch in 0..config.epochs {
        let eta = config.schedule.step(config.eta0, epoch);
        let start = Instant::now();
        if config.shuffle {
            order.shuffle(&mut shuffle_rng);
        }
        for &j in &order {
            let inst = &data[j];
            let pot = model.potentials_unchecked(&w, &inst.x);
            for (i, p) in pred.iter_mut().enumerate() {
                *p = local_argmax(|l| pot.node(i, l), alphabet);
            }
            shrink(&mut w.0, eta, config.lambda);
            if pred.as_slice() != inst.y.labels() {
                for (i, &l) in pred.iter().enumerate() {
                    if l != inst.y[i] {
                        local_update(model, &mut w.0, inst, i, l, eta);
                    }
                }
                updates += 1;
            }
            if let Some(avg) = averager.as_mut() {
                avg.add(&w.0);
            }
            if let Some(t) = trajectory.as_mut() {
                t.push(w.clone());
            }
        }
        epoch_seconds.push(start.elapsed().as_secs_f64());

        let value = local_objective(model, &w, data);
        objective.push(value);
        if config.early_stop && value == 0.0 {
            break;
        }
    }

    let averaged = averager.map(|a| a.mean(&w));
    Ok(TrainReport {
        averaged,
        objective_kind: ObjectiveKind::Local,
        epochs_run: objective.len(),
        objective,
        global_objective: None,
        epoch_seconds,
        updates,
        trajectory,
        weights: w,
    })
}

fn local_argmax(score: impl Fn(u8) -> f64, alphabet: usize) -> u8 {
    let mut best = 0u8;
    let mut best_value = score(0);
    for l in 1..alphabet as u8 {
        let v = score(l);
        if v > best_value {
            best = l;
            best_value = v;
        }
    }
    best
}

fn local_update(model: &ScoringModel, w: &mut [f64], inst: &Instance, i: usize, pred: u8, eta: f64) {
    let d = model.d();
    let row = inst.x.row(i);
    if let Some(start) = model.node_block(i, inst.y[i]) {
        for (t, v) in w[start..start + d].iter_mut().zip(row) {
            *t += eta * v;
        }
    }
    if let Some(start) = model.node_block(i, pred) {
        for (t, v) in w[start..start + d].iter_mut().zip(row) {
            *t -= eta * v;
        }
    }
}

/// `Σ_j Σ_i max_l (θ_i(l) − θ_i(y^j_i))` over node potentials only.
pub fn local_objective(model: &ScoringModel, w: &WeightVector, data: &[Instance]) -> f64 {
    let mut total = 0.0;
    for inst in data {
        let pot = model.potentials_unchecked(w, &inst.x);
        for i in 0..model.n() {
            let gold = pot.node(i, inst.y[i]);
            let mut worst = 0.0f64;
            for l in 0..model.alphabet() as u8 {
                worst = worst.max(pot.node(i, l) - gold);
            }
            total += worst;
        }
    }
    total
}
