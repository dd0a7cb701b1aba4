use std::collections::HashMap;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::decomposition::Decomposition;
use crate::error::{Error, Result};
use crate::inference::loss_augmented_on;
use crate::learning::{
    check_subadditive, decl_objective, global_hinges, global_objective, train_subgradient_from, Loss, LossFn,
    TrainConfig,
};
use crate::model::{Assignment, Family, Instance, ScoringModel, WeightVector};
use crate::rng::{child_seed, stream, Stream};
use crate::space::OutputSpace;

/// Global objective values above this count as non-separation.
pub const COUNTEREXAMPLE_TOL: f64 = 1e-9;
/// Uncovered pairs kept in an inconclusive certificate.
const KEPT_UNCOVERED: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExactnessMode {
    Certificate,
    Sampling,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "outcome")]
pub enum ExactnessOutcome {
    ExactCertified,
    NoCounterexample,
    Counterexample {
        weights: WeightVector,
        instance: usize,
        violating: Assignment,
        decl_objective: f64,
        global_objective: f64,
    },
    /// The partition search failed for these `(instance, y)` pairs; this
    /// does not refute exactness.
    Inconclusive {
        uncovered_count: usize,
        uncovered: Vec<(usize, Assignment)>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactnessVerdict {
    pub mode: ExactnessMode,
    #[serde(flatten)]
    pub outcome: ExactnessOutcome,
    /// Probes run (sampling) or `(instance, y)` pairs examined (certificate).
    pub probes: usize,
    /// Sampling probes whose training reached a zero decomposed objective.
    pub converged: usize,
}

impl ExactnessVerdict {
    pub fn is_certified(&self) -> bool {
        self.outcome == ExactnessOutcome::ExactCertified
    }

    pub fn is_counterexample(&self) -> bool {
        matches!(self.outcome, ExactnessOutcome::Counterexample { .. })
    }
}

/// Training budget of one sampling probe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub epochs: usize,
    pub eta0: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig { epochs: 500, eta0: 0.1 }
    }
}

/// Searches for weights separating the decomposed problem but not the
/// global one.
///
/// Each probe starts from standard normal weights and trains with
/// perceptron loss until the decomposed objective is zero or the budget
/// runs out; a converged probe whose global objective is positive is
/// returned as a counterexample.
pub fn exactness_probe_sampling(
    model: &ScoringModel,
    data: &[Instance],
    space: &OutputSpace,
    decompositions: &[Decomposition],
    probes: usize,
    seed: u64,
) -> Result<ExactnessVerdict> {
    exactness_probe_sampling_with(model, data, space, decompositions, probes, seed, &ProbeConfig::default())
}

pub fn exactness_probe_sampling_with(
    model: &ScoringModel,
    data: &[Instance],
    space: &OutputSpace,
    decompositions: &[Decomposition],
    probes: usize,
    seed: u64,
    budget: &ProbeConfig,
) -> Result<ExactnessVerdict> {
    let loss = LossFn::Perceptron;
    let mut converged = 0;
    for p in 0..probes {
        let probe_seed = child_seed(seed, p as u64);
        let mut rng = stream(probe_seed, Stream::Init);
        let init: Vec<f64> = (0..model.dim()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let config = TrainConfig {
            epochs: budget.epochs,
            eta0: budget.eta0,
            seed: probe_seed,
            early_stop: true,
            ..TrainConfig::default()
        };
        let report = train_subgradient_from(
            model,
            data,
            decompositions,
            space,
            loss,
            &config,
            WeightVector::new(init)?,
        )?;
        let w = report.weights;
        let decl = decl_objective(model, &w, data, decompositions, space, loss)?;
        if decl != 0.0 {
            continue;
        }
        converged += 1;
        let global = global_objective(model, &w, data, space, loss)?;
        if global > COUNTEREXAMPLE_TOL {
            let hinges = global_hinges(model, &w, data, space, loss)?;
            let instance = hinges.iter().position(|&h| h > 0.0).unwrap_or(0);
            let pot = model.potentials(&w, &data[instance].x)?;
            let violating = loss_augmented_on(&pot, &data[instance].y, space, loss)?.argmax;
            return Ok(ExactnessVerdict {
                mode: ExactnessMode::Sampling,
                outcome: ExactnessOutcome::Counterexample {
                    weights: w,
                    instance,
                    violating,
                    decl_objective: decl,
                    global_objective: global,
                },
                probes: p + 1,
                converged,
            });
        }
    }
    Ok(ExactnessVerdict {
        mode: ExactnessMode::Sampling,
        outcome: ExactnessOutcome::NoCounterexample,
        probes,
        converged,
    })
}

/// Checks the partition condition for every instance and feasible `y`:
/// `s(y, gold)` must split into pieces, each inside one set of the
/// instance's decomposition, whose single-piece patches of gold are all
/// feasible. Only defined for singleton models, where the score difference
/// is a sum over flipped coordinates.
pub fn exactness_certificate_cor1<L: Loss + ?Sized>(
    model: &ScoringModel,
    data: &[Instance],
    space: &OutputSpace,
    decompositions: &[Decomposition],
    loss: &L,
) -> Result<ExactnessVerdict> {
    if model.family() != Family::SingletonLinear {
        return Err(Error::UnsupportedFamily);
    }
    if space.n() != model.n() {
        return Err(Error::DimensionMismatch {
            axis: "output space variables",
            expected: model.n(),
            got: space.n(),
        });
    }
    if decompositions.len() != data.len() {
        return Err(Error::DimensionMismatch {
            axis: "decompositions per instance",
            expected: data.len(),
            got: decompositions.len(),
        });
    }
    if space.n() > 64 {
        return Err(Error::config("n", "certificates support at most 64 variables"));
    }
    if !check_subadditive(loss, space, 2000, 0)?.is_subadditive() {
        return Err(Error::config("loss", "the loss is not subadditive on this space"));
    }
    let ys = space.enumerate_feasible()?;
    let mut examined = 0;
    let mut uncovered = Vec::new();
    let mut uncovered_count = 0;
    for (j, (inst, s)) in data.iter().zip(decompositions).enumerate() {
        if !space.is_feasible(&inst.y)? {
            return Err(Error::Infeasible);
        }
        s.validate(space.n()).map_err(Error::InvalidDecomposition)?;
        let mut sets = Vec::with_capacity(s.len());
        s.for_each_set(|set| sets.push(set.iter().fold(0u64, |m, &i| m | 1 << i)));
        for y in &ys {
            if y == &inst.y {
                continue;
            }
            examined += 1;
            let mut search = PartitionSearch {
                gold: &inst.y,
                y,
                sets: &sets,
                space,
                memo: HashMap::new(),
                buf: inst.y.clone().into_inner(),
            };
            let diff = diff_mask(&inst.y, y);
            if !search.coverable(diff) {
                uncovered_count += 1;
                if uncovered.len() < KEPT_UNCOVERED {
                    uncovered.push((j, y.clone()));
                }
            }
        }
    }
    let outcome = if uncovered_count == 0 {
        ExactnessOutcome::ExactCertified
    } else {
        ExactnessOutcome::Inconclusive { uncovered_count, uncovered }
    };
    Ok(ExactnessVerdict {
        mode: ExactnessMode::Certificate,
        outcome,
        probes: examined,
        converged: 0,
    })
}

fn diff_mask(a: &[u8], b: &[u8]) -> u64 {
    a.iter()
        .zip(b)
        .enumerate()
        .filter(|(_, (x, y))| x != y)
        .fold(0, |m, (i, _)| m | 1 << i)
}

struct PartitionSearch<'a> {
    gold: &'a Assignment,
    y: &'a Assignment,
    sets: &'a [u64],
    space: &'a OutputSpace,
    memo: HashMap<u64, bool>,
    buf: Vec<u8>,
}

impl PartitionSearch<'_> {
    fn piece_ok(&mut self, piece: u64) -> bool {
        if !self.sets.iter().any(|&s| s & piece == piece) {
            return false;
        }
        let mut bits = piece;
        while bits != 0 {
            let i = bits.trailing_zeros() as usize;
            self.buf[i] = self.y[i];
            bits &= bits - 1;
        }
        let ok = self.space.is_feasible_unchecked(&self.buf);
        let mut bits = piece;
        while bits != 0 {
            let i = bits.trailing_zeros() as usize;
            self.buf[i] = self.gold[i];
            bits &= bits - 1;
        }
        ok
    }

    /// Whether `mask` splits into admissible pieces. Every piece contains the
    /// lowest remaining bit, so each partition is visited once.
    fn coverable(&mut self, mask: u64) -> bool {
        if mask == 0 {
            return true;
        }
        if let Some(&hit) = self.memo.get(&mask) {
            return hit;
        }
        let low = mask & mask.wrapping_neg();
        let rest = mask ^ low;
        let mut sub = rest;
        let mut found = false;
        loop {
            let piece = low | sub;
            if self.piece_ok(piece) && self.coverable(mask ^ piece) {
                found = true;
                break;
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
        self.memo.insert(mask, found);
        found
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Input;
    use crate::space::{ConstraintSet, Literal};

    fn a(s: &str) -> Assignment {
        Assignment::parse(s).unwrap()
    }

    fn one_instance(n: usize, gold: &str) -> (ScoringModel, Vec<Instance>) {
        let m = ScoringModel::singleton(n, 1).unwrap();
        let x = Input::per_variable(vec![vec![1.0]; n]).unwrap();
        (m, vec![Instance::new(x, a(gold))])
    }

    #[test]
    fn full_sets_are_certified_and_never_refuted() {
        let (m, data) = one_instance(3, "100");
        let space = OutputSpace::multiclass(3).unwrap();
        let s = vec![Decomposition::full(3)];
        assert!(exactness_certificate_cor1(&m, &data, &space, &s, &LossFn::Hamming).unwrap().is_certified());
        let v = exactness_probe_sampling(&m, &data, &space, &s, 20, 1).unwrap();
        assert_eq!(v.outcome, ExactnessOutcome::NoCounterexample);
    }

    #[test]
    fn singletons_certify_unconstrained_spaces() {
        let (m, data) = one_instance(4, "0110");
        let space = OutputSpace::unconstrained(4, 2).unwrap();
        let s = vec![Decomposition::decl_k(4, 1).unwrap()];
        let v = exactness_certificate_cor1(&m, &data, &space, &s, &LossFn::Hamming).unwrap();
        assert!(v.is_certified());
        assert_eq!(v.probes, 15);
    }

    #[test]
    fn singletons_fail_on_multiclass() {
        let (m, data) = one_instance(3, "100");
        let space = OutputSpace::multiclass(3).unwrap();
        let s = vec![Decomposition::decl_k(3, 1).unwrap()];
        let v = exactness_certificate_cor1(&m, &data, &space, &s, &LossFn::Hamming).unwrap();
        match v.outcome {
            ExactnessOutcome::Inconclusive { uncovered_count, .. } => assert_eq!(uncovered_count, 2),
            other => panic!("{other:?}"),
        }
        let s2 = vec![Decomposition::decl_k(3, 2).unwrap()];
        assert!(exactness_certificate_cor1(&m, &data, &space, &s2, &LossFn::Hamming).unwrap().is_certified());
    }

    #[test]
    fn decl1_on_two_point_space_has_a_counterexample() {
        let (m, data) = one_instance(2, "11");
        let space = OutputSpace::new(
            2,
            2,
            ConstraintSet::default().with_clause(vec![Literal::pos(0), Literal::neg(1)]).with_clause(vec![
                Literal::neg(0),
                Literal::pos(1),
            ]),
        )
        .unwrap();
        assert_eq!(space.enumerate_feasible().unwrap(), vec![a("00"), a("11")]);
        let s = vec![Decomposition::decl_k(2, 1).unwrap()];
        let v = exactness_probe_sampling(&m, &data, &space, &s, 50, 7).unwrap();
        match &v.outcome {
            ExactnessOutcome::Counterexample { weights, violating, .. } => {
                assert_eq!(violating, &a("00"));
                let w = weights.as_slice();
                assert!(w[0] + w[1] < 0.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn pairwise_models_are_rejected() {
        let m = ScoringModel::chain(3, 1, 2, true).unwrap();
        let x = Input::per_variable(vec![vec![1.0]; 3]).unwrap();
        let data = vec![Instance::new(x, a("000"))];
        let space = OutputSpace::unconstrained(3, 2).unwrap();
        let s = vec![Decomposition::full(3)];
        assert!(matches!(
            exactness_certificate_cor1(&m, &data, &space, &s, &LossFn::Hamming),
            Err(Error::UnsupportedFamily)
        ));
    }
}
