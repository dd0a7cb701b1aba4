use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{chain_on, exact_on};
use crate::learning::LossFn;
use crate::model::{Assignment, Instance, ScoringModel, WeightVector};
use crate::space::OutputSpace;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub instances: usize,
    /// Mean number of mislabelled variables per instance.
    pub avg_hamming: f64,
    pub avg_f1: f64,
    pub per_bit_error: f64,
    /// Fraction of predictions violating the space's constraints.
    pub infeasible_rate: f64,
}

/// Per-instance `F1 = 2c / (t + p)` where nonzero labels count as positive.
///
/// `t` counts positive gold labels, `p` positive predictions and `c`
/// positions predicted with the correct positive label. When `t = p = 0`
/// the score is 1.
pub fn f1_score(gold: &[u8], pred: &[u8]) -> f64 {
    let t = gold.iter().filter(|&&l| l != 0).count();
    let p = pred.iter().filter(|&&l| l != 0).count();
    if t + p == 0 {
        return 1.0;
    }
    let c = gold.iter().zip(pred).filter(|(&g, &y)| g != 0 && g == y).count();
    2.0 * c as f64 / (t + p) as f64
}

/// Predicts every instance by exact MAP inference, constrained or not, and
/// summarizes the errors.
///
/// Unconstrained prediction on chain models whose space is too large to
/// enumerate falls back to dynamic programming.
pub fn evaluate(
    model: &ScoringModel,
    w: &WeightVector,
    testset: &[Instance],
    space: &OutputSpace,
    use_constraints: bool,
) -> Result<Metrics> {
    if testset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let relaxed;
    let search = if use_constraints {
        space
    } else {
        relaxed = space.relaxed();
        &relaxed
    };
    let mut hamming = 0.0;
    let mut f1 = 0.0;
    let mut infeasible = 0usize;
    for inst in testset {
        let pred = predict(model, w, inst, search)?;
        hamming += inst.y.iter().zip(pred.iter()).filter(|(a, b)| a != b).count() as f64;
        f1 += f1_score(&inst.y, &pred);
        if !space.is_feasible(&pred)? {
            infeasible += 1;
        }
    }
    let m = testset.len() as f64;
    let avg_hamming = hamming / m;
    Ok(Metrics {
        instances: testset.len(),
        avg_hamming,
        avg_f1: f1 / m,
        per_bit_error: avg_hamming / model.n() as f64,
        infeasible_rate: infeasible as f64 / m,
    })
}

fn predict(model: &ScoringModel, w: &WeightVector, inst: &Instance, space: &OutputSpace) -> Result<Assignment> {
    let pot = model.potentials(w, &inst.x)?;
    match exact_on(&pot, space) {
        Ok(r) => Ok(r.argmax),
        Err(Error::SpaceTooLarge { .. }) if space.is_unconstrained() && model.is_chain() => {
            Ok(chain_on(&pot, None, LossFn::Perceptron)?.argmax)
        }
        Err(e) => Err(e),
    }
}
