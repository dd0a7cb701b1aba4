use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Assignment;
use crate::rng::{stream, Stream};
use crate::space::OutputSpace;

/// Spaces with at most this many variables are checked exhaustively.
pub const EXHAUSTIVE_MAX_N: usize = 6;

/// Structured loss `Δ(gold, y)`.
pub trait Loss {
    fn loss(&self, gold: &[u8], y: &[u8]) -> f64;
}

impl<F: Fn(&[u8], &[u8]) -> f64> Loss for F {
    fn loss(&self, gold: &[u8], y: &[u8]) -> f64 {
        self(gold, y)
    }
}

/// The built-in losses. `Perceptron` is the constant-zero loss.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossFn {
    #[default]
    Hamming,
    ZeroOne,
    Perceptron,
}

impl LossFn {
    #[inline]
    pub fn eval(self, gold: &[u8], y: &[u8]) -> f64 {
        match self {
            LossFn::Hamming => gold.iter().zip(y).filter(|(a, b)| a != b).count() as f64,
            LossFn::ZeroOne => (gold != y) as u8 as f64,
            LossFn::Perceptron => 0.0,
        }
    }

    /// Same value as [`LossFn::eval`] when `y` agrees with `gold` outside `set`.
    #[inline]
    pub(crate) fn eval_on(self, gold: &[u8], y: &[u8], set: &[usize]) -> f64 {
        match self {
            LossFn::Hamming => set.iter().filter(|&&i| gold[i] != y[i]).count() as f64,
            LossFn::ZeroOne => set.iter().any(|&i| gold[i] != y[i]) as u8 as f64,
            LossFn::Perceptron => 0.0,
        }
    }

    /// Per-position penalty for labelling `i` differently from gold, when
    /// the loss is a sum over positions.
    pub(crate) fn position_penalty(self) -> Result<f64> {
        match self {
            LossFn::Hamming => Ok(1.0),
            LossFn::Perceptron => Ok(0.0),
            LossFn::ZeroOne => Err(Error::LossNotDecomposable(self)),
        }
    }
}

impl Loss for LossFn {
    fn loss(&self, gold: &[u8], y: &[u8]) -> f64 {
        self.eval(gold, y)
    }
}

impl fmt::Display for LossFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossFn::Hamming => "hamming",
            LossFn::ZeroOne => "zero-one",
            LossFn::Perceptron => "perceptron",
        })
    }
}

impl FromStr for LossFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hamming" => Ok(LossFn::Hamming),
            "zero-one" | "zeroone" | "0-1" => Ok(LossFn::ZeroOne),
            "perceptron" | "zero" => Ok(LossFn::Perceptron),
            _ => Err(Error::config("loss", format!("unknown loss `{s}`"))),
        }
    }
}

/// Number of positions where `y` and `y2` differ.
pub fn hamming(y: &Assignment, y2: &Assignment) -> Result<usize> {
    Ok(crate::space::diff_set(y, y2)?.len())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubadditivityViolation {
    pub y: Assignment,
    pub y_prime: Assignment,
    pub y1: Assignment,
    pub y2: Assignment,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SubadditivityReport {
    pub exhaustive: bool,
    pub checked: u64,
    pub violation_count: u64,
    /// The first few violations found.
    pub violations: Vec<SubadditivityViolation>,
}

impl SubadditivityReport {
    pub fn is_subadditive(&self) -> bool {
        self.violation_count == 0
    }
}

const KEPT_VIOLATIONS: usize = 16;
const SUBADDITIVITY_TOL: f64 = 1e-12;

/// Searches quadruples `(y, y', y1, y2)` of feasible outputs with
/// `s(y,y1) ∪ s(y,y2) = s(y,y')` for `Δ(y,y') > Δ(y,y1) + Δ(y,y2)`.
///
/// Exhaustive for `n ≤ 6`; otherwise `trials` random `(y, y1, y2)` triples
/// are drawn and completed with a matching `y'` when one exists.
pub fn check_subadditive<L: Loss + ?Sized>(
    loss: &L,
    space: &OutputSpace,
    trials: usize,
    seed: u64,
) -> Result<SubadditivityReport> {
    if space.n() > 64 {
        return Err(Error::config("n", "subadditivity check supports at most 64 variables"));
    }
    let ys = space.enumerate_feasible()?;
    let exhaustive = space.n() <= EXHAUSTIVE_MAX_N;
    let mut report = SubadditivityReport {
        exhaustive,
        checked: 0,
        violation_count: 0,
        violations: Vec::new(),
    };
    let mask = |a: &[u8], b: &[u8]| -> u64 {
        a.iter()
            .zip(b)
            .enumerate()
            .filter(|(_, (x, y))| x != y)
            .fold(0u64, |m, (i, _)| m | (1 << i))
    };
    let record = |report: &mut SubadditivityReport, y: &Assignment, yp: &Assignment, y1: &Assignment, y2: &Assignment| {
        report.checked += 1;
        let lhs = loss.loss(y, yp);
        let rhs = loss.loss(y, y1) + loss.loss(y, y2);
        if lhs > rhs + SUBADDITIVITY_TOL {
            report.violation_count += 1;
            if report.violations.len() < KEPT_VIOLATIONS {
                report.violations.push(SubadditivityViolation {
                    y: y.clone(),
                    y_prime: yp.clone(),
                    y1: y1.clone(),
                    y2: y2.clone(),
                    lhs,
                    rhs,
                });
            }
        }
    };

    let group_by_mask = |y: &Assignment| -> (Vec<u64>, HashMap<u64, Vec<usize>>) {
        let masks: Vec<u64> = ys.iter().map(|z| mask(y, z)).collect();
        let mut groups: HashMap<u64, Vec<usize>> = HashMap::new();
        for (idx, &m) in masks.iter().enumerate() {
            groups.entry(m).or_default().push(idx);
        }
        (masks, groups)
    };

    if exhaustive {
        for y in &ys {
            let (masks, groups) = group_by_mask(y);
            for (a, &m1) in masks.iter().enumerate() {
                for (b, &m2) in masks.iter().enumerate() {
                    if let Some(targets) = groups.get(&(m1 | m2)) {
                        for &t in targets {
                            record(&mut report, y, &ys[t], &ys[a], &ys[b]);
                        }
                    }
                }
            }
        }
    } else {
        let mut rng = stream(seed, Stream::Probe);
        for _ in 0..trials {
            let y = &ys[rng.random_range(0..ys.len())];
            let y1 = &ys[rng.random_range(0..ys.len())];
            let y2 = &ys[rng.random_range(0..ys.len())];
            let target = mask(y, y1) | mask(y, y2);
            let matches: Vec<&Assignment> = ys.iter().filter(|z| mask(y, z) == target).collect();
            if !matches.is_empty() {
                let yp = matches[rng.random_range(0..matches.len())];
                record(&mut report, y, yp, y1, y2);
            }
        }
    }
    Ok(report)
}
