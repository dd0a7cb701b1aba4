//! MAP inference: exact, loss-augmented, decomposed, and chain DP.
//!
//! Every routine breaks ties toward the lexicographically smallest
//! assignment. Loss-augmented routines report the hinge value
//! `f(y) − f(gold) + Δ(gold, y)` and compute it through
//! [`Potentials::score_delta`] so that the global and decomposed routes
//! produce bit-identical values for the same candidate.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::decomposition::{for_each_local, Decomposition};
use crate::error::{Error, Result};
use crate::learning::LossFn;
use crate::model::{Assignment, Input, Potentials, ScoringModel, WeightVector};
use crate::space::{OutputSpace, PatchChecker};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InferenceResult {
    pub argmax: Assignment,
    pub value: f64,
    #[serde(skip)]
    pub candidates_examined: u64,
}

struct Best {
    y: Vec<u8>,
    value: f64,
    examined: u64,
}

impl Best {
    fn new(n: usize) -> Self {
        Best {
            y: vec![0; n],
            value: f64::NEG_INFINITY,
            examined: 0,
        }
    }

    #[inline]
    fn offer(&mut self, y: &[u8], value: f64) {
        self.examined += 1;
        if value > self.value || (value == self.value && y < self.y.as_slice()) {
            self.value = value;
            self.y.copy_from_slice(y);
        }
    }

    fn finish(self) -> Result<InferenceResult> {
        if self.examined == 0 {
            return Err(Error::EmptySpace);
        }
        Ok(InferenceResult {
            argmax: Assignment::new(self.y),
            value: self.value,
            candidates_examined: self.examined,
        })
    }
}

fn check_space(pot: &Potentials, space: &OutputSpace) -> Result<()> {
    if pot.n() != space.n() || pot.alphabet() != space.alphabet() {
        return Err(Error::DimensionMismatch {
            axis: "output space variables",
            expected: pot.n(),
            got: space.n(),
        });
    }
    Ok(())
}

fn check_gold(space: &OutputSpace, gold: &Assignment) -> Result<()> {
    if !space.is_feasible(gold)? {
        return Err(Error::Infeasible);
    }
    Ok(())
}

/// `argmax_{y ∈ Y} f(y)` over potentials by enumeration.
pub fn exact_on(pot: &Potentials, space: &OutputSpace) -> Result<InferenceResult> {
    check_space(pot, space)?;
    let mut best = Best::new(space.n());
    space.for_each_feasible(|y| best.offer(y, pot.score(y)))?;
    best.finish()
}

/// `argmax_{y ∈ Y} f(y) − f(gold) + Δ(gold, y)` by enumeration.
pub fn loss_augmented_on(
    pot: &Potentials,
    gold: &Assignment,
    space: &OutputSpace,
    loss: LossFn,
) -> Result<InferenceResult> {
    check_space(pot, space)?;
    check_gold(space, gold)?;
    let mut best = Best::new(space.n());
    space.for_each_feasible(|y| {
        let value = pot.score_delta(gold, y) + loss.eval(gold, y);
        best.offer(y, value);
    })?;
    best.finish()
}

/// Which sets of a decomposition the decomposed maximization visits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SetSelection {
    All,
    /// Up to this many sets drawn uniformly without replacement.
    Sample(usize),
}

impl From<Option<usize>> for SetSelection {
    fn from(v: Option<usize>) -> Self {
        v.map_or(SetSelection::All, SetSelection::Sample)
    }
}

/// Loss-augmented maximization restricted to single-set patches of gold.
pub fn decomposed_on<R: Rng + ?Sized>(
    pot: &Potentials,
    gold: &Assignment,
    decomposition: &Decomposition,
    space: &OutputSpace,
    loss: LossFn,
    selection: SetSelection,
    rng: &mut R,
) -> Result<InferenceResult> {
    check_space(pot, space)?;
    check_gold(space, gold)?;
    if decomposition.n() != space.n() {
        return Err(Error::DimensionMismatch {
            axis: "decomposition variables",
            expected: space.n(),
            got: decomposition.n(),
        });
    }
    if decomposition.is_empty() {
        return Err(Error::EmptySetPool);
    }
    let mut checker = PatchChecker::new(space, gold);
    let mut buf = gold.clone().into_inner();
    let mut best = Best::new(space.n());
    let alphabet = space.alphabet();
    let visit_set = |set: &[usize], best: &mut Best, buf: &mut [u8], checker: &mut PatchChecker| {
        let incident = pot.incident_edges(set);
        for_each_local(set, alphabet, buf, gold, |y| {
            if checker.is_feasible(gold, y, set) {
                let value = pot.score_delta_on(gold, y, set, &incident) + loss.eval_on(gold, y, set);
                best.offer(y, value);
            }
        });
    };
    match selection {
        SetSelection::Sample(0) => return Err(Error::EmptySetPool),
        SetSelection::Sample(m) if m < decomposition.len() => {
            let mut picked = sample(rng, decomposition.len(), m).into_vec();
            picked.sort_unstable();
            for idx in picked {
                visit_set(&decomposition.get(idx), &mut best, &mut buf, &mut checker);
            }
        }
        _ => match decomposition.supports() {
            Some(supports) => {
                best.offer(gold, 0.0);
                for support in supports {
                    let incident = pot.incident_edges(support);
                    for_each_differing(support, alphabet, &mut buf, gold, |y| {
                        if checker.is_feasible(gold, y, support) {
                            let value = pot.score_delta_on(gold, y, support, &incident)
                                + loss.eval_on(gold, y, support);
                            best.offer(y, value);
                        }
                    });
                }
            }
            None => decomposition.for_each_set(|set| visit_set(set, &mut best, &mut buf, &mut checker)),
        },
    }
    best.finish()
}

/// Writes every labelling of `support` that differs from `gold` at each of
/// its positions into `buf`, restoring gold afterwards.
fn for_each_differing(support: &[usize], alphabet: usize, buf: &mut [u8], gold: &[u8], mut visit: impl FnMut(&[u8])) {
    let top = (alphabet - 1) as u8;
    let first = |g: u8| if g == 0 { 1 } else { 0 };
    for &i in support {
        buf[i] = first(gold[i]);
    }
    'outer: loop {
        visit(buf);
        let mut pos = support.len();
        loop {
            if pos == 0 {
                break 'outer;
            }
            pos -= 1;
            let i = support[pos];
            let mut next = buf[i] + 1;
            if next == gold[i] {
                next += 1;
            }
            if next <= top {
                buf[i] = next;
                break;
            }
            buf[i] = first(gold[i]);
        }
    }
    for &i in support {
        buf[i] = gold[i];
    }
}

/// Exact chain decoding by dynamic programming.
///
/// With `gold` given, the loss's per-position penalty is added to every
/// label that differs from gold and the reported value is the hinge.
pub fn chain_on(
    pot: &Potentials,
    gold: Option<&Assignment>,
    loss: LossFn,
) -> Result<InferenceResult> {
    let n = pot.n();
    let k = pot.alphabet();
    let is_path = pot.edges().len() + 1 == n
        && pot
            .edges()
            .iter()
            .enumerate()
            .all(|(e, &(u, v))| u == e && v == e + 1);
    if !is_path {
        return Err(Error::NotAChain);
    }
    let penalty = match gold {
        Some(g) => {
            g.check(n, k)?;
            loss.position_penalty()?
        }
        None => 0.0,
    };
    let unary = |i: usize, a: u8| -> f64 {
        let bonus = match gold {
            Some(g) if g[i] != a => penalty,
            _ => 0.0,
        };
        pot.node(i, a) + bonus
    };
    // suffix[i * k + a]: best score of positions i.. given y_i = a
    let mut suffix = vec![0.0; n * k];
    for a in 0..k as u8 {
        suffix[(n - 1) * k + a as usize] = unary(n - 1, a);
    }
    for i in (0..n - 1).rev() {
        for a in 0..k as u8 {
            let mut m = f64::NEG_INFINITY;
            for b in 0..k as u8 {
                m = m.max(pot.edge(i, a, b) + suffix[(i + 1) * k + b as usize]);
            }
            suffix[i * k + a as usize] = unary(i, a) + m;
        }
    }
    let argmax_first = |scores: &mut dyn Iterator<Item = f64>| -> u8 {
        let mut best = (0u8, f64::NEG_INFINITY);
        for (l, s) in scores.enumerate() {
            if s > best.1 {
                best = (l as u8, s);
            }
        }
        best.0
    };
    let mut y = vec![0u8; n];
    y[0] = argmax_first(&mut (0..k).map(|a| suffix[a]));
    for i in 0..n - 1 {
        let prev = y[i];
        y[i + 1] = argmax_first(
            &mut (0..k as u8).map(|b| pot.edge(i, prev, b) + suffix[(i + 1) * k + b as usize]),
        );
    }
    let value = match gold {
        Some(g) => pot.score_delta(g, &y) + loss.eval(g, &y),
        None => pot.score(&y),
    };
    Ok(InferenceResult {
        argmax: Assignment::new(y),
        value,
        candidates_examined: (n * k * k) as u64,
    })
}

/// `argmax_{y ∈ Y} w · φ(x, y)`.
pub fn map_exact(
    model: &ScoringModel,
    w: &WeightVector,
    x: &Input,
    space: &OutputSpace,
) -> Result<InferenceResult> {
    exact_on(&model.potentials(w, x)?, space)
}

/// Inner maximization of the global hinge objective.
pub fn map_loss_augmented(
    model: &ScoringModel,
    w: &WeightVector,
    x: &Input,
    gold: &Assignment,
    space: &OutputSpace,
    loss: LossFn,
) -> Result<InferenceResult> {
    loss_augmented_on(&model.potentials(w, x)?, gold, space, loss)
}

/// Inner maximization of the decomposed hinge objective, optionally over
/// `sample_sets` randomly drawn sets.
#[allow(clippy::too_many_arguments)]
pub fn map_decomposed<R: Rng + ?Sized>(
    model: &ScoringModel,
    w: &WeightVector,
    x: &Input,
    gold: &Assignment,
    decomposition: &Decomposition,
    space: &OutputSpace,
    loss: LossFn,
    sample_sets: Option<usize>,
    rng: &mut R,
) -> Result<InferenceResult> {
    decomposed_on(
        &model.potentials(w, x)?,
        gold,
        decomposition,
        space,
        loss,
        sample_sets.into(),
        rng,
    )
}

/// Exact decoding of an unconstrained chain model; loss-augmented when
/// `gold` is given.
pub fn map_chain(
    model: &ScoringModel,
    w: &WeightVector,
    x: &Input,
    space: &OutputSpace,
    loss: LossFn,
    gold: Option<&Assignment>,
) -> Result<InferenceResult> {
    if !model.is_chain() {
        return Err(Error::NotAChain);
    }
    if !space.is_unconstrained() {
        return Err(Error::ConstrainedSpace);
    }
    let pot = model.potentials(w, x)?;
    check_space(&pot, space)?;
    chain_on(&pot, gold, loss)
}
