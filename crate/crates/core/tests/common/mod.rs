#![allow(dead_code)]

use decl::decomposition::Decomposition;
use decl::inference::map_exact;
use decl::learning::LossFn;
use decl::model::{Assignment, Input, Instance, ScoringModel, WeightVector};
use decl::space::{diff_set, ConstraintSet, LinearConstraint, Literal, OutputSpace, Relation};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A non-empty space with a few random linear rows and clauses.
pub fn random_space(rng: &mut TestRng, n: usize, alphabet: usize) -> OutputSpace {
    loop {
        let mut cons = ConstraintSet::default();
        for _ in 0..rng.random_range(0..=2) {
            let a: Vec<i64> = (0..n).map(|_| rng.random_range(-1..=1)).collect();
            let rel = *[Relation::Le, Relation::Ge, Relation::Eq].choose(rng).unwrap();
            let b = rng.random_range(0..=(n as i64));
            cons = cons.with_linear(LinearConstraint::new(a, rel, b));
        }
        for _ in 0..rng.random_range(0..=1) {
            let width = rng.random_range(1..=n.min(3));
            let clause = (0..width)
                .map(|_| {
                    let var = rng.random_range(0..n);
                    if rng.random_bool(0.5) {
                        Literal::pos(var)
                    } else {
                        Literal::neg(var)
                    }
                })
                .collect();
            cons = cons.with_clause(clause);
        }
        if let Ok(space) = OutputSpace::new(n, alphabet, cons) {
            return space;
        }
    }
}

/// Singleton model for binary alphabets half of the time, otherwise a
/// pairwise model on random edges.
pub fn random_model(rng: &mut TestRng, n: usize, d: usize, alphabet: usize) -> ScoringModel {
    if alphabet == 2 && rng.random_bool(0.5) {
        return ScoringModel::singleton(n, d).unwrap();
    }
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(0.3) {
                edges.push((u, v));
            }
        }
    }
    ScoringModel::pairwise(n, d, alphabet, edges, rng.random_bool(0.5)).unwrap()
}

pub fn random_weights(rng: &mut TestRng, dim: usize) -> WeightVector {
    WeightVector::new((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

pub fn random_input(rng: &mut TestRng, n: usize, d: usize) -> Input {
    Input::per_variable(
        (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect(),
    )
    .unwrap()
}

pub fn random_feasible(rng: &mut TestRng, space: &OutputSpace) -> Assignment {
    space.enumerate_feasible().unwrap().choose(rng).unwrap().clone()
}

/// Between one and four random non-empty sets, normalized.
pub fn random_decomposition(rng: &mut TestRng, n: usize) -> Decomposition {
    let count = rng.random_range(1..=4);
    let sets = (0..count)
        .map(|_| {
            let size = rng.random_range(1..=n.min(4));
            (0..size).map(|_| rng.random_range(0..n)).collect()
        })
        .collect();
    Decomposition::normalized(sets, n).unwrap()
}

/// Instances with random inputs and random feasible gold labels.
pub fn random_data(rng: &mut TestRng, model: &ScoringModel, space: &OutputSpace, m: usize) -> Vec<Instance> {
    (0..m)
        .map(|_| {
            let x = random_input(rng, model.n(), model.d());
            Instance::new(x, random_feasible(rng, space))
        })
        .collect()
}

/// Instances labelled by exact MAP under `w_star`.
pub fn teacher_data(
    rng: &mut TestRng,
    model: &ScoringModel,
    space: &OutputSpace,
    w_star: &WeightVector,
    m: usize,
) -> Vec<Instance> {
    (0..m)
        .map(|_| {
            let x = random_input(rng, model.n(), model.d());
            let y = map_exact(model, w_star, &x, space).unwrap().argmax;
            Instance::new(x, y)
        })
        .collect()
}

pub fn random_loss(rng: &mut TestRng) -> LossFn {
    *[LossFn::Hamming, LossFn::ZeroOne, LossFn::Perceptron].choose(rng).unwrap()
}

/// Feasible outputs whose difference from gold fits inside one set.
pub fn brute_neighborhood(space: &OutputSpace, gold: &Assignment, s: &Decomposition) -> Vec<Assignment> {
    let sets = s.to_sets();
    space
        .enumerate_feasible()
        .unwrap()
        .into_iter()
        .filter(|y| {
            let diff = diff_set(gold, y).unwrap();
            sets.iter().any(|set| diff.iter().all(|i| set.contains(i)))
        })
        .collect()
}

fn hinge(model: &ScoringModel, w: &WeightVector, inst: &Instance, y: &Assignment, loss: LossFn) -> f64 {
    let fy = model.flat_score(w, &inst.x, y).unwrap();
    let fg = model.flat_score(w, &inst.x, &inst.y).unwrap();
    fy - fg + loss.eval(&inst.y, y)
}

/// Largest hinge over `candidates`, with the smallest maximizer.
pub fn brute_max(
    model: &ScoringModel,
    w: &WeightVector,
    inst: &Instance,
    candidates: &[Assignment],
    loss: LossFn,
) -> (f64, Assignment) {
    let mut best: Option<(f64, Assignment)> = None;
    for y in candidates {
        let v = hinge(model, w, inst, y, loss);
        match &best {
            Some((b, _)) if v <= *b => {}
            _ => best = Some((v, y.clone())),
        }
    }
    best.unwrap()
}

pub fn brute_decl_objective(
    model: &ScoringModel,
    w: &WeightVector,
    data: &[Instance],
    decomps: &[Decomposition],
    space: &OutputSpace,
    loss: LossFn,
) -> f64 {
    data.iter()
        .zip(decomps)
        .map(|(inst, s)| brute_max(model, w, inst, &brute_neighborhood(space, &inst.y, s), loss).0)
        .sum()
}

pub fn brute_global_objective(
    model: &ScoringModel,
    w: &WeightVector,
    data: &[Instance],
    space: &OutputSpace,
    loss: LossFn,
) -> f64 {
    let all = space.enumerate_feasible().unwrap();
    data.iter().map(|inst| brute_max(model, w, inst, &all, loss).0).sum()
}
