use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::map_exact;
use crate::model::{Input, Instance, ScoringModel, WeightVector};
use crate::rng::{stream, Stream, StreamRng};
use crate::space::{ConstraintSet, LinearConstraint, Literal, OutputSpace, Relation};

/// Consecutive constraint draws rejected before generation gives up.
pub const MAX_REGENERATIONS: usize = 1000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SyntheticFamily {
    #[default]
    Singleton,
    /// Pairwise chain with untied transition tables.
    Chain,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n: usize,
    pub d: usize,
    /// Number of random linear constraints.
    pub constraints: usize,
    /// Number of random positive OR clauses, added on top of `constraints`.
    pub clauses: usize,
    pub min_feasible: usize,
    pub train_sizes: Vec<usize>,
    pub test_size: usize,
    pub validation_size: usize,
    pub trials: usize,
    pub seed: u64,
    pub family: SyntheticFamily,
    pub alphabet: usize,
    /// Draw one input row per instance, shared by every variable.
    pub shared_input: bool,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n: 10,
            d: 20,
            constraints: 3,
            clauses: 0,
            min_feasible: 50,
            train_sizes: vec![20, 40, 80, 160, 320],
            test_size: 200,
            validation_size: 100,
            trials: 10,
            seed: 0,
            family: SyntheticFamily::Singleton,
            alphabet: 2,
            shared_input: false,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("n", "must be at least 1"));
        }
        if self.d == 0 {
            return Err(Error::config("d", "must be at least 1"));
        }
        if self.min_feasible < 2 {
            return Err(Error::config("min_feasible", "must be at least 2"));
        }
        if self.train_sizes.is_empty() || self.train_sizes.contains(&0) {
            return Err(Error::config("train_sizes", "must be a non-empty list of positive sizes"));
        }
        if self.test_size == 0 {
            return Err(Error::config("test_size", "must be positive"));
        }
        if self.validation_size == 0 {
            return Err(Error::config("validation_size", "must be positive"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if self.alphabet < 2 || self.alphabet > 255 {
            return Err(Error::config("alphabet", "must be between 2 and 255"));
        }
        if self.family == SyntheticFamily::Singleton && self.alphabet != 2 {
            return Err(Error::config("alphabet", "the singleton family is binary"));
        }
        if self.family == SyntheticFamily::Chain && self.n < 2 {
            return Err(Error::config("n", "a chain needs at least 2 variables"));
        }
        if self.clauses > 0 && self.n < 2 {
            return Err(Error::config("clauses", "clauses need at least 2 variables"));
        }
        let total = (self.alphabet as u64).checked_pow(self.n as u32);
        match total {
            Some(t) if t >= self.min_feasible as u64 => Ok(()),
            Some(_) => Err(Error::config("min_feasible", "exceeds the number of assignments")),
            None => Err(Error::SpaceTooLarge {
                alphabet: self.alphabet,
                n: self.n,
                cap: u64::MAX,
            }),
        }
    }

    pub fn max_train_size(&self) -> usize {
        self.train_sizes.iter().copied().max().unwrap_or(0)
    }

    pub fn model(&self) -> Result<ScoringModel> {
        match self.family {
            SyntheticFamily::Singleton => ScoringModel::singleton(self.n, self.d),
            SyntheticFamily::Chain => ScoringModel::chain(self.n, self.d, self.alphabet, false),
        }
    }
}

/// A generated problem: space, true weights and the three splits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticData {
    pub seed: u64,
    /// Constraint draws used, including the accepted one.
    pub attempts: usize,
    pub model: ScoringModel,
    pub space: OutputSpace,
    pub w_star: WeightVector,
    /// The largest training size; smaller sizes are prefixes.
    pub train: Vec<Instance>,
    pub validation: Vec<Instance>,
    pub test: Vec<Instance>,
}

impl SyntheticData {
    pub fn train_prefix(&self, size: usize) -> &[Instance] {
        &self.train[..size.min(self.train.len())]
    }
}

/// One row `a·y ≤ b`: `a` has density 1/2 with at least two ones and `b`
/// is uniform in `{1, …, max(1, ⌈|a|/2⌉)}`.
pub fn random_linear_constraint<R: Rng + ?Sized>(n: usize, rng: &mut R) -> LinearConstraint {
    let a = loop {
        let a: Vec<i64> = (0..n).map(|_| rng.random_bool(0.5) as i64).collect();
        if n < 2 || a.iter().sum::<i64>() >= 2 {
            break a;
        }
    };
    let ones: i64 = a.iter().sum();
    let upper = ((ones + 1) / 2).max(1);
    let b = rng.random_range(1..=upper);
    LinearConstraint::new(a, Relation::Le, b)
}

/// A positive OR clause over 2 or 3 distinct variables.
pub fn random_positive_clause<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Literal> {
    let width = rng.random_range(2..=3.min(n));
    let mut vars = sample(rng, n, width).into_vec();
    vars.sort_unstable();
    vars.into_iter().map(Literal::pos).collect()
}

/// Binary space of `k` random positive OR clauses.
pub fn random_clause_space<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<OutputSpace> {
    let mut cons = ConstraintSet::default();
    for _ in 0..k {
        cons = cons.with_clause(random_positive_clause(n, rng));
    }
    OutputSpace::new(n, 2, cons)
}

/// Binary space of `k` linear constraints with 0/1 rows in which any two
/// variables share at most one row. Rows have at least two ones and a random
/// relation; bounds are redrawn until the space is non-empty.
pub fn random_one_overlap_space<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<OutputSpace> {
    if n < 2 {
        return Err(Error::config("n", "one-overlap systems need at least 2 variables"));
    }
    for _ in 0..MAX_REGENERATIONS {
        let mut rows: Vec<Vec<usize>> = Vec::with_capacity(k);
        let mut ok = true;
        for _ in 0..k {
            let mut placed = false;
            for _ in 0..100 {
                let size = rng.random_range(2..=n);
                let mut vars = sample(rng, n, size).into_vec();
                vars.sort_unstable();
                let overlaps = rows
                    .iter()
                    .any(|r| r.iter().filter(|v| vars.binary_search(v).is_ok()).count() > 1);
                if !overlaps {
                    rows.push(vars);
                    placed = true;
                    break;
                }
            }
            if !placed {
                ok = false;
                break;
            }
        }
        if !ok {
            continue;
        }
        let mut cons = ConstraintSet::default();
        for vars in &rows {
            let mut a = vec![0i64; n];
            for &v in vars {
                a[v] = 1;
            }
            let rel = match rng.random_range(0..3) {
                0 => Relation::Le,
                1 => Relation::Ge,
                _ => Relation::Eq,
            };
            let b = rng.random_range(0..=vars.len() as i64);
            cons = cons.with_linear(LinearConstraint::new(a, rel, b));
        }
        if let Ok(space) = OutputSpace::new(n, 2, cons) {
            return Ok(space);
        }
    }
    Err(Error::GenerationFailed(MAX_REGENERATIONS))
}

fn normal_vec<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn draw_space(config: &SyntheticConfig, rng: &mut StreamRng) -> Result<(OutputSpace, usize)> {
    for attempt in 1..=MAX_REGENERATIONS {
        let mut cons = ConstraintSet::default();
        for _ in 0..config.constraints {
            cons = cons.with_linear(random_linear_constraint(config.n, rng));
        }
        for _ in 0..config.clauses {
            cons = cons.with_clause(random_positive_clause(config.n, rng));
        }
        let space = match OutputSpace::new(config.n, config.alphabet, cons) {
            Ok(space) => space,
            Err(Error::EmptySpace) => continue,
            Err(e) => return Err(e),
        };
        if space.count_feasible()? >= config.min_feasible {
            return Ok((space, attempt));
        }
    }
    Err(Error::GenerationFailed(MAX_REGENERATIONS))
}

fn draw_weights(model: &ScoringModel, rng: &mut StreamRng) -> WeightVector {
    let mut w = normal_vec(model.dim(), rng);
    // diagonal boost on every transition table
    let range = model.edge_weight_range();
    if !range.is_empty() {
        let k = model.alphabet();
        for e in 0..model.edges().len() {
            for l in 0..k as u8 {
                w[model.edge_entry(e, l, l)] += 1.0;
            }
        }
    }
    WeightVector(w)
}

fn draw_instances(
    shared: bool,
    model: &ScoringModel,
    w_star: &WeightVector,
    space: &OutputSpace,
    count: usize,
    rng: &mut StreamRng,
) -> Result<Vec<Instance>> {
    (0..count)
        .map(|_| {
            let x = if shared {
                Input::shared(normal_vec(model.d(), rng))
            } else {
                Input::per_variable((0..model.n()).map(|_| normal_vec(model.d(), rng)).collect())?
            };
            let y = map_exact(model, w_star, &x, space)?.argmax;
            Ok(Instance::new(x, y))
        })
        .collect()
}

/// Draws a space, true weights and train/validation/test splits from
/// `config.seed`. Gold labels are the exact MAP outputs under the true
/// weights, so every split is separable.
pub fn gen_synthetic(config: &SyntheticConfig) -> Result<SyntheticData> {
    config.validate()?;
    let model = config.model()?;
    let mut rng = stream(config.seed, Stream::Data);
    let (space, attempts) = draw_space(config, &mut rng)?;
    let w_star = draw_weights(&model, &mut rng);
    let train = draw_instances(config.shared_input, &model, &w_star, &space, config.max_train_size(), &mut rng)?;
    let validation = draw_instances(config.shared_input, &model, &w_star, &space, config.validation_size, &mut rng)?;
    let test = draw_instances(config.shared_input, &model, &w_star, &space, config.test_size, &mut rng)?;
    Ok(SyntheticData {
        seed: config.seed,
        attempts,
        model,
        space,
        w_star,
        train,
        validation,
        test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learning::{global_objective, LossFn};

    fn small() -> SyntheticConfig {
        SyntheticConfig {
            train_sizes: vec![5, 10],
            test_size: 7,
            validation_size: 3,
            ..Default::default()
        }
    }

    #[test]
    fn default_spaces_meet_the_feasible_bound() {
        for seed in 0..5 {
            let data = gen_synthetic(&SyntheticConfig { seed, ..small() }).unwrap();
            assert!(data.space.count_feasible().unwrap() >= 50);
            assert_eq!(data.train.len(), 10);
            assert_eq!(data.validation.len(), 3);
            assert_eq!(data.test.len(), 7);
            assert_eq!(data.train_prefix(5), &data.train[..5]);
        }
    }

    #[test]
    fn unconstrained_gold_is_per_variable_sign() {
        let config = SyntheticConfig { constraints: 0, ..small() };
        let data = gen_synthetic(&config).unwrap();
        assert_eq!(data.space.count_feasible().unwrap(), 1024);
        for inst in &data.train {
            for i in 0..config.n {
                let block = &data.w_star.as_slice()[i * config.d..(i + 1) * config.d];
                let f: f64 = block.iter().zip(inst.x.row(i)).map(|(a, b)| a * b).sum();
                assert_eq!(inst.y[i], (f > 0.0) as u8);
            }
        }
    }

    #[test]
    fn true_weights_separate_every_split() {
        let data = gen_synthetic(&SyntheticConfig { seed: 3, ..small() }).unwrap();
        for split in [&data.train, &data.validation, &data.test] {
            let g = global_objective(&data.model, &data.w_star, split, &data.space, LossFn::Perceptron).unwrap();
            assert_eq!(g, 0.0);
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = serde_json::to_string(&gen_synthetic(&small()).unwrap()).unwrap();
        let b = serde_json::to_string(&gen_synthetic(&small()).unwrap()).unwrap();
        assert_eq!(a, b);
        let c = serde_json::to_string(&gen_synthetic(&SyntheticConfig { seed: 1, ..small() }).unwrap()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn impossible_bound_fails_after_regenerations() {
        let config = SyntheticConfig { n: 4, constraints: 3, min_feasible: 16, ..small() };
        let err = gen_synthetic(&config).unwrap_err();
        assert!(matches!(err, Error::GenerationFailed(MAX_REGENERATIONS)));
    }

    #[test]
    fn invalid_configs() {
        assert!(SyntheticConfig { n: 0, ..small() }.validate().is_err());
        assert!(SyntheticConfig { min_feasible: 1, ..small() }.validate().is_err());
        assert!(SyntheticConfig { train_sizes: vec![0], ..small() }.validate().is_err());
        assert!(SyntheticConfig { alphabet: 3, ..small() }.validate().is_err());
    }

    #[test]
    fn chain_family_with_clauses() {
        let config = SyntheticConfig {
            n: 6,
            d: 3,
            constraints: 1,
            clauses: 1,
            min_feasible: 20,
            family: SyntheticFamily::Chain,
            alphabet: 3,
            ..small()
        };
        let data = gen_synthetic(&config).unwrap();
        assert!(data.model.is_chain());
        assert!(data.train.iter().all(|i| data.space.is_feasible(&i.y).unwrap()));
    }

    #[test]
    fn one_overlap_rows_share_at_most_one_variable() {
        let mut rng = stream(11, Stream::Data);
        for _ in 0..20 {
            let space = random_one_overlap_space(8, 3, &mut rng).unwrap();
            let rows = &space.constraints().linear;
            for (i, r) in rows.iter().enumerate() {
                for s in &rows[i + 1..] {
                    let shared = r.a.iter().zip(&s.a).filter(|(x, y)| **x == 1 && **y == 1).count();
                    assert!(shared <= 1);
                }
            }
        }
    }
}
