//! Constrained output spaces.
//!
//! Labels are small integers. Linear constraints act on the label values
//! (`a · y ≤ b`); a clause literal on variable `i` is true when `y_i ≠ 0`,
//! or when `y_i = 0` if negated. For binary spaces these are the usual
//! semantics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Assignment;

pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

impl Relation {
    fn holds(self, lhs: i64, b: i64) -> bool {
        match self {
            Relation::Le => lhs <= b,
            Relation::Ge => lhs >= b,
            Relation::Eq => lhs == b,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub a: Vec<i64>,
    pub rel: Relation,
    pub b: i64,
}

impl LinearConstraint {
    pub fn new(a: Vec<i64>, rel: Relation, b: i64) -> Self {
        LinearConstraint { a, rel, b }
    }

    fn lhs(&self, y: &[u8]) -> i64 {
        self.a.iter().zip(y).map(|(&a, &l)| a * l as i64).sum()
    }

    pub fn is_satisfied(&self, y: &[u8]) -> bool {
        self.rel.holds(self.lhs(y), self.b)
    }
}

/// Literal over a 0-indexed variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Literal {
    pub var: usize,
    pub neg: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Self {
        Literal { var, neg: false }
    }

    pub fn neg(var: usize) -> Self {
        Literal { var, neg: true }
    }

    #[inline]
    fn truth(self, label: u8) -> bool {
        (label != 0) != self.neg
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConstraintSet {
    pub linear: Vec<LinearConstraint>,
    pub clauses: Vec<Vec<Literal>>,
}

impl ConstraintSet {
    pub fn is_empty(&self) -> bool {
        self.linear.is_empty() && self.clauses.is_empty()
    }

    pub fn with_linear(mut self, c: LinearConstraint) -> Self {
        self.linear.push(c);
        self
    }

    pub fn with_clause(mut self, clause: Vec<Literal>) -> Self {
        self.clauses.push(clause);
        self
    }
}

/// Per-variable occurrence lists used by [`PatchChecker`].
#[derive(Clone, Debug, Default)]
struct SpaceIndex {
    rows: Vec<Vec<(usize, i64)>>,
    literals: Vec<Vec<(usize, Literal)>>,
}

impl SpaceIndex {
    fn build(n: usize, constraints: &ConstraintSet) -> Self {
        let mut rows = vec![Vec::new(); n];
        for (r, c) in constraints.linear.iter().enumerate() {
            for (i, &a) in c.a.iter().enumerate() {
                if a != 0 {
                    rows[i].push((r, a));
                }
            }
        }
        let mut literals = vec![Vec::new(); n];
        for (c, clause) in constraints.clauses.iter().enumerate() {
            for &lit in clause {
                literals[lit.var].push((c, lit));
            }
        }
        SpaceIndex { rows, literals }
    }
}

/// A declaratively constrained output space `Y ⊆ {0..alphabet-1}^n`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "SpaceLayout", into = "SpaceLayout")]
pub struct OutputSpace {
    n: usize,
    alphabet: usize,
    constraints: ConstraintSet,
    enumeration_cap: u64,
    index: SpaceIndex,
}

impl PartialEq for OutputSpace {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.alphabet == other.alphabet
            && self.constraints == other.constraints
            && self.enumeration_cap == other.enumeration_cap
    }
}

/// JSON layout of an [`OutputSpace`]; clause variables are 1-indexed.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpaceLayout {
    pub n: usize,
    #[serde(default = "two")]
    pub alphabet: usize,
    #[serde(default)]
    pub linear: Vec<LinearConstraint>,
    #[serde(default)]
    pub clauses: Vec<Vec<LiteralLayout>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enumeration_cap: Option<u64>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LiteralLayout {
    pub var: usize,
    #[serde(default)]
    pub neg: bool,
}

fn two() -> usize {
    2
}

impl TryFrom<SpaceLayout> for OutputSpace {
    type Error = Error;

    fn try_from(l: SpaceLayout) -> Result<Self> {
        let clauses = l
            .clauses
            .iter()
            .map(|clause| {
                clause
                    .iter()
                    .map(|lit| {
                        if lit.var == 0 {
                            Err(Error::InvalidConstraint(
                                "clause variables are 1-indexed".into(),
                            ))
                        } else {
                            Ok(Literal {
                                var: lit.var - 1,
                                neg: lit.neg,
                            })
                        }
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let constraints = ConstraintSet {
            linear: l.linear,
            clauses,
        };
        OutputSpace::with_cap(
            l.n,
            l.alphabet,
            constraints,
            l.enumeration_cap.unwrap_or(DEFAULT_ENUMERATION_CAP),
            None,
        )
    }
}

impl From<OutputSpace> for SpaceLayout {
    fn from(s: OutputSpace) -> Self {
        SpaceLayout {
            n: s.n,
            alphabet: s.alphabet,
            clauses: s
                .constraints
                .clauses
                .iter()
                .map(|c| {
                    c.iter()
                        .map(|lit| LiteralLayout {
                            var: lit.var + 1,
                            neg: lit.neg,
                        })
                        .collect()
                })
                .collect(),
            linear: s.constraints.linear,
            enumeration_cap: (s.enumeration_cap != DEFAULT_ENUMERATION_CAP)
                .then_some(s.enumeration_cap),
        }
    }
}

impl OutputSpace {
    pub fn new(n: usize, alphabet: usize, constraints: ConstraintSet) -> Result<Self> {
        Self::with_cap(n, alphabet, constraints, DEFAULT_ENUMERATION_CAP, None)
    }

    pub fn unconstrained(n: usize, alphabet: usize) -> Result<Self> {
        Self::new(n, alphabet, ConstraintSet::default())
    }

    /// Binary encoding of an `r`-way multi-class label: `Σ_i y_i = 1`.
    pub fn multiclass(r: usize) -> Result<Self> {
        let c = LinearConstraint::new(vec![1; r], Relation::Eq, 1);
        Self::new(r, 2, ConstraintSet::default().with_linear(c))
    }

    /// Construction with an explicit enumeration cap and an optional
    /// feasible witness. Without a witness, non-emptiness is established by
    /// searching the space, which must then fit under the cap.
    pub fn with_cap(
        n: usize,
        alphabet: usize,
        constraints: ConstraintSet,
        enumeration_cap: u64,
        witness: Option<&Assignment>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::config("n", "must be positive"));
        }
        if !(2..=u8::MAX as usize).contains(&alphabet) {
            return Err(Error::config("alphabet", "must lie in 2..=255"));
        }
        for c in &constraints.linear {
            if c.a.len() != n {
                return Err(Error::InvalidConstraint(format!(
                    "coefficient row has length {}, expected {n}",
                    c.a.len()
                )));
            }
        }
        for clause in &constraints.clauses {
            if clause.is_empty() {
                return Err(Error::InvalidConstraint("empty clause".into()));
            }
            if let Some(lit) = clause.iter().find(|lit| lit.var >= n) {
                return Err(Error::IndexOutOfRange { index: lit.var, n });
            }
        }
        let index = SpaceIndex::build(n, &constraints);
        let space = OutputSpace {
            n,
            alphabet,
            constraints,
            enumeration_cap,
            index,
        };
        if space.constraints.is_empty() {
            return Ok(space);
        }
        match witness {
            Some(y) => {
                if !space.is_feasible(y)? {
                    return Err(Error::Infeasible);
                }
            }
            None => {
                let mut found = false;
                space.try_for_each_feasible(|_| {
                    found = true;
                    false
                })?;
                if !found {
                    return Err(Error::EmptySpace);
                }
            }
        }
        Ok(space)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn constraints(&self) -> &ConstraintSet {
        &self.constraints
    }

    pub fn enumeration_cap(&self) -> u64 {
        self.enumeration_cap
    }

    pub fn is_unconstrained(&self) -> bool {
        self.constraints.is_empty()
    }

    /// Same variables and alphabet with every constraint dropped.
    pub fn relaxed(&self) -> OutputSpace {
        OutputSpace {
            n: self.n,
            alphabet: self.alphabet,
            constraints: ConstraintSet::default(),
            enumeration_cap: self.enumeration_cap,
            index: SpaceIndex::build(self.n, &ConstraintSet::default()),
        }
    }

    /// `alphabet^n`, or `None` on overflow.
    pub fn total_assignments(&self) -> Option<u64> {
        (self.alphabet as u64).checked_pow(self.n as u32)
    }

    fn check_cap(&self) -> Result<()> {
        match self.total_assignments() {
            Some(total) if total <= self.enumeration_cap => Ok(()),
            _ => Err(Error::SpaceTooLarge {
                alphabet: self.alphabet,
                n: self.n,
                cap: self.enumeration_cap,
            }),
        }
    }

    pub fn is_feasible(&self, y: &Assignment) -> Result<bool> {
        y.check(self.n, self.alphabet)?;
        Ok(self.is_feasible_unchecked(y))
    }

    pub(crate) fn is_feasible_unchecked(&self, y: &[u8]) -> bool {
        self.constraints.linear.iter().all(|c| c.is_satisfied(y))
            && self
                .constraints
                .clauses
                .iter()
                .all(|clause| clause.iter().any(|lit| lit.truth(y[lit.var])))
    }

    /// Visits feasible assignments in lexicographic order until `visit`
    /// returns `false`.
    pub fn try_for_each_feasible(&self, mut visit: impl FnMut(&Assignment) -> bool) -> Result<()> {
        self.check_cap()?;
        let mut y = Assignment::zeros(self.n);
        let top = (self.alphabet - 1) as u8;
        loop {
            if self.is_feasible_unchecked(&y) && !visit(&y) {
                return Ok(());
            }
            // odometer increment, position 0 most significant
            let labels = y.labels_mut();
            let mut pos = self.n;
            loop {
                if pos == 0 {
                    return Ok(());
                }
                pos -= 1;
                if labels[pos] < top {
                    labels[pos] += 1;
                    break;
                }
                labels[pos] = 0;
            }
        }
    }

    pub fn for_each_feasible(&self, mut visit: impl FnMut(&Assignment)) -> Result<()> {
        self.try_for_each_feasible(|y| {
            visit(y);
            true
        })
    }

    /// All feasible assignments in lexicographic order.
    pub fn enumerate_feasible(&self) -> Result<Vec<Assignment>> {
        let mut out = Vec::new();
        self.for_each_feasible(|y| out.push(y.clone()))?;
        Ok(out)
    }

    pub fn count_feasible(&self) -> Result<usize> {
        let mut count = 0;
        self.for_each_feasible(|_| count += 1)?;
        Ok(count)
    }
}

/// Positions where two assignments differ, ascending and 0-indexed.
pub fn diff_set(y: &Assignment, y2: &Assignment) -> Result<Vec<usize>> {
    if y.len() != y2.len() {
        return Err(Error::DimensionMismatch {
            axis: "assignment length",
            expected: y.len(),
            got: y2.len(),
        });
    }
    Ok(y.iter()
        .zip(y2.iter())
        .enumerate()
        .filter(|(_, (a, b))| a != b)
        .map(|(i, _)| i)
        .collect())
}

/// `(y_s, gold_{-s})`: gold with the positions in `s` replaced by `y_s`.
pub fn patch(gold: &Assignment, s: &[usize], y_s: &[u8]) -> Result<Assignment> {
    if s.len() != y_s.len() {
        return Err(Error::DimensionMismatch {
            axis: "patch arity",
            expected: s.len(),
            got: y_s.len(),
        });
    }
    let mut out = gold.clone();
    for (&i, &l) in s.iter().zip(y_s) {
        if i >= gold.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                n: gold.len(),
            });
        }
        out.labels_mut()[i] = l;
    }
    Ok(out)
}

/// Feasibility of patched assignments relative to a fixed feasible gold.
///
/// Only constraints touching changed positions are re-evaluated; the answer
/// always agrees with [`OutputSpace::is_feasible`] on the patched assignment.
pub(crate) struct PatchChecker<'a> {
    space: &'a OutputSpace,
    gold_lhs: Vec<i64>,
    gold_true: Vec<i32>,
    row_delta: Vec<i64>,
    row_touched: Vec<bool>,
    rows: Vec<usize>,
    clause_delta: Vec<i32>,
    clause_touched: Vec<bool>,
    clauses: Vec<usize>,
}

impl<'a> PatchChecker<'a> {
    pub(crate) fn new(space: &'a OutputSpace, gold: &[u8]) -> Self {
        let c = &space.constraints;
        let gold_lhs = c.linear.iter().map(|r| r.lhs(gold)).collect::<Vec<_>>();
        let gold_true = c
            .clauses
            .iter()
            .map(|clause| clause.iter().filter(|l| l.truth(gold[l.var])).count() as i32)
            .collect::<Vec<_>>();
        PatchChecker {
            space,
            row_delta: vec![0; gold_lhs.len()],
            row_touched: vec![false; gold_lhs.len()],
            rows: Vec::new(),
            clause_delta: vec![0; gold_true.len()],
            clause_touched: vec![false; gold_true.len()],
            clauses: Vec::new(),
            gold_lhs,
            gold_true,
        }
    }

    /// `y` must agree with `gold` outside `set`.
    pub(crate) fn is_feasible(&mut self, gold: &[u8], y: &[u8], set: &[usize]) -> bool {
        if self.space.is_unconstrained() {
            return true;
        }
        let index = &self.space.index;
        for &i in set {
            if y[i] == gold[i] {
                continue;
            }
            let dy = y[i] as i64 - gold[i] as i64;
            for &(r, a) in &index.rows[i] {
                if !self.row_touched[r] {
                    self.row_touched[r] = true;
                    self.rows.push(r);
                }
                self.row_delta[r] += a * dy;
            }
            for &(c, lit) in &index.literals[i] {
                let change = lit.truth(y[i]) as i32 - lit.truth(gold[i]) as i32;
                if change != 0 {
                    if !self.clause_touched[c] {
                        self.clause_touched[c] = true;
                        self.clauses.push(c);
                    }
                    self.clause_delta[c] += change;
                }
            }
        }
        let linear = &self.space.constraints.linear;
        let mut ok = true;
        for &r in &self.rows {
            ok &= linear[r]
                .rel
                .holds(self.gold_lhs[r] + self.row_delta[r], linear[r].b);
            self.row_delta[r] = 0;
            self.row_touched[r] = false;
        }
        self.rows.clear();
        for &c in &self.clauses {
            ok &= self.gold_true[c] + self.clause_delta[c] > 0;
            self.clause_delta[c] = 0;
            self.clause_touched[c] = false;
        }
        self.clauses.clear();
        ok
    }
}
