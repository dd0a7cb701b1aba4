//! Assignments, inputs, and the two linear scoring families.
//!
//! A [`ScoringModel`] only describes a weight layout. Scores are always
//! `w · φ(x, y)` for a flat weight vector `w`, so every family is linear in
//! the weights. Inference works on [`Potentials`], the per-node and per-edge
//! tables obtained by contracting `w` with a fixed input `x`.

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Margins within this distance of zero classify an edge as [`Modularity::Neither`].
pub const MODULARITY_TOL: f64 = 1e-9;

/// A label vector over the output variables.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment(Vec<u8>);

impl Assignment {
    pub fn new(labels: Vec<u8>) -> Self {
        Assignment(labels)
    }

    pub fn zeros(n: usize) -> Self {
        Assignment(vec![0; n])
    }

    /// Parses a string of digits such as `"1110011"`.
    pub fn parse(s: &str) -> Option<Self> {
        s.chars()
            .map(|c| c.to_digit(36).map(|d| d as u8))
            .collect::<Option<Vec<_>>>()
            .map(Assignment)
    }

    pub fn labels(&self) -> &[u8] {
        &self.0
    }

    pub fn labels_mut(&mut self) -> &mut [u8] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.0
    }

    pub fn check(&self, n: usize, alphabet: usize) -> Result<()> {
        if self.0.len() != n {
            return Err(Error::DimensionMismatch {
                axis: "assignment length",
                expected: n,
                got: self.0.len(),
            });
        }
        if let Some((position, &label)) = self
            .0
            .iter()
            .enumerate()
            .find(|(_, &l)| l as usize >= alphabet)
        {
            return Err(Error::LabelOutOfRange {
                position,
                label,
                alphabet,
            });
        }
        Ok(())
    }
}

impl Deref for Assignment {
    type Target = [u8];

    fn deref(&self) -> &[u8] {
        &self.0
    }
}

impl From<Vec<u8>> for Assignment {
    fn from(v: Vec<u8>) -> Self {
        Assignment(v)
    }
}

impl fmt::Debug for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &l in &self.0 {
            write!(f, "{}", char::from_digit(l as u32, 36).unwrap_or('?'))?;
        }
        Ok(())
    }
}

/// Per-variable input rows. A single row is broadcast to every variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Input {
    rows: usize,
    d: usize,
    data: Vec<f64>,
}

impl Input {
    pub fn per_variable(rows: Vec<Vec<f64>>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        let n_rows = rows.len();
        let mut data = Vec::with_capacity(n_rows * d);
        for row in rows {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    axis: "input row width",
                    expected: d,
                    got: row.len(),
                });
            }
            data.extend(row);
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("x", "input entries must be finite"));
        }
        Ok(Input {
            rows: n_rows,
            d,
            data,
        })
    }

    pub fn shared(row: Vec<f64>) -> Self {
        Input {
            rows: 1,
            d: row.len(),
            data: row,
        }
    }

    pub fn is_shared(&self) -> bool {
        self.rows == 1
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Row seen by variable `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        let r = if self.rows == 1 { 0 } else { i };
        &self.data[r * self.d..(r + 1) * self.d]
    }

    fn check(&self, n: usize, d: usize) -> Result<()> {
        if self.rows != 1 && self.rows != n {
            return Err(Error::DimensionMismatch {
                axis: "input rows",
                expected: n,
                got: self.rows,
            });
        }
        if self.d != d {
            return Err(Error::DimensionMismatch {
                axis: "input columns",
                expected: d,
                got: self.d,
            });
        }
        Ok(())
    }
}

impl TryFrom<Vec<Vec<f64>>> for Input {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Input::per_variable(rows)
    }
}

impl From<Input> for Vec<Vec<f64>> {
    fn from(x: Input) -> Self {
        if x.d == 0 {
            return vec![Vec::new(); x.rows];
        }
        x.data.chunks(x.d).map(<[f64]>::to_vec).collect()
    }
}

/// A labeled training or test example.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub x: Input,
    pub y: Assignment,
}

impl Instance {
    pub fn new(x: Input, y: Assignment) -> Self {
        Instance { x, y }
    }
}

/// Dense joint feature vector `φ(x, y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `w · φ`, accumulated in index order.
    pub fn dot(&self, w: &WeightVector) -> f64 {
        let mut acc = 0.0;
        for (a, b) in w.0.iter().zip(&self.0) {
            acc += a * b;
        }
        acc
    }
}

/// Flat weight vector, laid out by a [`ScoringModel`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightVector(pub(crate) Vec<f64>);

impl WeightVector {
    pub fn zeros(dim: usize) -> Self {
        WeightVector(vec![0.0; dim])
    }

    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("weights", "entries must be finite"));
        }
        Ok(WeightVector(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        WeightVector(self.0.iter().map(|v| v * factor).collect())
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &WeightVector, b: f64) -> Self {
        WeightVector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        )
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        WeightVector::new(v)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(w: WeightVector) -> Self {
        w.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    #[serde(rename = "singleton")]
    SingletonLinear,
    #[serde(rename = "pairwise")]
    PairwiseNetwork,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modularity {
    Submodular,
    Supermodular,
    Neither,
}

/// Weight layout of a linear scoring function.
///
/// * `SingletonLinear`: binary labels, `f = Σ_i y_i w_i · x_i`, one block of
///   `d` weights per variable.
/// * `PairwiseNetwork`: node potential `w_node[i, y_i] · x_i` plus one
///   label-pair table per edge (or a single shared table when tied).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelLayout", into = "ModelLayout")]
pub struct ScoringModel {
    family: Family,
    n: usize,
    d: usize,
    alphabet: usize,
    edges: Vec<(usize, usize)>,
    tied_edges: bool,
}

/// JSON layout of a [`ScoringModel`]; edges are 1-indexed.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelLayout {
    pub family: Family,
    pub n: usize,
    pub d: usize,
    #[serde(default = "default_alphabet")]
    pub alphabet: usize,
    #[serde(default)]
    pub edges: Vec<[usize; 2]>,
    #[serde(default)]
    pub tied_edges: bool,
}

fn default_alphabet() -> usize {
    2
}

impl TryFrom<ModelLayout> for ScoringModel {
    type Error = Error;

    fn try_from(l: ModelLayout) -> Result<Self> {
        match l.family {
            Family::SingletonLinear => {
                if l.alphabet != 2 {
                    return Err(Error::NotBinary(l.alphabet));
                }
                if !l.edges.is_empty() {
                    return Err(Error::config("edges", "singleton models have no edges"));
                }
                ScoringModel::singleton(l.n, l.d)
            }
            Family::PairwiseNetwork => {
                let edges = l
                    .edges
                    .iter()
                    .map(|&[u, v]| {
                        if u == 0 || v == 0 {
                            Err(Error::config("edges", "edge endpoints are 1-indexed"))
                        } else {
                            Ok((u - 1, v - 1))
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                ScoringModel::pairwise(l.n, l.d, l.alphabet, edges, l.tied_edges)
            }
        }
    }
}

impl From<ScoringModel> for ModelLayout {
    fn from(m: ScoringModel) -> Self {
        ModelLayout {
            family: m.family,
            n: m.n,
            d: m.d,
            alphabet: m.alphabet,
            edges: m.edges.iter().map(|&(u, v)| [u + 1, v + 1]).collect(),
            tied_edges: m.tied_edges,
        }
    }
}

impl ScoringModel {
    pub fn singleton(n: usize, d: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::config("n", "must be positive"));
        }
        Ok(ScoringModel {
            family: Family::SingletonLinear,
            n,
            d,
            alphabet: 2,
            edges: Vec::new(),
            tied_edges: false,
        })
    }

    pub fn pairwise(
        n: usize,
        d: usize,
        alphabet: usize,
        edges: Vec<(usize, usize)>,
        tied_edges: bool,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::config("n", "must be positive"));
        }
        if !(2..=u8::MAX as usize).contains(&alphabet) {
            return Err(Error::config("alphabet", "must lie in 2..=255"));
        }
        for (idx, &(u, v)) in edges.iter().enumerate() {
            if u >= n || v >= n {
                return Err(Error::IndexOutOfRange {
                    index: u.max(v),
                    n,
                });
            }
            if u == v {
                return Err(Error::config("edges", "self loops are not allowed"));
            }
            let dup = edges[..idx]
                .iter()
                .any(|&(a, b)| (a, b) == (u, v) || (a, b) == (v, u));
            if dup {
                return Err(Error::config("edges", "duplicate edge"));
            }
        }
        Ok(ScoringModel {
            family: Family::PairwiseNetwork,
            n,
            d,
            alphabet,
            edges,
            tied_edges,
        })
    }

    /// Pairwise network over the path `0 - 1 - ... - n-1`.
    pub fn chain(n: usize, d: usize, alphabet: usize, tied_edges: bool) -> Result<Self> {
        let edges = (1..n).map(|i| (i - 1, i)).collect();
        ScoringModel::pairwise(n, d, alphabet, edges, tied_edges)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn tied_edges(&self) -> bool {
        self.tied_edges
    }

    pub fn is_chain(&self) -> bool {
        self.family == Family::PairwiseNetwork
            && self.edges.len() + 1 == self.n
            && self.edges.iter().enumerate().all(|(e, &(u, v))| u == e && v == e + 1)
    }

    fn edge_tables(&self) -> usize {
        match self.family {
            Family::SingletonLinear => 0,
            Family::PairwiseNetwork if self.edges.is_empty() => 0,
            Family::PairwiseNetwork if self.tied_edges => 1,
            Family::PairwiseNetwork => self.edges.len(),
        }
    }

    fn edge_offset(&self) -> usize {
        match self.family {
            Family::SingletonLinear => self.n * self.d,
            Family::PairwiseNetwork => self.n * self.alphabet * self.d,
        }
    }

    /// Joint-feature dimension.
    pub fn dim(&self) -> usize {
        self.edge_offset() + self.edge_tables() * self.alphabet * self.alphabet
    }

    /// Start of the node weight block for `(i, label)`, if that label has one.
    pub fn node_block(&self, i: usize, label: u8) -> Option<usize> {
        match self.family {
            Family::SingletonLinear => (label == 1).then_some(i * self.d),
            Family::PairwiseNetwork => Some((i * self.alphabet + label as usize) * self.d),
        }
    }

    /// Flat index of edge `e`'s table entry for labels `(a, b)`.
    pub fn edge_entry(&self, e: usize, a: u8, b: u8) -> usize {
        let table = if self.tied_edges { 0 } else { e };
        let k = self.alphabet;
        self.edge_offset() + (table * k + a as usize) * k + b as usize
    }

    /// Range of weights belonging to edge tables.
    pub fn edge_weight_range(&self) -> std::ops::Range<usize> {
        self.edge_offset()..self.dim()
    }

    pub fn check_input(&self, x: &Input) -> Result<()> {
        x.check(self.n, self.d)
    }

    pub fn check_weights(&self, w: &WeightVector) -> Result<()> {
        if w.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                axis: "weight dimension",
                expected: self.dim(),
                got: w.len(),
            });
        }
        Ok(())
    }

    fn check(&self, x: &Input, y: &Assignment) -> Result<()> {
        y.check(self.n, self.alphabet)?;
        self.check_input(x)
    }

    /// Visits the non-zero joint features in increasing index order.
    fn for_each_feature(&self, x: &Input, y: &Assignment, mut visit: impl FnMut(usize, f64)) {
        for i in 0..self.n {
            if let Some(start) = self.node_block(i, y[i]) {
                for (j, &v) in x.row(i).iter().enumerate() {
                    visit(start + j, v);
                }
            }
        }
        if self.edges.is_empty() {
            return;
        }
        if self.tied_edges {
            let k = self.alphabet;
            let mut counts = vec![0u32; k * k];
            for &(u, v) in &self.edges {
                counts[y[u] as usize * k + y[v] as usize] += 1;
            }
            let offset = self.edge_offset();
            for (idx, &c) in counts.iter().enumerate() {
                if c > 0 {
                    visit(offset + idx, c as f64);
                }
            }
        } else {
            for (e, &(u, v)) in self.edges.iter().enumerate() {
                visit(self.edge_entry(e, y[u], y[v]), 1.0);
            }
        }
    }

    /// Dense `φ(x, y)`.
    pub fn joint_feature(&self, x: &Input, y: &Assignment) -> Result<FeatureVector> {
        self.check(x, y)?;
        let mut phi = vec![0.0; self.dim()];
        self.for_each_feature(x, y, |idx, v| phi[idx] += v);
        Ok(FeatureVector(phi))
    }

    /// `w · φ(x, y)`, summed in the same index order as [`FeatureVector::dot`].
    pub fn flat_score(&self, w: &WeightVector, x: &Input, y: &Assignment) -> Result<f64> {
        self.check(x, y)?;
        self.check_weights(w)?;
        let mut acc = 0.0;
        self.for_each_feature(x, y, |idx, v| acc += w.0[idx] * v);
        Ok(acc)
    }

    /// Adds `scale * φ(x, y)` into `target`.
    #[cfg(test)]
    pub(crate) fn add_features(&self, target: &mut [f64], x: &Input, y: &Assignment, scale: f64) {
        self.for_each_feature(x, y, |idx, v| target[idx] += scale * v);
    }

    /// Adds `scale * (φ(x, gold) − φ(x, y))`, touching only the node blocks
    /// and edge entries whose labels differ.
    pub(crate) fn add_feature_difference(
        &self,
        target: &mut [f64],
        x: &Input,
        gold: &[u8],
        y: &[u8],
        scale: f64,
    ) {
        for i in 0..self.n {
            if gold[i] == y[i] {
                continue;
            }
            let row = x.row(i);
            if let Some(start) = self.node_block(i, gold[i]) {
                for (t, v) in target[start..start + self.d].iter_mut().zip(row) {
                    *t += scale * v;
                }
            }
            if let Some(start) = self.node_block(i, y[i]) {
                for (t, v) in target[start..start + self.d].iter_mut().zip(row) {
                    *t -= scale * v;
                }
            }
        }
        for (e, &(u, v)) in self.edges.iter().enumerate() {
            if gold[u] != y[u] || gold[v] != y[v] {
                target[self.edge_entry(e, gold[u], gold[v])] += scale;
                target[self.edge_entry(e, y[u], y[v])] -= scale;
            }
        }
    }

    /// Contracts `w` with `x` into node and edge tables.
    pub fn potentials(&self, w: &WeightVector, x: &Input) -> Result<Potentials> {
        self.check_input(x)?;
        self.check_weights(w)?;
        Ok(self.potentials_unchecked(w, x))
    }

    pub(crate) fn potentials_unchecked(&self, w: &WeightVector, x: &Input) -> Potentials {
        let k = self.alphabet;
        let mut node = vec![0.0; self.n * k];
        for i in 0..self.n {
            let row = x.row(i);
            for label in 0..k as u8 {
                if let Some(start) = self.node_block(i, label) {
                    let block = &w.0[start..start + self.d];
                    let mut acc = 0.0;
                    for (a, b) in block.iter().zip(row) {
                        acc += a * b;
                    }
                    node[i * k + label as usize] = acc;
                }
            }
        }
        let tables = w.0[self.edge_weight_range()].to_vec();
        Potentials {
            n: self.n,
            k,
            node,
            edges: self.edges.clone(),
            tables,
            tied: self.tied_edges,
        }
    }

    /// Sign test on `φ(1,1) + φ(0,0) − φ(1,0) − φ(0,1)` for a binary edge.
    pub fn edge_modularity(
        &self,
        w: &WeightVector,
        x: &Input,
        edge: (usize, usize),
    ) -> Result<Modularity> {
        if self.family != Family::PairwiseNetwork {
            return Err(Error::NotPairwise);
        }
        if self.alphabet != 2 {
            return Err(Error::NotBinary(self.alphabet));
        }
        let e = self
            .edges
            .iter()
            .position(|&(u, v)| (u, v) == edge || (v, u) == edge)
            .ok_or(Error::EdgeNotFound(edge.0, edge.1))?;
        let pot = self.potentials(w, x)?;
        Ok(classify_margin(pot.modularity_margin(e)))
    }
}

pub fn classify_margin(margin: f64) -> Modularity {
    if margin > MODULARITY_TOL {
        Modularity::Submodular
    } else if margin < -MODULARITY_TOL {
        Modularity::Supermodular
    } else {
        Modularity::Neither
    }
}

/// Node and edge score tables for one input.
///
/// `node[i * k + l]` scores label `l` at variable `i`; every edge reads a
/// `k × k` table (shared when tied).
#[derive(Clone, Debug)]
pub struct Potentials {
    n: usize,
    k: usize,
    node: Vec<f64>,
    edges: Vec<(usize, usize)>,
    tables: Vec<f64>,
    tied: bool,
}

impl Potentials {
    /// Builds potentials directly from tables; `tables` holds one `k × k`
    /// table per edge, or a single one when `tied`.
    pub fn from_tables(
        n: usize,
        k: usize,
        node: Vec<f64>,
        edges: Vec<(usize, usize)>,
        tables: Vec<f64>,
        tied: bool,
    ) -> Self {
        assert_eq!(node.len(), n * k);
        let expected = if edges.is_empty() {
            0
        } else if tied {
            k * k
        } else {
            edges.len() * k * k
        };
        assert_eq!(tables.len(), expected);
        Potentials {
            n,
            k,
            node,
            edges,
            tables,
            tied,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alphabet(&self) -> usize {
        self.k
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    #[inline]
    pub fn node(&self, i: usize, label: u8) -> f64 {
        self.node[i * self.k + label as usize]
    }

    #[inline]
    pub fn edge(&self, e: usize, a: u8, b: u8) -> f64 {
        let table = if self.tied { 0 } else { e };
        self.tables[(table * self.k + a as usize) * self.k + b as usize]
    }

    pub fn modularity_margin(&self, e: usize) -> f64 {
        (self.edge(e, 1, 1) + self.edge(e, 0, 0)) - (self.edge(e, 1, 0) + self.edge(e, 0, 1))
    }

    /// Absolute score of `y`.
    pub fn score(&self, y: &[u8]) -> f64 {
        let mut acc = 0.0;
        for (i, &l) in y.iter().enumerate() {
            acc += self.node(i, l);
        }
        for (e, &(u, v)) in self.edges.iter().enumerate() {
            acc += self.edge(e, y[u], y[v]);
        }
        acc
    }

    /// `f(y) − f(gold)`, summed over changed nodes then changed edges in
    /// index order. Unchanged terms are exactly zero, so any caller that
    /// visits a superset of the changed terms in the same order gets the
    /// bit-identical value.
    pub fn score_delta(&self, gold: &[u8], y: &[u8]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            if y[i] != gold[i] {
                acc += self.node(i, y[i]) - self.node(i, gold[i]);
            }
        }
        for (e, &(u, v)) in self.edges.iter().enumerate() {
            if y[u] != gold[u] || y[v] != gold[v] {
                acc += self.edge(e, y[u], y[v]) - self.edge(e, gold[u], gold[v]);
            }
        }
        acc
    }

    /// `score_delta` restricted to a sorted set of positions and the sorted
    /// list of edges incident to it. Equals `score_delta` whenever `y` and
    /// `gold` agree outside `set`.
    pub(crate) fn score_delta_on(
        &self,
        gold: &[u8],
        y: &[u8],
        set: &[usize],
        incident: &[usize],
    ) -> f64 {
        let mut acc = 0.0;
        for &i in set {
            if y[i] != gold[i] {
                acc += self.node(i, y[i]) - self.node(i, gold[i]);
            }
        }
        for &e in incident {
            let (u, v) = self.edges[e];
            if y[u] != gold[u] || y[v] != gold[v] {
                acc += self.edge(e, y[u], y[v]) - self.edge(e, gold[u], gold[v]);
            }
        }
        acc
    }

    /// Sorted indices of edges with at least one endpoint in `set`.
    pub(crate) fn incident_edges(&self, set: &[usize]) -> Vec<usize> {
        if self.edges.is_empty() {
            return Vec::new();
        }
        let mut member = vec![false; self.n];
        for &i in set {
            member[i] = true;
        }
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, &(u, v))| member[u] || member[v])
            .map(|(e, _)| e)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones(n: usize) -> Input {
        Input::per_variable(vec![vec![1.0]; n]).unwrap()
    }

    #[test]
    fn singleton_zero_assignment_has_zero_features() {
        let m = ScoringModel::singleton(2, 1).unwrap();
        let phi = m.joint_feature(&ones(2), &Assignment::new(vec![0, 0])).unwrap();
        assert_eq!(phi.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn singleton_active_label_copies_input_into_its_block() {
        let m = ScoringModel::singleton(2, 1).unwrap();
        let phi = m.joint_feature(&ones(2), &Assignment::new(vec![1, 0])).unwrap();
        assert_eq!(phi.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn tied_chain_counts_label_pairs() {
        let m = ScoringModel::chain(3, 1, 2, true).unwrap();
        let phi = m
            .joint_feature(&ones(3), &Assignment::new(vec![1, 1, 0]))
            .unwrap();
        let edges = &phi.as_slice()[m.edge_weight_range()];
        // table order (0,0), (0,1), (1,0), (1,1)
        assert_eq!(edges, &[0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn flat_score_hand_value() {
        let m = ScoringModel::singleton(2, 1).unwrap();
        let w = WeightVector::new(vec![2.0, -1.0]).unwrap();
        let s = m.flat_score(&w, &ones(2), &Assignment::new(vec![1, 1])).unwrap();
        assert_eq!(s, 1.0);
        let zero = WeightVector::zeros(2);
        assert_eq!(m.flat_score(&zero, &ones(2), &Assignment::new(vec![1, 1])).unwrap(), 0.0);
    }

    #[test]
    fn dimension_errors_name_the_axis() {
        let m = ScoringModel::singleton(3, 2).unwrap();
        let err = m
            .joint_feature(&ones(3), &Assignment::new(vec![0, 0, 0]))
            .unwrap_err();
        assert!(err.to_string().contains("input columns"), "{err}");
        let x = Input::per_variable(vec![vec![0.0, 0.0]; 3]).unwrap();
        let err = m.joint_feature(&x, &Assignment::new(vec![0, 0])).unwrap_err();
        assert!(err.to_string().contains("assignment length"), "{err}");
        let err = m
            .flat_score(&WeightVector::zeros(5), &x, &Assignment::new(vec![0, 0, 0]))
            .unwrap_err();
        assert!(err.to_string().contains("weight dimension"), "{err}");
    }

    fn binary_edge_model(table: [f64; 4]) -> (ScoringModel, WeightVector) {
        let m = ScoringModel::pairwise(2, 1, 2, vec![(0, 1)], false).unwrap();
        let mut w = vec![0.0; m.dim()];
        // table entries (0,0), (0,1), (1,0), (1,1)
        let (a, b, c, d) = (table[0], table[1], table[2], table[3]);
        w[m.edge_entry(0, 0, 0)] = a;
        w[m.edge_entry(0, 0, 1)] = b;
        w[m.edge_entry(0, 1, 0)] = c;
        w[m.edge_entry(0, 1, 1)] = d;
        (m, WeightVector::new(w).unwrap())
    }

    #[test]
    fn modularity_examples() {
        let x = ones(2);
        let (m, w) = binary_edge_model([1.0, 0.5, 0.5, 2.0]);
        assert_eq!(m.edge_modularity(&w, &x, (0, 1)).unwrap(), Modularity::Submodular);
        let (m, w) = binary_edge_model([0.3; 4]);
        assert_eq!(m.edge_modularity(&w, &x, (0, 1)).unwrap(), Modularity::Neither);
        let (m, w) = binary_edge_model([0.0, 1.0, 1.0, 0.0]);
        assert_eq!(m.edge_modularity(&w, &x, (1, 0)).unwrap(), Modularity::Supermodular);
    }

    #[test]
    fn modularity_rejects_non_binary_and_missing_edges() {
        let m = ScoringModel::chain(3, 1, 3, true).unwrap();
        let w = WeightVector::zeros(m.dim());
        assert!(matches!(
            m.edge_modularity(&w, &ones(3), (0, 1)),
            Err(Error::NotBinary(3))
        ));
        let m = ScoringModel::chain(3, 1, 2, true).unwrap();
        let w = WeightVector::zeros(m.dim());
        assert!(matches!(
            m.edge_modularity(&w, &ones(3), (0, 2)),
            Err(Error::EdgeNotFound(0, 2))
        ));
    }

    #[test]
    fn layout_json_uses_one_based_edges() {
        let m = ScoringModel::chain(3, 2, 2, true).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.contains("\"edges\":[[1,2],[2,3]]"), "{json}");
        assert!(json.contains("\"family\":\"pairwise\""), "{json}");
        let back: ScoringModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn shared_input_broadcasts() {
        let x = Input::shared(vec![1.0, 2.0]);
        assert_eq!(x.row(0), x.row(7));
        let m = ScoringModel::singleton(3, 2).unwrap();
        assert!(m.check_input(&x).is_ok());
    }

    #[test]
    fn assignment_parse_and_display() {
        let y = Assignment::parse("1110011").unwrap();
        assert_eq!(y.labels(), &[1, 1, 1, 0, 0, 1, 1]);
        assert_eq!(y.to_string(), "1110011");
    }
}
