//! Decompositions of the output variables and the neighborhoods they induce.
//!
//! A decomposition is a collection of distinct index sets none of which
//! contains another. The neighborhood of a gold output under a
//! decomposition holds every feasible output whose difference from gold
//! fits inside a single set.

use std::collections::BTreeSet;
use std::fmt;
use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Assignment, Modularity, Potentials};
use crate::space::{OutputSpace, PatchChecker};

/// `decl_k` materializes its sets while `k * C(n, k)` stays under this many
/// indices; beyond it the sets are generated on demand.
pub const MATERIALIZE_BUDGET: u64 = 1 << 22;

/// First problem found when checking the decomposition invariants.
/// Set positions refer to the order the sets were given in.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    OutOfRange { set: usize, index: usize, n: usize },
    Duplicate { first: usize, second: usize },
    Inclusion { inner: usize, outer: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OutOfRange { set, index, n } => {
                write!(f, "set #{set} holds index {index} outside 1..={n}", index = index + 1)
            }
            Violation::Duplicate { first, second } => {
                write!(f, "sets #{first} and #{second} are identical")
            }
            Violation::Inclusion { inner, outer } => {
                write!(f, "set #{inner} is contained in set #{outer}")
            }
        }
    }
}

fn is_subset(a: &[usize], b: &[usize]) -> bool {
    // both sorted
    let mut it = b.iter();
    a.iter().all(|x| it.any(|y| y == x))
}

/// Checks distinctness, non-inclusion and index range of sorted sets.
pub fn validate_sets(sets: &[Vec<usize>], n: usize) -> Result<(), Violation> {
    for (s, set) in sets.iter().enumerate() {
        if let Some(&index) = set.iter().find(|&&i| i >= n) {
            return Err(Violation::OutOfRange { set: s, index, n });
        }
    }
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            let (a, b) = (&sets[i], &sets[j]);
            if a == b {
                return Err(Violation::Duplicate {
                    first: i,
                    second: j,
                });
            }
            if a.len() < b.len() && is_subset(a, b) {
                return Err(Violation::Inclusion { inner: i, outer: j });
            }
            if b.len() < a.len() && is_subset(b, a) {
                return Err(Violation::Inclusion { inner: j, outer: i });
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug)]
enum Repr {
    Explicit(Arc<Vec<Vec<usize>>>),
    AllSubsets { n: usize, k: usize, count: usize },
}

/// A validated decomposition over `n` variables, 0-indexed internally.
#[derive(Clone, Debug)]
pub struct Decomposition {
    n: usize,
    repr: Repr,
    supports: Option<Arc<Vec<Vec<usize>>>>,
}

impl PartialEq for Decomposition {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.to_sets() == other.to_sets()
    }
}

/// JSON layout: `{"sets": [[1,2,3],[4,5]]}`, 1-indexed.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecompositionLayout {
    pub sets: Vec<Vec<usize>>,
}

fn canonical(mut sets: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    for s in &mut sets {
        s.sort_unstable();
        s.dedup();
    }
    sets
}

fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Largest number of subsets enumerated when collecting supports.
const SUPPORT_BUDGET: usize = 1 << 16;

impl Decomposition {
    fn from_repr(n: usize, repr: Repr) -> Self {
        let supports = collect_supports(n, &repr).map(Arc::new);
        Decomposition { n, repr, supports }
    }

    /// Distinct non-empty subsets of the sets, each sorted, in order of
    /// first appearance. These are exactly the index sets on which a
    /// neighbour may differ from gold. `None` when there are too many.
    pub fn supports(&self) -> Option<&[Vec<usize>]> {
        self.supports.as_deref().map(Vec::as_slice)
    }


    /// Checks that `sets` (0-indexed) are in range, distinct and that none
    /// contains another.
    pub fn new(sets: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        let sets = canonical(sets);
        validate_sets(&sets, n).map_err(Error::InvalidDecomposition)?;
        Ok(Decomposition::from_repr(n, Repr::Explicit(Arc::new(sets))))
    }

    /// Drops duplicates and sets contained in another set, keeping the
    /// first occurrence order of the survivors.
    pub fn normalized(sets: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        let sets = canonical(sets);
        let mut kept: Vec<Vec<usize>> = Vec::new();
        for (i, s) in sets.iter().enumerate() {
            let dominated = sets.iter().enumerate().any(|(j, t)| {
                (t.len() > s.len() && is_subset(s, t)) || (t == s && j < i)
            });
            if !dominated {
                kept.push(s.clone());
            }
        }
        Decomposition::new(kept, n)
    }

    /// The single set `{0, ..., n-1}`; its neighborhood is the whole space.
    pub fn full(n: usize) -> Self {
        Decomposition::from_repr(n, Repr::Explicit(Arc::new(vec![(0..n).collect()])))
    }

    /// All size-`k` subsets in lexicographic order.
    pub fn decl_k(n: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::KOutOfRange { k, n });
        }
        let count = binomial(n, k);
        if count.saturating_mul(k as u64) <= MATERIALIZE_BUDGET {
            let mut sets = Vec::with_capacity(count as usize);
            let mut comb: Vec<usize> = (0..k).collect();
            loop {
                sets.push(comb.clone());
                if !next_combination(&mut comb, n) {
                    break;
                }
            }
            Ok(Decomposition::from_repr(n, Repr::Explicit(Arc::new(sets))))
        } else {
            let count = usize::try_from(count).map_err(|_| Error::KOutOfRange { k, n })?;
            Ok(Decomposition::from_repr(n, Repr::AllSubsets { n, k, count }))
        }
    }

    /// Maximal connected components of the edges whose gold labels agree
    /// with their potential's modularity. `modularity[e]` classifies
    /// `edges[e]`. Isolated nodes become singleton components.
    pub fn s_pair(
        gold: &Assignment,
        edges: &[(usize, usize)],
        modularity: &[Modularity],
    ) -> Result<Self> {
        let n = gold.len();
        if modularity.len() != edges.len() {
            return Err(Error::DimensionMismatch {
                axis: "modularity per edge",
                expected: edges.len(),
                got: modularity.len(),
            });
        }
        if let Some((_, &l)) = gold.iter().enumerate().find(|(_, &l)| l > 1) {
            return Err(Error::NotBinary(l as usize + 1));
        }
        let mut uf = UnionFind::new(n);
        for (&(u, v), &m) in edges.iter().zip(modularity) {
            if u >= n || v >= n {
                return Err(Error::IndexOutOfRange { index: u.max(v), n });
            }
            let keep = match m {
                Modularity::Submodular => gold[u] == gold[v],
                Modularity::Supermodular => gold[u] != gold[v],
                Modularity::Neither => return Err(Error::UnclassifiedEdge(u, v)),
            };
            if keep {
                uf.union(u, v);
            }
        }
        Decomposition::new(uf.components(), n)
    }

    /// [`Decomposition::s_pair`] with the modularity read off the edge tables.
    pub fn s_pair_from_potentials(gold: &Assignment, potentials: &Potentials) -> Result<Self> {
        if potentials.alphabet() != 2 {
            return Err(Error::NotBinary(potentials.alphabet()));
        }
        let modularity: Vec<Modularity> = (0..potentials.edges().len())
            .map(|e| crate::model::classify_margin(potentials.modularity_margin(e)))
            .collect();
        Self::s_pair(gold, potentials.edges(), &modularity)
    }

    /// Maximal runs of identical labels along the chain order.
    pub fn s_pair_blocks(gold: &Assignment) -> Self {
        let mut sets: Vec<Vec<usize>> = Vec::new();
        for (i, &l) in gold.iter().enumerate() {
            match sets.last_mut() {
                Some(run) if gold[run[0]] == l => run.push(i),
                _ => sets.push(vec![i]),
            }
        }
        Decomposition::from_repr(gold.len(), Repr::Explicit(Arc::new(sets)))
    }

    pub fn from_layout(layout: &DecompositionLayout, n: usize) -> Result<Self> {
        let sets = layout
            .sets
            .iter()
            .map(|s| {
                s.iter()
                    .map(|&i| {
                        if i == 0 {
                            Err(Error::IndexOutOfRange { index: 0, n })
                        } else {
                            Ok(i - 1)
                        }
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Decomposition::new(sets, n)
    }

    pub fn to_layout(&self) -> DecompositionLayout {
        DecompositionLayout {
            sets: self
                .to_sets()
                .into_iter()
                .map(|s| s.into_iter().map(|i| i + 1).collect())
                .collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        match &self.repr {
            Repr::Explicit(sets) => sets.len(),
            Repr::AllSubsets { count, .. } => *count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn max_set_len(&self) -> usize {
        match &self.repr {
            Repr::Explicit(sets) => sets.iter().map(Vec::len).max().unwrap_or(0),
            Repr::AllSubsets { k, .. } => *k,
        }
    }

    /// Whether the sets are generated on demand rather than stored.
    pub fn is_streamed(&self) -> bool {
        matches!(self.repr, Repr::AllSubsets { .. })
    }

    /// Re-checks the invariants against `n`.
    pub fn validate(&self, n: usize) -> Result<(), Violation> {
        match &self.repr {
            Repr::Explicit(sets) => validate_sets(sets, n),
            Repr::AllSubsets { n: m, .. } if *m <= n => Ok(()),
            Repr::AllSubsets { n: m, .. } => Err(Violation::OutOfRange {
                set: 0,
                index: m - 1,
                n,
            }),
        }
    }

    /// The `idx`-th set.
    pub fn get(&self, idx: usize) -> Vec<usize> {
        match &self.repr {
            Repr::Explicit(sets) => sets[idx].clone(),
            Repr::AllSubsets { n, k, .. } => unrank_combination(*n, *k, idx as u64),
        }
    }

    /// Visits every set in order.
    pub fn for_each_set(&self, mut visit: impl FnMut(&[usize])) {
        match &self.repr {
            Repr::Explicit(sets) => sets.iter().for_each(|s| visit(s)),
            Repr::AllSubsets { n, k, .. } => {
                let mut comb: Vec<usize> = (0..*k).collect();
                loop {
                    visit(&comb);
                    if !next_combination(&mut comb, *n) {
                        break;
                    }
                }
            }
        }
    }

    pub fn to_sets(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::with_capacity(self.len());
        self.for_each_set(|s| out.push(s.to_vec()));
        out
    }
}

fn collect_supports(n: usize, repr: &Repr) -> Option<Vec<Vec<usize>>> {
    let sets = match repr {
        Repr::Explicit(sets) if n <= 64 => sets,
        _ => return None,
    };
    let mut budget = SUPPORT_BUDGET;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for set in sets.iter() {
        let m = set.len();
        if m >= 16 || (1usize << m) > budget {
            return None;
        }
        budget -= 1 << m;
        for bits in 1u32..(1u32 << m) {
            let piece: Vec<usize> = (0..m).filter(|&b| bits >> b & 1 == 1).map(|b| set[b]).collect();
            let mask = piece.iter().fold(0u64, |acc, &i| acc | 1 << i);
            if seen.insert(mask) {
                out.push(piece);
            }
        }
    }
    Some(out)
}

/// Advances a sorted combination of `0..n` lexicographically.
fn next_combination(comb: &mut [usize], n: usize) -> bool {
    let k = comb.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if comb[i] < n - k + i {
            comb[i] += 1;
            for j in i + 1..k {
                comb[j] = comb[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn unrank_combination(n: usize, k: usize, mut rank: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut x = 0;
    for pos in 0..k {
        loop {
            let with_x = binomial(n - x - 1, k - pos - 1);
            if rank < with_x {
                out.push(x);
                x += 1;
                break;
            }
            rank -= with_x;
            x += 1;
        }
    }
    out
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller root wins so components are labeled by their minimum
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }

    /// Components ordered by smallest member, members ascending.
    fn components(mut self) -> Vec<Vec<usize>> {
        let n = self.parent.len();
        let mut by_root: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..n {
            let r = self.find(i);
            by_root[r].push(i);
        }
        by_root.into_iter().filter(|c| !c.is_empty()).collect()
    }
}

/// Writes every local assignment of `set` into `buf` in lexicographic order
/// of the local labels, calling `visit` after each write. Positions outside
/// `set` are left untouched; on return `set` holds `restore`'s labels.
pub(crate) fn for_each_local(
    set: &[usize],
    alphabet: usize,
    buf: &mut [u8],
    restore: &[u8],
    mut visit: impl FnMut(&[u8]),
) {
    let top = (alphabet - 1) as u8;
    for &i in set {
        buf[i] = 0;
    }
    loop {
        visit(buf);
        let mut pos = set.len();
        loop {
            if pos == 0 {
                for &i in set {
                    buf[i] = restore[i];
                }
                return;
            }
            pos -= 1;
            let i = set[pos];
            if buf[i] < top {
                buf[i] += 1;
                break;
            }
            buf[i] = 0;
        }
    }
}

/// Every feasible output reachable from `gold` by re-labelling one set of
/// `decomposition`, sorted and deduplicated.
pub fn neighborhood(
    space: &OutputSpace,
    gold: &Assignment,
    decomposition: &Decomposition,
) -> Result<Vec<Assignment>> {
    if !space.is_feasible(gold)? {
        return Err(Error::Infeasible);
    }
    decomposition
        .validate(space.n())
        .map_err(Error::InvalidDecomposition)?;
    let cap = space.enumeration_cap();
    let too_large = Error::SpaceTooLarge {
        alphabet: space.alphabet(),
        n: decomposition.max_set_len(),
        cap,
    };
    match (space.alphabet() as u64).checked_pow(decomposition.max_set_len() as u32) {
        Some(size) if size <= cap => {}
        _ => return Err(too_large),
    }
    let mut checker = PatchChecker::new(space, gold);
    let mut buf = gold.clone().into_inner();
    let mut out = BTreeSet::new();
    decomposition.for_each_set(|set| {
        for_each_local(set, space.alphabet(), &mut buf, gold, |y| {
            if checker.is_feasible(gold, y, set) {
                out.insert(Assignment::new(y.to_vec()));
            }
        });
    });
    Ok(out.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{ConstraintSet, LinearConstraint, Relation};

    fn sets(d: &Decomposition) -> Vec<Vec<usize>> {
        d.to_layout().sets
    }

    fn a(s: &str) -> Assignment {
        Assignment::parse(s).unwrap()
    }

    #[test]
    fn validate_examples() {
        assert!(validate_sets(&[vec![0, 1], vec![1, 2]], 3).is_ok());
        assert_eq!(
            validate_sets(&[vec![0], vec![0, 1]], 3),
            Err(Violation::Inclusion { inner: 0, outer: 1 })
        );
        assert_eq!(
            validate_sets(&[vec![0, 1], vec![0, 1]], 3),
            Err(Violation::Duplicate {
                first: 0,
                second: 1
            })
        );
        assert!(matches!(
            validate_sets(&[vec![0, 3]], 3),
            Err(Violation::OutOfRange { index: 3, .. })
        ));
    }

    #[test]
    fn decl_k_examples() {
        let d = Decomposition::decl_k(4, 2).unwrap();
        assert_eq!(
            sets(&d),
            vec![
                vec![1, 2],
                vec![1, 3],
                vec![1, 4],
                vec![2, 3],
                vec![2, 4],
                vec![3, 4]
            ]
        );
        assert_eq!(sets(&Decomposition::decl_k(5, 5).unwrap()), vec![vec![1, 2, 3, 4, 5]]);
        assert_eq!(
            sets(&Decomposition::decl_k(3, 1).unwrap()),
            vec![vec![1], vec![2], vec![3]]
        );
        assert!(matches!(Decomposition::decl_k(3, 0), Err(Error::KOutOfRange { .. })));
        assert!(matches!(Decomposition::decl_k(3, 4), Err(Error::KOutOfRange { .. })));
    }

    #[test]
    fn streamed_decl_k_matches_unranking() {
        let d = Decomposition::decl_k(40, 6).unwrap();
        assert!(d.is_streamed());
        assert_eq!(d.len() as u64, binomial(40, 6));
        let mut seen = 0;
        d.for_each_set(|s| {
            if seen % 100_003 == 0 {
                assert_eq!(d.get(seen), s);
            }
            seen += 1;
        });
        assert_eq!(seen, d.len());
        assert_eq!(d.get(d.len() - 1), vec![34, 35, 36, 37, 38, 39]);
    }

    #[test]
    fn s_pair_worked_chain_example() {
        let gold = a("1110011");
        let edges: Vec<_> = (1..7).map(|i| (i - 1, i)).collect();
        let d = Decomposition::s_pair(&gold, &edges, &[Modularity::Submodular; 6]).unwrap();
        assert_eq!(sets(&d), vec![vec![1, 2, 3], vec![4, 5], vec![6, 7]]);
    }

    #[test]
    fn s_pair_supermodular_and_split_chain() {
        let edges = vec![(0, 1), (1, 2)];
        let d = Decomposition::s_pair(&a("101"), &edges, &[Modularity::Supermodular; 2]).unwrap();
        assert_eq!(sets(&d), vec![vec![1, 2, 3]]);
        let edges = vec![(0, 1), (1, 2), (2, 3)];
        let d = Decomposition::s_pair(&a("1100"), &edges, &[Modularity::Submodular; 3]).unwrap();
        assert_eq!(sets(&d), vec![vec![1, 2], vec![3, 4]]);
    }

    #[test]
    fn s_pair_rejects_unclassified_edges() {
        let err = Decomposition::s_pair(&a("10"), &[(0, 1)], &[Modularity::Neither]).unwrap_err();
        assert!(matches!(err, Error::UnclassifiedEdge(0, 1)));
    }

    #[test]
    fn blocks_examples() {
        let gold = Assignment::new(vec![0, 0, 0, 1, 1]);
        assert_eq!(sets(&Decomposition::s_pair_blocks(&gold)), vec![vec![1, 2, 3], vec![4, 5]]);
        let same = Assignment::new(vec![2; 4]);
        assert_eq!(sets(&Decomposition::s_pair_blocks(&same)), vec![vec![1, 2, 3, 4]]);
        let distinct = Assignment::new(vec![0, 1, 2]);
        assert_eq!(
            sets(&Decomposition::s_pair_blocks(&distinct)),
            vec![vec![1], vec![2], vec![3]]
        );
    }

    #[test]
    fn neighborhood_of_full_set_is_whole_space() {
        let space = OutputSpace::new(
            4,
            2,
            ConstraintSet::default().with_linear(LinearConstraint::new(vec![1, 1, 0, 1], Relation::Le, 2)),
        )
        .unwrap();
        let nb = neighborhood(&space, &a("0000"), &Decomposition::full(4)).unwrap();
        assert_eq!(nb, space.enumerate_feasible().unwrap());
    }

    #[test]
    fn multiclass_pairs_cover_the_space() {
        let space = OutputSpace::multiclass(3).unwrap();
        let nb = neighborhood(&space, &a("100"), &Decomposition::decl_k(3, 2).unwrap()).unwrap();
        assert_eq!(nb, vec![a("001"), a("010"), a("100")]);
    }

    #[test]
    fn single_flip_neighborhood() {
        let space = OutputSpace::unconstrained(3, 2).unwrap();
        let nb = neighborhood(&space, &a("000"), &Decomposition::decl_k(3, 1).unwrap()).unwrap();
        assert_eq!(nb, vec![a("000"), a("001"), a("010"), a("100")]);
    }

    #[test]
    fn normalization_drops_dominated_sets() {
        let d = Decomposition::normalized(vec![vec![0], vec![0, 1], vec![1, 0], vec![2]], 3).unwrap();
        assert_eq!(d.to_sets(), vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn layout_round_trip_is_one_based() {
        let layout: DecompositionLayout = serde_json::from_str(r#"{"sets":[[1,2,3],[4,5]]}"#).unwrap();
        let d = Decomposition::from_layout(&layout, 5).unwrap();
        assert_eq!(d.to_sets(), vec![vec![0, 1, 2], vec![3, 4]]);
        assert!(Decomposition::from_layout(&layout, 4).is_err());
    }
}
