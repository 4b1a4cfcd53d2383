//! Index combinatorics for the antisymmetric Hardy-space models.
//!
//! The orthogonal basis of the antisymmetric subspace is indexed by strictly
//! decreasing integer tuples (`StrictPartition`). Symbols are indexed by
//! weakly decreasing tuples (`Exponent`). A `BasisWindow` is the finite
//! truncation used everywhere else: all strict partitions whose entries fit
//! inside a bound, on the analytic side, the coanalytic side, or both.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strictly decreasing tuple of integers, possibly negative.
///
/// Indexes one antisymmetrized basis element. Entries are stored as given,
/// largest first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct StrictPartition {
    entries: Vec<i64>,
}

impl StrictPartition {
    /// Validates strict decrease. Empty tuples are rejected.
    pub fn new(entries: Vec<i64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidPartition(entries));
        }
        if entries.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::InvalidPartition(entries));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[i64] {
        &self.entries
    }

    pub fn n(&self) -> usize {
        self.entries.len()
    }

    /// Largest entry.
    pub fn first(&self) -> i64 {
        self.entries[0]
    }

    /// Smallest entry.
    pub fn last(&self) -> i64 {
        *self.entries.last().unwrap()
    }

    /// True when every entry is nonnegative (the partition indexes an
    /// analytic basis element).
    pub fn is_analytic(&self) -> bool {
        self.last() >= 0
    }

    /// Adds `k` to every entry. Strictness is preserved.
    pub fn shift(&self, k: i64) -> Self {
        Self {
            entries: self.entries.iter().map(|e| e + k).collect(),
        }
    }

    /// Entrywise sum with an arbitrary integer tuple, antisymmetrized.
    pub fn add_then_antisymmetrize(&self, t: &[i64]) -> Antisymmetrized {
        debug_assert_eq!(t.len(), self.entries.len());
        let summed: Vec<i64> = self.entries.iter().zip(t).map(|(a, b)| a + b).collect();
        antisymmetrize_exponent(&summed)
    }
}

impl TryFrom<Vec<i64>> for StrictPartition {
    type Error = Error;
    fn try_from(v: Vec<i64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<StrictPartition> for Vec<i64> {
    fn from(p: StrictPartition) -> Self {
        p.entries
    }
}

impl fmt::Display for StrictPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.entries.iter().join(","))
    }
}

/// Basis order: graded by the largest entry, then lexicographically
/// descending within a grade. Total on any fixed length.
impl Ord for StrictPartition {
    fn cmp(&self, other: &Self) -> Ordering {
        self.entries[0]
            .cmp(&other.entries[0])
            .then_with(|| other.entries.cmp(&self.entries))
    }
}

impl PartialOrd for StrictPartition {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Result of antisymmetrizing an integer tuple: zero when the tuple has a
/// repeated entry, otherwise the sorted partition together with the sign of
/// the sorting permutation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Antisymmetrized {
    Zero,
    Term { partition: StrictPartition, sign: i8 },
}

/// Sorts `t` into strictly decreasing order, tracking the parity of the
/// permutation used. A repeated entry collapses to `Zero`.
pub fn antisymmetrize_exponent(t: &[i64]) -> Antisymmetrized {
    let mut v = t.to_vec();
    let mut sign = 1i8;
    // Insertion sort; tuple lengths are tiny and parity falls out of the
    // number of adjacent swaps.
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] < v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        return Antisymmetrized::Zero;
    }
    Antisymmetrized::Term {
        partition: StrictPartition { entries: v },
        sign,
    }
}

/// Weakly decreasing tuple of integers; canonical key for one symmetrized
/// monomial orbit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct Exponent {
    entries: Vec<i64>,
}

impl Exponent {
    pub fn new(entries: Vec<i64>) -> Result<Self> {
        if entries.is_empty() || entries.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidExponent(entries));
        }
        Ok(Self { entries })
    }

    /// Sorts an arbitrary tuple into its canonical (weakly decreasing) form.
    pub fn canonical(mut entries: Vec<i64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidExponent(entries));
        }
        entries.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[i64] {
        &self.entries
    }

    pub fn n(&self) -> usize {
        self.entries.len()
    }

    /// Largest minus smallest entry.
    pub fn spread(&self) -> i64 {
        self.entries[0] - self.entries.last().unwrap()
    }

    /// Largest absolute entry.
    pub fn height(&self) -> i64 {
        self.entries.iter().map(|e| e.abs()).max().unwrap()
    }

    /// True when every entry is nonnegative.
    pub fn is_analytic(&self) -> bool {
        *self.entries.last().unwrap() >= 0
    }

    /// Order of the stabilizer of this tuple inside the symmetric group:
    /// the product of factorials of multiplicities of repeated values.
    pub fn stabilizer_order(&self) -> u64 {
        let mut ord = 1u64;
        let mut run = 1u64;
        for w in self.entries.windows(2) {
            if w[0] == w[1] {
                run += 1;
                ord *= run;
            } else {
                run = 1;
            }
        }
        ord
    }
}

impl TryFrom<Vec<i64>> for Exponent {
    type Error = Error;
    fn try_from(v: Vec<i64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Exponent> for Vec<i64> {
    fn from(e: Exponent) -> Self {
        e.entries
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.entries.iter().join(","))
    }
}

/// All images of `m` under the full symmetric group, with multiplicity:
/// exactly n! tuples, one per group element.
pub fn orbit_of_exponent(m: &Exponent) -> Vec<Vec<i64>> {
    let n = m.n();
    (0..n)
        .permutations(n)
        .map(|perm| perm.into_iter().map(|i| m.entries[i]).collect())
        .collect()
}

pub fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// Which part of the doubly infinite index set a window covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Smallest entry nonnegative.
    Analytic,
    /// Smallest entry at most -1.
    Coanalytic,
    /// Both sides.
    Laurent,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Analytic => write!(f, "analytic"),
            Side::Coanalytic => write!(f, "coanalytic"),
            Side::Laurent => write!(f, "laurent"),
        }
    }
}

impl std::str::FromStr for Side {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(Side::Analytic),
            "coanalytic" => Ok(Side::Coanalytic),
            "laurent" => Ok(Side::Laurent),
            other => Err(Error::InvalidDimension(format!("unknown side `{other}`"))),
        }
    }
}

/// Finite truncation of the basis index set: every strict partition of
/// length `n` with entries in `[-D, D]` (restricted by `side`), listed in
/// the basis order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisWindow {
    n: usize,
    bound: i64,
    side: Side,
    partitions: Vec<StrictPartition>,
    index: HashMap<Vec<i64>, usize>,
}

impl BasisWindow {
    /// Enumerates the window. `n >= 1`, `bound >= 0`.
    ///
    /// Analytic: entries drawn from `0..=bound`. Laurent: from
    /// `-bound..=bound`. Coanalytic: laurent tuples whose smallest entry is
    /// negative.
    pub fn enumerate(n: usize, bound: i64, side: Side) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension("n must be at least 1".into()));
        }
        if bound < 0 {
            return Err(Error::InvalidDimension("bound must be nonnegative".into()));
        }
        let lo = match side {
            Side::Analytic => 0,
            Side::Coanalytic | Side::Laurent => -bound,
        };
        let mut partitions: Vec<StrictPartition> = (lo..=bound)
            .combinations(n)
            .map(|mut c| {
                c.reverse();
                StrictPartition { entries: c }
            })
            .filter(|p| match side {
                Side::Analytic => true,
                Side::Coanalytic => p.last() <= -1,
                Side::Laurent => true,
            })
            .collect();
        partitions.sort();
        let index = partitions
            .iter()
            .enumerate()
            .map(|(i, p)| (p.entries.clone(), i))
            .collect();
        Ok(Self {
            n,
            bound,
            side,
            partitions,
            index,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bound(&self) -> i64 {
        self.bound
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn len(&self) -> usize {
        self.partitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partitions.is_empty()
    }

    pub fn partitions(&self) -> &[StrictPartition] {
        &self.partitions
    }

    pub fn partition(&self, i: usize) -> &StrictPartition {
        &self.partitions[i]
    }

    /// Position of a partition in the basis order, if present.
    pub fn position(&self, p: &StrictPartition) -> Option<usize> {
        self.index.get(&p.entries).copied()
    }

    pub fn position_of_entries(&self, entries: &[i64]) -> Option<usize> {
        self.index.get(entries).copied()
    }

    /// Indices of the partitions that survive shrinking the bound by
    /// `depth`. Entries and products of assembled operators are exact there.
    pub fn interior_indices(&self, depth: usize) -> Vec<usize> {
        let b = self.bound - depth as i64;
        self.partitions
            .iter()
            .enumerate()
            .filter(|(_, p)| p.first() <= b && p.last() >= -b)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn contains_entries(&self, entries: &[i64]) -> bool {
        self.index.contains_key(entries)
    }
}

/// Shared handle used by operators; windows are compared by value.
pub type WindowRef = Arc<BasisWindow>;

#[derive(Serialize)]
struct WindowJson<'a> {
    n: usize,
    #[serde(rename = "D")]
    d: i64,
    side: Side,
    partitions: Vec<&'a [i64]>,
}

impl Serialize for BasisWindow {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        WindowJson {
            n: self.n,
            d: self.bound,
            side: self.side,
            partitions: self.partitions.iter().map(|p| p.entries()).collect(),
        }
        .serialize(s)
    }
}
