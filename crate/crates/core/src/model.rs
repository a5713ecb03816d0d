//! State space, subsets of states, gambles and the shared configuration record.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest state space representable by [`StateSet`].
pub const MAX_STATES: usize = 64;

/// Ordered, finite set of labelled states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpace {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl StateSpace {
    pub fn new<I, L>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = L>,
        L: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::EmptyStateSpace);
        }
        if labels.len() > MAX_STATES {
            return Err(Error::TooManyStates(labels.len()));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::DuplicateState(l.clone()));
            }
        }
        Ok(Self { labels, index })
    }

    /// Space with labels `s0, s1, ...`; handy for generated models.
    pub fn numbered(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| format!("s{i}")))
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownState(label.to_string()))
    }

    pub fn full(&self) -> StateSet {
        StateSet::full(self.len())
    }

    pub fn set_of<L: AsRef<str>>(&self, labels: &[L]) -> Result<StateSet> {
        let mut set = StateSet::empty();
        for l in labels {
            set.insert(self.index_of(l.as_ref())?);
        }
        Ok(set)
    }

    pub fn labels_of(&self, set: StateSet) -> Vec<String> {
        set.iter().map(|i| self.labels[i].clone()).collect()
    }

    /// 0/1 gamble of a subset given by labels.
    pub fn indicator<S: Real, L: AsRef<str>>(&self, labels: &[L]) -> Result<Gamble<S>> {
        Ok(Gamble::indicator(self.len(), self.set_of(labels)?))
    }
}

/// Subset of a state space, stored as a bit mask over state indices.
///
/// Ordering is lexicographic on the ascending index sequence, so sorted
/// lists of sets follow the input order of labels.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct StateSet(u64);

impl StateSet {
    #[inline]
    pub const fn empty() -> Self {
        Self(0)
    }

    #[inline]
    pub fn full(n: usize) -> Self {
        debug_assert!(n <= MAX_STATES);
        if n == MAX_STATES {
            Self(u64::MAX)
        } else {
            Self((1u64 << n) - 1)
        }
    }

    #[inline]
    pub fn singleton(i: usize) -> Self {
        Self(1u64 << i)
    }

    #[inline]
    pub const fn from_bits(bits: u64) -> Self {
        Self(bits)
    }

    #[inline]
    pub const fn bits(self) -> u64 {
        self.0
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(it: I) -> Self {
        it.into_iter().fold(Self::empty(), |s, i| s.with(i))
    }

    #[inline]
    pub fn contains(self, i: usize) -> bool {
        i < MAX_STATES && self.0 >> i & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        self.0 |= 1u64 << i;
    }

    #[inline]
    pub fn with(self, i: usize) -> Self {
        Self(self.0 | 1u64 << i)
    }

    #[inline]
    pub fn union(self, o: Self) -> Self {
        Self(self.0 | o.0)
    }

    #[inline]
    pub fn intersection(self, o: Self) -> Self {
        Self(self.0 & o.0)
    }

    #[inline]
    pub fn difference(self, o: Self) -> Self {
        Self(self.0 & !o.0)
    }

    #[inline]
    pub fn complement(self, n: usize) -> Self {
        Self::full(n).difference(self)
    }

    #[inline]
    pub fn is_subset(self, o: Self) -> bool {
        self.0 & !o.0 == 0
    }

    #[inline]
    pub fn is_disjoint(self, o: Self) -> bool {
        self.0 & o.0 == 0
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Smallest member index.
    #[inline]
    pub fn first(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    /// Member indices in ascending order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }

    /// Every subset of an `n`-state space, the empty set first.
    pub fn all_subsets(n: usize) -> impl Iterator<Item = StateSet> {
        assert!(n < MAX_STATES, "subset enumeration over {n} states");
        (0..1u64 << n).map(StateSet)
    }
}

impl Ord for StateSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.iter().cmp(other.iter())
    }
}

impl PartialOrd for StateSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for StateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Real-valued map on the state space.
#[derive(Debug, Clone, PartialEq)]
pub struct Gamble<S>(Vec<S>);

impl<S: Real> Gamble<S> {
    pub fn new(values: Vec<S>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(values))
    }

    pub fn from_f64(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| S::lit(v)).collect())
    }

    pub fn constant(n: usize, c: S) -> Self {
        Self(vec![c; n])
    }

    pub fn indicator(n: usize, set: StateSet) -> Self {
        Self((0..n).map(|i| if set.contains(i) { S::one() } else { S::zero() }).collect())
    }

    pub fn values(&self) -> &[S] {
        &self.0
    }

    pub fn into_values(self) -> Vec<S> {
        self.0
    }

    pub fn max(&self) -> S {
        self.0.iter().copied().fold(S::neg_infinity(), S::max)
    }

    pub fn min(&self) -> S {
        self.0.iter().copied().fold(S::infinity(), S::min)
    }

    /// Maximum over the states in `set`; `-inf` for the empty set.
    pub fn max_on(&self, set: StateSet) -> S {
        set.iter().map(|i| self.0[i]).fold(S::neg_infinity(), S::max)
    }

    pub fn min_on(&self, set: StateSet) -> S {
        set.iter().map(|i| self.0[i]).fold(S::infinity(), S::min)
    }

    pub fn neg(&self) -> Self {
        Self(self.0.iter().map(|&v| -v).collect())
    }

    pub fn scale(&self, c: S) -> Self {
        Self(self.0.iter().map(|&v| v * c).collect())
    }

    pub fn shift(&self, c: S) -> Self {
        Self(self.0.iter().map(|&v| v + c).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(&a, &b)| a + b).collect())
    }

    /// Pointwise product with the indicator of `set`.
    pub fn restrict(&self, set: StateSet) -> Self {
        Self(
            self.0
                .iter()
                .enumerate()
                .map(|(i, &v)| if set.contains(i) { v } else { S::zero() })
                .collect(),
        )
    }

    /// Level set `{x : f(x) >= a}`.
    pub fn level_set(&self, a: S) -> StateSet {
        StateSet::from_indices(self.0.iter().enumerate().filter(|(_, &v)| v >= a).map(|(i, _)| i))
    }

    /// Sup-norm distance.
    pub fn distance(&self, other: &Self) -> S {
        self.0
            .iter()
            .zip(&other.0)
            .fold(S::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        if self.0.len() == n {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: n, found: self.0.len() })
        }
    }

    /// Bit pattern usable as a hash key.
    pub(crate) fn key(&self) -> Vec<u64> {
        self.0.iter().map(|v| v.as_f64().to_bits()).collect()
    }
}

impl<S> Deref for Gamble<S> {
    type Target = [S];

    fn deref(&self) -> &[S] {
        &self.0
    }
}

/// The set of gambles `h` with `lower <= h <= upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct GambleInterval<S> {
    lower: Gamble<S>,
    upper: Gamble<S>,
}

impl<S: Real> GambleInterval<S> {
    pub fn new(lower: Gamble<S>, upper: Gamble<S>) -> Result<Self> {
        upper.check_len(lower.len())?;
        if let Some(i) = (0..lower.len()).find(|&i| lower[i] > upper[i]) {
            return Err(Error::InvalidInterval(i));
        }
        Ok(Self { lower, upper })
    }

    pub fn degenerate(f: Gamble<S>) -> Self {
        Self { lower: f.clone(), upper: f }
    }

    pub fn lower(&self) -> &Gamble<S> {
        &self.lower
    }

    pub fn upper(&self) -> &Gamble<S> {
        &self.upper
    }

    pub(crate) fn from_parts_unchecked(lower: Gamble<S>, upper: Gamble<S>) -> Self {
        Self { lower, upper }
    }
}

/// Numerical thresholds and budgets used throughout the analysis.
///
/// "Strictly positive" means `> eps_pos`; "equal to one" means `>= 1 - eps_one`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub eps_pos: f64,
    pub eps_one: f64,
    pub eps_conv: f64,
    pub max_iter: usize,
    pub max_strong_states: usize,
    pub max_power_r: usize,
    pub max_vertices: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            eps_pos: 1e-9,
            eps_one: 1e-9,
            eps_conv: 1e-10,
            max_iter: 100_000,
            max_strong_states: 12,
            max_power_r: 16,
            max_vertices: 4096,
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eps_pos", self.eps_pos),
            ("eps_one", self.eps_one),
            ("eps_conv", self.eps_conv),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidConfig(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        for (name, v) in [
            ("max_iter", self.max_iter),
            ("max_strong_states", self.max_strong_states),
            ("max_power_r", self.max_power_r),
            ("max_vertices", self.max_vertices),
        ] {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if self.max_strong_states >= MAX_STATES {
            return Err(Error::InvalidConfig(format!(
                "max_strong_states must be below {MAX_STATES}"
            )));
        }
        Ok(())
    }

    pub(crate) fn check_lattice(&self, n: usize) -> Result<()> {
        if n > self.max_strong_states {
            Err(Error::StateBudgetExceeded { states: n, cap: self.max_strong_states })
        } else {
            Ok(())
        }
    }

    #[inline]
    pub(crate) fn positive<S: Real>(&self, v: S) -> bool {
        v > S::lit(self.eps_pos)
    }

    #[inline]
    pub(crate) fn is_one<S: Real>(&self, v: S) -> bool {
        v >= S::one() - S::lit(self.eps_one)
    }
}
