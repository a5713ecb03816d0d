//! Credal sets over a finite state space.
//!
//! A [`CredalRow`] is one conditional row of a transition operator, given
//! either by the extreme points of the set or by coherent probability
//! intervals. [`IefHandle`] is an unconditional imprecise expectation
//! functional. Both are summarized through their upper and lower expectations
//! `max_p p·f` and `min_p p·f`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::invariant::LimitFunctional;
use crate::model::{Config, Gamble, StateSet};
use crate::scalar::{dot, sum, Real};

/// Per-state lower and upper probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalRow<S> {
    lower: Vec<S>,
    upper: Vec<S>,
}

impl<S: Real> IntervalRow<S> {
    /// Checks `0 <= lower <= upper <= 1`; does not tighten.
    pub fn new(lower: Vec<S>, upper: Vec<S>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), found: upper.len() });
        }
        if lower.is_empty() {
            return Err(Error::InvalidRow("empty interval row".into()));
        }
        let tol = S::sum_tol();
        for (i, (&l, &u)) in lower.iter().zip(&upper).enumerate() {
            if !l.is_finite() || !u.is_finite() {
                return Err(Error::NonFinite);
            }
            if l < -tol || u > S::one() + tol || l > u + tol {
                return Err(Error::InvalidRow(format!(
                    "bounds at position {i} violate 0 <= lower <= upper <= 1 ({l}, {u})"
                )));
            }
        }
        let lower = lower.into_iter().map(|l| l.max(S::zero())).collect::<Vec<_>>();
        let upper = upper
            .into_iter()
            .zip(&lower)
            .map(|(u, &l)| u.min(S::one()).max(l))
            .collect();
        Ok(Self { lower, upper })
    }

    pub fn from_f64(lower: &[f64], upper: &[f64]) -> Result<Self> {
        Self::new(
            lower.iter().map(|&v| S::lit(v)).collect(),
            upper.iter().map(|&v| S::lit(v)).collect(),
        )
    }

    /// Vacuous row: every distribution allowed.
    pub fn vacuous(n: usize) -> Self {
        Self { lower: vec![S::zero(); n], upper: vec![S::one(); n] }
    }

    pub fn lower(&self) -> &[S] {
        &self.lower
    }

    pub fn upper(&self) -> &[S] {
        &self.upper
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    /// Greedy maximization: every state starts at its lower bound and the
    /// remaining mass goes to the largest values of `f` first. Ties keep
    /// input order.
    fn upper_expectation(&self, f: &[S]) -> S {
        let mut order: Vec<usize> = (0..f.len()).collect();
        order.sort_by(|&i, &j| f[j].partial_cmp(&f[i]).expect("finite gamble"));
        let mut rest = S::one() - sum(&self.lower);
        let mut value = dot(&self.lower, f);
        for i in order {
            if rest <= S::zero() {
                break;
            }
            let add = (self.upper[i] - self.lower[i]).min(rest);
            value += add * f[i];
            rest -= add;
        }
        value
    }

    /// Extreme points of `{p : lower <= p <= upper, sum p = 1}`.
    ///
    /// At an extreme point all coordinates but at most one sit on a bound,
    /// so a depth-first search over bound assignments with a single free
    /// coordinate finds them all.
    fn extreme_points(&self, cap: usize) -> Result<Vec<Vec<S>>> {
        let n = self.len();
        let tol = S::sum_tol();
        let mut suffix_lo = vec![S::zero(); n + 1];
        let mut suffix_hi = vec![S::zero(); n + 1];
        for i in (0..n).rev() {
            suffix_lo[i] = suffix_lo[i + 1] + self.lower[i];
            suffix_hi[i] = suffix_hi[i + 1] + self.upper[i];
        }
        let mut search = VertexSearch {
            row: self,
            suffix_lo,
            suffix_hi,
            tol,
            cur: vec![S::zero(); n],
            out: Vec::new(),
            raw_cap: cap.saturating_mul(n + 1),
        };
        search.dfs(0, None, S::zero())?;
        let points = dedup_points(search.out, S::sum_tol());
        if points.len() > cap {
            return Err(Error::VertexBudgetExceeded { cap });
        }
        Ok(points)
    }
}

struct VertexSearch<'a, S> {
    row: &'a IntervalRow<S>,
    suffix_lo: Vec<S>,
    suffix_hi: Vec<S>,
    tol: S,
    cur: Vec<S>,
    out: Vec<Vec<S>>,
    raw_cap: usize,
}

impl<S: Real> VertexSearch<'_, S> {
    /// `fixed` is the mass placed on bound coordinates so far; `free` is the
    /// coordinate that absorbs the remainder, once chosen.
    fn dfs(&mut self, i: usize, free: Option<usize>, fixed: S) -> Result<()> {
        let n = self.row.len();
        let (flo, fhi) = match free {
            Some(k) => (self.row.lower[k], self.row.upper[k]),
            None => (S::zero(), S::zero()),
        };
        if fixed + flo + self.suffix_lo[i] > S::one() + self.tol
            || fixed + fhi + self.suffix_hi[i] < S::one() - self.tol
        {
            return Ok(());
        }
        if i == n {
            match free {
                Some(k) => {
                    let v = S::one() - fixed;
                    self.cur[k] = v.max(self.row.lower[k]).min(self.row.upper[k]);
                }
                None => {
                    if (fixed - S::one()).abs() > self.tol {
                        return Ok(());
                    }
                }
            }
            self.out.push(self.cur.clone());
            if self.out.len() > self.raw_cap {
                return Err(Error::VertexBudgetExceeded { cap: self.raw_cap / (n + 1) });
            }
            return Ok(());
        }
        let (l, u) = (self.row.lower[i], self.row.upper[i]);
        self.cur[i] = l;
        self.dfs(i + 1, free, fixed + l)?;
        if u > l {
            self.cur[i] = u;
            self.dfs(i + 1, free, fixed + u)?;
            if free.is_none() {
                self.dfs(i + 1, Some(i), fixed)?;
            }
        }
        Ok(())
    }
}

/// Removes points within `tol` (sup norm) of an earlier point.
pub(crate) fn dedup_points<S: Real>(points: Vec<Vec<S>>, tol: S) -> Vec<Vec<S>> {
    let mut kept: Vec<Vec<S>> = Vec::with_capacity(points.len());
    for p in points {
        let dup = kept
            .iter()
            .any(|q| q.iter().zip(&p).all(|(&a, &b)| (a - b).abs() <= tol));
        if !dup {
            kept.push(p);
        }
    }
    kept
}

/// Tightens interval bounds so that every bound is attained by some member
/// of the credal set: `lower_i = max(lower_i, 1 - sum_{j != i} upper_j)` and
/// `upper_i = min(upper_i, 1 - sum_{j != i} lower_j)`.
///
/// Tightenings smaller than the scalar's structural tolerance are ignored,
/// which keeps the operation idempotent under rounding.
pub fn coherence_normalize<S: Real>(row: &IntervalRow<S>) -> Result<IntervalRow<S>> {
    let tol = S::sum_tol();
    let sl = sum(&row.lower);
    let su = sum(&row.upper);
    if sl > S::one() + tol {
        return Err(Error::EmptyCredalSet(format!("lower bounds sum to {sl} > 1")));
    }
    if su < S::one() - tol {
        return Err(Error::EmptyCredalSet(format!("upper bounds sum to {su} < 1")));
    }
    let n = row.len();
    let mut lower = row.lower.clone();
    let mut upper = row.upper.clone();
    for i in 0..n {
        let cand_l = S::one() - (su - row.upper[i]);
        if cand_l > row.lower[i] + tol {
            lower[i] = cand_l;
        }
        let cand_u = S::one() - (sl - row.lower[i]);
        if cand_u < row.upper[i] - tol {
            upper[i] = cand_u;
        }
        if lower[i] > upper[i] + tol {
            return Err(Error::EmptyCredalSet(format!(
                "tightened bounds cross at position {i}"
            )));
        }
        upper[i] = upper[i].max(lower[i]);
    }
    Ok(IntervalRow { lower, upper })
}

fn check_mass_function<S: Real>(p: &[S], n: usize) -> Result<()> {
    if p.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: p.len() });
    }
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    if p.iter().any(|&v| v < S::zero()) {
        return Err(Error::InvalidRow("negative probability".into()));
    }
    let s = sum(p);
    if (s - S::one()).abs() > S::sum_tol() {
        return Err(Error::InvalidRow(format!("probabilities sum to {s}, not 1")));
    }
    Ok(())
}

fn vertex_upper<S: Real>(vs: &[Vec<S>], f: &[S]) -> S {
    vs.iter().map(|p| dot(p, f)).fold(S::neg_infinity(), S::max)
}

fn vertex_lower<S: Real>(vs: &[Vec<S>], f: &[S]) -> S {
    vs.iter().map(|p| dot(p, f)).fold(S::infinity(), S::min)
}

/// Credal set of one transition row.
#[derive(Debug, Clone, PartialEq)]
pub enum CredalRow<S> {
    /// Convex hull of the listed mass functions.
    Vertices(Vec<Vec<S>>),
    /// Coherent probability intervals.
    Interval(IntervalRow<S>),
}

impl<S: Real> CredalRow<S> {
    pub fn from_vertices(n: usize, vertices: Vec<Vec<S>>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidRow("vertex list is empty".into()));
        }
        for v in &vertices {
            check_mass_function(v, n)?;
        }
        Ok(Self::Vertices(vertices))
    }

    /// Interval row, tightened by [`coherence_normalize`].
    pub fn from_interval(row: IntervalRow<S>) -> Result<Self> {
        Ok(Self::Interval(coherence_normalize(&row)?))
    }

    pub fn precise(p: Vec<S>) -> Result<Self> {
        let n = p.len();
        Self::from_vertices(n, vec![p])
    }

    pub fn vacuous(n: usize) -> Self {
        Self::Interval(IntervalRow::vacuous(n))
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Vertices(vs) => vs[0].len(),
            Self::Interval(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Upper expectation `max_p p·f`.
    pub fn upper(&self, f: &Gamble<S>) -> Result<S> {
        f.check_len(self.len())?;
        Ok(self.upper_unchecked(f))
    }

    /// Lower expectation, `-upper(-f)`.
    pub fn lower(&self, f: &Gamble<S>) -> Result<S> {
        f.check_len(self.len())?;
        Ok(self.lower_unchecked(f))
    }

    #[inline]
    pub(crate) fn upper_unchecked(&self, f: &[S]) -> S {
        match self {
            Self::Vertices(vs) => vertex_upper(vs, f),
            Self::Interval(r) => r.upper_expectation(f),
        }
    }

    #[inline]
    pub(crate) fn lower_unchecked(&self, f: &[S]) -> S {
        let neg: Vec<S> = f.iter().map(|&v| -v).collect();
        -self.upper_unchecked(&neg)
    }

    /// Extreme points; vertex rows pass through unchanged.
    pub fn vertices(&self, cap: usize) -> Result<Vec<Vec<S>>> {
        match self {
            Self::Vertices(vs) => {
                if vs.len() > cap {
                    Err(Error::VertexBudgetExceeded { cap })
                } else {
                    Ok(vs.clone())
                }
            }
            Self::Interval(r) => r.extreme_points(cap),
        }
    }

    /// Whether some member of the row puts all its mass on `b`, i.e. the upper
    /// probability of `b` equals one.
    ///
    /// For intervals this is `sum_{y not in b} lower_y ~ 0` together with
    /// `sum_{y in b} upper_y >= 1`; for vertex rows some extreme point has
    /// mass one on `b`, since the maximizing face is spanned by extreme points.
    pub fn can_concentrate(&self, b: StateSet, cfg: &Config) -> bool {
        let n = self.len();
        match self {
            Self::Interval(r) => {
                let outside = (0..n)
                    .filter(|&y| !b.contains(y))
                    .fold(S::zero(), |a, y| a + r.lower[y]);
                let inside = (0..n).filter(|&y| b.contains(y)).fold(S::zero(), |a, y| a + r.upper[y]);
                outside <= S::lit(cfg.eps_one) && cfg.is_one(inside)
            }
            Self::Vertices(vs) => vs.iter().any(|p| {
                cfg.is_one((0..n).filter(|&y| b.contains(y)).fold(S::zero(), |a, y| a + p[y]))
            }),
        }
    }
}

/// Unconditional imprecise expectation functional.
#[derive(Debug, Clone)]
pub enum IefHandle<S: Real> {
    /// A single mass function.
    Precise(Vec<S>),
    /// Convex hull of mass functions.
    Vertices(Vec<Vec<S>>),
    /// Probability intervals (coherent after construction).
    Interval(IntervalRow<S>),
    /// All distributions supported on the set.
    VacuousOn(StateSet),
    /// Convex combination `sum_i w_i E_i`.
    Mixture(Vec<(S, IefHandle<S>)>),
    /// Limit of an iterated functional, evaluated lazily.
    Limit(Arc<LimitFunctional<S>>),
}

impl<S: Real> IefHandle<S> {
    pub fn precise(p: Vec<S>) -> Result<Self> {
        let n = p.len();
        check_mass_function(&p, n)?;
        Ok(Self::Precise(p))
    }

    pub fn vertex_set(n: usize, vertices: Vec<Vec<S>>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidHandle("vertex list is empty".into()));
        }
        for v in &vertices {
            check_mass_function(v, n)?;
        }
        Ok(Self::Vertices(vertices))
    }

    pub fn interval(row: IntervalRow<S>) -> Result<Self> {
        Ok(Self::Interval(coherence_normalize(&row)?))
    }

    pub fn vacuous_on(set: StateSet) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::InvalidHandle("vacuous functional on the empty set".into()));
        }
        Ok(Self::VacuousOn(set))
    }

    /// Point mass at state `i` of an `n`-state space.
    pub fn point(n: usize, i: usize) -> Self {
        let mut p = vec![S::zero(); n];
        p[i] = S::one();
        Self::Precise(p)
    }

    pub fn mixture(parts: Vec<(S, IefHandle<S>)>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidHandle("mixture without components".into()));
        }
        if parts.iter().any(|(w, _)| !(w.is_finite() && *w >= S::zero())) {
            return Err(Error::InvalidHandle("mixture weights must be non-negative".into()));
        }
        let total = parts.iter().fold(S::zero(), |a, (w, _)| a + *w);
        if (total - S::one()).abs() > S::sum_tol() {
            return Err(Error::InvalidHandle(format!("mixture weights sum to {total}")));
        }
        Ok(Self::Mixture(parts))
    }

    /// True when no iterated limit occurs anywhere in the handle.
    pub fn is_explicit(&self) -> bool {
        match self {
            Self::Limit(_) => false,
            Self::Mixture(parts) => parts.iter().all(|(_, e)| e.is_explicit()),
            _ => true,
        }
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        let mismatch = |found| Err(Error::DimensionMismatch { expected: n, found });
        match self {
            Self::Precise(p) if p.len() != n => mismatch(p.len()),
            Self::Vertices(vs) => match vs.iter().find(|v| v.len() != n) {
                Some(v) => mismatch(v.len()),
                None => Ok(()),
            },
            Self::Interval(r) if r.len() != n => mismatch(r.len()),
            Self::VacuousOn(s) if !s.is_subset(StateSet::full(n)) => {
                mismatch(s.iter().last().map_or(0, |i| i + 1))
            }
            _ => Ok(()),
        }
    }

    /// Upper expectation of `f`.
    pub fn upper(&self, f: &Gamble<S>) -> Result<S> {
        self.check_dim(f.len())?;
        Ok(match self {
            Self::Precise(p) => dot(p, f),
            Self::Vertices(vs) => vertex_upper(vs, f),
            Self::Interval(r) => r.upper_expectation(f),
            Self::VacuousOn(s) => f.max_on(*s),
            Self::Mixture(parts) => {
                let mut acc = S::zero();
                for (w, e) in parts {
                    acc += *w * e.upper(f)?;
                }
                acc
            }
            Self::Limit(m) => m.upper(f)?,
        })
    }

    /// Lower expectation of `f`.
    pub fn lower(&self, f: &Gamble<S>) -> Result<S> {
        self.check_dim(f.len())?;
        Ok(match self {
            Self::Precise(p) => dot(p, f),
            Self::Vertices(vs) => vertex_lower(vs, f),
            Self::Interval(r) => -r.upper_expectation(&f.neg()),
            Self::VacuousOn(s) => f.min_on(*s),
            Self::Mixture(parts) => {
                let mut acc = S::zero();
                for (w, e) in parts {
                    acc += *w * e.lower(f)?;
                }
                acc
            }
            Self::Limit(m) => m.lower(f)?,
        })
    }

    /// States with strictly positive upper probability.
    pub fn support(&self, n: usize, cfg: &Config) -> Result<StateSet> {
        let mut s = StateSet::empty();
        for x in 0..n {
            if cfg.positive(self.upper(&Gamble::indicator(n, StateSet::singleton(x)))?) {
                s.insert(x);
            }
        }
        Ok(s)
    }

    /// Largest value `a` of `f` whose level set `{f >= a}` has strictly
    /// positive lower probability.
    pub fn ess_max(&self, f: &Gamble<S>, cfg: &Config) -> Result<S> {
        if !self.is_explicit() {
            return Err(Error::NotExplicit);
        }
        let n = f.len();
        let mut levels: Vec<S> = f.values().to_vec();
        levels.sort_by(|a, b| b.partial_cmp(a).expect("finite gamble"));
        levels.dedup();
        for a in levels {
            let lp = self.lower(&Gamble::indicator(n, f.level_set(a)))?;
            if cfg.positive(lp) {
                return Ok(a);
            }
        }
        Err(Error::Invariant("no level set has positive lower probability".into()))
    }

    /// Smallest strictly positive lower probability over all events.
    pub fn m_value(&self, n: usize, cfg: &Config) -> Result<S> {
        if !self.is_explicit() {
            return Err(Error::NotExplicit);
        }
        cfg.check_lattice(n)?;
        let mut best = S::infinity();
        for a in StateSet::all_subsets(n).skip(1) {
            let lp = self.lower(&Gamble::indicator(n, a))?;
            if cfg.positive(lp) && lp < best {
                best = lp;
            }
        }
        if best.is_finite() {
            Ok(best)
        } else {
            Err(Error::Invariant("no event has positive lower probability".into()))
        }
    }
}
