//! Imprecise transition operators with separately specified rows.

use crate::credal::{dedup_points, CredalRow, IefHandle};
use crate::error::{Error, Result};
use crate::model::{Config, Gamble, GambleInterval, StateSet, StateSpace};
use crate::scalar::{dot, Real};

/// Imprecise transition operator: one credal row per state. Any combination
/// of per-row choices is an admissible precise operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Ito<S> {
    space: StateSpace,
    rows: Vec<CredalRow<S>>,
}

impl<S: Real> Ito<S> {
    pub fn new(space: StateSpace, rows: Vec<CredalRow<S>>) -> Result<Self> {
        let n = space.len();
        if rows.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: rows.len() });
        }
        for r in &rows {
            if r.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: r.len() });
            }
        }
        Ok(Self { space, rows })
    }

    /// Precise operator from a row-stochastic matrix.
    pub fn precise(space: StateSpace, matrix: Vec<Vec<S>>) -> Result<Self> {
        let rows = matrix.into_iter().map(CredalRow::precise).collect::<Result<Vec<_>>>()?;
        Self::new(space, rows)
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn rows(&self) -> &[CredalRow<S>] {
        &self.rows
    }

    pub fn row(&self, x: usize) -> &CredalRow<S> {
        &self.rows[x]
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// True when every row holds a single mass function.
    pub fn is_precise(&self) -> bool {
        self.rows.iter().all(|r| matches!(r, CredalRow::Vertices(vs) if vs.len() == 1))
    }

    /// `x -> max_{p in row x} p·f`.
    pub fn apply_upper(&self, f: &Gamble<S>) -> Result<Gamble<S>> {
        f.check_len(self.len())?;
        Ok(self.upper_unchecked(f))
    }

    pub fn apply_lower(&self, f: &Gamble<S>) -> Result<Gamble<S>> {
        f.check_len(self.len())?;
        Ok(self.lower_unchecked(f))
    }

    pub(crate) fn upper_unchecked(&self, f: &[S]) -> Gamble<S> {
        Gamble::new(self.rows.iter().map(|r| r.upper_unchecked(f)).collect())
            .expect("finite operator output")
    }

    pub(crate) fn lower_unchecked(&self, f: &[S]) -> Gamble<S> {
        Gamble::new(self.rows.iter().map(|r| r.lower_unchecked(f)).collect())
            .expect("finite operator output")
    }

    /// `T[lo, hi] = [T_lower lo, T_upper hi]`.
    pub fn apply_interval(&self, g: &GambleInterval<S>) -> Result<GambleInterval<S>> {
        let lo = self.apply_lower(g.lower())?;
        let hi = self.apply_upper(g.upper())?;
        Ok(GambleInterval::from_parts_unchecked(lo, hi))
    }

    /// `T^n [f, f]`, computed by repeated interval application.
    pub fn power_apply(&self, n: usize, f: &Gamble<S>) -> Result<GambleInterval<S>> {
        f.check_len(self.len())?;
        let mut g = GambleInterval::degenerate(f.clone());
        for _ in 0..n {
            g = self.apply_interval(&g)?;
        }
        Ok(g)
    }

    /// Upper end of [`Ito::power_apply`] alone.
    pub fn power_upper(&self, n: usize, f: &Gamble<S>) -> Result<Gamble<S>> {
        f.check_len(self.len())?;
        let mut g = f.clone();
        for _ in 0..n {
            g = self.upper_unchecked(&g);
        }
        Ok(g)
    }

    /// Explicit vertex rows of `T^r`, built recursively as
    /// `{ p·M : p vertex of row x, M any choice of (r-1)-step rows }`.
    pub fn materialize_power(&self, r: usize, cfg: &Config) -> Result<MaterializedPower<S>> {
        if r == 0 || r > cfg.max_power_r {
            return Err(Error::PowerCapExceeded { r, cap: cfg.max_power_r });
        }
        let base = self
            .rows
            .iter()
            .map(|row| row.vertices(cfg.max_vertices))
            .collect::<Result<Vec<_>>>()?;
        let mut cur = base.clone();
        for _ in 1..r {
            cur = base
                .iter()
                .map(|vs| compose_row(vs, &cur, cfg.max_vertices))
                .collect::<Result<Vec<_>>>()?;
        }
        Ok(MaterializedPower { r, rows: cur })
    }

    /// The operators of `T^r` that keep all mass inside `b` from every state
    /// of `b`. Rows of states outside `b` stay unrestricted.
    pub fn restrict_to_class(
        &self,
        b: StateSet,
        r: usize,
        cfg: &Config,
    ) -> Result<MaterializedPower<S>> {
        let mut mp = self.materialize_power(r, cfg)?;
        for x in b.iter() {
            mp.rows[x].retain(|p| cfg.is_one(mass_on(p, b)));
            if mp.rows[x].is_empty() {
                return Err(Error::EmptyRestriction(x));
            }
        }
        Ok(mp)
    }
}

fn mass_on<S: Real>(p: &[S], b: StateSet) -> S {
    b.iter().filter(|&y| y < p.len()).fold(S::zero(), |a, y| a + p[y])
}

/// All points `sum_y p(y) q_y` for `p` in `first` and `q_y` in `next[y]`.
fn compose_row<S: Real>(first: &[Vec<S>], next: &[Vec<Vec<S>>], cap: usize) -> Result<Vec<Vec<S>>> {
    let n = next.len();
    let mut out = Vec::new();
    for p in first {
        let support: Vec<usize> = (0..n).filter(|&y| p[y] > S::zero()).collect();
        let combos = support
            .iter()
            .try_fold(1usize, |acc, &y| acc.checked_mul(next[y].len()))
            .filter(|&c| c <= cap.saturating_mul(16))
            .ok_or(Error::VertexBudgetExceeded { cap })?;
        let mut choice = vec![0usize; support.len()];
        for _ in 0..combos {
            let mut q = vec![S::zero(); n];
            for (k, &y) in support.iter().enumerate() {
                let row = &next[y][choice[k]];
                for z in 0..n {
                    q[z] += p[y] * row[z];
                }
            }
            out.push(q);
            for (k, &y) in support.iter().enumerate() {
                choice[k] += 1;
                if choice[k] < next[y].len() {
                    break;
                }
                choice[k] = 0;
            }
        }
    }
    let out = dedup_points(out, S::sum_tol());
    if out.len() > cap {
        return Err(Error::VertexBudgetExceeded { cap });
    }
    Ok(out)
}

/// Explicit vertex-form rows of an operator power `T^r`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterializedPower<S> {
    r: usize,
    rows: Vec<Vec<Vec<S>>>,
}

impl<S: Real> MaterializedPower<S> {
    pub fn r(&self) -> usize {
        self.r
    }

    pub fn rows(&self) -> &[Vec<Vec<S>>] {
        &self.rows
    }

    pub fn row(&self, x: usize) -> &[Vec<S>] {
        &self.rows[x]
    }

    pub fn row_upper(&self, x: usize, f: &Gamble<S>) -> Result<S> {
        f.check_len(self.rows.len())?;
        Ok(self.row_upper_unchecked(x, f))
    }

    pub(crate) fn row_upper_unchecked(&self, x: usize, f: &[S]) -> S {
        self.rows[x].iter().map(|p| dot(p, f)).fold(S::neg_infinity(), S::max)
    }

    pub fn apply_upper(&self, f: &Gamble<S>) -> Result<Gamble<S>> {
        f.check_len(self.rows.len())?;
        Gamble::new((0..self.rows.len()).map(|x| self.row_upper_unchecked(x, f)).collect())
    }

    /// The same credal rows as a one-step operator on `space`.
    pub fn to_ito(&self, space: StateSpace) -> Result<Ito<S>> {
        let n = space.len();
        let rows = self
            .rows
            .iter()
            .map(|vs| CredalRow::from_vertices(n, vs.clone()))
            .collect::<Result<Vec<_>>>()?;
        Ito::new(space, rows)
    }
}

/// Interval `[E0_lower(T^n f lower), E0_upper(T^n f upper)]` of the chain at time `n`.
pub fn evolve<S: Real>(e0: &IefHandle<S>, t: &Ito<S>, n: usize, f: &Gamble<S>) -> Result<(S, S)> {
    if !e0.is_explicit() {
        return Err(Error::NotExplicit);
    }
    let g = t.power_apply(n, f)?;
    Ok((e0.lower(g.lower())?, e0.upper(g.upper())?))
}
