//! Strong accessibility between sets of states.
//!
//! `A` strongly leads to `B` in one step when every state of `A` can put all
//! of its mass on `B`. The Boolean set functions ψ (per functional) and τ
//! (per operator) are stored as antichains of minimal sets: both are
//! upward closed in their last argument, and τ is antitone in its first.

use crate::credal::IefHandle;
use crate::error::{Error, Result};
use crate::model::{Config, Gamble, StateSet};
use crate::scalar::Real;
use crate::transition::Ito;
use crate::weak;

/// Inclusion-minimal members of `sets`, sorted.
pub(crate) fn minimize(mut sets: Vec<StateSet>) -> Vec<StateSet> {
    sets.sort_by_key(|s| (s.len(), *s));
    sets.dedup();
    let mut kept: Vec<StateSet> = Vec::with_capacity(sets.len());
    for s in sets {
        if !kept.iter().any(|k| k.is_subset(s)) {
            kept.push(s);
        }
    }
    kept.sort();
    kept
}

/// Upward-closed Boolean function on subsets, held as its minimal true sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetFunction {
    n: usize,
    minimal: Vec<StateSet>,
}

impl SetFunction {
    pub fn from_minimal(n: usize, sets: Vec<StateSet>) -> Self {
        Self { n, minimal: minimize(sets) }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn minimal_sets(&self) -> &[StateSet] {
        &self.minimal
    }

    pub fn value(&self, a: StateSet) -> bool {
        self.minimal.iter().any(|m| m.is_subset(a))
    }
}

/// Boolean relation on subset pairs: for every `A`, the minimal `B` with value one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetRelation {
    n: usize,
    rows: Vec<Vec<StateSet>>,
}

impl SetRelation {
    /// One-step relation of `t`, assembled from per-state minimal certain supports.
    pub fn of<S: Real>(t: &Ito<S>, cfg: &Config) -> Result<Self> {
        let n = t.len();
        cfg.check_lattice(n)?;
        let supports = (0..n).map(|x| min_certain_supports(t, x, cfg)).collect::<Result<Vec<_>>>()?;
        Ok(Self::from_supports(n, &supports))
    }

    /// `supports[x]` lists the minimal sets state `x` can concentrate on.
    pub fn from_supports(n: usize, supports: &[Vec<StateSet>]) -> Self {
        let size = 1usize << n;
        let mut rows: Vec<Vec<StateSet>> = Vec::with_capacity(size);
        rows.push(vec![StateSet::empty()]);
        for bits in 1..size as u64 {
            let a = StateSet::from_bits(bits);
            let x = a.first().expect("non-empty");
            let rest = &rows[a.difference(StateSet::singleton(x)).bits() as usize];
            let merged = rest
                .iter()
                .flat_map(|u| supports[x].iter().map(move |m| u.union(*m)))
                .collect();
            rows.push(minimize(merged));
        }
        Self { n, rows }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn minimal_successors(&self, a: StateSet) -> &[StateSet] {
        &self.rows[a.bits() as usize]
    }

    pub fn value(&self, a: StateSet, b: StateSet) -> bool {
        self.minimal_successors(a).iter().any(|m| m.is_subset(b))
    }
}

fn same_space(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected: a, found: b })
    }
}

/// `(ψ*τ)(B) = max_A ψ(A)·τ(A,B)`.
pub fn star_psi_tau(psi: &SetFunction, tau: &SetRelation) -> Result<SetFunction> {
    same_space(psi.n, tau.n)?;
    let sets = psi.minimal.iter().flat_map(|a| tau.minimal_successors(*a).iter().copied()).collect();
    Ok(SetFunction::from_minimal(psi.n, sets))
}

/// `(τ₁*τ₂)(A,B) = max_C τ₁(A,C)·τ₂(C,B)`.
pub fn star_tau_tau(t1: &SetRelation, t2: &SetRelation) -> Result<SetRelation> {
    same_space(t1.n, t2.n)?;
    let rows = t1
        .rows
        .iter()
        .map(|cs| minimize(cs.iter().flat_map(|c| t2.minimal_successors(*c).iter().copied()).collect()))
        .collect();
    Ok(SetRelation { n: t1.n, rows })
}

/// Minimal sets on which row `x` can place all of its mass.
pub fn min_certain_supports<S: Real>(t: &Ito<S>, x: usize, cfg: &Config) -> Result<Vec<StateSet>> {
    let n = t.len();
    cfg.check_lattice(n)?;
    if x >= n {
        return Err(Error::UnknownState(format!("#{x}")));
    }
    let row = t.row(x);
    let mut found: Vec<StateSet> = Vec::new();
    let mut subsets: Vec<StateSet> = StateSet::all_subsets(n).collect();
    subsets.sort_by_key(|s| (s.len(), *s));
    for b in subsets {
        if !found.iter().any(|f| f.is_subset(b)) && row.can_concentrate(b, cfg) {
            found.push(b);
        }
    }
    found.sort();
    Ok(found)
}

/// One-step strong accessibility `A ⇒₁ B`.
pub fn tau<S: Real>(t: &Ito<S>, a: StateSet, b: StateSet, cfg: &Config) -> Result<bool> {
    cfg.check_lattice(t.len())?;
    check_subset(t.len(), a)?;
    check_subset(t.len(), b)?;
    Ok(a.iter().all(|x| t.row(x).can_concentrate(b, cfg)))
}

/// True iff the upper probability of `A` under `e` is one.
pub fn psi<S: Real>(e: &IefHandle<S>, a: StateSet, n: usize, cfg: &Config) -> Result<bool> {
    check_subset(n, a)?;
    Ok(cfg.is_one(e.upper(&Gamble::indicator(n, a))?))
}

/// ψ of `e` over every subset.
pub fn psi_function<S: Real>(e: &IefHandle<S>, n: usize, cfg: &Config) -> Result<SetFunction> {
    cfg.check_lattice(n)?;
    let mut sets = Vec::new();
    for a in StateSet::all_subsets(n) {
        if psi(e, a, n, cfg)? {
            sets.push(a);
        }
    }
    Ok(SetFunction::from_minimal(n, sets))
}

fn check_subset(n: usize, a: StateSet) -> Result<()> {
    match a.difference(StateSet::full(n)).first() {
        Some(i) => Err(Error::UnknownState(format!("#{i}"))),
        None => Ok(()),
    }
}

/// The one-step relation of an operator with the lattice queries built on it.
#[derive(Debug, Clone)]
pub struct StrongLattice {
    tau: SetRelation,
}

impl StrongLattice {
    pub fn new<S: Real>(t: &Ito<S>, cfg: &Config) -> Result<Self> {
        Ok(Self { tau: SetRelation::of(t, cfg)? })
    }

    pub fn from_relation(tau: SetRelation) -> Self {
        Self { tau }
    }

    pub fn relation(&self) -> &SetRelation {
        &self.tau
    }

    pub fn len(&self) -> usize {
        self.tau.n
    }

    pub fn is_empty(&self) -> bool {
        self.tau.n == 0
    }

    fn step(&self, frontier: &[StateSet]) -> Vec<StateSet> {
        minimize(frontier.iter().flat_map(|f| self.tau.minimal_successors(*f).iter().copied()).collect())
    }

    /// `A ⇒ⁿ B` for a given `n`, or for some `n >= 1` when `steps` is `None`.
    pub fn strongly_leads(&self, a: StateSet, b: StateSet, steps: Option<usize>) -> Result<bool> {
        check_subset(self.len(), a)?;
        check_subset(self.len(), b)?;
        match steps {
            Some(n) => {
                let mut frontier = vec![a];
                for _ in 0..n {
                    frontier = self.step(&frontier);
                }
                Ok(frontier.iter().any(|f| f.is_subset(b)))
            }
            None => Ok(self.reaches(a, b)),
        }
    }

    fn reaches(&self, a: StateSet, b: StateSet) -> bool {
        let mut visited: Vec<StateSet> = vec![a];
        let mut frontier = vec![a];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for c in self.step(&frontier) {
                if c.is_subset(b) {
                    return true;
                }
                if !visited.iter().any(|v| v.is_subset(c)) {
                    visited.push(c);
                    next.push(c);
                }
            }
            frontier = next;
        }
        false
    }

    /// Inclusion-minimal `B` with `B ⇒ B`, sorted.
    pub fn minimal_permanent_classes(&self) -> Vec<StateSet> {
        let n = self.len();
        let mut subsets: Vec<StateSet> = StateSet::all_subsets(n).filter(|s| !s.is_empty()).collect();
        subsets.sort_by_key(|s| (s.len(), *s));
        let mut found: Vec<StateSet> = Vec::new();
        for b in subsets {
            if !found.iter().any(|f| f.is_subset(b)) && self.reaches(b, b) {
                found.push(b);
            }
        }
        found.sort();
        found
    }

    /// Some minimal permanent class strongly leads to `A`.
    pub fn is_permanent(&self, a: StateSet) -> Result<bool> {
        check_subset(self.len(), a)?;
        Ok(self.minimal_permanent_classes().into_iter().any(|m| self.reaches(m, a)))
    }
}

pub fn strongly_leads<S: Real>(
    t: &Ito<S>,
    a: StateSet,
    b: StateSet,
    steps: Option<usize>,
    cfg: &Config,
) -> Result<bool> {
    StrongLattice::new(t, cfg)?.strongly_leads(a, b, steps)
}

pub fn is_permanent<S: Real>(t: &Ito<S>, a: StateSet, cfg: &Config) -> Result<bool> {
    StrongLattice::new(t, cfg)?.is_permanent(a)
}

/// Minimal permanent classes, each checked to sit inside one communication class.
pub fn minimal_permanent_classes<S: Real>(t: &Ito<S>, cfg: &Config) -> Result<Vec<StateSet>> {
    let classes = StrongLattice::new(t, cfg)?.minimal_permanent_classes();
    let comm = weak::classify(t, cfg);
    for b in &classes {
        if !comm.classes.iter().any(|c| b.is_subset(c.states)) {
            return Err(Error::Invariant(format!("minimal permanent class {b:?} spans communication classes")));
        }
    }
    Ok(classes)
}

/// Smallest `r <= max_power_r` with all pairs in `b` weakly accessible in
/// exactly `r` steps and `b` keeping full upper probability after `r` steps.
pub fn find_regularity_r<S: Real>(t: &Ito<S>, b: StateSet, cfg: &Config) -> Result<usize> {
    let n = t.len();
    check_subset(n, b)?;
    let ind_b = Gamble::<S>::indicator(n, b);
    let singles: Vec<Gamble<S>> = b.iter().map(|y| Gamble::indicator(n, StateSet::singleton(y))).collect();
    for r in 1..=cfg.max_power_r {
        let stays = t.power_apply(r, &ind_b)?;
        if !b.iter().all(|x| cfg.is_one(stays.upper()[x])) {
            continue;
        }
        let mut positive = true;
        for s in &singles {
            let g = t.power_apply(r, s)?;
            if !b.iter().all(|x| cfg.positive(g.upper()[x])) {
                positive = false;
                break;
            }
        }
        if positive {
            return Ok(r);
        }
    }
    Err(Error::RegularityCapExceeded { cap: cfg.max_power_r })
}
