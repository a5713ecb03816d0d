//! Invariant imprecise expectation functionals obtained as limits of the
//! chain, and the convergence pipeline that identifies them.
//!
//! Limits are evaluated lazily per gamble. Each evaluation iterates the upper
//! operator until the tracked value moves by at most `eps_conv` across a
//! window of steps, and results are cached by the bit pattern of the gamble.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::credal::IefHandle;
use crate::error::{Error, Result};
use crate::model::{Config, Gamble, StateSet};
use crate::scalar::Real;
use crate::strong::{find_regularity_r, minimal_permanent_classes};
use crate::transition::{Ito, MaterializedPower};
use crate::weak::{access_graph, is_absorbing};

/// Label attached to every limit-equality statement: equality is only checked
/// on a finite family of gambles.
pub const CERTIFICATE: &str = "agreement on test family";

const TEST_FAMILY_SEED: u64 = 0x5eed_1c0d;
const RANDOM_TEST_GAMBLES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitKind {
    /// Vacuous on an absorbing set, pushed through `T` forever.
    LeastCommittal { support: StateSet },
    /// Invariant of the operators that keep a minimal permanent class closed
    /// after `r` steps, continued through `T^r` and spread over one period.
    ClassInvariant { class: StateSet, r: usize },
}

/// One cached evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation<S> {
    pub value: S,
    pub iterations: usize,
    /// Change of the tracked value across the final window.
    pub residual: S,
}

/// Lazily evaluated limit functional.
#[derive(Debug)]
pub struct LimitFunctional<S: Real> {
    t: Arc<Ito<S>>,
    kind: LimitKind,
    restricted: Option<MaterializedPower<S>>,
    cfg: Config,
    cache: Mutex<HashMap<Vec<u64>, Evaluation<S>>>,
}

/// Running record of a monotone scalar sequence with a windowed stopping rule.
struct Tracker<S> {
    history: Vec<S>,
    window: usize,
    tol: S,
    slack: S,
    increasing: bool,
}

enum Step<S> {
    Continue,
    Done(Evaluation<S>),
}

impl<S: Real> Tracker<S> {
    fn new(first: S, window: usize, tol: S, slack: S, increasing: bool) -> Self {
        Self { history: vec![first], window: window.max(1), tol, slack, increasing }
    }

    fn push(&mut self, v: S) -> Result<Step<S>> {
        let k = self.history.len();
        let prev = self.history[k - 1];
        let violated = if self.increasing { v < prev - self.slack } else { v > prev + self.slack };
        if violated {
            return Err(Error::MonotonicityViolation { step: k, previous: prev.as_f64(), current: v.as_f64() });
        }
        self.history.push(v);
        if k >= self.window {
            let residual = (v - self.history[k - self.window]).abs();
            if residual <= self.tol {
                return Ok(Step::Done(Evaluation { value: v, iterations: k, residual }));
            }
        }
        Ok(Step::Continue)
    }

    fn stationary(&self) -> Evaluation<S> {
        let k = self.history.len() - 1;
        Evaluation { value: self.history[k], iterations: k, residual: S::zero() }
    }

    fn non_convergent(&self) -> Error {
        let k = self.history.len() - 1;
        let tail = &self.history[k.saturating_sub(self.window)..];
        let lo = tail.iter().copied().fold(S::infinity(), S::min);
        let hi = tail.iter().copied().fold(S::neg_infinity(), S::max);
        Error::NonConvergent { iterations: k, lower: lo.as_f64(), upper: hi.as_f64() }
    }
}

/// Stopping window for a sequence driven by `n` states. Plateaus of the
/// maximum follow a deterministic walk on subsets, so they last fewer than
/// `2^n` steps unless they last forever.
pub(crate) fn window_for(n: usize) -> usize {
    1usize << n.min(WINDOW_EXPONENT_CAP)
}

const WINDOW_EXPONENT_CAP: usize = 10;

fn scale_of<S: Real>(f: &[S]) -> S {
    f.iter().fold(S::zero(), |a, v| a.max(v.abs()))
}

impl<S: Real> LimitFunctional<S> {
    pub fn kind(&self) -> LimitKind {
        self.kind
    }

    pub fn operator(&self) -> &Ito<S> {
        &self.t
    }

    pub fn config(&self) -> &Config {
        &self.cfg
    }

    /// Set whose vacuous functional seeds the iteration.
    pub fn base_set(&self) -> StateSet {
        match self.kind {
            LimitKind::LeastCommittal { support } => support,
            LimitKind::ClassInvariant { class, .. } => class,
        }
    }

    pub fn into_handle(self) -> IefHandle<S> {
        IefHandle::Limit(Arc::new(self))
    }

    pub fn upper(&self, f: &Gamble<S>) -> Result<S> {
        Ok(self.evaluate(f)?.value)
    }

    pub fn lower(&self, f: &Gamble<S>) -> Result<S> {
        Ok(-self.evaluate(&f.neg())?.value)
    }

    /// Upper value of `f` with its convergence metadata.
    pub fn evaluate(&self, f: &Gamble<S>) -> Result<Evaluation<S>> {
        f.check_len(self.t.len())?;
        let key = f.key();
        if let Some(e) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(*e);
        }
        let e = match self.kind {
            LimitKind::LeastCommittal { support } => self.least_committal(support, f)?,
            LimitKind::ClassInvariant { class, r } => self.class_invariant(class, r, f)?,
        };
        self.cache.lock().expect("cache lock").insert(key, e);
        Ok(e)
    }

    fn least_committal(&self, s: StateSet, f: &Gamble<S>) -> Result<Evaluation<S>> {
        let n = self.t.len();
        let slack = (S::sum_tol() + S::lit(self.cfg.eps_pos)) * (S::one() + scale_of(f) + scale_of(f));
        let mut tr = Tracker::new(f.max_on(s), window_for(n), S::lit(self.cfg.eps_conv), slack, false);
        let mut g = f.clone();
        for _ in 0..self.cfg.max_iter {
            let next = self.t.upper_unchecked(&g);
            if next == g {
                return Ok(tr.stationary());
            }
            g = next;
            if let Step::Done(e) = tr.push(g.max_on(s))? {
                return Ok(e);
            }
        }
        Err(tr.non_convergent())
    }

    fn restricted_limit(&self, b: StateSet, h: &Gamble<S>, tol: S) -> Result<S> {
        let m = self.restricted.as_ref().expect("class invariant keeps its restricted power");
        let slack = (S::sum_tol() + S::lit(self.cfg.eps_one)) * (S::one() + scale_of(h) + scale_of(h));
        let mut tr = Tracker::new(h.max_on(b), window_for(b.len()), tol, slack, false);
        let mut g = h.values().to_vec();
        for _ in 0..self.cfg.max_iter {
            let next: Vec<S> = (0..g.len()).map(|x| m.row_upper_unchecked(x, &g)).collect();
            if next == g {
                return Ok(tr.stationary().value);
            }
            g = next;
            let v = b.iter().map(|x| g[x]).fold(S::neg_infinity(), S::max);
            if let Step::Done(e) = tr.push(v)? {
                return Ok(e.value);
            }
        }
        Err(tr.non_convergent())
    }

    /// Upper hull over one period: `max_{j<r} M_r(T^j f)`, where `M_r` is the
    /// nested `T^r`-invariant limit.
    fn class_invariant(&self, b: StateSet, r: usize, f: &Gamble<S>) -> Result<Evaluation<S>> {
        let mut h = f.clone();
        let mut best = self.period_limit(b, r, &h)?;
        for _ in 1..r {
            h = self.t.upper_unchecked(&h);
            let e = self.period_limit(b, r, &h)?;
            best = Evaluation {
                value: best.value.max(e.value),
                iterations: best.iterations + e.iterations,
                residual: best.residual.max(e.residual),
            };
        }
        Ok(best)
    }

    fn period_limit(&self, b: StateSet, r: usize, f: &Gamble<S>) -> Result<Evaluation<S>> {
        let inner_tol = S::lit(self.cfg.eps_conv);
        let outer_tol = S::lit(10.0 * self.cfg.eps_conv);
        let slack = (S::sum_tol() + S::lit(self.cfg.eps_one)) * (S::one() + scale_of(f) + scale_of(f));
        let first = self.restricted_limit(b, f, inner_tol)?;
        let mut tr = Tracker::new(first, window_for(self.t.len()), outer_tol, slack, true);
        let mut h = f.clone();
        for _ in 0..self.cfg.max_iter {
            let next = self.t.power_upper(r, &h)?;
            if next == h {
                return Ok(tr.stationary());
            }
            h = next;
            if let Step::Done(e) = tr.push(self.restricted_limit(b, &h, inner_tol)?)? {
                return Ok(e);
            }
        }
        Err(tr.non_convergent())
    }

    /// Largest `|M(T f) - M(f)|` over `family`.
    pub fn invariance_residual(&self, family: &[Gamble<S>]) -> Result<S> {
        let mut worst = S::zero();
        for f in family {
            let tf = self.t.apply_upper(f)?;
            worst = worst.max((self.upper(&tf)? - self.upper(f)?).abs());
        }
        Ok(worst)
    }
}

fn fresh<S: Real>(t: &Ito<S>, kind: LimitKind, restricted: Option<MaterializedPower<S>>, cfg: &Config) -> LimitFunctional<S> {
    LimitFunctional { t: Arc::new(t.clone()), kind, restricted, cfg: cfg.clone(), cache: Mutex::new(HashMap::new()) }
}

/// States weakly reachable from the support of `e`; always absorbing.
pub fn s_of<S: Real>(e: &IefHandle<S>, t: &Ito<S>, cfg: &Config) -> Result<StateSet> {
    if !e.is_explicit() {
        return Err(Error::NotExplicit);
    }
    let graph = access_graph(t, cfg);
    let s = graph.closure(e.support(t.len(), cfg)?);
    if !is_absorbing(&graph, s) {
        return Err(Error::Invariant("weak closure is not absorbing".into()));
    }
    Ok(s)
}

/// Limit of the vacuous functional on an absorbing set `s` pushed through `t`.
pub fn least_committal_invariant<S: Real>(t: &Ito<S>, s: StateSet, cfg: &Config) -> Result<LimitFunctional<S>> {
    cfg.validate()?;
    if s.is_empty() || !s.is_subset(StateSet::full(t.len())) || !is_absorbing(&access_graph(t, cfg), s) {
        return Err(Error::AbsorbingViolation);
    }
    Ok(fresh(t, LimitKind::LeastCommittal { support: s }, None, cfg))
}

/// Invariant functional attached to a minimal permanent class `b`.
pub fn invariant_on_class<S: Real>(t: &Ito<S>, b: StateSet, cfg: &Config) -> Result<LimitFunctional<S>> {
    cfg.validate()?;
    let r = find_regularity_r(t, b, cfg)?;
    let restricted = t.restrict_to_class(b, r, cfg)?;
    Ok(fresh(t, LimitKind::ClassInvariant { class: b, r }, Some(restricted), cfg))
}

/// Every class gets upper probability zero or one under `e`.
pub fn is_extremal<S: Real>(e: &IefHandle<S>, classes: &[StateSet], n: usize, cfg: &Config) -> Result<bool> {
    for b in classes {
        let v = e.upper(&Gamble::indicator(n, *b))?;
        if !(v <= S::lit(cfg.eps_one) || cfg.is_one(v)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// All subset indicators (within the lattice budget) plus seeded random gambles in `[0, 1]`.
pub fn test_family<S: Real>(n: usize, cfg: &Config) -> Vec<Gamble<S>> {
    let mut out: Vec<Gamble<S>> = Vec::new();
    if n <= cfg.max_strong_states {
        out.extend(StateSet::all_subsets(n).map(|a| Gamble::indicator(n, a)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(TEST_FAMILY_SEED);
    for _ in 0..RANDOM_TEST_GAMBLES {
        let v: Vec<S> = (0..n).map(|_| S::lit(rng.gen_range(0.0..=1.0))).collect();
        out.push(Gamble::new(v).expect("finite"));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Zero,
    One,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassVerdict<S> {
    pub class: StateSet,
    pub verdict: Verdict,
    /// Last upper probability of the class along the run.
    pub value: S,
    pub iterations: usize,
}

/// Extremality of `E0 T^n` over the observed steps `0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExtremalityWindow {
    pub steps: usize,
    pub first_non_extremal: Option<usize>,
}

impl ExtremalityWindow {
    pub fn all_extremal(&self) -> bool {
        self.first_non_extremal.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport<S: Real> {
    pub classes: Vec<ClassVerdict<S>>,
    pub s_e: StateSet,
    pub extremality: ExtremalityWindow,
    /// Present when every verdict is zero or one.
    pub limit: Option<Arc<LimitFunctional<S>>>,
    /// Largest `|M(T f) - M(f)|` over the test family.
    pub invariance_residual: Option<S>,
    /// Largest gap between the limit and the iterated initial functional over the test family.
    pub direct_residual: Option<S>,
    pub certificate: &'static str,
}

impl<S: Real> ConvergenceReport<S> {
    pub fn all_decided(&self) -> bool {
        self.classes.iter().all(|c| c.verdict != Verdict::Indeterminate)
    }
}

const STABLE_STEPS: usize = 3;

pub fn classify_convergence<S: Real>(e0: &IefHandle<S>, t: &Ito<S>, cfg: &Config) -> Result<ConvergenceReport<S>> {
    cfg.validate()?;
    if !e0.is_explicit() {
        return Err(Error::NotExplicit);
    }
    let n = t.len();
    let classes = minimal_permanent_classes(t, cfg)?;
    let s_e = s_of(e0, t, cfg)?;

    let mut gambles: Vec<Gamble<S>> = classes.iter().map(|b| Gamble::indicator(n, *b)).collect();
    let mut verdicts: Vec<ClassVerdict<S>> = Vec::with_capacity(classes.len());
    let mut streak = vec![0usize; classes.len()];
    for (i, b) in classes.iter().enumerate() {
        let value = e0.upper(&gambles[i])?;
        let verdict = if b.is_disjoint(s_e) { Verdict::Zero } else { Verdict::Indeterminate };
        verdicts.push(ClassVerdict { class: *b, verdict, value, iterations: 0 });
    }
    let extremal_now = |vs: &[ClassVerdict<S>]| vs.iter().all(|c| c.value <= S::lit(cfg.eps_one) || cfg.is_one(c.value));
    let mut window = ExtremalityWindow { steps: 0, first_non_extremal: None };
    if !extremal_now(&verdicts) {
        window.first_non_extremal = Some(0);
    }

    let mut step = 0usize;
    let pending = |vs: &[ClassVerdict<S>], streak: &[usize]| {
        vs.iter().zip(streak).any(|(c, &k)| c.verdict == Verdict::Indeterminate && k < STABLE_STEPS)
    };
    for (c, k) in verdicts.iter().zip(streak.iter_mut()) {
        if c.verdict == Verdict::Indeterminate && cfg.is_one(c.value) {
            *k = 1;
        }
    }
    let mut stationary = false;
    while pending(&verdicts, &streak) && step < cfg.max_iter && !stationary {
        step += 1;
        stationary = true;
        for (i, c) in verdicts.iter_mut().enumerate() {
            let next = t.upper_unchecked(&gambles[i]);
            stationary &= next == gambles[i];
            gambles[i] = next;
            c.value = e0.upper(&gambles[i])?;
            if c.verdict == Verdict::Indeterminate && streak[i] < STABLE_STEPS {
                streak[i] = if cfg.is_one(c.value) { streak[i] + 1 } else { 0 };
                c.iterations = step;
            }
        }
        if window.first_non_extremal.is_none() && !extremal_now(&verdicts) {
            window.first_non_extremal = Some(step);
        }
    }
    window.steps = step;
    for (c, &k) in verdicts.iter_mut().zip(&streak) {
        if c.verdict == Verdict::Indeterminate && (k >= STABLE_STEPS || (stationary && cfg.is_one(c.value))) {
            c.verdict = Verdict::One;
        } else if c.verdict == Verdict::Indeterminate && stationary {
            c.iterations = cfg.max_iter;
        }
    }

    let mut report = ConvergenceReport {
        classes: verdicts,
        s_e,
        extremality: window,
        limit: None,
        invariance_residual: None,
        direct_residual: None,
        certificate: CERTIFICATE,
    };
    if report.all_decided() {
        let limit = Arc::new(least_committal_invariant(t, s_e, cfg)?);
        let family = test_family::<S>(n, cfg);
        report.invariance_residual = Some(limit.invariance_residual(&family)?);
        let mut gap = S::zero();
        for f in &family {
            gap = gap.max((direct_limit(e0, t, f, cfg)? - limit.upper(f)?).abs());
        }
        report.direct_residual = Some(gap);
        report.limit = Some(limit);
    }
    Ok(report)
}

/// `lim_n E0(T^n f)` by plain iteration.
fn direct_limit<S: Real>(e0: &IefHandle<S>, t: &Ito<S>, f: &Gamble<S>, cfg: &Config) -> Result<S> {
    let tol = S::lit(cfg.eps_conv);
    let window = window_for(t.len());
    let mut history = vec![e0.upper(f)?];
    let mut g = f.clone();
    for k in 1..=cfg.max_iter {
        let next = t.upper_unchecked(&g);
        if next == g {
            return Ok(history[k - 1]);
        }
        g = next;
        let v = e0.upper(&g)?;
        history.push(v);
        if k >= window && (v - history[k - window]).abs() <= tol {
            return Ok(v);
        }
    }
    let tail = &history[history.len().saturating_sub(window)..];
    Err(Error::NonConvergent {
        iterations: cfg.max_iter,
        lower: tail.iter().copied().fold(S::infinity(), S::min).as_f64(),
        upper: tail.iter().copied().fold(S::neg_infinity(), S::max).as_f64(),
    })
}

/// One extremal invariant functional, keyed by the minimal permanent classes it charges.
#[derive(Debug, Clone)]
pub struct ExtremalInvariant<S: Real> {
    pub classes: Vec<StateSet>,
    pub support: StateSet,
    pub functional: Arc<LimitFunctional<S>>,
}

pub fn extremal_invariants<S: Real>(t: &Ito<S>, cfg: &Config) -> Result<Vec<ExtremalInvariant<S>>> {
    cfg.validate()?;
    let n = t.len();
    let classes = minimal_permanent_classes(t, cfg)?;
    let graph = access_graph(t, cfg);
    let mut closures: Vec<StateSet> = (0..n).map(|x| graph.closure(StateSet::singleton(x))).collect();
    closures.sort();
    closures.dedup();
    let mut sets = closures.clone();
    let mut frontier = closures.clone();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for a in &frontier {
            for c in &closures {
                let u = a.union(*c);
                if !sets.contains(&u) {
                    sets.push(u);
                    next.push(u);
                }
            }
        }
        frontier = next;
    }
    sets.sort_by_key(|s| (s.len(), *s));

    let mut out: Vec<ExtremalInvariant<S>> = Vec::new();
    for s in sets {
        let family: Vec<StateSet> = classes.iter().copied().filter(|b| b.is_subset(s)).collect();
        if out.iter().any(|e| e.classes == family) {
            continue;
        }
        let functional = Arc::new(least_committal_invariant(t, s, cfg)?);
        out.push(ExtremalInvariant { classes: family, support: s, functional });
    }
    out.sort_by(|a, b| (a.classes.len(), &a.classes, a.support).cmp(&(b.classes.len(), &b.classes, b.support)));
    Ok(out)
}
