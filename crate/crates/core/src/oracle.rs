//! Brute-force reference implementations for cross-checking the main path.
//!
//! Nothing here calls the greedy allocation, the vertex search, the antichain
//! algebra or the SCC routine used elsewhere in the crate. Interval rows are
//! expanded by trying every order of the states, operators by enumerating
//! every combination of row choices, and relations by full Boolean tables.

use rand::Rng;

use crate::credal::{CredalRow, IntervalRow};
use crate::error::{Error, Result};
use crate::model::{Config, Gamble, StateSet, StateSpace};
use crate::scalar::Real;
use crate::transition::Ito;

/// Size limits for the exhaustive routines; exceeding one is an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleBudget {
    pub max_states: usize,
    pub max_vertices_per_row: usize,
    pub max_steps: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self { max_states: 4, max_vertices_per_row: 3, max_steps: 4 }
    }
}

impl OracleBudget {
    fn check_states(&self, n: usize) -> Result<()> {
        if n > self.max_states {
            return Err(Error::BudgetExceeded(format!("{n} states, limit {}", self.max_states)));
        }
        Ok(())
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

fn push_unique<S: Real>(points: &mut Vec<Vec<S>>, p: Vec<S>) {
    let tol = S::lit(1e-9);
    if !points.iter().any(|q| q.iter().zip(&p).all(|(a, b)| (*a - *b).abs() <= tol)) {
        points.push(p);
    }
}

/// Extreme points of an interval row: for every order of the states, raise
/// each state from its lower bound towards its upper bound in that order
/// until the total mass reaches one.
pub fn interval_vertices<S: Real>(lower: &[S], upper: &[S]) -> Vec<Vec<S>> {
    let n = lower.len();
    let base = lower.iter().fold(S::zero(), |a, &v| a + v);
    let mut out: Vec<Vec<S>> = Vec::new();
    for order in permutations(n) {
        let mut p = lower.to_vec();
        let mut free = S::one() - base;
        for &i in &order {
            let add = (upper[i] - lower[i]).min(free).max(S::zero());
            p[i] += add;
            free -= add;
        }
        push_unique(&mut out, p);
    }
    out
}

/// Vertex lists per row, within the budget.
pub fn row_vertex_lists<S: Real>(t: &Ito<S>, budget: &OracleBudget) -> Result<Vec<Vec<Vec<S>>>> {
    budget.check_states(t.len())?;
    let mut lists = Vec::with_capacity(t.len());
    for (x, row) in t.rows().iter().enumerate() {
        let vs = match row {
            CredalRow::Vertices(vs) => vs.clone(),
            CredalRow::Interval(r) => interval_vertices(r.lower(), r.upper()),
        };
        if vs.len() > budget.max_vertices_per_row {
            return Err(Error::BudgetExceeded(format!(
                "row {x} has {} vertices, limit {}",
                vs.len(),
                budget.max_vertices_per_row
            )));
        }
        lists.push(vs);
    }
    Ok(lists)
}

/// Every row-stochastic matrix formed by picking one vertex per row.
pub fn all_matrices<S: Real>(lists: &[Vec<Vec<S>>]) -> Vec<Vec<Vec<S>>> {
    let mut out: Vec<Vec<Vec<S>>> = vec![Vec::new()];
    for vs in lists {
        let mut next = Vec::with_capacity(out.len() * vs.len());
        for partial in &out {
            for v in vs {
                let mut m = partial.clone();
                m.push(v.clone());
                next.push(m);
            }
        }
        out = next;
    }
    out
}

fn mat_vec<S: Real>(m: &[Vec<S>], g: &[S]) -> Vec<S> {
    m.iter().map(|row| row.iter().zip(g).fold(S::zero(), |a, (&p, &v)| a + p * v)).collect()
}

fn dominated<S: Real>(g: &[S], h: &[S]) -> bool {
    g.iter().zip(h).all(|(a, b)| a <= b)
}

/// Upper envelope over all selection sequences `t1 ... tn` of `(t1 ⋯ tn f)(x)`.
///
/// Level `k` holds the gambles `t_{n-k+1} ⋯ t_n f`; gambles pointwise dominated
/// by another member are dropped, which cannot lower any envelope because every
/// matrix is entrywise non-negative.
pub fn brute_power_upper<S: Real>(t: &Ito<S>, n: usize, f: &Gamble<S>, budget: &OracleBudget) -> Result<Gamble<S>> {
    if n > budget.max_steps {
        return Err(Error::BudgetExceeded(format!("{n} steps, limit {}", budget.max_steps)));
    }
    if f.len() != t.len() {
        return Err(Error::DimensionMismatch { expected: t.len(), found: f.len() });
    }
    let matrices = all_matrices(&row_vertex_lists(t, budget)?);
    let mut level: Vec<Vec<S>> = vec![f.values().to_vec()];
    for _ in 0..n {
        let mut next: Vec<Vec<S>> = Vec::new();
        for g in &level {
            for m in &matrices {
                let h = mat_vec(m, g);
                if next.iter().any(|k| dominated(&h, k)) {
                    continue;
                }
                next.retain(|k| !dominated(k, &h));
                next.push(h);
            }
        }
        level = next;
    }
    let env: Vec<S> = (0..t.len()).map(|x| level.iter().map(|g| g[x]).fold(S::neg_infinity(), S::max)).collect();
    Gamble::new(env)
}

/// Full Boolean table over subset pairs, indexed by bit patterns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TauTable {
    n: usize,
    cells: Vec<bool>,
}

impl TauTable {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, a: StateSet, b: StateSet) -> bool {
        self.cells[((a.bits() as usize) << self.n) | b.bits() as usize]
    }

    /// `(self * other)(A,B) = max_C self(A,C)·other(C,B)`.
    pub fn compose(&self, other: &TauTable) -> TauTable {
        let size = 1usize << self.n;
        let mut cells = vec![false; size * size];
        for a in 0..size {
            for c in 0..size {
                if !self.cells[(a << self.n) | c] {
                    continue;
                }
                for b in 0..size {
                    if other.cells[(c << self.n) | b] {
                        cells[(a << self.n) | b] = true;
                    }
                }
            }
        }
        TauTable { n: self.n, cells }
    }
}

/// `τ` of `T^n`: `A ⇒ⁿ B` iff the brute-force upper probability of `B` after
/// `n` steps is one at every state of `A`.
pub fn brute_tau<S: Real>(t: &Ito<S>, n: usize, cfg: &Config, budget: &OracleBudget) -> Result<TauTable> {
    let k = t.len();
    budget.check_states(k)?;
    let size = 1usize << k;
    let one = S::one() - S::lit(cfg.eps_one);
    let mut cells = vec![false; size * size];
    for b in 0..size {
        let up = brute_power_upper(t, n, &Gamble::indicator(k, StateSet::from_bits(b as u64)), budget)?;
        for a in 0..size {
            cells[(a << k) | b] = StateSet::from_bits(a as u64).iter().all(|x| up[x] >= one);
        }
    }
    Ok(TauTable { n: k, cells })
}

/// Inclusion-minimal non-empty `B` with `B ⇒ⁿ B` for some `1 <= n <= 2^|X|`.
pub fn brute_minimal_permanent<S: Real>(t: &Ito<S>, cfg: &Config, budget: &OracleBudget) -> Result<Vec<StateSet>> {
    let k = t.len();
    let one_step = brute_tau(t, 1, cfg, budget)?;
    let size = 1usize << k;
    let mut self_access = vec![false; size];
    let mut power = one_step.clone();
    for _ in 0..size {
        for (b, hit) in self_access.iter_mut().enumerate() {
            let s = StateSet::from_bits(b as u64);
            *hit |= power.get(s, s);
        }
        power = power.compose(&one_step);
    }
    let candidates: Vec<StateSet> =
        (1..size).filter(|&b| self_access[b]).map(|b| StateSet::from_bits(b as u64)).collect();
    let mut out: Vec<StateSet> = candidates
        .iter()
        .copied()
        .filter(|b| !candidates.iter().any(|c| c != b && c.is_subset(*b)))
        .collect();
    out.sort();
    Ok(out)
}

/// Closed communicating classes of a precise chain, from a transitive closure
/// of the positive-entry graph.
#[allow(clippy::needless_range_loop)]
pub fn classical_recurrent_classes<S: Real>(t: &Ito<S>) -> Result<Vec<StateSet>> {
    let n = t.len();
    let mut m: Vec<Vec<S>> = Vec::with_capacity(n);
    for row in t.rows() {
        match row {
            CredalRow::Vertices(vs) if vs.len() == 1 => m.push(vs[0].clone()),
            _ => return Err(Error::NotPrecise),
        }
    }
    let mut reach: Vec<Vec<bool>> =
        (0..n).map(|x| (0..n).map(|y| x == y || m[x][y] > S::zero()).collect()).collect();
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let mut out: Vec<StateSet> = Vec::new();
    for x in 0..n {
        let class = StateSet::from_indices((0..n).filter(|&y| reach[x][y] && reach[y][x]));
        let closed = (0..n).all(|y| !reach[x][y] || class.contains(y));
        if closed && !out.contains(&class) {
            out.push(class);
        }
    }
    out.sort();
    Ok(out)
}

/// Sampler for small random operators used by the cross-checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomModel {
    pub min_states: usize,
    pub max_states: usize,
    pub max_vertices_per_row: usize,
    /// Probability that a row is given in interval form.
    pub interval_rate: f64,
    /// Probability that a row is a single mass function.
    pub precise_rate: f64,
    /// Probability that a state gets zero weight in a sampled mass function.
    pub zero_rate: f64,
}

impl Default for RandomModel {
    fn default() -> Self {
        Self {
            min_states: 1,
            max_states: 4,
            max_vertices_per_row: 3,
            interval_rate: 0.3,
            precise_rate: 0.3,
            zero_rate: 0.45,
        }
    }
}

impl RandomModel {
    pub fn precise_only(min_states: usize, max_states: usize) -> Self {
        Self { min_states, max_states, interval_rate: 0.0, precise_rate: 1.0, ..Self::default() }
    }

    /// A mass function on `n` states; at least one entry is positive.
    pub fn mass_function<R: Rng>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        let mut w: Vec<f64> =
            (0..n).map(|_| if rng.gen_bool(self.zero_rate) { 0.0 } else { rng.gen_range(0.05..1.0) }).collect();
        if w.iter().all(|&v| v == 0.0) {
            w[rng.gen_range(0..n)] = 1.0;
        }
        let total: f64 = w.iter().sum();
        w.iter().map(|v| v / total).collect()
    }

    fn interval_row<R: Rng>(&self, rng: &mut R, n: usize) -> Option<CredalRow<f64>> {
        let p = self.mass_function(rng, n);
        let spread = rng.gen_range(0.05..0.6);
        let lower: Vec<f64> = p.iter().map(|v| v * (1.0 - spread)).collect();
        let upper: Vec<f64> = p.iter().map(|v| (v * (1.0 + spread)).min(1.0)).collect();
        let row = CredalRow::from_interval(IntervalRow::new(lower, upper).ok()?).ok()?;
        match &row {
            CredalRow::Interval(r) if interval_vertices(r.lower(), r.upper()).len() <= self.max_vertices_per_row => {
                Some(row)
            }
            _ => None,
        }
    }

    pub fn row<R: Rng>(&self, rng: &mut R, n: usize) -> CredalRow<f64> {
        if rng.gen_bool(self.interval_rate) {
            if let Some(r) = self.interval_row(rng, n) {
                return r;
            }
        }
        let k = if rng.gen_bool(self.precise_rate) { 1 } else { rng.gen_range(1..=self.max_vertices_per_row) };
        let vs = (0..k).map(|_| self.mass_function(rng, n)).collect();
        CredalRow::from_vertices(n, vs).expect("sampled mass functions are valid")
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Ito<f64> {
        let n = rng.gen_range(self.min_states..=self.max_states);
        self.sample_with_states(rng, n)
    }

    pub fn sample_with_states<R: Rng>(&self, rng: &mut R, n: usize) -> Ito<f64> {
        let rows = (0..n).map(|_| self.row(rng, n)).collect();
        Ito::new(StateSpace::numbered(n).expect("non-empty"), rows).expect("square operator")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn set(ix: &[usize]) -> StateSet {
        StateSet::from_indices(ix.iter().copied())
    }

    fn precise(m: Vec<Vec<f64>>) -> Ito<f64> {
        let n = m.len();
        Ito::precise(StateSpace::numbered(n).unwrap(), m).unwrap()
    }

    fn two_state() -> Ito<f64> {
        precise(vec![vec![1.0, 0.0], vec![0.5, 0.5]])
    }

    fn swap() -> Ito<f64> {
        precise(vec![vec![0.0, 1.0], vec![1.0, 0.0]])
    }

    #[test]
    fn permutations_count() {
        assert_eq!(permutations(4).len(), 24);
        assert_eq!(permutations(0).len(), 1);
    }

    #[test]
    fn interval_vertex_example() {
        let v = interval_vertices::<f64>(&[0.2, 0.4], &[0.6, 0.8]);
        assert_eq!(v.len(), 2);
        assert!(v.iter().any(|p| (p[0] - 0.2).abs() < 1e-12 && (p[1] - 0.8).abs() < 1e-12));
        assert!(v.iter().any(|p| (p[0] - 0.6).abs() < 1e-12 && (p[1] - 0.4).abs() < 1e-12));
    }

    #[test]
    fn power_upper_examples() {
        let b = OracleBudget::default();
        let t = two_state();
        let f = Gamble::from_f64(&[1.0, 0.0]).unwrap();
        assert_eq!(brute_power_upper(&t, 0, &f, &b).unwrap(), f);
        assert_eq!(brute_power_upper(&t, 2, &f, &b).unwrap().values(), &[1.0, 0.75]);
        assert!(matches!(brute_power_upper(&t, 5, &f, &b), Err(Error::BudgetExceeded(_))));
    }

    #[test]
    fn budget_rejects_wide_rows() {
        let row = CredalRow::<f64>::from_interval(IntervalRow::vacuous(4)).unwrap();
        let t = Ito::new(StateSpace::numbered(4).unwrap(), vec![row.clone(), row.clone(), row.clone(), row])
            .unwrap();
        assert!(matches!(row_vertex_lists(&t, &OracleBudget::default()), Err(Error::BudgetExceeded(_))));
        let wide = OracleBudget { max_vertices_per_row: 4, ..OracleBudget::default() };
        assert_eq!(row_vertex_lists(&t, &wide).unwrap()[0].len(), 4);
    }

    #[test]
    fn tau_examples() {
        let cfg = Config::default();
        let b = OracleBudget::default();
        let s = swap();
        assert!(brute_tau(&s, 2, &cfg, &b).unwrap().get(set(&[0]), set(&[0])));
        assert!(!brute_tau(&s, 1, &cfg, &b).unwrap().get(set(&[0, 1]), set(&[0])));
        let t = brute_tau(&two_state(), 1, &cfg, &b).unwrap();
        for a in StateSet::all_subsets(2) {
            assert!(t.get(a, StateSet::full(2)));
        }
    }

    #[test]
    fn minimal_permanent_examples() {
        let cfg = Config::default();
        let b = OracleBudget::default();
        assert_eq!(brute_minimal_permanent(&two_state(), &cfg, &b).unwrap(), vec![set(&[0])]);
        assert_eq!(brute_minimal_permanent(&swap(), &cfg, &b).unwrap(), vec![set(&[0]), set(&[1])]);
        let vac = Ito::new(
            StateSpace::numbered(3).unwrap(),
            vec![CredalRow::<f64>::vacuous(3), CredalRow::vacuous(3), CredalRow::vacuous(3)],
        )
        .unwrap();
        assert_eq!(brute_minimal_permanent(&vac, &cfg, &b).unwrap(), vec![set(&[0]), set(&[1]), set(&[2])]);
    }

    #[test]
    fn classical_examples() {
        assert_eq!(classical_recurrent_classes(&two_state()).unwrap(), vec![set(&[0])]);
        assert_eq!(classical_recurrent_classes(&swap()).unwrap(), vec![set(&[0, 1])]);
        let id = precise(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
        assert_eq!(classical_recurrent_classes(&id).unwrap(), vec![set(&[0]), set(&[1]), set(&[2])]);
        let imprecise = Ito::new(StateSpace::numbered(2).unwrap(), vec![CredalRow::<f64>::vacuous(2), CredalRow::vacuous(2)])
            .unwrap();
        assert_eq!(classical_recurrent_classes(&imprecise), Err(Error::NotPrecise));
    }

    #[test]
    fn random_models_respect_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let gen = RandomModel::default();
        for _ in 0..50 {
            let t = gen.sample(&mut rng);
            assert!((1..=4).contains(&t.len()));
            row_vertex_lists(&t, &OracleBudget::default()).unwrap();
        }
        let p = RandomModel::precise_only(2, 5).sample(&mut rng);
        assert!(p.is_precise());
    }
}
