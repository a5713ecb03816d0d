//! Weak accessibility: `x` leads to `y` when the upper probability of
//! reaching `y` from `x` is strictly positive.
//!
//! Communication classes are the strongly connected components of the
//! one-step access graph. A class is regular when its period is one, which
//! for a strongly connected component is the same as all pairs being
//! accessible at every sufficiently large step count.

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::error::{Error, Result};
use crate::model::{Config, Gamble, StateSet};
use crate::scalar::Real;
use crate::transition::Ito;

/// One-step access graph: `x -> y` iff the upper probability of `{y}` from `x`
/// exceeds `eps_pos`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessGraph {
    succ: Vec<StateSet>,
}

impl AccessGraph {
    pub fn from_successors(succ: Vec<StateSet>) -> Self {
        Self { succ }
    }

    pub fn len(&self) -> usize {
        self.succ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.succ.is_empty()
    }

    pub fn successors(&self, x: usize) -> StateSet {
        self.succ[x]
    }

    pub fn has_edge(&self, x: usize, y: usize) -> bool {
        self.succ[x].contains(y)
    }

    /// Edges in `(from, to)` order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.succ
            .iter()
            .enumerate()
            .flat_map(|(x, s)| s.iter().map(move |y| (x, y)))
            .collect()
    }

    fn step(&self, from: StateSet) -> StateSet {
        from.iter().fold(StateSet::empty(), |acc, x| acc.union(self.succ[x]))
    }

    /// States reachable from `set` in zero or more steps.
    pub fn closure(&self, set: StateSet) -> StateSet {
        let mut seen = set;
        let mut frontier = set;
        while !frontier.is_empty() {
            frontier = self.step(frontier).difference(seen);
            seen = seen.union(frontier);
        }
        seen
    }

    fn check_state(&self, x: usize) -> Result<()> {
        if x < self.len() {
            Ok(())
        } else {
            Err(Error::UnknownState(format!("#{x}")))
        }
    }
}

pub fn access_graph<S: Real>(t: &Ito<S>, cfg: &Config) -> AccessGraph {
    let n = t.len();
    let succ = (0..n)
        .map(|x| {
            StateSet::from_indices((0..n).filter(|&y| {
                let e = Gamble::<S>::indicator(n, StateSet::singleton(y));
                cfg.positive(t.row(x).upper_unchecked(&e))
            }))
        })
        .collect();
    AccessGraph { succ }
}

/// With `steps = Some(n)`: a walk of exactly `n` edges from `x` to `y` exists.
/// With `None`: the reflexive-transitive closure.
pub fn accessible(graph: &AccessGraph, x: usize, y: usize, steps: Option<usize>) -> Result<bool> {
    graph.check_state(x)?;
    graph.check_state(y)?;
    let start = StateSet::singleton(x);
    Ok(match steps {
        Some(n) => (0..n).fold(start, |s, _| graph.step(s)).contains(y),
        None => graph.closure(start).contains(y),
    })
}

/// No edge leaves `c`.
pub fn is_absorbing(graph: &AccessGraph, c: StateSet) -> bool {
    c.iter().all(|x| graph.succ[x].is_subset(c))
}

/// One communication class with its cyclic structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommClass {
    pub states: StateSet,
    /// Gcd of the cycle lengths inside the class; `None` without any cycle.
    pub period: Option<usize>,
    pub regular: bool,
    /// Smallest `r` with all pairs accessible in exactly `n` steps for every `n >= r`.
    pub regularity_witness: Option<usize>,
    /// The class together with everything it leads to; always absorbing.
    pub closure: StateSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub classes: Vec<CommClass>,
    /// Leads-to edges between distinct classes, as indices into `classes`.
    pub dag: Vec<(usize, usize)>,
    pub maximal: Vec<usize>,
    pub top: Option<usize>,
    /// Smallest `n <= |X|` with the lower probability of the top class
    /// positive after `n` steps from every outside state.
    pub regular_absorption_witness: Option<usize>,
    pub eps_pos: f64,
    pub eps_one: f64,
}

impl Classification {
    pub fn regularly_absorbing(&self) -> bool {
        self.regular_absorption_witness.is_some()
    }

    pub fn class_of(&self, x: usize) -> Option<usize> {
        self.classes.iter().position(|c| c.states.contains(x))
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn period(graph: &AccessGraph, class: StateSet) -> Option<usize> {
    let n = graph.len();
    let root = class.first()?;
    let mut level = vec![usize::MAX; n];
    level[root] = 0;
    let mut queue = std::collections::VecDeque::from([root]);
    let mut p = 0usize;
    while let Some(u) = queue.pop_front() {
        for v in graph.succ[u].intersection(class).iter() {
            if level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            } else {
                p = gcd(p, (level[u] + 1).abs_diff(level[v]));
            }
        }
    }
    (p > 0).then_some(p)
}

fn regularity_witness(graph: &AccessGraph, class: StateSet) -> Option<usize> {
    let k = class.len();
    let bound = (k - 1) * (k - 1) + 1;
    let mut reach: Vec<StateSet> = class.iter().map(StateSet::singleton).collect();
    for m in 1..=bound {
        reach = reach.iter().map(|&s| graph.step(s).intersection(class)).collect();
        if reach.iter().all(|&s| s == class) {
            return Some(m);
        }
    }
    None
}

pub fn classify<S: Real>(t: &Ito<S>, cfg: &Config) -> Classification {
    let graph = access_graph(t, cfg);
    let n = graph.len();
    let mut g = DiGraph::<usize, ()>::with_capacity(n, 0);
    let nodes: Vec<_> = (0..n).map(|x| g.add_node(x)).collect();
    for (x, y) in graph.edges() {
        g.add_edge(nodes[x], nodes[y], ());
    }
    let mut sets: Vec<StateSet> = tarjan_scc(&g)
        .into_iter()
        .map(|comp| StateSet::from_indices(comp.into_iter().map(|ix| g[ix])))
        .collect();
    sets.sort();

    let class_of = |x: usize| sets.iter().position(|c| c.contains(x)).expect("partition");
    let mut dag = Vec::new();
    for (i, c) in sets.iter().enumerate() {
        let out = graph.step(*c).difference(*c);
        let mut targets: Vec<usize> = out.iter().map(class_of).collect();
        targets.sort_unstable();
        targets.dedup();
        dag.extend(targets.into_iter().map(|j| (i, j)));
    }
    let classes: Vec<CommClass> = sets
        .iter()
        .map(|&states| {
            let period = period(&graph, states);
            let regular = period == Some(1);
            CommClass {
                states,
                period,
                regular,
                regularity_witness: if regular { regularity_witness(&graph, states) } else { None },
                closure: graph.closure(states),
            }
        })
        .collect();
    let maximal: Vec<usize> = (0..classes.len()).filter(|&i| !dag.iter().any(|&(a, _)| a == i)).collect();
    let top = (maximal.len() == 1).then(|| maximal[0]);

    let regular_absorption_witness = top.filter(|&r| classes[r].regular).and_then(|r| {
        let top_set = classes[r].states;
        let outside = top_set.complement(n);
        let mut g = Gamble::<S>::indicator(n, top_set);
        (1..=n).find(|_| {
            g = t.lower_unchecked(&g);
            outside.iter().all(|y| cfg.positive(g[y]))
        })
    });

    Classification {
        classes,
        dag,
        maximal,
        top,
        regular_absorption_witness,
        eps_pos: cfg.eps_pos,
        eps_one: cfg.eps_one,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::credal::{CredalRow, IntervalRow};
    use crate::model::StateSpace;

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

    fn leaky_blocks() -> Ito<f64> {
        let iv = || {
            CredalRow::from_interval(
                IntervalRow::from_f64(&[0.0, 0.0, 0.3, 0.3], &[0.2, 0.2, 0.7, 0.7]).unwrap(),
            )
            .unwrap()
        };
        Ito::new(
            StateSpace::numbered(4).unwrap(),
            vec![
                CredalRow::precise(vec![0.5, 0.5, 0.0, 0.0]).unwrap(),
                CredalRow::precise(vec![0.5, 0.5, 0.0, 0.0]).unwrap(),
                iv(),
                iv(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn access_graph_examples() {
        let cfg = Config::default();
        assert_eq!(access_graph(&two_state(), &cfg).edges(), vec![(0, 0), (1, 0), (1, 1)]);
        assert_eq!(access_graph(&swap(), &cfg).edges(), vec![(0, 1), (1, 0)]);
        let vac = Ito::new(
            StateSpace::numbered(3).unwrap(),
            vec![CredalRow::<f64>::vacuous(3), CredalRow::vacuous(3), CredalRow::vacuous(3)],
        )
        .unwrap();
        assert_eq!(access_graph(&vac, &cfg).edges().len(), 9);
    }

    #[test]
    fn accessible_examples() {
        let cfg = Config::default();
        let s = access_graph(&swap(), &cfg);
        assert!(accessible(&s, 0, 0, Some(2)).unwrap());
        assert!(!accessible(&s, 0, 0, Some(1)).unwrap());
        assert!(accessible(&s, 0, 0, Some(0)).unwrap());
        let t = access_graph(&two_state(), &cfg);
        assert!(!accessible(&t, 0, 1, None).unwrap());
        for n in 0..6 {
            assert!(!accessible(&t, 0, 1, Some(n)).unwrap());
        }
        assert!(matches!(accessible(&t, 0, 5, None), Err(Error::UnknownState(_))));
    }

    #[test]
    fn absorbing_examples() {
        let cfg = Config::default();
        let t = access_graph(&two_state(), &cfg);
        assert!(is_absorbing(&t, StateSet::singleton(0)));
        assert!(!is_absorbing(&t, StateSet::singleton(1)));
        assert!(is_absorbing(&t, StateSet::full(2)));
    }

    #[test]
    fn classify_two_state() {
        let c = classify(&two_state(), &Config::default());
        assert_eq!(
            c.classes.iter().map(|c| c.states).collect::<Vec<_>>(),
            vec![StateSet::singleton(0), StateSet::singleton(1)]
        );
        assert_eq!(c.top, Some(0));
        assert!(c.classes[0].regular);
        assert_eq!(c.classes[0].regularity_witness, Some(1));
        assert_eq!(c.regular_absorption_witness, Some(1));
        assert_eq!(c.dag, vec![(1, 0)]);
    }

    #[test]
    fn classify_swap_is_periodic() {
        let c = classify(&swap(), &Config::default());
        assert_eq!(c.classes.len(), 1);
        assert_eq!(c.classes[0].period, Some(2));
        assert!(!c.classes[0].regular);
        assert!(!c.regularly_absorbing());
    }

    #[test]
    fn classify_leaky_blocks() {
        let c = classify(&leaky_blocks(), &Config::default());
        let top = c.top.expect("top class");
        assert_eq!(c.classes[top].states, StateSet::from_indices([0, 1]));
        assert!(c.classes[top].regular);
        assert!(!c.regularly_absorbing());
    }

    #[test]
    fn transient_state_without_cycle() {
        let t = precise(vec![vec![0.0, 1.0], vec![0.0, 1.0]]);
        let c = classify(&t, &Config::default());
        let k = c.class_of(0).unwrap();
        assert_eq!(c.classes[k].period, None);
        assert!(!c.classes[k].regular);
        assert_eq!(c.regular_absorption_witness, Some(1));
    }

    #[test]
    fn no_top_class_with_two_absorbing_states() {
        let t = precise(vec![vec![1.0, 0.0, 0.0], vec![0.5, 0.0, 0.5], vec![0.0, 0.0, 1.0]]);
        let c = classify(&t, &Config::default());
        assert_eq!(c.maximal.len(), 2);
        assert_eq!(c.top, None);
        assert!(!c.regularly_absorbing());
    }
}
