use imc_core::credal::{coherence_normalize, CredalRow, IefHandle, IntervalRow};
use imc_core::invariant::{
    classify_convergence, invariant_on_class, least_committal_invariant, s_of, test_family, Verdict,
};
use imc_core::model::Gamble;
use imc_core::oracle::{
    brute_minimal_permanent, brute_power_upper, brute_tau, classical_recurrent_classes, interval_vertices,
    OracleBudget, RandomModel,
};
use imc_core::strong::{
    minimal_permanent_classes, psi_function, star_psi_tau, star_tau_tau, SetFunction, SetRelation, StrongLattice,
};
use imc_core::transition::{evolve, Ito};
use imc_core::weak::{access_graph, accessible, classify, is_absorbing};
use imc_core::{Config, Error, StateSet};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn model(seed: u64) -> (Ito<f64>, ChaCha8Rng) {
    let mut r = rng(seed);
    let t = RandomModel::default().sample(&mut r);
    (t, r)
}

fn gamble(r: &mut ChaCha8Rng, n: usize) -> Gamble<f64> {
    Gamble::new((0..n).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn random_handle(r: &mut ChaCha8Rng, n: usize) -> IefHandle<f64> {
    let gen = RandomModel::default();
    match r.gen_range(0..3) {
        0 => IefHandle::precise(gen.mass_function(r, n)).unwrap(),
        1 => IefHandle::vertex_set(n, (0..2).map(|_| gen.mass_function(r, n)).collect()).unwrap(),
        _ => {
            let s = StateSet::from_indices((0..n).filter(|_| r.gen_bool(0.5)));
            IefHandle::vacuous_on(if s.is_empty() { StateSet::singleton(0) } else { s }).unwrap()
        }
    }
}

/// ψ of `E T^n`, read off the upper values of pushed-back indicators.
fn psi_after(e: &IefHandle<f64>, t: &Ito<f64>, steps: usize, cfg: &Config) -> SetFunction {
    let n = t.len();
    let sets = StateSet::all_subsets(n)
        .filter(|&a| {
            let g = t.power_upper(steps, &Gamble::indicator(n, a)).unwrap();
            e.upper(&g).unwrap() >= 1.0 - cfg.eps_one
        })
        .collect();
    SetFunction::from_minimal(n, sets)
}

/// τ of the composite `T S` computed directly from the operators.
fn tau_direct(t: &Ito<f64>, s: &Ito<f64>, cfg: &Config, a: StateSet, b: StateSet) -> bool {
    let n = t.len();
    let g = t.apply_upper(&s.apply_upper(&Gamble::indicator(n, b)).unwrap()).unwrap();
    a.iter().all(|x| g[x] >= 1.0 - cfg.eps_one)
}

fn absorbing_sets(t: &Ito<f64>, cfg: &Config) -> Vec<StateSet> {
    let g = access_graph(t, cfg);
    StateSet::all_subsets(t.len()).filter(|s| !s.is_empty() && is_absorbing(&g, *s)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn conjugacy_and_expectation_bounds(seed in any::<u64>()) {
        let (t, mut r) = model(seed);
        let n = t.len();
        let f = gamble(&mut r, n);
        let h = gamble(&mut r, n);
        let up = t.apply_upper(&f).unwrap();
        let lo = t.apply_lower(&f).unwrap();
        let neg = t.apply_upper(&f.neg()).unwrap();
        let c = r.gen_range(-2.0..2.0);
        let lam = r.gen_range(0.0..3.0);
        for x in 0..n {
            prop_assert!((lo[x] + neg[x]).abs() <= 1e-12);
            prop_assert!(lo[x] <= up[x] + 1e-12);
            prop_assert!(up[x] <= f.max() + 1e-12 && lo[x] >= f.min() - 1e-12);
            let sub = t.apply_upper(&f.add(&h)).unwrap()[x];
            prop_assert!(sub <= up[x] + t.apply_upper(&h).unwrap()[x] + 1e-12);
            prop_assert!((t.apply_upper(&f.shift(c)).unwrap()[x] - up[x] - c).abs() <= 1e-12);
            prop_assert!((t.apply_upper(&f.scale(lam)).unwrap()[x] - lam * up[x]).abs() <= 1e-12);
        }
        let k = t.apply_upper(&Gamble::constant(n, c)).unwrap();
        prop_assert!(k.iter().all(|v| (v - c).abs() <= 1e-12));
    }

    #[test]
    fn greedy_matches_vertex_oracle(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(1..=5);
        let p = RandomModel::default().mass_function(&mut r, n);
        let spread = r.gen_range(0.0..0.8);
        let row = IntervalRow::new(
            p.iter().map(|v| v * (1.0 - spread)).collect(),
            p.iter().map(|v| (v * (1.0 + spread) + 0.05).min(1.0)).collect(),
        ).unwrap();
        let norm = coherence_normalize(&row).unwrap();
        prop_assert_eq!(&coherence_normalize(&norm).unwrap(), &norm);
        let oracle = interval_vertices(norm.lower(), norm.upper());
        let cr = CredalRow::from_interval(row).unwrap();
        let main = cr.vertices(4096).unwrap();
        prop_assert_eq!(main.len(), oracle.len());
        for v in &main {
            prop_assert!(oracle.iter().any(|o| o.iter().zip(v).all(|(a, b)| (a - b).abs() <= 1e-9)));
        }
        for _ in 0..8 {
            let f = gamble(&mut r, n);
            let best = oracle.iter().map(|o| o.iter().zip(f.iter()).map(|(a, b)| a * b).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max);
            prop_assert!((cr.upper(&f).unwrap() - best).abs() <= 1e-12);
        }
    }

    #[test]
    fn power_apply_matches_brute_force(seed in any::<u64>()) {
        let (t, mut r) = model(seed);
        let f = gamble(&mut r, t.len());
        let budget = OracleBudget::default();
        for n in 0..=4 {
            let main = t.power_apply(n, &f).unwrap();
            let brute = brute_power_upper(&t, n, &f, &budget).unwrap();
            for x in 0..t.len() {
                prop_assert!((main.upper()[x] - brute[x]).abs() <= 1e-9);
                prop_assert!(main.lower()[x] <= main.upper()[x] + 1e-12);
                prop_assert!(main.upper()[x] <= f.max() + 1e-12 && main.lower()[x] >= f.min() - 1e-12);
            }
        }
    }

    #[test]
    fn materialized_power_matches_recursion(seed in any::<u64>()) {
        let (t, mut r) = model(seed);
        let cfg = Config::default();
        for k in 1..=3 {
            let m = match t.materialize_power(k, &cfg) {
                Ok(m) => m,
                Err(Error::VertexBudgetExceeded { .. }) => continue,
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            };
            for _ in 0..4 {
                let f = gamble(&mut r, t.len());
                let rec = t.power_upper(k, &f).unwrap();
                let mat = m.apply_upper(&f).unwrap();
                for x in 0..t.len() {
                    prop_assert!((rec[x] - mat[x]).abs() <= 1e-9);
                }
            }
            for row in m.rows() {
                for p in row {
                    prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
                    prop_assert!(p.iter().all(|&v| v >= 0.0));
                }
            }
        }
    }

    #[test]
    fn graph_access_matches_operator(seed in any::<u64>()) {
        let (t, _) = model(seed);
        let cfg = Config::default();
        let g = access_graph(&t, &cfg);
        let n = t.len();
        for y in 0..n {
            for steps in 0..=4 {
                let up = t.power_apply(steps, &Gamble::indicator(n, StateSet::singleton(y))).unwrap();
                for x in 0..n {
                    prop_assert_eq!(accessible(&g, x, y, Some(steps)).unwrap(), up.upper()[x] > cfg.eps_pos);
                }
            }
        }
    }

    #[test]
    fn class_closures_are_absorbing(seed in any::<u64>()) {
        let (t, _) = model(seed);
        let cfg = Config::default();
        let c = classify(&t, &cfg);
        let g = access_graph(&t, &cfg);
        for class in &c.classes {
            prop_assert!(is_absorbing(&g, class.closure));
        }
        let union = c.classes.iter().fold(StateSet::empty(), |a, k| a.union(k.states));
        prop_assert_eq!(union, StateSet::full(t.len()));
        prop_assert_eq!(c.top.is_some(), c.maximal.len() == 1);
    }

    #[test]
    fn composition_laws(seed in any::<u64>()) {
        let (t, mut r) = model(seed);
        let n = t.len();
        let cfg = Config::default();
        let s = RandomModel::default().sample_with_states(&mut r, n);
        let e = random_handle(&mut r, n);
        let tau_t = SetRelation::of(&t, &cfg).unwrap();
        let tau_s = SetRelation::of(&s, &cfg).unwrap();
        let ts = star_tau_tau(&tau_t, &tau_s).unwrap();
        for a in StateSet::all_subsets(n) {
            for b in StateSet::all_subsets(n) {
                prop_assert_eq!(ts.value(a, b), tau_direct(&t, &s, &cfg, a, b));
            }
        }
        let mut psi = psi_function(&e, n, &cfg).unwrap();
        for steps in 1..=3 {
            psi = star_psi_tau(&psi, &tau_t).unwrap();
            let direct = psi_after(&e, &t, steps, &cfg);
            for a in StateSet::all_subsets(n) {
                prop_assert_eq!(psi.value(a), direct.value(a));
            }
        }
        if let Ok(m2) = t.materialize_power(2, &cfg) {
            let squared = SetRelation::of(&m2.to_ito(t.space().clone()).unwrap(), &cfg).unwrap();
            let tt = star_tau_tau(&tau_t, &tau_t).unwrap();
            for a in StateSet::all_subsets(n) {
                for b in StateSet::all_subsets(n) {
                    prop_assert_eq!(squared.value(a, b), tt.value(a, b));
                }
            }
        }
    }

    #[test]
    fn tau_monotonicity_bundle(seed in any::<u64>()) {
        let (t, mut r) = model(seed);
        let n = t.len();
        let cfg = Config::default();
        let tau = SetRelation::of(&t, &cfg).unwrap();
        let all: Vec<StateSet> = StateSet::all_subsets(n).collect();
        for &a in &all {
            for &b in &all {
                if !tau.value(a, b) {
                    continue;
                }
                for &c in &all {
                    for &d in &all {
                        if c.is_subset(a) && b.is_subset(d) {
                            prop_assert!(tau.value(c, d));
                        }
                    }
                }
            }
        }
        for &a1 in &all {
            for &a2 in &all {
                for &b in &all {
                    prop_assert_eq!(tau.value(a1.union(a2), b), tau.value(a1, b) && tau.value(a2, b));
                }
            }
        }
        let psi = psi_function(&random_handle(&mut r, n), n, &cfg).unwrap();
        for &a in &all {
            for &b in &all {
                if a.is_subset(b) && psi.value(a) {
                    prop_assert!(psi.value(b));
                }
            }
        }
    }

    #[test]
    fn tau_powers_match_brute_force(seed in any::<u64>()) {
        let (t, _) = model(seed);
        let n = t.len();
        let cfg = Config::default();
        let budget = OracleBudget::default();
        let one = SetRelation::of(&t, &cfg).unwrap();
        let mut power = one.clone();
        for steps in 1..=3 {
            let brute = brute_tau(&t, steps, &cfg, &budget).unwrap();
            for a in StateSet::all_subsets(n) {
                for b in StateSet::all_subsets(n) {
                    prop_assert_eq!(power.value(a, b), brute.get(a, b));
                }
            }
            power = star_tau_tau(&power, &one).unwrap();
        }
    }

    #[test]
    fn minimal_permanent_matches_brute_force(seed in any::<u64>()) {
        let (t, _) = model(seed);
        let cfg = Config::default();
        let main = minimal_permanent_classes(&t, &cfg).unwrap();
        prop_assert_eq!(&main, &brute_minimal_permanent(&t, &cfg, &OracleBudget::default()).unwrap());
        prop_assert!(!main.is_empty());
        let lattice = StrongLattice::new(&t, &cfg).unwrap();
        for b in &main {
            prop_assert!(lattice.is_permanent(*b).unwrap());
            for s in absorbing_sets(&t, &cfg) {
                let i = b.intersection(s);
                prop_assert!(i == *b || i.is_empty());
            }
        }
        prop_assert!(lattice.is_permanent(StateSet::full(t.len())).unwrap());
    }

    #[test]
    fn precise_chains_match_classical_classes(seed in any::<u64>()) {
        let mut r = rng(seed);
        let t = RandomModel::precise_only(1, 5).sample(&mut r);
        let cfg = Config::default();
        let classes = minimal_permanent_classes(&t, &cfg).unwrap();
        let closed = classical_recurrent_classes(&t).unwrap();
        let recurrent = closed.iter().fold(StateSet::empty(), |a, c| a.union(*c));
        for b in &classes {
            prop_assert!(b.is_subset(recurrent));
            prop_assert!(closed.iter().any(|c| b.is_subset(*c)));
        }
        for c in &closed {
            let inside = classes.iter().filter(|b| b.is_subset(*c)).fold(StateSet::empty(), |a, b| a.union(*b));
            prop_assert_eq!(inside, *c);
        }
    }

    #[test]
    fn monotone_psi_propagation(seed in any::<u64>()) {
        let (t, mut r) = model(seed);
        let n = t.len();
        let cfg = Config::default();
        let e = random_handle(&mut r, n);
        let lattice = StrongLattice::new(&t, &cfg).unwrap();
        for a in StateSet::all_subsets(n) {
            for b in StateSet::all_subsets(n) {
                for steps in 1..=3 {
                    if lattice.strongly_leads(a, b, Some(steps)).unwrap() {
                        let pushed = t.power_upper(steps, &Gamble::indicator(n, b)).unwrap();
                        prop_assert!(e.upper(&pushed).unwrap() >= e.upper(&Gamble::indicator(n, a)).unwrap() - 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn indicator_absorption_identity(seed in any::<u64>()) {
        let (t, mut r) = model(seed);
        let n = t.len();
        let cfg = Config::default();
        let f = gamble(&mut r, n);
        for a in absorbing_sets(&t, &cfg) {
            for steps in 0..=4 {
                let full = t.power_apply(steps, &f).unwrap();
                let cut = t.power_apply(steps, &f.restrict(a)).unwrap();
                for x in a.iter() {
                    prop_assert!((full.upper()[x] - cut.upper()[x]).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn mixture_compatibility(seed in any::<u64>()) {
        let (t, mut r) = model(seed);
        let n = t.len();
        let e = random_handle(&mut r, n);
        let h = random_handle(&mut r, n);
        let w = r.gen_range(0.0..1.0);
        let mix = IefHandle::mixture(vec![(w, e.clone()), (1.0 - w, h.clone())]).unwrap();
        let f = gamble(&mut r, n);
        for steps in 0..=3 {
            let (ml, mu) = evolve(&mix, &t, steps, &f).unwrap();
            let (el, eu) = evolve(&e, &t, steps, &f).unwrap();
            let (hl, hu) = evolve(&h, &t, steps, &f).unwrap();
            prop_assert!((ml - (w * el + (1.0 - w) * hl)).abs() <= 1e-12);
            prop_assert!((mu - (w * eu + (1.0 - w) * hu)).abs() <= 1e-12);
        }
    }

    #[test]
    fn essential_maximum_bounds(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(1..=5);
        let cfg = Config::default();
        let e = random_handle(&mut r, n);
        let f = gamble(&mut r, n);
        let ess = e.ess_max(&f, &cfg).unwrap();
        prop_assert!(ess <= f.max() && ess >= f.min());
        prop_assert!(e.lower(&f).unwrap() <= ess + 1e-8);
        let m = e.m_value(n, &cfg).unwrap();
        prop_assert!(m > cfg.eps_pos && m <= 1.0 + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn limits_are_invariant_and_supported_on_absorbing_sets(seed in any::<u64>()) {
        let (t, _) = model(seed);
        let n = t.len();
        let cfg = Config::default();
        let family = test_family::<f64>(n, &cfg);
        let graph = access_graph(&t, &cfg);
        for s in absorbing_sets(&t, &cfg) {
            let m = least_committal_invariant(&t, s, &cfg).unwrap();
            prop_assert!(m.invariance_residual(&family).unwrap() <= 1e-8);
            let support = m.into_handle().support(n, &cfg).unwrap();
            prop_assert!(is_absorbing(&graph, support));
        }
        for b in minimal_permanent_classes(&t, &cfg).unwrap() {
            match invariant_on_class(&t, b, &cfg) {
                Ok(m) => prop_assert!(m.invariance_residual(&family).unwrap() <= 1e-8),
                Err(Error::RegularityCapExceeded { .. }) | Err(Error::VertexBudgetExceeded { .. }) => {}
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
        }
    }

    #[test]
    fn decided_runs_converge_to_the_least_committal_limit(seed in any::<u64>()) {
        let (t, mut r) = model(seed);
        let n = t.len();
        let cfg = Config { max_iter: 5_000, ..Config::default() };
        let e0 = random_handle(&mut r, n);
        let report = classify_convergence(&e0, &t, &cfg).unwrap();
        if report.all_decided() {
            prop_assert!(report.direct_residual.unwrap() <= 1e-6);
            prop_assert!(report.invariance_residual.unwrap() <= 1e-8);
            let other = IefHandle::vacuous_on(report.s_e).unwrap();
            prop_assert_eq!(s_of(&other, &t, &cfg).unwrap(), report.s_e);
            let again = classify_convergence(&other, &t, &cfg).unwrap();
            let (a, b) = (report.limit.unwrap(), again.limit.unwrap());
            for f in test_family::<f64>(n, &cfg) {
                prop_assert!((a.upper(&f).unwrap() - b.upper(&f).unwrap()).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn class_limits_bound_decided_runs_from_below(seed in any::<u64>()) {
        let (t, mut r) = model(seed);
        let n = t.len();
        let cfg = Config { max_iter: 400, ..Config::default() };
        let e0 = random_handle(&mut r, n);
        let report = classify_convergence(&e0, &t, &cfg).unwrap();
        let f = Gamble::new((0..n).map(|_| r.gen_range(0.0..1.0)).collect()).unwrap();
        for c in report.classes.iter().filter(|c| c.verdict == Verdict::One) {
            let m = match invariant_on_class(&t, c.class, &cfg) {
                Ok(m) => m,
                Err(_) => continue,
            };
            let target = m.upper(&f).unwrap();
            for steps in [cfg.max_iter / 2, cfg.max_iter] {
                prop_assert!(evolve(&e0, &t, steps, &f).unwrap().1 >= target - 1e-6);
            }
        }
    }
}

#[test]
fn vacuous_iteration_is_non_increasing() {
    let cfg = Config::default();
    let mut r = rng(11);
    for _ in 0..40 {
        let t = RandomModel::default().sample(&mut r);
        let n = t.len();
        for s in absorbing_sets(&t, &cfg) {
            let e = IefHandle::vacuous_on(s).unwrap();
            let f = gamble(&mut r, n);
            let mut prev = f64::INFINITY;
            for steps in 0..30 {
                let v = evolve(&e, &t, steps, &f).unwrap().1;
                assert!(v <= prev + 1e-12);
                prev = v;
            }
        }
    }
}

#[test]
fn single_precision_instantiation() {
    use imc_core::model::StateSpace;
    let cfg = Config { eps_conv: 1e-6, ..Config::default() };
    let t = Ito::<f32>::precise(StateSpace::new(["a", "b"]).unwrap(), vec![vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
    let f = Gamble::<f32>::indicator(2, StateSet::singleton(0));
    assert_eq!(t.power_apply(2, &f).unwrap().upper().values(), &[1.0f32, 0.75]);
    assert_eq!(minimal_permanent_classes(&t, &cfg).unwrap(), vec![StateSet::singleton(0)]);
    let m = least_committal_invariant(&t, StateSet::full(2), &cfg).unwrap();
    assert!((m.upper(&f).unwrap() - 1.0).abs() < 1e-5);
    let row = CredalRow::<f32>::from_interval(IntervalRow::new(vec![0.2, 0.3], vec![0.6, 0.8]).unwrap()).unwrap();
    assert!((row.upper(&Gamble::new(vec![1.0, 0.0]).unwrap()).unwrap() - 0.6).abs() < 1e-6);
}
