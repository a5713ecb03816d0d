use std::path::PathBuf;

use clap::ValueEnum;
use imc_core::invariant::{self, LimitKind, Verdict};
use imc_core::model::GambleInterval;
use imc_core::{strong, weak, Config, Gamble, IefHandle, LimitFunctional, StateSet};
use serde_json::{Map, Value};

use crate::error::{exit_code, CliError, CliResult, EXIT_BUDGET, EXIT_OK};
use crate::input::{self, Model};
use crate::report::*;

pub const DEFAULT_STEPS: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Validate,
    Classify,
    Permanent,
    Evolve,
    Invariant,
    Convergence,
    Report,
}

#[derive(Debug, Clone, Default)]
pub struct Options {
    pub model: PathBuf,
    pub gamble: Option<String>,
    pub steps: Option<usize>,
    pub initial: Option<String>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub max_strong_states: Option<usize>,
    /// Layered over the model's own config; the flags above still win.
    pub config_file: Option<PathBuf>,
}

impl Options {
    pub fn new(model: impl Into<PathBuf>) -> Self {
        Self { model: model.into(), ..Self::default() }
    }
}

/// Rendered JSON and the exit status it goes with (0, or 4 when warnings were raised).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub text: String,
    pub code: i32,
}

pub fn run(cmd: Command, opts: &Options) -> CliResult<Output> {
    match cmd {
        Command::Validate => cmd_validate(opts),
        Command::Classify => cmd_classify(opts),
        Command::Permanent => cmd_permanent(opts),
        Command::Evolve => cmd_evolve(opts),
        Command::Invariant => cmd_invariant(opts),
        Command::Convergence => cmd_convergence(opts),
        Command::Report => cmd_report(opts),
    }
}

pub fn cmd_validate(opts: &Options) -> CliResult<Output> {
    let model = input::read_model(&opts.model)?;
    Ok(Output { text: render(&model.normalized), code: EXIT_OK })
}

pub fn cmd_classify(opts: &Options) -> CliResult<Output> {
    let s = Session::open(opts)?;
    let mut r = s.report("classify");
    r.classification = Some(s.classification());
    Ok(finish(r))
}

pub fn cmd_permanent(opts: &Options) -> CliResult<Output> {
    let s = Session::open(opts)?;
    let mut r = s.report("permanent");
    r.permanent = s.permanent(&mut r.warnings)?;
    Ok(finish(r))
}

pub fn cmd_evolve(opts: &Options) -> CliResult<Output> {
    let s = Session::open(opts)?;
    let mut r = s.report("evolve");
    let Some(f) = &s.gamble else {
        return Err(CliError::Parse("evolve requires --gamble".into()));
    };
    r.evolve = Some(s.evolve(f)?);
    Ok(finish(r))
}

pub fn cmd_invariant(opts: &Options) -> CliResult<Output> {
    let s = Session::open(opts)?;
    let mut r = s.report("invariant");
    r.invariants = s.invariants(&mut r.warnings)?;
    Ok(finish(r))
}

pub fn cmd_convergence(opts: &Options) -> CliResult<Output> {
    let s = Session::open(opts)?;
    let mut r = s.report("convergence");
    r.convergence = s.convergence(&mut r.warnings)?;
    Ok(finish(r))
}

/// Every block in one report; `evolve` only when `--gamble` is given.
pub fn cmd_report(opts: &Options) -> CliResult<Output> {
    let s = Session::open(opts)?;
    let mut r = s.report("report");
    r.classification = Some(s.classification());
    r.permanent = s.permanent(&mut r.warnings)?;
    if let Some(f) = &s.gamble {
        r.evolve = Some(s.evolve(f)?);
    }
    r.convergence = s.convergence(&mut r.warnings)?;
    r.invariants = s.invariants(&mut r.warnings)?;
    Ok(finish(r))
}

fn finish(r: Report) -> Output {
    let code = if r.warnings.is_empty() { EXIT_OK } else { EXIT_BUDGET };
    Output { text: render(&r), code }
}

/// Budget errors become warnings and an empty section; anything else aborts.
fn section<T>(warnings: &mut Vec<String>, name: &str, r: imc_core::Result<T>) -> CliResult<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e) if exit_code(&e) == EXIT_BUDGET => {
            warnings.push(format!("{name}: {e}"));
            Ok(None)
        }
        Err(e) => Err(CliError::core(name, e)),
    }
}

struct Session {
    model: Model,
    cfg: Config,
    gamble: Option<Gamble>,
    initial: IefHandle,
    initial_name: String,
    steps: usize,
}

impl Session {
    fn open(opts: &Options) -> CliResult<Self> {
        let model = input::read_model(&opts.model)?;
        let env_layer = opts.config_file.as_deref().map(input::read_config_layer).transpose()?;
        let mut flags = Map::new();
        if let Some(t) = opts.tol {
            flags.insert("eps_conv".into(), Value::from(t));
        }
        if let Some(m) = opts.max_iter {
            flags.insert("max_iter".into(), Value::from(m));
        }
        if let Some(m) = opts.max_strong_states {
            flags.insert("max_strong_states".into(), Value::from(m));
        }
        let cfg = input::layered_config(
            model.normalized.config.iter().chain(env_layer.iter()).chain([&flags]),
        )?;

        let space = model.space();
        let gamble = opts.gamble.as_deref().map(|g| input::parse_gamble(space, g)).transpose()?;
        let (initial, initial_name) = match (&opts.initial, &model.initial) {
            (Some(spec), _) => (input::parse_initial(space, spec)?, spec.trim().to_string()),
            (None, Some(h)) => (h.clone(), "model".to_string()),
            (None, None) => (
                IefHandle::vacuous_on(space.full()).map_err(|e| CliError::core("initial", e))?,
                "vacuous".to_string(),
            ),
        };
        let steps = opts.steps.unwrap_or(DEFAULT_STEPS);
        Ok(Self { model, cfg, gamble, initial, initial_name, steps })
    }

    fn n(&self) -> usize {
        self.model.ito.len()
    }

    fn labels(&self, set: StateSet) -> Vec<String> {
        labels(self.model.space(), set)
    }

    fn braced(&self, set: StateSet) -> String {
        format!("{{{}}}", self.labels(set).join(", "))
    }

    fn report(&self, command: &'static str) -> Report {
        Report {
            schema: REPORT_SCHEMA,
            command,
            states: self.model.space().labels().to_vec(),
            config: self.cfg.clone(),
            classification: None,
            permanent: None,
            evolve: None,
            convergence: None,
            invariants: None,
            warnings: Vec::new(),
        }
    }

    fn classification(&self) -> ClassificationBlock {
        let c = weak::classify(&self.model.ito, &self.cfg);
        let classes = c
            .classes
            .iter()
            .enumerate()
            .map(|(i, k)| ClassEntry {
                states: self.labels(k.states),
                maximal: c.maximal.contains(&i),
                period: k.period,
                regular: k.regular,
                regularity_witness: k.regularity_witness,
                closure: self.labels(k.closure),
            })
            .collect();
        ClassificationBlock {
            classes,
            dag: c.dag.iter().map(|&(a, b)| [a, b]).collect(),
            top: c.top,
            regularly_absorbing: c.regularly_absorbing(),
            regular_absorption_witness: c.regular_absorption_witness,
        }
    }

    fn permanent(&self, warnings: &mut Vec<String>) -> CliResult<Option<PermanentBlock>> {
        let t = &self.model.ito;
        let found = strong::minimal_permanent_classes(t, &self.cfg);
        let Some(classes) = section(warnings, "permanent", found)? else {
            return Ok(None);
        };
        let mut out = Vec::with_capacity(classes.len());
        for b in classes {
            let name = format!("regularity of {}", self.braced(b));
            let r = section(warnings, &name, strong::find_regularity_r(t, b, &self.cfg))?;
            out.push(PermanentEntry { states: self.labels(b), regularity_r: r });
        }
        Ok(Some(PermanentBlock { classes: out }))
    }

    fn evolve(&self, f: &Gamble) -> CliResult<EvolveBlock> {
        let ctx = |e| CliError::core("evolve", e);
        let mut g = GambleInterval::degenerate(f.clone());
        let mut trajectory = Vec::with_capacity(self.steps + 1);
        for n in 0..=self.steps {
            if n > 0 {
                g = self.model.ito.apply_interval(&g).map_err(ctx)?;
            }
            let lower = self.initial.lower(g.lower()).map_err(ctx)?;
            let upper = self.initial.upper(g.upper()).map_err(ctx)?;
            trajectory.push(EvolveStep { n, lower: num(lower), upper: num(upper) });
        }
        let last = trajectory.last().expect("at least step 0");
        Ok(EvolveBlock {
            initial: self.initial_name.clone(),
            gamble: f.values().iter().map(|&v| num(v)).collect(),
            steps: self.steps,
            interval: [last.lower, last.upper],
            trajectory,
        })
    }

    fn convergence(&self, warnings: &mut Vec<String>) -> CliResult<Option<ConvergenceBlock>> {
        let run = invariant::classify_convergence(&self.initial, &self.model.ito, &self.cfg);
        let Some(rep) = section(warnings, "convergence", run)? else {
            return Ok(None);
        };
        let mut classes = Vec::with_capacity(rep.classes.len());
        for c in &rep.classes {
            let verdict = match c.verdict {
                Verdict::Zero => "0",
                Verdict::One => "1",
                Verdict::Indeterminate => {
                    warnings.push(format!(
                        "convergence: verdict for {} indeterminate after {} iterations",
                        self.braced(c.class),
                        c.iterations
                    ));
                    "indeterminate"
                }
            };
            classes.push(VerdictEntry {
                states: self.labels(c.class),
                verdict,
                value: num(c.value),
                iterations: c.iterations,
            });
        }
        let limit = match &rep.limit {
            Some(m) => Some(self.functional(m, warnings)?),
            None => None,
        };
        Ok(Some(ConvergenceBlock {
            initial: self.initial_name.clone(),
            s_e: self.labels(rep.s_e),
            classes,
            extremality: ExtremalityEntry {
                steps: rep.extremality.steps,
                all_extremal: rep.extremality.all_extremal(),
                first_non_extremal: rep.extremality.first_non_extremal,
                note: "checked over the observed iteration window only",
            },
            limit,
            invariance_residual: rep.invariance_residual.map(num),
            direct_residual: rep.direct_residual.map(num),
            certificate: rep.certificate,
        }))
    }

    fn invariants(&self, warnings: &mut Vec<String>) -> CliResult<Option<InvariantsBlock>> {
        let found = invariant::extremal_invariants(&self.model.ito, &self.cfg);
        let Some(list) = section(warnings, "invariants", found)? else {
            return Ok(None);
        };
        let mut items = Vec::with_capacity(list.len());
        for e in &list {
            items.push(InvariantEntry {
                classes: e.classes.iter().map(|&b| self.labels(b)).collect(),
                support: self.labels(e.support),
                functional: self.functional(&e.functional, warnings)?,
            });
        }
        Ok(Some(InvariantsBlock { count: items.len(), items }))
    }

    fn functional(&self, m: &LimitFunctional, warnings: &mut Vec<String>) -> CliResult<FunctionalEntry> {
        let n = self.n();
        let ctx = |e| CliError::core("limit functional", e);
        let kind = match m.kind() {
            LimitKind::LeastCommittal { support } => {
                KindEntry::LeastCommittal { support: self.labels(support) }
            }
            LimitKind::ClassInvariant { class, r } => {
                KindEntry::ClassInvariant { class: self.labels(class), r }
            }
        };
        let family = invariant::test_family::<f64>(n, &self.cfg);
        let residual = m.invariance_residual(&family).map_err(ctx)?;

        let indicators = if n <= self.cfg.max_strong_states {
            let full = StateSet::full(n);
            let mut upper = Vec::with_capacity(1 << n);
            for a in StateSet::all_subsets(n) {
                upper.push(m.upper(&Gamble::indicator(n, a)).map_err(ctx)?);
            }
            let values = StateSet::all_subsets(n)
                .zip(&upper)
                .map(|(a, &u)| {
                    let comp = upper[index_of(a.complement(n), full)];
                    IndicatorValue { set: self.labels(a), lower: num(1.0 - comp), upper: num(u) }
                })
                .collect();
            Some(values)
        } else {
            warnings.push(format!(
                "indicator family omitted: {n} states exceed max_strong_states = {}",
                self.cfg.max_strong_states
            ));
            None
        };

        let gamble = match &self.gamble {
            Some(f) => Some([num(m.lower(f).map_err(ctx)?), num(m.upper(f).map_err(ctx)?)]),
            None => None,
        };
        Ok(FunctionalEntry { kind, residual: Some(num(residual)), indicators, gamble })
    }
}

/// Position of `a` in the enumeration order of `StateSet::all_subsets`.
fn index_of(a: StateSet, full: StateSet) -> usize {
    debug_assert!(a.is_subset(full));
    a.iter().map(|i| 1usize << i).sum()
}
