//! Model files, config layering and the `--gamble` / `--initial` mini-languages.

use std::path::Path;

use imc_core::credal::{self, IntervalRow};
use imc_core::{Config, CredalRow, Gamble, IefHandle, Ito, StateSpace};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

pub const SCHEMA: &str = "imc-model/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub schema: String,
    pub states: Vec<String>,
    /// One entry per state, in the order of `states`.
    pub rows: Vec<RowSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<Map<String, Value>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RowSpec {
    Vertices(Vec<Vec<f64>>),
    Interval(Bounds),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Precise(Vec<f64>),
    Vertices(Vec<Vec<f64>>),
    Interval(Bounds),
    VacuousOn(Vec<String>),
}

/// A parsed model: the operator plus the normalized file it came from.
#[derive(Debug, Clone)]
pub struct Model {
    pub normalized: ModelFile,
    pub ito: Ito,
    pub initial: Option<IefHandle>,
    /// Defaults overlaid with the file's own `config` block.
    pub config: Config,
}

impl Model {
    pub fn space(&self) -> &StateSpace {
        self.ito.space()
    }
}

pub fn read_model(path: &Path) -> CliResult<Model> {
    parse_model(&read_text(path)?)
}

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

pub fn parse_model(text: &str) -> CliResult<Model> {
    let file: ModelFile =
        serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    if file.schema != SCHEMA {
        return Err(CliError::Parse(format!(
            "unsupported schema `{}`, expected `{SCHEMA}`",
            file.schema
        )));
    }
    let space =
        StateSpace::new(file.states.iter()).map_err(|e| CliError::core("states", e))?;
    let n = space.len();
    if file.rows.len() != n {
        return Err(CliError::Parse(format!("{} rows for {n} states", file.rows.len())));
    }

    let mut rows = Vec::with_capacity(n);
    let mut specs = Vec::with_capacity(n);
    for (label, spec) in file.states.iter().zip(&file.rows) {
        let named = |source| CliError::Row { row: label.clone(), source };
        let (row, spec) = match spec {
            RowSpec::Vertices(vs) => {
                let row = CredalRow::from_vertices(n, vs.clone()).map_err(named)?;
                (row, spec.clone())
            }
            RowSpec::Interval(b) => {
                let raw = IntervalRow::from_f64(&b.lower, &b.upper).map_err(named)?;
                check_len(&raw, n).map_err(named)?;
                let tight = credal::coherence_normalize(&raw).map_err(named)?;
                let spec = RowSpec::Interval(bounds_of(&tight));
                (CredalRow::Interval(tight), spec)
            }
        };
        rows.push(row);
        specs.push(spec);
    }
    let ito = Ito::new(space.clone(), rows).map_err(|e| CliError::core("model", e))?;

    let (initial, initial_spec) = match &file.initial {
        None => (None, None),
        Some(spec) => {
            let (h, s) = initial_handle(&space, spec)?;
            (Some(h), Some(s))
        }
    };

    let config = layered_config(file.config.iter())?;
    let normalized = ModelFile {
        schema: SCHEMA.into(),
        states: file.states.clone(),
        rows: specs,
        initial: initial_spec,
        config: file.config.as_ref().map(|_| config_map(&config)),
    };
    Ok(Model { normalized, ito, initial, config })
}

fn check_len(row: &IntervalRow<f64>, n: usize) -> imc_core::Result<()> {
    if row.len() != n {
        return Err(imc_core::Error::DimensionMismatch { expected: n, found: row.len() });
    }
    Ok(())
}

fn bounds_of(row: &IntervalRow<f64>) -> Bounds {
    Bounds { lower: row.lower().to_vec(), upper: row.upper().to_vec() }
}

fn initial_handle(space: &StateSpace, spec: &InitialSpec) -> CliResult<(IefHandle, InitialSpec)> {
    let n = space.len();
    let named = |source| CliError::Row { row: "initial".into(), source };
    let handle = match spec {
        InitialSpec::Precise(p) => {
            check_dim(p.len(), n).map_err(named)?;
            IefHandle::precise(p.clone()).map_err(named)?
        }
        InitialSpec::Vertices(vs) => IefHandle::vertex_set(n, vs.clone()).map_err(named)?,
        InitialSpec::Interval(b) => {
            let raw = IntervalRow::from_f64(&b.lower, &b.upper).map_err(named)?;
            check_len(&raw, n).map_err(named)?;
            IefHandle::interval(raw).map_err(named)?
        }
        InitialSpec::VacuousOn(labels) => {
            let set = space.set_of(labels).map_err(named)?;
            IefHandle::vacuous_on(set).map_err(named)?
        }
    };
    let spec = match &handle {
        IefHandle::Interval(row) => InitialSpec::Interval(bounds_of(row)),
        _ => spec.clone(),
    };
    Ok((handle, spec))
}

fn check_dim(found: usize, expected: usize) -> imc_core::Result<()> {
    if found != expected {
        return Err(imc_core::Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

fn config_map(cfg: &Config) -> Map<String, Value> {
    match serde_json::to_value(cfg) {
        Ok(Value::Object(m)) => m,
        _ => unreachable!("Config serializes to an object"),
    }
}

/// Defaults overlaid field by field with each layer in turn; later layers win.
pub fn layered_config<'a, I>(layers: I) -> CliResult<Config>
where
    I: IntoIterator<Item = &'a Map<String, Value>>,
{
    let mut merged = config_map(&Config::default());
    for layer in layers {
        for (k, v) in layer {
            merged.insert(k.clone(), v.clone());
        }
    }
    let cfg: Config = serde_json::from_value(Value::Object(merged))
        .map_err(|e| CliError::Parse(format!("config: {e}")))?;
    cfg.validate().map_err(|e| CliError::core("config", e))?;
    Ok(cfg)
}

pub fn read_config_layer(path: &Path) -> CliResult<Map<String, Value>> {
    let text = read_text(path)?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Parse(format!("config file `{}`: {e}", path.display())))
}

/// `indicator:<labels>` or a list of values, optionally bracketed.
pub fn parse_gamble(space: &StateSpace, spec: &str) -> CliResult<Gamble> {
    let spec = spec.trim();
    if let Some(rest) = spec.strip_prefix("indicator:") {
        let labels = split_list(rest);
        return space.indicator(&labels).map_err(|e| CliError::core("gamble", e));
    }
    let values = parse_values(spec)?;
    check_dim(values.len(), space.len()).map_err(|e| CliError::core("gamble", e))?;
    Gamble::new(values).map_err(|e| CliError::core("gamble", e))
}

/// `vacuous`, `vacuous:<labels>`, `precise:<values>` or `point:<label>`.
pub fn parse_initial(space: &StateSpace, spec: &str) -> CliResult<IefHandle> {
    let n = space.len();
    let ctx = |e| CliError::core("initial", e);
    let spec = spec.trim();
    let (head, rest) = spec.split_once(':').unwrap_or((spec, ""));
    match head {
        "vacuous" if rest.is_empty() => IefHandle::vacuous_on(space.full()).map_err(ctx),
        "vacuous" => {
            let set = space.set_of(&split_list(rest)).map_err(ctx)?;
            IefHandle::vacuous_on(set).map_err(ctx)
        }
        "precise" => {
            let p = parse_values(rest)?;
            check_dim(p.len(), n).map_err(ctx)?;
            IefHandle::precise(p).map_err(ctx)
        }
        "point" => {
            let i = space.index_of(rest.trim()).map_err(ctx)?;
            Ok(IefHandle::point(n, i))
        }
        _ => Err(CliError::Parse(format!("unrecognized initial spec `{spec}`"))),
    }
}

fn split_list(s: &str) -> Vec<&str> {
    s.split(',').map(str::trim).filter(|l| !l.is_empty()).collect()
}

fn parse_values(s: &str) -> CliResult<Vec<f64>> {
    let inner = s.trim();
    let inner = inner
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .unwrap_or(inner);
    split_list(inner)
        .into_iter()
        .map(|v| v.parse::<f64>().map_err(|e| CliError::Parse(format!("value `{v}`: {e}"))))
        .collect()
}
