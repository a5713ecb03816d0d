//! Report layout. Field order here is the order in the emitted JSON.

use imc_core::{Config, StateSet, StateSpace};
use serde::Serialize;

pub const REPORT_SCHEMA: &str = "imc-report/1";

/// Rounds to 12 significant digits; the shortest round-trip rendering of the
/// rounded value is what ends up in the JSON.
pub fn num(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

pub fn labels(space: &StateSpace, set: StateSet) -> Vec<String> {
    space.labels_of(set)
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: &'static str,
    pub states: Vec<String>,
    pub config: Config,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<ClassificationBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub permanent: Option<PermanentBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evolve: Option<EvolveBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invariants: Option<InvariantsBlock>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct ClassificationBlock {
    pub classes: Vec<ClassEntry>,
    /// Edges `[from, to]` between entries of `classes`.
    pub dag: Vec<[usize; 2]>,
    pub top: Option<usize>,
    pub regularly_absorbing: bool,
    pub regular_absorption_witness: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct ClassEntry {
    pub states: Vec<String>,
    pub maximal: bool,
    pub period: Option<usize>,
    pub regular: bool,
    pub regularity_witness: Option<usize>,
    pub closure: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct PermanentBlock {
    pub classes: Vec<PermanentEntry>,
}

#[derive(Debug, Serialize)]
pub struct PermanentEntry {
    pub states: Vec<String>,
    /// Smallest `r` keeping the class closed under `T^r`; absent when a cap was hit.
    pub regularity_r: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct EvolveBlock {
    pub initial: String,
    pub gamble: Vec<f64>,
    pub steps: usize,
    /// `[lower, upper]` at time `steps`.
    pub interval: [f64; 2],
    pub trajectory: Vec<EvolveStep>,
}

#[derive(Debug, Serialize)]
pub struct EvolveStep {
    pub n: usize,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Serialize)]
pub struct ConvergenceBlock {
    pub initial: String,
    pub s_e: Vec<String>,
    pub classes: Vec<VerdictEntry>,
    pub extremality: ExtremalityEntry,
    pub limit: Option<FunctionalEntry>,
    pub invariance_residual: Option<f64>,
    pub direct_residual: Option<f64>,
    pub certificate: &'static str,
}

#[derive(Debug, Serialize)]
pub struct VerdictEntry {
    pub states: Vec<String>,
    pub verdict: &'static str,
    pub value: f64,
    pub iterations: usize,
}

#[derive(Debug, Serialize)]
pub struct ExtremalityEntry {
    pub steps: usize,
    pub all_extremal: bool,
    pub first_non_extremal: Option<usize>,
    pub note: &'static str,
}

#[derive(Debug, Serialize)]
pub struct InvariantsBlock {
    pub count: usize,
    pub items: Vec<InvariantEntry>,
}

#[derive(Debug, Serialize)]
pub struct InvariantEntry {
    pub classes: Vec<Vec<String>>,
    pub support: Vec<String>,
    #[serde(flatten)]
    pub functional: FunctionalEntry,
}

#[derive(Debug, Serialize)]
pub struct FunctionalEntry {
    pub kind: KindEntry,
    pub residual: Option<f64>,
    /// Upper and lower probability of every subset; absent above the lattice budget.
    pub indicators: Option<Vec<IndicatorValue>>,
    /// `[lower, upper]` at `--gamble`, when given.
    pub gamble: Option<[f64; 2]>,
}

#[derive(Debug, Serialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum KindEntry {
    LeastCommittal { support: Vec<String> },
    ClassInvariant { class: Vec<String>, r: usize },
}

#[derive(Debug, Serialize)]
pub struct IndicatorValue {
    pub set: Vec<String>,
    pub lower: f64,
    pub upper: f64,
}

pub fn render<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(num(0.1 + 0.2), 0.3);
        assert_eq!(num(0.75), 0.75);
        assert_eq!(num(1.0 - 1e-15), 1.0);
        assert_eq!(num(123_456_789.123_456_7), 123_456_789.123);
        assert_eq!(num(-2.5e-20), -2.5e-20);
        assert_eq!(num(-0.0), 0.0);
        assert!(num(f64::NAN).is_nan());
    }
}
