//! Imprecise Markov chains on finite state spaces.
//!
//! A chain is given by an imprecise transition operator: one closed convex set
//! of mass functions per state, with rows chosen independently. The crate
//! classifies states by weak and strong accessibility, finds the minimal
//! permanent classes, and computes invariant imprecise expectation functionals
//! together with diagnostics on whether a given initial functional converges
//! to one of them.
//!
//! Everything is generic over the scalar type (`f32` or `f64`); the aliases at
//! the crate root fix it to `f64`.

pub mod credal;
pub mod error;
pub mod invariant;
pub mod model;
pub mod oracle;
pub mod scalar;
pub mod strong;
pub mod transition;
pub mod weak;

pub use error::{Error, Result};
pub use model::{Config, StateSet, StateSpace, MAX_STATES};
pub use scalar::Real;

pub type Gamble = model::Gamble<f64>;
pub type GambleInterval = model::GambleInterval<f64>;
pub type IntervalRow = credal::IntervalRow<f64>;
pub type CredalRow = credal::CredalRow<f64>;
pub type IefHandle = credal::IefHandle<f64>;
pub type Ito = transition::Ito<f64>;
pub type MaterializedPower = transition::MaterializedPower<f64>;
pub type LimitFunctional = invariant::LimitFunctional<f64>;
pub type ConvergenceReport = invariant::ConvergenceReport<f64>;
pub type ExtremalInvariant = invariant::ExtremalInvariant<f64>;
