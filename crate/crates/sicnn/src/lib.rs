//! Simulation and certification toolkit for shunting inhibitory cellular
//! neural networks (SICNNs) whose inhibition acts through a retarded,
//! piecewise constant argument.
//!
//! The crate covers four jobs:
//!
//! * **Model representation** — the cell grid with decay rates, neighborhood
//!   couplings, quasi-periodic external inputs ([`network`]), the piecewise
//!   constant argument schedule ([`schedule`]), and the activation functional
//!   acting on history segments ([`activation`]).
//! * **Integration** — an interval-by-interval solver that resolves the
//!   piecewise constant (possibly advanced) argument by fixed-point iteration
//!   of the exact integral form of the equations, with dense output
//!   ([`solver`], [`trajectory`]).
//! * **Certification** — numerical evaluation of the contraction and spacing
//!   conditions that guarantee existence, uniqueness, boundedness, and
//!   exponential stability ([`network::NetworkSpec::check_conditions`]).
//! * **Analysis** — approximation of the unique bounded solution, a
//!   whole-line integral-equation defect certificate, exponential-envelope
//!   verification, and empirical translation-number scans ([`analysis`]).
//!
//! Everything is deterministic: identical inputs (and seeds, where sampling
//! is involved) produce identical outputs in both execution modes.

// Validation deliberately writes `!(x > 0.0)` instead of `x <= 0.0`: the
// negated form also rejects NaN, which the non-negated comparison would
// silently accept.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod activation;
pub mod analysis;
pub mod config;
pub mod error;
pub mod exec;
pub mod grid;
pub mod network;
pub mod schedule;
pub mod solver;
pub mod trajectory;

pub use activation::{ActivationKind, ActivationSpec, ScalarRule, Segment};
pub use analysis::{
    bounded_solution, stability_envelope, translation_scan, whole_line_residual, StabilityReport,
    TranslationReport,
};
pub use config::{BuiltModel, RunConfig};
pub use error::SicnnError;
pub use exec::ExecMode;
pub use grid::Grid;
pub use network::{ConditionReport, DerivedConstants, InputSignal, NetworkSpec};
pub use schedule::{ArgumentSchedule, SpacingReport};
pub use solver::{
    residual, solve_ivp, solve_ivp_with_meta, IvpSetup, Quadrature, SolveOutcome, SolverOptions,
    StartRegime, StepMeta,
};
pub use trajectory::Trajectory;
