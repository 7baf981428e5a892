//! Feedback-based quantum optimization (FALQON) for MaxCut with
//! interchangeable observable estimators: exact expectations, direct
//! per-observable measurement, and classical shadows over a uniform or
//! X-free ensemble.
//!
//! The crate simulates the algorithm on a dense state vector and provides the
//! measurement-budget experiments built on top of it.

pub mod error;
pub mod estimators;
pub mod experiments;
pub mod falqon;
pub mod graph;
pub mod hamiltonian;
pub mod pauli;
pub mod simulator;

pub use error::{Error, Result};
pub use estimators::{
    collect_shadow, direct_estimate, shadow_expectation, shadow_expectations, EstimateReport, ObservableEstimator,
    ShadowData, ShadowEnsemble,
};
pub use experiments::{
    budget_search, ceil_bound, derive_seed, fit_log, scaling_run, BudgetSearchConfig, BudgetSearchResult, FitResult,
    GrowthRule, MeasurementMode, ResultRow, ScalingRunConfig, ScalingSample,
};
pub use falqon::{run_falqon, EstimatorMode, FalqonConfig, FalqonTrace, LayerRecord};
pub use graph::Graph;
pub use hamiltonian::{dense_problem_hamiltonian, DriverSpec, ObservableSet};
pub use pauli::{Pauli, PauliString};
pub use simulator::{BasisAssignment, OutcomeCounts, StateVector};
