//! Diverse logistic regression ensembles fitted by block coordinate descent.
//!
//! G logistic models are trained jointly under a shared objective combining
//! per-model elastic-net sparsity with a pairwise diversity penalty that
//! charges models for selecting the same variables. Pushing the diversity
//! penalty up splits the predictors across models, trading individual
//! accuracy for ensemble accuracy. The crate provides the solver, penalty
//! grids with cross-validated alternating search, diversity analytics,
//! synthetic benchmark scenarios, and file I/O for the bundled CLI.

pub mod data;
pub mod diversity;
pub mod error;
pub mod io;
pub mod model;
pub mod simulate;
pub mod solver;
pub mod tuning;

pub use data::Dataset;
pub use diversity::DiversityReport;
pub use error::{Result, SplitError};
pub use model::{importance_sets, HyperParams, ImportanceSets, SplitFit};
pub use simulate::{Scenario, ScenarioConfig, StudyConfig};
pub use solver::fit;
pub use tuning::{alternating_search, SearchConfig};
