//! Kernel-induced random survival forests.
//!
//! Covariates can be replaced by kernel-induced features (one feature per
//! training observation) before a bagged ensemble of survival trees is grown.
//! Trees predict Nelson-Aalen cumulative hazard functions in their terminal
//! nodes, the ensemble averages them, and predictions are scored with
//! Harrell's concordance index.
//!
//! The modules map onto the pipeline:
//!
//! * [`data`] - survival records, CSV ingestion, the bundled BMT table, splits
//! * [`kernels`] - kernel evaluation, standardization, kernel-induced covariates
//! * [`splitrules`] - log-rank and relative-risk deviance split scores
//! * [`tree`] - single survival trees and the Nelson-Aalen estimator
//! * [`forest`] - bootstrap ensembles, out-of-bag bookkeeping, mortality
//! * [`eval`] - concordance index and the pooled two-sample t-test
//! * [`sim`] - ringnorm covariates with exponential survival times
//! * [`experiment`] - the RSF vs KIRSF comparison harness and curve output

pub mod data;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod forest;
pub mod kernels;
pub mod model;
mod persist;
pub mod rng;
pub mod sim;
pub mod splitrules;
pub mod step;
pub mod tree;

pub use data::{ColumnSchema, SurvivalDataset, SurvivalRecord};
pub use error::{Error, Result};
pub use eval::{c_index, pooled_t_test, ConcordanceResult, TTestResult};
pub use forest::{ForestConfig, SurvivalForest};
pub use kernels::{KernelBasis, KernelChoice, KernelSpec};
pub use model::SurvivalModel;
pub use persist::FORMAT_VERSION;
pub use splitrules::{NodeSample, SplitRule};
pub use step::StepFunction;
pub use tree::{TreeConfig, TreeNode};

/// Version string embedded in every output header.
pub const TOOL_VERSION: &str = concat!("kirsf ", env!("CARGO_PKG_VERSION"));
