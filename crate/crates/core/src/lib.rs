//! Multiple systems estimation with Poisson loglinear models.
//!
//! The crate covers capture-history tables, hierarchical model spaces,
//! maximum likelihood fitting with an exact existence check, BIC-based
//! model selection, and bootstrap confidence intervals that account for
//! model selection.

pub mod dataset;
pub mod error;
pub mod existence;
pub mod fixtures;
pub mod glm;
pub mod history;
pub mod model;
pub mod resample;
pub mod search;
pub mod space;
pub mod table;

pub use dataset::Dataset;
pub use error::{Error, Result};
pub use existence::{fr_check, ExistenceCache};
pub use glm::{fit, fit_checked, FitResult, FitSettings};
pub use history::CaptureHistory;
pub use model::ModelSpec;
pub use space::{enumerate_models, ModelSpace};
pub use table::CountTable;
