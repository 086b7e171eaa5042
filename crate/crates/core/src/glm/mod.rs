//! Poisson loglinear model fitting, information criteria and model selection.

pub mod criteria;
pub mod irls;
pub mod reduce;
pub mod select;

pub use criteria::{bic, pearson_chisq, ChiSquaredFit};
pub use irls::{
    fit, log_likelihood, score, FitResult, FitSettings, FitStatus, NonConvergence, ParamCount,
    SampleSize,
};
pub use reduce::{reduce_for_sparsity, ReducedProblem};
pub use select::{
    argmin_bic, fit_checked, select_best_bic, select_by_chisq, BicSelection, ChisqSelection,
    PWindow,
};
