//! Bootstrap and jackknife machinery.

pub mod bca;
pub mod bootstrap;
pub mod diagnostics;
pub mod sampling;

pub use bca::{
    adjusted_level, bca_interval, norm_cdf, norm_inv, order_statistic, AdjustedLevel, BcaComponents,
    BcaFlag, JackknifeEstimate, LevelInterval, TieRule,
};
pub use bootstrap::{
    analyze_original, chisq_bootstrap, downhill_bootstrap, downhill_starts, fill_from_records,
    ntop_sweep, record_indices, restricted_bootstrap, BootstrapConfig, IntervalResult, Method,
    ModelScore, OriginalAnalysis, RankDegree, SweepResult, SweepState,
};
pub use diagnostics::{average_ranks, diagnose, spearman, Containment, DiagnosticsReport, DEFAULT_CONTAINMENT_GRID};
pub use sampling::{jackknife_tables, replicate, replicate_rng, resample};
