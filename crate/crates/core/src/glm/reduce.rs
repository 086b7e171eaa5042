use crate::history::CaptureHistory;
use crate::model::ModelSpec;
use crate::table::CountTable;

/// The estimable part of a model on a given table.
///
/// Parameters whose marginal count is zero have extended MLE `-∞`; every
/// cell containing such a parameter has fitted mean zero and is dropped
/// from the likelihood.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedProblem {
    /// Parameters still to be estimated, canonical order.
    pub theta_dagger: Vec<CaptureHistory>,
    /// Cells retained in the likelihood, canonical order.
    pub omega_dagger: Vec<CaptureHistory>,
    /// Parameters whose estimate is `-∞`.
    pub minus_infinity_params: Vec<CaptureHistory>,
}

impl ReducedProblem {
    pub fn is_reduced(&self) -> bool {
        !self.minus_infinity_params.is_empty()
    }
}

pub fn reduce_for_sparsity(model: &ModelSpec, table: &CountTable) -> ReducedProblem {
    debug_assert_eq!(model.t(), table.t());
    let (minus_infinity_params, theta_dagger): (Vec<_>, Vec<_>) = model
        .params()
        .iter()
        .copied()
        .partition(|&theta| table.marginal_count(theta) == 0);
    let omega_dagger = CaptureHistory::all_nonempty(table.t())
        .into_iter()
        .filter(|w| !minus_infinity_params.iter().any(|th| th.is_subset_of(*w)))
        .collect();
    ReducedProblem {
        theta_dagger,
        omega_dagger,
        minus_infinity_params,
    }
}
