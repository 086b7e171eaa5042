//! Poisson loglinear fitting by iteratively reweighted least squares.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::criteria::bic;
use super::reduce::{reduce_for_sparsity, ReducedProblem};
use crate::history::CaptureHistory;
use crate::model::ModelSpec;
use crate::table::CountTable;

/// Sample size used in the BIC penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleSize {
    /// Number of observed cases, `N_total`.
    #[default]
    Case,
    /// Number of observable cells, `2^t - 1`.
    Capture,
}

/// Which parameters the BIC penalty counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamCount {
    /// Every model parameter, including those estimated as `-∞`.
    #[default]
    Full,
    /// Only the finitely estimated parameters.
    Estimated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitSettings {
    pub max_iterations: usize,
    pub rel_tolerance: f64,
    pub abs_tolerance: f64,
    /// Any estimate below this is taken as drifting to `-∞`.
    pub alpha_floor: f64,
    pub sample_size: SampleSize,
    pub param_count: ParamCount,
}

impl Default for FitSettings {
    fn default() -> Self {
        FitSettings {
            max_iterations: 100,
            rel_tolerance: 1e-10,
            abs_tolerance: 1e-12,
            alpha_floor: -30.0,
            sample_size: SampleSize::Case,
            param_count: ParamCount::Full,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonConvergence {
    MaxIterations,
    /// An estimate fell below the floor.
    Divergence,
    /// The reduced design matrix does not have full column rank.
    RankDeficient,
    NumericalFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "reason")]
pub enum FitStatus {
    Converged,
    FrFailed,
    NotConverged(NonConvergence),
}

impl FitStatus {
    pub fn is_converged(self) -> bool {
        matches!(self, FitStatus::Converged)
    }

    pub fn label(self) -> &'static str {
        match self {
            FitStatus::Converged => "converged",
            FitStatus::FrFailed => "fr_failed",
            FitStatus::NotConverged(NonConvergence::MaxIterations) => "not_converged:max_iterations",
            FitStatus::NotConverged(NonConvergence::Divergence) => "not_converged:divergence",
            FitStatus::NotConverged(NonConvergence::RankDeficient) => "not_converged:rank_deficient",
            FitStatus::NotConverged(NonConvergence::NumericalFailure) => {
                "not_converged:numerical_failure"
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: ModelSpec,
    /// Estimates for every model parameter, `-∞` for the reduced ones.
    pub alpha: Vec<(CaptureHistory, f64)>,
    /// Fitted means on the retained cells.
    pub mu: Vec<(CaptureHistory, f64)>,
    pub bic: f64,
    pub population_estimate: Option<f64>,
    pub status: FitStatus,
    pub iterations: usize,
    /// Deviance at the first iterate on the model surface.
    pub initial_deviance: f64,
    pub deviance: f64,
    pub deviance_change: f64,
    pub reduced: ReducedProblem,
}

impl FitResult {
    /// A non-fit for a model failing the existence check.
    pub fn fr_failed(model: &ModelSpec, table: &CountTable) -> Self {
        let reduced = reduce_for_sparsity(model, table);
        Self::failed(model, reduced, FitStatus::FrFailed)
    }

    fn failed(model: &ModelSpec, reduced: ReducedProblem, status: FitStatus) -> Self {
        FitResult {
            model: model.clone(),
            alpha: Vec::new(),
            mu: Vec::new(),
            bic: f64::INFINITY,
            population_estimate: None,
            status,
            iterations: 0,
            initial_deviance: f64::NAN,
            deviance: f64::NAN,
            deviance_change: f64::NAN,
            reduced,
        }
    }

    pub fn alpha_of(&self, h: CaptureHistory) -> Option<f64> {
        self.alpha.iter().find(|(k, _)| *k == h).map(|(_, v)| *v)
    }

    /// Fitted mean for any non-empty cell; zero for cells outside the
    /// retained set.
    pub fn mu_of(&self, h: CaptureHistory) -> f64 {
        self.mu
            .iter()
            .find(|(k, _)| *k == h)
            .map(|(_, v)| *v)
            .unwrap_or(0.0)
    }

    /// Estimated number of unobserved cases, `exp(α_∅)`.
    pub fn dark_figure(&self) -> Option<f64> {
        self.status
            .is_converged()
            .then(|| self.alpha_of(CaptureHistory::EMPTY).map(f64::exp))
            .flatten()
    }
}

/// Design matrix with rows for `cells` and columns for `params`.
pub(crate) fn design(cells: &[CaptureHistory], params: &[CaptureHistory]) -> DMatrix<f64> {
    DMatrix::from_fn(cells.len(), params.len(), |i, j| {
        if params[j].is_subset_of(cells[i]) {
            1.0
        } else {
            0.0
        }
    })
}

/// Poisson deviance `2 Σ [y log(y/μ) - (y - μ)]`.
pub(crate) fn deviance(y: &DVector<f64>, mu: &DVector<f64>) -> f64 {
    2.0 * y
        .iter()
        .zip(mu.iter())
        .map(|(&y, &m)| {
            let t = if y > 0.0 { y * (y / m).ln() } else { 0.0 };
            t - (y - m)
        })
        .sum::<f64>()
}

/// Poisson log-likelihood (up to the `log y!` constant) at `beta`.
pub fn log_likelihood(table: &CountTable, reduced: &ReducedProblem, beta: &[f64]) -> f64 {
    let x = design(&reduced.omega_dagger, &reduced.theta_dagger);
    let eta = &x * DVector::from_column_slice(beta);
    reduced
        .omega_dagger
        .iter()
        .zip(eta.iter())
        .map(|(w, &e)| table.count(*w) as f64 * e - e.exp())
        .sum()
}

/// Gradient of [`log_likelihood`]: `Xᵀ (y - μ)`.
pub fn score(table: &CountTable, reduced: &ReducedProblem, beta: &[f64]) -> Vec<f64> {
    let x = design(&reduced.omega_dagger, &reduced.theta_dagger);
    let mu = (&x * DVector::from_column_slice(beta)).map(f64::exp);
    let y = DVector::from_iterator(
        reduced.omega_dagger.len(),
        reduced.omega_dagger.iter().map(|w| table.count(*w) as f64),
    );
    (x.transpose() * (y - mu)).iter().copied().collect()
}

fn weighted_solve(x: &DMatrix<f64>, w: &DVector<f64>, z: &DVector<f64>) -> Option<DVector<f64>> {
    let sw = w.map(f64::sqrt);
    let mut xw = x.clone();
    for (i, mut row) in xw.row_iter_mut().enumerate() {
        row *= sw[i];
    }
    let zw = z.component_mul(&sw);
    let svd = xw.svd(true, true);
    let smax = svd.singular_values.max();
    svd.solve(&zw, smax * 1e-13).ok()
}

/// Fit `model` to `table` on the reduced problem.
///
/// The caller is expected to have checked existence first; a model whose
/// MLE does not exist typically ends in `Divergence`.
pub fn fit(model: &ModelSpec, table: &CountTable, settings: &FitSettings) -> FitResult {
    let reduced = reduce_for_sparsity(model, table);
    let cells = &reduced.omega_dagger;
    let params = &reduced.theta_dagger;
    if cells.is_empty() || table.n_total() == 0 {
        return FitResult::failed(
            model,
            reduced,
            FitStatus::NotConverged(NonConvergence::NumericalFailure),
        );
    }
    let x = design(cells, params);
    let p = params.len();
    if x.clone().svd(false, false).rank(1e-10) < p {
        return FitResult::failed(
            model,
            reduced,
            FitStatus::NotConverged(NonConvergence::RankDeficient),
        );
    }
    let y = DVector::from_iterator(cells.len(), cells.iter().map(|w| table.count(*w) as f64));

    let mut mu = y.map(|v| v + 0.5);
    let mut eta = mu.map(f64::ln);
    let mut beta: Option<DVector<f64>> = None;
    let mut dev_old = f64::NAN;
    let mut initial_deviance = f64::NAN;
    let mut change = f64::NAN;
    let mut status = FitStatus::NotConverged(NonConvergence::MaxIterations);
    let mut iterations = 0;

    for iter in 1..=settings.max_iterations {
        iterations = iter;
        let z = DVector::from_iterator(
            cells.len(),
            eta.iter().zip(y.iter()).zip(mu.iter()).map(|((e, yv), m)| e + (yv - m) / m),
        );
        let Some(mut next) = weighted_solve(&x, &mu, &z) else {
            status = FitStatus::NotConverged(NonConvergence::NumericalFailure);
            break;
        };
        let mut next_eta = &x * &next;
        let mut next_mu = next_eta.map(f64::exp);
        let mut dev = deviance(&y, &next_mu);

        // Step halving keeps the deviance from increasing.
        if let Some(prev) = &beta {
            let mut halvings = 0;
            while (dev.is_nan() || dev > dev_old) && halvings < 40 {
                next = (prev + &next) * 0.5;
                next_eta = &x * &next;
                next_mu = next_eta.map(f64::exp);
                dev = deviance(&y, &next_mu);
                halvings += 1;
            }
            if dev.is_nan() || dev > dev_old {
                // No descent direction left at machine precision.
                next = prev.clone();
                next_eta = &x * &next;
                next_mu = next_eta.map(f64::exp);
                dev = dev_old;
            }
        }
        if !dev.is_finite() || next.iter().any(|b| !b.is_finite()) {
            status = FitStatus::NotConverged(NonConvergence::NumericalFailure);
            break;
        }
        if next.iter().any(|&b| b < settings.alpha_floor) {
            status = FitStatus::NotConverged(NonConvergence::Divergence);
            break;
        }

        let first = beta.is_none();
        beta = Some(next);
        eta = next_eta;
        mu = next_mu;
        if first {
            initial_deviance = dev;
        } else {
            change = (dev_old - dev).abs();
            if change < settings.abs_tolerance || change < settings.rel_tolerance * dev.abs() {
                dev_old = dev;
                status = FitStatus::Converged;
                break;
            }
        }
        dev_old = dev;
    }

    let Some(beta) = beta.filter(|_| status.is_converged()) else {
        return FitResult::failed(model, reduced, status);
    };

    let mut alpha: Vec<(CaptureHistory, f64)> = params
        .iter()
        .copied()
        .zip(beta.iter().copied())
        .chain(reduced.minus_infinity_params.iter().map(|h| (*h, f64::NEG_INFINITY)))
        .collect();
    alpha.sort_by_key(|(h, _)| *h);
    let mu_vec: Vec<(CaptureHistory, f64)> = cells.iter().copied().zip(mu.iter().copied()).collect();
    let alpha_empty = alpha
        .iter()
        .find(|(h, _)| h.is_empty())
        .map(|(_, a)| *a)
        .expect("intercept is always estimated");
    let mut result = FitResult {
        model: model.clone(),
        alpha,
        mu: mu_vec,
        bic: f64::INFINITY,
        population_estimate: Some(alpha_empty.exp() + table.n_total() as f64),
        status,
        iterations,
        initial_deviance,
        deviance: dev_old,
        deviance_change: change,
        reduced,
    };
    result.bic = bic(&result, table, settings);
    result
}
