use super::criteria::{pearson_chisq, ChiSquaredFit};
use super::irls::{fit, FitResult, FitSettings};
use crate::error::{Error, Result};
use crate::existence::ExistenceCache;
use crate::model::ModelSpec;
use crate::table::CountTable;

/// Fit `model` if it passes the existence check, otherwise mark it failed
/// (BIC `+∞`).
pub fn fit_checked(
    model: &ModelSpec,
    table: &CountTable,
    cache: &ExistenceCache,
    settings: &FitSettings,
) -> FitResult {
    if cache.check(model, table) {
        fit(model, table, settings)
    } else {
        FitResult::fr_failed(model, table)
    }
}

/// Outcome of fitting a list of candidates and picking the BIC minimum.
#[derive(Debug, Clone)]
pub struct BicSelection {
    /// Index of the winner within the candidate list.
    pub best: usize,
    /// One fit per candidate, aligned with the input.
    pub fits: Vec<FitResult>,
}

impl BicSelection {
    pub fn best_fit(&self) -> &FitResult {
        &self.fits[self.best]
    }

    pub fn fr_failures(&self) -> impl Iterator<Item = &ModelSpec> {
        self.fits
            .iter()
            .filter(|f| matches!(f.status, super::FitStatus::FrFailed))
            .map(|f| &f.model)
    }
}

/// Index of the smallest finite BIC, ties resolved by position.
pub fn argmin_bic(bics: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, b) in bics.into_iter().enumerate() {
        if !b.is_finite() {
            continue;
        }
        if best.is_none_or(|(_, bb)| b < bb) {
            best = Some((i, b));
        }
    }
    best.map(|(i, _)| i)
}

/// Fit every candidate and return the BIC minimiser.
///
/// Ties go to the earlier candidate, so passing models in canonical order
/// gives canonical tie-breaking.
pub fn select_best_bic(
    candidates: &[ModelSpec],
    table: &CountTable,
    cache: &ExistenceCache,
    settings: &FitSettings,
) -> Result<BicSelection> {
    let fits: Vec<FitResult> = candidates
        .iter()
        .map(|m| fit_checked(m, table, cache, settings))
        .collect();
    let best = argmin_bic(fits.iter().map(|f| f.bic)).ok_or_else(|| {
        Error::NoModelFound(format!("none of {} candidate models is estimable", candidates.len()))
    })?;
    Ok(BicSelection { best, fits })
}

/// Acceptance window for chi-squared selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PWindow {
    pub lo: f64,
    pub hi: f64,
}

impl Default for PWindow {
    fn default() -> Self {
        PWindow { lo: 0.05, hi: 0.3 }
    }
}

impl PWindow {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) {
            return Err(Error::InvalidInput(format!(
                "p-value window bounds must lie in [0, 1], got [{lo}, {hi}]"
            )));
        }
        if lo > hi {
            return Err(Error::InvalidInput(format!(
                "p-value window is empty: lower bound {lo} exceeds upper bound {hi}"
            )));
        }
        Ok(PWindow { lo, hi })
    }

    pub fn contains(&self, p: f64) -> bool {
        p >= self.lo && p <= self.hi
    }
}

#[derive(Debug, Clone)]
pub struct ChisqSelection {
    pub fit: FitResult,
    pub chisq: ChiSquaredFit,
}

/// Among models whose Pearson p-value lies in the window, the minimiser of
/// chi-squared per residual degree of freedom. `None` when no model
/// qualifies. Models with no residual df never qualify.
pub fn select_by_chisq(
    candidates: &[ModelSpec],
    table: &CountTable,
    cache: &ExistenceCache,
    settings: &FitSettings,
    window: PWindow,
) -> Option<ChisqSelection> {
    let mut best: Option<(f64, ChisqSelection)> = None;
    for m in candidates {
        let f = fit_checked(m, table, cache, settings);
        let Some(c) = pearson_chisq(&f, table) else { continue };
        let (Some(p), Some(ratio)) = (c.p_value, c.ratio()) else { continue };
        if !window.contains(p) {
            continue;
        }
        if best.as_ref().is_none_or(|(r, _)| ratio < *r) {
            best = Some((ratio, ChisqSelection { fit: f, chisq: c }));
        }
    }
    best.map(|(_, s)| s)
}
