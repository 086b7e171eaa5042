//! Greedy downhill search over the model lattice.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::existence::ExistenceCache;
use crate::glm::{fit_checked, FitResult, FitSettings};
use crate::model::ModelSpec;
use crate::space::neighbors;
use crate::table::CountTable;

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub fit: FitResult,
    /// BIC of each visited model, strictly decreasing.
    pub bic_path: Vec<f64>,
    /// Distinct models fitted during the search.
    pub evaluations: usize,
}

impl SearchOutcome {
    pub fn model(&self) -> &ModelSpec {
        &self.fit.model
    }
}

/// Best-improvement descent from `start` over hierarchy-preserving
/// single-term moves of maximum order `l`.
///
/// At each step every neighbour is scored and the search moves to the one
/// with the smallest BIC (canonically first on ties) if it beats the
/// current model; otherwise it stops.
pub fn downhill_search<F>(start: &ModelSpec, l: usize, mut fitter: F) -> Result<SearchOutcome>
where
    F: FnMut(&ModelSpec) -> FitResult,
{
    let mut seen: HashMap<ModelSpec, f64> = HashMap::new();
    let mut current = fitter(start);
    seen.insert(start.clone(), current.bic);
    let mut bic_path = vec![current.bic];

    loop {
        let mut best: Option<FitResult> = None;
        for n in neighbors(&current.model, l) {
            // Everything scored at an earlier step is no better than the
            // current model, since the path only ever takes the best score.
            if seen.contains_key(&n) {
                continue;
            }
            let f = fitter(&n);
            seen.insert(n, f.bic);
            if f.bic.is_finite() && best.as_ref().is_none_or(|b| f.bic < b.bic) {
                best = Some(f);
            }
        }
        match best {
            Some(b) if b.bic < current.bic => {
                bic_path.push(b.bic);
                current = b;
            }
            _ => break,
        }
    }

    if !current.bic.is_finite() {
        return Err(Error::NoModelFound(format!(
            "downhill search from {start} found no estimable model"
        )));
    }
    Ok(SearchOutcome {
        fit: current,
        bic_path,
        evaluations: seen.len(),
    })
}

/// Downhill search scoring models on `table` with existence checks.
pub fn downhill_search_table(
    start: &ModelSpec,
    table: &CountTable,
    l: usize,
    cache: &ExistenceCache,
    settings: &FitSettings,
) -> Result<SearchOutcome> {
    downhill_search(start, l, |m| fit_checked(m, table, cache, settings))
}

/// Best local minimum over several starts; ties keep the earlier start.
pub fn best_of_starts(
    starts: &[ModelSpec],
    table: &CountTable,
    l: usize,
    cache: &ExistenceCache,
    settings: &FitSettings,
) -> Result<SearchOutcome> {
    let mut best: Option<SearchOutcome> = None;
    for s in starts {
        if let Ok(o) = downhill_search_table(s, table, l, cache, settings) {
            if best.as_ref().is_none_or(|b| o.fit.bic < b.fit.bic) {
                best = Some(o);
            }
        }
    }
    best.ok_or_else(|| Error::NoModelFound("no start reached an estimable model".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::glm::select_best_bic;
    use crate::space::enumerate_models;

    #[test]
    fn korea_from_null_reaches_global_minimum() {
        let t = fixtures::korea();
        let cache = ExistenceCache::new();
        let s = FitSettings::default();
        let o = downhill_search_table(&ModelSpec::null(3), &t, 2, &cache, &s).unwrap();
        assert_eq!(o.model().to_string(), "[12,23]");
        assert_eq!(o.fit.population_estimate.unwrap().round(), 157.0);
        assert!(o.bic_path.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn start_at_minimum_stays() {
        let t = fixtures::korea();
        let best = ModelSpec::parse(3, "[12,23]").unwrap();
        let o = downhill_search_table(&best, &t, 2, &ExistenceCache::new(), &FitSettings::default()).unwrap();
        assert_eq!(o.model(), &best);
        assert_eq!(o.bic_path.len(), 1);
    }

    #[test]
    fn failing_start_moves_to_finite_neighbor() {
        let t = fixtures::korea();
        let start = ModelSpec::parse(3, "[12,13,23]").unwrap();
        let o = downhill_search_table(&start, &t, 2, &ExistenceCache::new(), &FitSettings::default()).unwrap();
        assert!(o.fit.bic.is_finite());
    }

    #[test]
    fn all_infinite_reports_no_model() {
        let r = downhill_search(&ModelSpec::null(3), 2, |m| {
            FitResult::fr_failed(m, &fixtures::korea())
        });
        assert_eq!(r.unwrap_err().code(), "no_model_found");
    }

    #[test]
    fn synthetic_three_list_matches_exhaustive() {
        let t = CountTable::from_lists(
            3,
            &[(&[1], 30), (&[2], 22), (&[3], 41), (&[1, 2], 15), (&[1, 3], 3), (&[2, 3], 9), (&[1, 2, 3], 6)],
        );
        let cache = ExistenceCache::new();
        let s = FitSettings::default();
        let space = enumerate_models(3, 2).unwrap();
        let exhaustive = select_best_bic(space.models(), &t, &cache, &s).unwrap();
        let o = downhill_search_table(&ModelSpec::null(3), &t, 2, &cache, &s).unwrap();
        assert_eq!(o.model(), &exhaustive.best_fit().model);
    }
}
