//! Existence of the extended maximum likelihood estimate.
//!
//! For a model and table, let `Θ†`, `Ω†` be the reduced parameter and cell
//! sets and `A` the `Ω† × Θ†` incidence matrix (`A_ωθ = 1` iff `θ ⊆ ω`).
//! The estimate exists iff
//!
//! ```text
//! s* = max { s : Aᵀx = ν, x_ω ≥ s for all ω ∈ Ω† }  >  0
//! ```
//!
//! where `ν_θ = N*_θ`. The verdict depends only on the support of the
//! table, which is what makes [`ExistenceCache`] valid.

pub mod lp;

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::RwLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::glm::reduce::reduce_for_sparsity;
use crate::history::CaptureHistory;
use crate::model::ModelSpec;
use crate::table::{CountTable, SupportKey};
use lp::{LpOutcome, StandardLp};

/// The linear program deciding existence for one (model, table) pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExistenceProblem {
    pub cells: Vec<CaptureHistory>,
    pub params: Vec<CaptureHistory>,
    /// `incidence[i][j] = 1` iff `params[j] ⊆ cells[i]`.
    pub incidence: Vec<Vec<u8>>,
    /// Marginal counts `N*_θ` aligned with `params`.
    pub nu: Vec<u64>,
}

/// Optimal value of `s`, exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MaxS {
    Value(BigRational),
    /// No `x` satisfies `Aᵀx = ν`; treated as `s* = -∞`.
    Infeasible,
}

impl MaxS {
    pub fn is_positive(&self) -> bool {
        matches!(self, MaxS::Value(v) if v.is_positive())
    }
}

impl ExistenceProblem {
    pub fn new(model: &ModelSpec, table: &CountTable) -> Self {
        let reduced = reduce_for_sparsity(model, table);
        let cells = reduced.omega_dagger;
        let params = reduced.theta_dagger;
        let incidence = cells
            .iter()
            .map(|w| params.iter().map(|th| th.is_subset_of(*w) as u8).collect())
            .collect();
        let nu = params.iter().map(|th| table.marginal_count(*th)).collect();
        ExistenceProblem { cells, params, incidence, nu }
    }

    /// Equality form used by the solver: `x = s·1 + y` with `y ≥ 0` and
    /// `s = s⁺ - s⁻`, maximising `s⁺ - s⁻`.
    ///
    /// Columns are `y` (one per cell) followed by `s⁺`, `s⁻`.
    pub fn to_standard_form(&self) -> StandardLp {
        let m = self.cells.len();
        let int = |v: i64| BigRational::from_integer(BigInt::from(v));
        let a = (0..self.params.len())
            .map(|j| {
                let mut row: Vec<BigRational> =
                    (0..m).map(|i| int(self.incidence[i][j] as i64)).collect();
                let cover: i64 = (0..m).map(|i| self.incidence[i][j] as i64).sum();
                row.push(int(cover));
                row.push(int(-cover));
                row
            })
            .collect();
        let b = self.nu.iter().map(|&v| int(v as i64)).collect();
        let mut c: Vec<BigRational> = (0..m).map(|_| BigRational::zero()).collect();
        c.push(int(1));
        c.push(int(-1));
        StandardLp { a, b, c }
    }
}

/// Exact `s*` for an existence problem.
pub fn lp_max_s(problem: &ExistenceProblem) -> MaxS {
    match problem.to_standard_form().solve() {
        LpOutcome::Optimal { value, .. } => MaxS::Value(value),
        LpOutcome::Infeasible => MaxS::Infeasible,
        // s is bounded above by N_total / |Ω†| through the intercept row.
        LpOutcome::Unbounded => unreachable!("existence LP cannot be unbounded"),
    }
}

/// Whether the extended MLE exists for `model` on `table`.
pub fn fr_check(model: &ModelSpec, table: &CountTable) -> bool {
    let problem = ExistenceProblem::new(model, table);
    if problem.cells.is_empty() {
        return false;
    }
    // x = N is feasible with s = min N, which is positive when no retained
    // cell is empty.
    if problem.cells.iter().all(|w| table.count(*w) > 0) {
        return true;
    }
    lp_max_s(&problem).is_positive()
}

/// Verdicts keyed by model and table support.
#[derive(Debug, Default)]
pub struct ExistenceCache {
    verdicts: RwLock<HashMap<SupportKey, HashMap<ModelSpec, bool>>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl ExistenceCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Cached existence verdict; a miss evaluates the check on the 0/1
    /// indicator of the table's support.
    pub fn check(&self, model: &ModelSpec, table: &CountTable) -> bool {
        let key = table.support_key();
        self.check_with_key(model, table, &key)
    }

    pub fn check_with_key(&self, model: &ModelSpec, table: &CountTable, key: &SupportKey) -> bool {
        if let Some(v) = self
            .verdicts
            .read()
            .expect("existence cache poisoned")
            .get(key)
            .and_then(|m| m.get(model))
        {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return *v;
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let verdict = fr_check(model, &table.indicator());
        self.verdicts
            .write()
            .expect("existence cache poisoned")
            .entry(key.clone())
            .or_default()
            .insert(model.clone(), verdict);
        verdict
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    /// Number of checks actually evaluated.
    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn len(&self) -> usize {
        self.verdicts
            .read()
            .expect("existence cache poisoned")
            .values()
            .map(HashMap::len)
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `cached_fr_check` under its functional name.
pub fn cached_fr_check(model: &ModelSpec, table: &CountTable, cache: &ExistenceCache) -> bool {
    cache.check(model, table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::space::enumerate_models;

    #[test]
    fn table1_verdicts() {
        let m = ModelSpec::parse(4, "[123,14]").unwrap();
        let got: Vec<bool> = (1..=4).map(|k| fr_check(&m, &fixtures::table1(k))).collect();
        assert_eq!(got, vec![true, false, true, false]);
    }

    #[test]
    fn table1_n2_has_nonpositive_s() {
        let m = ModelSpec::parse(4, "[123,14]").unwrap();
        let p = ExistenceProblem::new(&m, &fixtures::table1(2));
        assert!(!lp_max_s(&p).is_positive());
    }

    #[test]
    fn korea_verdicts() {
        let t = fixtures::korea();
        let space = enumerate_models(3, 2).unwrap();
        for m in space.models() {
            let s = m.to_string();
            let expect = !(s == "[12,13]" || s == "[12,13,23]");
            assert_eq!(fr_check(m, &t), expect, "{s}");
        }
    }

    #[test]
    fn positive_tables_always_pass() {
        let t = CountTable::new(4, CaptureHistory::all_nonempty(4).into_iter().map(|w| (w, 1 + w.mask() as u64 % 3))).unwrap();
        for m in enumerate_models(4, 3).unwrap().models() {
            assert!(fr_check(m, &t));
        }
    }

    #[test]
    fn feasible_point_bounds_s_from_below() {
        let t = CountTable::new(3, CaptureHistory::all_nonempty(3).into_iter().map(|w| (w, 2 + w.mask() as u64))).unwrap();
        let m = ModelSpec::parse(3, "[12,23]").unwrap();
        match lp_max_s(&ExistenceProblem::new(&m, &t)) {
            MaxS::Value(v) => assert!(v >= BigRational::from_integer(3.into())),
            MaxS::Infeasible => panic!("feasible problem reported infeasible"),
        }
    }

    #[test]
    fn cache_hits_on_same_support() {
        let cache = ExistenceCache::new();
        let t = fixtures::korea();
        let m = ModelSpec::parse(3, "[12,23]").unwrap();
        assert!(cache.check(&m, &t));
        assert_eq!(cache.misses(), 1);
        assert!(cache.check(&m, &t.scaled(2)));
        assert_eq!(cache.misses(), 1);
        assert_eq!(cache.hits(), 1);
    }

    #[test]
    fn cache_rechecks_changed_support() {
        let cache = ExistenceCache::new();
        let t = CountTable::from_lists(3, &[(&[1], 4), (&[2], 3), (&[3], 2), (&[1, 2], 1), (&[2, 3], 5)]);
        let m = ModelSpec::parse(3, "[12,23]").unwrap();
        cache.check(&m, &t);
        let j = t.decremented(CaptureHistory::from_lists([1, 2])).unwrap();
        cache.check(&m, &j);
        assert_eq!(cache.misses(), 2);
        assert_eq!(cache.len(), 2);
    }
}
