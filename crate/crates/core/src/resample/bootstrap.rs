//! Bootstrap drivers: restricted BIC selection, the n_top sweep, downhill
//! search and chi-squared selection.
//!
//! Every driver follows the same pattern. The estimator is applied to the
//! original table, to `B` multinomial replicates and to the leave-one-case-out
//! tables, and the three sets of estimates go through [`BcaComponents`].
//! Replicate `i` always draws from stream `i` of the seed, and results are
//! collected in replicate order, so output does not depend on the number of
//! worker threads.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::bca::{bca_interval, BcaComponents, BcaFlag, JackknifeEstimate, LevelInterval, TieRule};
use super::sampling::{jackknife_tables, replicate};
use crate::error::{Error, Result};
use crate::existence::ExistenceCache;
use crate::glm::{argmin_bic, fit_checked, select_by_chisq, FitSettings, PWindow};
use crate::history::CaptureHistory;
use crate::model::ModelSpec;
use crate::search::best_of_starts;
use crate::space::{bic_ranks, random_order2_starts, rank_order, ModelSpace, RankTable};
use crate::table::{CountTable, SupportKey};

#[derive(Debug, Clone)]
pub struct BootstrapConfig {
    pub reps: usize,
    /// Two-sided confidence levels.
    pub levels: Vec<f64>,
    pub seed: u64,
    /// Worker threads; 0 lets rayon decide.
    pub workers: usize,
    pub fit: FitSettings,
    pub ties: TieRule,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            reps: 1000,
            levels: vec![0.8, 0.95],
            seed: 1,
            workers: 0,
            fit: FitSettings::default(),
            ties: TieRule::Strict,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reps < 2 {
            return Err(Error::InvalidInput(format!(
                "at least two bootstrap replicates are needed, got {}",
                self.reps
            )));
        }
        if self.levels.is_empty() {
            return Err(Error::InvalidInput("no confidence levels given".into()));
        }
        for &l in &self.levels {
            if !(l > 0.0 && l < 1.0) {
                return Err(Error::InvalidInput(format!(
                    "confidence level must be in (0, 1), got {l}"
                )));
            }
        }
        Ok(())
    }
}

/// Which ranking orders the candidate models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RankDegree {
    Degree1,
    Degree2,
}

impl RankDegree {
    pub fn as_usize(self) -> usize {
        match self {
            RankDegree::Degree1 => 1,
            RankDegree::Degree2 => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Only the original best model is refitted.
    Conditional,
    /// Top-n candidates under degree-1 ranks.
    Degree1,
    /// Top-n candidates under degree-2 ranks.
    Degree2,
    /// Every estimable model.
    AllModels,
    Downhill,
    Chisq,
}

/// BIC and population estimate of one model on one table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelScore {
    pub bic: f64,
    pub estimate: Option<f64>,
}

fn score(model: &ModelSpec, table: &CountTable, cache: &ExistenceCache, settings: &FitSettings) -> ModelScore {
    let f = fit_checked(model, table, cache, settings);
    let estimate = if f.bic.is_finite() { f.population_estimate } else { None };
    ModelScore { bic: f.bic, estimate }
}

/// Estimate of the BIC minimiser among `scores`, `None` if nothing is
/// estimable.
fn select_estimate(scores: &[ModelScore]) -> Option<f64> {
    argmin_bic(scores.iter().map(|s| s.bic)).and_then(|i| scores[i].estimate)
}

/// Original-data analysis of a full model space.
#[derive(Debug, Clone)]
pub struct OriginalAnalysis {
    /// One score per model of the space, canonical order.
    pub scores: Vec<ModelScore>,
    pub ranks: RankTable,
    pub degree: RankDegree,
    /// All model indices in rank order.
    pub order: Vec<usize>,
    /// Rank order restricted to models with finite BIC.
    pub candidates: Vec<usize>,
    /// Index of the BIC minimiser.
    pub best: usize,
    pub point_estimate: f64,
}

impl OriginalAnalysis {
    pub fn best_model<'a>(&self, space: &'a ModelSpace) -> &'a ModelSpec {
        space.get(self.best)
    }
}

/// Fit every model of `space` on `table` and rank them.
pub fn analyze_original(
    table: &CountTable,
    space: &ModelSpace,
    degree: RankDegree,
    cache: &ExistenceCache,
    cfg: &BootstrapConfig,
) -> Result<OriginalAnalysis> {
    let scores: Vec<ModelScore> = par_map(space.len(), cfg.workers, |i| {
        score(space.get(i), table, cache, &cfg.fit)
    })?;
    let bic: Vec<f64> = scores.iter().map(|s| s.bic).collect();
    let best = argmin_bic(bic.iter().copied())
        .ok_or_else(|| Error::NoModelFound("no model in the space is estimable on the data".into()))?;
    let point_estimate = scores[best]
        .estimate
        .ok_or_else(|| Error::NoModelFound("best model has no population estimate".into()))?;
    let ranks = bic_ranks(space, &bic, 2);
    let order = rank_order(&ranks, degree.as_usize())?;
    let candidates: Vec<usize> = order.iter().copied().filter(|&i| bic[i].is_finite()).collect();
    Ok(OriginalAnalysis {
        scores,
        ranks,
        degree,
        order,
        candidates,
        best,
        point_estimate,
    })
}

/// Map `f` over `0..n` on a pool of `workers` threads, results in index
/// order.
pub(crate) fn par_map<T, F>(n: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if workers == 1 {
        return Ok((0..n).map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| (0..n).into_par_iter().map(f).collect()))
}

/// Run existence checks for every (support, model) pair up front so the
/// replicate loop only reads the cache.
fn prewarm<'a>(
    cache: &ExistenceCache,
    models: &[&ModelSpec],
    tables: impl Iterator<Item = &'a CountTable>,
    workers: usize,
) -> Result<()> {
    let mut supports: BTreeMap<SupportKey, &CountTable> = BTreeMap::new();
    for t in tables {
        supports.entry(t.support_key()).or_insert(t);
    }
    let supports: Vec<(SupportKey, &CountTable)> = supports.into_iter().collect();
    let nm = models.len();
    par_map(supports.len() * nm, workers, |k| {
        let (key, table) = &supports[k / nm.max(1)];
        cache.check_with_key(models[k % nm], table, key);
    })?;
    Ok(())
}

/// Per-table estimates for the three data sets of a BCa run.
struct EstimateSet {
    boot: Vec<Option<f64>>,
    jack: Vec<(CaptureHistory, u64, Option<f64>)>,
}

/// Interval output of a single bootstrap run.
#[derive(Debug, Clone, Serialize)]
pub struct IntervalResult {
    pub method: Method,
    pub point_estimate: f64,
    pub selected_model: String,
    /// Candidate count; `None` for methods that search the whole space.
    pub n_top: Option<usize>,
    pub reps: usize,
    pub seed: u64,
    pub used_replicates: usize,
    pub excluded_replicates: usize,
    pub excluded_jackknife: usize,
    pub intervals: Vec<LevelInterval>,
    pub z0_hat: f64,
    pub a_hat: f64,
    pub jackknife_mean: f64,
    pub flags: Vec<BcaFlag>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub caveat: Option<String>,
    /// Bootstrap estimates in replicate order, `None` where excluded.
    #[serde(skip)]
    pub boot_estimates: Vec<Option<f64>>,
    #[serde(skip)]
    pub jackknife_estimates: Vec<JackknifeEstimate>,
}

fn assemble(
    method: Method,
    point_estimate: f64,
    selected_model: String,
    n_top: Option<usize>,
    set: EstimateSet,
    cfg: &BootstrapConfig,
) -> Result<IntervalResult> {
    let used: Vec<f64> = set.boot.iter().flatten().copied().filter(|v| v.is_finite()).collect();
    let excluded_replicates = set.boot.len() - used.len();
    if used.len() < 2 {
        return Err(Error::AllReplicatesExcluded(format!(
            "{excluded_replicates} of {} replicates produced no estimate",
            set.boot.len()
        )));
    }
    let mut jack = Vec::new();
    let mut excluded_jackknife = 0;
    for (history, weight, est) in set.jack {
        match est {
            Some(e) if e.is_finite() => jack.push(JackknifeEstimate { history, weight, estimate: e }),
            _ => excluded_jackknife += 1,
        }
    }
    let components = BcaComponents::new(used.clone(), jack, point_estimate, cfg.ties)?;
    let mut flags = components.flags.clone();
    let intervals = bca_interval(&components, &cfg.levels, &mut flags)?;
    let mut seen = Vec::new();
    flags.retain(|f| {
        let new = !seen.contains(f);
        seen.push(*f);
        new
    });
    let caveat = (excluded_replicates > 0).then(|| {
        format!(
            "{excluded_replicates} of {} replicates selected no model and were excluded; \
             the interval is conditional on selection succeeding",
            set.boot.len()
        )
    });
    Ok(IntervalResult {
        method,
        point_estimate,
        selected_model,
        n_top,
        reps: set.boot.len(),
        seed: cfg.seed,
        used_replicates: used.len(),
        excluded_replicates,
        excluded_jackknife,
        intervals,
        z0_hat: components.z0_hat,
        a_hat: components.a_hat,
        jackknife_mean: components.jackknife_mean,
        flags,
        caveat,
        boot_estimates: set.boot,
        jackknife_estimates: components.jackknife_estimates,
    })
}

fn replicates(table: &CountTable, cfg: &BootstrapConfig) -> Result<Vec<CountTable>> {
    par_map(cfg.reps, cfg.workers, |i| replicate(table, cfg.seed, i as u64))
}

/// Candidate count for an `n_top` request; `None` means all.
fn clamp_ntop(n_top: Option<usize>, available: usize) -> Result<usize> {
    match n_top {
        Some(0) => Err(Error::InvalidInput("n_top must be at least 1".into())),
        Some(n) => Ok(n.min(available)),
        None => Ok(available),
    }
}

fn restricted_method(n: usize, available: usize, degree: RankDegree) -> Method {
    if n == 1 {
        Method::Conditional
    } else if n >= available {
        Method::AllModels
    } else {
        match degree {
            RankDegree::Degree1 => Method::Degree1,
            RankDegree::Degree2 => Method::Degree2,
        }
    }
}

/// BCa interval with model selection restricted to the `n_top` best models
/// of the original ranking (`None` for every estimable model).
pub fn restricted_bootstrap(
    table: &CountTable,
    space: &ModelSpace,
    degree: RankDegree,
    n_top: Option<usize>,
    cfg: &BootstrapConfig,
    cache: &ExistenceCache,
) -> Result<IntervalResult> {
    cfg.validate()?;
    let orig = analyze_original(table, space, degree, cache, cfg)?;
    let n = clamp_ntop(n_top, orig.candidates.len())?;
    let top: Vec<&ModelSpec> = orig.candidates[..n].iter().map(|&i| space.get(i)).collect();

    let boots = replicates(table, cfg)?;
    let jacks = jackknife_tables(table);
    prewarm(cache, &top, boots.iter().chain(jacks.iter().map(|(_, t)| t)), cfg.workers)?;

    let estimate = |t: &CountTable| {
        let scores: Vec<ModelScore> = top.iter().map(|m| score(m, t, cache, &cfg.fit)).collect();
        select_estimate(&scores)
    };
    let boot = par_map(boots.len(), cfg.workers, |i| estimate(&boots[i]))?;
    let jack = par_map(jacks.len(), cfg.workers, |k| {
        let (h, t) = &jacks[k];
        (*h, table.count(*h), estimate(t))
    })?;

    assemble(
        restricted_method(n, orig.candidates.len(), degree),
        orig.point_estimate,
        orig.best_model(space).to_string(),
        Some(n),
        EstimateSet { boot, jack },
        cfg,
    )
}

/// Record indices of a BIC row: `j_0 = n`, then `j_k` is the position of
/// the minimum among the first `j_{k-1}` entries, until position 0.
///
/// Positions are 0-based. Non-finite BIC counts as `+∞`; among ties the
/// first position wins.
pub fn record_indices(bic: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut end = bic.len();
    while end > 0 {
        let key = |b: f64| if b.is_finite() { b } else { f64::INFINITY };
        let mut j = 0;
        for i in 1..end {
            if key(bic[i]) < key(bic[j]) {
                j = i;
            }
        }
        out.push(j);
        end = j;
    }
    out
}

/// Restricted estimate for every prefix length `1..=n`, filled from the
/// record indices: prefix `m` takes the record `j_k` with `j_k < m ≤ j_{k-1}`.
pub fn fill_from_records(bic: &[f64], estimates: &[Option<f64>]) -> (Vec<usize>, Vec<Option<f64>>) {
    let records = record_indices(bic);
    let mut filled = vec![None; bic.len()];
    let mut end = bic.len();
    for &j in &records {
        let v = if bic[j].is_finite() { estimates[j] } else { None };
        for slot in filled.iter_mut().take(end).skip(j) {
            *slot = v;
        }
        end = j;
    }
    (records, filled)
}

/// Raw matrices behind an n_top sweep, kept for inspection.
#[derive(Debug, Clone, Default)]
pub struct SweepState {
    /// `bic[i][j]`: replicate `i`, candidate `j` (rank order).
    pub bic: Vec<Vec<f64>>,
    pub estimates: Vec<Vec<Option<f64>>>,
    pub records: Vec<Vec<usize>>,
    /// `filled[i][m - 1]`: restricted estimate of replicate `i` for n_top = m.
    pub filled: Vec<Vec<Option<f64>>>,
    pub jack_filled: Vec<Vec<Option<f64>>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub degree: RankDegree,
    pub point_estimate: f64,
    pub selected_model: String,
    pub candidate_models: usize,
    pub reps: usize,
    pub seed: u64,
    /// One row per n_top, from 1 upwards.
    pub rows: Vec<IntervalResult>,
    #[serde(skip)]
    pub state: SweepState,
}

/// Intervals for every n_top from 1 to `n_top_high` (`None` for all
/// estimable models) from one set of fits per replicate.
pub fn ntop_sweep(
    table: &CountTable,
    space: &ModelSpace,
    degree: RankDegree,
    n_top_high: Option<usize>,
    cfg: &BootstrapConfig,
    cache: &ExistenceCache,
) -> Result<SweepResult> {
    cfg.validate()?;
    let orig = analyze_original(table, space, degree, cache, cfg)?;
    let available = orig.candidates.len();
    let n_high = clamp_ntop(n_top_high, available)?;
    let top: Vec<&ModelSpec> = orig.candidates[..n_high].iter().map(|&i| space.get(i)).collect();

    let boots = replicates(table, cfg)?;
    let jacks = jackknife_tables(table);
    prewarm(cache, &top, boots.iter().chain(jacks.iter().map(|(_, t)| t)), cfg.workers)?;

    let row = |t: &CountTable| -> (Vec<f64>, Vec<Option<f64>>) {
        top.iter()
            .map(|m| {
                let s = score(m, t, cache, &cfg.fit);
                (s.bic, s.estimate)
            })
            .unzip()
    };
    let boot_rows = par_map(boots.len(), cfg.workers, |i| row(&boots[i]))?;
    let jack_rows = par_map(jacks.len(), cfg.workers, |k| row(&jacks[k].1))?;

    let mut state = SweepState::default();
    for (b, e) in boot_rows {
        let (rec, filled) = fill_from_records(&b, &e);
        state.bic.push(b);
        state.estimates.push(e);
        state.records.push(rec);
        state.filled.push(filled);
    }
    state.jack_filled = jack_rows.iter().map(|(b, e)| fill_from_records(b, e).1).collect();

    let selected_model = orig.best_model(space).to_string();
    let mut rows = Vec::with_capacity(n_high);
    for m in 1..=n_high {
        let boot = state.filled.iter().map(|f| f[m - 1]).collect();
        let jack = jacks
            .iter()
            .zip(&state.jack_filled)
            .map(|((h, _), f)| (*h, table.count(*h), f[m - 1]))
            .collect();
        rows.push(assemble(
            restricted_method(m, available, degree),
            orig.point_estimate,
            selected_model.clone(),
            Some(m),
            EstimateSet { boot, jack },
            cfg,
        )?);
    }
    Ok(SweepResult {
        degree,
        point_estimate: orig.point_estimate,
        selected_model,
        candidate_models: available,
        reps: cfg.reps,
        seed: cfg.seed,
        rows,
        state,
    })
}

/// Stream reserved for drawing random starting models, disjoint from the
/// replicate streams.
const START_STREAM: u64 = u64::MAX;

/// The null model followed by `extra` random order-2 models built from
/// `n_pairs` pairs each.
pub fn downhill_starts(t: usize, extra: usize, n_pairs: usize, seed: u64) -> Result<Vec<ModelSpec>> {
    let mut starts = vec![ModelSpec::null(t)];
    if extra > 0 {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(START_STREAM);
        starts.extend(random_order2_starts(t, n_pairs, extra, &mut rng)?);
    }
    Ok(starts)
}

/// BCa interval for the estimator "best local minimum of a downhill search
/// from each of `starts`".
pub fn downhill_bootstrap(
    table: &CountTable,
    l: usize,
    starts: &[ModelSpec],
    cfg: &BootstrapConfig,
    cache: &ExistenceCache,
) -> Result<IntervalResult> {
    cfg.validate()?;
    if starts.is_empty() {
        return Err(Error::InvalidInput("downhill search needs at least one start".into()));
    }
    let orig = best_of_starts(starts, table, l, cache, &cfg.fit)?;
    let point = orig
        .fit
        .population_estimate
        .ok_or_else(|| Error::NoModelFound("downhill search gave no estimate".into()))?;

    let estimate = |t: &CountTable| {
        best_of_starts(starts, t, l, cache, &cfg.fit)
            .ok()
            .and_then(|o| o.fit.population_estimate)
    };
    let boots = replicates(table, cfg)?;
    let jacks = jackknife_tables(table);
    let boot = par_map(boots.len(), cfg.workers, |i| estimate(&boots[i]))?;
    let jack = par_map(jacks.len(), cfg.workers, |k| {
        let (h, t) = &jacks[k];
        (*h, table.count(*h), estimate(t))
    })?;
    assemble(
        Method::Downhill,
        point,
        orig.model().to_string(),
        None,
        EstimateSet { boot, jack },
        cfg,
    )
}

/// BCa interval for chi-squared selection within a p-value window.
/// Replicates where no model qualifies are dropped and counted.
pub fn chisq_bootstrap(
    table: &CountTable,
    space: &ModelSpace,
    window: PWindow,
    cfg: &BootstrapConfig,
    cache: &ExistenceCache,
) -> Result<IntervalResult> {
    cfg.validate()?;
    let models = space.models();
    let orig = select_by_chisq(models, table, cache, &cfg.fit, window).ok_or_else(|| {
        Error::NoModelFound(format!(
            "no model has a chi-squared p-value in [{}, {}]",
            window.lo, window.hi
        ))
    })?;
    let point = orig
        .fit
        .population_estimate
        .ok_or_else(|| Error::NoModelFound("selected model has no estimate".into()))?;

    let estimate = |t: &CountTable| {
        select_by_chisq(models, t, cache, &cfg.fit, window).and_then(|s| s.fit.population_estimate)
    };
    let boots = replicates(table, cfg)?;
    let jacks = jackknife_tables(table);
    let boot = par_map(boots.len(), cfg.workers, |i| estimate(&boots[i]))?;
    let jack = par_map(jacks.len(), cfg.workers, |k| {
        let (h, t) = &jacks[k];
        (*h, table.count(*h), estimate(t))
    })?;
    assemble(
        Method::Chisq,
        point,
        orig.fit.model.to_string(),
        None,
        EstimateSet { boot, jack },
        cfg,
    )
}
