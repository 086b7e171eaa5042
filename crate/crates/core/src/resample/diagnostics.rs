//! Stability of the BIC ranking under resampling.

use serde::Serialize;

use super::bootstrap::{analyze_original, par_map, BootstrapConfig, RankDegree};
use super::sampling::replicate;
use crate::error::Result;
use crate::existence::ExistenceCache;
use crate::glm::{argmin_bic, fit_checked};
use crate::space::{rank_order, ModelSpace};
use crate::table::CountTable;

pub const DEFAULT_CONTAINMENT_GRID: [usize; 5] = [1, 5, 10, 50, 100];

/// Average ranks (1-based), ties sharing the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman correlation over positions where both values are finite.
/// `None` with fewer than three such positions or a constant margin.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .map(|(a, b)| (*a, *b))
        .unzip();
    if xs.len() < 3 {
        return None;
    }
    let (rx, ry) = (average_ranks(&xs), average_ranks(&ys));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Containment {
    pub n_top: usize,
    /// Replicates whose overall BIC minimiser is among the first `n_top`
    /// models of the original degree-1 ordering.
    pub count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsReport {
    pub reps: usize,
    pub seed: u64,
    pub models: usize,
    pub selected_model: String,
    pub mean_rho: Option<f64>,
    /// Replicates for which ρ was undefined.
    pub undefined_rho: usize,
    pub containment: Vec<Containment>,
    /// Replicates in which no model was estimable.
    pub no_minimum: usize,
    /// Per replicate: Spearman ρ between original and replicate BIC.
    pub rho: Vec<Option<f64>>,
    /// Per replicate: position (1-based) of its BIC minimiser in the
    /// original degree-1 and degree-2 orderings.
    pub m1: Vec<Option<usize>>,
    pub m2: Vec<Option<usize>>,
}

/// Compare every replicate's BIC vector with the original one.
pub fn diagnose(
    table: &CountTable,
    space: &ModelSpace,
    grid: &[usize],
    cfg: &BootstrapConfig,
    cache: &ExistenceCache,
) -> Result<DiagnosticsReport> {
    cfg.validate()?;
    let orig = analyze_original(table, space, RankDegree::Degree1, cache, cfg)?;
    let bic0: Vec<f64> = orig.scores.iter().map(|s| s.bic).collect();
    let position = |order: &[usize]| {
        let mut pos = vec![0usize; order.len()];
        for (p, &i) in order.iter().enumerate() {
            pos[i] = p + 1;
        }
        pos
    };
    let pos1 = position(&rank_order(&orig.ranks, 1)?);
    let pos2 = position(&rank_order(&orig.ranks, 2)?);

    let per_rep = par_map(cfg.reps, cfg.workers, |i| {
        let t = replicate(table, cfg.seed, i as u64);
        let bic: Vec<f64> = space
            .models()
            .iter()
            .map(|m| fit_checked(m, &t, cache, &cfg.fit).bic)
            .collect();
        (spearman(&bic0, &bic), argmin_bic(bic.iter().copied()))
    })?;

    let rho: Vec<Option<f64>> = per_rep.iter().map(|(r, _)| *r).collect();
    let m1: Vec<Option<usize>> = per_rep.iter().map(|(_, g)| g.map(|g| pos1[g])).collect();
    let m2: Vec<Option<usize>> = per_rep.iter().map(|(_, g)| g.map(|g| pos2[g])).collect();
    let defined: Vec<f64> = rho.iter().flatten().copied().collect();
    let mean_rho = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
    let containment = grid
        .iter()
        .map(|&n| Containment {
            n_top: n,
            count: m1.iter().flatten().filter(|&&p| p <= n).count(),
        })
        .collect();

    Ok(DiagnosticsReport {
        reps: cfg.reps,
        seed: cfg.seed,
        models: space.len(),
        selected_model: orig.best_model(space).to_string(),
        mean_rho,
        undefined_rho: rho.len() - defined.len(),
        containment,
        no_minimum: m1.iter().filter(|p| p.is_none()).count(),
        rho,
        m1,
        m2,
    })
}
