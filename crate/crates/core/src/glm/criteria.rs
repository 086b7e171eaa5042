use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::ln_gamma;

use super::irls::{FitResult, FitSettings, ParamCount, SampleSize};
use crate::table::CountTable;

/// Bayes information criterion of a fit.
///
/// `|Θ| log n + 2 Σ (μ̂ - N log μ̂ + log N!)` over the retained cells; cells
/// removed by the sparsity reduction have `μ̂ = N = 0` and contribute
/// nothing. Non-converged fits score `+∞`.
pub fn bic(fit: &FitResult, table: &CountTable, settings: &FitSettings) -> f64 {
    if !fit.status.is_converged() {
        return f64::INFINITY;
    }
    let n = match settings.sample_size {
        SampleSize::Case => table.n_total() as f64,
        SampleSize::Capture => ((1u64 << table.t()) - 1) as f64,
    };
    let k = match settings.param_count {
        ParamCount::Full => fit.model.len(),
        ParamCount::Estimated => fit.reduced.theta_dagger.len(),
    } as f64;
    let lik: f64 = fit
        .mu
        .iter()
        .map(|&(w, m)| {
            let y = table.count(w) as f64;
            let ylog = if y > 0.0 { y * m.ln() } else { 0.0 };
            m - ylog + ln_gamma(y + 1.0)
        })
        .sum();
    k * n.ln() + 2.0 * lik
}

/// Pearson goodness-of-fit summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquaredFit {
    pub statistic: f64,
    /// Residual degrees of freedom, `|Ω†| - |Θ†|`.
    pub df: i64,
    /// Upper-tail probability; `None` when `df <= 0`.
    pub p_value: Option<f64>,
}

impl ChiSquaredFit {
    /// `statistic / df` for models with positive residual df.
    pub fn ratio(&self) -> Option<f64> {
        (self.df > 0).then(|| self.statistic / self.df as f64)
    }
}

/// Pearson chi-squared statistic over the retained cells. `None` for
/// non-converged fits.
pub fn pearson_chisq(fit: &FitResult, table: &CountTable) -> Option<ChiSquaredFit> {
    if !fit.status.is_converged() {
        return None;
    }
    let statistic: f64 = fit
        .mu
        .iter()
        .map(|&(w, m)| {
            let d = table.count(w) as f64 - m;
            d * d / m
        })
        .sum();
    let df = fit.reduced.omega_dagger.len() as i64 - fit.reduced.theta_dagger.len() as i64;
    let p_value = (df > 0).then(|| {
        ChiSquared::new(df as f64)
            .map(|d| d.sf(statistic))
            .unwrap_or(f64::NAN)
    });
    Some(ChiSquaredFit { statistic, df, p_value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glm::irls::fit;
    use crate::model::ModelSpec;

    fn random_table(seed: u64) -> CountTable {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        CountTable::new(
            3,
            crate::history::CaptureHistory::all_nonempty(3)
                .into_iter()
                .map(|w| (w, rng.random_range(1..40u64))),
        )
        .unwrap()
    }

    /// Direct evaluation with a hand-rolled log-factorial.
    fn bic_oracle(fit: &FitResult, table: &CountTable) -> f64 {
        let logfact = |n: u64| (1..=n).map(|k| (k as f64).ln()).sum::<f64>();
        let mut s = 0.0;
        for w in crate::history::CaptureHistory::all_nonempty(table.t()) {
            let n = table.count(w);
            let m = fit.mu_of(w);
            if m == 0.0 {
                assert_eq!(n, 0);
                continue;
            }
            s += m - n as f64 * m.ln() + logfact(n);
        }
        fit.model.len() as f64 * (table.n_total() as f64).ln() + 2.0 * s
    }

    #[test]
    fn bic_matches_direct_formula() {
        for seed in 0..10 {
            let t = random_table(seed);
            for m in ["[]", "[12]", "[12,23]", "[12,13,23]"] {
                let f = fit(&ModelSpec::parse(3, m).unwrap(), &t, &FitSettings::default());
                let want = bic_oracle(&f, &t);
                assert!((f.bic - want).abs() < 1e-9 * want.abs(), "{m}: {} vs {want}", f.bic);
            }
        }
    }

    #[test]
    fn penalty_difference_when_fits_coincide() {
        let t = random_table(3);
        let f = fit(&ModelSpec::null(3), &t, &FitSettings::default());
        let mut g = f.clone();
        g.model = ModelSpec::parse(3, "[12]").unwrap();
        let s = FitSettings::default();
        let diff = bic(&g, &t, &s) - bic(&f, &t, &s);
        assert!((diff - (t.n_total() as f64).ln()).abs() < 1e-9);
    }

    #[test]
    fn capture_sample_size_switch() {
        let t = random_table(4);
        let f = fit(&ModelSpec::null(3), &t, &FitSettings::default());
        let s = FitSettings { sample_size: SampleSize::Capture, ..FitSettings::default() };
        let diff = bic(&f, &t, &FitSettings::default()) - bic(&f, &t, &s);
        let want = 4.0 * ((t.n_total() as f64).ln() - 7f64.ln());
        assert!((diff - want).abs() < 1e-9);
    }

    #[test]
    fn exact_fit_has_zero_chisq_and_unit_p() {
        let t = CountTable::from_lists(3, &[(&[1], 2), (&[2], 3), (&[3], 5), (&[1, 2], 6), (&[1, 3], 10), (&[2, 3], 15), (&[1, 2, 3], 30)]);
        let f = fit(&ModelSpec::null(3), &t, &FitSettings::default());
        let c = pearson_chisq(&f, &t).unwrap();
        assert!(c.statistic < 1e-12);
        assert_eq!(c.df, 3);
        assert!((c.p_value.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_df_has_no_p_value() {
        let t = random_table(5);
        let f = fit(&ModelSpec::parse(3, "[12,13,23]").unwrap(), &t, &FitSettings::default());
        let c = pearson_chisq(&f, &t).unwrap();
        assert_eq!(c.df, 0);
        assert!(c.p_value.is_none());
        assert!(c.ratio().is_none());
    }
}
