//! Bias-corrected and accelerated (BCa) bootstrap intervals.
//!
//! The bias correction `ẑ₀` comes from the share of bootstrap estimates
//! below the original estimate; the acceleration `â` from a weighted
//! jackknife in which each positive cell `ω` contributes the
//! leave-one-case-out estimate `M̂₍ω₎` with weight `N_ω`:
//!
//! ```text
//! M̂₍·₎ = Σ N_ω M̂₍ω₎ / Σ N_ω,   S_k = Σ N_ω (M̂₍·₎ − M̂₍ω₎)^k,   â = S₃ / (6 S₂^{3/2})
//! ```
//!
//! The endpoint for a one-sided level `β` is the `β̃` quantile of the
//! bootstrap estimates with `Φ⁻¹(β̃) = ẑ₀ + w / (1 − â w)`, `w = ẑ₀ + Φ⁻¹(β)`.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::history::CaptureHistory;

/// How bootstrap estimates equal to the original estimate enter `ẑ₀`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TieRule {
    /// Count only estimates strictly below.
    #[default]
    Strict,
    /// Count ties as one half.
    Half,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BcaFlag {
    /// Every bootstrap estimate fell on one side of the original estimate.
    Z0Clamped,
    /// All jackknife estimates coincide; acceleration set to zero.
    ZeroJackknifeVariance,
    /// `1 − â w ≤ 0` for a lower endpoint; the minimum was reported.
    LowerAtExtreme,
    /// `1 − â w ≤ 0` for an upper endpoint; the maximum was reported.
    UpperAtExtreme,
    /// Fewer than ten usable bootstrap estimates.
    FewReplicates,
}

fn std_normal() -> Normal {
    Normal::standard()
}

pub fn norm_cdf(z: f64) -> f64 {
    std_normal().cdf(z)
}

pub fn norm_inv(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

#[derive(Debug, Clone, Serialize)]
pub struct JackknifeEstimate {
    pub history: CaptureHistory,
    pub weight: u64,
    pub estimate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BcaComponents {
    /// Finite bootstrap estimates in replicate order.
    #[serde(skip)]
    pub boot_estimates: Vec<f64>,
    #[serde(skip)]
    pub jackknife_estimates: Vec<JackknifeEstimate>,
    pub jackknife_mean: f64,
    pub s2: f64,
    pub s3: f64,
    pub z0_hat: f64,
    pub a_hat: f64,
    pub flags: Vec<BcaFlag>,
}

impl BcaComponents {
    /// Assemble the BCa ingredients.
    pub fn new(
        boot_estimates: Vec<f64>,
        jackknife_estimates: Vec<JackknifeEstimate>,
        m_hat: f64,
        ties: TieRule,
    ) -> Result<Self> {
        let b = boot_estimates.len();
        if b < 2 {
            return Err(Error::InvalidInput(format!(
                "BCa needs at least two bootstrap estimates, got {b}"
            )));
        }
        if boot_estimates.iter().any(|v| !v.is_finite()) || !m_hat.is_finite() {
            return Err(Error::InvalidInput("bootstrap estimates must be finite".into()));
        }
        let mut flags = Vec::new();
        if b < 10 {
            flags.push(BcaFlag::FewReplicates);
        }

        let below = boot_estimates.iter().filter(|&&v| v < m_hat).count() as f64;
        let equal = boot_estimates.iter().filter(|&&v| v == m_hat).count() as f64;
        let mut p = match ties {
            TieRule::Strict => below,
            TieRule::Half => below + 0.5 * equal,
        } / b as f64;
        let (p_lo, p_hi) = (1.0 / (b as f64 + 1.0), b as f64 / (b as f64 + 1.0));
        if p < p_lo || p > p_hi {
            p = p.clamp(p_lo, p_hi);
            flags.push(BcaFlag::Z0Clamped);
        }
        let z0_hat = norm_inv(p);

        let wsum: f64 = jackknife_estimates.iter().map(|j| j.weight as f64).sum();
        let (jackknife_mean, s2, s3) = if wsum > 0.0 {
            let mean = jackknife_estimates
                .iter()
                .map(|j| j.weight as f64 * j.estimate)
                .sum::<f64>()
                / wsum;
            let sk = |k: i32| {
                jackknife_estimates
                    .iter()
                    .map(|j| j.weight as f64 * (mean - j.estimate).powi(k))
                    .sum::<f64>()
            };
            (mean, sk(2), sk(3))
        } else {
            (f64::NAN, 0.0, 0.0)
        };
        let a_hat = if s2 > 0.0 {
            s3 / (6.0 * s2.powf(1.5))
        } else {
            flags.push(BcaFlag::ZeroJackknifeVariance);
            0.0
        };

        Ok(BcaComponents {
            boot_estimates,
            jackknife_estimates,
            jackknife_mean,
            s2,
            s3,
            z0_hat,
            a_hat,
            flags,
        })
    }
}

/// Where a one-sided endpoint lands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AdjustedLevel {
    Quantile(f64),
    /// The BCa transform broke down; use the smallest estimate.
    Minimum,
    /// The BCa transform broke down; use the largest estimate.
    Maximum,
}

/// BCa-adjusted quantile level `β̃` for nominal one-sided level `β`.
pub fn adjusted_level(beta: f64, z0: f64, a: f64) -> AdjustedLevel {
    let w = z0 + norm_inv(beta);
    let denom = 1.0 - a * w;
    if denom <= 0.0 {
        return if w > 0.0 { AdjustedLevel::Maximum } else { AdjustedLevel::Minimum };
    }
    AdjustedLevel::Quantile(norm_cdf(z0 + w / denom))
}

/// Slack on `q` so that `Φ(Φ⁻¹(β))` landing a hair above a multiple of
/// `1/B` does not move the endpoint by one order statistic. The normal
/// CDF round trip is accurate to about 1e-11.
const ORDER_SLACK: f64 = 1e-9;

/// The `⌈q·B⌉`-th order statistic of `sorted`, index clamped to `[1, B]`.
pub fn order_statistic(sorted: &[f64], q: f64) -> f64 {
    let b = sorted.len();
    let k = (((q - ORDER_SLACK) * b as f64).ceil() as i64).clamp(1, b as i64) as usize;
    sorted[k - 1]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelInterval {
    /// Two-sided confidence level, e.g. 0.95.
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
    /// Adjusted quantile levels actually used (`None` at an extreme).
    pub lower_quantile: Option<f64>,
    pub upper_quantile: Option<f64>,
}

/// Two-sided BCa intervals for each confidence level in `levels`.
///
/// Each level `1 − α` uses one-sided levels `α/2` and `1 − α/2`. Endpoint
/// breakdowns are recorded in `flags`.
pub fn bca_interval(
    components: &BcaComponents,
    levels: &[f64],
    flags: &mut Vec<BcaFlag>,
) -> Result<Vec<LevelInterval>> {
    let mut sorted = components.boot_estimates.clone();
    sorted.sort_by(f64::total_cmp);
    let mut out = Vec::with_capacity(levels.len());
    for &level in levels {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::InvalidInput(format!(
                "confidence level must be in (0, 1), got {level}"
            )));
        }
        let alpha = 1.0 - level;
        let mut endpoint = |beta: f64| match adjusted_level(beta, components.z0_hat, components.a_hat) {
            AdjustedLevel::Quantile(q) => (order_statistic(&sorted, q), Some(q)),
            AdjustedLevel::Minimum => {
                flags.push(BcaFlag::LowerAtExtreme);
                (sorted[0], None)
            }
            AdjustedLevel::Maximum => {
                flags.push(BcaFlag::UpperAtExtreme);
                (sorted[sorted.len() - 1], None)
            }
        };
        let (lower, lower_quantile) = endpoint(alpha / 2.0);
        let (upper, upper_quantile) = endpoint(1.0 - alpha / 2.0);
        out.push(LevelInterval {
            level,
            lower: lower.min(upper),
            upper: upper.max(lower),
            lower_quantile,
            upper_quantile,
        });
    }
    flags.sort_by_key(|f| *f as u8);
    flags.dedup();
    Ok(out)
}
