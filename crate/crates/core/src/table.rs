//! Observed capture counts.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::history::{CaptureHistory, MAX_LISTS};

/// Counts `N_ω` over the non-empty capture histories on `t` lists.
///
/// Stored sparsely; histories without an entry have count zero and zero
/// entries are never stored, so two tables with equal counts compare equal.
/// The unobserved cell (the empty history) is never part of a table.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CountTable {
    t: usize,
    counts: BTreeMap<CaptureHistory, u64>,
    n_total: u64,
}

/// Canonical representation of a table's support, usable as a map key.
///
/// Bit `m` is set iff the history with mask `m` has a positive count.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SupportKey {
    t: usize,
    bits: Vec<u64>,
}

impl CountTable {
    /// Build a table from `(history, count)` pairs. Repeated histories are summed.
    pub fn new<I>(t: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (CaptureHistory, u64)>,
    {
        if t == 0 || t > MAX_LISTS {
            return Err(Error::InvalidInput(format!(
                "number of lists must be in 1..={MAX_LISTS}, got {t}"
            )));
        }
        let mut counts = BTreeMap::new();
        for (h, c) in entries {
            if h.is_empty() {
                return Err(Error::InvalidInput(
                    "the empty capture history cannot be observed".into(),
                ));
            }
            if !h.fits_in(t) {
                return Err(Error::InvalidInput(format!(
                    "history {h:?} refers to a list beyond t = {t}"
                )));
            }
            if c > 0 {
                *counts.entry(h).or_insert(0) += c;
            }
        }
        let n_total = counts.values().sum();
        Ok(CountTable { t, counts, n_total })
    }

    /// Convenience constructor from list-index slices; panics on invalid input.
    pub fn from_lists(t: usize, entries: &[(&[usize], u64)]) -> Self {
        Self::new(
            t,
            entries
                .iter()
                .map(|(lists, c)| (CaptureHistory::from_lists(lists.iter().copied()), *c)),
        )
        .expect("valid table")
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn n_total(&self) -> u64 {
        self.n_total
    }

    pub fn count(&self, h: CaptureHistory) -> u64 {
        self.counts.get(&h).copied().unwrap_or(0)
    }

    /// Positive cells in canonical history order.
    pub fn iter(&self) -> impl Iterator<Item = (CaptureHistory, u64)> + '_ {
        self.counts.iter().map(|(h, c)| (*h, *c))
    }

    /// Histories with a positive count, in canonical order.
    pub fn support(&self) -> Vec<CaptureHistory> {
        self.counts.keys().copied().collect()
    }

    pub fn support_len(&self) -> usize {
        self.counts.len()
    }

    /// `N*_θ`: total count over observed histories containing `theta`.
    pub fn marginal_count(&self, theta: CaptureHistory) -> u64 {
        self.counts
            .iter()
            .filter(|(h, _)| theta.is_subset_of(**h))
            .map(|(_, c)| *c)
            .sum()
    }

    pub fn support_key(&self) -> SupportKey {
        let words = (1usize << self.t).div_ceil(64);
        let mut bits = vec![0u64; words];
        for h in self.counts.keys() {
            let m = h.mask() as usize;
            bits[m / 64] |= 1 << (m % 64);
        }
        SupportKey { t: self.t, bits }
    }

    /// The 0/1 table taking the value 1 on this table's support.
    pub fn indicator(&self) -> CountTable {
        CountTable {
            t: self.t,
            counts: self.counts.keys().map(|h| (*h, 1)).collect(),
            n_total: self.counts.len() as u64,
        }
    }

    /// Table with `N_ω` replaced by `N_ω - 1`; `None` if `N_ω` is zero.
    pub fn decremented(&self, h: CaptureHistory) -> Option<CountTable> {
        let mut counts = self.counts.clone();
        let c = counts.get_mut(&h)?;
        *c -= 1;
        if *c == 0 {
            counts.remove(&h);
        }
        Some(CountTable {
            t: self.t,
            counts,
            n_total: self.n_total - 1,
        })
    }

    /// Every count multiplied by `factor` (`factor > 0`).
    pub fn scaled(&self, factor: u64) -> CountTable {
        assert!(factor > 0, "scale factor must be positive");
        CountTable {
            t: self.t,
            counts: self.counts.iter().map(|(h, c)| (*h, c * factor)).collect(),
            n_total: self.n_total * factor,
        }
    }
}
