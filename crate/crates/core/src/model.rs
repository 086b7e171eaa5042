//! Hierarchical loglinear models, identified by their parameter sets.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::history::{CaptureHistory, MAX_LISTS};

/// A hierarchical parameter set `Θ` on `t` lists.
///
/// Always contains the empty history and every single-list history, is
/// closed under taking subsets, and is never the full power set.
/// `params` is kept sorted in canonical history order, so the derived
/// ordering on models is deterministic.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModelSpec {
    t: usize,
    params: Vec<CaptureHistory>,
}

/// Whether `params` satisfies every model invariant on `t` lists.
pub fn is_hierarchical(params: &[CaptureHistory], t: usize) -> bool {
    if t == 0 || t > MAX_LISTS {
        return false;
    }
    let set: BTreeSet<CaptureHistory> = params.iter().copied().collect();
    if !set.contains(&CaptureHistory::EMPTY) {
        return false;
    }
    if !(1..=t).all(|l| set.contains(&CaptureHistory::single(l))) {
        return false;
    }
    if set.iter().any(|h| !h.fits_in(t)) {
        return false;
    }
    // Checking immediate subsets is enough for closure by induction on order.
    if set
        .iter()
        .any(|h| h.immediate_subsets().any(|s| !set.contains(&s)))
    {
        return false;
    }
    set.len() < (1usize << t)
}

impl ModelSpec {
    /// Validate and build a model from its full parameter set.
    pub fn new(t: usize, params: impl IntoIterator<Item = CaptureHistory>) -> Result<Self> {
        let set: BTreeSet<CaptureHistory> = params.into_iter().collect();
        let params: Vec<CaptureHistory> = set.into_iter().collect();
        if !is_hierarchical(&params, t) {
            return Err(Error::InvalidModel(format!(
                "parameter set {params:?} is not a valid hierarchical model on {t} lists"
            )));
        }
        Ok(ModelSpec { t, params })
    }

    /// The main-effects model: the empty history plus every single list.
    pub fn null(t: usize) -> Self {
        assert!((2..=MAX_LISTS).contains(&t), "t must be in 2..=16");
        let mut params = vec![CaptureHistory::EMPTY];
        params.extend((1..=t).map(CaptureHistory::single));
        ModelSpec { t, params }
    }

    /// Hierarchical closure of `generators` together with all main effects.
    pub fn from_generators(
        t: usize,
        generators: impl IntoIterator<Item = CaptureHistory>,
    ) -> Result<Self> {
        if !(2..=MAX_LISTS).contains(&t) {
            return Err(Error::InvalidModel(format!("t must be in 2..={MAX_LISTS}, got {t}")));
        }
        let mut set: BTreeSet<CaptureHistory> = Self::null(t).params.into_iter().collect();
        for g in generators {
            if !g.fits_in(t) {
                return Err(Error::InvalidModel(format!(
                    "generator {g} refers to a list beyond t = {t}"
                )));
            }
            set.extend(g.subsets());
        }
        Self::new(t, set)
    }

    /// Parse bracket notation such as `[123,14]` on `t` lists.
    ///
    /// Each generator is a run of list digits (`1`-`9`), or dot-separated
    /// indices when more than nine lists are in play (`1.10.12`). `[]` is
    /// the main-effects model.
    pub fn parse(t: usize, s: &str) -> Result<Self> {
        let s = s.trim();
        let inner = s
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| Error::InvalidModel(format!("expected [..] notation, got {s:?}")))?;
        let mut gens = Vec::new();
        for part in inner.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let lists: Vec<usize> = if part.contains('.') {
                part.split('.')
                    .map(|x| {
                        x.parse::<usize>()
                            .map_err(|_| Error::InvalidModel(format!("bad list index in {part:?}")))
                    })
                    .collect::<Result<_>>()?
            } else {
                part.chars()
                    .map(|c| {
                        c.to_digit(10)
                            .filter(|d| *d >= 1)
                            .map(|d| d as usize)
                            .ok_or_else(|| Error::InvalidModel(format!("bad list digit in {part:?}")))
                    })
                    .collect::<Result<_>>()?
            };
            if lists.iter().any(|&l| l == 0 || l > t) {
                return Err(Error::InvalidModel(format!(
                    "generator {part:?} refers to a list outside 1..={t}"
                )));
            }
            gens.push(CaptureHistory::from_lists(lists));
        }
        Self::from_generators(t, gens)
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Parameters in canonical order.
    pub fn params(&self) -> &[CaptureHistory] {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn contains(&self, h: CaptureHistory) -> bool {
        self.params.binary_search(&h).is_ok()
    }

    pub fn max_order(&self) -> u32 {
        self.params.iter().map(|h| h.order()).max().unwrap_or(0)
    }

    /// Interaction terms (order ≥ 2).
    pub fn interactions(&self) -> impl Iterator<Item = CaptureHistory> + '_ {
        self.params.iter().copied().filter(|h| h.order() >= 2)
    }

    /// Maximal parameters, i.e. the generators shown in bracket notation.
    pub fn generators(&self) -> Vec<CaptureHistory> {
        let mut gens: Vec<CaptureHistory> = self
            .params
            .iter()
            .copied()
            .filter(|h| !h.is_empty())
            .filter(|h| {
                !self
                    .params
                    .iter()
                    .any(|o| o != h && h.is_subset_of(*o))
            })
            .collect();
        // Highest order first, like "[123,14]".
        gens.sort_by(|a, b| b.order().cmp(&a.order()).then(a.mask().cmp(&b.mask())));
        gens
    }

    pub(crate) fn from_sorted_unchecked(t: usize, params: Vec<CaptureHistory>) -> Self {
        debug_assert!(params.windows(2).all(|w| w[0] < w[1]));
        ModelSpec { t, params }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.generators().iter().map(|g| g.to_string()).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ModelSpec(t={}, {})", self.t, self)
    }
}

/// Parses bracket notation, inferring `t` from the largest list mentioned.
impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s
            .split(|c: char| !c.is_ascii_digit())
            .filter(|p| !p.is_empty())
            .flat_map(|p| {
                if s.contains('.') {
                    vec![p.parse::<usize>().unwrap_or(0)]
                } else {
                    p.chars().filter_map(|c| c.to_digit(10)).map(|d| d as usize).collect()
                }
            })
            .max()
            .unwrap_or(0);
        Self::parse(t, s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(lists: &[usize]) -> CaptureHistory {
        CaptureHistory::from_lists(lists.iter().copied())
    }

    #[test]
    fn hierarchy_examples() {
        let null = [h(&[]), h(&[1]), h(&[2]), h(&[3])];
        assert!(is_hierarchical(&null, 3));
        let bad = [h(&[]), h(&[1]), h(&[2]), h(&[3]), h(&[1, 2, 3])];
        assert!(!is_hierarchical(&bad, 3));
        let good = [h(&[]), h(&[1]), h(&[2]), h(&[3]), h(&[1, 2]), h(&[2, 3])];
        assert!(is_hierarchical(&good, 3));
    }

    #[test]
    fn missing_main_effect_or_empty_rejected() {
        assert!(!is_hierarchical(&[h(&[1]), h(&[2]), h(&[3])], 3));
        assert!(!is_hierarchical(&[h(&[]), h(&[1]), h(&[2])], 3));
    }

    #[test]
    fn saturated_model_rejected() {
        let all: Vec<CaptureHistory> = h(&[1, 2, 3]).subsets().collect();
        assert!(!is_hierarchical(&all, 3));
        assert!(ModelSpec::parse(3, "[123]").is_err());
    }

    #[test]
    fn bracket_round_trip() {
        let m = ModelSpec::parse(4, "[123,14]").unwrap();
        assert_eq!(m.to_string(), "[123,14]");
        assert_eq!(m.len(), 1 + 4 + 4 + 1);
        assert!(m.contains(h(&[1, 3])));
        assert!(!m.contains(h(&[2, 4])));
        let m: ModelSpec = "[12,23]".parse().unwrap();
        assert_eq!(m.t(), 3);
        assert_eq!(m.to_string(), "[12,23]");
    }

    #[test]
    fn null_model_notation() {
        let m = ModelSpec::parse(3, "[]").unwrap();
        assert_eq!(m, ModelSpec::null(3));
        assert_eq!(m.to_string(), "[1,2,3]");
        assert_eq!(ModelSpec::parse(3, "[1,2,3]").unwrap(), m);
        assert_eq!(ModelSpec::parse(3, "[12]").unwrap().to_string(), "[12,3]");
    }

    #[test]
    fn many_lists_use_dotted_notation() {
        let m = ModelSpec::parse(12, "[1.10,11.12]").unwrap();
        assert!(m.contains(h(&[1, 10])));
        assert!(m.to_string().contains("1.10"));
    }

    #[test]
    fn parse_errors() {
        assert!(ModelSpec::parse(3, "12,23").is_err());
        assert!(ModelSpec::parse(3, "[14]").is_err());
        assert!(ModelSpec::parse(3, "[1x]").is_err());
    }
}
