//! Capture histories: subsets of the lists, stored as a fixed-width bitmask.
//!
//! Bit `i` of the mask stands for list `i + 1`. The same type indexes both
//! observed cells and model parameters.

use std::cmp::Ordering;
use std::fmt;

/// Largest number of lists supported.
pub const MAX_LISTS: usize = 16;

/// A subset of `{1, ..., t}`.
///
/// Ordering is canonical: first by order (cardinality), then by numeric mask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct CaptureHistory(u16);

impl CaptureHistory {
    pub const EMPTY: CaptureHistory = CaptureHistory(0);

    pub const fn from_mask(mask: u16) -> Self {
        CaptureHistory(mask)
    }

    /// History containing the given 1-based list indices.
    ///
    /// Panics if an index is outside `1..=16`.
    pub fn from_lists<I: IntoIterator<Item = usize>>(lists: I) -> Self {
        let mut mask = 0u16;
        for l in lists {
            assert!((1..=MAX_LISTS).contains(&l), "list index {l} out of range");
            mask |= 1 << (l - 1);
        }
        CaptureHistory(mask)
    }

    /// The single-list history `{list}` (1-based).
    pub fn single(list: usize) -> Self {
        Self::from_lists([list])
    }

    pub const fn mask(self) -> u16 {
        self.0
    }

    pub const fn order(self) -> u32 {
        self.0.count_ones()
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// `self ⊆ other`.
    pub const fn is_subset_of(self, other: CaptureHistory) -> bool {
        self.0 & !other.0 == 0
    }

    pub const fn contains_list(self, list: usize) -> bool {
        list >= 1 && list <= MAX_LISTS && self.0 & (1 << (list - 1)) != 0
    }

    /// True if every list in the history is one of `1..=t`.
    pub fn fits_in(self, t: usize) -> bool {
        t >= MAX_LISTS || (self.0 as u32) >> t == 0
    }

    /// 1-based list indices, ascending.
    pub fn lists(self) -> impl Iterator<Item = usize> {
        (0..MAX_LISTS).filter(move |i| self.0 & (1 << i) != 0).map(|i| i + 1)
    }

    /// Histories obtained by removing exactly one list.
    pub fn immediate_subsets(self) -> impl Iterator<Item = CaptureHistory> {
        (0..MAX_LISTS)
            .filter(move |i| self.0 & (1 << i) != 0)
            .map(move |i| CaptureHistory(self.0 & !(1 << i)))
    }

    /// All subsets of this history, including the empty one and itself.
    pub fn subsets(self) -> impl Iterator<Item = CaptureHistory> {
        let full = self.0;
        let mut next = Some(full);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == 0 { None } else { Some((cur - 1) & full) };
            Some(CaptureHistory(cur))
        })
    }

    /// Every non-empty history on `t` lists, in canonical order.
    pub fn all_nonempty(t: usize) -> Vec<CaptureHistory> {
        assert!(t <= MAX_LISTS, "at most {MAX_LISTS} lists are supported");
        let n: u32 = 1 << t;
        let mut v: Vec<CaptureHistory> = (1..n).map(|m| CaptureHistory(m as u16)).collect();
        v.sort();
        v
    }
}

impl Ord for CaptureHistory {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order()
            .cmp(&other.order())
            .then(self.0.cmp(&other.0))
    }
}

impl PartialOrd for CaptureHistory {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for CaptureHistory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, l) in self.lists().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, "}}")
    }
}

/// Compact label: digits for lists up to 9, dot-separated indices otherwise.
impl fmt::Display for CaptureHistory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "0");
        }
        let lists: Vec<usize> = self.lists().collect();
        if lists.iter().all(|&l| l <= 9) {
            for l in lists {
                write!(f, "{l}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = lists.iter().map(|l| l.to_string()).collect();
            write!(f, "{}", parts.join("."))
        }
    }
}

/// Serialized with its compact label, e.g. `"123"`.
impl serde::Serialize for CaptureHistory {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_popcount() {
        let h = CaptureHistory::from_lists([1, 3, 4]);
        assert_eq!(h.order(), 3);
        assert_eq!(h.mask(), 0b1101);
        assert_eq!(CaptureHistory::EMPTY.order(), 0);
    }

    #[test]
    fn subset_relation() {
        let a = CaptureHistory::from_lists([1, 2]);
        let b = CaptureHistory::from_lists([1, 2, 3]);
        assert!(a.is_subset_of(b));
        assert!(!b.is_subset_of(a));
        assert!(CaptureHistory::EMPTY.is_subset_of(a));
    }

    #[test]
    fn subsets_enumerates_power_set() {
        let h = CaptureHistory::from_lists([2, 4, 5]);
        let subs: Vec<_> = h.subsets().collect();
        assert_eq!(subs.len(), 8);
        assert!(subs.contains(&CaptureHistory::EMPTY));
        assert!(subs.iter().all(|s| s.is_subset_of(h)));
    }

    #[test]
    fn canonical_order_puts_low_order_first() {
        let mut v = vec![
            CaptureHistory::from_lists([1, 2]),
            CaptureHistory::from_lists([3]),
            CaptureHistory::EMPTY,
            CaptureHistory::from_lists([1]),
        ];
        v.sort();
        assert_eq!(
            v,
            vec![
                CaptureHistory::EMPTY,
                CaptureHistory::from_lists([1]),
                CaptureHistory::from_lists([3]),
                CaptureHistory::from_lists([1, 2]),
            ]
        );
    }

    #[test]
    fn all_nonempty_count() {
        assert_eq!(CaptureHistory::all_nonempty(4).len(), 15);
        assert!(CaptureHistory::all_nonempty(4).iter().all(|h| h.fits_in(4)));
    }

    #[test]
    fn display_labels() {
        assert_eq!(CaptureHistory::from_lists([1, 2, 3]).to_string(), "123");
        assert_eq!(CaptureHistory::from_lists([1, 12]).to_string(), "1.12");
    }
}
