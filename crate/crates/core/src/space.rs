//! The lattice of hierarchical models: enumeration, neighbourhoods and BIC
//! ranks of higher degree.

use std::collections::HashMap;

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::history::{CaptureHistory, MAX_LISTS};
use crate::model::ModelSpec;

/// Default cap on the number of models [`enumerate_models`] will produce.
pub const DEFAULT_MODEL_LIMIT: usize = 10_000_000;

/// All hierarchical models on `t` lists with parameters of order at most `l`,
/// in canonical order.
#[derive(Debug, Clone)]
pub struct ModelSpace {
    t: usize,
    l: usize,
    models: Vec<ModelSpec>,
    index: HashMap<ModelSpec, usize>,
}

impl ModelSpace {
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn max_order(&self) -> usize {
        self.l
    }

    pub fn models(&self) -> &[ModelSpec] {
        &self.models
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn get(&self, i: usize) -> &ModelSpec {
        &self.models[i]
    }

    pub fn index_of(&self, m: &ModelSpec) -> Option<usize> {
        self.index.get(m).copied()
    }

    /// For every model, the indices of its distance-1 neighbours in the space.
    pub fn neighbor_indices(&self) -> Vec<Vec<usize>> {
        self.models
            .iter()
            .map(|m| {
                neighbors(m, self.l)
                    .iter()
                    .filter_map(|n| self.index_of(n))
                    .collect()
            })
            .collect()
    }
}

fn check_t_l(t: usize, l: usize) -> Result<()> {
    if !(2..=MAX_LISTS).contains(&t) {
        return Err(Error::InvalidInput(format!("t must be in 2..={MAX_LISTS}, got {t}")));
    }
    if l == 0 || l >= t {
        return Err(Error::InvalidInput(format!(
            "maximum order must be in 1..={}, got {l}",
            t - 1
        )));
    }
    Ok(())
}

/// Enumerate `H_{t,l}` with the default safety limit.
pub fn enumerate_models(t: usize, l: usize) -> Result<ModelSpace> {
    enumerate_models_with_limit(t, l, DEFAULT_MODEL_LIMIT)
}

/// Enumerate every hierarchical model on `t` lists with maximum order `l`.
///
/// Interaction terms are visited in canonical order (lower order first), so
/// whether a term may be included is decided entirely by earlier choices:
/// it needs all of its immediate subsets. Each down-set is therefore
/// produced exactly once.
pub fn enumerate_models_with_limit(t: usize, l: usize, limit: usize) -> Result<ModelSpace> {
    check_t_l(t, l)?;
    let candidates: Vec<CaptureHistory> = CaptureHistory::all_nonempty(t)
        .into_iter()
        .filter(|h| (2..=l as u32).contains(&h.order()))
        .collect();
    let base = ModelSpec::null(t).params().to_vec();
    let mut included = vec![false; 1 << t];
    for h in &base {
        included[h.mask() as usize] = true;
    }

    struct Walk<'a> {
        candidates: &'a [CaptureHistory],
        included: Vec<bool>,
        chosen: Vec<CaptureHistory>,
        base: &'a [CaptureHistory],
        t: usize,
        limit: usize,
        out: Vec<ModelSpec>,
    }

    impl Walk<'_> {
        fn go(&mut self, i: usize) -> Result<()> {
            if i == self.candidates.len() {
                if self.out.len() >= self.limit {
                    return Err(Error::SafetyLimit { limit: self.limit });
                }
                let mut params = self.base.to_vec();
                params.extend_from_slice(&self.chosen);
                self.out.push(ModelSpec::from_sorted_unchecked(self.t, params));
                return Ok(());
            }
            let h = self.candidates[i];
            self.go(i + 1)?;
            if h.immediate_subsets().all(|s| self.included[s.mask() as usize]) {
                self.included[h.mask() as usize] = true;
                self.chosen.push(h);
                self.go(i + 1)?;
                self.chosen.pop();
                self.included[h.mask() as usize] = false;
            }
            Ok(())
        }
    }

    let mut walk = Walk {
        candidates: &candidates,
        included: std::mem::take(&mut included),
        chosen: Vec::new(),
        base: &base,
        t,
        limit,
        out: Vec::new(),
    };
    walk.go(0)?;
    let mut models = walk.out;
    models.sort();
    let index = models.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
    Ok(ModelSpace { t, l, models, index })
}

/// Size of the symmetric difference of the two parameter sets.
pub fn model_distance(a: &ModelSpec, b: &ModelSpec) -> usize {
    let (x, y) = (a.params(), b.params());
    let (mut i, mut j, mut d) = (0, 0, 0);
    while i < x.len() && j < y.len() {
        match x[i].cmp(&y[j]) {
            std::cmp::Ordering::Less => {
                d += 1;
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                d += 1;
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    d + (x.len() - i) + (y.len() - j)
}

/// Models of maximum order `l` at distance exactly one from `model`,
/// reachable by adding or removing a single interaction term while keeping
/// the hierarchy. Main effects and the intercept are never removed.
/// Returned in canonical order.
pub fn neighbors(model: &ModelSpec, l: usize) -> Vec<ModelSpec> {
    let t = model.t();
    let params = model.params();
    let mut out = Vec::new();

    for h in CaptureHistory::all_nonempty(t) {
        let ord = h.order() as usize;
        if ord < 2 || ord > l || ord >= t {
            continue;
        }
        if model.contains(h) {
            let has_superset = params
                .iter()
                .any(|p| *p != h && h.is_subset_of(*p));
            if !has_superset {
                let rest: Vec<CaptureHistory> =
                    params.iter().copied().filter(|p| *p != h).collect();
                out.push(ModelSpec::from_sorted_unchecked(t, rest));
            }
        } else if h.immediate_subsets().all(|s| model.contains(s)) {
            let mut more = params.to_vec();
            let pos = more.binary_search(&h).unwrap_err();
            more.insert(pos, h);
            out.push(ModelSpec::from_sorted_unchecked(t, more));
        }
    }
    out.sort();
    out
}

/// BIC ranks of degrees `1..=K` for every model of a space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankTable {
    /// `ranks[k - 1][i]` is the rank of degree `k` of model `i`.
    ranks: Vec<Vec<usize>>,
}

impl RankTable {
    pub fn degree_count(&self) -> usize {
        self.ranks.len()
    }

    /// Rank of degree `k` (1-based) for model index `i`.
    pub fn rank(&self, k: usize, i: usize) -> usize {
        self.ranks[k - 1][i]
    }

    pub fn degree(&self, k: usize) -> &[usize] {
        &self.ranks[k - 1]
    }
}

/// Indices sorted by BIC ascending; NaN and +∞ last, ties by index.
pub fn sort_by_bic(bic: &[f64]) -> Vec<usize> {
    let key = |b: f64| if b.is_nan() { f64::INFINITY } else { b };
    let mut idx: Vec<usize> = (0..bic.len()).collect();
    idx.sort_by(|&a, &b| key(bic[a]).total_cmp(&key(bic[b])).then(a.cmp(&b)));
    idx
}

/// Ranks of degree 1 come from sorting `bic` (aligned with `space`); higher
/// degrees take the minimum lower-degree rank over each model's
/// neighbourhood, the model itself included.
pub fn bic_ranks(space: &ModelSpace, bic: &[f64], max_degree: usize) -> RankTable {
    assert_eq!(bic.len(), space.len(), "BIC vector must align with the space");
    assert!(max_degree >= 1, "degree must be at least 1");
    let n = bic.len();
    let mut r1 = vec![0usize; n];
    for (pos, i) in sort_by_bic(bic).into_iter().enumerate() {
        r1[i] = pos + 1;
    }
    let mut ranks = vec![r1];
    if max_degree > 1 {
        let nbrs = space.neighbor_indices();
        for _ in 2..=max_degree {
            let prev = ranks.last().unwrap();
            let next: Vec<usize> = (0..n)
                .map(|i| nbrs[i].iter().map(|&j| prev[j]).fold(prev[i], usize::min))
                .collect();
            ranks.push(next);
        }
    }
    RankTable { ranks }
}

/// Model indices ordered by rank of the given degree, ties split by the
/// original (degree 1) rank.
pub fn rank_order(ranks: &RankTable, degree: usize) -> Result<Vec<usize>> {
    if degree == 0 || degree > ranks.degree_count() {
        return Err(Error::InvalidInput(format!(
            "rank degree {degree} not available (computed up to {})",
            ranks.degree_count()
        )));
    }
    let rd = ranks.degree(degree);
    let r1 = ranks.degree(1);
    let mut idx: Vec<usize> = (0..r1.len()).collect();
    idx.sort_by_key(|&i| (rd[i], r1[i]));
    Ok(idx)
}

/// `count` random order-2 models, each the closure of `n_pairs` distinct
/// pairs of lists drawn uniformly.
pub fn random_order2_starts<R: Rng + ?Sized>(
    t: usize,
    n_pairs: usize,
    count: usize,
    rng: &mut R,
) -> Result<Vec<ModelSpec>> {
    let pairs: Vec<CaptureHistory> = CaptureHistory::all_nonempty(t)
        .into_iter()
        .filter(|h| h.order() == 2)
        .collect();
    if n_pairs > pairs.len() {
        return Err(Error::InvalidInput(format!(
            "cannot draw {n_pairs} distinct pairs from {} lists",
            t
        )));
    }
    if t < 3 && n_pairs > 0 {
        return Err(Error::InvalidInput("order-2 models need at least three lists".into()));
    }
    (0..count)
        .map(|_| {
            let chosen = sample(rng, pairs.len(), n_pairs).into_iter().map(|i| pairs[i]);
            ModelSpec::from_generators(t, chosen)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::is_hierarchical;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn small_space_counts() {
        assert_eq!(enumerate_models(3, 2).unwrap().len(), 8);
        assert_eq!(enumerate_models(3, 1).unwrap().len(), 1);
        assert_eq!(enumerate_models(2, 1).unwrap().len(), 1);
        assert_eq!(enumerate_models(4, 3).unwrap().len(), 113);
    }

    #[test]
    fn members_valid_distinct_and_sorted() {
        let s = enumerate_models(4, 2).unwrap();
        for m in s.models() {
            assert!(is_hierarchical(m.params(), 4));
            assert!(m.max_order() <= 2);
        }
        assert!(s.models().windows(2).all(|w| w[0] < w[1]));
        assert_eq!(s.models()[0], ModelSpec::null(4));
    }

    #[test]
    fn invalid_bounds_rejected() {
        assert!(enumerate_models(3, 3).is_err());
        assert!(enumerate_models(1, 1).is_err());
        assert!(enumerate_models(4, 0).is_err());
    }

    #[test]
    fn safety_limit_enforced() {
        match enumerate_models_with_limit(4, 3, 100) {
            Err(Error::SafetyLimit { limit }) => assert_eq!(limit, 100),
            other => panic!("expected safety limit, got {other:?}"),
        }
        assert!(enumerate_models_with_limit(4, 3, 113).is_ok());
    }

    #[test]
    fn distance_examples() {
        let null = ModelSpec::null(3);
        assert_eq!(model_distance(&null, &null), 0);
        let m12 = ModelSpec::parse(3, "[12,3]").unwrap();
        assert_eq!(model_distance(&null, &m12), 1);
        let a = ModelSpec::parse(3, "[12,13]").unwrap();
        let b = ModelSpec::parse(3, "[23,1]").unwrap();
        assert_eq!(model_distance(&a, &b), 3);
    }

    fn brute_neighbors(space: &ModelSpace, m: &ModelSpec) -> Vec<ModelSpec> {
        space
            .models()
            .iter()
            .filter(|o| model_distance(m, o) == 1)
            .cloned()
            .collect()
    }

    #[test]
    fn neighbors_match_brute_force_scan() {
        for (t, l) in [(3, 2), (4, 2), (4, 3)] {
            let space = enumerate_models(t, l).unwrap();
            for m in space.models() {
                assert_eq!(neighbors(m, l), brute_neighbors(&space, m), "{m}");
            }
        }
    }

    #[test]
    fn neighbor_examples_three_lists() {
        let null = ModelSpec::null(3);
        let n = neighbors(&null, 2);
        assert_eq!(n.len(), 3);
        assert!(n.iter().all(|m| m.interactions().count() == 1));

        let full = ModelSpec::parse(3, "[12,13,23]").unwrap();
        let n = neighbors(&full, 2);
        assert_eq!(n.len(), 3);
        assert!(n.iter().all(|m| m.interactions().count() == 2));

        // Order cap: {12} cannot grow to {123} with l = 2.
        let m12 = ModelSpec::parse(3, "[12,3]").unwrap();
        assert!(neighbors(&m12, 2).iter().all(|m| m.max_order() <= 2));
    }

    #[test]
    fn neighbors_are_symmetric() {
        let space = enumerate_models(4, 3).unwrap();
        for m in space.models() {
            for n in neighbors(m, 3) {
                assert!(neighbors(&n, 3).contains(m));
            }
        }
    }

    #[test]
    fn ranks_monotone_and_stabilize() {
        let space = enumerate_models(4, 3).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let bic: Vec<f64> = (0..space.len()).map(|_| rng.random::<f64>()).collect();
        let ranks = bic_ranks(&space, &bic, 12);
        let mut r1 = ranks.degree(1).to_vec();
        r1.sort();
        assert_eq!(r1, (1..=space.len()).collect::<Vec<_>>());
        for k in 2..=12 {
            for i in 0..space.len() {
                assert!(ranks.rank(k, i) <= ranks.rank(k - 1, i));
            }
        }
        // The lattice diameter is at most the number of interaction terms (10).
        assert!(ranks.degree(12).iter().all(|&r| r == 1));
        assert_eq!(ranks.degree(11), ranks.degree(12));
    }

    #[test]
    fn infinite_bic_ranked_last_canonically() {
        let space = enumerate_models(3, 2).unwrap();
        let mut bic = vec![5.0; 8];
        bic[1] = f64::INFINITY;
        bic[4] = f64::INFINITY;
        bic[6] = 1.0;
        let r = bic_ranks(&space, &bic, 1);
        assert_eq!(r.rank(1, 6), 1);
        assert_eq!(r.rank(1, 1), 7);
        assert_eq!(r.rank(1, 4), 8);
        assert_eq!(r.rank(1, 0), 2);
    }

    #[test]
    fn rank_order_degree_one_and_two_share_first() {
        let space = enumerate_models(4, 2).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let bic: Vec<f64> = (0..space.len()).map(|_| rng.random::<f64>()).collect();
        let ranks = bic_ranks(&space, &bic, 2);
        let o1 = rank_order(&ranks, 1).unwrap();
        let o2 = rank_order(&ranks, 2).unwrap();
        assert_eq!(o1[0], o2[0]);
        assert_eq!(ranks.rank(1, o1[0]), 1);
        assert!(rank_order(&ranks, 3).is_err());
    }

    #[test]
    fn random_starts() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let all = ModelSpec::parse(3, "[12,13,23]").unwrap();
        for m in random_order2_starts(3, 3, 4, &mut rng).unwrap() {
            assert_eq!(m, all);
        }
        let starts = random_order2_starts(5, 5, 5, &mut rng).unwrap();
        assert_eq!(starts.len(), 5);
        for m in &starts {
            assert!(is_hierarchical(m.params(), 5));
            assert_eq!(m.max_order(), 2);
            assert_eq!(m.interactions().count(), 5);
        }
        let a = random_order2_starts(5, 5, 5, &mut ChaCha20Rng::seed_from_u64(9)).unwrap();
        let b = random_order2_starts(5, 5, 5, &mut ChaCha20Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert!(random_order2_starts(3, 4, 1, &mut rng).is_err());
    }
}
