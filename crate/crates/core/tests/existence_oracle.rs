//! Existence LP against exhaustive basis enumeration, and existence
//! verdicts against the behaviour of the fitter.

use mse_core::existence::{fr_check, lp_max_s, ExistenceProblem, MaxS};
use mse_core::glm::{fit, FitSettings, FitStatus, NonConvergence};
use mse_core::history::CaptureHistory;
use mse_core::space::enumerate_models;
use mse_core::table::CountTable;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn q(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Solve `M z = rhs` exactly. `None` unless the solution is unique.
fn solve_unique(mut m: Vec<Vec<BigRational>>, mut rhs: Vec<BigRational>) -> Option<Vec<BigRational>> {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut pivot_row = 0;
    let mut pivots = Vec::new();
    for c in 0..cols {
        let p = (pivot_row..rows).find(|&r| !m[r][c].is_zero())?;
        m.swap(pivot_row, p);
        rhs.swap(pivot_row, p);
        let inv = m[pivot_row][c].recip();
        for v in m[pivot_row].iter_mut() {
            *v = &*v * &inv;
        }
        rhs[pivot_row] = &rhs[pivot_row] * &inv;
        for r in 0..rows {
            if r != pivot_row && !m[r][c].is_zero() {
                let f = m[r][c].clone();
                let pivot = m[pivot_row].clone();
                for (v, pv) in m[r].iter_mut().zip(&pivot) {
                    *v = &*v - &f * pv;
                }
                let d = &f * &rhs[pivot_row];
                rhs[r] = &rhs[r] - d;
            }
        }
        pivots.push(c);
        pivot_row += 1;
    }
    if rhs[pivot_row..].iter().any(|v| !v.is_zero()) {
        return None;
    }
    let mut z = vec![BigRational::zero(); cols];
    for (r, &c) in pivots.iter().enumerate() {
        z[c] = rhs[r].clone();
    }
    Some(z)
}

/// `max s` subject to `Aᵀ(y + s·1) = ν`, `y ≥ 0`, by trying every set of
/// basic `y` columns together with `s`.
fn brute_force_max_s(p: &ExistenceProblem) -> Option<BigRational> {
    let (nc, np) = (p.cells.len(), p.params.len());
    let col = |i: usize| -> Vec<BigRational> { (0..np).map(|j| q(p.incidence[i][j] as i64)).collect() };
    let ones: Vec<BigRational> = (0..np)
        .map(|j| q((0..nc).map(|i| p.incidence[i][j] as i64).sum()))
        .collect();
    let nu: Vec<BigRational> = p.nu.iter().map(|&v| q(v as i64)).collect();
    let mut best: Option<BigRational> = None;
    for mask in 0u32..(1 << nc) {
        if mask.count_ones() as usize > np {
            continue;
        }
        let chosen: Vec<usize> = (0..nc).filter(|i| mask & (1 << i) != 0).collect();
        for with_s in [true, false] {
            let mut cols: Vec<Vec<BigRational>> = chosen.iter().map(|&i| col(i)).collect();
            if with_s {
                cols.push(ones.clone());
            }
            if cols.is_empty() {
                continue;
            }
            let m: Vec<Vec<BigRational>> = (0..np).map(|j| cols.iter().map(|c| c[j].clone()).collect()).collect();
            let Some(z) = solve_unique(m, nu.clone()) else { continue };
            let ny = chosen.len();
            if z[..ny].iter().any(|v| v.is_negative()) {
                continue;
            }
            let s = if with_s { z[ny].clone() } else { BigRational::zero() };
            if best.as_ref().is_none_or(|b| s > *b) {
                best = Some(s);
            }
        }
    }
    best
}

fn random_table(rng: &mut ChaCha20Rng, t: usize, p: f64) -> CountTable {
    loop {
        let mut cells = Vec::new();
        for h in CaptureHistory::all_nonempty(t) {
            if rng.random_bool(p) {
                cells.push((h, rng.random_range(1..=12u64)));
            }
        }
        if !cells.is_empty() {
            return CountTable::new(t, cells).unwrap();
        }
    }
}

#[test]
fn lp_matches_basis_enumeration() {
    let mut rng = ChaCha20Rng::seed_from_u64(31);
    let spaces = [enumerate_models(3, 2).unwrap(), enumerate_models(4, 2).unwrap()];
    let mut checked = 0;
    let mut positive = 0;
    while checked < 150 {
        let space = &spaces[rng.random_range(0..2)];
        let model = space.get(rng.random_range(0..space.len()));
        let table = random_table(&mut rng, space.t(), 0.55);
        let p = ExistenceProblem::new(model, &table);
        if p.cells.is_empty() || p.cells.len() > 11 {
            continue;
        }
        let oracle = brute_force_max_s(&p).expect("x = N is feasible");
        match lp_max_s(&p) {
            MaxS::Value(v) => assert_eq!(v, oracle, "{model} on {table:?}"),
            MaxS::Infeasible => panic!("{model}: solver says infeasible"),
        }
        assert_eq!(fr_check(model, &table), oracle.is_positive(), "{model}");
        positive += oracle.is_positive() as usize;
        checked += 1;
    }
    // Both verdicts must have been exercised.
    assert!(positive > 10 && positive < 140, "{positive} positive");
}

#[test]
fn intercept_bounds_s_by_mean_count() {
    let t = CountTable::from_lists(3, &[(&[1], 3), (&[2], 5), (&[3], 7), (&[1, 2], 1)]);
    let space = enumerate_models(3, 2).unwrap();
    let p = ExistenceProblem::new(space.get(0), &t);
    let MaxS::Value(v) = lp_max_s(&p) else { panic!() };
    let bound = BigRational::new(BigInt::from(16), BigInt::from(p.cells.len() as i64));
    assert!(v <= bound);
    // Main effects alone exist whenever every list caught someone.
    assert!(v.is_positive());
}

#[test]
fn existence_agrees_with_fitter() {
    let mut rng = ChaCha20Rng::seed_from_u64(32);
    let spaces = [enumerate_models(3, 2).unwrap(), enumerate_models(4, 3).unwrap()];
    let settings = FitSettings::default();
    for _ in 0..300 {
        let space = &spaces[rng.random_range(0..2)];
        let model = space.get(rng.random_range(0..space.len()));
        let table = random_table(&mut rng, space.t(), 0.6);
        let exists = fr_check(model, &table);
        let f = fit(model, &table, &settings);
        if exists {
            assert!(
                matches!(
                    f.status,
                    FitStatus::Converged | FitStatus::NotConverged(NonConvergence::RankDeficient)
                ),
                "{model}: {:?}",
                f.status
            );
        } else {
            // Without an MLE the iterations either run off to -∞ or settle
            // with some retained cell's mean collapsing to zero.
            let collapsed = f
                .reduced
                .omega_dagger
                .iter()
                .any(|&w| f.mu_of(w) < 1e-4);
            assert!(!f.status.is_converged() || collapsed, "{model}: {:?}", f.status);
        }
    }
}
