//! A dense two-phase simplex over exact rationals.
//!
//! Solves `max cᵀz  s.t.  A z = b, z ≥ 0`. Bland's rule is used for both
//! entering and leaving choices, so the method terminates without cycling.
//! Intended for the small problems arising from existence checks, where an
//! exact verdict matters more than speed.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal {
        value: BigRational,
        solution: Vec<BigRational>,
    },
    Infeasible,
    Unbounded,
}

/// An equality-form linear program.
#[derive(Debug, Clone)]
pub struct StandardLp {
    pub a: Vec<Vec<BigRational>>,
    pub b: Vec<BigRational>,
    pub c: Vec<BigRational>,
}

struct Tableau {
    /// `rows[i]` holds the constraint coefficients followed by the rhs.
    rows: Vec<Vec<BigRational>>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, col: usize) {
        let p = self.rows[r][col].clone();
        for v in self.rows[r].iter_mut() {
            *v = &*v / &p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[col].is_zero() {
                continue;
            }
            let f = row[col].clone();
            for (v, pv) in row.iter_mut().zip(pivot_row.iter()) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
        }
        self.basis[r] = col;
    }

    /// Reduced costs `c_j - c_Bᵀ B⁻¹ A_j` for the first `allowed` columns.
    fn reduced_costs(&self, cost: &[BigRational], allowed: usize) -> Vec<BigRational> {
        (0..allowed)
            .map(|j| {
                let mut rc = cost[j].clone();
                for (i, row) in self.rows.iter().enumerate() {
                    let cb = &cost[self.basis[i]];
                    if !cb.is_zero() && !row[j].is_zero() {
                        rc -= cb * &row[j];
                    }
                }
                rc
            })
            .collect()
    }

    /// Maximise `cost` over the first `allowed` columns. Returns false if
    /// the objective is unbounded.
    fn optimize(&mut self, cost: &[BigRational], allowed: usize) -> bool {
        let rhs = self.ncols;
        loop {
            let rc = self.reduced_costs(cost, allowed);
            let Some(enter) = (0..allowed).find(|&j| rc[j].is_positive()) else {
                return true;
            };
            let mut leave: Option<(usize, BigRational)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[enter].is_positive() {
                    continue;
                }
                let ratio = &row[rhs] / &row[enter];
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => {
                        ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, enter),
                None => return false,
            }
        }
    }
}

impl StandardLp {
    pub fn solve(&self) -> LpOutcome {
        let m = self.a.len();
        let n = self.c.len();
        debug_assert!(self.a.iter().all(|r| r.len() == n));
        debug_assert_eq!(self.b.len(), m);

        // Phase 1 tableau: [A | I | b] with b made non-negative.
        let ncols = n + m;
        let mut rows = Vec::with_capacity(m);
        for i in 0..m {
            let neg = self.b[i].is_negative();
            let mut row: Vec<BigRational> = self.a[i]
                .iter()
                .map(|v| if neg { -v.clone() } else { v.clone() })
                .collect();
            for k in 0..m {
                row.push(if k == i { BigRational::one() } else { BigRational::zero() });
            }
            row.push(if neg { -self.b[i].clone() } else { self.b[i].clone() });
            rows.push(row);
        }
        let mut tab = Tableau {
            rows,
            basis: (n..n + m).collect(),
            ncols,
        };

        let phase1_cost: Vec<BigRational> = (0..ncols)
            .map(|j| if j >= n { -BigRational::one() } else { BigRational::zero() })
            .collect();
        tab.optimize(&phase1_cost, ncols);
        let infeasibility: BigRational = tab
            .rows
            .iter()
            .zip(tab.basis.iter())
            .filter(|(_, &bv)| bv >= n)
            .map(|(row, _)| row[ncols].clone())
            .sum();
        if infeasibility.is_positive() {
            return LpOutcome::Infeasible;
        }

        // Drive zero-level artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < tab.rows.len() {
            if tab.basis[i] >= n {
                match (0..n).find(|&j| !tab.rows[i][j].is_zero()) {
                    Some(j) => {
                        tab.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        tab.rows.remove(i);
                        tab.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }

        let mut cost = self.c.clone();
        cost.extend((0..m).map(|_| BigRational::zero()));
        if !tab.optimize(&cost, n) {
            return LpOutcome::Unbounded;
        }
        let mut solution = vec![BigRational::zero(); n];
        for (row, &bv) in tab.rows.iter().zip(tab.basis.iter()) {
            if bv < n {
                solution[bv] = row[ncols].clone();
            }
        }
        let value = solution
            .iter()
            .zip(self.c.iter())
            .map(|(x, c)| x * c)
            .sum();
        LpOutcome::Optimal { value, solution }
    }
}
