//! Dense two-phase simplex over exact rationals.
//!
//! Small systems only (the feasibility encodings are a handful of rows and
//! columns), so the tableau is dense and the reduced-cost row is recomputed
//! each iteration. Pivoting follows Bland's rule: smallest eligible entering
//! index, smallest basic index on ratio ties. That rule cannot cycle, so the
//! solver always terminates.

use num_traits::{One, Zero};

use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpOutcome {
    Infeasible,
    Unbounded,
    Optimal {
        value: Rational,
        solution: Vec<Rational>,
    },
}

/// Maximize `objective . x` subject to `rows[i].0 . x = rows[i].1` and
/// `x >= 0` componentwise.
pub(crate) fn maximize(objective: &[Rational], rows: &[(Vec<Rational>, Rational)]) -> LpOutcome {
    let n = objective.len();
    let m = rows.len();

    // Tableau columns: n structural, m artificial, then the rhs.
    let mut tableau: Vec<Vec<Rational>> = Vec::with_capacity(m);
    for (i, (coeffs, rhs)) in rows.iter().enumerate() {
        assert_eq!(coeffs.len(), n, "constraint width mismatch");
        let flip = *rhs < Rational::zero();
        let mut row = vec![Rational::zero(); n + m + 1];
        for (j, c) in coeffs.iter().enumerate() {
            row[j] = if flip { -c.clone() } else { c.clone() };
        }
        row[n + i] = Rational::one();
        row[n + m] = if flip { -rhs.clone() } else { rhs.clone() };
        tableau.push(row);
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // Phase 1: drive the artificial variables to zero.
    let mut phase1_cost = vec![Rational::zero(); n + m];
    for c in phase1_cost.iter_mut().skip(n) {
        *c = -Rational::one();
    }
    if run_simplex(&mut tableau, &mut basis, &phase1_cost, n + m).is_err() {
        // The phase-1 objective is bounded above by zero.
        unreachable!("phase 1 cannot be unbounded");
    }
    if objective_value(&tableau, &basis, &phase1_cost) < Rational::zero() {
        return LpOutcome::Infeasible;
    }

    // Remove artificials that linger in the basis at level zero: pivot them
    // out where possible, drop redundant rows otherwise.
    let mut row_idx = 0;
    while row_idx < tableau.len() {
        if basis[row_idx] >= n {
            if let Some(col) = (0..n).find(|&j| !tableau[row_idx][j].is_zero()) {
                pivot(&mut tableau, &mut basis, row_idx, col);
            } else {
                tableau.remove(row_idx);
                basis.remove(row_idx);
                continue;
            }
        }
        row_idx += 1;
    }

    // Phase 2: the real objective; artificial columns may not re-enter.
    let mut phase2_cost = vec![Rational::zero(); n + m];
    phase2_cost[..n].clone_from_slice(objective);
    if run_simplex(&mut tableau, &mut basis, &phase2_cost, n).is_err() {
        return LpOutcome::Unbounded;
    }

    let mut solution = vec![Rational::zero(); n];
    let rhs_col = n + m;
    for (i, &b) in basis.iter().enumerate() {
        if b < n {
            solution[b] = tableau[i][rhs_col].clone();
        }
    }
    LpOutcome::Optimal {
        value: objective_value(&tableau, &basis, &phase2_cost),
        solution,
    }
}

fn objective_value(tableau: &[Vec<Rational>], basis: &[usize], cost: &[Rational]) -> Rational {
    let rhs_col = cost.len();
    basis
        .iter()
        .enumerate()
        .map(|(i, &b)| &cost[b] * &tableau[i][rhs_col])
        .sum()
}

/// Bland-rule simplex iterations until optimality; `enterable` bounds the
/// columns allowed to enter the basis. Err on an unbounded ray.
fn run_simplex(
    tableau: &mut [Vec<Rational>],
    basis: &mut [usize],
    cost: &[Rational],
    enterable: usize,
) -> Result<(), ()> {
    let width = cost.len();
    let rhs_col = width;
    loop {
        // Reduced costs: cost[j] - cost_B . column_j.
        let entering = (0..enterable).find(|&j| {
            if basis.contains(&j) {
                return false;
            }
            let mut reduced = cost[j].clone();
            for (i, &b) in basis.iter().enumerate() {
                reduced -= &cost[b] * &tableau[i][j];
            }
            reduced > Rational::zero()
        });
        let Some(col) = entering else {
            return Ok(());
        };

        let mut leaving: Option<(usize, Rational)> = None;
        for (i, row) in tableau.iter().enumerate() {
            if row[col] <= Rational::zero() {
                continue;
            }
            let ratio = &row[rhs_col] / &row[col];
            let better = match &leaving {
                None => true,
                Some((best_row, best_ratio)) => {
                    ratio < *best_ratio || (ratio == *best_ratio && basis[i] < basis[*best_row])
                }
            };
            if better {
                leaving = Some((i, ratio));
            }
        }
        let Some((row, _)) = leaving else {
            return Err(());
        };
        pivot(tableau, basis, row, col);
    }
}

fn pivot(tableau: &mut [Vec<Rational>], basis: &mut [usize], row: usize, col: usize) {
    let inv = {
        let p = &tableau[row][col];
        assert!(!p.is_zero(), "pivot on a zero entry");
        Rational::one() / p
    };
    for e in tableau[row].iter_mut() {
        *e *= &inv;
    }
    for i in 0..tableau.len() {
        if i == row || tableau[i][col].is_zero() {
            continue;
        }
        let factor = tableau[i][col].clone();
        for j in 0..tableau[i].len() {
            let delta = &factor * &tableau[row][j];
            tableau[i][j] -= delta;
        }
    }
    basis[row] = col;
}
