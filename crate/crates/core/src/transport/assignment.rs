//! Square instances: the Hungarian method and an exhaustive permutation oracle.
//!
//! Both return the lexicographically smallest optimal permutation, so their
//! outputs agree entry for entry in exact arithmetic.

use itertools::Itertools;

use crate::scalar::Scalar;

use super::{validate_cost, AssignmentSolution, TransportError};

/// Largest `p` accepted by [`w1_bruteforce`].
pub const BRUTE_FORCE_MAX: usize = 9;

fn square<S: Scalar>(cost: &[Vec<S>]) -> Result<usize, TransportError> {
    let (rows, cols) = validate_cost(cost)?;
    if rows != cols {
        return Err(TransportError::NonSquare { rows, cols });
    }
    Ok(rows)
}

fn solution<S: Scalar>(cost: &[Vec<S>], pi: Vec<usize>) -> AssignmentSolution<S> {
    let p = pi.len();
    let total = pi.iter().enumerate().fold(S::zero(), |acc, (i, &r)| acc + cost[r][i].clone());
    AssignmentSolution { p, pi, cost_value: total / S::from_i64(p as i64) }
}

pub fn w1_assignment<S: Scalar>(cost: &[Vec<S>]) -> Result<AssignmentSolution<S>, TransportError> {
    let p = square(cost)?;
    let (row_pot, col_pot, mut row_of) = hungarian(cost, p);
    lexicographic_rematch(cost, &row_pot, &col_pot, &mut row_of);
    Ok(solution(cost, row_of))
}

pub fn w1_bruteforce<S: Scalar>(cost: &[Vec<S>]) -> Result<AssignmentSolution<S>, TransportError> {
    let p = square(cost)?;
    if p > BRUTE_FORCE_MAX {
        return Err(TransportError::TooLarge { size: p, limit: BRUTE_FORCE_MAX });
    }
    let mut best: Option<(S, Vec<usize>)> = None;
    for perm in (0..p).permutations(p) {
        let total = perm.iter().enumerate().fold(S::zero(), |acc, (i, &r)| acc + cost[r][i].clone());
        if best.as_ref().is_none_or(|(b, _)| total < *b) {
            best = Some((total, perm));
        }
    }
    let (_, pi) = best.expect("at least one permutation");
    Ok(solution(cost, pi))
}

/// Shortest-augmenting-path Hungarian method with row and column potentials.
///
/// Returns `(row_pot, col_pot, row_of)` where `row_of[j]` is the row matched to
/// column `j` and `cost[i][j] - row_pot[i] - col_pot[j] >= 0` with equality on the matching.
fn hungarian<S: Scalar>(cost: &[Vec<S>], n: usize) -> (Vec<S>, Vec<S>, Vec<usize>) {
    // 1-based internally; column 0 is a virtual start column.
    let mut u = vec![S::zero(); n + 1];
    let mut v = vec![S::zero(); n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0usize;
        let mut minv: Vec<Option<S>> = vec![None; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta: Option<S> = None;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1].clone() - u[i0].clone() - v[j].clone();
                if minv[j].as_ref().is_none_or(|m| cur < *m) {
                    minv[j] = Some(cur);
                    way[j] = j0;
                }
                let mj = minv[j].as_ref().expect("set above");
                if delta.as_ref().is_none_or(|d| mj < d) {
                    delta = Some(mj.clone());
                    j1 = j;
                }
            }
            let delta = delta.expect("an unused column remains");
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] = u[row_of[j]].clone() + delta.clone();
                    v[j] = v[j].clone() - delta.clone();
                } else if let Some(m) = minv[j].as_mut() {
                    *m = m.clone() - delta.clone();
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let row_pot = u[1..].to_vec();
    let col_pot = v[1..].to_vec();
    let matching = row_of[1..].iter().map(|r| r - 1).collect();
    (row_pot, col_pot, matching)
}

/// Moves to the lexicographically smallest perfect matching inside the
/// equality subgraph of the optimal duals. Every such matching is optimal.
fn lexicographic_rematch<S: Scalar>(cost: &[Vec<S>], u: &[S], v: &[S], row_of: &mut [usize]) {
    let n = row_of.len();
    let scale = cost.iter().flatten().fold(1.0f64, |m, c| m.max(c.to_f64().abs()));
    let tight: Vec<Vec<bool>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let reduced = cost[i][j].clone() - u[i].clone() - v[j].clone();
                    if S::EXACT {
                        reduced.is_zero()
                    } else {
                        reduced.to_f64().abs() <= 1e-12 * scale * n as f64
                    }
                })
                .collect()
        })
        .collect();
    let mut col_of = vec![0usize; n];
    for (j, &r) in row_of.iter().enumerate() {
        col_of[r] = j;
    }
    let mut fixed_row = vec![false; n];

    for c in 0..n {
        let old = row_of[c];
        for r in 0..old {
            if fixed_row[r] || !tight[r][c] {
                continue;
            }
            // Give `r` to column `c`; its previous column must find a path back to `old`.
            let c2 = col_of[r];
            let mut seen = vec![false; n];
            let mut trial_row_of = row_of.to_vec();
            let mut trial_col_of = col_of.clone();
            trial_row_of[c] = r;
            trial_col_of[r] = c;
            let ok = rematch(c2, old, r, &tight, &fixed_row, &mut seen, &mut trial_row_of, &mut trial_col_of);
            if ok {
                row_of.copy_from_slice(&trial_row_of);
                col_of = trial_col_of;
                break;
            }
        }
        fixed_row[row_of[c]] = true;
    }
}

#[allow(clippy::too_many_arguments)]
fn rematch(
    col: usize,
    free_row: usize,
    taken: usize,
    tight: &[Vec<bool>],
    fixed_row: &[bool],
    seen: &mut [bool],
    row_of: &mut [usize],
    col_of: &mut [usize],
) -> bool {
    for r in 0..tight.len() {
        if !tight[r][col] || seen[r] || fixed_row[r] || r == taken {
            continue;
        }
        seen[r] = true;
        let next = col_of[r];
        if r == free_row || rematch(next, free_row, taken, tight, fixed_row, seen, row_of, col_of) {
            row_of[col] = r;
            col_of[r] = col;
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn rat(rows: &[&[i64]]) -> Vec<Vec<Rational>> {
        rows.iter().map(|r| r.iter().map(|&v| Rational::from_i64(v)).collect()).collect()
    }

    #[test]
    fn two_by_two_tie_prefers_identity() {
        let cost = rat(&[&[1, 2], &[3, 4]]);
        let a = w1_assignment(&cost).unwrap();
        assert_eq!(a.cost_value, Rational::from_ratio(5, 2));
        assert_eq!(a.pi, vec![0, 1]);
        let b = w1_bruteforce(&cost).unwrap();
        assert_eq!(b, a);
    }

    #[test]
    fn constant_matrix() {
        for p in 1..6 {
            let cost = vec![vec![Rational::from_i64(4); p]; p];
            let a = w1_assignment(&cost).unwrap();
            assert_eq!(a.cost_value, Rational::from_i64(4));
            assert_eq!(a.pi, (0..p).collect::<Vec<_>>());
        }
    }

    #[test]
    fn bruteforce_examples() {
        assert_eq!(w1_bruteforce(&rat(&[&[0, 9], &[9, 0]])).unwrap().cost_value, Rational::from_i64(0));
        let c = rat(&[&[1, 2, 3], &[2, 1, 3], &[3, 3, 1]]);
        assert_eq!(w1_bruteforce(&c).unwrap().cost_value, Rational::from_i64(1));
        assert_eq!(w1_assignment(&c).unwrap().pi, vec![0, 1, 2]);
    }

    #[test]
    fn anti_diagonal_optimum() {
        let c = rat(&[&[5, 5, 0], &[5, 0, 5], &[0, 5, 5]]);
        let a = w1_assignment(&c).unwrap();
        assert_eq!(a.pi, vec![2, 1, 0]);
        assert_eq!(a.cost_value, Rational::from_i64(0));
    }

    #[test]
    fn errors() {
        let c = rat(&[&[1, 2, 3], &[4, 5, 6]]);
        assert_eq!(w1_assignment(&c), Err(TransportError::NonSquare { rows: 2, cols: 3 }));
        let big = vec![vec![Rational::from_i64(1); 10]; 10];
        assert_eq!(w1_bruteforce(&big), Err(TransportError::TooLarge { size: 10, limit: 9 }));
    }

    #[test]
    fn float_mode() {
        let c = vec![vec![0.5, 1.5], vec![2.5, 0.25]];
        let a = w1_assignment(&c).unwrap();
        assert!((a.cost_value - 0.375).abs() < 1e-15);
    }
}
