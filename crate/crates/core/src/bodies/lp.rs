//! Minimal ℓ1 representation: `min Σ|λ_j|` subject to `Σ λ_j c_j = target`.
//!
//! This single linear program is both the support function of
//! `{x : |<c_j, x>| <= 1}` and the gauge of `conv{±c_j}`; the optimal dual
//! vector is the maximizing point of the former. Solved by a revised simplex
//! on the signed columns `±c_j` with Bland's rule, starting from a basis of
//! linearly independent columns chosen once per column set.

use nalgebra::{DMatrix, DVector};

const PIVOT_TOL: f64 = 1e-12;
const MAX_PIVOTS: usize = 10_000;

#[derive(Debug, Clone)]
pub(crate) struct L1Solution {
    pub value: f64,
    /// Optimal dual: `|<y, c_j>| <= 1` for all `j`, `<y, target> = value`.
    pub dual: DVector<f64>,
}

/// Greedy choice of `n` linearly independent columns (largest residual
/// first). Returns `None` when the columns do not span.
pub(crate) fn independent_columns(columns: &[DVector<f64>]) -> Option<Vec<usize>> {
    let n = columns.first()?.len();
    let scale = columns.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    let mut chosen = Vec::with_capacity(n);
    let mut ortho: Vec<DVector<f64>> = Vec::with_capacity(n);
    while chosen.len() < n {
        let mut best: Option<(usize, f64, DVector<f64>)> = None;
        for (j, c) in columns.iter().enumerate() {
            if chosen.contains(&j) {
                continue;
            }
            let mut r = c.clone();
            for _ in 0..2 {
                for q in &ortho {
                    r -= q * q.dot(&r);
                }
            }
            let norm = r.norm();
            if best.as_ref().is_none_or(|(_, b, _)| norm > *b) {
                best = Some((j, norm, r));
            }
        }
        let (j, norm, r) = best?;
        if norm <= 1e-10 * scale {
            return None;
        }
        chosen.push(j);
        ortho.push(r / norm);
    }
    chosen.sort_unstable();
    Some(chosen)
}

fn signed_basis(columns: &[DVector<f64>], basis: &[(usize, f64)]) -> DMatrix<f64> {
    let n = columns[0].len();
    DMatrix::from_fn(n, n, |i, k| basis[k].1 * columns[basis[k].0][i])
}

/// Bland's variable order: column `j` with sign `+` before sign `-`.
fn variable_index(j: usize, sign: f64) -> usize {
    2 * j + usize::from(sign < 0.0)
}

pub(crate) fn min_l1_representation(
    columns: &[DVector<f64>],
    start: &[usize],
    target: &DVector<f64>,
) -> L1Solution {
    let n = target.len();
    if target.iter().all(|v| *v == 0.0) {
        return L1Solution { value: 0.0, dual: DVector::zeros(n) };
    }

    let unsigned = DMatrix::from_fn(n, n, |i, k| columns[start[k]][i]);
    let coeffs = unsigned
        .lu()
        .solve(target)
        .expect("starting basis is nonsingular");
    let mut basis: Vec<(usize, f64)> = start
        .iter()
        .zip(coeffs.iter())
        .map(|(&j, &c)| (j, if c < 0.0 { -1.0 } else { 1.0 }))
        .collect();

    for _ in 0..MAX_PIVOTS {
        let b = signed_basis(columns, &basis);
        let lu = b.clone().lu();
        let lambda = lu.solve(target).expect("basis stays nonsingular");
        let ones = DVector::from_element(n, 1.0);
        let dual = b
            .transpose()
            .lu()
            .solve(&ones)
            .expect("basis stays nonsingular");

        let entering = columns.iter().enumerate().find_map(|(j, c)| {
            let r = dual.dot(c);
            if r.abs() > 1.0 + PIVOT_TOL {
                Some((j, r.signum()))
            } else {
                None
            }
        });
        let Some((j, sign)) = entering else {
            let value = lambda.iter().map(|l| l.max(0.0)).sum::<f64>();
            return L1Solution { value, dual };
        };

        let direction = lu
            .solve(&(&columns[j] * sign))
            .expect("basis stays nonsingular");
        let mut leave: Option<(usize, f64)> = None;
        for k in 0..n {
            if direction[k] > PIVOT_TOL {
                let ratio = lambda[k].max(0.0) / direction[k];
                let better = match leave {
                    None => true,
                    Some((kk, best)) => {
                        ratio < best - PIVOT_TOL
                            || (ratio <= best + PIVOT_TOL
                                && variable_index(basis[k].0, basis[k].1)
                                    < variable_index(basis[kk].0, basis[kk].1))
                    }
                };
                if better {
                    leave = Some((k, ratio));
                }
            }
        }
        // The objective is bounded below by zero, so some ratio exists.
        let (k, _) = leave.expect("l1 program is bounded");
        basis[k] = (j, sign);
    }
    panic!("l1 simplex exceeded {MAX_PIVOTS} pivots");
}
