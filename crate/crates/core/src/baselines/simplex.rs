//! Dense dictionary simplex for `max c.x` subject to `A x <= b`, `x >= 0`
//! with `b >= 0`, so the origin is a feasible starting basis.
//!
//! Bland's rule picks both the entering and the leaving variable, which
//! rules out cycling on degenerate problems.

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

pub const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimplexError {
    #[error("right-hand side must be nonnegative")]
    InfeasibleOrigin,
    #[error("row {row} has {got} coefficients, expected {expected}")]
    RowLength {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("objective is unbounded")]
    Unbounded,
    #[error("no optimum after {0} pivots")]
    PivotLimit(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
    pub pivots: usize,
}

pub fn maximize(
    c: &[f64],
    a: &[Vec<f64>],
    b: &[f64],
    max_pivots: usize,
) -> Result<LpSolution, SimplexError> {
    let n = c.len();
    let m = b.len();
    if b.iter().any(|&v| v < -TOLERANCE) {
        return Err(SimplexError::InfeasibleOrigin);
    }
    if let Some((row, r)) = a.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(SimplexError::RowLength {
            row,
            got: r.len(),
            expected: n,
        });
    }
    // Variables 0..n are structural, n..n+m are slacks.
    let mut t: Vec<Vec<f64>> = a.to_vec();
    let mut rhs: Vec<f64> = b.iter().map(|&v| v.max(0.0)).collect();
    let mut obj = c.to_vec();
    let mut z = 0.0;
    let mut basis: Vec<usize> = (n..n + m).collect();
    let mut nonbasic: Vec<usize> = (0..n).collect();
    let mut pivots = 0;
    loop {
        let entering = (0..n)
            .filter(|&j| obj[j] > TOLERANCE)
            .min_by_key(|&j| nonbasic[j]);
        let Some(s) = entering else { break };
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..m {
            if t[r][s] > TOLERANCE {
                let ratio = rhs[r] / t[r][s];
                let replace = match leave {
                    None => true,
                    Some((lr, best)) => ratio < best || (ratio == best && basis[r] < basis[lr]),
                };
                if replace {
                    leave = Some((r, ratio));
                }
            }
        }
        let Some((r, _)) = leave else {
            return Err(SimplexError::Unbounded);
        };
        if pivots == max_pivots {
            return Err(SimplexError::PivotLimit(pivots));
        }
        pivot(&mut t, &mut rhs, &mut obj, &mut z, r, s);
        core::mem::swap(&mut basis[r], &mut nonbasic[s]);
        pivots += 1;
    }
    let mut x = vec![0.0; n];
    for (r, &v) in basis.iter().enumerate() {
        if v < n {
            x[v] = rhs[r];
        }
    }
    Ok(LpSolution {
        value: z,
        x,
        pivots,
    })
}

fn pivot(t: &mut [Vec<f64>], rhs: &mut [f64], obj: &mut [f64], z: &mut f64, r: usize, s: usize) {
    let piv = t[r][s];
    for v in t[r].iter_mut() {
        *v /= piv;
    }
    t[r][s] = 1.0 / piv;
    rhs[r] /= piv;
    let (row_r, rhs_r) = (t[r].clone(), rhs[r]);
    for (i, row) in t.iter_mut().enumerate() {
        if i == r {
            continue;
        }
        let f = row[s];
        if f == 0.0 {
            continue;
        }
        for (v, &p) in row.iter_mut().zip(&row_r) {
            *v -= f * p;
        }
        row[s] = -f * row_r[s];
        rhs[i] -= f * rhs_r;
    }
    let f = obj[s];
    for (v, &p) in obj.iter_mut().zip(&row_r) {
        *v -= f * p;
    }
    obj[s] = -f * row_r[s];
    *z += f * rhs_r;
}
