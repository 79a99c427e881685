//! Dense tableau simplex for small linear programs of the form
//! `max c^T x  s.t.  A x <= b, x >= 0` with `b >= 0`.
//!
//! The slack basis is feasible under `b >= 0`, so a single phase suffices.
//! Bland's rule keeps degenerate pivots from cycling.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-12;
const MAX_PIVOTS: usize = 100_000;

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

pub fn maximize(a: &DMatrix<f64>, b: &[f64], c: &[f64]) -> Result<LpSolution> {
    let (m, n) = a.shape();
    if b.len() != m || c.len() != n {
        return Err(Error::Lp(format!(
            "shape mismatch: A is {m}x{n}, b has {}, c has {}",
            b.len(),
            c.len()
        )));
    }
    if let Some(v) = b.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::Lp(format!("right-hand side {v} is negative")));
    }
    let width = n + m + 1;
    let rhs = n + m;
    // Rows 0..m are constraints; row m holds the negated objective.
    let mut t = DMatrix::zeros(m + 1, width);
    for i in 0..m {
        for j in 0..n {
            t[(i, j)] = a[(i, j)];
        }
        t[(i, n + i)] = 1.0;
        t[(i, rhs)] = b[i];
    }
    for j in 0..n {
        t[(m, j)] = -c[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let scale = c.iter().fold(1.0_f64, |s, v| s.max(v.abs()));

    let mut pivots = 0;
    while let Some(enter) = (0..n + m).find(|&j| t[(m, j)] < -PIVOT_TOL * scale) {
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let coef = t[(i, enter)];
            if coef > PIVOT_TOL {
                let ratio = t[(i, rhs)] / coef;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((r, best)) => {
                        if ratio < best - PIVOT_TOL
                            || (ratio <= best + PIVOT_TOL && basis[i] < basis[r])
                        {
                            Some((i, ratio))
                        } else {
                            Some((r, best))
                        }
                    }
                };
            }
        }
        let Some((row, _)) = leave else {
            return Err(Error::Lp("objective is unbounded".into()));
        };
        pivot(&mut t, row, enter);
        basis[row] = enter;
        pivots += 1;
        if pivots > MAX_PIVOTS {
            return Err(Error::Lp(format!("no optimum after {MAX_PIVOTS} pivots")));
        }
    }

    let mut x = vec![0.0; n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            x[bv] = t[(i, rhs)].max(0.0);
        }
    }
    let objective = c.iter().zip(&x).map(|(a, b)| a * b).sum();
    Ok(LpSolution {
        x,
        objective,
        pivots,
    })
}

fn pivot(t: &mut DMatrix<f64>, row: usize, col: usize) {
    let p = t[(row, col)];
    let width = t.ncols();
    for j in 0..width {
        t[(row, j)] /= p;
    }
    for i in 0..t.nrows() {
        if i == row {
            continue;
        }
        let f = t[(i, col)];
        if f == 0.0 {
            continue;
        }
        for j in 0..width {
            let v = t[(row, j)];
            t[(i, j)] -= f * v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_program() {
        // max 3x + 5y  s.t. x <= 4, 2y <= 12, 3x + 2y <= 18  ->  (2, 6), 36
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, 3.0, 2.0]);
        let s = maximize(&a, &[4.0, 12.0, 18.0], &[3.0, 5.0]).unwrap();
        assert!((s.objective - 36.0).abs() < 1e-12);
        assert!((s.x[0] - 2.0).abs() < 1e-12 && (s.x[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_and_bad_input() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        assert!(maximize(&a, &[1.0], &[0.0, 1.0]).is_err());
        assert!(maximize(&a, &[-1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn degenerate_vertex() {
        // Several constraints tight at the origin.
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 1.0, -1.0, -1.0, 1.0]);
        let s = maximize(&a, &[2.0, 0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!((s.objective - 2.0).abs() < 1e-12);
    }
}
