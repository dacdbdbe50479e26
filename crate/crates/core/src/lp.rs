//! Dense tableau simplex for `max cᵀx` subject to `Ax ≤ b`, `x ≥ 0`, `b ≥ 0`.
//!
//! The origin is always feasible under these constraints, so no phase one is
//! needed. Pivoting uses Bland's rule, which cannot cycle.

use crate::error::EquilibriumError;
use crate::matrix::Matrix;

const PIVOT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    /// Primal optimum `x`.
    pub x: Vec<f64>,
    /// Optimal duals, one per constraint row.
    pub duals: Vec<f64>,
    pub objective: f64,
    /// Some nonbasic column has zero reduced cost, so the primal optimum may
    /// not be unique.
    pub primal_tie: bool,
    /// Some basic variable sits at zero, so the duals may not be unique.
    pub dual_tie: bool,
    pub pivots: usize,
}

/// Solves the LP. `tol` decides when a reduced cost or basic value counts as
/// zero for the tie flags.
pub fn maximize(
    a: &Matrix,
    b: &[f64],
    c: &[f64],
    tol: f64,
) -> Result<LpSolution, EquilibriumError> {
    let (m, n) = (a.rows(), a.cols());
    if b.len() != m {
        return Err(EquilibriumError::DimensionMismatch {
            expected: m,
            got: b.len(),
        });
    }
    if c.len() != n {
        return Err(EquilibriumError::DimensionMismatch {
            expected: n,
            got: c.len(),
        });
    }
    if b.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(EquilibriumError::Solver(
            "right-hand side must be finite and nonnegative".into(),
        ));
    }
    if a.as_slice().iter().chain(c).any(|v| !v.is_finite()) {
        return Err(EquilibriumError::Solver("non-finite coefficient".into()));
    }

    // columns: n structural, m slack, then rhs
    let width = n + m + 1;
    let mut t = vec![0.0; (m + 1) * width];
    for i in 0..m {
        let row = &mut t[i * width..(i + 1) * width];
        row[..n].copy_from_slice(a.row(i));
        row[n + i] = 1.0;
        row[width - 1] = b[i];
    }
    let obj = m * width;
    for j in 0..n {
        t[obj + j] = -c[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    let max_pivots = 50 * (m + n).max(1) * (m + n).max(1);
    let mut pivots = 0;
    while let Some(enter) = (0..n + m).find(|&j| t[obj + j] < -PIVOT_EPS) {
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let coef = t[i * width + enter];
            if coef > PIVOT_EPS {
                let ratio = t[i * width + width - 1] / coef;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((r, best)) => {
                        if ratio < best - PIVOT_EPS
                            || (ratio <= best + PIVOT_EPS && basis[i] < basis[r])
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
            return Err(EquilibriumError::Solver("objective is unbounded".into()));
        };
        pivot(&mut t, width, m, row, enter);
        basis[row] = enter;
        pivots += 1;
        if pivots > max_pivots {
            return Err(EquilibriumError::Solver("pivot limit exceeded".into()));
        }
    }

    let mut x = vec![0.0; n];
    let mut dual_tie = false;
    for (i, &var) in basis.iter().enumerate() {
        let value = t[i * width + width - 1];
        if value.abs() <= tol {
            dual_tie = true;
        }
        if var < n {
            x[var] = value.max(0.0);
        }
    }
    let duals: Vec<f64> = (0..m).map(|i| t[obj + n + i].max(0.0)).collect();
    let in_basis: Vec<bool> = {
        let mut flags = vec![false; n + m];
        for &v in &basis {
            flags[v] = true;
        }
        flags
    };
    let primal_tie = (0..n + m).any(|j| !in_basis[j] && t[obj + j].abs() <= tol);
    Ok(LpSolution {
        objective: t[obj + width - 1],
        x,
        duals,
        primal_tie,
        dual_tie,
        pivots,
    })
}

fn pivot(t: &mut [f64], width: usize, m: usize, row: usize, col: usize) {
    let p = t[row * width + col];
    for v in &mut t[row * width..(row + 1) * width] {
        *v /= p;
    }
    let pivot_row: Vec<f64> = t[row * width..(row + 1) * width].to_vec();
    for i in 0..=m {
        if i == row {
            continue;
        }
        let f = t[i * width + col];
        if f == 0.0 {
            continue;
        }
        for (v, pv) in t[i * width..(i + 1) * width].iter_mut().zip(&pivot_row) {
            *v -= f * pv;
        }
        t[i * width + col] = 0.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_problem() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36
        let a = Matrix::from_rows(&[[1.0, 0.0], [0.0, 2.0], [3.0, 2.0]]);
        let s = maximize(&a, &[4.0, 12.0, 18.0], &[3.0, 5.0], 1e-9).unwrap();
        assert!((s.objective - 36.0).abs() < 1e-12);
        assert!((s.x[0] - 2.0).abs() < 1e-12 && (s.x[1] - 6.0).abs() < 1e-12);
        // duals (0, 3/2, 1) give bᵀy = 36
        let dual_obj: f64 = s
            .duals
            .iter()
            .zip([4.0, 12.0, 18.0])
            .map(|(y, b)| y * b)
            .sum();
        assert!((dual_obj - 36.0).abs() < 1e-12);
        assert!((s.duals[1] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn unbounded_is_reported() {
        let a = Matrix::from_rows(&[[1.0, -1.0]]);
        assert!(matches!(
            maximize(&a, &[1.0], &[1.0, 1.0], 1e-9),
            Err(EquilibriumError::Solver(_))
        ));
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's example, which cycles under the largest-coefficient rule
        let a = Matrix::from_rows(&[
            [0.25, -60.0, -0.04, 9.0],
            [0.5, -90.0, -0.02, 3.0],
            [0.0, 0.0, 1.0, 0.0],
        ]);
        let s = maximize(&a, &[0.0, 0.0, 1.0], &[0.75, -150.0, 0.02, -6.0], 1e-9).unwrap();
        assert!((s.objective - 0.05).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_dimensions() {
        let a = Matrix::from_rows(&[[1.0]]);
        assert!(maximize(&a, &[1.0, 2.0], &[1.0], 1e-9).is_err());
        assert!(maximize(&a, &[-1.0], &[1.0], 1e-9).is_err());
    }
}
