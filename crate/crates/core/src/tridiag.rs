//! Thomas algorithm for symmetric tridiagonal systems.

use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
#[error("tridiagonal system is singular at row {row}")]
pub struct SingularSystem {
    pub row: usize,
}

/// Solves `T x = rhs` where `T` has diagonal `diag` and symmetric
/// off-diagonal `off` (`off[i]` couples rows `i` and `i+1`).
pub fn solve_symmetric(off: &[f64], diag: &[f64], rhs: &[f64]) -> Result<Vec<f64>, SingularSystem> {
    let n = diag.len();
    debug_assert_eq!(off.len() + 1, n);
    debug_assert_eq!(rhs.len(), n);
    let mut c = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut denom = diag[0];
    if denom == 0.0 || !denom.is_finite() {
        return Err(SingularSystem { row: 0 });
    }
    x[0] = rhs[0] / denom;
    for i in 1..n {
        c[i - 1] = off[i - 1] / denom;
        denom = diag[i] - off[i - 1] * c[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return Err(SingularSystem { row: i });
        }
        x[i] = (rhs[i] - off[i - 1] * x[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Ok(x)
}
