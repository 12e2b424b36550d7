//! Dense solves through LU with partial pivoting.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Pivot ratio below which a matrix is treated as numerically singular.
const SINGULAR_RCOND: f64 = 1e-14;

/// `A⁻¹ B`.
pub fn solve_left(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !a.is_square() || a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch {
            expected: format!("square A with {} rows", b.nrows()),
            actual: format!("{}x{}", a.nrows(), a.ncols()),
        });
    }
    if a.nrows() == 0 {
        return Ok(b.clone());
    }
    let lu = a.clone().lu();
    let diag = lu.u().diagonal();
    let max = diag.amax();
    let min = diag.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if !(max > 0.0) || min / max < SINGULAR_RCOND {
        return Err(Error::Singular(format!(
            "pivot ratio {:e} below {SINGULAR_RCOND:e}",
            if max > 0.0 { min / max } else { 0.0 }
        )));
    }
    lu.solve(b)
        .ok_or_else(|| Error::Singular("LU solve failed".into()))
}

/// `B A⁻¹`.
pub fn solve_right(b: &DMatrix<f64>, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(solve_left(&a.transpose(), &b.transpose())?.transpose())
}

/// `(M + Mᵀ) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_both_sides() {
        let a = DMatrix::from_row_slice(3, 3, &[4., 1., 0., 1., 3., 1., 0., 1., 2.]);
        let b = DMatrix::from_row_slice(3, 2, &[1., 0., 2., 1., 0., 3.]);
        let x = solve_left(&a, &b).unwrap();
        assert!((&a * &x - &b).amax() < 1e-14);
        let bt = b.transpose();
        let y = solve_right(&bt, &a).unwrap();
        assert!((&y * &a - &bt).amax() < 1e-14);
    }

    #[test]
    fn singular_is_reported() {
        let a = DMatrix::from_row_slice(2, 2, &[1., 2., 2., 4.]);
        assert!(matches!(
            solve_left(&a, &DMatrix::identity(2, 2)),
            Err(Error::Singular(_))
        ));
        assert!(solve_left(&DMatrix::zeros(2, 2), &DMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn empty_system() {
        let x = solve_left(&DMatrix::zeros(0, 0), &DMatrix::zeros(0, 3)).unwrap();
        assert_eq!(x.shape(), (0, 3));
    }
}
