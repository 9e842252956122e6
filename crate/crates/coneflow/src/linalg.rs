//! Numerical-rank helpers: SVD null spaces and least-squares fits.
//!
//! Rank decisions use the relative threshold σ ≤ tol · max(σ_max, 1); the
//! systems assembled in this crate have small-integer coefficients, so the
//! spectral gap between genuine and null directions is many orders of
//! magnitude.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default relative singular-value threshold.
pub const RANK_TOL_REL: f64 = 1e-8;

/// Orthonormal null-space basis and numerical rank of a complex matrix.
///
/// Rows are padded with zeros when there are fewer rows than columns so the
/// thin SVD carries the full set of right singular vectors.
pub fn null_space_complex(
    a: &DMatrix<Complex64>,
    rel_tol: f64,
) -> (Vec<DVector<Complex64>>, usize) {
    let ncols = a.ncols();
    if ncols == 0 {
        return (Vec::new(), 0);
    }
    let padded = if a.nrows() < ncols {
        let mut p = DMatrix::zeros(ncols, ncols);
        p.view_mut((0, 0), (a.nrows(), ncols)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let sigma = &svd.singular_values;
    let sigma_max = sigma.iter().cloned().fold(0.0f64, f64::max);
    let tol = rel_tol * sigma_max.max(1.0);
    let rank = sigma.iter().filter(|s| **s > tol).count();
    let v_t = svd.v_t.expect("v_t requested");
    let basis = (rank..v_t.nrows()).map(|i| v_t.row(i).adjoint()).collect();
    (basis, rank)
}

/// Least-squares solution of A x = b over the reals, with the design rank.
pub fn least_squares_real(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<(DVector<f64>, usize)> {
    let svd = a.clone().svd(true, true);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let tol = RANK_TOL_REL * sigma_max.max(1.0);
    let rank = svd.singular_values.iter().filter(|s| **s > tol).count();
    let x = svd.solve(b, tol).map_err(|_| Error::DegenerateSample)?;
    Ok((x.column(0).into_owned(), rank))
}

/// Least-squares solution of A x = b over the complex numbers.
pub fn least_squares_complex(
    a: &DMatrix<Complex64>,
    b: &DVector<Complex64>,
) -> Result<(DVector<Complex64>, usize)> {
    let svd = a.clone().svd(true, true);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let tol = RANK_TOL_REL * sigma_max.max(1.0);
    let rank = svd.singular_values.iter().filter(|s| **s > tol).count();
    let x = svd.solve(b, tol).map_err(|_| Error::DegenerateSample)?;
    Ok((x.column(0).into_owned(), rank))
}

/// max-entry magnitude of U*U − I; zero for a unitary matrix.
pub fn unitarity_defect(u: &DMatrix<Complex64>) -> f64 {
    let n = u.ncols();
    let gram = u.adjoint() * u;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let expected = if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::ZERO
            };
            worst = worst.max((gram[(i, j)] - expected).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_projection() {
        // Rows kill the first two coordinates of C^3.
        let mut a = DMatrix::zeros(2, 3);
        a[(0, 0)] = Complex64::new(1.0, 0.0);
        a[(1, 1)] = Complex64::new(1.0, 0.0);
        let (basis, rank) = null_space_complex(&a, RANK_TOL_REL);
        assert_eq!(rank, 2);
        assert_eq!(basis.len(), 1);
        assert!((basis[0][2].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn null_space_wide_matrix() {
        // One equation over C^4: nullity 3 even though only one row.
        let mut a = DMatrix::zeros(1, 4);
        a[(0, 0)] = Complex64::new(1.0, 0.0);
        a[(0, 3)] = Complex64::new(-1.0, 0.0);
        let (basis, rank) = null_space_complex(&a, RANK_TOL_REL);
        assert_eq!(rank, 1);
        assert_eq!(basis.len(), 3);
        for v in &basis {
            assert!((v[0] - v[3]).norm() < 1e-12);
        }
    }

    #[test]
    fn least_squares_line_fit() {
        let a = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 3.0]);
        let b = DVector::from_column_slice(&[2.0, 4.0, 6.0]);
        let (x, rank) = least_squares_real(&a, &b).unwrap();
        assert_eq!(rank, 1);
        assert!((x[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn unitarity_defect_detects() {
        let id = DMatrix::<Complex64>::identity(3, 3);
        assert!(unitarity_defect(&id) < 1e-15);
        let double = id.scale(2.0);
        assert!(unitarity_defect(&double) > 1.0);
    }
}
