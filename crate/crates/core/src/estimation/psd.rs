use nalgebra::{DMatrix, SymmetricEigen};

use crate::linalg;
use crate::{Error, Result};

/// Projects a symmetric matrix onto `{A : eigenvalues(A) >= floor}` by
/// clipping eigenvalues. Input that already satisfies the bound is returned
/// unchanged.
pub fn nearest_psd(matrix: &DMatrix<f64>, floor: f64) -> Result<DMatrix<f64>> {
    if !(floor >= 0.0 && floor.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "eigenvalue floor must be >= 0, got {floor}"
        )));
    }
    linalg::ensure_symmetric(matrix)?;
    if matrix.nrows() == 0 {
        return Ok(matrix.clone());
    }
    let eig = SymmetricEigen::new(linalg::symmetrize(matrix));
    if eig.eigenvalues.iter().all(|l| *l >= floor) {
        return Ok(matrix.clone());
    }
    let clipped = eig.eigenvalues.map(|l| l.max(floor));
    let v = &eig.eigenvectors;
    let rebuilt = v * DMatrix::from_diagonal(&clipped) * v.transpose();
    Ok(linalg::symmetrize(&rebuilt))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_untouched() {
        let i = DMatrix::<f64>::identity(4, 4);
        assert_eq!(nearest_psd(&i, 0.0).unwrap(), i);
    }

    #[test]
    fn diagonal_clip() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let out = nearest_psd(&m, 0.0).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!((out - want).amax() < 1e-15);
    }

    #[test]
    fn two_by_two_clip() {
        // eigenvalues 3 (along (1,1)) and -1 (along (1,-1))
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let out = nearest_psd(&m, 0.0).unwrap();
        let want = DMatrix::from_element(2, 2, 1.5);
        assert!((out - want).amax() < 1e-14);
    }

    #[test]
    fn floor_is_respected() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.9, -0.7, 0.9, 0.2, 0.4, -0.7, 0.4, -0.3]);
        let out = nearest_psd(&m, 0.05).unwrap();
        assert!(linalg::min_eigenvalue(&out) >= 0.05 - 1e-10);
        assert_eq!(out, out.transpose());
        // idempotent
        let again = nearest_psd(&out, 0.05).unwrap();
        assert!((again - &out).amax() < 1e-12);
    }

    #[test]
    fn rejects_asymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.1, 1.0]);
        assert!(matches!(nearest_psd(&m, 0.0), Err(Error::NotSymmetric(_))));
    }
}
