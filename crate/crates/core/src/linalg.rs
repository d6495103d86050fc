//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::{Error, Result};

/// Largest |a_ij - a_ji|.
pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

fn scale(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())).max(f64::MIN_POSITIVE)
}

pub fn ensure_square(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{what} is {}x{}, expected a square matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Symmetric up to `1e-12` relative to the largest entry.
pub fn ensure_symmetric(m: &DMatrix<f64>) -> Result<()> {
    ensure_square(m, "matrix")?;
    let asym = max_asymmetry(m);
    if asym > 1e-12 * scale(m) {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(symmetrize(m)).eigenvalues.min()
}

/// Symmetric with no eigenvalue below `-1e-10` times the largest entry.
pub fn ensure_psd(m: &DMatrix<f64>, what: &str) -> Result<()> {
    ensure_symmetric(m)?;
    let lo = min_eigenvalue(m);
    if lo < -1e-10 * scale(m) {
        return Err(Error::NotPositiveSemidefinite(format!("{what} has eigenvalue {lo:e}")));
    }
    Ok(())
}

pub fn quad_form(m: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    x.dot(&(m * x))
}

/// Lower-triangular factor `L` with `L Lᵀ = cov (+ jitter·I)`.
///
/// Plain Cholesky is tried first. If it fails, `jitter_scale` times the
/// largest diagonal entry is added to the diagonal and the factorization is
/// retried once. The all-zero matrix factors as `L = 0`. Returns the factor
/// and the jitter actually applied.
pub fn lower_factor(cov: &DMatrix<f64>, jitter_scale: f64) -> Result<(DMatrix<f64>, f64)> {
    ensure_symmetric(cov)?;
    let n = cov.nrows();
    if cov.iter().all(|v| *v == 0.0) {
        return Ok((DMatrix::zeros(n, n), 0.0));
    }
    if let Some(ch) = cov.clone().cholesky() {
        return Ok((ch.unpack(), 0.0));
    }
    let max_diag = cov.diagonal().max();
    let jitter = jitter_scale * max_diag;
    if jitter > 0.0 {
        let shifted = cov + DMatrix::identity(n, n) * jitter;
        if let Some(ch) = shifted.cholesky() {
            return Ok((ch.unpack(), jitter));
        }
    }
    Err(Error::NotPositiveSemidefinite(format!(
        "covariance factorization failed after jitter {jitter:e}"
    )))
}

/// Serde adapters that write vectors as flat arrays and matrices as
/// row-major arrays of rows.
pub mod serde_rowmajor {
    pub mod vector {
        use nalgebra::DVector;
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
            s.collect_seq(v.iter())
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
            let v = Vec::<f64>::deserialize(d)?;
            Ok(DVector::from_vec(v))
        }
    }

    pub mod matrix {
        use nalgebra::DMatrix;
        use serde::de::Error as _;
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
            s.collect_seq(m.row_iter().map(|r| r.iter().copied().collect::<Vec<f64>>()))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
            let rows = Vec::<Vec<f64>>::deserialize(d)?;
            super::super::matrix_from_rows(&rows).map_err(D::Error::custom)
        }
    }
}

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
        return Err(Error::DimensionMismatch(format!(
            "row {i} has {} entries, expected {ncols}",
            r.len()
        )));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}
