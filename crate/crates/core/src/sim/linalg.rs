//! Symmetric positive-definite solves with a condition check.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};

/// Largest condition estimate accepted for a system we solve.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Cholesky factor of a symmetric positive-definite matrix.
///
/// The condition number is estimated as the squared ratio of the extreme
/// diagonal entries of the factor, which is a lower bound on the true
/// 2-norm condition number and exact for diagonal matrices.
pub fn spd_factor(m: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    let sym = (&m + m.transpose()) * 0.5;
    let Some(chol) = Cholesky::new(sym) else {
        return Err(Error::IllConditioned { condition: f64::INFINITY, limit: CONDITION_LIMIT });
    };
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    let condition = (hi / lo).powi(2);
    if condition.is_nan() || condition > CONDITION_LIMIT {
        return Err(Error::IllConditioned { condition, limit: CONDITION_LIMIT });
    }
    Ok(chol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_well_conditioned() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let chol = spd_factor(m.clone()).unwrap();
        let x = chol.solve(&DMatrix::identity(2, 2));
        assert!((&m * x - DMatrix::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn rejects_singular_and_ill_conditioned() {
        let sing = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(spd_factor(sing), Err(Error::IllConditioned { .. })));
        let ill = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1e-13]));
        assert!(matches!(spd_factor(ill), Err(Error::IllConditioned { .. })));
    }
}
