use nalgebra::{DMatrix, DVector};

/// The damped system could not be factored; raise the damping and retry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LmStepError {
    NotPositiveDefinite,
}

impl std::fmt::Display for LmStepError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("damped normal matrix is not positive definite")
    }
}

impl std::error::Error for LmStepError {}

/// `dp = -alpha (JtJ + sigma I)^-1 grad`, via Cholesky.
pub fn lm_step(
    jtj: &DMatrix<f64>,
    grad: &DVector<f64>,
    sigma: f64,
    alpha: f64,
) -> Result<DVector<f64>, LmStepError> {
    let n = jtj.nrows();
    let damped = jtj + DMatrix::identity(n, n) * sigma;
    let chol = damped.cholesky().ok_or(LmStepError::NotPositiveDefinite)?;
    let dp = chol.solve(grad) * -alpha;
    if dp.iter().all(|v| v.is_finite()) {
        Ok(dp)
    } else {
        Err(LmStepError::NotPositiveDefinite)
    }
}
