use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

pub const DEFAULT_WINDOW: usize = 61;
pub const DEFAULT_ORDER: usize = 4;

/// Weights that evaluate, at the centre sample, the least-squares
/// polynomial of degree `order` fitted to `left` samples before it and
/// `right` samples after it. Computed through a QR factorization of the
/// Vandermonde matrix.
pub fn savgol_coefficients(left: usize, right: usize, order: usize) -> Result<Vec<f64>> {
    let m = left + right + 1;
    if order >= m {
        return Err(Error::Contract(format!(
            "polynomial order {order} needs more than {m} samples"
        )));
    }
    let scale = left.max(right).max(1) as f64;
    let a = DMatrix::from_fn(m, order + 1, |r, c| {
        ((r as f64 - left as f64) / scale).powi(c as i32)
    });
    let qr = a.qr();
    let r = qr.r();
    // row 0 of pinv(A) = (Q R^-T e0)^T
    let mut e0 = DVector::zeros(order + 1);
    e0[0] = 1.0;
    let z = r
        .transpose()
        .solve_lower_triangular(&e0)
        .ok_or_else(|| Error::Contract("degenerate Savitzky-Golay window".into()))?;
    Ok((qr.q() * z).iter().copied().collect())
}

/// Savitzky-Golay smoothing. Samples closer than half a window to either
/// end use a fit over the truncated window.
pub fn savgol_filter(series: &[f64], window: usize, order: usize) -> Result<Vec<f64>> {
    if window.is_multiple_of(2) {
        return Err(Error::Contract(format!("window must be odd, got {window}")));
    }
    if order >= window {
        return Err(Error::Contract(format!(
            "order {order} must be below window {window}"
        )));
    }
    let n = series.len();
    if n < window {
        return Err(Error::Contract(format!(
            "series of {n} samples is shorter than the {window}-point window"
        )));
    }
    let half = window / 2;
    let centre = savgol_coefficients(half, half, order)?;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let left = i.min(half);
        let right = (n - 1 - i).min(half);
        let edge;
        let w = if left == half && right == half {
            &centre
        } else {
            edge = savgol_coefficients(left, right, order)?;
            &edge
        };
        out.push(
            w.iter()
                .zip(&series[i - left..=i + right])
                .map(|(a, b)| a * b)
                .sum(),
        );
    }
    Ok(out)
}

/// [`savgol_filter`] with the 61-point, 4th-order defaults.
pub fn savgol_default(series: &[f64]) -> Result<Vec<f64>> {
    savgol_filter(series, DEFAULT_WINDOW, DEFAULT_ORDER)
}
