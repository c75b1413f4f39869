//! Projection of a correlation estimate onto the AR(1) family.

use nalgebra::DMatrix;

/// Replaces `b` by `Toeplitz([1, r, r², …])` with `r` the ratio of the mean
/// first off-diagonal to the mean diagonal, clamped to `|r| ≤ r_clamp`.
///
/// Degenerate input (non-positive mean diagonal or non-finite entries) maps
/// to the identity.
pub fn toeplitz_correct(b: &DMatrix<f64>, r_clamp: f64) -> DMatrix<f64> {
    let l = b.nrows();
    if l == 0 {
        return DMatrix::zeros(0, 0);
    }
    let m0 = b.diagonal().mean();
    if !(m0 > 0.0) || !b.iter().all(|v| v.is_finite()) {
        return DMatrix::identity(l, l);
    }
    let r = if l > 1 {
        let m1 = (0..l - 1)
            .map(|k| 0.5 * (b[(k + 1, k)] + b[(k, k + 1)]))
            .sum::<f64>()
            / (l - 1) as f64;
        (m1 / m0).clamp(-r_clamp, r_clamp)
    } else {
        0.0
    };
    toeplitz_ar1(l, r)
}

/// `Toeplitz([1, r, …, r^{l−1}])`.
pub fn toeplitz_ar1(l: usize, r: f64) -> DMatrix<f64> {
    DMatrix::from_fn(l, l, |s, k| r.powi(s.abs_diff(k) as i32))
}
