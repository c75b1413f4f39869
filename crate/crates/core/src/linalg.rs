//! Small dense helpers shared by the inference code.

use nalgebra::{Cholesky, DMatrix, Dyn};

/// Cholesky factorization with escalating diagonal jitter.
///
/// Starts at `1e-10 * trace / n` and grows tenfold per attempt. Returns the
/// factor together with the jitter that was added (zero when none was needed).
pub(crate) fn cholesky_jittered(m: &DMatrix<f64>) -> Option<(Cholesky<f64, Dyn>, f64)> {
    if let Some(c) = Cholesky::new(m.clone()) {
        return Some((c, 0.0));
    }
    let n = m.nrows().max(1);
    let scale = (m.trace().abs() / n as f64).max(f64::MIN_POSITIVE);
    let mut jitter = 1e-10 * scale;
    for _ in 0..12 {
        let mut shifted = m.clone();
        for i in 0..m.nrows() {
            shifted[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(shifted) {
            return Some((c, jitter));
        }
        jitter *= 10.0;
    }
    None
}

pub(crate) fn log_det_chol(c: &Cholesky<f64, Dyn>) -> f64 {
    let l = c.l_dirty();
    2.0 * (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>()
}

/// Log-determinant of a symmetric positive-definite matrix, jittered if needed.
pub(crate) fn spd_log_det(m: &DMatrix<f64>) -> Option<f64> {
    cholesky_jittered(m).map(|(c, _)| log_det_chol(&c))
}

/// Inverse of a symmetric positive-definite matrix, jittered if needed.
pub(crate) fn spd_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    cholesky_jittered(m).map(|(c, _)| symmetrize(c.inverse()))
}

pub(crate) fn symmetrize(mut m: DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Repairs a nearly-PSD symmetric matrix so it admits a Cholesky factor.
pub(crate) fn spd_repair(m: DMatrix<f64>) -> DMatrix<f64> {
    let m = symmetrize(m);
    match cholesky_jittered(&m) {
        Some((_, 0.0)) => m,
        Some((_, jitter)) => {
            let mut out = m;
            for i in 0..out.nrows() {
                out[(i, i)] += jitter;
            }
            out
        }
        None => DMatrix::identity(m.nrows(), m.ncols()),
    }
}

pub(crate) fn all_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}
