use super::{DenseMatrix, LinalgError};

/// Rank gate for [`qr_factor`], relative to the Frobenius norm of the input.
pub const QR_RANK_TOL: f64 = 1e-12;

/// Thin Householder QR of a tall matrix: `m = Q R` with `QᵀQ = I` and
/// `R` upper triangular with a nonnegative diagonal.
///
/// Fails with [`LinalgError::RankDeficient`] when some `R[k][k]` falls below
/// `1e-12 ‖M‖`; the factors are still well defined then, so callers that
/// want them regardless can use [`householder_qr`].
pub fn qr_factor(m: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix), LinalgError> {
    if m.rows() < m.cols() {
        return Err(LinalgError::DimensionMismatch {
            expected: "rows >= cols".into(),
            got: format!("{}x{}", m.rows(), m.cols()),
        });
    }
    let (q, r) = householder_qr(m);
    let gate = QR_RANK_TOL * m.frobenius_norm();
    if let Some(k) = (0..r.cols()).find(|&k| r.get(k, k) <= gate) {
        return Err(LinalgError::RankDeficient {
            column: k,
            value: r.get(k, k),
        });
    }
    Ok((q, r))
}

/// Householder QR with no rank check. Requires `rows >= cols`.
pub fn householder_qr(m: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
    let (rows, cols) = m.shape();
    assert!(rows >= cols, "householder_qr needs a tall matrix");
    let mut a = m.clone();
    let mut reflectors: Vec<(Vec<f64>, f64)> = Vec::with_capacity(cols);
    let mut w = vec![0.0; cols];

    for k in 0..cols {
        let mut v: Vec<f64> = (k..rows).map(|i| a.get(i, k)).collect();
        let alpha = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if alpha == 0.0 {
            reflectors.push((v, 0.0));
            continue;
        }
        let s = if v[0] >= 0.0 { -alpha } else { alpha };
        v[0] -= s;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        let beta = if vnorm2 > 0.0 { 2.0 / vnorm2 } else { 0.0 };
        apply_reflector(&mut a, k, k, &v, beta, &mut w);
        reflectors.push((v, beta));
    }

    let mut r = DenseMatrix::zeros(cols, cols);
    for i in 0..cols {
        for j in i..cols {
            r.set(i, j, a.get(i, j));
        }
    }

    let mut q = DenseMatrix::zeros(rows, cols);
    for i in 0..cols {
        q.set(i, i, 1.0);
    }
    for (k, (v, beta)) in reflectors.iter().enumerate().rev() {
        if *beta != 0.0 {
            apply_reflector(&mut q, k, k, v, *beta, &mut w);
        }
    }

    for k in 0..cols {
        if r.get(k, k) < 0.0 {
            for j in k..cols {
                r.set(k, j, -r.get(k, j));
            }
            for i in 0..rows {
                q.set(i, k, -q.get(i, k));
            }
        }
    }
    (q, r)
}

/// `a[r0.., c0..] -= beta v (vᵀ a[r0.., c0..])`.
fn apply_reflector(a: &mut DenseMatrix, r0: usize, c0: usize, v: &[f64], beta: f64, w: &mut [f64]) {
    let cols = a.cols();
    let w = &mut w[..cols - c0];
    w.iter_mut().for_each(|x| *x = 0.0);
    for (t, &vi) in v.iter().enumerate() {
        if vi != 0.0 {
            let row = &a.row(r0 + t)[c0..];
            for (wj, &x) in w.iter_mut().zip(row) {
                *wj += vi * x;
            }
        }
    }
    for (t, &vi) in v.iter().enumerate() {
        let f = beta * vi;
        if f != 0.0 {
            let row = &mut a.row_mut(r0 + t)[c0..];
            for (x, &wj) in row.iter_mut().zip(w.iter()) {
                *x -= f * wj;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gaussian_matrix, RngStream};

    fn orthogonality_error(q: &DenseMatrix) -> f64 {
        q.tr_matmul(q)
            .sub(&DenseMatrix::identity(q.cols()))
            .max_abs()
    }

    #[test]
    fn identity_factors_to_itself() {
        let (q, r) = qr_factor(&DenseMatrix::identity(3)).unwrap();
        assert_eq!(q, DenseMatrix::identity(3));
        assert_eq!(r, DenseMatrix::identity(3));
    }

    #[test]
    fn column_norm() {
        let (q, r) = qr_factor(&DenseMatrix::from_rows(&[[3.0], [4.0]])).unwrap();
        assert!((r.get(0, 0) - 5.0).abs() < 1e-15);
        assert!((q.get(0, 0) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn gaussian_reconstruction() {
        let m = gaussian_matrix(50, 10, &mut RngStream::new(3, 0));
        let (q, r) = qr_factor(&m).unwrap();
        let resid = q.matmul(&r).sub(&m).frobenius_norm() / m.frobenius_norm();
        assert!(resid <= 1e-13, "{resid}");
        assert!(orthogonality_error(&q) <= 1e-13 * (10f64).sqrt());
        for i in 0..10 {
            assert!(r.get(i, i) >= 0.0);
            for j in 0..i {
                assert_eq!(r.get(i, j), 0.0);
            }
        }
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let m = DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]]);
        assert!(matches!(
            qr_factor(&m),
            Err(LinalgError::RankDeficient { column: 1, .. })
        ));
        let zero = DenseMatrix::zeros(3, 1);
        assert!(qr_factor(&zero).is_err());
    }
}
