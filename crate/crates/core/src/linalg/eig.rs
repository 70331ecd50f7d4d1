//! Dense symmetric eigensolver: Householder reduction to tridiagonal form
//! followed by the implicit QL iteration with Wilkinson-type shifts
//! (the EISPACK `tred2`/`tql2` pair).

use super::{DenseMatrix, LinalgError};

/// Relative symmetry tolerance accepted by [`sym_eig`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Eigen-decomposition of a symmetric matrix. Values ascend; column `j` of
/// `vectors` belongs to `values[j]`.
#[derive(Clone, Debug)]
pub struct SymEig {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

pub fn sym_eig(s: &DenseMatrix) -> Result<SymEig, LinalgError> {
    let a = symmetrized(s)?;
    let n = a.rows();
    if n == 0 {
        return Ok(SymEig {
            values: vec![],
            vectors: DenseMatrix::zeros(0, 0),
        });
    }
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut v, &mut d, &mut e, true);
    tql2(&mut d, &mut e, Some(&mut v))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |i, j| v[i][order[j]]);
    Ok(SymEig { values, vectors })
}

/// Eigenvalues only, ascending. Skips the accumulation of transformations.
pub fn sym_eigvals(s: &DenseMatrix) -> Result<Vec<f64>, LinalgError> {
    let a = symmetrized(s)?;
    let n = a.rows();
    if n == 0 {
        return Ok(vec![]);
    }
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut v, &mut d, &mut e, false);
    tql2(&mut d, &mut e, None)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `diag` and
/// off-diagonal `off` (`off.len() + 1 == diag.len()`), ascending.
pub fn tridiagonal_eigvals(diag: &[f64], off: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let n = diag.len();
    if n == 0 {
        return Ok(vec![]);
    }
    if off.len() + 1 != n {
        return Err(LinalgError::DimensionMismatch {
            expected: format!("{} off-diagonal entries", n - 1),
            got: format!("{}", off.len()),
        });
    }
    let mut d = diag.to_vec();
    // tql2 expects the subdiagonal shifted by one
    let mut e = vec![0.0; n];
    e[1..].copy_from_slice(off);
    tql2(&mut d, &mut e, None)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

fn symmetrized(s: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    if !s.is_square() {
        return Err(LinalgError::DimensionMismatch {
            expected: "square matrix".into(),
            got: format!("{}x{}", s.rows(), s.cols()),
        });
    }
    let scale = s.max_abs();
    let asym = s.asymmetry();
    if asym > SYMMETRY_TOL * scale {
        return Err(LinalgError::NotSymmetric {
            asymmetry: asym,
            scale,
        });
    }
    Ok(s.add(&s.transpose()).scale(0.5))
}

fn tred2(v: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64], accumulate: bool) {
    let n = d.len();
    d.copy_from_slice(&v[n - 1][..n]);

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for &dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
                v[j][i] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }

            for j in 0..i {
                f = d[j];
                v[j][i] = f;
                g = e[j] + v[j][j] * f;
                for k in j + 1..i {
                    g += v[k][j] * d[k];
                    e[k] += v[k][j] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k][j] -= f * e[k] + g * d[k];
                }
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
            }
        }
        d[i] = h;
    }

    if !accumulate {
        for j in 0..n {
            d[j] = v[j][j];
        }
        e[0] = 0.0;
        return;
    }

    for i in 0..n - 1 {
        v[n - 1][i] = v[i][i];
        v[i][i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let g: f64 = v[..=i].iter().map(|row| row[i + 1] * row[j]).sum();
                for k in 0..=i {
                    v[k][j] -= g * d[k];
                }
            }
        }
        for row in v.iter_mut().take(i + 1) {
            row[i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = 0.0;
    }
    v[n - 1][n - 1] = 1.0;
    e[0] = 0.0;
}

fn tql2(d: &mut [f64], e: &mut [f64], mut v: Option<&mut [Vec<f64>]>) -> Result<(), LinalgError> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let max_iter = 60 * n.max(1);

    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > max_iter {
                    return Err(LinalgError::NoConvergence {
                        iterations: max_iter,
                    });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(v) = v.as_deref_mut() {
                        for row in v.iter_mut() {
                            let hk = row[i + 1];
                            row[i + 1] = s * row[i] + c * hk;
                            row[i] = c * row[i] - s * hk;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gaussian_matrix, RngStream};

    fn random_symmetric(n: usize, seed: u64) -> DenseMatrix {
        let g = gaussian_matrix(n, n, &mut RngStream::new(seed, 0));
        g.add(&g.transpose())
    }

    #[test]
    fn diagonal_case() {
        let e = sym_eig(&DenseMatrix::from_diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn analytic_two_by_two() {
        let e = sym_eig(&DenseMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]])).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-15);
        assert!((e.values[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_residuals() {
        let s = random_symmetric(20, 11);
        let e = sym_eig(&s).unwrap();
        let norm = e.values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (j, &lam) in e.values.iter().enumerate() {
            let x = e.vectors.column(j);
            let sx = s.matvec(&x);
            let r: f64 = sx
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - lam * b).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(r <= 1e-11 * norm, "pair {j}: {r}");
        }
        let orth = e
            .vectors
            .tr_matmul(&e.vectors)
            .sub(&DenseMatrix::identity(20))
            .max_abs();
        assert!(orth < 1e-13);
        let vals = sym_eigvals(&s).unwrap();
        for (a, b) in vals.iter().zip(&e.values) {
            assert!((a - b).abs() <= 1e-12 * norm);
        }
    }

    #[test]
    fn rejects_nonsymmetric() {
        let m = DenseMatrix::from_rows(&[[1.0, 2.0], [0.0, 1.0]]);
        assert!(matches!(sym_eig(&m), Err(LinalgError::NotSymmetric { .. })));
    }

    #[test]
    fn one_by_one_and_empty() {
        assert_eq!(
            sym_eigvals(&DenseMatrix::from_diag(&[4.0])).unwrap(),
            vec![4.0]
        );
        assert!(sym_eigvals(&DenseMatrix::zeros(0, 0)).unwrap().is_empty());
    }

    #[test]
    fn tridiagonal_matches_dense() {
        let diag = [2.0, -1.0, 0.5, 3.0];
        let off = [1.0, 0.3, -0.7];
        let dense = DenseMatrix::from_fn(4, 4, |i, j| {
            if i == j {
                diag[i]
            } else if i + 1 == j {
                off[i]
            } else if j + 1 == i {
                off[j]
            } else {
                0.0
            }
        });
        let a = tridiagonal_eigvals(&diag, &off).unwrap();
        let b = sym_eigvals(&dense).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-13);
        }
    }
}
