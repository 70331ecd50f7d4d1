//! Singular values by one-sided (Hestenes) Jacobi, with a Householder QR
//! first when the matrix is tall.

use super::qr::householder_qr;
use super::DenseMatrix;

const MAX_SWEEPS: usize = 80;

/// One-sided Jacobi on the columns of `a`, any shape. Returns the unsorted
/// column norms after convergence, one per column of `a`.
fn jacobi_sigma(a: &DenseMatrix) -> Vec<f64> {
    let (m, n) = a.shape();
    // columns stored contiguously
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let tol = f64::EPSILON * (m.max(1) as f64).sqrt();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (&cols[p], &cols[q]);
                    let mut al = 0.0;
                    let mut be = 0.0;
                    let mut ga = 0.0;
                    for (x, y) in cp.iter().zip(cq) {
                        al += x * x;
                        be += y * y;
                        ga += x * y;
                    }
                    (al, be, ga)
                };
                if gamma == 0.0 || alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                if gamma.abs() <= tol * (alpha.sqrt() * beta.sqrt()) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + zeta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = c * t;
                rotate(&mut cols, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    cols.iter()
        .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect()
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(q);
    let cp = &mut left[p];
    let cq = &mut right[0];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let xp = *x;
        let yq = *y;
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

/// All `min(rows, cols)` singular values, descending.
pub fn singular_values(m: &DenseMatrix) -> Vec<f64> {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return vec![];
    }
    let core = if r >= c { m.clone() } else { m.transpose() };
    // a tall input is compressed to its triangular factor first
    let core = if core.rows() > core.cols() {
        householder_qr(&core).1
    } else {
        core
    };
    let mut s = jacobi_sigma(&core);
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Largest singular value.
pub fn spectral_norm(m: &DenseMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Smallest of the `min(rows, cols)` singular values.
pub fn smallest_singular(m: &DenseMatrix) -> f64 {
    singular_values(m).last().copied().unwrap_or(0.0)
}
