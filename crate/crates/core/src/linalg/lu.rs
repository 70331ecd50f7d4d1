use super::{DenseMatrix, LinalgError};

/// Pivot gate for [`solve_linear`], relative to `‖M‖₁`.
pub const PIVOT_TOL: f64 = 1e-14;

/// LU factorization with partial pivoting, `P M = L U`.
#[derive(Clone, Debug)]
pub struct Lu {
    n: usize,
    /// unit-lower `L` below the diagonal, `U` on and above it
    lu: DenseMatrix,
    /// `perm[i]` is the row of `M` that ended up in row `i`
    perm: Vec<usize>,
    norm1: f64,
}

impl Lu {
    pub fn factor(m: &DenseMatrix) -> Result<Self, LinalgError> {
        if !m.is_square() {
            return Err(LinalgError::DimensionMismatch {
                expected: "square matrix".into(),
                got: format!("{}x{}", m.rows(), m.cols()),
            });
        }
        let n = m.rows();
        let norm1 = m.one_norm();
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let gate = PIVOT_TOL * norm1;

        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu.get(i, k).abs()))
                .fold(
                    (k, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
            if pmax <= gate || pmax == 0.0 {
                return Err(LinalgError::SingularMatrix {
                    pivot: pmax,
                    scale: norm1,
                });
            }
            if p != k {
                perm.swap(p, k);
                let data = lu.as_mut_slice();
                for j in 0..n {
                    data.swap(k * n + j, p * n + j);
                }
            }
            let pivot = lu.get(k, k);
            let (head, tail) = lu.as_mut_slice().split_at_mut((k + 1) * n);
            let pivot_row = &head[k * n..(k + 1) * n];
            for row in tail.chunks_exact_mut(n) {
                let f = row[k] / pivot;
                row[k] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        row[j] -= f * pivot_row[j];
                    }
                }
            }
        }
        Ok(Self { n, lu, perm, norm1 })
    }

    /// Solves `M x = b` for a single right-hand side.
    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let s: f64 = (0..i).map(|j| row[j] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: f64 = (i + 1..n).map(|j| row[j] * x[j]).sum();
            x[i] = (x[i] - s) / row[i];
        }
        x
    }

    /// Solves `Mᵀ x = b`.
    pub fn solve_transpose_vec(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        // Mᵀ = Uᵀ Lᵀ P
        let mut w = b.to_vec();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu.get(j, i) * w[j]).sum();
            w[i] = (w[i] - s) / self.lu.get(i, i);
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu.get(j, i) * w[j]).sum();
            w[i] -= s;
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = w[i];
        }
        x
    }

    /// Solves `M X = B` column by column.
    pub fn solve(&self, b: &DenseMatrix) -> DenseMatrix {
        assert_eq!(b.rows(), self.n);
        let mut out = DenseMatrix::zeros(self.n, b.cols());
        for j in 0..b.cols() {
            let x = self.solve_vec(&b.column(j));
            for (i, xi) in x.into_iter().enumerate() {
                out.set(i, j, xi);
            }
        }
        out
    }

    pub fn inverse(&self) -> DenseMatrix {
        self.solve(&DenseMatrix::identity(self.n))
    }

    /// Hager's estimate of `‖M‖₁ ‖M⁻¹‖₁`.
    pub fn cond1_estimate(&self) -> f64 {
        let n = self.n;
        if n == 0 {
            return 1.0;
        }
        let mut x = vec![1.0 / n as f64; n];
        let mut est = 0.0;
        let mut last_j = usize::MAX;
        for iter in 0..5 {
            let y = self.solve_vec(&x);
            est = y.iter().map(|v| v.abs()).sum::<f64>();
            let xi: Vec<f64> = y
                .iter()
                .map(|&v| if v >= 0.0 { 1.0 } else { -1.0 })
                .collect();
            let z = self.solve_transpose_vec(&xi);
            let (j, zmax) = z
                .iter()
                .enumerate()
                .map(|(j, v)| (j, v.abs()))
                .fold((0, -1.0), |b, c| if c.1 > b.1 { c } else { b });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            if iter > 0 && (zmax <= ztx || j == last_j) {
                break;
            }
            last_j = j;
            x = vec![0.0; n];
            x[j] = 1.0;
        }
        self.norm1 * est
    }
}

/// Solves `M X = B` and returns a 1-norm condition estimate of `M`.
pub fn solve_linear(m: &DenseMatrix, b: &DenseMatrix) -> Result<(DenseMatrix, f64), LinalgError> {
    if b.rows() != m.rows() {
        return Err(LinalgError::DimensionMismatch {
            expected: format!("{} right-hand-side rows", m.rows()),
            got: format!("{}", b.rows()),
        });
    }
    let lu = Lu::factor(m)?;
    Ok((lu.solve(b), lu.cond1_estimate()))
}
