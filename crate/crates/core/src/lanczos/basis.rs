use crate::linalg::{
    axpy, dot, householder_qr, sym_eig, sym_eigvals, tridiagonal_eigvals, DenseMatrix,
};

use super::{LanczosError, LinearOperator};

/// Relative gate on the diagonal of each new block's `R` factor, scaled by
/// `‖A Vⱼ‖_F`.
const BREAKDOWN_TOL: f64 = 1e-12;

/// Orthonormal basis of a block Krylov subspace and the projected
/// block-tridiagonal matrix.
#[derive(Clone, Debug)]
pub struct BlockKrylovBasis {
    n: usize,
    b: usize,
    steps: usize,
    /// basis vectors, one per row
    vt: Vec<f64>,
    diag_blocks: Vec<DenseMatrix>,
    /// `sub_blocks[j]` couples block `j+1` to block `j`
    sub_blocks: Vec<DenseMatrix>,
    /// `A V_ℓ − V_ℓ T` restricted to the last block, one vector per row
    residual: DenseMatrix,
}

impl BlockKrylovBasis {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn block_size(&self) -> usize {
        self.b
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of basis vectors, `bℓ`.
    pub fn dim(&self) -> usize {
        self.b * self.steps
    }

    /// Basis vector `i` as a slice.
    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vt[i * self.n..(i + 1) * self.n]
    }

    /// `Vᵀ`, one basis vector per row.
    pub fn basis_rows(&self) -> DenseMatrix {
        DenseMatrix::from_vec_unchecked(self.dim(), self.n, self.vt[..self.dim() * self.n].to_vec())
    }

    /// `V` as an `n×bℓ` matrix.
    pub fn basis(&self) -> DenseMatrix {
        self.basis_rows().transpose()
    }

    /// The block-tridiagonal `T = VᵀAV` assembled from the recurrence.
    pub fn projected(&self) -> DenseMatrix {
        let (b, m) = (self.b, self.dim());
        let mut t = DenseMatrix::zeros(m, m);
        for (j, a) in self.diag_blocks.iter().enumerate() {
            t.set_submatrix(j * b, j * b, a);
        }
        for (j, r) in self
            .sub_blocks
            .iter()
            .enumerate()
            .take(self.steps.saturating_sub(1))
        {
            t.set_submatrix((j + 1) * b, j * b, r);
            t.set_submatrix(j * b, (j + 1) * b, &r.transpose());
        }
        t
    }

    /// The block `W` with `A V = V T + W Eₗᵀ`, one vector per row.
    pub fn residual_block(&self) -> &DenseMatrix {
        &self.residual
    }

    /// Eigenvalues of `T`, ascending.
    pub fn ritz_values(&self) -> Result<Vec<f64>, LanczosError> {
        if self.b == 1 {
            let diag: Vec<f64> = self.diag_blocks.iter().map(|a| a.get(0, 0)).collect();
            let off: Vec<f64> = self
                .sub_blocks
                .iter()
                .take(self.steps - 1)
                .map(|r| r.get(0, 0))
                .collect();
            return Ok(tridiagonal_eigvals(&diag, &off)?);
        }
        Ok(sym_eigvals(&self.projected())?)
    }
}

/// Incremental block Lanczos with two-pass classical Gram–Schmidt against the
/// whole basis. The QR of each new block is deferred to the start of the next
/// step, so the last step never breaks down.
#[derive(Clone, Debug)]
pub struct BlockLanczos {
    basis: BlockKrylovBasis,
    residual_norm: f64,
}

impl BlockLanczos {
    /// Orthonormalizes the `n×b` starting block. Costs no matvecs.
    pub fn new(omega: &DenseMatrix) -> Result<Self, LanczosError> {
        let (n, b) = omega.shape();
        if b == 0 || b > n {
            return Err(LanczosError::InvalidSteps { steps: 1, b, n });
        }
        let (q, r) = householder_qr(omega);
        let scale = omega.frobenius_norm();
        check_diagonal(&r, BREAKDOWN_TOL * scale, 0)?;
        let basis = BlockKrylovBasis {
            n,
            b,
            steps: 0,
            vt: q.transpose().into_vec(),
            diag_blocks: Vec::new(),
            sub_blocks: Vec::new(),
            residual: DenseMatrix::zeros(b, n),
        };
        Ok(Self {
            basis,
            residual_norm: scale,
        })
    }

    pub fn basis(&self) -> &BlockKrylovBasis {
        &self.basis
    }

    pub fn into_basis(self) -> BlockKrylovBasis {
        self.basis
    }

    /// Adds one block: `b` matvecs.
    pub fn step(&mut self, op: &mut LinearOperator) -> Result<(), LanczosError> {
        let bs = &mut self.basis;
        let (n, b) = (bs.n, bs.b);
        if op.dim() != n {
            return Err(LanczosError::DimensionMismatch {
                expected: format!("operator of dimension {n}"),
                got: format!("{}", op.dim()),
            });
        }
        if (bs.steps + 1) * b > n {
            return Err(LanczosError::InvalidSteps {
                steps: bs.steps + 1,
                b,
                n,
            });
        }
        let j = bs.steps;
        if j > 0 {
            let (q, r) = householder_qr(&bs.residual.transpose());
            check_diagonal(&r, BREAKDOWN_TOL * self.residual_norm, j)?;
            bs.vt.extend_from_slice(q.transpose().as_slice());
            bs.sub_blocks.push(r);
        }
        let vj = DenseMatrix::from_vec_unchecked(b, n, bs.vt[j * b * n..(j + 1) * b * n].to_vec());
        let mut w = op.apply(&vj)?;
        self.residual_norm = w.frobenius_norm();

        let m = (j + 1) * b;
        let mut aj = DenseMatrix::zeros(b, b);
        let mut coef = vec![0.0; m];
        for _pass in 0..2 {
            for c in 0..b {
                let wc = w.row_mut(c);
                for (r, cr) in coef.iter_mut().enumerate() {
                    *cr = dot(&bs.vt[r * n..(r + 1) * n], wc);
                }
                for (r, &cr) in coef.iter().enumerate() {
                    axpy(-cr, &bs.vt[r * n..(r + 1) * n], wc);
                }
                for r in 0..b {
                    aj.set(r, c, aj.get(r, c) + coef[j * b + r]);
                }
            }
        }
        let sym = aj.add(&aj.transpose()).scale(0.5);
        bs.diag_blocks.push(sym);
        bs.residual = w;
        bs.steps += 1;
        Ok(())
    }
}

fn check_diagonal(r: &DenseMatrix, gate: f64, step: usize) -> Result<(), LanczosError> {
    if let Some(k) = (0..r.cols()).find(|&k| r.get(k, k) <= gate) {
        return Err(LanczosError::Breakdown {
            step,
            column: k,
            value: r.get(k, k),
        });
    }
    Ok(())
}

/// `ℓ` steps of block Lanczos from the `n×b` block `omega`; `bℓ` matvecs.
pub fn block_lanczos(
    op: &mut LinearOperator,
    omega: &DenseMatrix,
    steps: usize,
) -> Result<BlockKrylovBasis, LanczosError> {
    let (n, b) = omega.shape();
    if n != op.dim() {
        return Err(LanczosError::DimensionMismatch {
            expected: format!("{} rows in the starting block", op.dim()),
            got: format!("{n}"),
        });
    }
    if steps == 0 || b * steps > n {
        return Err(LanczosError::InvalidSteps { steps, b, n });
    }
    let mut lanczos = BlockLanczos::new(omega)?;
    for _ in 0..steps {
        lanczos.step(op)?;
    }
    Ok(lanczos.into_basis())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    Largest,
    Smallest,
}

/// Selected Ritz pairs, ascending in value.
#[derive(Clone, Debug)]
pub struct RitzSet {
    pub values: Vec<f64>,
    /// `n×k`, column `i` belongs to `values[i]`
    pub vectors: DenseMatrix,
    /// `‖A x − θ x‖` for each pair
    pub residuals: Vec<f64>,
}

pub fn rayleigh_ritz(
    basis: &BlockKrylovBasis,
    how_many: usize,
    which: Which,
) -> Result<RitzSet, LanczosError> {
    let m = basis.dim();
    if how_many > m {
        return Err(LanczosError::InvalidArgument(format!(
            "{how_many} Ritz pairs requested from a {m}-dimensional basis"
        )));
    }
    let start = match which {
        Which::Largest => m - how_many,
        Which::Smallest => 0,
    };
    ritz_range(basis, start, how_many)
}

/// Ritz pairs `start..start+count` in ascending order.
pub(crate) fn ritz_range(
    basis: &BlockKrylovBasis,
    start: usize,
    count: usize,
) -> Result<RitzSet, LanczosError> {
    let m = basis.dim();
    let eig = sym_eig(&basis.projected())?;
    let (n, b) = (basis.n, basis.b);
    let mut vectors = DenseMatrix::zeros(count, n);
    let mut residuals = Vec::with_capacity(count);
    for (col, idx) in (start..start + count).enumerate() {
        let y = eig.vectors.column(idx);
        let x = vectors.row_mut(col);
        for (r, &yr) in y.iter().enumerate() {
            axpy(yr, basis.vector(r), x);
        }
        let mut res = vec![0.0; n];
        for c in 0..b {
            axpy(y[m - b + c], basis.residual.row(c), &mut res);
        }
        residuals.push(dot(&res, &res).sqrt());
    }
    Ok(RitzSet {
        values: eig.values[start..start + count].to_vec(),
        vectors: vectors.transpose(),
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lanczos::{DenseOperator, DiagonalOperator};
    use crate::linalg::{gaussian_matrix, singular_values, RngStream};

    fn orthonormality_defect(basis: &BlockKrylovBasis) -> f64 {
        let v = basis.basis();
        v.tr_matmul(&v)
            .sub(&DenseMatrix::identity(basis.dim()))
            .max_abs()
    }

    #[test]
    fn identity_operator_single_step() {
        let mut op = LinearOperator::new(DiagonalOperator::new(vec![1.0; 10]));
        let omega = gaussian_matrix(10, 2, &mut RngStream::new(1, 1));
        let basis = block_lanczos(&mut op, &omega, 1).unwrap();
        assert!(basis.projected().sub(&DenseMatrix::identity(2)).max_abs() < 1e-14);
        assert_eq!(op.matvecs(), 2);
        let ritz = rayleigh_ritz(&basis, 2, Which::Largest).unwrap();
        assert!(ritz.values.iter().all(|v| (v - 1.0).abs() < 1e-14));
        assert!(ritz.residuals.iter().all(|r| *r < 1e-13));
    }

    #[test]
    fn full_dimension_recovers_spectrum() {
        let diag: Vec<f64> = (1..=10).map(f64::from).collect();
        let mut op = LinearOperator::new(DiagonalOperator::new(diag.clone()));
        let omega = gaussian_matrix(10, 1, &mut RngStream::new(3, 0));
        let basis = block_lanczos(&mut op, &omega, 10).unwrap();
        assert_eq!(op.matvecs(), 10);
        let values = basis.ritz_values().unwrap();
        for (v, d) in values.iter().zip(&diag) {
            assert!((v - d).abs() < 1e-9, "{v} vs {d}");
        }
        assert!(orthonormality_defect(&basis) <= 1e-10 * 10f64.sqrt());
    }

    #[test]
    fn dense_operator_projection_and_ritz() {
        let mut rng = RngStream::new(5, 0);
        let g = gaussian_matrix(24, 24, &mut rng);
        let a = g.add(&g.transpose()).scale(0.5);
        let mut op = LinearOperator::new(DenseOperator::new(a.clone()).unwrap());
        let omega = gaussian_matrix(24, 3, &mut rng);
        let basis = block_lanczos(&mut op, &omega, 5).unwrap();
        let v = basis.basis();
        let vav = v.tr_matmul(&a.matmul(&v));
        let norm = singular_values(&a)[0];
        assert!(vav.sub(&basis.projected()).max_abs() <= 1e-9 * norm);
        assert!(orthonormality_defect(&basis) <= 1e-10 * 15f64.sqrt());

        let ritz = rayleigh_ritz(&basis, 4, Which::Smallest).unwrap();
        for (i, (&theta, &res)) in ritz.values.iter().zip(&ritz.residuals).enumerate() {
            let x = ritz.vectors.column(i);
            let ax = a.matvec(&x);
            let r: f64 = ax
                .iter()
                .zip(&x)
                .map(|(p, q)| (p - theta * q).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!((r - res).abs() <= 1e-9 * norm, "{r} vs {res}");
        }
        // full dimension: Ritz values are the dense eigenvalues
        let full = block_lanczos(&mut op, &omega, 8).unwrap();
        let all = rayleigh_ritz(&full, 24, Which::Smallest).unwrap();
        let exact = sym_eigvals(&a).unwrap();
        for (x, y) in all.values.iter().zip(&exact) {
            assert!((x - y).abs() <= 1e-9);
        }
        assert!(all.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn diagonal_projection_gives_sorted_diagonal() {
        // Krylov space of a diagonal operator started at coordinate vectors
        let mut op = LinearOperator::new(DiagonalOperator::new(vec![3.0, 1.0, 2.0, 0.0]));
        let omega = DenseMatrix::from_rows(&[
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, 0.0],
        ]);
        let basis = block_lanczos(&mut op, &omega, 1).unwrap();
        let ritz = rayleigh_ritz(&basis, 3, Which::Largest).unwrap();
        assert_eq!(ritz.values, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn rejects_bad_sizes() {
        let mut op = LinearOperator::new(DiagonalOperator::new(vec![1.0; 4]));
        let omega = gaussian_matrix(4, 2, &mut RngStream::new(0, 0));
        assert!(matches!(
            block_lanczos(&mut op, &omega, 3),
            Err(LanczosError::InvalidSteps { .. })
        ));
        assert!(matches!(
            block_lanczos(&mut op, &omega, 0),
            Err(LanczosError::InvalidSteps { .. })
        ));
        let rank1 = DenseMatrix::from_rows(&[[1.0, 1.0], [1.0, 1.0], [0.0, 0.0], [0.0, 0.0]]);
        assert!(matches!(
            block_lanczos(&mut op, &rank1, 1),
            Err(LanczosError::Breakdown { step: 0, .. })
        ));
        // an invariant subspace reached early breaks down on the next step
        let e1 = DenseMatrix::from_rows(&[[1.0], [0.0], [0.0], [0.0]]);
        let mut diag = LinearOperator::new(DiagonalOperator::new(vec![1.0, 2.0, 3.0, 4.0]));
        assert!(matches!(
            block_lanczos(&mut diag, &e1, 2),
            Err(LanczosError::Breakdown { step: 1, .. })
        ));
    }
}
