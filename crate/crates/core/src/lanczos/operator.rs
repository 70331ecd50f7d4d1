use crate::linalg::{dot, gaussian_matrix, DenseMatrix, RngStream};

use super::LanczosError;

/// A symmetric linear map on `ℝⁿ`.
pub trait Operator: Send + Sync {
    fn dim(&self) -> usize;

    /// Applies the map to every row of a `b×n` block.
    fn apply(&self, block: &DenseMatrix) -> DenseMatrix;

    /// An upper bound on `‖A‖₂` when one is cheap to get.
    fn norm_hint(&self) -> Option<f64> {
        None
    }
}

#[derive(Clone, Debug)]
pub struct DiagonalOperator {
    diag: Vec<f64>,
}

impl DiagonalOperator {
    pub fn new(diag: Vec<f64>) -> Self {
        Self { diag }
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }
}

impl Operator for DiagonalOperator {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn apply(&self, block: &DenseMatrix) -> DenseMatrix {
        let n = self.diag.len();
        let data = block
            .as_slice()
            .chunks_exact(n)
            .flat_map(|row| row.iter().zip(&self.diag).map(|(x, d)| x * d))
            .collect();
        DenseMatrix::new(block.rows(), n, data).expect("finite product")
    }

    fn norm_hint(&self) -> Option<f64> {
        Some(self.diag.iter().fold(0.0, |m, d| m.max(d.abs())))
    }
}

/// Explicit symmetric matrix.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    a: DenseMatrix,
}

impl DenseOperator {
    pub fn new(a: DenseMatrix) -> Result<Self, LanczosError> {
        if !a.is_square() {
            return Err(LanczosError::DimensionMismatch {
                expected: "square matrix".into(),
                got: format!("{}x{}", a.rows(), a.cols()),
            });
        }
        let bound = 1e-12 * a.max_abs();
        let defect = a.asymmetry();
        if defect > bound {
            return Err(LanczosError::NotSymmetric { defect, bound });
        }
        Ok(Self { a })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.a
    }
}

impl Operator for DenseOperator {
    fn dim(&self) -> usize {
        self.a.rows()
    }

    fn apply(&self, block: &DenseMatrix) -> DenseMatrix {
        // rows of block times Aᵀ = A
        block.matmul(&self.a)
    }

    fn norm_hint(&self) -> Option<f64> {
        Some(self.a.frobenius_norm())
    }
}

/// `ÂᵀÂ` for a rectangular `Â`, applied without forming the product.
#[derive(Clone, Debug)]
pub struct GramOperator {
    a_hat: DenseMatrix,
}

impl GramOperator {
    pub fn new(a_hat: DenseMatrix) -> Self {
        Self { a_hat }
    }

    pub fn factor(&self) -> &DenseMatrix {
        &self.a_hat
    }
}

impl Operator for GramOperator {
    fn dim(&self) -> usize {
        self.a_hat.cols()
    }

    fn apply(&self, block: &DenseMatrix) -> DenseMatrix {
        // (X Âᵀ) Â
        let xat = DenseMatrix::from_fn(block.rows(), self.a_hat.rows(), |r, i| {
            dot(block.row(r), self.a_hat.row(i))
        });
        xat.matmul(&self.a_hat)
    }

    fn norm_hint(&self) -> Option<f64> {
        let f = self.a_hat.frobenius_norm();
        Some(f * f)
    }
}

/// An operator together with a count of single-vector applications.
pub struct LinearOperator {
    op: Box<dyn Operator>,
    matvecs: usize,
}

impl LinearOperator {
    pub fn new(op: impl Operator + 'static) -> Self {
        Self {
            op: Box::new(op),
            matvecs: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn matvecs(&self) -> usize {
        self.matvecs
    }

    pub fn reset_counter(&mut self) {
        self.matvecs = 0;
    }

    pub fn inner(&self) -> &dyn Operator {
        self.op.as_ref()
    }

    /// Applies the operator to each row of `block`; counts `block.rows()`.
    pub fn apply(&mut self, block: &DenseMatrix) -> Result<DenseMatrix, LanczosError> {
        if block.cols() != self.dim() {
            return Err(LanczosError::DimensionMismatch {
                expected: format!("vectors of length {}", self.dim()),
                got: format!("{}", block.cols()),
            });
        }
        self.matvecs += block.rows();
        Ok(self.op.apply(block))
    }

    /// `‖A‖₂`, from the hint or 30 steps of power iteration. Not counted.
    pub fn norm_estimate(&self, rng: &mut RngStream) -> f64 {
        if let Some(h) = self.op.norm_hint() {
            return h;
        }
        let n = self.dim();
        let mut x = gaussian_matrix(1, n, rng);
        let mut est = 0.0;
        for _ in 0..30 {
            let nx = x.frobenius_norm();
            if nx == 0.0 {
                return 0.0;
            }
            x = x.scale(1.0 / nx);
            x = self.op.apply(&x);
            est = x.frobenius_norm();
        }
        est
    }

    /// Spot-checks `|xᵀ(Ay) − yᵀ(Ax)| ≤ 1e−10 ‖A‖ ‖x‖ ‖y‖` on random probes.
    /// Probes are not counted as matvecs.
    pub fn check_symmetry(&self, rng: &mut RngStream, probes: usize) -> Result<(), LanczosError> {
        let norm = self.norm_estimate(rng);
        let n = self.dim();
        for _ in 0..probes {
            let xy = gaussian_matrix(2, n, rng);
            let a = self.op.apply(&xy);
            let (x, y) = (xy.row(0), xy.row(1));
            let defect = (dot(x, a.row(1)) - dot(y, a.row(0))).abs();
            let bound = 1e-10 * norm * dot(x, x).sqrt() * dot(y, y).sqrt();
            if defect > bound {
                return Err(LanczosError::NotSymmetric { defect, bound });
            }
        }
        Ok(())
    }
}

impl std::fmt::Debug for LinearOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LinearOperator")
            .field("dim", &self.dim())
            .field("matvecs", &self.matvecs)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn operators_agree_with_dense_products() {
        let mut rng = RngStream::new(1, 0);
        let ah = gaussian_matrix(7, 5, &mut rng);
        let gram = ah.tr_matmul(&ah);
        let x = gaussian_matrix(3, 5, &mut rng);
        let expected = x.matmul(&gram);
        let via_gram = GramOperator::new(ah).apply(&x);
        let via_dense = DenseOperator::new(gram).unwrap().apply(&x);
        assert!(via_gram.sub(&expected).max_abs() < 1e-12);
        assert!(via_dense.sub(&expected).max_abs() < 1e-12);

        let d = DiagonalOperator::new(vec![1.0, -2.0, 3.0, 0.0, 5.0]);
        let y = d.apply(&x);
        assert_eq!(y.get(2, 1), -2.0 * x.get(2, 1));
    }

    #[test]
    fn counter_and_symmetry() {
        let mut op = LinearOperator::new(DiagonalOperator::new(vec![1.0; 6]));
        op.apply(&DenseMatrix::zeros(4, 6)).unwrap();
        assert_eq!(op.matvecs(), 4);
        let mut rng = RngStream::new(2, 0);
        op.check_symmetry(&mut rng, 5).unwrap();
        assert_eq!(op.matvecs(), 4);
        assert!(op.apply(&DenseMatrix::zeros(1, 5)).is_err());

        struct Skew;
        impl Operator for Skew {
            fn dim(&self) -> usize {
                2
            }
            fn apply(&self, block: &DenseMatrix) -> DenseMatrix {
                DenseMatrix::from_fn(block.rows(), 2, |r, i| {
                    if i == 0 {
                        block.get(r, 1)
                    } else {
                        -block.get(r, 0)
                    }
                })
            }
        }
        let skew = LinearOperator::new(Skew);
        assert!(matches!(
            skew.check_symmetry(&mut rng, 3),
            Err(LanczosError::NotSymmetric { .. })
        ));
        assert!(DenseOperator::new(DenseMatrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]])).is_err());
    }
}
