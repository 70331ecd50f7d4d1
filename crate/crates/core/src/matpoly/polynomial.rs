use crate::linalg::{spectral_norm, DenseMatrix, Lu};

use super::MatPolyError;

/// `Φ(X) = C₀ + X C₁ + ⋯ + Xᵈ C_d` with `b×b` coefficients on the right of
/// the variable. Trailing zero coefficients are kept and count towards the
/// degree.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixPolynomial {
    block: usize,
    coeffs: Vec<DenseMatrix>,
}

impl MatrixPolynomial {
    pub fn new(coeffs: Vec<DenseMatrix>) -> Result<Self, MatPolyError> {
        let first = coeffs.first().ok_or(MatPolyError::EmptyPolynomial)?;
        let b = first.rows();
        for (i, c) in coeffs.iter().enumerate() {
            if c.shape() != (b, b) {
                return Err(MatPolyError::DimensionMismatch {
                    expected: format!("{b}x{b} coefficient"),
                    got: format!("C{i} is {}x{}", c.rows(), c.cols()),
                });
            }
        }
        Ok(Self { block: b, coeffs })
    }

    pub fn zero(block: usize, degree: usize) -> Self {
        Self {
            block,
            coeffs: vec![DenseMatrix::zeros(block, block); degree + 1],
        }
    }

    pub fn constant(c: DenseMatrix) -> Result<Self, MatPolyError> {
        Self::new(vec![c])
    }

    pub fn block_size(&self) -> usize {
        self.block
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[DenseMatrix] {
        &self.coeffs
    }

    /// `Φ(X)` by right-coefficient Horner: `H ← C_d`, then `H ← Cᵢ + X H`.
    pub fn eval_matrix(&self, x: &DenseMatrix) -> Result<DenseMatrix, MatPolyError> {
        self.check_block(x)?;
        let mut h = self.coeffs[self.degree()].clone();
        for c in self.coeffs.iter().rev().skip(1) {
            h = c.add(&x.matmul(&h));
        }
        Ok(h)
    }

    /// The lambda-matrix `Φ(λ) = Φ(λI)`.
    pub fn eval_lambda(&self, lambda: f64) -> DenseMatrix {
        let mut h = self.coeffs[self.degree()].clone();
        for c in self.coeffs.iter().rev().skip(1) {
            h = c.add(&h.scale(lambda));
        }
        h
    }

    /// `‖Φ(B)‖`; zero exactly when `B` is a (left) solvent.
    pub fn solvent_residual(&self, b: &DenseMatrix) -> Result<f64, MatPolyError> {
        Ok(spectral_norm(&self.eval_matrix(b)?))
    }

    /// Generalized Bézout division `Φ(λ) = (λI − B) q(λ) + R` with
    /// `R = Φ(B)`. A constant `Φ` gives the zero quotient of degree 0.
    pub fn bezout_quotient(
        &self,
        b: &DenseMatrix,
    ) -> Result<(MatrixPolynomial, DenseMatrix), MatPolyError> {
        self.check_block(b)?;
        let d = self.degree();
        if d == 0 {
            return Ok((Self::zero(self.block, 0), self.coeffs[0].clone()));
        }
        // D_{d-1} = C_d, D_{i-1} = C_i + B D_i, R = C_0 + B D_0
        let mut q = vec![DenseMatrix::zeros(self.block, self.block); d];
        q[d - 1] = self.coeffs[d].clone();
        for i in (1..d).rev() {
            q[i - 1] = self.coeffs[i].add(&b.matmul(&q[i]));
        }
        let remainder = self.coeffs[0].add(&b.matmul(&q[0]));
        Ok((
            Self {
                block: self.block,
                coeffs: q,
            },
            remainder,
        ))
    }

    fn check_block(&self, x: &DenseMatrix) -> Result<(), MatPolyError> {
        if x.shape() != (self.block, self.block) {
            return Err(MatPolyError::DimensionMismatch {
                expected: format!("{0}x{0} argument", self.block),
                got: format!("{}x{}", x.rows(), x.cols()),
            });
        }
        Ok(())
    }
}

/// Both sides of `‖Φ(B₀)‖ ≤ √b ‖Ω₀⁻¹‖ ‖Ω₀‖ max ‖Φ(λ)‖` for
/// `B₀ = Ω₀⁻¹ Λ₀ Ω₀`, the max taken over `[λ₀⁽¹⁾, λ₀⁽ᵇ⁾]`.
#[derive(Clone, Copy, Debug)]
pub struct SimilarityBound {
    pub lhs: f64,
    pub rhs: f64,
}

impl SimilarityBound {
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.lhs <= self.rhs * (1.0 + rel_tol)
    }
}

/// Evaluates the similarity bound with the max over the eigenvalue hull
/// approximated by a `grid`-point uniform grid plus the eigenvalues.
pub fn similarity_bound(
    phi: &MatrixPolynomial,
    omega: &DenseMatrix,
    lambda: &[f64],
    grid: usize,
) -> Result<SimilarityBound, MatPolyError> {
    let b = phi.block_size();
    if omega.shape() != (b, b) || lambda.len() != b {
        return Err(MatPolyError::DimensionMismatch {
            expected: format!("{b}x{b} eigenvector matrix and {b} eigenvalues"),
            got: format!("{}x{} and {}", omega.rows(), omega.cols(), lambda.len()),
        });
    }
    let lu = Lu::factor(omega)?;
    let omega_inv = lu.inverse();
    let b0 = lu.solve(&omega.scale_rows(lambda));
    let lhs = phi.solvent_residual(&b0)?;

    let lo = lambda.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = lambda.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut samples = lambda.to_vec();
    if grid >= 2 && hi > lo {
        samples.extend((0..grid).map(|t| lo + (hi - lo) * t as f64 / (grid - 1) as f64));
    }
    let sup = samples
        .iter()
        .map(|&l| spectral_norm(&phi.eval_lambda(l)))
        .fold(0.0, f64::max);
    let rhs = (b as f64).sqrt() * spectral_norm(&omega_inv) * spectral_norm(omega) * sup;
    Ok(SimilarityBound { lhs, rhs })
}
