use crate::linalg::{singular_values, spectral_norm, DenseMatrix, Lu};
use crate::matpoly::{block_vandermonde, NONSINGULAR_TOL};

use super::RobustnessError;

/// Both sides of the two-node sandwich around `‖[[I, B₁], [I, B₂]]⁻¹‖²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SandwichResult {
    /// `(3−√5)/2 · ‖(B₁−B₂)⁻¹‖²`
    pub lower: f64,
    pub middle: f64,
    /// `(3+√5)/2 · (1 + (‖B₁‖²+1)‖(B₁−B₂)⁻¹‖²)`
    pub upper: f64,
    pub holds: bool,
}

pub fn sandwich_d2(b1: &DenseMatrix, b2: &DenseMatrix) -> Result<SandwichResult, RobustnessError> {
    if b1.shape() != b2.shape() || !b1.is_square() {
        return Err(RobustnessError::InvalidArgument(
            "B1 and B2 must be square of the same size".into(),
        ));
    }
    let diff = b1.sub(b2);
    let s = singular_values(&diff);
    let (scale, smallest) = (s[0], s[s.len() - 1]);
    if !(smallest > NONSINGULAR_TOL * scale) {
        return Err(RobustnessError::SingularDifference { smallest, scale });
    }
    let lu =
        Lu::factor(&diff).map_err(|_| RobustnessError::SingularDifference { smallest, scale })?;
    let inv = spectral_norm(&lu.inverse()).powi(2);
    let van = block_vandermonde(&[b1.clone(), b2.clone()])?;
    let middle = singular_values(&van)
        .last()
        .map_or(f64::INFINITY, |s| 1.0 / (s * s));
    let sqrt5 = 5f64.sqrt();
    let lower = (3.0 - sqrt5) / 2.0 * inv;
    let upper = (3.0 + sqrt5) / 2.0 * (1.0 + (spectral_norm(b1).powi(2) + 1.0) * inv);
    let holds = lower <= middle * (1.0 + 1e-8) && middle <= upper * (1.0 + 1e-8);
    Ok(SandwichResult {
        lower,
        middle,
        upper,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plus_minus_identity() {
        let r = sandwich_d2(
            &DenseMatrix::identity(3),
            &DenseMatrix::identity(3).scale(-1.0),
        )
        .unwrap();
        assert!((r.middle - 0.5).abs() < 1e-14);
        assert!((r.lower - (3.0 - 5f64.sqrt()) / 8.0).abs() < 1e-14);
        assert!((r.upper - (3.0 + 5f64.sqrt()) / 2.0 * 1.5).abs() < 1e-14);
        assert!(r.holds);
    }

    #[test]
    fn scalar_closed_form() {
        // [[1, 1], [1, 0]] has singular values φ and 1/φ
        let r = sandwich_d2(&DenseMatrix::identity(1), &DenseMatrix::zeros(1, 1)).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((r.middle - phi * phi).abs() < 1e-13);
        assert!((r.lower - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-15);
        assert!((r.upper - (3.0 + 5f64.sqrt()) / 2.0 * 3.0).abs() < 1e-13);
        assert!(r.holds);
    }

    #[test]
    fn singular_difference_rejected() {
        let b = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]);
        assert!(matches!(
            sandwich_d2(&b, &b),
            Err(RobustnessError::SingularDifference { .. })
        ));
    }
}
