use crate::linalg::{gaussian_matrix, singular_values, DenseMatrix, Lu, RngStream};

use super::{MatPolyError, MatrixPolynomial};

/// Relative gate on the smallest singular value of `Ωᵢ`, `S_{i,d}` and `Van`.
pub const NONSINGULAR_TOL: f64 = 1e-12;

/// Interpolation nodes `Bᵢ = Ωᵢ⁻¹ Λᵢ Ωᵢ` with real diagonal `Λᵢ`.
#[derive(Clone, Debug)]
pub struct NodeSet {
    block: usize,
    lambdas: Vec<Vec<f64>>,
    omegas: Vec<DenseMatrix>,
    bs: Vec<DenseMatrix>,
}

impl NodeSet {
    pub fn new(lambdas: Vec<Vec<f64>>, omegas: Vec<DenseMatrix>) -> Result<Self, MatPolyError> {
        if lambdas.is_empty() || lambdas.len() != omegas.len() {
            return Err(MatPolyError::DimensionMismatch {
                expected: "matching nonempty lists of eigenvalues and eigenvector matrices".into(),
                got: format!("{} and {}", lambdas.len(), omegas.len()),
            });
        }
        let b = lambdas[0].len();
        for (i, (l, o)) in lambdas.iter().zip(&omegas).enumerate() {
            if b == 0 || l.len() != b || o.shape() != (b, b) {
                return Err(MatPolyError::DimensionMismatch {
                    expected: format!("{b} eigenvalues and a {b}x{b} matrix"),
                    got: format!("node {i}: {} and {}x{}", l.len(), o.rows(), o.cols()),
                });
            }
        }
        for i in 0..lambdas.len() {
            for j in i + 1..lambdas.len() {
                if let Some(&v) = lambdas[i].iter().find(|v| lambdas[j].contains(v)) {
                    return Err(MatPolyError::OverlappingSpectra { i, j, value: v });
                }
            }
        }
        let mut bs = Vec::with_capacity(omegas.len());
        for (index, (l, o)) in lambdas.iter().zip(&omegas).enumerate() {
            let s = singular_values(o);
            if s[b - 1] <= NONSINGULAR_TOL * s[0] {
                return Err(MatPolyError::SingularNode { index });
            }
            let lu = Lu::factor(o).map_err(|_| MatPolyError::SingularNode { index })?;
            bs.push(lu.solve(&o.scale_rows(l)));
        }
        Ok(Self {
            block: b,
            lambdas,
            omegas,
            bs,
        })
    }

    /// Gaussian `Ωᵢ` and `bd` eigenvalues with consecutive gaps drawn from
    /// `[sep, 2·sep)`, dealt to the nodes in random order.
    pub fn random(b: usize, d: usize, sep: f64, rng: &mut RngStream) -> Result<Self, MatPolyError> {
        let mut values = Vec::with_capacity(b * d);
        let mut x = 0.0;
        for _ in 0..b * d {
            values.push(x);
            x += sep * (1.0 + rng.uniform());
        }
        for i in (1..values.len()).rev() {
            let j = ((rng.uniform() * (i + 1) as f64) as usize).min(i);
            values.swap(i, j);
        }
        let lambdas = values
            .chunks(b)
            .map(|c| {
                let mut c = c.to_vec();
                c.sort_by(f64::total_cmp);
                c
            })
            .collect();
        let omegas = (0..d).map(|_| gaussian_matrix(b, b, rng)).collect();
        Self::new(lambdas, omegas)
    }

    pub fn block_size(&self) -> usize {
        self.block
    }

    pub fn len(&self) -> usize {
        self.bs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bs.is_empty()
    }

    pub fn lambda(&self, i: usize) -> &[f64] {
        &self.lambdas[i]
    }

    pub fn omega(&self, i: usize) -> &DenseMatrix {
        &self.omegas[i]
    }

    pub fn b(&self, i: usize) -> &DenseMatrix {
        &self.bs[i]
    }

    pub fn blocks(&self) -> &[DenseMatrix] {
        &self.bs
    }

    /// `min |λᵢ − λⱼ|` over eigenvalues of distinct nodes; `∞` for one node.
    pub fn min_gap(&self) -> f64 {
        let mut gap = f64::INFINITY;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                for a in &self.lambdas[i] {
                    for c in &self.lambdas[j] {
                        gap = gap.min((a - c).abs());
                    }
                }
            }
        }
        gap
    }

    pub fn block_vandermonde(&self) -> DenseMatrix {
        block_vandermonde(&self.bs).expect("node blocks share a shape")
    }

    /// 2-norm condition number of the block Vandermonde matrix.
    pub fn vandermonde_condition(&self) -> f64 {
        let s = singular_values(&self.block_vandermonde());
        s[0] / s[s.len() - 1]
    }
}

/// Row block `i` is `[I, Bᵢ, …, Bᵢ^{d−1}]`. Blocks need not be diagonalizable
/// over the reals.
pub fn block_vandermonde(blocks: &[DenseMatrix]) -> Result<DenseMatrix, MatPolyError> {
    let d = blocks.len();
    let b = blocks.first().map_or(0, |m| m.rows());
    if let Some(bad) = blocks.iter().find(|m| m.shape() != (b, b)) {
        return Err(MatPolyError::DimensionMismatch {
            expected: format!("{b}x{b} blocks"),
            got: format!("{}x{}", bad.rows(), bad.cols()),
        });
    }
    let mut van = DenseMatrix::zeros(b * d, b * d);
    for (i, bi) in blocks.iter().enumerate() {
        let mut power = DenseMatrix::identity(b);
        for j in 0..d {
            van.set_submatrix(i * b, j * b, &power);
            if j + 1 < d {
                power = power.matmul(bi);
            }
        }
    }
    Ok(van)
}

/// Fundamental polynomial `F` of degree `d−1` with `F(Bⱼ) = δₖⱼ I`, from a
/// direct solve with the block Vandermonde matrix.
pub fn fundamental_via_solve(nodes: &NodeSet, k: usize) -> Result<MatrixPolynomial, MatPolyError> {
    let (b, d) = (nodes.block_size(), nodes.len());
    if k >= d {
        return Err(MatPolyError::NodeIndex { k, d });
    }
    let van = nodes.block_vandermonde();
    let s = singular_values(&van);
    let (scale, smallest) = (s[0], s[s.len() - 1]);
    if smallest <= NONSINGULAR_TOL * scale {
        return Err(MatPolyError::SingularVandermonde { smallest, scale });
    }
    let lu = Lu::factor(&van).map_err(|_| MatPolyError::SingularVandermonde { smallest, scale })?;
    let mut rhs = DenseMatrix::zeros(b * d, b);
    rhs.set_submatrix(k * b, 0, &DenseMatrix::identity(b));
    let c = lu.solve(&rhs);
    MatrixPolynomial::new((0..d).map(|j| c.submatrix(j * b, 0, b, b)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counterexample_is_singular() {
        let b1 = DenseMatrix::from_diag(&[1.0, 2.0]);
        let b2 = DenseMatrix::from_rows(&[[2.0, 1.0], [-1.0, 1.0]]);
        let van = block_vandermonde(&[b1, b2]).unwrap();
        let v = van.matvec(&[1.0, -2.0, -1.0, 1.0]);
        assert!(v.iter().all(|x| *x == 0.0), "{v:?}");
    }

    #[test]
    fn single_node_is_identity() {
        let nodes = NodeSet::new(
            vec![vec![1.0, 2.0]],
            vec![gaussian_matrix(2, 2, &mut RngStream::new(1, 1))],
        )
        .unwrap();
        assert_eq!(nodes.block_vandermonde(), DenseMatrix::identity(2));
        let f = fundamental_via_solve(&nodes, 0).unwrap();
        assert_eq!(f.degree(), 0);
        assert!(f.coeffs()[0].sub(&DenseMatrix::identity(2)).max_abs() < 1e-15);
    }

    #[test]
    fn scalar_vandermonde_determinant() {
        let blocks: Vec<_> = [0.0, 1.0, 2.0]
            .iter()
            .map(|&x| DenseMatrix::from_diag(&[x]))
            .collect();
        let van = block_vandermonde(&blocks).unwrap();
        // prod_{i<j} (x_j - x_i) = 1 * 2 * 1
        let expected = (1.0 - 0.0) * (2.0 - 0.0) * (2.0 - 1.0);
        let m = |i, j| van.get(i, j);
        let det = m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
            - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
            + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
        assert!((det - expected).abs() < 1e-14);
    }

    #[test]
    fn scalar_lagrange_two_nodes() {
        let nodes = NodeSet::new(
            vec![vec![0.0], vec![1.0]],
            vec![DenseMatrix::identity(1); 2],
        )
        .unwrap();
        let f = fundamental_via_solve(&nodes, 0).unwrap();
        for t in 0..10 {
            let lam = -1.0 + 0.3 * t as f64;
            assert!((f.eval_lambda(lam).get(0, 0) - (1.0 - lam)).abs() < 1e-14);
        }
    }

    #[test]
    fn kronecker_property() {
        let mut rng = RngStream::new(77, 0);
        let lambdas = vec![
            vec![0.0, 0.3, 0.5],
            vec![1.0, 1.2, 1.7],
            vec![-1.0, -0.6, -0.2],
        ];
        let omegas = (0..3).map(|_| gaussian_matrix(3, 3, &mut rng)).collect();
        let nodes = NodeSet::new(lambdas, omegas).unwrap();
        let cond = nodes.vandermonde_condition();
        for k in 0..3 {
            let f = fundamental_via_solve(&nodes, k).unwrap();
            for j in 0..3 {
                let v = f.eval_matrix(nodes.b(j)).unwrap();
                let target = if j == k {
                    DenseMatrix::identity(3)
                } else {
                    DenseMatrix::zeros(3, 3)
                };
                assert!(v.sub(&target).max_abs() <= 1e-8 * cond, "k {k} j {j}");
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        let o = vec![DenseMatrix::identity(2); 2];
        assert!(matches!(
            NodeSet::new(vec![vec![0.0, 1.0], vec![1.0, 2.0]], o.clone()),
            Err(MatPolyError::OverlappingSpectra { i: 0, j: 1, .. })
        ));
        let singular = DenseMatrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]);
        assert!(matches!(
            NodeSet::new(
                vec![vec![0.0, 1.0], vec![2.0, 3.0]],
                vec![DenseMatrix::identity(2), singular]
            ),
            Err(MatPolyError::SingularNode { index: 1 })
        ));
        let nodes = NodeSet::new(vec![vec![0.0, 1.0], vec![2.0, 3.0]], o).unwrap();
        assert!(matches!(
            fundamental_via_solve(&nodes, 2),
            Err(MatPolyError::NodeIndex { .. })
        ));
        assert_eq!(nodes.min_gap(), 1.0);
    }
}
