use crate::linalg::{singular_values, spectral_norm, DenseMatrix, Lu};

use super::{MatPolyError, MatrixPolynomial, NodeSet, NONSINGULAR_TOL};

/// Chain-of-solvents factorization of the fundamental polynomial of node `k`
/// over the node order `[k, 0, …, k−1, k+1, …, d−1]`:
/// `F(λ) = (λI − B̂_d)(λI − B̂_{d−1})⋯(λI − B̂₂) S₁⁻¹`.
///
/// The factors are peeled off by Bézout division from the left, so `B̂_d = B_d`
/// is the outermost solvent and each `Sᵢ` absorbs the factors in that same
/// order: `T ← Bᵢ T − T B̂ⱼ` for `j = d, d−1, …, i+1`, starting from `T = I`.
///
/// Positions below index the permuted order, so position 0 is node `k`.
#[derive(Clone, Debug)]
pub struct SolventChain {
    k: usize,
    order: Vec<usize>,
    lambdas: Vec<Vec<f64>>,
    bs: Vec<DenseMatrix>,
    /// `s[i][m]` is `Sᵢ` after absorbing `m` factors
    s: Vec<Vec<DenseMatrix>>,
    omega_hat: Vec<DenseMatrix>,
    b_hat: Vec<DenseMatrix>,
    s_last_inv: DenseMatrix,
    /// 1-norm condition estimates of `Ω̂ᵢ`, then of `S₁` last
    conds: Vec<f64>,
}

impl SolventChain {
    pub fn new(nodes: &NodeSet, k: usize) -> Result<Self, MatPolyError> {
        let (b, d) = (nodes.block_size(), nodes.len());
        if k >= d {
            return Err(MatPolyError::NodeIndex { k, d });
        }
        let order: Vec<usize> = std::iter::once(k)
            .chain((0..d).filter(|&i| i != k))
            .collect();
        let lambdas: Vec<Vec<f64>> = order.iter().map(|&i| nodes.lambda(i).to_vec()).collect();
        let bs: Vec<DenseMatrix> = order.iter().map(|&i| nodes.b(i).clone()).collect();

        let mut s: Vec<Vec<DenseMatrix>> = vec![Vec::new(); d];
        let mut omega_hat = vec![DenseMatrix::zeros(b, b); d];
        let mut b_hat = vec![DenseMatrix::zeros(b, b); d];
        let mut conds = vec![0.0; d + 1];
        for i in (0..d).rev() {
            let mut row = vec![DenseMatrix::identity(b)];
            for j in (i + 1..d).rev() {
                let prev = &row[row.len() - 1];
                let next = bs[i].matmul(prev).sub(&prev.matmul(&b_hat[j]));
                row.push(next);
            }
            let last = &row[row.len() - 1];
            let sv = singular_values(last);
            let (scale, smallest) = (sv[0], sv[b - 1]);
            if smallest <= NONSINGULAR_TOL * scale {
                return Err(MatPolyError::ChainBreakdown {
                    position: i,
                    smallest,
                    scale,
                });
            }
            let oh = nodes.omega(order[i]).matmul(last);
            let lu = Lu::factor(&oh).map_err(|_| MatPolyError::ChainBreakdown {
                position: i,
                smallest,
                scale,
            })?;
            // a 1x1 similarity is the identity map; skip the rounding
            b_hat[i] = if b == 1 {
                DenseMatrix::from_diag(&lambdas[i])
            } else {
                lu.solve(&oh.scale_rows(&lambdas[i]))
            };
            conds[i] = lu.cond1_estimate();
            omega_hat[i] = oh;
            s[i] = row;
        }
        let s_last = s[0].last().expect("nonempty");
        let lu = Lu::factor(s_last).map_err(|_| MatPolyError::ChainBreakdown {
            position: 0,
            smallest: 0.0,
            scale: spectral_norm(s_last),
        })?;
        conds[d] = lu.cond1_estimate();
        let s_last_inv = lu.inverse();
        Ok(Self {
            k,
            order,
            lambdas,
            bs,
            s,
            omega_hat,
            b_hat,
            s_last_inv,
            conds,
        })
    }

    /// One chain per node, in node order.
    pub fn all(nodes: &NodeSet) -> Result<Vec<Self>, MatPolyError> {
        (0..nodes.len()).map(|k| Self::new(nodes, k)).collect()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Node index at each chain position.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn lambda(&self, position: usize) -> &[f64] {
        &self.lambdas[position]
    }

    /// `Sᵢ` after absorbing `m ≤ d−1−i` factors, the last one at position
    /// `d−m`. `m = 0` is the identity.
    pub fn s(&self, i: usize, m: usize) -> &DenseMatrix {
        &self.s[i][m]
    }

    /// The fully absorbed `Sᵢ` that defines `Ω̂ᵢ = Ωᵢ Sᵢ`.
    pub fn s_full(&self, i: usize) -> &DenseMatrix {
        self.s[i].last().expect("nonempty")
    }

    pub fn omega_hat(&self, position: usize) -> &DenseMatrix {
        &self.omega_hat[position]
    }

    pub fn b_hat(&self, position: usize) -> &DenseMatrix {
        &self.b_hat[position]
    }

    /// `S₁⁻¹`, the normalization on the right of the product.
    pub fn s_last_inverse(&self) -> &DenseMatrix {
        &self.s_last_inv
    }

    /// Condition estimates of every `Ω̂ᵢ` followed by that of `S₁`.
    pub fn condition_estimates(&self) -> &[f64] {
        &self.conds
    }

    /// `F[B_k](λ)`, multiplying the linear factors left to right.
    pub fn eval(&self, lambda: f64) -> DenseMatrix {
        let b = self.s_last_inv.rows();
        let mut p = DenseMatrix::identity(b);
        for bh in self.b_hat[1..].iter().rev() {
            p = p.matmul(&DenseMatrix::identity(b).scale(lambda).sub(bh));
        }
        p.matmul(&self.s_last_inv)
    }

    /// The same polynomial in coefficient form.
    pub fn to_polynomial(&self) -> MatrixPolynomial {
        let b = self.s_last_inv.rows();
        let mut coeffs = vec![DenseMatrix::identity(b)];
        for bh in self.b_hat[1..].iter().rev() {
            // (Σ λᵐ Pₘ)(λI − B̂)
            let mut next = vec![DenseMatrix::zeros(b, b); coeffs.len() + 1];
            for (m, pm) in coeffs.iter().enumerate() {
                next[m + 1] = next[m + 1].add(pm);
                next[m] = next[m].sub(&pm.matmul(bh));
            }
            coeffs = next;
        }
        let coeffs = coeffs.iter().map(|c| c.matmul(&self.s_last_inv)).collect();
        MatrixPolynomial::new(coeffs).expect("square coefficients")
    }

    /// Largest entrywise gap between each stored partial `Sᵢ` and the
    /// recurrence applied to its predecessor, plus the deviation of the
    /// starting matrix from `I`.
    pub fn recurrence_defect(&self) -> f64 {
        let d = self.len();
        let mut defect: f64 = 0.0;
        for i in 0..d {
            let b = self.s[i][0].rows();
            defect = defect.max(self.s[i][0].sub(&DenseMatrix::identity(b)).max_abs());
            for m in 1..d - i {
                let prev = self.s(i, m - 1);
                let again = self.bs[i]
                    .matmul(prev)
                    .sub(&prev.matmul(&self.b_hat[d - m]));
                defect = defect.max(again.sub(self.s(i, m)).max_abs());
            }
        }
        defect
    }
}

/// Closed cluster interval `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClusterInterval {
    pub lo: f64,
    pub hi: f64,
}

impl ClusterInterval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChiQuantities {
    pub mono: f64,
    pub coef: f64,
    pub per_k_mono: Vec<f64>,
    pub per_k_coef: Vec<f64>,
}

/// `χ_mono` and `χ_coef`, maximized over all chains. The coefficient
/// quantity uses the exponent `1/(d−1)` for every `d`; one node gives `(1, 1)`.
pub fn chi_quantities(
    nodes: &NodeSet,
    chains: &[SolventChain],
    interval: ClusterInterval,
) -> Result<ChiQuantities, MatPolyError> {
    check_chains(nodes, chains)?;
    check_spectra(nodes, interval)?;
    let d = nodes.len();
    let b = nodes.block_size();
    let mut per_k_mono = Vec::with_capacity(d);
    let mut per_k_coef = Vec::with_capacity(d);
    for chain in chains {
        let mut mono: f64 = 1.0;
        let mut gap = f64::INFINITY;
        for i in 1..d {
            let lam = chain.lambda(i);
            for endpoint in [interval.lo, interval.hi] {
                let denom = lam.iter().map(|l| (endpoint - l).abs()).fold(0.0, f64::max);
                let shifted = DenseMatrix::identity(b).scale(endpoint).sub(chain.b_hat(i));
                let num = spectral_norm(&shifted);
                if denom == 0.0 {
                    // λI − B̂ᵢ is similar to λI − Λᵢ, so both vanish together up to rounding
                    let scale = endpoint.abs() + spectral_norm(chain.b_hat(i));
                    if num <= 1e-12 * scale {
                        continue;
                    }
                    return Err(MatPolyError::DegenerateEndpoint {
                        k: chain.k(),
                        position: i,
                        endpoint,
                    });
                }
                mono = mono.max(num / denom);
            }
            for a in chain.lambda(0) {
                for c in lam {
                    gap = gap.min((a - c).abs());
                }
            }
        }
        per_k_mono.push(mono);
        let coef = if d == 1 {
            1.0
        } else {
            spectral_norm(chain.s_last_inverse()).powf(1.0 / (d - 1) as f64) * gap
        };
        per_k_coef.push(coef);
    }
    let mono = per_k_mono.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let coef = per_k_coef.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(ChiQuantities {
        mono,
        coef,
        per_k_mono,
        per_k_coef,
    })
}

/// Both sides of `max_k ‖F[B_k](λ)‖^{1/(d−1)} ≤ dist(λ)/gap · χ_mono χ_coef`
/// where `dist(λ)` is the distance to the far endpoint of the interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthSample {
    pub lambda: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub fn growth_bound_check(
    nodes: &NodeSet,
    chains: &[SolventChain],
    interval: ClusterInterval,
    samples: &[f64],
) -> Result<Vec<GrowthSample>, MatPolyError> {
    if let Some(&lambda) = samples.iter().find(|&&l| interval.contains(l)) {
        return Err(MatPolyError::SampleInsideInterval { lambda });
    }
    let chi = chi_quantities(nodes, chains, interval)?;
    let d = nodes.len();
    let gap = nodes.min_gap();
    Ok(samples
        .iter()
        .map(|&lambda| {
            let norm = chains
                .iter()
                .map(|c| spectral_norm(&c.eval(lambda)))
                .fold(0.0, f64::max);
            let (lhs, rhs) = if d == 1 {
                (norm, 1.0)
            } else {
                let far = (interval.hi - lambda).max(lambda - interval.lo);
                (
                    norm.powf(1.0 / (d - 1) as f64),
                    far / gap * chi.mono * chi.coef,
                )
            };
            GrowthSample {
                lambda,
                lhs,
                rhs,
                holds: lhs <= rhs * (1.0 + 1e-10),
            }
        })
        .collect())
}

fn check_chains(nodes: &NodeSet, chains: &[SolventChain]) -> Result<(), MatPolyError> {
    if chains.len() != nodes.len()
        || chains
            .iter()
            .enumerate()
            .any(|(k, c)| c.k() != k || c.len() != nodes.len())
    {
        return Err(MatPolyError::DimensionMismatch {
            expected: format!(
                "one chain per node for {} nodes, in node order",
                nodes.len()
            ),
            got: format!("{} chains", chains.len()),
        });
    }
    Ok(())
}

fn check_spectra(nodes: &NodeSet, interval: ClusterInterval) -> Result<(), MatPolyError> {
    for i in 0..nodes.len() {
        if let Some(&l) = nodes.lambda(i).iter().find(|&&l| !interval.contains(l)) {
            return Err(MatPolyError::SpectrumOutsideInterval { node: i, value: l });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gaussian_matrix, RngStream};
    use crate::matpoly::fundamental_via_solve;

    fn random_nodes(b: usize, d: usize, rng: &mut RngStream) -> NodeSet {
        let lambdas = (0..d)
            .map(|i| (0..b).map(|j| i as f64 + 0.2 * j as f64).collect())
            .collect();
        let omegas = (0..d).map(|_| gaussian_matrix(b, b, rng)).collect();
        NodeSet::new(lambdas, omegas).unwrap()
    }

    fn lagrange(nodes: &[f64], k: usize, x: f64) -> f64 {
        nodes
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, &xj)| (x - xj) / (nodes[k] - xj))
            .product()
    }

    #[test]
    fn two_nodes_hand_expansion() {
        let nodes = random_nodes(2, 2, &mut RngStream::new(5, 5));
        let chain = SolventChain::new(&nodes, 0).unwrap();
        let diff = nodes.b(0).sub(nodes.b(1));
        assert!(chain.s_full(0).sub(&diff).max_abs() < 1e-12);
        let inv = Lu::factor(&diff).unwrap().inverse();
        for lam in [-2.0, 0.5, 3.0] {
            let expected = DenseMatrix::identity(2)
                .scale(lam)
                .sub(nodes.b(1))
                .matmul(&inv);
            assert!(chain.eval(lam).sub(&expected).max_abs() < 1e-10 * expected.max_abs().max(1.0));
        }
    }

    #[test]
    fn identity_eigenvectors_give_diagonal_chain() {
        let lambdas = vec![vec![0.0, 0.5], vec![1.0, 1.5], vec![2.0, 2.25]];
        let nodes = NodeSet::new(lambdas, vec![DenseMatrix::identity(2); 3]).unwrap();
        for k in 0..3 {
            let chain = SolventChain::new(&nodes, k).unwrap();
            for i in 0..3 {
                assert_eq!(chain.b_hat(i), &DenseMatrix::from_diag(chain.lambda(i)));
                for m in 0..3 - i {
                    let s = chain.s(i, m);
                    assert_eq!(s.get(0, 1), 0.0);
                    assert_eq!(s.get(1, 0), 0.0);
                }
            }
        }
        let chains = SolventChain::all(&nodes).unwrap();
        let chi = chi_quantities(&nodes, &chains, ClusterInterval { lo: 0.0, hi: 2.25 }).unwrap();
        assert_eq!(chi.mono, 1.0);
    }

    #[test]
    fn scalar_chain_is_lagrange() {
        let pts = [0.0, 0.4, 1.1, 2.0];
        let nodes = NodeSet::new(
            pts.iter().map(|&x| vec![x]).collect(),
            vec![DenseMatrix::identity(1); 4],
        )
        .unwrap();
        for k in 0..4 {
            let chain = SolventChain::new(&nodes, k).unwrap();
            assert!((chain.eval(pts[k]).get(0, 0) - 1.0).abs() < 1e-12);
            for t in 0..15 {
                let x = -1.0 + 0.27 * t as f64;
                assert!((chain.eval(x).get(0, 0) - lagrange(&pts, k, x)).abs() < 1e-12);
            }
        }
        let chains = SolventChain::all(&nodes).unwrap();
        let chi = chi_quantities(&nodes, &chains, ClusterInterval { lo: 0.0, hi: 2.0 }).unwrap();
        assert_eq!(chi.mono, 1.0);
        assert!(chi.coef <= 1.0 + 1e-12);
    }

    #[test]
    fn chain_matches_solve_and_recurrence_is_exact() {
        let mut rng = RngStream::new(31, 0);
        for (b, d) in [(1, 3), (2, 2), (2, 4), (3, 3)] {
            let nodes = random_nodes(b, d, &mut rng);
            for k in 0..d {
                let chain = SolventChain::new(&nodes, k).unwrap();
                assert_eq!(chain.recurrence_defect(), 0.0);
                let direct = fundamental_via_solve(&nodes, k).unwrap();
                let poly = chain.to_polynomial();
                for lam in [-1.5, 0.1, 0.77, 4.0] {
                    let a = chain.eval(lam);
                    let c = direct.eval_lambda(lam);
                    let rel = a.sub(&c).frobenius_norm() / c.frobenius_norm();
                    assert!(
                        rel <= 1e-8,
                        "b {b} d {d} k {k} lam {lam}: {rel} cond {}",
                        nodes.vandermonde_condition()
                    );
                    assert!(
                        poly.eval_lambda(lam).sub(&a).frobenius_norm()
                            <= 1e-10 * a.frobenius_norm()
                    );
                }
            }
        }
    }

    #[test]
    fn chi_coef_two_nodes() {
        let nodes = random_nodes(2, 2, &mut RngStream::new(6, 2));
        let chains = SolventChain::all(&nodes).unwrap();
        let chi = chi_quantities(&nodes, &chains, ClusterInterval { lo: 0.0, hi: 1.2 }).unwrap();
        let inv = Lu::factor(&nodes.b(0).sub(nodes.b(1))).unwrap().inverse();
        let expected = spectral_norm(&inv) * nodes.min_gap();
        assert!((chi.per_k_coef[0] - expected).abs() < 1e-10 * expected);
    }

    #[test]
    fn growth_bound_holds_and_scalar_lhs() {
        let mut rng = RngStream::new(90, 1);
        let nodes = random_nodes(2, 3, &mut rng);
        let chains = SolventChain::all(&nodes).unwrap();
        let interval = ClusterInterval { lo: 0.0, hi: 2.2 };
        let samples: Vec<f64> = (1..30)
            .map(|t| -3.0 + 0.1 * t as f64)
            .chain([2.3, 5.0, 9.0])
            .collect();
        let out = growth_bound_check(&nodes, &chains, interval, &samples).unwrap();
        assert!(out.iter().all(|s| s.holds), "{out:?}");

        let pts = [0.0, 1.0, 2.0];
        let nodes = NodeSet::new(
            pts.iter().map(|&x| vec![x]).collect(),
            vec![DenseMatrix::identity(1); 3],
        )
        .unwrap();
        let chains = SolventChain::all(&nodes).unwrap();
        let out = growth_bound_check(
            &nodes,
            &chains,
            ClusterInterval { lo: 0.0, hi: 2.0 },
            &[-1.0, 3.5],
        )
        .unwrap();
        for s in out {
            let expected = (0..3)
                .map(|k| lagrange(&pts, k, s.lambda).abs())
                .fold(0.0, f64::max)
                .sqrt();
            assert!((s.lhs - expected).abs() < 1e-12);
            assert!(s.holds);
        }
        assert!(matches!(
            growth_bound_check(
                &nodes,
                &SolventChain::all(&nodes).unwrap(),
                ClusterInterval { lo: 0.0, hi: 2.0 },
                &[1.0]
            ),
            Err(MatPolyError::SampleInsideInterval { .. })
        ));
    }

    #[test]
    fn scalar_node_at_endpoint_is_skipped() {
        let mut rng = RngStream::new(3, 9);
        let omegas = (0..2).map(|_| gaussian_matrix(2, 2, &mut rng)).collect();
        let nodes = NodeSet::new(vec![vec![0.0, 0.0], vec![1.0, 1.0]], omegas).unwrap();
        let chains = SolventChain::all(&nodes).unwrap();
        let chi = chi_quantities(&nodes, &chains, ClusterInterval { lo: 0.0, hi: 1.0 }).unwrap();
        assert!(chi.mono.is_finite() && chi.mono >= 1.0);
    }
}
