//! Matrix viewpoint of divided differences: the lower-triangular
//! interpolation matrix M, its block-diagonal variant per partition, the
//! transfer matrices between partitions, and the doubled-node families used
//! by the Kac-density machinery.
//!
//! All partition-indexed matrices use the grouped ordering: blocks in
//! canonical order, elements in ascending order within each block. Doubled
//! index sets are ordered lexicographically, first copy before second copy
//! within each block.

use nalgebra::DMatrix;

use crate::divided_diff::domain::NodeVector;
use crate::divided_diff::newton::{confluence_threshold, confluent_nodes, hermite_table, Polynomial};
use crate::error::{Error, Result};
use crate::partitions::SetPartition;

/// Elements of the ground set in grouped (block-concatenated) order.
pub fn grouped_order(partition: &SetPartition) -> Vec<usize> {
    partition.blocks().iter().flatten().copied().collect()
}

/// The lower-triangular interpolation matrix `M(x_A)` with entries
/// `M[a][b] = prod_{c<b} (x_a - x_c)`; its determinant is the Vandermonde
/// product.
pub fn interp_matrix(nodes: &NodeVector) -> DMatrix<f64> {
    let x = nodes.nodes();
    let n = x.len();
    DMatrix::from_fn(n, n, |a, b| {
        let mut p = 1.0;
        for c in 0..b {
            p *= x[a] - x[c];
        }
        p
    })
}

/// Block-diagonal assembly of per-cell interpolation matrices, in grouped
/// ordering.
pub fn block_interp_matrix(nodes: &NodeVector, partition: &SetPartition) -> Result<DMatrix<f64>> {
    if partition.ground_size() != nodes.len() {
        return Err(Error::Contract(
            "partition ground size does not match node count".into(),
        ));
    }
    let n = nodes.len();
    let mut m = DMatrix::zeros(n, n);
    let mut offset = 0;
    for block in partition.blocks() {
        let sub = interp_matrix(&nodes.subset(block)?);
        let k = block.len();
        m.view_mut((offset, offset), (k, k)).copy_from(&sub);
        offset += k;
    }
    Ok(m)
}

/// Divided difference of a polynomial at a (possibly repeated) node multiset,
/// using exact polynomial derivatives for confluent clusters.
fn poly_dd(p: &Polynomial, prefix: &[f64], threshold: f64) -> f64 {
    let z = confluent_nodes(prefix, threshold);
    hermite_table(p, &z).expect("polynomial derivatives always available")
}

/// The transfer matrix `Q^{I,J}(x_A)` re-expanding divided differences on the
/// coarse partition into those on the finer one: `f_J = Q f_I`.
///
/// Rows follow the grouped order of `fine`, columns that of `coarse`.
pub fn transfer_matrix(
    nodes: &NodeVector,
    coarse: &SetPartition,
    fine: &SetPartition,
) -> Result<DMatrix<f64>> {
    if coarse.ground_size() != nodes.len() || fine.ground_size() != nodes.len() {
        return Err(Error::Contract("partition/node size mismatch".into()));
    }
    if !fine.refines(coarse)? {
        return Err(Error::Contract("fine partition must refine coarse".into()));
    }
    let x = nodes.nodes();
    let threshold = confluence_threshold(nodes);
    let n = nodes.len();
    let coarse_cell = coarse.block_of();
    let mut q = DMatrix::zeros(n, n);

    // column layout: (coarse block, position) with basis polynomial roots
    let mut cols: Vec<(usize, Polynomial)> = Vec::with_capacity(n); // (coarse block idx, basis poly)
    for (bi, block) in coarse.blocks().iter().enumerate() {
        for d in 0..block.len() {
            let roots: Vec<f64> = block[..d].iter().map(|&e| x[e]).collect();
            cols.push((bi, Polynomial::from_roots(&roots)));
        }
    }
    let mut row = 0;
    for fine_block in fine.blocks() {
        let parent = coarse_cell[fine_block[0]];
        for c in 0..fine_block.len() {
            let prefix: Vec<f64> = fine_block[..=c].iter().map(|&e| x[e]).collect();
            for (col, (bi, poly)) in cols.iter().enumerate() {
                if *bi == parent {
                    q[(row, col)] = poly_dd(poly, &prefix, threshold);
                }
            }
            row += 1;
        }
    }
    Ok(q)
}

/// Per-subset matrices of the doubled construction: for a subset `B` of the
/// ground set, the block interpolation matrix on `x_B` (w.r.t. the induced
/// partition) and the doubled transfer matrix mapping doubled divided
/// differences on `A` to those on `B`.
#[derive(Debug, Clone)]
pub struct SubsetMatrices {
    /// Bitmask of the subset B.
    pub mask: u32,
    /// Elements of B in ascending order.
    pub elements: Vec<usize>,
    /// Partition of B induced by the ambient partition (re-indexed).
    pub induced: SetPartition,
    /// `M^{I_B}(x_B)`, |B| x |B| in grouped order of the induced partition.
    pub m_block: DMatrix<f64>,
    /// `Q^{I,2B}(x_{A,A})`, 2|B| x 2|A|.
    pub q_doubled: DMatrix<f64>,
}

/// The families `(M^{I_B}(x_B))_B` and `(Q^{I,2B}(x_{A,A}))_B` over all
/// nonempty subsets `B` of the ground set.
#[derive(Debug, Clone)]
pub struct DoubledMatrices {
    pub partition: SetPartition,
    pub nodes: NodeVector,
    pub per_subset: Vec<SubsetMatrices>,
}

impl DoubledMatrices {
    pub fn subset(&self, mask: u32) -> Option<&SubsetMatrices> {
        self.per_subset.iter().find(|s| s.mask == mask)
    }

    pub fn full(&self) -> &SubsetMatrices {
        self.subset((1u32 << self.nodes.len()) - 1).unwrap()
    }
}

/// Doubled node list of a block: the block's nodes twice over.
fn doubled_nodes(x: &[f64], block: &[usize]) -> Vec<f64> {
    let mut v: Vec<f64> = block.iter().map(|&e| x[e]).collect();
    let copy = v.clone();
    v.extend(copy);
    v
}

/// For each doubled index of the grouped layout, its prefix node multiset
/// (the nodes whose divided difference that coordinate carries).
pub(crate) fn doubled_prefixes(nodes: &NodeVector, partition: &SetPartition) -> Vec<Vec<f64>> {
    let x = nodes.nodes();
    let mut out = Vec::with_capacity(2 * nodes.len());
    for block in partition.blocks() {
        let dn = doubled_nodes(x, block);
        for pos in 0..dn.len() {
            out.push(dn[..=pos].to_vec());
        }
    }
    out
}

/// Global positions of first-copy and second-copy coordinates in the doubled
/// grouped layout. First-copy coordinates carry `f_I[x_A]`, second-copy ones
/// the once-iterated divided differences entering the Kac numerator.
pub(crate) fn doubled_first_second(partition: &SetPartition) -> (Vec<usize>, Vec<usize>) {
    let mut first = Vec::new();
    let mut second = Vec::new();
    let mut offset = 0;
    for block in partition.blocks() {
        let k = block.len();
        first.extend(offset..offset + k);
        second.extend(offset + k..offset + 2 * k);
        offset += 2 * k;
    }
    (first, second)
}

/// Builds the doubled matrix families for every nonempty subset of the
/// ground set. Guarded at |A| <= 5.
pub fn doubled_matrices(nodes: &NodeVector, partition: &SetPartition) -> Result<DoubledMatrices> {
    let n = nodes.len();
    if partition.ground_size() != n {
        return Err(Error::Contract("partition/node size mismatch".into()));
    }
    if n > 5 {
        return Err(Error::SizeLimit(format!(
            "doubled_matrices supports at most 5 nodes, got {n}"
        )));
    }
    let x = nodes.nodes();
    let threshold = confluence_threshold(nodes);

    // column layout over 2A: per block, basis polynomials of the doubled
    // node list
    let mut cols: Vec<(usize, Polynomial)> = Vec::with_capacity(2 * n);
    for (bi, block) in partition.blocks().iter().enumerate() {
        let dn = doubled_nodes(x, block);
        for d in 0..dn.len() {
            cols.push((bi, Polynomial::from_roots(&dn[..d])));
        }
    }

    let mut per_subset = Vec::new();
    for mask in 1u32..(1 << n) {
        let elements: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let induced = partition.induced(&elements)?;
        let sub_nodes = nodes.subset(&elements)?;
        let m_block = block_interp_matrix(&sub_nodes, &induced)?;

        // parent block (in the ambient partition) of each induced block
        let ambient_cell = partition.block_of();
        let mut q = DMatrix::zeros(2 * elements.len(), 2 * n);
        let mut row = 0;
        for ind_block in induced.blocks() {
            let members: Vec<usize> = ind_block.iter().map(|&r| elements[r]).collect();
            let parent = ambient_cell[members[0]];
            let dn = doubled_nodes(x, &members);
            for pos in 0..dn.len() {
                let prefix = &dn[..=pos];
                for (col, (bi, poly)) in cols.iter().enumerate() {
                    if *bi == parent {
                        q[(row, col)] = poly_dd(poly, prefix, threshold);
                    }
                }
                row += 1;
            }
        }
        per_subset.push(SubsetMatrices {
            mask,
            elements,
            induced,
            m_block,
            q_doubled: q,
        });
    }
    Ok(DoubledMatrices {
        partition: partition.clone(),
        nodes: nodes.clone(),
        per_subset,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divided_diff::newton::{divided_difference, SmoothFn};
    use approx::assert_relative_eq;

    #[test]
    fn interp_matrix_three_nodes() {
        let (x, y, z) = (0.4, -1.0, 2.5);
        let nv = NodeVector::line(vec![x, y, z]).unwrap();
        let m = interp_matrix(&nv);
        // third row: (1, z - x, (z - x)(z - y))
        assert_relative_eq!(m[(2, 0)], 1.0);
        assert_relative_eq!(m[(2, 1)], z - x);
        assert_relative_eq!(m[(2, 2)], (z - x) * (z - y));
        assert_relative_eq!(m[(0, 1)], 0.0);
    }

    #[test]
    fn interp_matrix_determinant_is_vandermonde() {
        let nv = NodeVector::line(vec![1.0, 2.0, 4.0]).unwrap();
        let det = interp_matrix(&nv).determinant();
        assert_relative_eq!(det, 6.0, epsilon = 1e-12);

        let nv = NodeVector::line(vec![1.0, 1.0, 4.0]).unwrap();
        assert_relative_eq!(interp_matrix(&nv).determinant(), 0.0);

        // random nodes, full Vandermonde product
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.gen_range(2..6);
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let mut vdm = 1.0;
            for a in 0..n {
                for b in a + 1..n {
                    vdm *= x[b] - x[a];
                }
            }
            let nv = NodeVector::line(x).unwrap();
            let det = interp_matrix(&nv).determinant();
            assert_relative_eq!(det, vdm, epsilon = 1e-12 * vdm.abs().max(1.0));
        }
    }

    #[test]
    fn block_interp_matrix_examples() {
        let (w, x, y, z) = (0.0, 0.3, 2.0, 2.6);
        let nv = NodeVector::line(vec![w, x, y, z]).unwrap();
        let part = SetPartition::new(vec![vec![0, 1], vec![2, 3]], 4).unwrap();
        let m = block_interp_matrix(&nv, &part).unwrap();
        assert_relative_eq!(m[(1, 1)], x - w);
        assert_relative_eq!(m[(3, 3)], z - y);
        assert_relative_eq!(m[(2, 1)], 0.0);

        let singles = SetPartition::singletons(4);
        assert_eq!(
            block_interp_matrix(&nv, &singles).unwrap(),
            DMatrix::identity(4, 4)
        );
        let one = SetPartition::one_block(4);
        assert_eq!(block_interp_matrix(&nv, &one).unwrap(), interp_matrix(&nv));
    }

    #[test]
    fn transfer_matrix_paper_display() {
        // coarse {{0,1},{2}}, fine singletons, nodes (x, y, z)
        let (x, y, z) = (0.2, 1.1, 3.0);
        let nv = NodeVector::line(vec![x, y, z]).unwrap();
        let coarse = SetPartition::new(vec![vec![0, 1], vec![2]], 3).unwrap();
        let fine = SetPartition::singletons(3);
        // mapping from f_coarse = (f[x], f[x,y], f[z]) to singleton dds is the
        // wrong direction; the paper's displayed matrix is Q^{{A}, coarse}.
        let q = transfer_matrix(&nv, &SetPartition::one_block(3), &coarse).unwrap();
        let expected = [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [1.0, z - x, (z - x) * (z - y)],
        ];
        for r in 0..3 {
            for c in 0..3 {
                assert_relative_eq!(q[(r, c)], expected[r][c], epsilon = 1e-12);
            }
        }
        // coarse == fine gives the identity
        let id = transfer_matrix(&nv, &coarse, &coarse).unwrap();
        assert_relative_eq!((id - DMatrix::identity(3, 3)).norm(), 0.0, epsilon = 1e-12);
        // fine singletons from one block: third row of the full M matrix
        let q = transfer_matrix(&nv, &SetPartition::one_block(3), &fine).unwrap();
        assert_relative_eq!(q[(2, 2)], (z - x) * (z - y), epsilon = 1e-12);
    }

    #[test]
    fn transfer_matrix_determinant_lemma() {
        // |det Q^{ {A}, singletons }| equals the Vandermonde product
        let nv = NodeVector::line(vec![1.0, 2.0, 4.0]).unwrap();
        let q = transfer_matrix(
            &nv,
            &SetPartition::one_block(3),
            &SetPartition::singletons(3),
        )
        .unwrap();
        assert_relative_eq!(q.determinant().abs(), 6.0, epsilon = 1e-10);
    }

    #[test]
    fn transfer_matrix_rejects_non_refining() {
        let nv = NodeVector::line(vec![0.0, 1.0, 2.0]).unwrap();
        let a = SetPartition::new(vec![vec![0, 1], vec![2]], 3).unwrap();
        let b = SetPartition::new(vec![vec![0], vec![1, 2]], 3).unwrap();
        assert!(transfer_matrix(&nv, &a, &b).is_err());
    }

    #[test]
    fn transfer_chain_rule() {
        // Q^{I,K} = Q^{J,K} Q^{I,J} for K finer than J finer than I
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let nv = NodeVector::line(x).unwrap();
            let i = SetPartition::one_block(4);
            let j = SetPartition::new(vec![vec![0, 1], vec![2, 3]], 4).unwrap();
            let k = SetPartition::singletons(4);
            let q_ij = transfer_matrix(&nv, &i, &j).unwrap();
            let q_jk = transfer_matrix(&nv, &j, &k).unwrap();
            let q_ik = transfer_matrix(&nv, &i, &k).unwrap();
            let composed = &q_jk * &q_ij;
            assert!((composed - q_ik).norm() < 1e-9);
        }
    }

    #[test]
    fn transfer_matrix_maps_divided_differences() {
        // f_J[x_A] = Q^{I,J} f_I[x_A] on a smooth test function
        let f = crate::divided_diff::Differentiable(|_o, x: f64| Some(x.exp()));
        let x = [0.1, 0.5, 1.4, 2.0];
        let nv = NodeVector::line(x.to_vec()).unwrap();
        let coarse = SetPartition::new(vec![vec![0, 1, 2], vec![3]], 4).unwrap();
        let fine = SetPartition::new(vec![vec![0, 1], vec![2], vec![3]], 4).unwrap();
        let q = transfer_matrix(&nv, &coarse, &fine).unwrap();
        let dd_vec = |part: &SetPartition| -> Vec<f64> {
            let mut v = Vec::new();
            for block in part.blocks() {
                for c in 0..block.len() {
                    let prefix: Vec<f64> = block[..=c].iter().map(|&e| x[e]).collect();
                    v.push(
                        divided_difference(&f, &NodeVector::line(prefix).unwrap()).unwrap(),
                    );
                }
            }
            v
        };
        let fi = nalgebra::DVector::from_vec(dd_vec(&coarse));
        let fj = nalgebra::DVector::from_vec(dd_vec(&fine));
        assert!((q * fi - fj).norm() < 1e-10);
    }

    /// Doubled divided-difference vector of `f` on subset `elements` w.r.t.
    /// the induced partition, in grouped doubled order.
    fn doubled_dd_vec(
        f: &dyn SmoothFn,
        x: &[f64],
        elements: &[usize],
        partition: &SetPartition,
    ) -> Vec<f64> {
        let induced = partition.induced(elements).unwrap();
        let mut v = Vec::new();
        for block in induced.blocks() {
            let members: Vec<usize> = block.iter().map(|&r| elements[r]).collect();
            let dn = doubled_nodes(x, &members);
            for pos in 0..dn.len() {
                v.push(
                    divided_difference(f, &NodeVector::line(dn[..=pos].to_vec()).unwrap())
                        .unwrap(),
                );
            }
        }
        v
    }

    #[test]
    fn doubled_single_node_identities() {
        let nv = NodeVector::line(vec![0.7]).unwrap();
        let part = SetPartition::one_block(1);
        let dm = doubled_matrices(&nv, &part).unwrap();
        let full = dm.full();
        assert_eq!(full.m_block, DMatrix::identity(1, 1));
        assert!((full.q_doubled.clone() - DMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn doubled_full_subset_is_identity() {
        let nv = NodeVector::line(vec![0.0, 0.4, 2.0]).unwrap();
        let part = SetPartition::new(vec![vec![0, 1], vec![2]], 3).unwrap();
        let dm = doubled_matrices(&nv, &part).unwrap();
        let q = &dm.full().q_doubled;
        assert!((q.clone() - DMatrix::identity(6, 6)).norm() < 1e-10);
    }

    #[test]
    fn doubled_transfer_polynomial_identity() {
        // f_{I_B}[x_{B,B}] = Q^{I,2B} f_I[x_{A,A}] on monomials x^k, k <= 3
        let x = [0.3, 1.2];
        let nv = NodeVector::line(x.to_vec()).unwrap();
        let part = SetPartition::one_block(2);
        let dm = doubled_matrices(&nv, &part).unwrap();
        for k in 0..=3 {
            let mut coeffs = vec![0.0; k + 1];
            coeffs[k] = 1.0;
            let p = Polynomial::new(coeffs);
            let full =
                nalgebra::DVector::from_vec(doubled_dd_vec(&p, &x, &[0, 1], &part));
            for sub in &dm.per_subset {
                let expect = nalgebra::DVector::from_vec(doubled_dd_vec(
                    &p,
                    &x,
                    &sub.elements,
                    &part,
                ));
                let got = &sub.q_doubled * &full;
                assert!(
                    (got - expect).norm() < 1e-9,
                    "mask {} monomial {k}",
                    sub.mask
                );
            }
        }
    }

    #[test]
    fn doubled_transfer_identity_nontrivial_partition() {
        let f = crate::divided_diff::Differentiable(|order, x: f64| {
            Some(match order % 4 {
                0 => x.sin(),
                1 => x.cos(),
                2 => -x.sin(),
                _ => -x.cos(),
            })
        });
        let x = [0.0, 0.2, 3.0];
        let nv = NodeVector::line(x.to_vec()).unwrap();
        let part = SetPartition::new(vec![vec![0, 1], vec![2]], 3).unwrap();
        let dm = doubled_matrices(&nv, &part).unwrap();
        let full = nalgebra::DVector::from_vec(doubled_dd_vec(&f, &x, &[0, 1, 2], &part));
        for sub in &dm.per_subset {
            let expect =
                nalgebra::DVector::from_vec(doubled_dd_vec(&f, &x, &sub.elements, &part));
            let got = &sub.q_doubled * &full;
            assert!((got - expect).norm() < 1e-8, "mask {}", sub.mask);
        }
    }

    #[test]
    fn doubled_size_guard() {
        let nv = NodeVector::line(vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let part = SetPartition::singletons(6);
        assert!(doubled_matrices(&nv, &part).is_err());
    }
}
