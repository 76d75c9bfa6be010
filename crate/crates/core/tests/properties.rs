//! Randomized property tests over the combinatorial and interpolation layers.

use std::collections::HashMap;

use proptest::prelude::*;

use kaczero::divided_diff::{divided_difference, interp_matrix, Differentiable, NodeVector};
use kaczero::gaussian::{dd_covariance, sinc_deriv, CovarianceModel};
use kaczero::partitions::{
    cumulants_from_moments, joint_cumulant, moments_from_cumulants, SetPartition,
};

fn small_kappa(p: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, p)
}

fn separated_nodes(len: usize, min_gap: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, len).prop_filter("nodes must be well separated", move |v| {
        v.iter().enumerate().all(|(i, a)| {
            v[..i].iter().all(|b| (a - b).abs() > min_gap)
        })
    })
}

fn distinct_nodes(len: usize) -> impl Strategy<Value = Vec<f64>> {
    separated_nodes(len, 0.2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn moment_cumulant_roundtrip(kappa in (1usize..=8).prop_flat_map(small_kappa)) {
        let moments = moments_from_cumulants(&kappa).unwrap();
        let back = cumulants_from_moments(&moments).unwrap();
        for (a, b) in kappa.iter().zip(&back) {
            prop_assert!((a - b).abs() < 1e-9, "kappa {a} came back as {b}");
        }
    }

    #[test]
    fn joint_cumulant_of_independents_cancels(mu in prop::collection::vec(-2.0..2.0f64, 2..=4)) {
        let p = mu.len();
        let mut joint = HashMap::new();
        for mask in 1u32..(1 << p) {
            let prod: f64 = (0..p).filter(|i| mask & (1 << i) != 0).map(|i| mu[i]).product();
            joint.insert(mask, prod);
        }
        let kappa = joint_cumulant(p, &joint).unwrap();
        prop_assert!(kappa.abs() < 1e-10, "joint cumulant {kappa}");
    }

    #[test]
    fn divided_difference_is_symmetric(nodes in distinct_nodes(4), shift in -0.3..0.3f64) {
        let f = Differentiable(move |m: usize, x: f64| Some(sinc_deriv(m, x + shift)));
        let base = divided_difference(
            &f,
            &NodeVector::line(nodes.clone()).unwrap(),
        ).unwrap();
        let mut reversed = nodes.clone();
        reversed.reverse();
        let swapped = divided_difference(
            &f,
            &NodeVector::line(reversed).unwrap(),
        ).unwrap();
        let scale = base.abs().max(1.0);
        prop_assert!((base - swapped).abs() < 1e-9 * scale, "{base} vs {swapped}");
    }

    #[test]
    fn interpolation_determinant_is_vandermonde(nodes in distinct_nodes(4)) {
        let det = interp_matrix(&NodeVector::line(nodes.clone()).unwrap()).determinant();
        let mut vandermonde = 1.0;
        for i in 0..nodes.len() {
            for j in i + 1..nodes.len() {
                vandermonde *= nodes[j] - nodes[i];
            }
        }
        let scale = vandermonde.abs().max(1e-6);
        prop_assert!((det - vandermonde).abs() < 1e-9 * scale, "{det} vs {vandermonde}");
    }

    // nearly coincident nodes make the nodewise covariance genuinely
    // ill-conditioned (that regime belongs to the cluster partition), so
    // the singleton-partition property only claims well-separated nodes
    #[test]
    fn covariance_is_positive_definite(nodes in separated_nodes(3, 0.5)) {
        let nv = NodeVector::line(nodes).unwrap();
        let bc = dd_covariance(&CovarianceModel::Sinc, &SetPartition::singletons(3), &nv).unwrap();
        prop_assert!(bc.min_eig > 0.0, "min eigenvalue {}", bc.min_eig);
    }
}
