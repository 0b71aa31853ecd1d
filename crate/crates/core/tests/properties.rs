//! Property tests for the operator algebra and the proximal toolbox.

use madmm::linop::{seminorm_sq, LinearMap, SelfAdjointOp};
use madmm::model::ProxTerm;
use madmm::{Matrix, Vector};
use proptest::prelude::*;

fn small_vec(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, dim)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// Materialization reproduces the operator's action entrywise.
    #[test]
    fn materialize_agrees_with_apply(entries in small_vec(9), probe in small_vec(3)) {
        let raw = Matrix::from_row_slice(3, 3, &entries);
        let sym = (&raw + raw.transpose()) * 0.5;
        let op = SelfAdjointOp::from_matrix(&sym).unwrap();
        let m = op.materialize(10).unwrap();
        let x = Vector::from_vec(probe);
        let direct = op.apply(&x).unwrap();
        let via = &m * &x;
        for i in 0..3 {
            prop_assert!((direct[i] - via[i]).abs() <= 1e-12 * (1.0 + via[i].abs()));
        }
    }

    /// Gram operators are PSD: seminorms are nonnegative on any probe.
    #[test]
    fn gram_seminorm_nonnegative(entries in small_vec(6), probe in small_vec(2), scale in 0.01f64..10.0) {
        let a = LinearMap::from_matrix(Matrix::from_row_slice(2, 3, &entries));
        let g = a.gram(scale);
        let x = Vector::from_vec(probe);
        prop_assert!(seminorm_sq(&g, &x).unwrap() >= 0.0);
    }

    /// Adjoint consistency of matrix-backed maps.
    #[test]
    fn matrix_maps_have_consistent_adjoints(entries in small_vec(12)) {
        let a = LinearMap::from_matrix(Matrix::from_row_slice(3, 4, &entries));
        prop_assert!(a.verify_adjoint(20, 7, 1e-10).is_ok());
    }

    /// Prox maps are firmly nonexpansive in z and stay in the domain.
    #[test]
    fn prox_nonexpansive_and_feasible(
        z1 in small_vec(3),
        z2 in small_vec(3),
        alpha in 0.05f64..20.0,
        which in 0usize..5,
    ) {
        let term = match which {
            0 => ProxTerm::zero(3),
            1 => ProxTerm::l1(3, 0.4).unwrap(),
            2 => ProxTerm::box_indicator(
                Vector::from_element(3, -1.0),
                Vector::from_element(3, 1.5),
            ).unwrap(),
            3 => ProxTerm::nonneg(3),
            _ => ProxTerm::ball_indicator(Vector::zeros(3), 2.0).unwrap(),
        };
        let z1 = Vector::from_vec(z1);
        let z2 = Vector::from_vec(z2);
        let p1 = term.prox(&z1, alpha).unwrap();
        let p2 = term.prox(&z2, alpha).unwrap();
        prop_assert!(term.value(&p1).unwrap().is_finite());
        prop_assert!((&p1 - &p2).norm() <= (&z1 - &z2).norm() + 1e-12);
        // prox characterization: alpha (z - p) is a subgradient at p
        let s = (&z1 - &p1) * alpha;
        let back = term.prox(&(&p1 + &s), 1.0).unwrap();
        prop_assert!((&back - &p1).norm() <= 1e-9 * (1.0 + p1.norm()));
    }

    /// Soft thresholding never increases magnitude and preserves sign.
    #[test]
    fn soft_threshold_shrinks(z in small_vec(4), lambda in 0.0f64..5.0) {
        let z = Vector::from_vec(z);
        let out = madmm::model::soft_threshold(&z, lambda).unwrap();
        for i in 0..4 {
            prop_assert!(out[i].abs() <= z[i].abs() + 1e-15);
            prop_assert!(out[i] * z[i] >= 0.0);
        }
    }
}
