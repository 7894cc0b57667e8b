//! Property-based invariants.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use wapmc_core::basis::{contiguous_groups, shape_indicator};
use wapmc_core::diagnostics::{ppp_from_statistics, sse};
use wapmc_core::mlg::{collapse_decompose, null_basis};
use wapmc_core::rng::fold_key;
use wapmc_core::sim::compute_poz;

/// A tall matrix with a diagonal boost so that it has full column rank.
fn tall_matrix() -> impl Strategy<Value = DMatrix<f64>> {
    (1usize..5, 1usize..6).prop_flat_map(|(g, extra)| {
        let n = g + extra;
        prop::collection::vec(-2.0f64..2.0, n * g).prop_map(move |v| {
            let mut h = DMatrix::from_vec(n, g, v);
            for j in 0..g {
                h[(j, j)] += 5.0;
            }
            h
        })
    })
}

proptest! {
    #[test]
    fn null_basis_is_orthonormal_and_orthogonal_to_h(h in tall_matrix()) {
        let q = null_basis(&h).unwrap();
        let q = q.matrix();
        prop_assert_eq!(q.ncols(), h.nrows() - h.ncols());
        let qtq = q.transpose() * q;
        let eye = DMatrix::<f64>::identity(q.ncols(), q.ncols());
        prop_assert!((qtq - eye).amax() < 1e-10);
        prop_assert!((h.transpose() * q).amax() < 1e-10);
    }

    #[test]
    fn collapse_decomposition_reconstructs_w(
        h in tall_matrix(),
        seed in prop::collection::vec(-3.0f64..3.0, 10),
    ) {
        let w = DVector::from_fn(h.nrows(), |i, _| seed[i % seed.len()] + i as f64 * 0.1);
        let (y, q, basis) = collapse_decompose(&h, &w).unwrap();
        let back = &h * y + basis.matrix() * q;
        prop_assert!((back - &w).amax() < 1e-8);
    }

    #[test]
    fn sse_is_nonnegative_and_zero_only_on_equality(
        a in prop::collection::vec(-1e3f64..1e3, 1..30),
        shift in -5.0f64..5.0,
    ) {
        prop_assert_eq!(sse(&a, &a).unwrap(), 0.0);
        let b: Vec<f64> = a.iter().map(|v| v + shift).collect();
        let s = sse(&a, &b).unwrap();
        prop_assert!(s >= 0.0);
        if shift.abs() > 1e-6 {
            prop_assert!(s > 0.0);
        }
    }

    #[test]
    fn shape_indicator_rows_have_a_single_one(labels in prop::collection::vec("[a-d]", 1..40)) {
        let sd = shape_indicator(&labels);
        for i in 0..labels.len() {
            let row = sd.phi.row(i);
            prop_assert_eq!(row.sum(), 1.0);
            prop_assert_eq!(row[sd.membership[i]], 1.0);
            prop_assert_eq!(&sd.groups[sd.membership[i]], &labels[i]);
        }
        let members: usize = sd.members().iter().map(Vec::len).sum();
        prop_assert_eq!(members, labels.len());
    }

    #[test]
    fn contiguous_groups_have_the_requested_size(n in 1usize..100, block in 1usize..15) {
        let sd = shape_indicator(&contiguous_groups(n, block));
        prop_assert_eq!(sd.n_groups(), n.div_ceil(block));
        for m in sd.members() {
            prop_assert!(m.len() <= block);
            prop_assert!(m.windows(2).all(|w| w[1] == w[0] + 1));
        }
    }

    #[test]
    fn fold_key_is_deterministic_and_path_sensitive(
        master in any::<u64>(),
        path in prop::collection::vec(any::<u64>(), 0..5),
        extra in any::<u64>(),
    ) {
        prop_assert_eq!(fold_key(master, &path), fold_key(master, &path));
        let mut longer = path.clone();
        longer.push(extra);
        prop_assert_ne!(fold_key(master, &path), fold_key(master, &longer));
    }

    #[test]
    fn poz_and_ppp_are_fractions(
        q in prop::collection::vec(-5.0f64..5.0, 1..50),
        obs in -5.0f64..5.0,
    ) {
        let p = compute_poz(&q).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        let v = ppp_from_statistics(obs, &q);
        prop_assert!((0.0..=1.0).contains(&v));
    }
}
