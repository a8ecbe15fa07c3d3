use proptest::prelude::*;
use snbcert_core::linalg::{eig_hermitian, kron, partial_trace, partial_transpose, product_trace, svd};
use snbcert_core::random::{gaussian_matrix, random_hermitian, seeded};
use snbcert_core::{ComplexMatrix, DimSpec, C64};

fn dims() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=4, 1usize..=4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kron_is_associative(seed in any::<u64>(), (r1, c1) in dims(), (r2, c2) in dims(), (r3, c3) in dims()) {
        let mut rng = seeded(seed);
        let a = gaussian_matrix(&mut rng, r1, c1);
        let b = gaussian_matrix(&mut rng, r2, c2);
        let c = gaussian_matrix(&mut rng, r3, c3);
        let left = kron(&kron(&a, &b), &c);
        let right = kron(&a, &kron(&b, &c));
        prop_assert!(left.max_abs_diff(&right) <= 1e-12);
    }

    #[test]
    fn kron_is_bilinear(seed in any::<u64>(), (r1, c1) in dims(), (r2, c2) in dims(), re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let mut rng = seeded(seed);
        let a = gaussian_matrix(&mut rng, r1, c1);
        let a2 = gaussian_matrix(&mut rng, r1, c1);
        let b = gaussian_matrix(&mut rng, r2, c2);
        let s = C64::new(re, im);
        let lhs = kron(&(&a.scale(s) + &a2), &b);
        let rhs = &kron(&a, &b).scale(s) + &kron(&a2, &b);
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
        let lhs = kron(&b, &(&a.scale(s) + &a2));
        let rhs = &kron(&b, &a).scale(s) + &kron(&b, &a2);
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
    }

    #[test]
    fn partial_trace_preserves_trace(seed in any::<u64>(), factors in prop::collection::vec(1usize..=3, 1..=3), keep_mask in 0u8..8) {
        let dims = DimSpec::new(factors.clone()).unwrap();
        let m = random_hermitian(&mut seeded(seed), dims.total());
        let keep: Vec<usize> = (0..factors.len()).filter(|i| keep_mask & (1 << i) != 0).collect();
        let reduced = partial_trace(&m, &dims, &keep).unwrap();
        prop_assert!((reduced.trace() - m.trace()).norm() <= 1e-12);
    }

    #[test]
    fn partial_transpose_is_an_involution(seed in any::<u64>(), da in 1usize..=4, db in 1usize..=4, sub in 0usize..2) {
        let dims = DimSpec::bipartite(da, db).unwrap();
        let m = gaussian_matrix(&mut seeded(seed), da * db, da * db);
        let twice = partial_transpose(&partial_transpose(&m, &dims, sub).unwrap(), &dims, sub).unwrap();
        prop_assert_eq!(twice, m);
    }

    #[test]
    fn product_trace_agrees_with_kron(seed in any::<u64>(), da in 1usize..=4, db in 1usize..=4) {
        let mut rng = seeded(seed);
        let a = gaussian_matrix(&mut rng, da, da);
        let b = gaussian_matrix(&mut rng, db, db);
        let m = gaussian_matrix(&mut rng, da * db, da * db);
        let direct = kron(&a, &b).trace_product(&m);
        prop_assert!((product_trace(&a, &b, &m) - direct).norm() <= 1e-10);
    }

    #[test]
    fn svd_reconstructs(seed in any::<u64>(), rows in 1usize..=9, cols in 1usize..=9) {
        let m = gaussian_matrix(&mut seeded(seed), rows, cols);
        let s = svd(&m);
        prop_assert!(s.reconstruct().max_abs_diff(&m) <= 1e-10);
        prop_assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn eig_reconstructs_up_to_dimension_81(seed in any::<u64>(), n in prop::sample::select(vec![2usize, 3, 9, 27, 64, 81])) {
        let m = random_hermitian(&mut seeded(seed), n);
        let e = eig_hermitian(&m).unwrap();
        prop_assert!(e.reconstruct().max_abs_diff(&m) <= 1e-10);
        let vtv = &e.vectors.adjoint() * &e.vectors;
        prop_assert!(vtv.max_abs_diff(&ComplexMatrix::identity(n)) <= 1e-10);
    }
}
