use approxk::boundary::classes::interleave;
use approxk::boundary::lift::{check_inv_cut, lift_closed_form, lift_from_factors, lift_inverse_closed_form};
use approxk::boundary::region::MatRegion;
use approxk::elem::{j_mat, product, x_mat, y_mat};
use approxk::functional_calculus::riesz_draw;
use approxk::kproducts::{box_times, k0_product};
use approxk::matrix::{approx_eq, c, diag_real, dsum, eye, kron, norm, CMatrix, Tol};
use approxk::random;
use approxk::star_algebra::Subalg;
use approxk::wedderburn::{decompose, k0_class};
use proptest::prelude::*;

fn projection(r: &mut random::Rng64, n: usize, k: usize) -> CMatrix {
    let u = random::unitary(r, n);
    let d: Vec<f64> = (0..n).map(|i| if i < k { 1.0 } else { 0.0 }).collect();
    &u * diag_real(&d) * u.adjoint()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn box_times_is_multiplicative(seed in any::<u64>(), n in 1usize..4, m in 1usize..4, k in 0usize..4) {
        let tol = Tol::default();
        let mut r = random::rng(seed);
        let k = k.min(m);
        let u1 = random::invertible(&mut r, n, 5.0);
        let u2 = random::invertible(&mut r, n, 5.0);
        let p = projection(&mut r, m, k);
        let lhs = box_times(&(&u1 * &u2), &p, &tol).unwrap().w;
        let rhs = box_times(&u1, &p, &tol).unwrap().w * box_times(&u2, &p, &tol).unwrap().w;
        prop_assert!(approx_eq(&lhs, &rhs, 1e-10 * norm(&lhs).max(1.0)));
        let bt = box_times(&u1, &p, &tol).unwrap();
        prop_assert!(approx_eq(&(&bt.w * &bt.winv), &eye(n * m), 1e-9));
    }

    #[test]
    fn k0_product_adds_over_direct_sums(seed in any::<u64>(), k1 in 0usize..3, k2 in 0usize..3, kq in 0usize..3) {
        let tol = Tol::default();
        let mut r = random::rng(seed);
        let region = MatRegion::new(Subalg::diagonal(2), &tol, seed).unwrap();
        let p1 = diag_real(&[(k1 % 2) as f64, (k1 / 2) as f64]);
        let p2 = diag_real(&[(k2 / 2) as f64, (k2 % 2) as f64]);
        let q = projection(&mut r, 2, kq);
        let a = k0_product(&region, &p1, &q).unwrap();
        let b = k0_product(&region, &p2, &q).unwrap();
        let joint = k0_product(&region, &dsum(&p1, &p2), &q).unwrap();
        prop_assert!(a.matches && b.matches && joint.matches);
        prop_assert_eq!(joint.class, a.class.add(&b.class).unwrap());
        prop_assert_eq!(joint.factor.scale(kq as i64), joint.predicted);
    }

    #[test]
    fn whitehead_factorization(seed in any::<u64>(), n in 1usize..5) {
        let mut r = random::rng(seed);
        let u = random::invertible(&mut r, n, 100.0);
        let uinv = u.clone().try_inverse().unwrap();
        let v = product(&[x_mat(&u), y_mat(&(-&uinv)), x_mat(&u), j_mat(&u, n)]);
        let target = dsum(&u, &uinv);
        prop_assert!(approx_eq(&v, &target, 1e-10 * norm(&target).powi(3).max(1.0)));
    }

    #[test]
    fn lift_closed_forms_agree(seed in any::<u64>(), n in 1usize..4) {
        let mut r = random::rng(seed);
        let a = random::gaussian(&mut r, n, n);
        let b = random::gaussian(&mut r, n, n);
        let v = lift_from_factors(&a, &b);
        prop_assert!(approx_eq(&v, &lift_closed_form(&a, &b), 1e-10 * norm(&v).max(1.0)));
        let prod = &v * lift_inverse_closed_form(&a, &b);
        prop_assert!(approx_eq(&prod, &eye(2 * n), 1e-8 * norm(&v).powi(2).max(1.0)));
    }

    #[test]
    fn inv_cut_within_bound(seed in any::<u64>(), n in 1usize..4, eps in 1e-6f64..1e-2) {
        let tol = Tol::default();
        let mut r = random::rng(seed);
        let basis = random::unitary(&mut r, n);
        let hd: Vec<f64> = (0..n).map(|_| random::uniform(&mut r, 0.0, 1.0)).collect();
        let h = &basis * diag_real(&hd) * basis.adjoint();
        let ud: Vec<f64> = (0..n).map(|_| random::uniform(&mut r, 0.5, 2.0)).collect();
        let u = &basis * diag_real(&ud) * basis.adjoint() + random::gaussian(&mut r, n, n) * c(eps, 0.0);
        let cut = check_inv_cut(&u, &h, &tol).unwrap();
        prop_assert!(cut.passed, "{:?}", cut);
    }

    #[test]
    fn riesz_bound_holds(seed in any::<u64>(), index in 0u64..1000) {
        let row = riesz_draw(seed, index, &Tol::default()).unwrap();
        prop_assert!(row.passed, "{:?}", row);
    }

    #[test]
    fn interleave_is_a_permutation(sizes in proptest::collection::vec(1usize..4, 1..5)) {
        let mut p = interleave(&sizes);
        let total: usize = sizes.iter().map(|s| 2 * s).sum();
        p.sort();
        prop_assert_eq!(p, (0..total).collect::<Vec<_>>());
    }

    #[test]
    fn classes_survive_unitary_conjugation(seed in any::<u64>(), k in 0usize..3) {
        let tol = Tol::default();
        let mut r = random::rng(seed);
        let w = random::unitary(&mut r, 4);
        let a = Subalg::left_tensor_factor(2, 2);
        let b = a.conjugated(&w, &tol).unwrap();
        let wa = decompose(&a, &tol, seed).unwrap();
        let wb = decompose(&b, &tol, seed).unwrap();
        prop_assert_eq!(wa.signature(), wb.signature());
        let e = kron(&diag_real(&[(k > 0) as u8 as f64, (k > 1) as u8 as f64]), &eye(2));
        let ka = k0_class(&e, &wa).unwrap();
        let kb = k0_class(&(&w * &e * w.adjoint()), &wb).unwrap();
        prop_assert_eq!(ka.entries, kb.entries);
    }
}
