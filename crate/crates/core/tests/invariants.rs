use ahi_core::calculus::exterior_d;
use ahi_core::geometry::random_structure;
use ahi_core::identities::f_coeff;
use ahi_core::sampling::{random_form, trial_rng};
use ahi_core::{Coeff, Form, Jet, JetForm, JetShape, C64};
use num_traits::Zero;
use proptest::prelude::*;

fn c64() -> impl Strategy<Value = C64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| C64::new(re, im))
}

/// Order-2 jets in `dim = 4` variables with a symmetric Hessian.
fn jet2() -> impl Strategy<Value = Jet> {
    (
        c64(),
        prop::collection::vec(c64(), 4),
        prop::collection::vec(c64(), 16),
    )
        .prop_map(|(v, g, h)| {
            let sym = (0..16)
                .map(|k| (h[k] + h[(k % 4) * 4 + k / 4]) * 0.5)
                .collect();
            Jet::from_parts(v, g, Some(sym))
        })
}

fn close(a: &Jet, b: &Jet) -> bool {
    a.sub(b).max_abs() < 1e-12
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jets_form_a_commutative_ring(a in jet2(), b in jet2(), c in jet2()) {
        prop_assert!(close(&a.mul(&b), &b.mul(&a)));
        prop_assert!(close(&a.mul(&b).mul(&c), &a.mul(&b.mul(&c))));
        prop_assert!(close(&a.mul(&b.add(&c)), &a.mul(&b).add(&a.mul(&c))));
        prop_assert!(close(&a.mul(&Jet::one(a.shape())), &a));
    }

    #[test]
    fn partials_obey_leibniz(a in jet2(), b in jet2(), i in 0usize..4) {
        let lhs = a.mul(&b).partial(i).unwrap();
        let rhs = a.partial(i).unwrap().mul(&b.truncate(1)).add(&a.truncate(1).mul(&b.partial(i).unwrap()));
        prop_assert!(close(&lhs, &rhs));
    }

    #[test]
    fn reciprocal_inverts(a in jet2()) {
        prop_assume!(a.value().norm() > 0.1);
        let one = Jet::one(a.shape());
        prop_assert!(a.mul(&a.recip().unwrap()).sub(&one).max_abs() < 1e-9);
    }

    #[test]
    fn d_squared_vanishes(coeffs in prop::collection::vec(jet2(), 16)) {
        let a: JetForm = Form::from_coeffs(4, JetShape::new(2, 4).unwrap(), coeffs).unwrap();
        let dd = exterior_d(&exterior_d(&a).unwrap()).unwrap();
        prop_assert!(dd.max_abs() < 1e-12);
    }

    #[test]
    fn coefficient_vanishes_below_two(n in 1usize..=8, k in 0usize..=8, j in 0usize..=8) {
        prop_assume!(k + j <= n && k <= n);
        for r in [0, 1] {
            if let Ok(f) = f_coeff(n, k, j, r) {
                prop_assert!(f.is_zero());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fiber_operators_satisfy_the_algebraic_identities(seed in any::<u64>(), n in 1usize..=3, k in 0usize..=6) {
        let k = k % (2 * n + 1);
        let fiber = random_structure(seed, n, 0.35).unwrap().fiber().unwrap();
        let ops = fiber.point();
        let mut rng = trial_rng(seed, 9);
        let a = random_form(&mut rng, 2 * n, k);
        let b = random_form(&mut rng, 2 * n, k + 2);
        let scale = ops.norm(&a).max(1.0);
        // ⋆⋆ = (−1)^k
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!(ops.norm(&ops.hodge_star(&ops.hodge_star(&a)).sub(&a.scale_real(sign))) < 1e-10 * scale);
        // Λ is the adjoint of L
        let lhs = ops.inner_product(&ops.lefschetz_l(&a), &b);
        let rhs = ops.inner_product(&a, &ops.lambda(&b));
        prop_assert!((lhs - rhs).norm() < 1e-10 * scale * ops.norm(&b).max(1.0));
        // ⋆Λ = L⋆
        prop_assert!(ops.norm(&ops.hodge_star(&ops.lambda(&b)).sub(&ops.lefschetz_l(&ops.hodge_star(&b)))) < 1e-10 * scale.max(ops.norm(&b)));
        // Lefschetz decomposition reconstructs
        let dec = ops.lefschetz_decompose(&a, k).unwrap();
        prop_assert!(ops.norm(&dec.reconstruct(ops).sub(&a)) < 1e-10 * scale);
        for (_, alpha) in &dec.components {
            prop_assert!(ops.norm(&ops.lambda(alpha)) < 1e-10 * scale);
        }
        // bidegree parts sum to the form, 𝕀 and 𝕀⁻¹ are inverse
        let mut sum = Form::zero(2 * n, ());
        for (_, part) in ops.bigrade_split(&a) {
            sum = sum.add(&part);
        }
        prop_assert!(ops.norm(&sum.sub(&a)) < 1e-10 * scale);
        prop_assert!(ops.norm(&ops.apply_i_inv(&ops.apply_i(&a)).sub(&a)) < 1e-10 * scale);
    }
}
