use fpfree::dual::{pair_centred, pair_direct, CSeq};
use fpfree::epsilon::EpsSeq;
use fpfree::exact::{eq_norm, l1_norm, lim_norm, sum_coords, Norm, Rat, SparseVec};
use fpfree::maps::{q_embed, q_inverse, t_simple};
use fpfree::perturbation::{Flavor, PerturbedBasis};
use fpfree::stepfn::{dyadic, StepFn};
use num_bigint::BigInt;
use num_traits::Signed;
use proptest::prelude::*;

fn rational() -> impl Strategy<Value = Rat> {
    (-200i64..=200, 1i64..=60).prop_map(|(n, d)| Rat::new(BigInt::from(n), BigInt::from(d)))
}

fn vector(max_len: usize) -> impl Strategy<Value = SparseVec> {
    prop::collection::vec(rational(), 0..max_len).prop_map(SparseVec::from_dense)
}

fn nonneg_with_sum_at_most_one() -> impl Strategy<Value = SparseVec> {
    prop::collection::vec(0i64..=30, 1..10)
        .prop_flat_map(|w| {
            let total: i64 = w.iter().sum::<i64>() + 1;
            (Just(w), 1..=total).prop_map(|(w, t)| {
                SparseVec::from_dense(
                    w.into_iter()
                        .map(|x| Rat::new(BigInt::from(x), BigInt::from(t.max(1)))),
                )
            })
        })
        .prop_filter("sum <= 1", |x| sum_coords(x) <= Rat::from_integer(1.into()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn norm_axioms(x in vector(12), y in vector(12), c in rational()) {
        for norm in [Norm::L1, Norm::Equivalent, Norm::Lim] {
            prop_assert!(norm.eval(&(&x + &y)) <= norm.eval(&x) + norm.eval(&y));
            prop_assert_eq!(norm.eval(&x.scale(&c)), c.abs() * norm.eval(&x));
            prop_assert_eq!(norm.eval(&-&x), norm.eval(&x));
        }
    }

    #[test]
    fn norm_equivalence(x in vector(12)) {
        let two = Rat::from_integer(2.into());
        prop_assert!(l1_norm(&x) <= eq_norm(&x));
        prop_assert!(eq_norm(&x) <= &two * l1_norm(&x));
        prop_assert!(lim_norm(&x) <= l1_norm(&x));
        prop_assert!(l1_norm(&x) <= &two * lim_norm(&x));
        prop_assert_eq!(eq_norm(&x), sum_coords(&x).abs() + l1_norm(&x));
    }

    #[test]
    fn q_is_an_isometric_bijection(x in vector(12)) {
        let y = q_embed(&x);
        prop_assert_eq!(l1_norm(&y), eq_norm(&x));
        prop_assert_eq!(q_inverse(&y).unwrap(), x);
    }

    #[test]
    fn t_isometry_on_c(x in nonneg_with_sum_at_most_one(), y in nonneg_with_sum_at_most_one()) {
        prop_assert_eq!(eq_norm(&(&t_simple(&x) - &t_simple(&y))), eq_norm(&(&x - &y)));
    }

    #[test]
    fn pairing_forms_agree(x in vector(15), prefix in prop::collection::vec(rational(), 0..15), lim in rational()) {
        let lam = CSeq::new(prefix, lim);
        let value = pair_direct(&x, &lam);
        prop_assert_eq!(&value, &pair_centred(&x, &lam));
        prop_assert!(value.abs() <= l1_norm(&x) * lam.sup_abs());
    }

    #[test]
    fn unperturbed_basis_is_isometric(t in vector(16)) {
        let seq = EpsSeq::default();
        for flavor in [Flavor::InterleavedL1, Flavor::DyadicBlocks] {
            let basis = PerturbedBasis::standard(flavor, 16, &seq).unwrap();
            prop_assert_eq!(basis.unperturbed_norm(&t).unwrap(), l1_norm(&t));
        }
    }

    #[test]
    fn step_integration_is_linear(
        a in rational(), b in rational(),
        k1 in 0u64..16, k2 in 0u64..16, v1 in rational(), v2 in rational(),
    ) {
        let (l1, r1) = (dyadic(k1.min(15), 4), dyadic(k1.min(15) + 1, 4));
        let (l2, r2) = (dyadic(k2 / 2, 3), dyadic(k2 / 2 + 1, 3));
        let f = StepFn::indicator(l1, r1, v1).unwrap();
        let g = StepFn::indicator(l2, r2, v2).unwrap();
        let combo = StepFn::linear_combination([(&a, &f), (&b, &g)]);
        prop_assert_eq!(combo.integral(), &a * f.integral() + &b * g.integral());
        prop_assert!((&f - &g).l1_integral() <= f.l1_integral() + g.l1_integral());
    }
}
