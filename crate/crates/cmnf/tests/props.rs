use cmnf::chains::{solve_q, turn_counts};
use cmnf::exec::Exec;
use cmnf::group::GroupElement;
use cmnf::io::{group_from_json, group_to_json, series_from_json, series_to_json};
use cmnf::lemmas::{build, det_dense, det_e_all, BandMatrixSpec};
use cmnf::normal::{is_normal_form, random_normal_form_component, NormalFormType};
use cmnf::scalar::{cx, rat};
use cmnf::series::{Monomial, Series, Signature};
use num_rational::BigRational;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Q = BigRational;

fn sig_strategy() -> impl Strategy<Value = Signature> {
    prop_oneof![Just((1, 1)), Just((2, 2)), Just((2, 1))].prop_map(|(n, e)| Signature::new(n, e).unwrap())
}

/// Random real series: each drawn term is added together with its conjugate.
fn real_series(sig: Signature, trunc: u32, seed: u64) -> Series<Q> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = Series::zero(sig, trunc);
    for _ in 0..4 {
        let mut zi = vec![0; sig.n];
        let mut zj = vec![0; sig.n];
        zi[rng.gen_range(0..sig.n)] = rng.gen_range(0..3);
        zj[rng.gen_range(0..sig.n)] = rng.gen_range(0..3);
        let m = Monomial::new(&zi, &zj, rng.gen_range(0..2));
        if m.weight() == 0 || m.weight() > trunc {
            continue;
        }
        let c = cx(rat(rng.gen_range(-9..10), rng.gen_range(1..6)), rat(rng.gen_range(-9..10), rng.gen_range(1..6)));
        f.add_term(m.clone(), c.clone());
        f.add_term(m.conj(), c.conj());
    }
    f
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn group_inverse_and_associativity(sig in sig_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = GroupElement::<Q>::random(sig, &mut rng, true);
        let h = GroupElement::<Q>::random(sig, &mut rng, true);
        let k = GroupElement::<Q>::random(sig, &mut rng, false);
        let id = GroupElement::identity(sig);
        prop_assert_eq!(g.compose(&g.invert()).unwrap(), id.clone());
        prop_assert_eq!(g.invert().compose(&g).unwrap(), id);
        let left = g.compose(&h).unwrap().compose(&k).unwrap();
        let right = g.compose(&h.compose(&k).unwrap()).unwrap();
        prop_assert_eq!(left, right);
        prop_assert!(g.check_form(0.0).is_ok());
    }

    #[test]
    fn real_series_closed_under_ring_operations(sig in sig_strategy(), s1 in any::<u64>(), s2 in any::<u64>()) {
        let f = real_series(sig, 6, s1);
        let g = real_series(sig, 6, s2);
        prop_assert!(f.check_real(0.0).is_ok());
        let p = f.mul(&g).unwrap();
        prop_assert!(p.check_real(0.0).is_ok());
        prop_assert_eq!(p, g.mul(&f).unwrap());
        prop_assert!(f.sub(&g).unwrap().check_real(0.0).is_ok());
    }

    #[test]
    fn series_and_group_json_round_trip(sig in sig_strategy(), seed in any::<u64>()) {
        let f = real_series(sig, 7, seed);
        let text = serde_json::to_string(&series_to_json(&f)).unwrap();
        prop_assert_eq!(series_from_json::<Q>(&serde_json::from_str(&text).unwrap()).unwrap(), f);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = GroupElement::<Q>::random(sig, &mut rng, true);
        prop_assert_eq!(group_from_json::<Q>(&group_to_json(&g)).unwrap(), g);
    }

    #[test]
    fn normal_form_components_are_normal(sig in sig_strategy(), mu in 6u32..8, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = Series::<Q>::hyperquadric(sig, 7).add(&random_normal_form_component(sig, mu, 7, &mut rng)).unwrap();
        prop_assert!(f.check_real(0.0).is_ok());
        prop_assert!(is_normal_form(&f, &NormalFormType::chern_moser()).unwrap().ok);
    }

    #[test]
    fn det_e_recurrence_matches_dense(m in 1usize..24) {
        let rec = det_e_all(m);
        prop_assert_eq!(&rec[0], &1.into());
        for (s, d) in rec.iter().enumerate().skip(1) {
            prop_assert_eq!(d, &det_dense(&build(BandMatrixSpec::e(m, s)).unwrap()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn turn_counts_follow_interval_length(
        alpha in 0.2f64..3.0,
        rho in 0.2f64..3.0,
        r in -2.0f64..2.0,
        u1 in -10.0f64..10.0,
        len in 0.0f64..20.0,
    ) {
        let q = solve_q(alpha, rho, r).unwrap();
        let u2 = u1 + len;
        let per = std::f64::consts::PI / alpha;
        let near = |x: f64| (x - x.round()).abs() < 1e-6;
        prop_assume!(!near(len / per) && !near((q.q(u2).unwrap() - q.q(u1).unwrap()) / per));
        let (tq, tu) = turn_counts(&q, u1, u2).unwrap();
        prop_assert_eq!(tq, tu);
    }

    #[test]
    fn exec_strategies_agree(xs in proptest::collection::vec(any::<i32>(), 0..300)) {
        let f = |x: &i32| (*x as i64) * 3 - 1;
        prop_assert_eq!(Exec::Sequential.map(&xs, f), Exec::Parallel.map(&xs, f));
    }
}
