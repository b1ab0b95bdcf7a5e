//! Property tests over seeded fixture families.

use std::collections::BTreeMap;

use proptest::prelude::*;
use twisted_wold::extension::{extend_doubly_twisted_isometries, verify_extension};
use twisted_wold::factory::{self, FockParams, EXAMPLE_NAMES};
use twisted_wold::identities::{dtr_relation, IdentityOptions};
use twisted_wold::linalg::{diag, identity, phase};
use twisted_wold::model::{verify_equivalence, CoreOps};
use twisted_wold::operators::{compare_on_window, equal_on_window};
use twisted_wold::representation::{check_coisometric, check_doubly_twisted, check_twisted, verify_all};
use twisted_wold::specfile;
use twisted_wold::wold::{check_wandering_commute, WoldOptions};

fn subset_of(k: usize, mask: u32) -> Vec<usize> {
    (0..k).filter(|i| mask & (1 << i) != 0).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn fock_models_pass_the_relation_suite(k in 2usize..=3, mask in 0u32..8, seed in 0u64..1000, flips in any::<bool>()) {
        let a = subset_of(k, mask);
        let p = FockParams { seed, scalar_flips: flips, ..FockParams::default() };
        let fm = factory::make_fock_model(k, &a, &p).unwrap();
        for r in verify_all(&fm.tuple, 4, 1e-10).unwrap() {
            prop_assert!(r.passed, "{a:?}: {}", r.summary());
        }
    }

    #[test]
    fn coisometric_and_twisted_implies_doubly_twisted(k in 2usize..=3, mask in 0u32..8, seed in 0u64..1000) {
        let fm = factory::make_fock_model(k, &subset_of(k, mask), &FockParams { seed, ..FockParams::default() }).unwrap();
        let t = &fm.tuple;
        let co = check_coisometric(t, 4, 1e-10).unwrap();
        let tw = check_twisted(t, 4, 1e-10).unwrap();
        if co.passed && tw.passed {
            prop_assert!(check_doubly_twisted(t, 4, 1e-10).unwrap().passed);
        }
    }

    #[test]
    fn trivial_twists_give_doubly_commuting_tuples(mask in 0u32..4, t0 in 0.0f64..1.0, t1 in 0.0f64..1.0) {
        let a = subset_of(2, mask);
        let w: BTreeMap<usize, _> = (0..2).filter(|l| !a.contains(l)).map(|l| (l, diag(&[phase(t0), phase(t1 + l as f64 / 3.0)]))).collect();
        let core = CoreOps { dim: 2, sigma: vec![identity(2)], w, u: BTreeMap::from([((0, 1), identity(2)), ((1, 0), identity(2))]) };
        let fm = factory::make_fock_model_with_core(2, &a, core).unwrap();
        let (s0, s1) = (fm.tuple.op(0, 0), fm.tuple.op(1, 0));
        let sp = fm.tuple.space.clone();
        let commute = compare_on_window(&sp, 4, 1e-12, |v| s0.apply(&s1.apply(v)), |v| s1.apply(&s0.apply(v)));
        prop_assert!(commute.equal);
        let (a0, a1) = (s0.adjoint(), s1.adjoint());
        let doubly = compare_on_window(&sp, 4, 1e-12, |v| a0.apply(&s1.apply(v)), |v| s1.apply(&a0.apply(v)));
        prop_assert!(doubly.equal);
        let doubly = compare_on_window(&sp, 4, 1e-12, |v| a1.apply(&s0.apply(v)), |v| s0.apply(&a1.apply(v)));
        prop_assert!(doubly.equal);
        prop_assert!(check_doubly_twisted(&fm.tuple, 4, 1e-12).unwrap().passed);
    }

    #[test]
    fn wandering_projections_commute(k in 2usize..=3, mask in 0u32..8, seed in 0u64..1000) {
        let fm = factory::make_fock_model(k, &subset_of(k, mask), &FockParams { seed, ..FockParams::default() }).unwrap();
        let all: Vec<usize> = (0..k).collect();
        let r = check_wandering_commute(&fm.tuple, &all, &WoldOptions::default().with_window(3)).unwrap();
        prop_assert!(r.passed, "{}", r.summary());
    }

    #[test]
    fn dtr_relation_on_random_models(mask in 0u32..4, seed in 0u64..1000) {
        let fm = factory::make_fock_model(2, &subset_of(2, mask), &FockParams { seed, ..FockParams::default() }).unwrap();
        let r = dtr_relation(&fm.tuple, &IdentityOptions { window: 4, ..IdentityOptions::default() }).unwrap();
        prop_assert!(r.passed, "{}", r.summary());
    }

    #[test]
    fn pi_a_transports_random_models(mask in 1u32..4, seed in 0u64..1000) {
        let a = subset_of(2, mask);
        let fm = factory::make_fock_model(2, &a, &FockParams { seed, ..FockParams::default() }).unwrap();
        let back = twisted_wold::model::pi_a(&fm.tuple, &a, &WoldOptions::default().with_window(3)).unwrap();
        prop_assert!(verify_equivalence(&fm.tuple, &back, 1e-10).unwrap().passed);
    }

    #[test]
    fn extensions_of_twisted_pairs_verify(turns in 0.0f64..1.0) {
        let t = factory::doubly_noncommuting(phase(turns)).unwrap();
        let res = extend_doubly_twisted_isometries(&t, 3, 1e-10).unwrap();
        let rep = verify_extension(&res, 3, 3, 1e-10).unwrap();
        prop_assert!(rep.passed);
        prop_assert!(!rep.unitary || rep.doubly_twisted);
        let z = res.extended.twist(0, 1);
        let orig = twisted_wold::operators::Op::identity(&res.extended.space).scale(phase(turns));
        prop_assert!(equal_on_window(z, &orig, 3, 1e-12).unwrap().equal);
    }

    #[test]
    fn factory_output_roundtrips_through_the_spec_format(idx in 0usize..EXAMPLE_NAMES.len(), seed in 0u64..1000) {
        let name = EXAMPLE_NAMES[idx];
        let a = specfile::to_canonical_string(&factory::make(name, seed).unwrap(), None, None);
        let b = specfile::to_canonical_string(&factory::make(name, seed).unwrap(), None, None);
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(specfile::canonicalize(&a).unwrap(), a);
    }
}
