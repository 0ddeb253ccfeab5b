use elusive_core::catalog::{entries, parse_words};
use elusive_core::constructions::{a5_on_15, build_sl2_quotient, m11_on_12, psl2_dihedral};
use elusive_core::presentation::{coset_enumerate, Word, DEFAULT_MAX_COSETS};
use elusive_core::{PermGroup, Permutation};
use proptest::prelude::*;

fn perm(n: usize) -> impl Strategy<Value = Permutation> {
    Just((0..n as u32).collect::<Vec<_>>())
        .prop_shuffle()
        .prop_map(|v| Permutation::from_images(v).unwrap())
}

fn perms(k: usize) -> impl Strategy<Value = (usize, Vec<Permutation>)> {
    (1usize..=9).prop_flat_map(move |n| (Just(n), prop::collection::vec(perm(n), k)))
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn enumerated(g: &PermGroup) -> u128 {
    g.elements(1_000_000).unwrap().count() as u128
}

proptest! {
    #![proptest_config(config(200))]

    #[test]
    fn multiplication_is_associative((_, v) in perms(3)) {
        prop_assert_eq!(v[0].mul(&v[1]).mul(&v[2]), v[0].mul(&v[1].mul(&v[2])));
    }

    #[test]
    fn inverse_cancels((n, v) in perms(1)) {
        let id = Permutation::identity(n);
        prop_assert_eq!(v[0].mul(&v[0].inverse()), id.clone());
        prop_assert_eq!(v[0].inverse().mul(&v[0]), id);
        prop_assert_eq!(v[0].inverse().inverse(), v[0].clone());
    }

    #[test]
    fn conjugation_preserves_order_and_cycle_type((_, v) in perms(2)) {
        let c = v[0].conjugate(&v[1]);
        prop_assert_eq!(c.order(), v[0].order());
        let mut a = c.cycle_lengths();
        let mut b = v[0].cycle_lengths();
        a.sort_unstable();
        b.sort_unstable();
        prop_assert_eq!(a, b);
        prop_assert_eq!(c, v[1].inverse().mul(&v[0]).mul(&v[1]));
    }

    #[test]
    fn order_is_least_power_to_identity((_, v) in perms(1)) {
        let o = v[0].order() as i64;
        prop_assert!(v[0].pow(o).is_identity());
        for e in 1..o {
            prop_assert!(!v[0].pow(e).is_identity());
        }
    }

    #[test]
    fn cycle_notation_round_trips((n, v) in perms(1)) {
        let text = format!("{}", v[0]);
        prop_assert_eq!(Permutation::parse_cycles(&text, n).unwrap(), v[0].clone());
    }

    #[test]
    fn bsgs_order_matches_enumeration((_, v) in perms(2)) {
        let g = PermGroup::new(&v).unwrap();
        prop_assert_eq!(g.order(), enumerated(&g));
        for x in &v {
            prop_assert!(g.contains(x));
        }
    }
}

#[test]
fn bsgs_order_matches_enumeration_on_built_groups() {
    let groups = [
        psl2_dihedral(7).unwrap(),
        a5_on_15().unwrap(),
        m11_on_12().unwrap(),
        build_sl2_quotient(7, 2).unwrap(),
        build_sl2_quotient(5, 2).unwrap(),
    ];
    for c in &groups {
        let g = c.build_group().unwrap();
        assert_eq!(g.order(), enumerated(&g), "{}", c.name);
        assert_eq!(g.order(), c.order as u128, "{}", c.name);
    }
}

/// Presentation and subgroup pairs from the catalog, each with a finite index.
fn catalog_cases() -> Vec<(String, elusive_core::presentation::Presentation, Vec<Word>, usize)> {
    let mut out = Vec::new();
    for p in [5, 7] {
        for e in entries(p).unwrap() {
            let (key, words) = match e.subgroups.iter().next() {
                Some((k, w)) => (format!("{}/{k}", e.name), w.clone()),
                None => (e.name.clone(), Vec::new()),
            };
            let sub = parse_words(&e.presentation, &words).unwrap();
            let n = coset_enumerate(&e.presentation, &sub, DEFAULT_MAX_COSETS).unwrap().count();
            out.push((key, e.presentation, sub, n));
        }
    }
    out
}

#[test]
fn coset_count_ignores_relator_order() {
    let cases = catalog_cases();
    let mut runner = proptest::test_runner::TestRunner::new(config(24));
    let sizes: Vec<usize> = cases.iter().map(|c| c.1.relators().len()).collect();
    let strategy = (0..cases.len()).prop_flat_map(move |i| (Just(i), Just((0..sizes[i]).collect::<Vec<_>>()).prop_shuffle()));
    runner
        .run(&strategy, |(i, order)| {
            let (name, pres, sub, n) = &cases[i];
            let reordered = pres.with_relator_order(&order);
            let m = coset_enumerate(&reordered, sub, DEFAULT_MAX_COSETS).unwrap().count();
            prop_assert_eq!(m, *n, "{}", name);
            Ok(())
        })
        .unwrap();
}
