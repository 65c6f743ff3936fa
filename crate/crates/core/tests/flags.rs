use chamberflow_core::flag::{
    act, cell_margin, cell_margin_lower_bound, comparison_matrix, flag_distance, flag_of, flag_of_matrix,
    is_transverse, transversality, Flag,
};
use chamberflow_core::linalg::leading_minors;
use chamberflow_core::sampling::{gaussian_matrix, haar_flag, haar_so, random_lower_unipotent, random_sl, rng};
use chamberflow_core::sections::permutations;
use chamberflow_core::{Config, GroupElement, Mat};
use proptest::prelude::*;

fn rot(k: Mat) -> GroupElement {
    GroupElement::new(k).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn distance_is_k_invariant(seed in any::<u64>(), n in 2usize..=4) {
        let mut r = rng(seed);
        let (xi, eta) = (haar_flag(&mut r, n), haar_flag(&mut r, n));
        let k = rot(haar_so(&mut r, n));
        let d0 = flag_distance(&xi, &eta);
        let d1 = flag_distance(&act(&k, &xi), &act(&k, &eta));
        prop_assert!((d0 - d1).abs() < 1e-9);
    }

    #[test]
    fn distance_is_a_symmetric_semimetric(seed in any::<u64>(), n in 2usize..=4) {
        let mut r = rng(seed);
        let (a, b, c) = (haar_flag(&mut r, n), haar_flag(&mut r, n), haar_flag(&mut r, n));
        prop_assert!(flag_distance(&a, &a) < 1e-12);
        prop_assert!((flag_distance(&a, &b) - flag_distance(&b, &a)).abs() < 1e-12);
        prop_assert!(flag_distance(&a, &c) <= flag_distance(&a, &b) + flag_distance(&b, &c) + 1e-12);
    }

    #[test]
    fn transversality_is_open(seed in any::<u64>(), n in 2usize..=4) {
        let mut r = rng(seed);
        let (xi, xc) = (haar_flag(&mut r, n), haar_flag(&mut r, n));
        let t = transversality(&xi, &xc, &Config::default());
        prop_assume!(t.transverse);
        let mut e = gaussian_matrix(&mut r, n);
        let scale = t.margin / 10.0 / e.norm();
        e *= scale;
        let moved = flag_of_matrix(&(xi.rep() + e)).unwrap();
        prop_assert!(is_transverse(&moved, &xc));
    }

    #[test]
    fn action_is_a_group_action(seed in any::<u64>(), n in 2usize..=4) {
        let mut r = rng(seed);
        let (g, h) = (random_sl(&mut r, n), random_sl(&mut r, n));
        let xi = haar_flag(&mut r, n);
        prop_assert!(flag_distance(&act(&g, &act(&h, &xi)), &act(&g.mul(&h), &xi)) < 1e-9);
        prop_assert!(flag_distance(&act(&GroupElement::identity(n), &xi), &xi) < 1e-12);
        prop_assert!(flag_distance(&act(&g.inverse(), &act(&g, &xi)), &xi) < 1e-9);
    }

    #[test]
    fn lower_unipotent_flags_are_in_the_big_cell(seed in any::<u64>(), n in 2usize..=5) {
        let mut r = rng(seed);
        let u = GroupElement::new(random_lower_unipotent(&mut r, n, 2.0)).unwrap();
        prop_assert!(is_transverse(&flag_of(&u), &Flag::opposite(n)));
    }

    /// The certified lower bound never exceeds the measured margin.
    #[test]
    fn margin_lower_bound_is_below_the_margin(seed in any::<u64>(), n in 2usize..=3) {
        let mut r = rng(seed);
        let (xi, xc) = (haar_flag(&mut r, n), haar_flag(&mut r, n));
        if let Ok(m) = cell_margin(&xi, &xc) {
            prop_assert!(cell_margin_lower_bound(&xi, &xc) <= m + 1e-9);
        }
    }
}

/// Among permutation flags only the standard one is transverse to the
/// opposite flag, and the leading minors of the comparison matrix agree.
#[test]
fn permutation_flags_and_the_minor_criterion() {
    for n in 2..=4 {
        let opp = Flag::opposite(n);
        for w in permutations(n) {
            let f = Flag::permutation(&w);
            let identity = w.iter().enumerate().all(|(i, &j)| i == j);
            let minors = leading_minors(&comparison_matrix(&f, &opp));
            let by_minors = minors[..n - 1].iter().all(|m| m.abs() > 1e-12);
            assert_eq!(is_transverse(&f, &opp), identity, "w = {w:?}");
            assert_eq!(by_minors, identity, "w = {w:?}");
        }
    }
}

#[test]
fn round_trip_through_json() {
    let mut r = rng(3);
    let xi = haar_flag(&mut r, 3);
    let s = serde_json::to_string(&xi).unwrap();
    let back: Flag = serde_json::from_str(&s).unwrap();
    assert!(flag_distance(&xi, &back) < 1e-15);
}
