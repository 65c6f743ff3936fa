//! Loxodromic elements built as h·diag(±e^λ)·h⁻¹, so the construction
//! itself is the oracle for the classification.

use chamberflow_core::flag::{cell_margin_lower_bound, flag_distance, flag_of_matrix};
use chamberflow_core::fixtures;
use chamberflow_core::loxodromy::{
    classify, cocycle_of_power, cocycle_power, cocycle_via_jordan, delta_r_eps, delta_r_eps_at, extended_jordan,
    product_estimate, ratio, EstimateParams, LoxodromicData,
};
use chamberflow_core::schottky::build_schottky;
use chamberflow_core::sampling::{haar_flag, random_lower_unipotent, random_sl, rng, SeededRng};
use chamberflow_core::{iwasawa_cocycle, transition, AMElement, CartanVector, Config, Flag, GroupElement, Mat, Section};
use chamberflow_core::group::SignVector;
use proptest::prelude::*;
use rand::Rng;

struct Built {
    g: GroupElement,
    h: GroupElement,
    lambda: CartanVector,
    signs: SignVector,
}

/// λ with consecutive gaps in [0.4, 1.2].
fn build(r: &mut SeededRng, n: usize) -> Built {
    build_with(r, n, 0.4, 1.2)
}

/// Conjugator with condition number below 30, so that g⁺ and g⁻ stay well
/// inside each other's cells.
fn build_with(r: &mut SeededRng, n: usize, lo: f64, hi: f64) -> Built {
    let mut l: Vec<f64> = Vec::with_capacity(n);
    let mut x = 0.0;
    for _ in 0..n {
        l.push(x);
        x -= if lo < hi { r.random_range(lo..hi) } else { lo };
    }
    let lambda = CartanVector::centered(l);
    let signs = SignVector::all(n)[r.random_range(0..1usize << (n - 1))].clone();
    let d = AMElement::new(lambda.clone(), signs.clone()).unwrap();
    let h = loop {
        let h = random_sl(r, n);
        let sv = h.matrix().singular_values();
        if sv.max() / sv.min() < 30.0 {
            break h;
        }
    };
    let g = GroupElement::new(h.matrix() * d.to_matrix() * h.inverse().matrix()).unwrap();
    Built { g, h, lambda, signs }
}

fn transverse_to(r: &mut SeededRng, n: usize, bases: &[&Flag], margin: f64) -> Flag {
    loop {
        let xi = haar_flag(r, n);
        if bases.iter().all(|b| cell_margin_lower_bound(&xi, b) >= margin) {
            return xi;
        }
    }
}

fn section(r: &mut SeededRng, n: usize) -> Section {
    let base = haar_flag(r, n);
    if r.random_bool(0.5) {
        Section::compact(base)
    } else {
        Section::unipotent(base)
    }
}

fn iterate(l: &LoxodromicData, xi: &Flag, m: usize) -> Flag {
    (0..m).fold(xi.clone(), |x, _| l.act(&x))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn classification_recovers_the_construction(seed in any::<u64>(), n in 2usize..=5) {
        let mut r = rng(seed);
        let b = build(&mut r, n);
        let l = classify(&b.g, &Config::default()).unwrap();
        prop_assert!(l.lambda.distance(&b.lambda) < 1e-8);
        prop_assert_eq!(&l.signs, &b.signs);
        let plus = flag_of_matrix(b.h.matrix()).unwrap();
        let minus = flag_of_matrix(&(b.h.matrix() * chamberflow_core::flag::k_iota(n))).unwrap();
        prop_assert!(flag_distance(&l.attracting, &plus) < 1e-7);
        prop_assert!(flag_distance(&l.repelling, &minus) < 1e-7);
    }

    #[test]
    fn lambda_matches_the_eigenvalues(seed in any::<u64>(), n in 2usize..=5) {
        let g = random_sl(&mut rng(seed), n);
        let l = classify(&g, &Config::default());
        prop_assume!(l.is_ok());
        let mut ev: Vec<f64> = g.matrix().complex_eigenvalues().iter().map(|z| z.norm().ln()).collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        let l = l.unwrap();
        prop_assert!(l.lambda.coords().iter().zip(&ev).all(|(a, b)| (a - b).abs() < 1e-8));
    }

    #[test]
    fn sigma_at_the_attracting_flag_is_lambda(seed in any::<u64>(), n in 2usize..=5) {
        let mut r = rng(seed);
        let l = classify(&build(&mut r, n).g, &Config::default()).unwrap();
        prop_assert!(iwasawa_cocycle(&l.g, &l.attracting).distance(&l.lambda) < 1e-8);
    }

    /// AM is abelian, so ℒ_s(g) = 𝒯ℒ_{[g⁻]}(g)𝒯⁻¹ does not depend on s.
    #[test]
    fn extended_jordan_is_section_independent(seed in any::<u64>(), n in 2usize..=4) {
        let mut r = rng(seed);
        let l = classify(&build(&mut r, n).g, &Config::default()).unwrap();
        let s = section(&mut r, n);
        prop_assume!(cell_margin_lower_bound(&l.attracting, &s.base) >= 0.05);
        let u = l.repelling_section();
        let direct = extended_jordan(&s, &l).unwrap();
        let t = transition(&s, &u, &l.attracting).unwrap();
        let conj = t.mul(&l.jordan_am()).mul(&t.inverse());
        prop_assert!(direct.distance(&conj) < 1e-8);
        prop_assert!(direct.distance(&l.jordan_am()) < 1e-8);
    }

    #[test]
    fn basin_flags_converge_to_the_attracting_flag(seed in any::<u64>(), n in 2usize..=4) {
        let mut r = rng(seed);
        let l = classify(&build(&mut r, n).g, &Config::default()).unwrap();
        let xi = transverse_to(&mut r, n, &[&l.repelling], 0.05);
        let d: Vec<f64> = [0, 10, 20, 60].iter().map(|&m| flag_distance(&iterate(&l, &xi, m), &l.attracting)).collect();
        prop_assert!(d[3] < 1e-6, "{:?}", d);
        prop_assert!(d[2] <= d[1] + 1e-12);
    }

    /// ξ = h·u·wη₀ with u ∈ N⁻ lies outside the basin; its orbit tends to
    /// h·wη₀, which is not g⁺. The fixed point is unstable, so rounding
    /// drift grows like e^{m/2} while the orbit closes in like e^{-m/2}: 30
    /// steps keeps both well apart.
    #[test]
    fn lower_cell_orbits_converge_elsewhere(seed in any::<u64>(), n in 3usize..=4) {
        let mut r = rng(seed);
        let b = build_with(&mut r, n, 0.5, 0.5);
        let l = classify(&b.g, &Config::default()).unwrap();
        let mut w: Vec<usize> = (0..n).collect();
        w.swap(n - 2, n - 1);
        let wm = Flag::permutation(&w).rep().clone();
        let u = random_lower_unipotent(&mut r, n, 1.0);
        let xi = flag_of_matrix(&(b.h.matrix() * &u * &wm)).unwrap();
        let limit = flag_of_matrix(&(b.h.matrix() * &wm)).unwrap();
        let far = iterate(&l, &xi, 30);
        prop_assert!(flag_distance(&far, &limit) < 1e-4, "{}", flag_distance(&far, &limit));
        prop_assert!(flag_distance(&limit, &l.attracting) > 1e-3);
    }

    /// β(gᵖ, ξ) through the ℒ·ℛ formula agrees with the orbit product.
    #[test]
    fn power_cocycles_are_exact(seed in any::<u64>(), n in 2usize..=4) {
        let mut r = rng(seed);
        let l = classify(&build(&mut r, n).g, &Config::default()).unwrap();
        let (s0, s1, s2) = (section(&mut r, n), section(&mut r, n), section(&mut r, n));
        prop_assume!(cell_margin_lower_bound(&l.attracting, &s1.base) >= 0.05);
        let mut checked = 0;
        for _ in 0..50 {
            let xi = transverse_to(&mut r, n, &[&l.repelling, &s0.base], 0.05);
            for p in 1..=8u32 {
                let (Ok(a), Ok(b)) = (
                    cocycle_power(&s2, &s0, &l, p, &xi),
                    cocycle_via_jordan(&l, p, &xi, &s0, &s1, &s2),
                ) else { continue };
                prop_assert!(a.distance(&b) < 1e-7 * (1.0 + p as f64), "p = {}: {:?} vs {:?}", p, a, b);
                checked += 1;
            }
        }
        prop_assume!(checked > 0);
    }
}

/// β_{[g⁻]}(gᵖ, ξ) = ℒ_{[g⁻]}(g)ᵖ, against the exterior-power evaluation
/// of the cocycle of gᵖ.
#[test]
fn repelling_chart_powers_are_exact() {
    let mut r = rng(21);
    for n in 2..=4 {
        let l = classify(&build(&mut r, n).g, &Config::default()).unwrap();
        let u = l.repelling_section();
        for _ in 0..50 {
            let xi = transverse_to(&mut r, n, &[&l.repelling], 0.05);
            for p in 1..=8u32 {
                let beta = cocycle_of_power(&u, &u, &l.g, p, &xi).unwrap();
                let expect = l.jordan_am().pow(p as i64);
                assert!(beta.distance(&expect) < 1e-8, "n = {n}, p = {p}: {beta:?} vs {expect:?}");
            }
        }
    }
}

/// At ξ = g⁺ with one section the ratios collapse and the right-hand side
/// is ℒ_s(g).
#[test]
fn jordan_formula_collapses_at_the_attracting_flag() {
    let mut r = rng(22);
    let l = classify(&build(&mut r, 3).g, &Config::default()).unwrap();
    let s = loop {
        let s = section(&mut r, 3);
        if cell_margin_lower_bound(&l.attracting, &s.base) >= 0.05 {
            break s;
        }
    };
    let rhs = cocycle_via_jordan(&l, 1, &l.attracting, &s, &s, &s).unwrap();
    assert!(rhs.distance(&extended_jordan(&s, &l).unwrap()) < 1e-10);
}

#[test]
fn coincident_flags_have_trivial_ratio() {
    let mut r = rng(23);
    let base = haar_flag(&mut r, 3);
    let s = Section::compact(base.clone());
    let xi = transverse_to(&mut r, 3, &[&base], 0.1);
    let x = ratio(&s, &s, &base, &xi, &xi).unwrap();
    assert!(x.distance(&AMElement::identity(3)) < 1e-12);
}

#[test]
fn delta_estimate_vanishes_with_eps() {
    let d = delta_r_eps(2, 0.2, 1e-4, 1000, 42).unwrap();
    assert!(d < 1e-2, "{d}");
}

#[test]
fn delta_estimate_does_not_depend_on_the_base() {
    let mut r = rng(24);
    let other = haar_flag(&mut r, 2);
    let a = delta_r_eps(2, 0.2, 0.1, 10_000, 5).unwrap();
    let b = delta_r_eps_at(&other, 0.2, 0.1, 10_000, 6).unwrap();
    assert!(a <= 2.0 * b && b <= 2.0 * a, "{a} vs {b}");
}

fn estimate_inputs(fx: &fixtures::SchottkyFixture) -> (Vec<LoxodromicData>, Vec<Section>, Flag, EstimateParams) {
    let fam = build_schottky(&fx.seeds, fx.r, fx.eps, fx.max_power).unwrap();
    let mut sections: Vec<Section> = fam.generators.iter().map(|g| g.repelling_section().to_compact()).collect();
    sections.push(sections[0].clone());
    let xi0 = fam.generators[fam.len() - 1].attracting.clone();
    let delta = 1.5 * delta_r_eps(fam.n(), fx.r, fx.eps, 1000, 42).unwrap();
    (fam.generators, sections, xi0, EstimateParams { r: fx.r, eps: fx.eps, delta })
}

/// For one generator the measured side is the ℒ·ℛ formula, and the
/// predicted side only drops the ratio at gᵖξ₀. The certified power already
/// has λ₁ near 12, so agreement is relative to the size of β.
#[test]
fn single_generator_estimate_reduces_to_the_formula() {
    let (gens, sections, _, params) = estimate_inputs(&fixtures::sl3_triple());
    let g = &gens[0];
    let (s0, s1) = (&sections[0], &sections[1]);
    let xi0 = gens[2].attracting.clone();
    let rep = product_estimate(&gens[..1], &[3], &xi0, &sections[..2], params).unwrap();
    let exact = cocycle_via_jordan(g, 3, &xi0, s0, s1, s1).unwrap();
    let scale = exact.a.coords().iter().fold(1.0f64, |m, x| m.max(x.abs()));
    assert!(rep.beta_measured.distance(&exact) < 1e-6 * scale, "{:?} vs {:?}", rep.beta_measured, exact);
    assert_eq!(rep.beta_measured.m, exact.m);
    let far = (0..3).fold(xi0.clone(), |x, _| g.act(&x));
    let dropped = ratio(s1, s1, &g.repelling, &g.attracting, &far).unwrap();
    let gap = (rep.beta_distance - dropped.distance(&AMElement::identity(3))).abs();
    assert!(gap < 1e-6 * scale, "{} vs {:?}", rep.beta_distance, dropped);
    assert!(rep.pass());
}

#[test]
fn sl2_pair_estimate_passes_with_room() {
    let (gens, sections, xi0, params) = estimate_inputs(&fixtures::sl2_pair());
    let rep = product_estimate(&gens, &[3, 3], &xi0, &sections, params).unwrap();
    assert!(rep.pass());
    assert!(rep.beta_distance < 0.1 * rep.beta_bound, "{} vs {}", rep.beta_distance, rep.beta_bound);
}

/// With negative-eigenvalue generators the M-parts of both sides agree
/// exactly.
#[test]
fn signed_sl3_estimate_tracks_m_parts() {
    let (gens, sections, xi0, params) = estimate_inputs(&fixtures::sl3_engineered());
    assert!(gens.iter().any(|g| !g.signs.is_identity()));
    for powers in [[1, 1, 1], [2, 1, 3], [1, 2, 2]] {
        let rep = product_estimate(&gens, &powers, &xi0, &sections, params).unwrap();
        assert_eq!(rep.beta_measured.m, rep.beta_predicted.m, "{powers:?}");
        assert_eq!(rep.jordan_measured.m, rep.jordan_predicted.m, "{powers:?}");
        assert!(rep.pass(), "{powers:?}");
    }
}

#[test]
fn delta_estimate_is_reproducible_and_monotone() {
    let a = delta_r_eps(3, 0.2, 0.05, 1000, 7).unwrap();
    let b = delta_r_eps(3, 0.2, 0.05, 1000, 7).unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
    let c = delta_r_eps(3, 0.2, 0.1, 1000, 7).unwrap();
    assert!(a <= c);
    assert!(a.is_finite() && a >= 0.0);
}

#[test]
fn delta_estimate_rejects_bad_parameters() {
    assert!(delta_r_eps(3, 0.1, 0.2, 1000, 1).is_err());
    assert!(delta_r_eps(3, 0.2, 0.1, 999, 1).is_err());
}

#[test]
fn rotations_are_not_loxodromic() {
    let t = 0.7f64;
    let g = GroupElement::new(Mat::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()])).unwrap();
    assert!(classify(&g, &Config::default()).is_err());
}
