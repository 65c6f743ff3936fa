//! Density certificates, checked against brute-force nearest-point searches
//! over the reconstructed witnesses.

use chamberflow_core::density::{
    jordan_density_bridge, progression_threshold, reverify, select_dense_subgroup_generators,
    semigroup_cone_density, BridgeParams, DensityCertificate, TorusPoint, Window,
};
use chamberflow_core::fixtures;
use chamberflow_core::sampling::rng;
use chamberflow_core::schottky::build_schottky;
use chamberflow_core::Error;
use proptest::prelude::*;
use rand::Rng;

const BOUND: u32 = 1000;

/// Witness points Σ nᵢfᵢ with the torus part reduced to [0, 1).
fn witness_points(cert: &DensityCertificate) -> Vec<(Vec<f64>, Vec<f64>)> {
    cert.witnesses
        .iter()
        .map(|w| {
            let d = cert.subset[0].d();
            let k = cert.subset[0].k();
            let mut v = vec![0.0; d];
            let mut c = vec![0.0; k];
            for (f, &m) in cert.subset.iter().zip(w) {
                v.iter_mut().zip(&f.v).for_each(|(a, b)| *a += m as f64 * b);
                c.iter_mut().zip(&f.c).for_each(|(a, b)| *a += m as f64 * b);
            }
            (v, c.into_iter().map(|x| x - x.floor()).collect())
        })
        .collect()
}

fn flat_distance(v: &[f64], c: &[f64], p: &(Vec<f64>, Vec<f64>)) -> f64 {
    let sv: f64 = v.iter().zip(&p.0).map(|(a, b)| (a - b).powi(2)).sum();
    let sc: f64 = c
        .iter()
        .zip(&p.1)
        .map(|(a, b)| {
            let t = (a - b).abs().fract();
            t.min(1.0 - t).powi(2)
        })
        .sum();
    (sv + sc).sqrt()
}

fn nearest(v: &[f64], c: &[f64], pts: &[(Vec<f64>, Vec<f64>)]) -> f64 {
    pts.iter().map(|p| flat_distance(v, c, p)).fold(f64::INFINITY, f64::min)
}

fn random_point(r: &mut impl Rng, window: &Window, offset: &[f64], k: usize) -> (Vec<f64>, Vec<f64>) {
    let v = window.lo.iter().zip(&window.hi).zip(offset).map(|((a, b), o)| o + r.random_range(*a..=*b)).collect();
    let c = (0..k).map(|_| r.random::<f64>()).collect();
    (v, c)
}

fn random_set(r: &mut impl Rng, count: usize, d: usize, k: usize) -> Vec<TorusPoint> {
    (0..count)
        .map(|_| {
            TorusPoint::new(
                (0..d).map(|_| r.random_range(-2.0..2.0)).collect(),
                (0..k).map(|_| r.random::<f64>()).collect(),
            )
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Whenever a subset is selected it has at most 3d + 2k elements, taken
    /// from the input, and the independent re-check agrees.
    #[test]
    fn selected_subsets_respect_the_bound(seed in any::<u64>(), shape in 0usize..3, count in 3usize..7) {
        let (d, k) = [(1, 0), (1, 1), (2, 0)][shape];
        let mut r = rng(seed);
        let e = random_set(&mut r, count, d, k);
        let window = Window::cube(d, -1.0, 1.0);
        match select_dense_subgroup_generators(&e, 0.25, &window, BOUND) {
            Ok(cert) => {
                prop_assert!(cert.subset.len() <= 3 * d + 2 * k);
                for (p, &i) in cert.subset.iter().zip(&cert.subset_indices) {
                    prop_assert_eq!(p, &e[i]);
                }
                let rv = reverify(&cert, cert.delta);
                prop_assert!(rv.covered, "{:?}", rv);
            }
            Err(Error::NotDenseAtBudget { worst_distance, .. }) => prop_assert!(worst_distance > 0.0),
            Err(Error::HypothesisViolated(_)) => {}
            Err(e) => prop_assert!(false, "unexpected {e}"),
        }
    }
}

#[test]
fn group_certificate_survives_random_spot_checks() {
    let e = fixtures::density_d1k1();
    let window = Window::default_for(1);
    let cert = select_dense_subgroup_generators(&e, 0.1, &window, BOUND).unwrap();
    let pts = witness_points(&cert);
    let mut r = rng(11);
    for _ in 0..500 {
        let (v, c) = random_point(&mut r, &window, &[0.0], 1);
        let dist = nearest(&v, &c, &pts);
        assert!(dist <= 0.1, "({v:?}, {c:?}) at {dist}");
    }
}

/// Points of v_F + (cone ∩ window) are within δ of a non-negative
/// combination Σ cᵢfᵢ.
#[test]
fn semigroup_witnesses_are_genuine() {
    let e = fixtures::density_d1k1();
    let window = Window::default_for(1);
    let (v_f, cert) = semigroup_cone_density(&e, 0.1, &window, BOUND).unwrap();
    assert!(cert.witnesses.iter().flatten().all(|&c| c >= 0));
    let pts = witness_points(&cert);
    let mut r = rng(12);
    let mut checked = 0;
    while checked < 100 {
        let (v, c) = random_point(&mut r, &window, &v_f, 1);
        // both generators have positive V-part, so the cone is the half-line
        if v[0] < v_f[0] {
            continue;
        }
        let dist = nearest(&v, &c, &pts);
        assert!(dist <= 0.1, "({v:?}, {c:?}) at {dist}");
        checked += 1;
    }
    assert!(reverify(&cert, cert.delta).covered);
}

#[test]
fn reverification_rejects_tampered_certificates() {
    let e = fixtures::density_d1k1();
    let (_, mut cert) = semigroup_cone_density(&e, 0.1, &Window::default_for(1), BOUND).unwrap();
    cert.witnesses[0][0] = -1;
    let rv = reverify(&cert, cert.delta);
    assert!(!rv.covered);
    assert_eq!(rv.bad_witnesses, 1);

    let (_, mut cert) = semigroup_cone_density(&e, 0.1, &Window::default_for(1), BOUND).unwrap();
    cert.witnesses.truncate(cert.witnesses.len() / 2);
    assert!(!reverify(&cert, cert.delta).covered);
}

#[test]
fn covering_is_monotone_in_delta() {
    let e = fixtures::density_d1k1();
    let window = Window::default_for(1);
    let mut prev = false;
    for delta in [0.01, 0.02, 0.05, 0.1, 0.2, 0.4] {
        let ok = select_dense_subgroup_generators(&e, delta, &window, BOUND).is_ok();
        assert!(ok || !prev, "covered below {delta} but not at it");
        prev = ok;
    }
    assert!(prev);
    // a certificate at δ also passes the re-check at any larger tolerance
    let cert = select_dense_subgroup_generators(&e, 0.1, &window, BOUND).unwrap();
    assert!(reverify(&cert, 0.2).covered);
}

/// A single progression {m·a : m ≥ 0} on the line is δ-dense in its
/// half-line exactly when δ ≥ a/2. Certificates cover whole cells of
/// radius δ/4, so they only succeed once (3/4)δ ≥ a/2.
#[test]
fn single_progression_threshold() {
    let a = 0.8;
    let f = vec![TorusPoint::new(vec![a], vec![])];
    assert_eq!(progression_threshold(&f[0]), Some(a / 2.0));
    let window = Window::cube(1, 0.0, 4.0);
    let (_, cert) = semigroup_cone_density(&f, 0.6, &window, BOUND).unwrap();
    assert_eq!(cert.threshold, Some(0.4));
    assert!(cert.covering_radius <= a / 2.0 + 1e-9);
    assert!(semigroup_cone_density(&f, 0.39, &window, BOUND).is_err());
}

#[test]
fn invalid_windows_are_refused() {
    let e = fixtures::density_d1k1();
    let bad = Window { lo: vec![1.0], hi: vec![0.0] };
    assert!(matches!(select_dense_subgroup_generators(&e, 0.1, &bad, BOUND), Err(Error::InvalidInput(_))));
    assert!(matches!(select_dense_subgroup_generators(&e, 0.1, &Window::default_for(2), BOUND), Err(Error::InvalidInput(_))));
}

/// The Jordan projections of words in an SL(3) Schottky triple follow the
/// predicted lattice within 2l·δ̂, and the translated semigroup certificate
/// holds.
#[test]
fn sl3_triple_bridge() {
    let fx = fixtures::sl3_triple();
    let fam = build_schottky(&fx.seeds, 0.2, 0.1, fx.max_power).unwrap();
    let b = jordan_density_bridge(&fam, 0.3, &Window::default_for(2), BridgeParams::default()).unwrap();
    assert_eq!(b.l, 3);
    assert!(b.residual_pass, "residual {} vs bound {}", b.prediction_residual, b.delta_total - b.certificate.delta);
    assert!(b.certificate.covered);
    assert!(reverify(&b.certificate, b.certificate.delta).covered);
    assert!((b.delta_total - (0.3 + 6.0 * b.delta_hat)).abs() < 1e-12);
}
