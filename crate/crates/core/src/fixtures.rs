//! Reference families used by `verify`, the tests and the demo.

use nalgebra::DVector;

use crate::density::TorusPoint;
use crate::group::{CartanVector, GroupElement, Mat};
use crate::sampling::{haar_so, rng};
use crate::schottky::ConeEstimate;

/// Seeds and parameters for [`build_schottky`](crate::schottky::build_schottky).
#[derive(Debug, Clone)]
pub struct SchottkyFixture {
    pub name: &'static str,
    pub seeds: Vec<GroupElement>,
    pub r: f64,
    pub eps: f64,
    pub max_power: u32,
}

/// Rotations for the SL(3) families. Seed 46 maximizes the smallest
/// d(g_i⁺, ∂𝖻(g_j⁻)) over the first 300 seeds, about 1.35.
const CONJUGATOR_SEED: u64 = 46;

fn diag(d: &[f64]) -> GroupElement {
    GroupElement::new(Mat::from_diagonal(&DVector::from_column_slice(d))).expect("det 1 by construction")
}

fn exp_diag3(a: f64, b: f64) -> GroupElement {
    diag(&[a.exp(), b.exp(), (-a - b).exp()])
}

fn conjugated(bases: &[GroupElement]) -> Vec<GroupElement> {
    let mut r = rng(CONJUGATOR_SEED);
    let ks: Vec<GroupElement> = bases
        .iter()
        .map(|b| GroupElement::new(haar_so(&mut r, b.n())).expect("rotation"))
        .collect();
    bases.iter().zip(&ks).map(|(b, k)| b.conjugate_by(k)).collect()
}

/// diag(9, 1/9) and its conjugate by the rotation of angle π/4.
///
/// The rotation by π/2 would swap the two fixed points and give a pair
/// that is not generic.
pub fn sl2_pair() -> SchottkyFixture {
    let a = diag(&[9.0, 1.0 / 9.0]);
    let c = std::f64::consts::FRAC_1_SQRT_2;
    let rot = GroupElement::new(Mat::from_row_slice(2, 2, &[c, -c, c, c])).expect("rotation");
    SchottkyFixture {
        name: "sl2-pair",
        seeds: vec![a.clone(), a.conjugate_by(&rot)],
        r: 0.12,
        eps: 0.05,
        max_power: 8,
    }
}

/// Like [`sl2_pair`] but with translation lengths in irrational ratio.
pub fn sl2_irrational_pair() -> SchottkyFixture {
    let c = std::f64::consts::FRAC_1_SQRT_2;
    let rot = GroupElement::new(Mat::from_row_slice(2, 2, &[c, -c, c, c])).expect("rotation");
    SchottkyFixture {
        name: "sl2-irrational-pair",
        seeds: vec![diag(&[9.0, 1.0 / 9.0]), diag(&[7.0, 1.0 / 7.0]).conjugate_by(&rot)],
        r: 0.12,
        eps: 0.05,
        max_power: 8,
    }
}

/// Three positive loxodromic elements of SL(3) with rationally independent
/// log-spectra.
pub fn sl3_triple() -> SchottkyFixture {
    let bases = [
        exp_diag3(0.9 * 5f64.sqrt(), std::f64::consts::FRAC_1_PI),
        exp_diag3(std::f64::consts::E - 0.3, -std::f64::consts::SQRT_2 / 4.0),
        exp_diag3(1.618034 + 0.6, 3f64.sqrt() / 3.0),
    ];
    SchottkyFixture {
        name: "sl3-triple",
        seeds: conjugated(&bases),
        r: 0.1,
        eps: 0.05,
        max_power: 12,
    }
}

/// An SL(3) family whose sign group has order 4: the first two generators
/// carry the sign vectors (−,−,+) and (+,−,−) and get odd certified powers.
/// The spectra point in different directions so the limit cone is wide.
pub fn sl3_engineered() -> SchottkyFixture {
    let bases = [
        diag(&[-20.0, -1.0, 1.0 / 20.0]),
        diag(&[60.0, -0.5, -1.0 / 30.0]),
        diag(&[10.0, 2.0, 1.0 / 20.0]),
    ];
    SchottkyFixture {
        name: "sl3-engineered",
        seeds: conjugated(&bases),
        r: 0.2,
        eps: 0.1,
        max_power: 12,
    }
}

/// Word length used for the sign group and the cone of the engineered family.
pub const ENGINEERED_WORD_LENGTH: usize = 4;
/// θ-window and orthogonal tolerance for the mixing probe.
pub const PROBE_WINDOW: (f64, f64) = (20.0, 60.0);
pub const PROBE_DELTA0: f64 = 1.0;

/// An interior direction (normalized mean of the hull rays) and an exterior
/// one (the interior direction reflected through the last hull ray).
pub fn probe_directions(cone: &ConeEstimate) -> (CartanVector, CartanVector) {
    let n = cone.hull[0].n();
    let sum = cone.hull.iter().fold(CartanVector::zero(n), |acc, h| acc.add(h));
    let interior = sum.normalized();
    let last = &cone.hull[cone.hull.len() - 1];
    let exterior = last.scale(2.0).sub(&interior).normalized();
    (interior, exterior)
}

/// (1, 0) and (√2, golden-ratio fractional part) in ℝ × ℝ/ℤ.
pub fn density_d1k1() -> Vec<TorusPoint> {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    vec![
        TorusPoint::new(vec![1.0], vec![0.0]),
        TorusPoint::new(vec![2f64.sqrt()], vec![phi]),
    ]
}
