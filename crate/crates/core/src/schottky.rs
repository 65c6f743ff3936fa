//! Strong Schottky semigroups: construction, word enumeration, limit cones,
//! sign groups, component labels, the discrete decorrelation check and the
//! Jordan-line probe.

use serde::Serialize;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::flag::{cell_margin, flag_distance, is_transverse, proper_minors, Flag};
use crate::group::{AMElement, CartanVector, GroupElement, Mat, SignVector};
use crate::linalg::ExteriorPowers;
use crate::loxodromy::{
    act_power, certify_r_eps, classify, cocycle_power, extended_jordan, ratio_lox, LoxodromicData,
    REpsCertificate,
};
use crate::sections::{base_representative, cocycle_with, BHCoordinates, Section};

/// Grid size used when certifying generators.
pub const CERT_GRID: usize = 400;
/// Default cap on enumerated words.
pub const DEFAULT_WORD_CAP: usize = 200_000;

#[derive(Debug, Clone, Serialize)]
pub struct SchottkyFamily {
    pub generators: Vec<LoxodromicData>,
    /// exponent applied to each seed
    pub powers: Vec<u32>,
    pub r: f64,
    pub eps: f64,
    pub certificates: Vec<REpsCertificate>,
    /// entry (i, j) is d(g_i⁺, ∂𝖻(g_j⁻))
    pub pairwise_margins: Vec<Vec<f64>>,
    /// compact section over 𝖻(g_i⁻), M-translated so that the ratio
    /// ℛ(g_1; g_i⁺) between chart 1 and chart i has trivial M-part
    pub charts: Vec<Section>,
}

impl SchottkyFamily {
    pub fn n(&self) -> usize {
        self.generators[0].g.n()
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// g_{w₀}·g_{w₁}⋯ as a matrix. Long words lose their small singular
    /// directions; use [`word_powers`](Self::word_powers) for spectra.
    pub fn word_element(&self, word: &[u8]) -> GroupElement {
        let mut g = GroupElement::identity(self.n());
        for &i in word {
            g = g.mul(&self.generators[i as usize].g);
        }
        g
    }

    pub fn word_powers(&self, word: &[u8]) -> ExteriorPowers {
        let mut e = ExteriorPowers::identity(self.n());
        for &i in word {
            e = e.mul(&ExteriorPowers::of(self.generators[i as usize].g.matrix()));
        }
        e
    }

    /// BH coordinates (g_i⁺, g_i⁻; e)_{chart i}, the basepoint used for labels.
    pub fn base_point(&self, i: usize) -> BHCoordinates {
        let g = &self.generators[i];
        BHCoordinates {
            xi: g.attracting.clone(),
            xi_check: g.repelling.clone(),
            x: AMElement::identity(self.n()),
            section: self.charts[i].clone(),
        }
    }
}

fn chart_sections(generators: &[LoxodromicData]) -> Result<Vec<Section>> {
    let plain: Vec<Section> = generators
        .iter()
        .map(|g| Section::compact(g.repelling.clone()))
        .collect();
    let mut charts = vec![plain[0].clone()];
    for j in 1..generators.len() {
        let rho = ratio_lox(&plain[0], &plain[j], &generators[0], &generators[j].attracting)?;
        charts.push(plain[j].right_mul_m(&rho.m));
    }
    Ok(charts)
}

/// Replaces each seed by its smallest (r, ε)-certified power and checks the
/// strong Schottky margins d(g_i⁺, ∂𝖻(g_j⁻)) ≥ 6r for all i, j. Distinct
/// seeds must also keep their fixed flags 2ε apart.
pub fn build_schottky(seeds: &[GroupElement], r: f64, eps: f64, max_power: u32) -> Result<SchottkyFamily> {
    if seeds.is_empty() {
        return Err(Error::InvalidInput("no seeds".into()));
    }
    let n = seeds[0].n();
    if seeds.iter().any(|g| g.n() != n) {
        return Err(Error::InvalidInput("seeds have different sizes".into()));
    }
    let cfg = Config::default();
    let base: Vec<LoxodromicData> = seeds.iter().map(|g| classify(g, &cfg)).collect::<Result<_>>()?;
    let l = base.len();
    // powers share fixed flags, so margins and genericity are decided now
    let mut margins = vec![vec![0.0; l]; l];
    for i in 0..l {
        for j in 0..l {
            let a = &base[i].attracting;
            let b = &base[j].repelling;
            if !is_transverse(a, b) {
                return Err(Error::NotGeneric { i, j, margin: 0.0, required: 6.0 * r });
            }
            margins[i][j] = cell_margin(a, b)?;
        }
    }
    // ping-pong needs disjoint ε-balls, so distinct seeds may not share or
    // nearly share a fixed flag
    for i in 0..l {
        for j in i + 1..l {
            for (a, b) in [
                (&base[i].attracting, &base[j].attracting),
                (&base[i].repelling, &base[j].repelling),
            ] {
                let d = flag_distance(a, b);
                if d < 2.0 * eps {
                    return Err(Error::NotGeneric { i, j, margin: d, required: 2.0 * eps });
                }
            }
        }
    }
    for i in 0..l {
        for j in 0..l {
            if margins[i][j] < 6.0 * r {
                return Err(Error::NotGeneric { i, j, margin: margins[i][j], required: 6.0 * r });
            }
        }
    }
    let mut generators = Vec::with_capacity(l);
    let mut powers = Vec::with_capacity(l);
    let mut certificates = Vec::with_capacity(l);
    for (idx, b) in base.iter().enumerate() {
        let mut done = None;
        for p in 1..=max_power {
            let mut candidate = b.power(p);
            // gᵖ as a matrix is fine here: max_power keeps it moderate
            candidate.g = b.g.pow(p);
            match certify_r_eps(&candidate, r, eps, CERT_GRID) {
                Ok(c) => {
                    done = Some((candidate, p, c));
                    break;
                }
                Err(Error::CertificationFailed { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        let Some((g, p, c)) = done else {
            return Err(Error::CannotCertify { seed: idx, max_power });
        };
        generators.push(g);
        powers.push(p);
        certificates.push(c);
    }
    let charts = chart_sections(&generators)?;
    Ok(SchottkyFamily {
        generators,
        powers,
        r,
        eps,
        certificates,
        pairwise_margins: margins,
        charts,
    })
}

/// Spectral data of one positive word.
#[derive(Debug, Clone, Serialize)]
pub struct WordData {
    pub word: Vec<u8>,
    pub lambda: CartanVector,
    /// smallest relative gap between consecutive eigenvalue moduli
    pub rel_gap: f64,
    /// M-part of ℒ, when the word is loxodromic
    pub signs: Option<SignVector>,
}

fn word_data(word: Vec<u8>, e: &ExteriorPowers) -> WordData {
    let (lambda, rel_gap, s) = e.spectrum();
    let signs = if rel_gap > 0.0 { SignVector::round(&s, 0.5) } else { None };
    WordData { word, lambda, rel_gap, signs }
}

fn total_words(l: usize, max_len: usize) -> usize {
    let mut total = 0usize;
    let mut level = 1usize;
    for _ in 0..max_len {
        level = level.saturating_mul(l);
        total = total.saturating_add(level);
    }
    total
}

/// All positive words of length 1..=max_len, breadth first and
/// lexicographic within a length.
pub fn enumerate_words(fam: &SchottkyFamily, max_len: usize, cap: usize) -> Result<Vec<WordData>> {
    let needed = total_words(fam.len(), max_len);
    if needed > cap {
        return Err(Error::BudgetExceeded { needed, cap });
    }
    Ok(enumerate_budget(fam, needed))
}

/// The first `budget` words in breadth-first order.
pub fn enumerate_budget(fam: &SchottkyFamily, budget: usize) -> Vec<WordData> {
    let gens: Vec<ExteriorPowers> = fam
        .generators
        .iter()
        .map(|g| ExteriorPowers::of(g.g.matrix()))
        .collect();
    let l = gens.len();
    let mut out = Vec::with_capacity(budget);
    let mut level: Vec<(Vec<u8>, ExteriorPowers)> = Vec::new();
    for (i, e) in gens.iter().enumerate() {
        if out.len() == budget {
            return out;
        }
        out.push(word_data(vec![i as u8], e));
        level.push((vec![i as u8], e.clone()));
    }
    while out.len() < budget {
        let room = budget - out.len();
        let parents = level.len().min(room.div_ceil(l));
        let extend = |(w, e): &(Vec<u8>, ExteriorPowers)| -> Vec<(Vec<u8>, ExteriorPowers, WordData)> {
            gens.iter()
                .enumerate()
                .map(|(j, gj)| {
                    let mut child = w.clone();
                    child.push(j as u8);
                    let ce = e.mul(gj);
                    let d = word_data(child.clone(), &ce);
                    (child, ce, d)
                })
                .collect()
        };
        #[cfg(feature = "parallel")]
        let next: Vec<(Vec<u8>, ExteriorPowers, WordData)> = {
            use rayon::prelude::*;
            level[..parents].par_iter().flat_map_iter(extend).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let next: Vec<(Vec<u8>, ExteriorPowers, WordData)> =
            level[..parents].iter().flat_map(extend).collect();
        level = Vec::with_capacity(next.len());
        for (w, e, d) in next {
            if out.len() == budget {
                break;
            }
            out.push(d);
            level.push((w, e));
        }
    }
    out
}

// ---------------------------------------------------------------- cones

/// Sampled limit cone.
#[derive(Debug, Clone, Serialize)]
pub struct ConeEstimate {
    /// unit directions λ/|λ| of the sampled words
    pub rays: Vec<CartanVector>,
    /// extreme rays of the cone spanned by `rays`
    pub hull: Vec<CartanVector>,
    pub word_length: usize,
    #[serde(skip)]
    pub samples: Vec<WordData>,
}

/// Functional positive on the interior of 𝔞⁺, used to slice cones.
fn slice_functional(n: usize) -> Vec<f64> {
    (0..n).map(|i| (n as f64 - 1.0) / 2.0 - i as f64).collect()
}

/// Affine coordinates of a direction in the slice ⟨·, ρ⟩ = 1, expressed in
/// an orthonormal basis of the hyperplane Σ = 0 with the ρ-direction
/// dropped.
fn slice_coords(v: &CartanVector) -> Vec<f64> {
    let n = v.n();
    let rho = slice_functional(n);
    let s: f64 = v.coords().iter().zip(&rho).map(|(a, b)| a * b).sum();
    let p: Vec<f64> = v.coords().iter().map(|x| x / s).collect();
    // Gram–Schmidt of e_k − e_{k+1} against ρ
    let mut basis: Vec<Vec<f64>> = vec![rho.iter().map(|x| x / norm(&rho)).collect()];
    let mut out = Vec::with_capacity(n.saturating_sub(2));
    for k in 0..n - 1 {
        let mut b = vec![0.0; n];
        b[k] = 1.0;
        b[k + 1] = -1.0;
        for q in &basis {
            let c = dot(&b, q);
            for (bi, qi) in b.iter_mut().zip(q) {
                *bi -= c * qi;
            }
        }
        let nb = norm(&b);
        if nb < 1e-9 {
            continue;
        }
        b.iter_mut().for_each(|x| *x /= nb);
        out.push(dot(&p, &b));
        basis.push(b);
        if out.len() == n - 2 {
            break;
        }
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Maximizes t subject to Σ c_j p_j = target, Σ c_j = 1, c_j ≥ t.
/// Returns None when infeasible.
fn max_min_weight(points: &[Vec<f64>], target: &[f64]) -> Option<f64> {
    use minilp::{ComparisonOp, OptimizationDirection, Problem};
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let t = lp.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    let c: Vec<_> = points.iter().map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect();
    for (k, &tk) in target.iter().enumerate() {
        let row: Vec<_> = c.iter().zip(points).map(|(&v, p)| (v, p[k])).collect();
        lp.add_constraint(&row[..], ComparisonOp::Eq, tk);
    }
    let ones: Vec<_> = c.iter().map(|&v| (v, 1.0)).collect();
    lp.add_constraint(&ones[..], ComparisonOp::Eq, 1.0);
    for &v in &c {
        lp.add_constraint(&[(v, 1.0), (t, -1.0)][..], ComparisonOp::Ge, 0.0);
    }
    // t is bounded by 1/|points| through Σ c_j = 1
    lp.solve().ok().map(|s| s[t])
}

fn extreme_indices(points: &[Vec<f64>]) -> Vec<usize> {
    let dim = points.first().map_or(0, |p| p.len());
    if points.is_empty() {
        return vec![];
    }
    if dim == 0 {
        return vec![0];
    }
    if dim == 1 {
        let (mut lo, mut hi) = (0, 0);
        for (i, p) in points.iter().enumerate() {
            if p[0] < points[lo][0] {
                lo = i;
            }
            if p[0] > points[hi][0] {
                hi = i;
            }
        }
        return if lo == hi { vec![lo] } else { vec![lo, hi] };
    }
    // drop duplicates, then keep the points outside the hull of the rest
    let mut uniq: Vec<usize> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        if !uniq.iter().any(|&j| {
            points[j]
                .iter()
                .zip(p)
                .all(|(a, b)| (a - b).abs() < 1e-9)
        }) {
            uniq.push(i);
        }
    }
    uniq.iter()
        .copied()
        .filter(|&i| {
            let others: Vec<Vec<f64>> = uniq.iter().filter(|&&j| j != i).map(|&j| points[j].clone()).collect();
            others.is_empty() || max_min_weight(&others, &points[i]).is_none()
        })
        .collect()
}

pub fn cone_from_samples(samples: Vec<WordData>, word_length: usize) -> ConeEstimate {
    let rays: Vec<CartanVector> = samples.iter().map(|w| w.lambda.normalized()).collect();
    let pts: Vec<Vec<f64>> = rays.iter().map(slice_coords).collect();
    let hull = extreme_indices(&pts).into_iter().map(|i| rays[i].clone()).collect();
    ConeEstimate { rays, hull, word_length, samples }
}

pub fn limit_cone(fam: &SchottkyFamily, max_len: usize, cap: usize) -> Result<ConeEstimate> {
    Ok(cone_from_samples(enumerate_words(fam, max_len, cap)?, max_len))
}

/// Interior margin of θ: the largest t with θ = Σ c_j h_j over the hull rays
/// (sliced), Σ c_j = 1 and all c_j ≥ t. Negative or None means outside.
pub fn interior_margin(cone: &ConeEstimate, theta: &CartanVector) -> Option<f64> {
    let rho = slice_functional(theta.n());
    if dot(theta.coords(), &rho) <= 0.0 {
        return None;
    }
    let pts: Vec<Vec<f64>> = cone.hull.iter().map(slice_coords).collect();
    let target = slice_coords(theta);
    if target.is_empty() {
        return Some(1.0);
    }
    if target.len() == 1 && pts.len() == 2 {
        // t = min of the two barycentric weights
        let (a, b) = (pts[0][0], pts[1][0]);
        let w = (target[0] - a) / (b - a);
        return Some(w.min(1.0 - w));
    }
    max_min_weight(&pts, &target)
}

pub const INTERIOR_MARGIN: f64 = 1e-6;

pub fn is_interior(cone: &ConeEstimate, theta: &CartanVector) -> bool {
    interior_margin(cone, theta).is_some_and(|t| t > INTERIOR_MARGIN)
}

/// Largest angle between a sampled ray and the hull cone, zero when every
/// ray is inside.
pub fn hull_residual(cone: &ConeEstimate) -> f64 {
    let pts: Vec<Vec<f64>> = cone.hull.iter().map(slice_coords).collect();
    let dim = pts.first().map_or(0, |p| p.len());
    let mut worst = 0.0f64;
    if dim == 1 {
        let lo = pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
        for r in &cone.rays {
            let x = slice_coords(r)[0];
            worst = worst.max(lo - x).max(x - hi);
        }
    } else if dim > 1 {
        for r in &cone.rays {
            if max_min_weight(&pts, &slice_coords(r)).is_none() {
                worst = worst.max(f64::INFINITY);
            }
        }
    }
    worst.max(0.0)
}

// ---------------------------------------------------------------- signs

#[derive(Debug, Clone, Serialize)]
pub struct SignGroupReport {
    pub basis: Vec<SignVector>,
    pub order: u64,
    pub p: usize,
    pub witnesses: Vec<(Vec<u8>, SignVector)>,
    /// words whose ℒ M-part could be read off
    pub scanned: usize,
    #[serde(skip)]
    echelon: Vec<(u64, u32)>,
}

impl SignGroupReport {
    fn empty() -> Self {
        SignGroupReport {
            basis: vec![],
            order: 1,
            p: 0,
            witnesses: vec![],
            scanned: 0,
            echelon: vec![],
        }
    }

    /// Reduces sign bits modulo the span of the basis.
    fn reduce(&self, mut bits: u64) -> u64 {
        for &(row, pivot) in &self.echelon {
            if bits >> pivot & 1 == 1 {
                bits ^= row;
            }
        }
        bits
    }

    /// Inserts a vector, returning whether it enlarged the span.
    fn insert(&mut self, word: &[u8], s: &SignVector) -> bool {
        let bits = self.reduce(s.to_bits());
        if bits == 0 {
            return false;
        }
        let pivot = 63 - bits.leading_zeros();
        for e in self.echelon.iter_mut() {
            if e.0 >> pivot & 1 == 1 {
                e.0 ^= bits;
            }
        }
        self.echelon.push((bits, pivot));
        self.basis.push(s.clone());
        self.witnesses.push((word.to_vec(), s.clone()));
        self.p += 1;
        self.order *= 2;
        true
    }

    pub fn contains(&self, s: &SignVector) -> bool {
        self.reduce(s.to_bits()) == 0
    }

    /// Canonical representative of the coset s·M_Γ.
    pub fn coset_representative(&self, s: &SignVector) -> SignVector {
        SignVector::from_bits(self.reduce(s.to_bits()), s.n())
    }

    /// Index of the coset s·M_Γ in M/M_Γ, counting over the non-pivot bits.
    pub fn coset_index(&self, s: &SignVector) -> usize {
        let bits = self.reduce(s.to_bits());
        let pivots: Vec<u32> = self.echelon.iter().map(|e| e.1).collect();
        let mut idx = 0usize;
        let mut k = 0;
        for b in 0..s.n().saturating_sub(1) as u32 {
            if pivots.contains(&b) {
                continue;
            }
            if bits >> b & 1 == 1 {
                idx |= 1 << k;
            }
            k += 1;
        }
        idx
    }

    /// Coordinates of s in the basis, if s ∈ M_Γ.
    pub fn coordinates(&self, s: &SignVector) -> Option<Vec<u8>> {
        let p = self.basis.len();
        (0u64..1 << p).find_map(|mask| {
            let mut acc = 0u64;
            for (i, b) in self.basis.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    acc ^= b.to_bits();
                }
            }
            (acc == s.to_bits()).then(|| (0..p).map(|i| (mask >> i & 1) as u8).collect())
        })
    }
}

pub fn sign_group_from_words(words: &[WordData]) -> SignGroupReport {
    let mut rep = SignGroupReport::empty();
    for w in words {
        if let Some(s) = &w.signs {
            rep.scanned += 1;
            rep.insert(&w.word, s);
        }
    }
    rep
}

pub fn sign_group(fam: &SchottkyFamily, max_len: usize, cap: usize) -> Result<SignGroupReport> {
    Ok(sign_group_from_words(&enumerate_words(fam, max_len, cap)?))
}

// ---------------------------------------------------------------- labels

/// Coset of M_Γ reached by a word from a start point.
#[derive(Debug, Clone, Serialize)]
pub struct ComponentLabel {
    pub representative: SignVector,
    pub index: usize,
    pub end: BHCoordinates,
}

/// Moves `start` by the word, letter by letter from the right, writing each
/// intermediate point in the chart of the letter just applied. The label is
/// the coset in M/M_Γ of the M-part of the final fibre coordinate.
pub fn component_label_transport(
    word: &[u8],
    fam: &SchottkyFamily,
    start: &BHCoordinates,
    report: &SignGroupReport,
) -> Result<ComponentLabel> {
    let cfg = Config::default();
    let mut c = start.clone();
    for &letter in word.iter().rev() {
        let i = letter as usize;
        if i >= fam.len() {
            return Err(Error::InvalidInput(format!("letter {i} is not a generator")));
        }
        c = c.left_act(&fam.generators[i].g, &fam.charts[i], &cfg)?;
    }
    Ok(ComponentLabel {
        representative: report.coset_representative(&c.x.m),
        index: report.coset_index(&c.x.m),
        end: c,
    })
}

// ---------------------------------------------------------------- decorrelation

#[derive(Debug, Clone, Serialize)]
pub struct DecorrelationRow {
    pub nu: Vec<u8>,
    pub exponents: Vec<u32>,
    pub m_part: SignVector,
    /// coordinates of the M-part in the basis; None if outside M_Γ
    pub attained: Option<Vec<u8>>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecorrelationReport {
    pub p: usize,
    pub n: u32,
    /// the witnesses actually used, after conjugation
    pub witnesses: Vec<GroupElement>,
    pub section_offsets: Vec<SignVector>,
    pub rows: Vec<DecorrelationRow>,
    pub pass: bool,
}

/// Whether ξ and η lie in the same connected component of
/// 𝖻(ξ̌) ∩ 𝖻(ζ̌), tested on the straight segment between them in the
/// unipotent chart of 𝖻(ξ̌).
fn same_component(xi: &Flag, eta: &Flag, xi_check: &Flag, zeta_check: &Flag) -> bool {
    let cfg = Config::default();
    let s = Section::unipotent(xi_check.clone());
    let (Ok(a), Ok(b)) = (s.eval(xi, &cfg), s.eval(eta, &cfg)) else {
        return false;
    };
    let h = base_representative(xi_check);
    let hz = base_representative(zeta_check);
    // the chart coordinate is hᵀ·s(ξ), a lower unitriangular matrix
    let ua = h.transpose() * a.matrix();
    let ub = h.transpose() * b.matrix();
    let n = xi.n();
    let sign_pattern = |u: &Mat| -> Option<Vec<bool>> {
        let m = hz.transpose() * &h * u;
        let minors = proper_minors(&(crate::flag::k_iota(n) * m));
        if minors.iter().any(|x| x.abs() < 1e-12) {
            None
        } else {
            Some(minors.iter().map(|x| *x > 0.0).collect())
        }
    };
    let Some(start) = sign_pattern(&ua) else { return false };
    (1..=64).all(|k| {
        let t = k as f64 / 64.0;
        let u = &ua * (1.0 - t) + &ub * t;
        sign_pattern(&u).as_ref() == Some(&start)
    })
}

/// Arranges the witnesses so that each (h_{i−1}⁺, h_i⁻) is transverse,
/// conjugating by generators and their inverses where needed.
fn arrange_witnesses(fam: &SchottkyFamily, report: &SignGroupReport, xi0: &Flag) -> Result<Vec<LoxodromicData>> {
    let cfg = Config::default();
    let mut out: Vec<LoxodromicData> = Vec::new();
    let mut prev = xi0.clone();
    let mut conjugators = vec![GroupElement::identity(fam.n())];
    for g in &fam.generators {
        conjugators.push(g.g.clone());
        conjugators.push(g.g.inverse());
    }
    for (word, _) in &report.witnesses {
        let h = fam.word_element(word);
        // the witness itself when it is already transverse, otherwise the
        // conjugate with the widest margin
        let mut chosen = None;
        let mut best = 0.0f64;
        for (k, u) in conjugators.iter().enumerate() {
            let Ok(c) = classify(&u.inverse().mul(&h).mul(u), &cfg) else {
                continue;
            };
            if !is_transverse(&prev, &c.repelling) {
                continue;
            }
            let m = cell_margin(&prev, &c.repelling)?;
            if m > best {
                best = m;
                chosen = Some(c);
            }
            if k == 0 {
                break;
            }
        }
        let c = chosen.ok_or_else(|| Error::HypothesisViolated("no conjugate of a witness is transverse".into()))?;
        prev = c.attracting.clone();
        out.push(c);
    }
    Ok(out)
}

/// For every ν ∈ {0,1}^p evaluates the M-part of
/// β_{s_p·m_p, s_0}(h_p^{2n+ν_p}⋯h_1^{2n+ν_1}, ξ0) and compares its
/// coordinates in the basis with ν. The base point ξ0 is the attracting
/// flag of the first generator.
pub fn decorrelation_discret_check(fam: &SchottkyFamily, report: &SignGroupReport, n: u32) -> Result<DecorrelationReport> {
    let p = report.p;
    if p == 0 {
        return Ok(DecorrelationReport {
            p,
            n,
            witnesses: vec![],
            section_offsets: vec![],
            rows: vec![],
            pass: true,
        });
    }
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    let xi0 = fam.generators[0].attracting.clone();
    let hs = arrange_witnesses(fam, report, &xi0)?;
    // ℒ of the arranged witnesses gives the basis actually used
    let plain: Vec<Section> = hs.iter().map(|h| Section::compact(h.repelling.clone())).collect();
    let mut basis = SignGroupReport::empty();
    for (i, h) in hs.iter().enumerate() {
        let l = extended_jordan(&plain[i], h)?;
        if !basis.insert(&[i as u8], &l.m) {
            return Err(Error::HypothesisViolated("witness M-parts are dependent".into()));
        }
    }
    // s_0 = s_1, then m_i kills the M-part of ℛ(h_i; h_{i−1}⁺)
    let s0 = plain[0].clone();
    let mut sections: Vec<Section> = Vec::with_capacity(p);
    let mut offsets = Vec::with_capacity(p);
    for i in 0..p {
        let prev_section = if i == 0 { &s0 } else { &sections[i - 1] };
        let prev_point = if i == 0 { &xi0 } else { &hs[i - 1].attracting };
        let rho = ratio_lox(&plain[i], prev_section, &hs[i], prev_point)?;
        offsets.push(rho.m.clone());
        sections.push(plain[i].right_mul_m(&rho.m));
    }
    let mut rows = Vec::with_capacity(1 << p);
    for mask in 0u32..1 << p {
        let nu: Vec<u8> = (0..p).map(|i| (mask >> i & 1) as u8).collect();
        let exps: Vec<u32> = nu.iter().map(|&v| 2 * n + v as u32).collect();
        let mut x = xi0.clone();
        let mut acc = AMElement::identity(fam.n());
        for i in 0..p {
            let prev_section = if i == 0 { &s0 } else { &sections[i - 1] };
            let b = cocycle_power(&sections[i], prev_section, &hs[i], exps[i], &x)?;
            acc = b.mul(&acc);
            x = act_power(&hs[i].g, exps[i], &x);
            // ping-pong containment at the chosen n
            if i + 1 < p && !same_component(&x, &hs[i].attracting, &hs[i].repelling, &hs[i + 1].repelling) {
                return Err(Error::NeedLargerN { n, step: i + 1 });
            }
        }
        let attained = basis.coordinates(&acc.m);
        let pass = attained.as_deref() == Some(&nu[..]);
        rows.push(DecorrelationRow {
            nu,
            exponents: exps,
            m_part: acc.m,
            attained,
            pass,
        });
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(DecorrelationReport {
        p,
        n,
        witnesses: hs.iter().map(|h| h.g.clone()).collect(),
        section_offsets: offsets,
        rows,
        pass,
    })
}

/// Direct evaluation of β_{s1,s0}(g, ξ) for a word, letter by letter.
pub fn word_cocycle(fam: &SchottkyFamily, word: &[u8], s1: &Section, s0: &Section, xi: &Flag) -> Result<AMElement> {
    let cfg = Config::default();
    let mut x = xi.clone();
    let mut acc = AMElement::identity(fam.n());
    let mut prev = s0.clone();
    for (k, &letter) in word.iter().rev().enumerate() {
        let i = letter as usize;
        let target = if k + 1 == word.len() { s1 } else { &fam.charts[i] };
        let (b, _) = cocycle_with(target, &prev, &fam.generators[i].g, &x, &cfg)?;
        acc = b.mul(&acc);
        x = crate::flag::act(&fam.generators[i].g, &x);
        prev = target.clone();
    }
    Ok(acc)
}

// ---------------------------------------------------------------- probe

#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub theta: CartanVector,
    pub window: (f64, f64),
    pub delta0: f64,
    pub words: usize,
    pub interior: bool,
    pub interior_margin: Option<f64>,
    pub warning: Option<String>,
    pub hits: usize,
    /// sorted θ-components of the hits
    pub positions: Vec<f64>,
    pub max_gap: Option<f64>,
    pub mean_gap: Option<f64>,
}

/// Projects λ of the first `budget` words onto the θ-line. A hit is a word
/// whose distance to the line is below δ₀ and whose θ-component lies in the
/// window. Runs with a warning when θ is not interior to the sampled cone.
pub fn jordan_line_density_probe(
    fam: &SchottkyFamily,
    theta: &CartanVector,
    window: (f64, f64),
    delta0: f64,
    budget: usize,
) -> Result<ProbeReport> {
    if theta.n() != fam.n() {
        return Err(Error::InvalidInput("theta has the wrong dimension".into()));
    }
    if !(window.0 < window.1) || !(delta0 > 0.0) {
        return Err(Error::InvalidInput("need window.0 < window.1 and delta0 > 0".into()));
    }
    let theta = theta.normalized();
    let words = enumerate_budget(fam, budget);
    let count = words.len();
    let max_len = words.last().map_or(0, |w| w.word.len());
    let cone = cone_from_samples(words, max_len);
    let margin = interior_margin(&cone, &theta);
    let interior = margin.is_some_and(|t| t > INTERIOR_MARGIN);
    let mut positions: Vec<f64> = cone
        .samples
        .iter()
        .filter_map(|w| {
            let t = w.lambda.dot(&theta);
            let dev = w.lambda.sub(&theta.scale(t)).norm();
            (dev < delta0 && t >= window.0 && t <= window.1).then_some(t)
        })
        .collect();
    positions.sort_by(f64::total_cmp);
    let gaps: Vec<f64> = positions.windows(2).map(|w| w[1] - w[0]).collect();
    let max_gap = gaps.iter().copied().reduce(f64::max);
    let mean_gap = (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64);
    Ok(ProbeReport {
        theta,
        window,
        delta0,
        words: count,
        interior,
        interior_margin: margin,
        warning: (!interior).then(|| Error::ThetaOutsideCone.to_string()),
        hits: positions.len(),
        positions,
        max_gap,
        mean_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sl2_pair() -> Vec<GroupElement> {
        let a = GroupElement::new(Mat::from_row_slice(2, 2, &[9.0, 0.0, 0.0, 1.0 / 9.0])).unwrap();
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let rot = GroupElement::new(Mat::from_row_slice(2, 2, &[c, -c, c, c])).unwrap();
        vec![a.clone(), a.conjugate_by(&rot)]
    }

    #[test]
    fn word_counts() {
        assert_eq!(total_words(3, 2), 12);
        assert_eq!(total_words(2, 3), 14);
    }

    #[test]
    fn shared_fixed_flag_is_not_generic() {
        let a = sl2_pair()[0].clone();
        let b = a.pow(2);
        let r = build_schottky(&[a, b], 0.1, 0.05, 4);
        assert!(matches!(r, Err(Error::NotGeneric { .. })), "{r:?}");
    }

    #[test]
    fn budget_is_enforced() {
        let fam = build_schottky(&sl2_pair(), 0.12, 0.05, 6).unwrap();
        assert!(matches!(enumerate_words(&fam, 20, 1000), Err(Error::BudgetExceeded { .. })));
        let w = enumerate_words(&fam, 3, 1000).unwrap();
        assert_eq!(w.len(), 14);
        assert_eq!(w[2].word, vec![0, 0]);
        assert_eq!(enumerate_budget(&fam, 5).len(), 5);
    }

    #[test]
    fn rank_one_cone_is_one_ray() {
        let fam = build_schottky(&sl2_pair(), 0.12, 0.05, 6).unwrap();
        let cone = limit_cone(&fam, 4, 1000).unwrap();
        assert_eq!(cone.hull.len(), 1);
        assert!((cone.hull[0].coords()[0] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn elimination() {
        let mut rep = SignGroupReport::empty();
        let a = SignVector::new(vec![-1, -1, 1]).unwrap();
        let b = SignVector::new(vec![1, -1, -1]).unwrap();
        assert!(rep.insert(&[0], &a));
        assert!(!rep.insert(&[1], &a));
        assert!(rep.insert(&[2], &b));
        assert!(!rep.insert(&[3], &a.mul(&b)));
        assert_eq!(rep.order, 4);
        assert_eq!(rep.coordinates(&a.mul(&b)), Some(vec![1, 1]));
        assert_eq!(rep.coset_index(&a), 0);
    }
}
