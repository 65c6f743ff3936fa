//! Loxodromic elements: fixed flags, extended Jordan projections, ratio
//! maps, (r, ε) certification, equicontinuity constants and the product
//! estimate for generic families.

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::flag::{
    act, boundary_hit, cell_margin, cell_margin_lower_bound, flag_distance, flag_of_matrix,
    is_transverse, k_iota, Flag,
};
use crate::group::{AMElement, CartanVector, GroupElement, Mat, SignVector};
use crate::linalg::{max_abs, orthonormal_frame, ExteriorPowers};
use crate::sampling::{self, haar_flag, random_skew};
use crate::sections::{base_representative, cocycle_with, from_bh_with, transition_with, BHCoordinates, Section};

/// A loxodromic element with its dynamics.
#[derive(Debug, Clone, Serialize)]
pub struct LoxodromicData {
    pub g: GroupElement,
    pub lambda: CartanVector,
    /// signs of the eigenvalues by decreasing modulus, the M-part of
    /// ℒ_{[g⁻]}(g)
    pub signs: SignVector,
    pub attracting: Flag,
    pub repelling: Flag,
    /// h_g with h_g⁻¹·g·h_g = diag(signs)·exp(diag λ)
    pub diagonalizer: GroupElement,
    /// min over consecutive coordinates of λ
    pub gap: f64,
}

impl LoxodromicData {
    /// Data of gᵖ. Fixed flags and diagonalizer are those of g.
    pub fn power(&self, p: u32) -> LoxodromicData {
        LoxodromicData {
            g: self.g.pow(p),
            lambda: self.lambda.scale(p as f64),
            signs: if p % 2 == 0 {
                SignVector::identity(self.signs.n())
            } else {
                self.signs.clone()
            },
            attracting: self.attracting.clone(),
            repelling: self.repelling.clone(),
            diagonalizer: self.diagonalizer.clone(),
            gap: self.gap * p as f64,
        }
    }

    /// g·ξ computed as h_g·D·h_g⁻¹·ξ, with the diagonal applied to rows of
    /// decreasing size, so it stays accurate for high powers where the
    /// matrix g itself has lost its small singular directions.
    pub fn act(&self, xi: &Flag) -> Flag {
        let h = self.diagonalizer.matrix();
        let mut y = self.diagonalizer.inverse().matrix() * xi.rep();
        let top = self.lambda.coords()[0];
        for (i, (&l, &s)) in self.lambda.coords().iter().zip(self.signs.signs()).enumerate() {
            y.row_mut(i).scale_mut(s as f64 * (l - top).exp());
        }
        let f = orthonormal_frame(&y);
        Flag::from_frame_unchecked(orthonormal_frame(&(h * f)))
    }

    /// g⁻¹·ξ, the same way as [`act`](Self::act).
    pub fn act_inverse(&self, xi: &Flag) -> Flag {
        let h = self.diagonalizer.matrix();
        let mut y = self.diagonalizer.inverse().matrix() * xi.rep();
        let bottom = self.lambda.coords()[self.lambda.n() - 1];
        for (i, (&l, &s)) in self.lambda.coords().iter().zip(self.signs.signs()).enumerate() {
            y.row_mut(i).scale_mut(s as f64 * (bottom - l).exp());
        }
        // QR is accurate on row-graded input when the large rows come
        // first, so factor the row-reversed matrix and undo the reversal
        let n = y.nrows();
        let flip = |m: &Mat| Mat::from_fn(n, n, |i, j| m[(n - 1 - i, j)]);
        let f = flip(&orthonormal_frame(&flip(&y)));
        Flag::from_frame_unchecked(orthonormal_frame(&(h * f)))
    }

    /// ℒ_{[g⁻]}(g), known exactly from the classification.
    pub fn jordan_am(&self) -> AMElement {
        AMElement {
            a: self.lambda.clone(),
            m: self.signs.clone(),
        }
    }

    /// The unipotent section [g⁻].
    pub fn repelling_section(&self) -> Section {
        Section::unipotent(self.repelling.clone())
    }
}

/// Null vector of m − μI, from the smallest singular value.
fn eigenvector(m: &Mat, mu: f64) -> Result<DVector<f64>> {
    let n = m.nrows();
    let mut a = m - Mat::identity(n, n) * mu;
    let s = max_abs(&a);
    a /= s;
    let svd = a
        .try_svd(false, true, f64::EPSILON, 10_000)
        .ok_or(Error::NonInvertible)?;
    let vt = svd.v_t.ok_or(Error::NonInvertible)?;
    let mut idx = 0;
    for i in 1..n {
        if svd.singular_values[i] < svd.singular_values[idx] {
            idx = i;
        }
    }
    Ok(vt.row(idx).transpose())
}

pub fn classify(g: &GroupElement, cfg: &Config) -> Result<LoxodromicData> {
    let n = g.n();
    let (lambda, rel_gap, sign_values) = ExteriorPowers::of(g.matrix()).spectrum();
    if !(rel_gap > cfg.tol_lox) {
        return Err(Error::NotLoxodromic { gap: rel_gap });
    }
    let signs = SignVector::round(&sign_values, 0.5).ok_or(Error::NotLoxodromic { gap: rel_gap })?;
    let ginv = g.inverse();
    let mut h = Mat::zeros(n, n);
    for i in 0..n {
        let mu = signs.signs()[i] as f64 * lambda.coords()[i].exp();
        // expanding directions from g, contracting ones from g⁻¹
        let v = if lambda.coords()[i] >= 0.0 {
            eigenvector(g.matrix(), mu)?
        } else {
            eigenvector(ginv.matrix(), 1.0 / mu)?
        };
        h.set_column(i, &v);
    }
    if h.determinant() < 0.0 {
        h.column_mut(0).neg_mut();
    }
    let attracting = flag_of_matrix(&h)?;
    let repelling = flag_of_matrix(&(&h * k_iota(n)))?;
    let coords = BHCoordinates {
        xi: attracting.clone(),
        xi_check: repelling.clone(),
        x: AMElement::identity(n),
        section: Section::unipotent(repelling.clone()),
    };
    let diagonalizer = from_bh_with(&coords, cfg)?;
    let gap = lambda.gap();
    Ok(LoxodromicData {
        g: g.clone(),
        lambda,
        signs,
        attracting,
        repelling,
        diagonalizer,
        gap,
    })
}

/// ℒ_s(g) = β_s(g, g⁺).
pub fn extended_jordan(s: &Section, l: &LoxodromicData) -> Result<AMElement> {
    cocycle_with(s, s, &l.g, &l.attracting, &Config::default()).map(|r| r.0)
}

/// gⁿξ by repeated action, which stays accurate where gⁿ itself would not.
pub fn act_power(g: &GroupElement, n: u32, xi: &Flag) -> Flag {
    let mut x = xi.clone();
    for _ in 0..n {
        x = act(g, &x);
    }
    x
}

/// β_{s1,s0}(gᵖ, ξ) without forming gᵖ. The orbit is followed in the chart
/// [g⁻], which contains it whenever ξ ∈ 𝖻(g⁻), and the result is moved to
/// s1 and s0 by transitions at the two ends.
pub fn cocycle_power(s1: &Section, s0: &Section, l: &LoxodromicData, p: u32, xi: &Flag) -> Result<AMElement> {
    let cfg = Config::default();
    let u = l.repelling_section();
    let (mut acc, _) = transition_with(&u, s0, xi, &cfg)?;
    let mut x = xi.clone();
    for _ in 0..p {
        let (b, _) = cocycle_with(&u, &u, &l.g, &x, &cfg)?;
        acc = b.mul(&acc);
        x = act(&l.g, &x);
    }
    let (t, _) = transition_with(s1, &u, &x, &cfg)?;
    Ok(t.mul(&acc))
}

/// β_{s1,s0}(gᵖ, ξ) read off directly from the leading minors of
/// s1(gᵖξ)⁻¹·gᵖ·s0(ξ), each computed in its own exterior power so that the
/// small diagonal entries keep full relative precision.
pub fn cocycle_of_power(s1: &Section, s0: &Section, g: &GroupElement, p: u32, xi: &Flag) -> Result<AMElement> {
    let cfg = Config::default();
    let n = g.n();
    let target = act_power(g, p, xi);
    let left = s1.eval(&target, &cfg)?.inverse();
    let right = s0.eval(xi, &cfg)?;
    let e = ExteriorPowers::of(left.matrix())
        .mul(&ExteriorPowers::of(g.matrix()).pow(p))
        .mul(&ExteriorPowers::of(right.matrix()));
    let mut logs = Vec::with_capacity(n);
    let mut signs = Vec::with_capacity(n);
    let (mut prev_log, mut prev_sign) = (0.0, 1.0);
    for (lg, sg) in e.leading_minors().into_iter().chain(std::iter::once((0.0, 1.0))) {
        if sg == 0.0 || !lg.is_finite() {
            return Err(Error::NotInBigCell { index: logs.len() + 1, minor: 0.0 });
        }
        logs.push(lg - prev_log);
        signs.push(if sg * prev_sign > 0.0 { 1 } else { -1 });
        prev_log = lg;
        prev_sign = sg;
    }
    Ok(AMElement {
        a: CartanVector::centered(logs),
        m: SignVector::new(signs)?,
    })
}

/// ℛ_{s1,s2}(ξ̌; ξ1, ξ2) = 𝒯_{s1,[ξ̌]}(ξ1)·𝒯_{[ξ̌],s2}(ξ2).
pub fn ratio(s1: &Section, s2: &Section, xi_check: &Flag, xi1: &Flag, xi2: &Flag) -> Result<AMElement> {
    let cfg = Config::default();
    let u = Section::unipotent(xi_check.clone());
    let (t1, _) = transition_with(s1, &u, xi1, &cfg)?;
    let (t2, _) = transition_with(&u, s2, xi2, &cfg)?;
    Ok(t1.mul(&t2))
}

/// ℛ_{s1,s2}(g; ξ) = ℛ_{s1,s2}(g⁻; g⁺, ξ).
pub fn ratio_lox(s1: &Section, s2: &Section, l: &LoxodromicData, xi: &Flag) -> Result<AMElement> {
    ratio(s1, s2, &l.repelling, &l.attracting, xi)
}

/// Right-hand side of β_{s2,s0}(gⁿ, ξ) = ℛ_{s1,s2}(g; gⁿξ)⁻¹·ℒ_{s1}(g)ⁿ·ℛ_{s1,s0}(g; ξ).
pub fn cocycle_via_jordan(
    l: &LoxodromicData,
    n: u32,
    xi: &Flag,
    s0: &Section,
    s1: &Section,
    s2: &Section,
) -> Result<AMElement> {
    let gn_xi = act_power(&l.g, n, xi);
    let left = ratio_lox(s1, s2, l, &gn_xi)?.inverse();
    let mid = extended_jordan(s1, l)?.pow(n as i64);
    let right = ratio_lox(s1, s0, l, xi)?;
    Ok(left.mul(&mid).mul(&right))
}

/// Evidence that an element is (r, ε)-loxodromic at the sampled resolution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct REpsCertificate {
    pub r: f64,
    pub eps: f64,
    /// largest observed difference quotient on the ε-thick basin
    pub lipschitz_bound: f64,
    /// grid points that fell in the ε-thick basin
    pub samples: usize,
    /// d(g⁺, ∂𝖻(g⁻))
    pub fixed_margin: f64,
    /// largest d(gξ, g⁺) over the sampled basin
    pub contraction: f64,
    /// e^{−ℓ_g}, the contraction rate of the differential in the
    /// unipotent chart
    pub decay_rate: f64,
    /// the constant C with lipschitz_bound = C·e^{−ℓ_g}
    pub decay_constant: f64,
}

pub const MIN_GRID: usize = 100;

/// Deterministic grid on the flag variety: equally spaced lines for n = 2,
/// Haar samples from a fixed stream otherwise.
pub fn flag_grid(n: usize, count: usize) -> Vec<Flag> {
    if n == 2 {
        return (0..count)
            .map(|j| {
                let t = std::f64::consts::PI * (j as f64 + 0.5) / count as f64;
                let (s, c) = t.sin_cos();
                Flag::from_frame_unchecked(Mat::from_row_slice(2, 2, &[c, -s, s, c]))
            })
            .collect();
    }
    let mut rng = sampling::rng(0x6772_6964 ^ (n as u64) << 32);
    (0..count).map(|_| haar_flag(&mut rng, n)).collect()
}

/// Whether d(ξ, ∂𝖻(ξ̌)) ≥ t, using the certified minor bound first.
pub(crate) fn margin_at_least(xi: &Flag, xi_check: &Flag, t: f64) -> bool {
    if cell_margin_lower_bound(xi, xi_check) >= t {
        return true;
    }
    cell_margin(xi, xi_check).map(|m| m >= t).unwrap_or(false)
}

pub fn certify_r_eps(l: &LoxodromicData, r: f64, eps: f64, grid: usize) -> Result<REpsCertificate> {
    if !(eps > 0.0 && eps <= r) {
        return Err(Error::InvalidInput(format!("need 0 < eps <= r, got r = {r}, eps = {eps}")));
    }
    if grid < MIN_GRID {
        return Err(Error::UnderResolved { grid, min: MIN_GRID });
    }
    let n = l.g.n();
    let fixed_margin = cell_margin(&l.attracting, &l.repelling)?;
    if r > 0.5 * fixed_margin {
        return Err(Error::CertificationFailed {
            clause: "i",
            observed: r,
            bound: 0.5 * fixed_margin,
        });
    }
    let points: Vec<Flag> = flag_grid(n, grid)
        .into_iter()
        .filter(|x| margin_at_least(x, &l.repelling, eps))
        .collect();
    let images: Vec<Flag> = points.iter().map(|x| l.act(x)).collect();
    let mut contraction = 0.0f64;
    for y in &images {
        contraction = contraction.max(flag_distance(y, &l.attracting));
    }
    if contraction >= eps {
        return Err(Error::CertificationFailed {
            clause: "ii",
            observed: contraction,
            bound: eps,
        });
    }
    // difference quotients: infinitesimal ones at every grid point, plus
    // all nearby grid pairs
    let mut lip = 0.0f64;
    let mut rng = sampling::rng(0x6c69_70 + grid as u64);
    let h = 1e-6;
    for (x, y) in points.iter().zip(&images) {
        for _ in 0..2 {
            let dir = random_skew(&mut rng, n);
            let xp = Flag::from_frame_unchecked(x.rep() * (dir * h).exp());
            let d = flag_distance(x, &xp);
            if d > 0.0 {
                lip = lip.max(flag_distance(y, &l.act(&xp)) / d);
            }
        }
    }
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = flag_distance(&points[i], &points[j]);
            if d > 0.0 && d < 0.25 {
                lip = lip.max(flag_distance(&images[i], &images[j]) / d);
            }
        }
    }
    if lip > eps {
        return Err(Error::CertificationFailed {
            clause: "iii",
            observed: lip,
            bound: eps,
        });
    }
    let decay_rate = (-l.gap).exp();
    Ok(REpsCertificate {
        r,
        eps,
        lipschitz_bound: lip,
        samples: points.len(),
        fixed_margin,
        contraction,
        decay_rate,
        decay_constant: lip / decay_rate,
    })
}

/// Monte-Carlo estimate of δ_{r,ε} at the base η̌₀.
pub fn delta_r_eps(n: usize, r: f64, eps: f64, mc_samples: usize, seed: u64) -> Result<f64> {
    delta_r_eps_at(&Flag::opposite(n), r, eps, mc_samples, seed)
}

const DELTA_CHUNK: usize = 256;

/// Monte-Carlo estimate of
/// sup d_AM(ℛ_s(ξ̌; ξ1, ξ2), e) over s ∈ K_r·k(ξ̌), ξ1 at distance ≥ 3r
/// from ∂𝖻(ξ̌) and ξ2 ∈ B(ξ1, ε).
///
/// The samples do not depend on ε: each ξ2 is drawn at a log-uniform
/// distance in [1e−6·r, r] and kept only when it falls in the ε-ball, so the
/// estimate is non-decreasing in ε at a fixed seed.
pub fn delta_r_eps_at(base: &Flag, r: f64, eps: f64, mc_samples: usize, seed: u64) -> Result<f64> {
    if !(eps > 0.0 && eps <= r) {
        return Err(Error::InvalidInput(format!("need 0 < eps <= r, got r = {r}, eps = {eps}")));
    }
    if mc_samples < 1000 {
        return Err(Error::InvalidInput("delta estimation needs at least 1000 samples".into()));
    }
    let n = base.n();
    let pool = k_r_pool(n, r, seed)?;
    let l = base_representative(base);
    let k_base = Section::compact(base.clone());
    let sections: Vec<Section> = pool
        .iter()
        .map(|c| k_base.translate(&(&l * c * l.transpose())))
        .collect::<Result<_>>()?;
    let chunks = mc_samples.div_ceil(DELTA_CHUNK);
    let run = |chunk: usize| -> f64 {
        let mut rng = sampling::rng(seed ^ 0x5eed_0000_0000 ^ (chunk as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let count = DELTA_CHUNK.min(mc_samples - chunk * DELTA_CHUNK);
        let mut best = 0.0f64;
        for _ in 0..count {
            let s = &sections[rng.random_range(0..sections.len())];
            let xi1 = loop {
                let x = haar_flag(&mut rng, n);
                if margin_at_least(&x, base, 3.0 * r) {
                    break x;
                }
            };
            let rho = r * 10f64.powf(-6.0 * rng.random::<f64>());
            let dir = random_skew(&mut rng, n);
            let xi2 = Flag::from_frame_unchecked(xi1.rep() * (dir * rho).exp());
            if flag_distance(&xi1, &xi2) >= eps {
                continue;
            }
            if let Ok(x) = ratio(s, s, base, &xi1, &xi2) {
                best = best.max(x.distance(&AMElement::identity(n)));
            }
        }
        best
    };
    #[cfg(feature = "parallel")]
    let best = {
        use rayon::prelude::*;
        (0..chunks).into_par_iter().map(run).reduce(|| 0.0, f64::max)
    };
    #[cfg(not(feature = "parallel"))]
    let best = (0..chunks).map(run).fold(0.0, f64::max);
    Ok(best)
}

/// Sample of K_r = {c ∈ K : c·𝒱_r(∂𝖻(η̌₀)) ⊂ 𝒱_{2r}(∂𝖻(η̌₀))}, membership
/// tested on a 16-point mesh of 𝒱_r(∂𝖻(η̌₀)). Always contains M.
fn k_r_pool(n: usize, r: f64, seed: u64) -> Result<Vec<Mat>> {
    let opp = Flag::opposite(n);
    let mut rng = sampling::rng(seed ^ 0x6b72_0000);
    let mut mesh = Vec::with_capacity(16);
    let mut attempts = 0;
    while mesh.len() < 16 {
        attempts += 1;
        if attempts > 10_000 {
            return Err(Error::InvalidInput("could not sample the boundary of the cell".into()));
        }
        let x = haar_flag(&mut rng, n);
        let dir = random_skew(&mut rng, n);
        let Some(b) = boundary_hit(&x, &opp, &dir) else { continue };
        let t = r * rng.random::<f64>();
        let p = Flag::from_frame_unchecked(b.rep() * (random_skew(&mut rng, n) * t).exp());
        if flag_distance(&p, &b) <= r {
            mesh.push(p);
        }
    }
    let mut pool: Vec<Mat> = SignVector::all(n).iter().map(|m| m.to_matrix()).collect();
    let target = pool.len() + 16;
    let mut tries = 0;
    while pool.len() < target && tries < 400 {
        tries += 1;
        let m = SignVector::all(n)[rng.random_range(0..1usize << (n - 1))].to_matrix();
        let c = m * (random_skew(&mut rng, n) * (r * rng.random::<f64>())).exp();
        let inside = mesh.iter().all(|p| {
            let q = Flag::from_frame_unchecked(&c * p.rep());
            !margin_at_least(&q, &opp, 2.0 * r)
        });
        if inside {
            pool.push(c);
        }
    }
    Ok(pool)
}

/// Attracting and repelling flags of the product whose rightmost factor is
/// `factors[0]`, by iterating the factors' actions (and inverse actions)
/// instead of classifying the product matrix, whose small singular
/// directions are lost to rounding for long products.
pub fn product_fixed_flags(factors: &[LoxodromicData]) -> (Flag, Flag) {
    let last = &factors[factors.len() - 1];
    let attracting = fixed_flag(&last.attracting, |x| {
        factors.iter().fold(x.clone(), |acc, g| g.act(&acc))
    });
    let repelling = fixed_flag(&factors[0].repelling, |x| {
        factors.iter().rev().fold(x.clone(), |acc, g| g.act_inverse(&acc))
    });
    (attracting, repelling)
}

/// Limit of ξ, f(ξ), f(f(ξ)), … for a contracting map of flags.
fn fixed_flag(start: &Flag, f: impl Fn(&Flag) -> Flag) -> Flag {
    let mut x = start.clone();
    for _ in 0..1000 {
        let next = f(&x);
        let step = flag_distance(&next, &x);
        x = next;
        if step < 1e-15 {
            break;
        }
    }
    x
}

/// Outcome of the product estimate for a generic family.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub l: usize,
    pub powers: Vec<u32>,
    pub product_lambda: CartanVector,
    pub attracting_distance: f64,
    pub repelling_distance: f64,
    pub eps: f64,
    pub flags_pass: bool,
    pub beta_measured: AMElement,
    pub beta_predicted: AMElement,
    pub beta_distance: f64,
    pub beta_bound: f64,
    pub beta_pass: bool,
    pub jordan_measured: AMElement,
    pub jordan_predicted: AMElement,
    pub jordan_distance: f64,
    pub jordan_bound: f64,
    pub jordan_pass: bool,
}

impl EstimateReport {
    pub fn pass(&self) -> bool {
        self.flags_pass && self.beta_pass && self.jordan_pass
    }
}

/// Parameters of the product estimate beyond the family itself.
#[derive(Debug, Clone, Copy)]
pub struct EstimateParams {
    pub r: f64,
    pub eps: f64,
    /// the equicontinuity constant the bounds are stated in
    pub delta: f64,
}

/// Checks β_{s_l,s_0}(g_l^{n_l}⋯g_1^{n_1}, ξ0) and ℒ_{s_l} of the product
/// against their predicted ℒ·ℛ chains, and the fixed flags of the product
/// against B(g_l⁺, ε) and B(g_1⁻, ε).
pub fn product_estimate(
    family: &[LoxodromicData],
    powers: &[u32],
    xi0: &Flag,
    sections: &[Section],
    params: EstimateParams,
) -> Result<EstimateReport> {
    let cfg = Config::default();
    let l = family.len();
    if l == 0 || powers.len() != l || sections.len() != l + 1 {
        return Err(Error::InvalidInput(
            "need l generators, l powers and l + 1 sections".into(),
        ));
    }
    if powers.iter().any(|&p| p == 0) {
        return Err(Error::InvalidInput("powers must be >= 1".into()));
    }
    let EstimateParams { r, eps, delta } = params;
    let n = xi0.n();
    // genericity and the star condition, cyclically with g_0 = g_l
    for i in 0..l {
        let prev = &family[(i + l - 1) % l];
        let cur = &family[i];
        if !is_transverse(&prev.attracting, &cur.repelling) {
            return Err(Error::HypothesisViolated(format!(
                "generic: g{}+ is not transverse to g{}-",
                (i + l - 1) % l + 1,
                i + 1
            )));
        }
        let m = cell_margin(&prev.attracting, &cur.repelling)?.min(cell_margin(&cur.attracting, &cur.repelling)?);
        if r > m / 6.0 {
            return Err(Error::HypothesisViolated(format!(
                "star: r = {r} exceeds a sixth of the margin {m} at generator {}",
                i + 1
            )));
        }
    }
    // section domains, checked on a sample of the required compacta
    let mut rng = sampling::rng(0x7374_6172);
    let probes: Vec<Flag> = (0..128).map(|_| haar_flag(&mut rng, n)).collect();
    for (i, s) in sections.iter().enumerate() {
        let (g_minus, thick) = if i == 0 {
            (&family[0].repelling, eps)
        } else {
            (&family[i - 1].repelling, r)
        };
        for p in &probes {
            if cell_margin_lower_bound(p, g_minus) >= thick && !is_transverse(p, &s.base) {
                return Err(Error::HypothesisViolated(format!(
                    "star-star: section {i} does not cover the required compact set"
                )));
            }
        }
    }
    if !margin_at_least(xi0, &family[0].repelling, eps) {
        return Err(Error::HypothesisViolated(
            "xi0 lies in the eps-neighbourhood of the boundary of b(g1-)".into(),
        ));
    }

    // the product and its dynamics; the product matrix itself is too
    // ill-conditioned for its repelling flag, so fixed flags come from
    // iterating the generators' actions
    let powered: Vec<LoxodromicData> = family.iter().zip(powers).map(|(g, &p)| g.power(p)).collect();
    let mut spectrum = ExteriorPowers::identity(n);
    for (g, &p) in family.iter().zip(powers) {
        spectrum = ExteriorPowers::of(g.g.matrix()).pow(p).mul(&spectrum);
    }
    let (product_lambda, rel_gap, _) = spectrum.spectrum();
    if rel_gap <= cfg.tol_lox {
        return Err(Error::NotLoxodromic { gap: rel_gap });
    }
    let (product_attracting, product_repelling) = product_fixed_flags(&powered);
    let attracting_distance = flag_distance(&product_attracting, &family[l - 1].attracting);
    let repelling_distance = flag_distance(&product_repelling, &family[0].repelling);

    let chain_cocycle = |start: &Flag, s_first: &Section| -> Result<AMElement> {
        let mut acc = AMElement::identity(n);
        let mut x = start.clone();
        for j in 0..l {
            let prev_section = if j == 0 { s_first } else { &sections[j] };
            let b = cocycle_power(&sections[j + 1], prev_section, &family[j], powers[j], &x)?;
            acc = b.mul(&acc);
            x = act_power(&family[j].g, powers[j], &x);
        }
        Ok(acc)
    };
    let beta_measured = chain_cocycle(xi0, &sections[0])?;
    let jordan_measured = chain_cocycle(&product_attracting, &sections[l])?;

    let mut beta_predicted = AMElement::identity(n);
    let mut jordan_predicted = AMElement::identity(n);
    for j in 0..l {
        let g = &family[j];
        let s = &sections[j + 1];
        let lj = extended_jordan(s, g)?.pow(powers[j] as i64);
        let (rb, rl) = if j == 0 {
            (
                ratio_lox(s, &sections[0], g, xi0)?,
                ratio_lox(s, &sections[l], g, &family[l - 1].attracting)?,
            )
        } else {
            let r = ratio_lox(s, &sections[j], g, &family[j - 1].attracting)?;
            (r.clone(), r)
        };
        beta_predicted = lj.mul(&rb).mul(&beta_predicted);
        jordan_predicted = lj.mul(&rl).mul(&jordan_predicted);
    }
    let beta_distance = beta_measured.distance(&beta_predicted);
    let jordan_distance = jordan_measured.distance(&jordan_predicted);
    let beta_bound = (2 * l - 1) as f64 * delta;
    let jordan_bound = (2 * l) as f64 * delta;
    Ok(EstimateReport {
        l,
        powers: powers.to_vec(),
        product_lambda,
        attracting_distance,
        repelling_distance,
        eps,
        flags_pass: attracting_distance < eps && repelling_distance < eps,
        beta_measured,
        beta_predicted,
        beta_distance,
        beta_bound,
        beta_pass: beta_distance <= beta_bound,
        jordan_measured,
        jordan_predicted,
        jordan_distance,
        jordan_bound,
        jordan_pass: jordan_distance <= jordan_bound,
    })
}
