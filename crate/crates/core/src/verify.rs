//! The identity suite run by `chamberflow verify`.
//!
//! Every entry is either a residual compared against a tolerance or a
//! yes/no check with a short explanation. Reports are deterministic at a
//! fixed config; nothing time-dependent is recorded here.

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::density::{
    jordan_density_bridge, reverify, select_dense_subgroup_generators, semigroup_cone_density, BridgeParams,
    Window,
};
use crate::error::{Error, Result};
use crate::fixtures::{self, SchottkyFixture};
use crate::flag::{act, cell_margin_lower_bound, flag_distance, Flag};
use crate::group::{AMElement, GroupElement, SignVector};
use crate::linalg::{bruhat_lu, cartan_kak, exp_diag, iwasawa_kan, iwasawa_kan_minus, relative_error};
use crate::loxodromy::{
    classify, cocycle_of_power, cocycle_via_jordan, delta_r_eps, extended_jordan, product_estimate,
    product_fixed_flags, EstimateParams, LoxodromicData,
};
use crate::sampling::{self, haar_flag, random_cartan, random_lower_unipotent, random_sl, SeededRng};
use crate::schottky::{
    build_schottky, component_label_transport, decorrelation_discret_check, hull_residual,
    jordan_line_density_probe, limit_cone, sign_group, SchottkyFamily, DEFAULT_WORD_CAP,
};
use crate::sections::{cocycle, iwasawa_cocycle, transition, Section};

/// Sizes, seed and tolerances of a verify run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyConfig {
    pub n: usize,
    pub seed: u64,
    pub tolerances: Config,
    pub decomposition_samples: usize,
    pub cocycle_samples: usize,
    pub lox_samples: usize,
    pub max_words: usize,
    pub mc_samples: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            n: 3,
            seed: 42,
            tolerances: Config::default(),
            decomposition_samples: 1000,
            cocycle_samples: 200,
            lox_samples: 100,
            max_words: DEFAULT_WORD_CAP,
            mc_samples: 1000,
        }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidInput("n must be at least 2".into()));
        }
        if self.mc_samples < 1000 {
            return Err(Error::InvalidInput("mc_samples must be at least 1000".into()));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("tol_det", t.tol_det),
            ("tol_minor", t.tol_minor),
            ("tol_recon", t.tol_recon),
            ("tol_id", t.tol_id),
            ("tol_lox", t.tol_lox),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Decompositions,
    Cocycles,
    Loxodromy,
    PropCrucial,
    Schottky,
    Density,
    Mixing,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Decompositions,
        Suite::Cocycles,
        Suite::Loxodromy,
        Suite::PropCrucial,
        Suite::Schottky,
        Suite::Density,
        Suite::Mixing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Decompositions => "decompositions",
            Suite::Cocycles => "cocycles",
            Suite::Loxodromy => "loxodromy",
            Suite::PropCrucial => "prop-crucial",
            Suite::Schottky => "schottky",
            Suite::Density => "density",
            Suite::Mixing => "mixing",
        }
    }

    pub fn parse(s: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|x| x.name() == s)
    }

    fn salt(self) -> u64 {
        self as u64 + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityResult {
    pub name: String,
    pub suite: String,
    pub instances: usize,
    /// None when the entry is a yes/no check
    pub max_residual: Option<f64>,
    pub tolerance: Option<f64>,
    pub pass: bool,
    pub detail: Option<String>,
}

impl IdentityResult {
    fn residual(suite: Suite, name: &str, r: &Residual, tolerance: f64) -> Self {
        IdentityResult {
            name: name.into(),
            suite: suite.name().into(),
            instances: r.count,
            max_residual: Some(r.max),
            tolerance: Some(tolerance),
            pass: r.failures == 0 && r.count > 0 && r.max <= tolerance,
            detail: (r.failures > 0).then(|| format!("{} instances failed to evaluate", r.failures)),
        }
    }

    fn check(suite: Suite, name: &str, instances: usize, pass: bool, detail: String) -> Self {
        IdentityResult {
            name: name.into(),
            suite: suite.name().into(),
            instances,
            max_residual: None,
            tolerance: None,
            pass,
            detail: Some(detail),
        }
    }

    fn error(suite: Suite, name: &str, e: &Error) -> Self {
        Self::check(suite, name, 0, false, e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub results: Vec<IdentityResult>,
    pub pass: bool,
}

/// Running maximum of a residual. M-part mismatches give an infinite
/// distance and count as failures.
#[derive(Debug, Clone, Default)]
struct Residual {
    max: f64,
    count: usize,
    failures: usize,
}

impl Residual {
    fn push(&mut self, r: Result<f64>) {
        self.count += 1;
        match r {
            Ok(x) if x.is_finite() => self.max = self.max.max(x),
            _ => self.failures += 1,
        }
    }
}

pub fn run(suites: &[Suite], cfg: &VerifyConfig) -> Result<VerifyReport> {
    cfg.validate()?;
    let mut results = Vec::new();
    for &s in suites {
        results.extend(match s {
            Suite::Decompositions => decompositions(cfg),
            Suite::Cocycles => cocycles(cfg),
            Suite::Loxodromy => loxodromy(cfg),
            Suite::PropCrucial => prop_crucial(cfg),
            Suite::Schottky => schottky(cfg),
            Suite::Density => density(cfg),
            Suite::Mixing => mixing(cfg),
        });
    }
    let pass = results.iter().all(|r| r.pass);
    Ok(VerifyReport { results, pass })
}

fn suite_rng(cfg: &VerifyConfig, s: Suite) -> SeededRng {
    sampling::rng(cfg.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(s.salt()))
}

// ---------------------------------------------------------------- decompositions

/// Round trips of KAN, KAN⁻, KA⁺K and Bruhat LU on random elements. Single threaded.
pub fn decompositions(cfg: &VerifyConfig) -> Vec<IdentityResult> {
    let s = Suite::Decompositions;
    let mut rng = suite_rng(cfg, s);
    let mut res: [Residual; 4] = Default::default();
    for _ in 0..cfg.decomposition_samples {
        let g = random_sl(&mut rng, cfg.n);
        let m = g.matrix();
        res[0].push(iwasawa_kan(&g).map(|t| relative_error(&t.reconstruct(), m)));
        res[1].push(iwasawa_kan_minus(&g).map(|t| relative_error(&t.reconstruct(), m)));
        res[2].push(cartan_kak(&g).map(|t| relative_error(&t.reconstruct(), m)));
        res[3].push(bruhat_lu(&g, &cfg.tolerances).map(|t| relative_error(&t.reconstruct(), m)));
    }
    let tol = cfg.tolerances.tol_recon;
    ["iwasawa_kan_roundtrip", "iwasawa_kan_minus_roundtrip", "cartan_kak_roundtrip", "bruhat_lu_roundtrip"]
        .iter()
        .zip(&res)
        .map(|(name, r)| IdentityResult::residual(s, name, r, tol))
        .collect()
}

// ---------------------------------------------------------------- cocycles

const DOMAIN_MARGIN: f64 = 0.05;

fn in_domain(xi: &Flag, s: &Section) -> bool {
    cell_margin_lower_bound(xi, &s.base) >= DOMAIN_MARGIN
}

fn random_section(rng: &mut SeededRng, n: usize) -> Section {
    let base = haar_flag(rng, n);
    let m = SignVector::all(n).choose(rng).expect("non-empty").clone();
    if rng.random_bool(0.5) {
        Section::compact(base).right_mul_m(&m)
    } else {
        let a = random_cartan(rng, n, 0.5);
        Section::unipotent(base)
            .right_mul(&AMElement::new(a, m).expect("valid"))
            .expect("unipotent sections take any offset")
    }
}

/// A flag in the domain of every section, by rejection.
fn common_flag(rng: &mut SeededRng, n: usize, sections: &[&Section]) -> Flag {
    loop {
        let xi = haar_flag(rng, n);
        if sections.iter().all(|s| in_domain(&xi, s)) {
            return xi;
        }
    }
}

fn sections(rng: &mut SeededRng, n: usize, count: usize) -> Vec<Section> {
    (0..count).map(|_| random_section(rng, n)).collect()
}

/// Cocycle relation, Chasles, the cohomology bridge, Hopf compatibility,
/// the Iwasawa cocycle identity and the unipotent normalizations.
pub fn cocycles(cfg: &VerifyConfig) -> Vec<IdentityResult> {
    let s = Suite::Cocycles;
    let n = cfg.n;
    let mut rng = suite_rng(cfg, s);
    let mut relation = Residual::default();
    let mut chasles = Residual::default();
    let mut inverse = Residual::default();
    let mut bridge = Residual::default();
    let mut hopf = Residual::default();
    let mut iwasawa = Residual::default();
    let mut normalization = Residual::default();
    let mut translation = Residual::default();

    for _ in 0..cfg.cocycle_samples {
        // cocycle relation
        let ss = sections(&mut rng, n, 3);
        let (gj, gk) = (random_sl(&mut rng, n), random_sl(&mut rng, n));
        let xi = loop {
            let xi = common_flag(&mut rng, n, &[&ss[0]]);
            let x1 = act(&gj, &xi);
            if in_domain(&x1, &ss[1]) && in_domain(&act(&gk, &x1), &ss[2]) {
                break xi;
            }
        };
        relation.push((|| {
            let lhs = cocycle(&ss[2], &ss[0], &gk.mul(&gj), &xi)?;
            let rhs = cocycle(&ss[2], &ss[1], &gk, &act(&gj, &xi))?.mul(&cocycle(&ss[1], &ss[0], &gj, &xi)?);
            Ok(lhs.distance(&rhs))
        })());

        // Chasles and inverse
        let ts = sections(&mut rng, n, 3);
        let xi = common_flag(&mut rng, n, &[&ts[0], &ts[1], &ts[2]]);
        chasles.push((|| {
            let direct = transition(&ts[2], &ts[0], &xi)?;
            let composed = transition(&ts[2], &ts[1], &xi)?.mul(&transition(&ts[1], &ts[0], &xi)?);
            Ok(direct.distance(&composed))
        })());
        inverse.push((|| {
            let t = transition(&ts[1], &ts[0], &xi)?;
            Ok(t.distance(&transition(&ts[0], &ts[1], &xi)?.inverse()))
        })());

        // bridge: β_{s1',s0'}(g, ξ) = 𝒯_{s1',s1}(gξ)·β_{s1,s0}(g, ξ)·𝒯_{s0,s0'}(ξ)
        let bs = sections(&mut rng, n, 4);
        let g = random_sl(&mut rng, n);
        let xi = loop {
            let xi = common_flag(&mut rng, n, &[&bs[0], &bs[1]]);
            let gx = act(&g, &xi);
            if in_domain(&gx, &bs[2]) && in_domain(&gx, &bs[3]) {
                break xi;
            }
        };
        bridge.push((|| {
            let (s0, s0p, s1, s1p) = (&bs[0], &bs[1], &bs[2], &bs[3]);
            let lhs = cocycle(s1p, s0p, &g, &xi)?;
            let rhs = transition(s1p, s1, &act(&g, &xi))?
                .mul(&cocycle(s1, s0, &g, &xi)?)
                .mul(&transition(s0, s0p, &xi)?);
            Ok(lhs.distance(&rhs))
        })());

        // Hopf compatibility of compact sections
        let c0 = Section::compact(haar_flag(&mut rng, n));
        let c1 = Section::compact(haar_flag(&mut rng, n));
        let g = random_sl(&mut rng, n);
        let xi = loop {
            let xi = common_flag(&mut rng, n, &[&c0]);
            if in_domain(&act(&g, &xi), &c1) {
                break xi;
            }
        };
        hopf.push(cocycle(&c1, &c0, &g, &xi).map(|b| b.a.distance(&iwasawa_cocycle(&g, &xi))));

        // σ(gh, ξ) = σ(g, hξ) + σ(h, ξ)
        let (g, h) = (random_sl(&mut rng, n), random_sl(&mut rng, n));
        let xi = haar_flag(&mut rng, n);
        let lhs = iwasawa_cocycle(&g.mul(&h), &xi);
        let rhs = iwasawa_cocycle(&g, &act(&h, &xi)).add(&iwasawa_cocycle(&h, &xi));
        iwasawa.push(Ok(lhs.distance(&rhs)));

        // 𝒯_{[e],[u]} = e and 𝒯_{[e],[x·u]} = x for u ∈ N⁻, x ∈ AM
        let u = GroupElement::from_matrix_unchecked(random_lower_unipotent(&mut rng, n, 1.0));
        let m = SignVector::all(n).choose(&mut rng).expect("non-empty").clone();
        let x = AMElement::new(random_cartan(&mut rng, n, 0.5), m).expect("valid");
        let xu = GroupElement::from_matrix_unchecked(x.to_matrix() * u.matrix());
        let e = Section::standard(n);
        let xi = common_flag(&mut rng, n, &[&e]);
        normalization.push((|| {
            let t1 = transition(&e, &Section::through(&u)?, &xi)?;
            let t2 = transition(&e, &Section::through(&xu)?, &xi)?;
            Ok(t1.distance(&AMElement::identity(n)).max(t2.distance(&x)))
        })());

        // [h](ξ) = h·[e](h⁻¹ξ)
        let h = random_sl(&mut rng, n);
        translation.push((|| {
            let sh = Section::through(&h)?;
            let xi = common_flag(&mut rng, n, &[&sh]);
            let hinv_xi = act(&h.inverse(), &xi);
            let direct = sh.eval(&xi, &cfg.tolerances)?;
            let via = h.mul(&e.eval(&hinv_xi, &cfg.tolerances)?);
            Ok(relative_error(direct.matrix(), via.matrix()))
        })());
    }
    let (id, recon) = (cfg.tolerances.tol_id, cfg.tolerances.tol_recon);
    vec![
        IdentityResult::residual(s, "cocycle_relation", &relation, id),
        IdentityResult::residual(s, "transition_chasles", &chasles, id),
        IdentityResult::residual(s, "transition_inverse", &inverse, id),
        IdentityResult::residual(s, "cohomology_bridge", &bridge, id),
        IdentityResult::residual(s, "hopf_compatibility", &hopf, recon),
        IdentityResult::residual(s, "iwasawa_cocycle_identity", &iwasawa, recon),
        IdentityResult::residual(s, "unipotent_normalization", &normalization, recon),
        IdentityResult::residual(s, "section_translation", &translation, recon),
    ]
}

// ---------------------------------------------------------------- loxodromy

/// The first `count` random elements that classify as loxodromic.
pub fn classified_samples(rng: &mut SeededRng, n: usize, count: usize, cfg: &Config) -> Vec<LoxodromicData> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        if let Ok(l) = classify(&random_sl(rng, n), cfg) {
            out.push(l);
        }
    }
    out
}

/// Fixed points, σ(g, g⁺) = λ(g), exactness of β_{[g⁻]}(gᵏ, ξ) = ℒ_{[g⁻]}(g)ᵏ
/// for k ≤ 8, the A-part and sign invariance of ℒ_s, and the two-sided
/// cocycle formula through ratio maps.
pub fn loxodromy(cfg: &VerifyConfig) -> Vec<IdentityResult> {
    let s = Suite::Loxodromy;
    let n = cfg.n;
    let mut rng = suite_rng(cfg, s);
    let samples = classified_samples(&mut rng, n, cfg.lox_samples, &cfg.tolerances);
    let mut fixed = Residual::default();
    let mut diagonal = Residual::default();
    let mut sigma = Residual::default();
    let mut power = Residual::default();
    let mut a_part = Residual::default();
    let mut signs = Residual::default();
    let mut magic = Residual::default();
    for l in &samples {
        let g = &l.g;
        fixed.push(Ok(flag_distance(&act(g, &l.attracting), &l.attracting)
            .max(flag_distance(&act(&g.inverse(), &l.repelling), &l.repelling))));
        let h = &l.diagonalizer;
        let conj = h.inverse().matrix() * g.matrix() * h.matrix();
        let expected = l.signs.to_matrix() * exp_diag(&l.lambda);
        diagonal.push(Ok(relative_error(&conj, &expected)));
        sigma.push(Ok(iwasawa_cocycle(g, &l.attracting).distance(&l.lambda)));

        let rep = l.repelling_section();
        let xi = common_flag(&mut rng, n, &[&rep]);
        for k in 1..=8u32 {
            power.push(cocycle_of_power(&rep, &rep, g, k, &xi).map(|b| b.distance(&l.jordan_am().pow(k as i64))));
        }
        for _ in 0..5 {
            let sc = Section::compact(haar_flag(&mut rng, n));
            if !in_domain(&l.attracting, &sc) {
                continue;
            }
            let lj = extended_jordan(&sc, l);
            a_part.push(lj.clone().map(|x| x.a.distance(&l.lambda)));
            signs.push(lj.map(|x| if x.m == l.signs { 0.0 } else { f64::INFINITY }));
        }
        let (s0, s1, s2) = (
            Section::compact(haar_flag(&mut rng, n)),
            Section::compact(haar_flag(&mut rng, n)),
            random_section(&mut rng, n),
        );
        if in_domain(&xi, &s0) && in_domain(&l.attracting, &s1) && in_domain(&l.attracting, &s2) {
            for k in [1u32, 4, 8] {
                magic.push((|| {
                    let direct = cocycle_of_power(&s2, &s0, g, k, &xi)?;
                    let via = cocycle_via_jordan(l, k, &xi, &s0, &s1, &s2)?;
                    Ok(direct.distance(&via) / k as f64)
                })());
            }
        }
    }
    let id = cfg.tolerances.tol_id;
    vec![
        IdentityResult::residual(s, "fixed_flags", &fixed, id),
        IdentityResult::residual(s, "diagonalizer", &diagonal, id),
        IdentityResult::residual(s, "sigma_at_attracting_flag", &sigma, id),
        IdentityResult::residual(s, "power_cocycle_exactness", &power, id),
        IdentityResult::residual(s, "extended_jordan_a_part", &a_part, id),
        IdentityResult::residual(s, "extended_jordan_signs", &signs, id),
        IdentityResult::residual(s, "cocycle_via_jordan_per_power", &magic, 1e-7),
    ]
}

// ---------------------------------------------------------------- product estimate

fn build(fx: &SchottkyFixture) -> Result<SchottkyFamily> {
    build_schottky(&fx.seeds, fx.r, fx.eps, fx.max_power)
}

/// Sections [g_1⁻], [g_2⁻], …, [g_l⁻], [g_1⁻], all compact.
pub fn estimate_sections(fam: &SchottkyFamily) -> Vec<Section> {
    let mut s: Vec<Section> = fam.generators.iter().map(|g| g.repelling_section().to_compact()).collect();
    s.push(s[0].clone());
    s
}

/// Powers patterns tried for a family of `l` generators.
pub fn estimate_patterns(l: usize) -> Vec<Vec<u32>> {
    vec![vec![1; l], (0..l).map(|i| [2u32, 1, 3][i % 3]).collect(), vec![3; l]]
}

/// The product estimate for the SL(2) pair and the SL(3) triple, with
/// bounds 2l·(1.5·δ̂) from a seeded Monte-Carlo δ̂.
pub fn prop_crucial(cfg: &VerifyConfig) -> Vec<IdentityResult> {
    let s = Suite::PropCrucial;
    let mut out = Vec::new();
    for fx in [fixtures::sl2_pair(), fixtures::sl3_triple()] {
        let fam = match build(&fx) {
            Ok(f) => f,
            Err(e) => {
                out.push(IdentityResult::error(s, &format!("product_estimate_{}", fx.name), &e));
                continue;
            }
        };
        let n = fam.n();
        let delta_hat = match delta_r_eps(n, fx.r, fx.eps, cfg.mc_samples, cfg.seed) {
            Ok(d) => d,
            Err(e) => {
                out.push(IdentityResult::error(s, &format!("product_estimate_{}", fx.name), &e));
                continue;
            }
        };
        let sections = estimate_sections(&fam);
        let xi0 = fam.generators[fam.len() - 1].attracting.clone();
        let params = EstimateParams {
            r: fx.r,
            eps: fx.eps,
            delta: 1.5 * delta_hat,
        };
        let mut flags = Residual::default();
        let mut beta = Residual::default();
        let mut jordan = Residual::default();
        for p in estimate_patterns(fam.len()) {
            match product_estimate(&fam.generators, &p, &xi0, &sections, params) {
                Ok(r) => {
                    flags.push(Ok(r.attracting_distance.max(r.repelling_distance)));
                    beta.push(Ok(r.beta_distance));
                    jordan.push(Ok(r.jordan_distance));
                }
                Err(e) => {
                    flags.push(Err(e.clone()));
                    beta.push(Err(e.clone()));
                    jordan.push(Err(e));
                }
            }
        }
        let l = fam.len() as f64;
        out.push(IdentityResult::residual(s, &format!("product_fixed_flags_{}", fx.name), &flags, fx.eps));
        out.push(IdentityResult::residual(
            s,
            &format!("product_cocycle_{}", fx.name),
            &beta,
            (2.0 * l - 1.0) * params.delta,
        ));
        out.push(IdentityResult::residual(
            s,
            &format!("product_extended_jordan_{}", fx.name),
            &jordan,
            2.0 * l * params.delta,
        ));
    }
    out
}

// ---------------------------------------------------------------- Schottky

fn random_word(rng: &mut SeededRng, l: usize, max_len: usize) -> Vec<u8> {
    let len = rng.random_range(1..=max_len);
    (0..len).map(|_| rng.random_range(0..l) as u8).collect()
}

/// Flags of random words in the predicted balls, hull containment, sign
/// group order and stability, decorrelation, and the label properties.
pub fn schottky(cfg: &VerifyConfig) -> Vec<IdentityResult> {
    let s = Suite::Schottky;
    let fx = fixtures::sl3_engineered();
    let fam = match build(&fx) {
        Ok(f) => f,
        Err(e) => return vec![IdentityResult::error(s, "engineered_family", &e)],
    };
    let mut rng = suite_rng(cfg, s);
    let mut out = Vec::new();

    let mut flags = Residual::default();
    for _ in 0..100 {
        let w = random_word(&mut rng, fam.len(), 5);
        flags.push((|| {
            let (_, rel_gap, _) = fam.word_powers(&w).spectrum();
            if rel_gap <= cfg.tolerances.tol_lox {
                return Err(Error::NotLoxodromic { gap: rel_gap });
            }
            let factors: Vec<LoxodromicData> = w.iter().rev().map(|&i| fam.generators[i as usize].clone()).collect();
            let (att, rep) = product_fixed_flags(&factors);
            let first = &fam.generators[w[0] as usize];
            let last = &fam.generators[w[w.len() - 1] as usize];
            Ok(flag_distance(&att, &first.attracting).max(flag_distance(&rep, &last.repelling)))
        })());
    }
    out.push(IdentityResult::residual(s, "word_fixed_flags_in_balls", &flags, fam.eps));

    match limit_cone(&fam, 6, cfg.max_words) {
        Ok(cone) => out.push(IdentityResult::residual(
            s,
            "cone_hull_containment",
            &Residual {
                max: hull_residual(&cone),
                count: cone.rays.len(),
                failures: 0,
            },
            1e-9,
        )),
        Err(e) => out.push(IdentityResult::error(s, "cone_hull_containment", &e)),
    }

    let len = fixtures::ENGINEERED_WORD_LENGTH;
    let report = match sign_group(&fam, len, cfg.max_words) {
        Ok(r) => r,
        Err(e) => {
            out.push(IdentityResult::error(s, "sign_group_order", &e));
            return out;
        }
    };
    out.push(IdentityResult::check(
        s,
        "sign_group_order",
        report.scanned,
        report.order == 4,
        format!("order {} from {} loxodromic words", report.order, report.scanned),
    ));
    match sign_group(&fam, len + 2, cfg.max_words) {
        Ok(r2) => out.push(IdentityResult::check(
            s,
            "sign_group_stable",
            r2.scanned,
            r2.order == report.order,
            format!("order {} at length {len}, {} at length {}", report.order, r2.order, len + 2),
        )),
        Err(e) => out.push(IdentityResult::error(s, "sign_group_stable", &e)),
    }

    let mut decor = None;
    for n in 1..=4 {
        match decorrelation_discret_check(&fam, &report, n) {
            Ok(d) => {
                decor = Some(Ok(d));
                break;
            }
            Err(Error::NeedLargerN { .. }) if n < 4 => continue,
            Err(e) => {
                decor = Some(Err(e));
                break;
            }
        }
    }
    match decor.expect("loop ran") {
        Ok(d) => {
            let attained = d.rows.iter().filter(|r| r.pass).count();
            out.push(IdentityResult::check(
                s,
                "decorrelation_components",
                d.rows.len(),
                d.pass,
                format!("{attained} of {} components attained at n = {}", d.rows.len(), d.n),
            ));
        }
        Err(e) => out.push(IdentityResult::error(s, "decorrelation_components", &e)),
    }

    let start = fam.base_point(0);
    let label = |w: &[u8], st: &crate::sections::BHCoordinates| {
        component_label_transport(w, &fam, st, &report).map(|c| c.index)
    };
    let mut hom = Residual::default();
    for _ in 0..100 {
        let (w1, w2) = (random_word(&mut rng, fam.len(), 3), random_word(&mut rng, fam.len(), 3));
        let w: Vec<u8> = w1.iter().chain(&w2).copied().collect();
        hom.push((|| {
            let ok = label(&w, &start)? == label(&w1, &start)? ^ label(&w2, &start)?;
            Ok(if ok { 0.0 } else { f64::INFINITY })
        })());
    }
    out.push(IdentityResult::residual(s, "label_homomorphism", &hom, 0.0));

    let mut shift = Residual::default();
    for m in SignVector::all(fam.n()) {
        let moved = start.right_mul(&AMElement::from_m(m.clone()));
        for _ in 0..10 {
            let w = random_word(&mut rng, fam.len(), 4);
            shift.push((|| {
                let ok = label(&w, &moved)? == label(&w, &start)? ^ report.coset_index(&m);
                Ok(if ok { 0.0 } else { f64::INFINITY })
            })());
        }
    }
    out.push(IdentityResult::residual(s, "partition_realization", &shift, 0.0));
    out
}

// ---------------------------------------------------------------- density

/// Subgroup selection and semigroup covering on the d = 1, k = 1 fixture,
/// their independent re-verification, and the Jordan bridge on an SL(2)
/// pair with irrational length ratio.
pub fn density(cfg: &VerifyConfig) -> Vec<IdentityResult> {
    let s = Suite::Density;
    let mut out = Vec::new();
    let e = fixtures::density_d1k1();
    let window = Window::default_for(1);
    match select_dense_subgroup_generators(&e, 0.1, &window, crate::density::DEFAULT_COEFF_BOUND) {
        Ok(c) => {
            let bound = 3 * 1 + 2 * 1;
            out.push(IdentityResult::check(
                s,
                "dense_subgroup_generators",
                c.cells,
                c.covered && c.subset.len() <= bound,
                format!(
                    "{} generators (bound {bound}), covering radius {:.6} on {} cells",
                    c.subset.len(),
                    c.covering_radius,
                    c.cells
                ),
            ));
            let rv = reverify(&c, c.delta);
            out.push(IdentityResult::check(
                s,
                "dense_subgroup_reverification",
                rv.cells,
                rv.covered == c.covered,
                format!("{} uncovered cells, {} bad witnesses", rv.uncovered, rv.bad_witnesses),
            ));
        }
        Err(err) => out.push(IdentityResult::error(s, "dense_subgroup_generators", &err)),
    }
    match semigroup_cone_density(&e, 0.1, &window, crate::density::DEFAULT_COEFF_BOUND) {
        Ok((v, c)) => {
            out.push(IdentityResult::check(
                s,
                "semigroup_cone_covering",
                c.cells,
                c.covered,
                format!("v_F = {:.6}, covering radius {:.6}", v[0], c.covering_radius),
            ));
            let rv = reverify(&c, c.delta);
            out.push(IdentityResult::check(
                s,
                "semigroup_cone_reverification",
                rv.cells,
                rv.covered == c.covered,
                format!("{} uncovered cells, {} bad witnesses", rv.uncovered, rv.bad_witnesses),
            ));
        }
        Err(err) => out.push(IdentityResult::error(s, "semigroup_cone_covering", &err)),
    }
    let bridge = build(&fixtures::sl2_irrational_pair()).and_then(|fam| {
        jordan_density_bridge(
            &fam,
            0.1,
            &Window::default_for(1),
            BridgeParams {
                seed: cfg.seed,
                mc_samples: cfg.mc_samples,
                ..BridgeParams::default()
            },
        )
    });
    match bridge {
        Ok(b) => out.push(IdentityResult::residual(
            s,
            "jordan_density_bridge",
            &Residual {
                max: b.prediction_residual,
                count: 1 << b.l,
                failures: usize::from(!b.certificate.covered),
            },
            b.delta_total - b.certificate.delta,
        )),
        Err(err) => out.push(IdentityResult::error(s, "jordan_density_bridge", &err)),
    }
    out
}

// ---------------------------------------------------------------- mixing

/// Result of the paired interior/exterior probe.
#[derive(Debug, Clone, Serialize)]
pub struct MixingContrast {
    pub interior_hits: usize,
    pub exterior_hits: usize,
    pub interior_margin: Option<f64>,
    pub exterior_margin: Option<f64>,
    pub words: usize,
    pub pass: bool,
}

/// In-window hit counts along an interior and an exterior direction of the
/// engineered family's cone, at equal word budget.
pub fn mixing_contrast(budget: usize) -> Result<MixingContrast> {
    let fam = build(&fixtures::sl3_engineered())?;
    let cone = limit_cone(&fam, 6, DEFAULT_WORD_CAP)?;
    let (inside, outside) = fixtures::probe_directions(&cone);
    let (w, d0) = (fixtures::PROBE_WINDOW, fixtures::PROBE_DELTA0);
    let a = jordan_line_density_probe(&fam, &inside, w, d0, budget)?;
    let b = jordan_line_density_probe(&fam, &outside, w, d0, budget)?;
    Ok(MixingContrast {
        interior_hits: a.hits,
        exterior_hits: b.hits,
        interior_margin: a.interior_margin,
        exterior_margin: b.interior_margin,
        words: a.words,
        pass: a.hits > 0 && a.hits >= 5 * b.hits,
    })
}

pub fn mixing(cfg: &VerifyConfig) -> Vec<IdentityResult> {
    let s = Suite::Mixing;
    match mixing_contrast(cfg.max_words) {
        Ok(m) => vec![IdentityResult::check(
            s,
            "mixing_contrast",
            m.words,
            m.pass,
            format!("interior {} hits, exterior {} hits", m.interior_hits, m.exterior_hits),
        )],
        Err(e) => vec![IdentityResult::error(s, "mixing_contrast", &e)],
    }
}
