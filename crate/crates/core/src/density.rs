//! Constructive density checks in V × C with V = ℝ^d and C = (ℝ/ℤ)^k.
//!
//! Points are handled in lifted coordinates (v, c) with c reduced to [0, 1).
//! Distances use the flat metric: Euclidean on V, shortest wrap on C.
//!
//! A covering certificate is a grid of cells over the region. Every cell
//! centre must lie within δ − ρ of a generated element, where ρ is the cell
//! half-diagonal, so the whole cell (not only its centre) is δ-covered.

use std::collections::{BTreeSet, HashMap, VecDeque};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::CartanVector;
use crate::loxodromy::{delta_r_eps, ratio_lox};
use crate::schottky::SchottkyFamily;

pub const DEFAULT_COEFF_BOUND: u32 = 1000;
pub const DEFAULT_HALF_WIDTH: f64 = 5.0;
/// Hard cap on the number of distinct elements an exploration may keep.
const MAX_POINTS: usize = 4_000_000;
/// Candidates beyond the basis that the subset search looks at.
const MAX_CANDIDATES: usize = 12;
const MAX_ATTEMPTS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    pub v: Vec<f64>,
    pub c: Vec<f64>,
}

fn wrap(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

impl TorusPoint {
    /// Torus coordinates are reduced to [0, 1).
    pub fn new(v: Vec<f64>, c: Vec<f64>) -> Self {
        TorusPoint {
            v,
            c: c.into_iter().map(wrap).collect(),
        }
    }

    pub fn d(&self) -> usize {
        self.v.len()
    }

    pub fn k(&self) -> usize {
        self.c.len()
    }

    fn lifted(&self) -> Vec<f64> {
        self.v.iter().chain(&self.c).copied().collect()
    }

    /// Size of the element, with torus coordinates measured to the nearest integer.
    fn size(&self) -> f64 {
        let t: f64 = self.c.iter().map(|c| c.min(1.0 - c).powi(2)).sum();
        (self.v.iter().map(|x| x * x).sum::<f64>() + t).sqrt()
    }
}

/// Axis-aligned box in V.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Window {
    pub fn cube(d: usize, a: f64, b: f64) -> Self {
        Window {
            lo: vec![a; d],
            hi: vec![b; d],
        }
    }

    pub fn default_for(d: usize) -> Self {
        Self::cube(d, -DEFAULT_HALF_WIDTH, DEFAULT_HALF_WIDTH)
    }

    pub fn d(&self) -> usize {
        self.lo.len()
    }

    fn validate(&self, d: usize) -> Result<()> {
        if self.lo.len() != d || self.hi.len() != d {
            return Err(Error::InvalidInput(format!("window must have dimension {d}")));
        }
        if self.lo.iter().zip(&self.hi).any(|(a, b)| !(a.is_finite() && b.is_finite() && a <= b)) {
            return Err(Error::InvalidInput("window bounds must be finite with lo <= hi".into()));
        }
        Ok(())
    }

    fn shifted(&self, by: &[f64]) -> Window {
        Window {
            lo: self.lo.iter().zip(by).map(|(a, b)| a + b).collect(),
            hi: self.hi.iter().zip(by).map(|(a, b)| a + b).collect(),
        }
    }

    fn expanded(&self, by: f64) -> Window {
        Window {
            lo: self.lo.iter().map(|a| a - by).collect(),
            hi: self.hi.iter().map(|a| a + by).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCertificate {
    pub delta: f64,
    pub subset: Vec<TorusPoint>,
    /// positions of `subset` in the input list
    pub subset_indices: Vec<usize>,
    pub grid_step: f64,
    pub coeff_bound: u32,
    pub covered: bool,
    pub window: Window,
    /// The certified V-region is `offset + window` (intersected with
    /// `offset + cone` for semigroup certificates), times the full torus.
    pub offset: Vec<f64>,
    pub cone: Option<Vec<Vec<f64>>>,
    /// witnesses are non-negative combinations
    pub semigroup: bool,
    pub cells: usize,
    /// largest distance from a cell centre to the generated set
    pub covering_radius: f64,
    pub cell_radius: f64,
    pub worst_point: Vec<f64>,
    /// coefficient vectors (over `subset`) of the nearest elements
    pub witnesses: Vec<Vec<i64>>,
    /// every subset tried, in order; the last one is `subset_indices` on success
    pub attempts: Vec<Vec<usize>>,
    /// δ-threshold of a single-generator progression, when that is the case
    pub threshold: Option<f64>,
}

// ------------------------------------------------------------ geometry

struct Grid {
    lo: Vec<f64>,
    step: Vec<f64>,
    count: Vec<usize>,
}

impl Grid {
    /// Cells of side ≤ h over `window` × [0, 1)^k.
    fn new(window: &Window, k: usize, h: f64) -> Grid {
        let mut lo = Vec::new();
        let mut step = Vec::new();
        let mut count = Vec::new();
        let mut push = |a: f64, b: f64| {
            let len = b - a;
            let c = ((len / h).ceil() as usize).max(1);
            lo.push(a);
            step.push(len / c as f64);
            count.push(c);
        };
        for (a, b) in window.lo.iter().zip(&window.hi) {
            push(*a, *b);
        }
        for _ in 0..k {
            push(0.0, 1.0);
        }
        Grid { lo, step, count }
    }

    fn len(&self) -> usize {
        self.count.iter().product()
    }

    fn center(&self, mut idx: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.count.len()];
        for j in (0..self.count.len()).rev() {
            let i = idx % self.count[j];
            idx /= self.count[j];
            out[j] = self.lo[j] + (i as f64 + 0.5) * self.step[j];
        }
        out
    }

    fn max_step(&self) -> f64 {
        self.step.iter().copied().fold(0.0, f64::max)
    }

    fn half_diagonal(&self) -> f64 {
        0.5 * self.step.iter().map(|s| s * s).sum::<f64>().sqrt()
    }
}

fn torus_distance(a: &[f64], b: &[f64], d: usize) -> f64 {
    let mut s = 0.0;
    for (j, (x, y)) in a.iter().zip(b).enumerate() {
        let mut t = (x - y).abs();
        if j >= d {
            t = t - t.floor();
            t = t.min(1.0 - t);
        }
        s += t * t;
    }
    s.sqrt()
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Euclidean distance from x to the closed convex cone spanned by `gens`.
fn distance_to_cone(x: &[f64], gens: &[Vec<f64>]) -> f64 {
    let gens: Vec<&Vec<f64>> = gens.iter().filter(|g| norm(g) > 0.0).collect();
    if gens.is_empty() {
        return norm(x);
    }
    let d = x.len();
    match d {
        0 => 0.0,
        1 => {
            let pos = gens.iter().any(|g| g[0] > 0.0);
            let neg = gens.iter().any(|g| g[0] < 0.0);
            if (pos && x[0] >= 0.0) || (neg && x[0] <= 0.0) {
                0.0
            } else {
                x[0].abs()
            }
        }
        2 => {
            let mut ang: Vec<f64> = gens.iter().map(|g| g[1].atan2(g[0])).collect();
            ang.sort_by(|a, b| a.total_cmp(b));
            // the cone is the complement of the widest angular gap
            let mut widest = (ang[0] + std::f64::consts::TAU - ang[ang.len() - 1], ang.len() - 1);
            for i in 1..ang.len() {
                if ang[i] - ang[i - 1] > widest.0 {
                    widest = (ang[i] - ang[i - 1], i - 1);
                }
            }
            if widest.0 < std::f64::consts::PI {
                return 0.0;
            }
            let end = ang[widest.1];
            let start = ang[(widest.1 + 1) % ang.len()];
            let span = (end - start).rem_euclid(std::f64::consts::TAU);
            let ax = x[1].atan2(x[0]);
            if norm(x) == 0.0 || (ax - start).rem_euclid(std::f64::consts::TAU) <= span + 1e-15 {
                return 0.0;
            }
            [start, end]
                .iter()
                .map(|t| {
                    let (c, s) = (t.cos(), t.sin());
                    let p = (x[0] * c + x[1] * s).max(0.0);
                    ((x[0] - p * c).powi(2) + (x[1] - p * s).powi(2)).sqrt()
                })
                .fold(f64::INFINITY, f64::min)
        }
        _ => {
            // exhaustive active sets; fine for the handful of generators used here
            let m = gens.len();
            let xv = DVector::from_column_slice(x);
            let mut best = norm(x);
            for mask in 1u32..(1 << m) {
                let cols: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
                if cols.len() > d {
                    continue;
                }
                let a = DMatrix::from_fn(d, cols.len(), |r, c| gens[cols[c]][r]);
                let svd = a.clone().svd(true, true);
                if svd.singular_values.iter().any(|s| *s < 1e-12) {
                    continue;
                }
                let Ok(t) = svd.solve(&xv, 1e-14) else { continue };
                if t.iter().all(|v| *v >= 0.0) {
                    best = best.min((&a * t - &xv).norm());
                }
            }
            best
        }
    }
}

// ------------------------------------------------------------ exploration

struct Orbit {
    points: Vec<Vec<f64>>,
    coeffs: Vec<Vec<i64>>,
}

fn combine(gens: &[Vec<f64>], coeffs: &[i64], d: usize) -> Vec<f64> {
    let dim = gens[0].len();
    let mut p = vec![0.0; dim];
    for (g, &n) in gens.iter().zip(coeffs) {
        for (pj, gj) in p.iter_mut().zip(g) {
            *pj += n as f64 * gj;
        }
    }
    for pj in p.iter_mut().skip(d) {
        *pj = wrap(*pj);
    }
    p
}

/// Breadth-first closure of `seeds` under ±generators,
/// keeping elements whose V-part stays in `bounds`. Elements closer than
/// `dedupe` to an already kept one are dropped; every kept element carries
/// its exact coefficient vector.
fn explore(
    gens: &[Vec<f64>],
    d: usize,
    seeds: Vec<Vec<i64>>,
    bounds: &Window,
    dedupe: f64,
    coeff_cap: i64,
) -> Orbit {
    let key = |p: &[f64]| -> Vec<i64> { p.iter().map(|x| (x / dedupe).floor() as i64).collect() };
    let inside = |p: &[f64]| (0..d).all(|j| p[j] >= bounds.lo[j] && p[j] <= bounds.hi[j]);
    let mut seen: HashMap<Vec<i64>, ()> = HashMap::new();
    let mut orbit = Orbit {
        points: Vec::new(),
        coeffs: Vec::new(),
    };
    let mut queue = VecDeque::new();
    for s in seeds {
        let p = combine(gens, &s, d);
        if inside(&p) && seen.insert(key(&p), ()).is_none() {
            orbit.points.push(p);
            orbit.coeffs.push(s);
            queue.push_back(orbit.points.len() - 1);
        }
    }
    while let Some(i) = queue.pop_front() {
        if orbit.points.len() >= MAX_POINTS {
            break;
        }
        for (gi, g) in gens.iter().enumerate() {
            for s in [1i64, -1] {
                let c = orbit.coeffs[i][gi] + s;
                if c.abs() > coeff_cap {
                    continue;
                }
                let mut p: Vec<f64> = orbit.points[i].iter().zip(g).map(|(a, b)| a + s as f64 * b).collect();
                for pj in p.iter_mut().skip(d) {
                    *pj = wrap(*pj);
                }
                if !inside(&p) || seen.insert(key(&p), ()).is_some() {
                    continue;
                }
                let mut coeffs = orbit.coeffs[i].clone();
                coeffs[gi] = c;
                orbit.points.push(p);
                orbit.coeffs.push(coeffs);
                queue.push_back(orbit.points.len() - 1);
            }
        }
    }
    orbit
}

// ------------------------------------------------------------ coverage

struct Coverage {
    cells: usize,
    radius: f64,
    worst_point: Vec<f64>,
    witnesses: BTreeSet<usize>,
}

/// Bucketed nearest-neighbour search. Torus coordinates near 0 or 1 are
/// stored twice so that plain Euclidean distance equals the wrapped one.
struct Buckets {
    size: f64,
    map: HashMap<Vec<i64>, Vec<(usize, Vec<f64>)>>,
}

impl Buckets {
    fn new(points: &[Vec<f64>], d: usize, size: f64) -> Self {
        let mut map: HashMap<Vec<i64>, Vec<(usize, Vec<f64>)>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            let mut copies = vec![p.clone()];
            for j in d..p.len() {
                let mut extra = Vec::new();
                for c in &copies {
                    if c[j] < size * 3.0 {
                        let mut e = c.clone();
                        e[j] += 1.0;
                        extra.push(e);
                    }
                    if c[j] > 1.0 - size * 3.0 {
                        let mut e = c.clone();
                        e[j] -= 1.0;
                        extra.push(e);
                    }
                }
                copies.extend(extra);
            }
            for c in copies {
                let key: Vec<i64> = c.iter().map(|x| (x / size).floor() as i64).collect();
                map.entry(key).or_default().push((i, c));
            }
        }
        Buckets { size, map }
    }

    /// (distance, index) of the nearest point, searching at most three rings
    /// of buckets; beyond that the distance is reported as 3·size.
    fn nearest(&self, x: &[f64]) -> (f64, Option<usize>) {
        let dim = x.len();
        let base: Vec<i64> = x.iter().map(|v| (v / self.size).floor() as i64).collect();
        let mut best = (f64::INFINITY, None);
        for ring in 1..=3i64 {
            let side = (2 * ring + 1) as usize;
            let total = side.pow(dim as u32);
            for mut t in 0..total {
                let mut key = base.clone();
                for kj in key.iter_mut() {
                    *kj += (t % side) as i64 - ring;
                    t /= side;
                }
                if let Some(list) = self.map.get(&key) {
                    for (i, c) in list {
                        let dist = norm(&c.iter().zip(x).map(|(a, b)| a - b).collect::<Vec<_>>());
                        if dist < best.0 || (dist == best.0 && Some(*i) < best.1) {
                            best = (dist, Some(*i));
                        }
                    }
                }
            }
            if best.0 <= ring as f64 * self.size {
                return best;
            }
        }
        if best.1.is_none() {
            best.0 = 3.0 * self.size;
        }
        best
    }
}

fn coverage<F>(points: &[Vec<f64>], d: usize, grid: &Grid, keep: F, delta: f64) -> Coverage
where
    F: Fn(&[f64]) -> bool + Sync,
{
    let buckets = Buckets::new(points, d, delta);
    let eval = |i: usize| -> Option<(f64, Option<usize>, usize)> {
        let c = grid.center(i);
        if !keep(&c[..d]) {
            return None;
        }
        let (dist, w) = buckets.nearest(&c);
        Some((dist, w, i))
    };
    #[cfg(feature = "parallel")]
    let results: Vec<Option<(f64, Option<usize>, usize)>> = {
        use rayon::prelude::*;
        (0..grid.len()).into_par_iter().map(eval).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Option<(f64, Option<usize>, usize)>> = (0..grid.len()).map(eval).collect();

    let mut cov = Coverage {
        cells: 0,
        radius: 0.0,
        worst_point: Vec::new(),
        witnesses: BTreeSet::new(),
    };
    let mut worst = None;
    for (dist, w, i) in results.into_iter().flatten() {
        cov.cells += 1;
        if let Some(w) = w {
            cov.witnesses.insert(w);
        }
        if worst.is_none() || dist > cov.radius {
            cov.radius = dist;
            worst = Some(i);
        }
    }
    if let Some(i) = worst {
        cov.worst_point = grid.center(i);
    }
    cov
}

struct Attempt {
    orbit: Orbit,
    cov: Coverage,
    grid: Grid,
}

fn validate_points(e: &[TorusPoint], delta: f64) -> Result<(usize, usize)> {
    if e.is_empty() {
        return Err(Error::InvalidInput("empty point set".into()));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidInput("delta must be positive".into()));
    }
    let (d, k) = (e[0].d(), e[0].k());
    if d + k == 0 {
        return Err(Error::InvalidInput("points have no coordinates".into()));
    }
    for p in e {
        if p.d() != d || p.k() != k {
            return Err(Error::InvalidInput("points have inconsistent dimensions".into()));
        }
        if p.v.iter().chain(&p.c).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite coordinate".into()));
        }
    }
    Ok((d, k))
}

fn max_v_norm(gens: &[TorusPoint]) -> f64 {
    gens.iter().map(|g| norm(&g.v)).fold(0.0, f64::max)
}

/// Covering of region × C by the subgroup generated by `gens`.
fn group_attempt(gens: &[TorusPoint], d: usize, k: usize, delta: f64, region: &Window, coeff_bound: u32) -> Attempt {
    let lifted: Vec<Vec<f64>> = gens.iter().map(|g| g.lifted()).collect();
    let grid = Grid::new(region, k, delta / 2.0);
    let bounds = region.expanded(max_v_norm(gens) + delta);
    let orbit = explore(&lifted, d, vec![vec![0; gens.len()]], &bounds, delta / 4.0, coeff_bound as i64);
    let cov = coverage(&orbit.points, d, &grid, |_| true, delta);
    Attempt { orbit, cov, grid }
}

fn threshold_ok(radius: f64, grid: &Grid, delta: f64) -> bool {
    radius <= delta - grid.half_diagonal()
}

fn not_dense(a: &Attempt) -> Error {
    Error::NotDenseAtBudget {
        worst_point: a.cov.worst_point.clone(),
        worst_distance: a.cov.radius,
    }
}

/// Greedy choice of d elements whose V-parts span the largest volume.
fn volume_basis(e: &[TorusPoint], d: usize) -> Option<Vec<usize>> {
    let mut chosen: Vec<usize> = Vec::new();
    let scale = e.iter().map(|p| norm(&p.v)).fold(0.0, f64::max).max(1e-300);
    for _ in 0..d {
        let mut best: Option<(f64, usize)> = None;
        for i in 0..e.len() {
            if chosen.contains(&i) {
                continue;
            }
            let rows: Vec<&Vec<f64>> = chosen.iter().map(|&j| &e[j].v).chain(std::iter::once(&e[i].v)).collect();
            let m = rows.len();
            let gram = DMatrix::from_fn(m, m, |a, b| rows[a].iter().zip(rows[b]).map(|(x, y)| x * y).sum::<f64>());
            let vol = gram.determinant().max(0.0).sqrt();
            if best.map_or(true, |(v, _)| vol > v) {
                best = Some((vol, i));
            }
        }
        let (vol, i) = best?;
        if vol <= 1e-12 * scale.powi(chosen.len() as i32 + 1) {
            return None;
        }
        chosen.push(i);
    }
    Some(chosen)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    crate::linalg::subsets(n, k)
}

/// At most 3d + 2k elements of `e` whose subgroup δ-covers window × C.
///
/// The first d elements come from a greedy volume basis of the V-parts;
/// the rest are searched exhaustively among the smallest remaining elements,
/// adding up to 2(d + k) of them.
pub fn select_dense_subgroup_generators(
    e: &[TorusPoint],
    delta: f64,
    window: &Window,
    coeff_bound: u32,
) -> Result<DensityCertificate> {
    let (d, k) = validate_points(e, delta)?;
    window.validate(d)?;
    let basis = volume_basis(e, d)
        .ok_or_else(|| Error::HypothesisViolated("the V-parts of the points do not span V".into()))?;
    let mut rest: Vec<usize> = (0..e.len()).filter(|i| !basis.contains(i)).collect();
    rest.sort_by(|&a, &b| e[a].size().total_cmp(&e[b].size()).then(a.cmp(&b)));
    rest.truncate(MAX_CANDIDATES);

    let mut attempts = Vec::new();
    let mut best: Option<Attempt> = None;
    for extra in 0..=(2 * (d + k)).min(rest.len()) {
        for comb in combinations(rest.len(), extra) {
            if attempts.len() >= MAX_ATTEMPTS {
                break;
            }
            let mut idx = basis.clone();
            idx.extend(comb.iter().map(|&c| rest[c]));
            let gens: Vec<TorusPoint> = idx.iter().map(|&i| e[i].clone()).collect();
            let a = group_attempt(&gens, d, k, delta, window, coeff_bound);
            attempts.push(idx.clone());
            if threshold_ok(a.cov.radius, &a.grid, delta) {
                assert!(idx.len() <= 3 * d + 2 * k);
                let witnesses = a.cov.witnesses.iter().map(|&i| a.orbit.coeffs[i].clone()).collect();
                return Ok(DensityCertificate {
                    delta,
                    subset: gens,
                    subset_indices: idx,
                    grid_step: a.grid.max_step(),
                    coeff_bound,
                    covered: true,
                    window: window.clone(),
                    offset: vec![0.0; d],
                    cone: None,
                    semigroup: false,
                    cells: a.cov.cells,
                    covering_radius: a.cov.radius,
                    cell_radius: a.grid.half_diagonal(),
                    worst_point: a.cov.worst_point,
                    witnesses,
                    attempts,
                    threshold: None,
                });
            }
            if best.as_ref().map_or(true, |b| a.cov.radius < b.cov.radius) {
                best = Some(a);
            }
        }
    }
    Err(not_dense(&best.expect("at least one attempt")))
}

/// δ below which a single progression {m·f : m ≥ 0} cannot be δ-dense in its half-line.
pub fn progression_threshold(f: &TorusPoint) -> Option<f64> {
    (f.d() == 1 && f.k() == 0).then(|| f.v[0].abs() / 2.0)
}

/// Non-negative τ with Σ τ_f·g_f as close to x as possible (exact when x is
/// in the cone), over active sets of at most dim V generators.
fn cone_coefficients(x: &[f64], gens: &[Vec<f64>]) -> Vec<f64> {
    let d = x.len();
    let m = gens.len();
    let xv = DVector::from_column_slice(x);
    let mut best = (norm(x), vec![0.0; m]);
    for mask in 1u32..(1 << m) {
        let cols: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
        if cols.len() > d {
            continue;
        }
        let a = DMatrix::from_fn(d, cols.len(), |r, c| gens[cols[c]][r]);
        let svd = a.clone().svd(true, true);
        if svd.singular_values.iter().any(|s| *s < 1e-12) {
            continue;
        }
        let Ok(t) = svd.solve(&xv, 1e-14) else { continue };
        if t.iter().any(|v| *v < 0.0) {
            continue;
        }
        let res = (&a * &t - &xv).norm();
        // prefer the smallest residual, then the fewest generators
        if res < best.0 - 1e-12 {
            let mut tau = vec![0.0; m];
            for (c, v) in cols.iter().zip(t.iter()) {
                tau[*c] = *v;
            }
            best = (res, tau);
        }
    }
    best.1
}

/// A translation v_F such that the semigroup generated by F δ-covers
/// (v_F + Σ ℝ₊π_V(f)) × C, certified on the part of that set lying in
/// v_F + window.
///
/// This follows the classical argument. X ⊂ ⟨F⟩ is the part of the explored
/// subgroup lying over D̃ = {Σ t_f π_V(f) : 0 ≤ t_f ≤ 1} (its bounding box,
/// enlarged by δ), and h ∈ ⟨F⟩₊ is the smallest non-negative combination with
/// h + X ⊂ ⟨F⟩₊. A point v_F + Σ τ_f π_V(f) of the cone is then matched with
/// h + ⌊τ⌋ + x, where x ∈ X is nearest to the fractional remainder.
pub fn semigroup_cone_density(
    f: &[TorusPoint],
    delta: f64,
    window: &Window,
    coeff_bound: u32,
) -> Result<(Vec<f64>, DensityCertificate)> {
    let (d, k) = validate_points(f, delta)?;
    window.validate(d)?;
    let dbox = Window {
        lo: (0..d).map(|j| f.iter().map(|p| p.v[j].min(0.0)).sum()).collect(),
        hi: (0..d).map(|j| f.iter().map(|p| p.v[j].max(0.0)).sum()).collect(),
    };
    let group = group_attempt(f, d, k, delta, &dbox, coeff_bound);
    if !threshold_ok(group.cov.radius, &group.grid, delta) {
        return Err(not_dense(&group));
    }
    let grid = Grid::new(&window.clone(), k, delta / 2.0);
    let rho = grid.half_diagonal();
    let near = dbox.expanded(delta + rho);
    let xs: Vec<usize> = (0..group.orbit.points.len())
        .filter(|&i| (0..d).all(|j| {
            let v = group.orbit.points[i][j];
            v >= near.lo[j] && v <= near.hi[j]
        }))
        .collect();
    let h: Vec<i64> = (0..f.len())
        .map(|j| xs.iter().map(|&i| -group.orbit.coeffs[i][j]).max().unwrap_or(0).max(0))
        .collect();
    let lifted: Vec<Vec<f64>> = f.iter().map(|p| p.lifted()).collect();
    let v_f: Vec<f64> = combine(&lifted, &h, d)[..d].to_vec();
    let x_points: Vec<Vec<f64>> = xs.iter().map(|&i| group.orbit.points[i].clone()).collect();
    let buckets = Buckets::new(&x_points, d, delta);
    let cone: Vec<Vec<f64>> = f.iter().map(|p| p.v.clone()).collect();

    // cell centres are taken relative to v_F: the grid lives on `window`
    let eval = |i: usize| -> Option<(f64, Option<Vec<i64>>, usize)> {
        let c = grid.center(i);
        if distance_to_cone(&c[..d], &cone) > rho {
            return None;
        }
        let tau = cone_coefficients(&c[..d], &cone);
        let s: Vec<i64> = tau.iter().map(|t| t.floor() as i64).collect();
        let hs: Vec<i64> = h.iter().zip(&s).map(|(a, b)| a + b).collect();
        let shift = combine(&lifted, &s, d);
        let base = combine(&lifted, &hs, d);
        let mut target: Vec<f64> = c[..d].iter().zip(&shift).map(|(a, b)| a - b).collect();
        target.extend((d..d + k).map(|j| wrap(c[j] - base[j])));
        let (dist, w) = buckets.nearest(&target);
        let witness = w.map(|w| {
            let x = &group.orbit.coeffs[xs[w]];
            hs.iter().zip(x).map(|(a, b)| a + b).collect()
        });
        Some((dist, witness, i))
    };
    #[cfg(feature = "parallel")]
    let results: Vec<Option<(f64, Option<Vec<i64>>, usize)>> = {
        use rayon::prelude::*;
        (0..grid.len()).into_par_iter().map(eval).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Option<(f64, Option<Vec<i64>>, usize)>> = (0..grid.len()).map(eval).collect();

    let mut cells = 0;
    let mut radius = 0.0;
    let mut worst = None;
    let mut witnesses = BTreeSet::new();
    for (dist, w, i) in results.into_iter().flatten() {
        cells += 1;
        if let Some(w) = w {
            witnesses.insert(w);
        }
        if worst.is_none() || dist > radius {
            radius = dist;
            worst = Some(i);
        }
    }
    let worst_point: Vec<f64> = match worst {
        Some(i) => {
            let mut c = grid.center(i);
            c.iter_mut().zip(&v_f).for_each(|(a, b)| *a += b);
            c
        }
        None => Vec::new(),
    };
    let covered = cells > 0 && radius <= delta - rho;
    if !covered {
        return Err(Error::NotDenseAtBudget {
            worst_point,
            worst_distance: radius,
        });
    }
    let threshold = if f.len() == 1 { progression_threshold(&f[0]) } else { None };
    let cert = DensityCertificate {
        delta,
        subset: f.to_vec(),
        subset_indices: (0..f.len()).collect(),
        grid_step: grid.max_step(),
        coeff_bound,
        covered,
        window: window.clone(),
        offset: v_f.clone(),
        cone: Some(cone),
        semigroup: true,
        cells,
        covering_radius: radius,
        cell_radius: rho,
        worst_point,
        witnesses: witnesses.into_iter().collect(),
        attempts: vec![(0..f.len()).collect()],
        threshold,
    };
    Ok((v_f, cert))
}

/// Outcome of an independent re-check of a certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reverification {
    pub covered: bool,
    pub cells: usize,
    pub uncovered: usize,
    /// witnesses that failed to be genuine (negative coefficient in a semigroup certificate)
    pub bad_witnesses: usize,
}

/// Single-threaded re-check of `cert` at tolerance `delta` on the
/// certificate's own grid: witnesses are rebuilt from their coefficients and
/// every cell centre is compared against them by a sorted sweep.
pub fn reverify(cert: &DensityCertificate, delta: f64) -> Reverification {
    let d = cert.window.d();
    let k = cert.subset.first().map_or(0, |p| p.k());
    let lifted: Vec<Vec<f64>> = cert.subset.iter().map(|p| p.lifted()).collect();
    let mut bad = 0;
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(cert.witnesses.len());
    for w in &cert.witnesses {
        if w.len() != lifted.len() || (cert.semigroup && w.iter().any(|c| *c < 0)) {
            bad += 1;
            continue;
        }
        let mut p = vec![0.0; d + k];
        for (g, &n) in lifted.iter().zip(w) {
            for (pj, gj) in p.iter_mut().zip(g) {
                *pj += n as f64 * gj;
            }
        }
        for pj in p.iter_mut().skip(d) {
            *pj -= pj.floor();
        }
        pts.push(p);
    }
    let region = cert.window.shifted(&cert.offset);
    let grid = Grid::new(&region, k, cert.delta / 2.0);
    let thr = delta - grid.half_diagonal();
    let sweep = d > 0;
    if sweep {
        pts.sort_by(|a, b| a[0].total_cmp(&b[0]));
    }
    let mut cells = 0;
    let mut uncovered = 0;
    for i in 0..grid.len() {
        let c = grid.center(i);
        if let Some(cone) = &cert.cone {
            let rel: Vec<f64> = c[..d].iter().zip(&cert.offset).map(|(a, b)| a - b).collect();
            if distance_to_cone(&rel, cone) > grid.half_diagonal() {
                continue;
            }
        }
        cells += 1;
        let (from, to) = if sweep {
            (
                pts.partition_point(|p| p[0] < c[0] - thr),
                pts.partition_point(|p| p[0] <= c[0] + thr),
            )
        } else {
            (0, pts.len())
        };
        if !pts[from..to].iter().any(|p| torus_distance(p, &c, d) <= thr) {
            uncovered += 1;
        }
    }
    Reverification {
        covered: bad == 0 && uncovered == 0 && cells > 0,
        cells,
        uncovered,
        bad_witnesses: bad,
    }
}

// ------------------------------------------------------------ Jordan bridge

/// Coordinates of a trace-free vector in the orthonormal Helmert basis
/// (e_1 + … + e_j − j·e_{j+1}) / √(j(j+1)), j = 1..n−1.
pub fn cartan_coordinates(v: &CartanVector) -> Vec<f64> {
    let x = v.coords();
    let n = x.len();
    (1..n)
        .map(|j| {
            let s: f64 = x[..j].iter().sum::<f64>() - j as f64 * x[j];
            s / ((j * (j + 1)) as f64).sqrt()
        })
        .collect()
}

/// Inverse of [`cartan_coordinates`].
pub fn from_cartan_coordinates(y: &[f64]) -> CartanVector {
    let n = y.len() + 1;
    let mut x = vec![0.0; n];
    for (jm1, &c) in y.iter().enumerate() {
        let j = jm1 + 1;
        let s = c / ((j * (j + 1)) as f64).sqrt();
        for xi in x.iter_mut().take(j) {
            *xi += s;
        }
        x[j] -= j as f64 * s;
    }
    CartanVector::centered(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BridgeParams {
    pub coeff_bound: u32,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for BridgeParams {
    fn default() -> Self {
        BridgeParams {
            coeff_bound: DEFAULT_COEFF_BOUND,
            mc_samples: 1000,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BridgeReport {
    pub l: usize,
    /// λ(γ_i) in Helmert coordinates of 𝔞
    pub generator_lambdas: Vec<Vec<f64>>,
    /// A-part of the cyclic ratio chain
    pub ratio_correction: Vec<f64>,
    /// predicted λ(γ_l^{n_l}⋯γ_1^{n_1}) = translation + Σ (n_i − 1) λ(γ_i)
    pub translation: Vec<f64>,
    pub v_f: Vec<f64>,
    pub certificate: DensityCertificate,
    pub delta_hat: f64,
    /// certificate δ plus 2l·δ̂
    pub delta_total: f64,
    /// largest |λ(word) − prediction| over exponents in {1, 2}^l
    pub prediction_residual: f64,
    pub residual_pass: bool,
}

/// Feeds the Jordan projections of a Schottky family into
/// [`semigroup_cone_density`] on V = 𝔞 (no torus part).
///
/// The words γ_l^{n_l}⋯γ_1^{n_1} have λ ≈ Σ n_i λ(γ_i) + c, where c is the
/// A-part of the ratio chain of the ordering, with error at most 2l·δ_{r,ε}.
/// The certified set is therefore translated by c + Σ λ(γ_i) and the
/// tolerance inflated by 2l·δ̂.
pub fn jordan_density_bridge(
    fam: &SchottkyFamily,
    delta: f64,
    window: &Window,
    params: BridgeParams,
) -> Result<BridgeReport> {
    if fam.is_empty() {
        return Err(Error::InvalidInput("empty family".into()));
    }
    let n = fam.n();
    let l = fam.len();
    let gens = &fam.generators;
    let mut correction = CartanVector::zero(n);
    for j in 0..l {
        let prev = (j + l - 1) % l;
        let r = ratio_lox(&fam.charts[j], &fam.charts[prev], &gens[j], &gens[prev].attracting)?;
        correction = correction.add(&r.a);
    }
    let lambdas: Vec<Vec<f64>> = gens.iter().map(|g| cartan_coordinates(&g.lambda)).collect();
    let sum_lambda = gens.iter().fold(CartanVector::zero(n), |acc, g| acc.add(&g.lambda));
    let translation = cartan_coordinates(&sum_lambda.add(&correction));

    let f: Vec<TorusPoint> = lambdas.iter().map(|v| TorusPoint::new(v.clone(), Vec::new())).collect();
    let (v_f, certificate) = semigroup_cone_density(&f, delta, window, params.coeff_bound)?;
    let delta_hat = delta_r_eps(n, fam.r, fam.eps, params.mc_samples, params.seed)?;

    let mut residual: f64 = 0.0;
    for mask in 0..(1usize << l) {
        let exps: Vec<usize> = (0..l).map(|i| 1 + (mask >> i & 1)).collect();
        let mut word = Vec::new();
        for i in (0..l).rev() {
            word.extend(std::iter::repeat(i as u8).take(exps[i]));
        }
        let measured = cartan_coordinates(&fam.word_powers(&word).jordan());
        let predicted: Vec<f64> = (0..n - 1)
            .map(|j| translation[j] + (0..l).map(|i| (exps[i] - 1) as f64 * lambdas[i][j]).sum::<f64>())
            .collect();
        let dist = norm(&measured.iter().zip(&predicted).map(|(a, b)| a - b).collect::<Vec<_>>());
        residual = residual.max(dist);
    }
    let bound = 2.0 * l as f64 * delta_hat;
    Ok(BridgeReport {
        l,
        generator_lambdas: lambdas,
        ratio_correction: cartan_coordinates(&correction),
        translation,
        v_f,
        delta_total: certificate.delta + bound,
        certificate,
        delta_hat,
        prediction_residual: residual,
        residual_pass: residual <= bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(v: &[f64], c: &[f64]) -> TorusPoint {
        TorusPoint::new(v.to_vec(), c.to_vec())
    }

    #[test]
    fn torus_coordinates_are_reduced() {
        let p = pt(&[0.0], &[1.25, -0.25, 1.0]);
        assert_eq!(p.c, vec![0.25, 0.75, 0.0]);
    }

    #[test]
    fn helmert_round_trip() {
        let v = CartanVector::centered(vec![3.0, 0.5, -1.0, -2.5]);
        let y = cartan_coordinates(&v);
        assert!((norm(&y) - v.norm()).abs() < 1e-12);
        let back = from_cartan_coordinates(&y);
        assert!(back.distance(&v) < 1e-12);
    }

    #[test]
    fn cone_distance() {
        let gens = vec![vec![1.0, 0.0], vec![1.0, 1.0]];
        assert_eq!(distance_to_cone(&[2.0, 1.0], &gens), 0.0);
        assert!((distance_to_cone(&[0.0, -1.0], &gens) - 1.0).abs() < 1e-12);
        assert!((distance_to_cone(&[-1.0, 1.0], &gens) - 2f64.sqrt()).abs() < 1e-12);
        let three = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        assert!((distance_to_cone(&[1.0, 1.0, 1.0], &three) - 1.0).abs() < 1e-12);
        assert!((distance_to_cone(&[-1.0, 0.0, 0.0], &three) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn integers_alone_are_not_dense() {
        let e = vec![pt(&[1.0], &[])];
        let err = select_dense_subgroup_generators(&e, 0.1, &Window::cube(1, -1.0, 1.0), 100).unwrap_err();
        assert!(matches!(err, Error::NotDenseAtBudget { .. }));
    }

    #[test]
    fn single_progression_threshold() {
        let f = vec![pt(&[1.0], &[])];
        assert_eq!(progression_threshold(&f[0]), Some(0.5));
        let (v, cert) = semigroup_cone_density(&f, 0.8, &Window::cube(1, -5.0, 5.0), 100).unwrap();
        assert!(v[0] >= 0.0 && v[0].fract() == 0.0);
        assert_eq!(cert.threshold, Some(0.5));
        assert!(semigroup_cone_density(&f, 0.4, &Window::cube(1, -5.0, 5.0), 100).is_err());
    }
}
