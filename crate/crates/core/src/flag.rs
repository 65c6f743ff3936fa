//! Full flags of ℝⁿ as orthonormal frames modulo signs.

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::group::{GroupElement, Mat};
use crate::linalg::{kan, orthonormal_frame};
use crate::sampling;

/// A full flag, stored as a frame in SO(n) whose first j columns span the
/// j-dimensional subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct Flag {
    rep: Mat,
    canonical: bool,
}

/// The antidiagonal permutation in SO(n). Only the (0, n−1) entry can be
/// negative.
pub fn k_iota(n: usize) -> Mat {
    let mut k = Mat::zeros(n, n);
    for i in 0..n {
        k[(i, n - 1 - i)] = 1.0;
    }
    if (n * (n - 1) / 2) % 2 == 1 {
        k[(0, n - 1)] = -1.0;
    }
    k
}

/// Fix the M-ambiguity of a frame: the largest entry (first one on ties) of
/// each column but the last is made positive, then the last column is
/// chosen to make det positive.
pub fn canonicalize(k: &mut Mat) {
    let n = k.nrows();
    for j in 0..n - 1 {
        let mut best = 0;
        for i in 1..n {
            if k[(i, j)].abs() > k[(best, j)].abs() {
                best = i;
            }
        }
        if k[(best, j)] < 0.0 {
            k.column_mut(j).neg_mut();
        }
    }
    if k.determinant() < 0.0 {
        k.column_mut(n - 1).neg_mut();
    }
}

impl Flag {
    /// Accepts an orthonormal frame with det +1.
    pub fn from_frame(k: Mat) -> Result<Flag> {
        let n = k.nrows();
        if n < 2 || k.ncols() != n || k.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("flag frame must be square, finite, n >= 2".into()));
        }
        let defect = (k.transpose() * &k - Mat::identity(n, n)).amax();
        if defect > 1e-10 {
            return Err(Error::InvalidInput(format!(
                "flag frame is not orthonormal (defect {defect:e})"
            )));
        }
        if k.determinant() < 0.0 {
            return Err(Error::InvalidInput("flag frame must have det +1".into()));
        }
        Ok(Flag::from_frame_unchecked(k))
    }

    pub(crate) fn from_frame_unchecked(mut k: Mat) -> Flag {
        canonicalize(&mut k);
        Flag { rep: k, canonical: true }
    }

    /// η₀, spanned by the standard basis in order.
    pub fn standard(n: usize) -> Flag {
        Flag { rep: Mat::identity(n, n), canonical: true }
    }

    /// η̌₀ = k_ι η₀, the standard basis in reverse order.
    pub fn opposite(n: usize) -> Flag {
        Flag::from_frame_unchecked(k_iota(n))
    }

    /// The coordinate flag spanned by e_{w(0)}, e_{w(1)}, ...
    pub fn permutation(w: &[usize]) -> Flag {
        let n = w.len();
        Flag::from_frame_unchecked(Mat::from_fn(n, n, |i, j| if w[j] == i { 1.0 } else { 0.0 }))
    }

    pub fn rep(&self) -> &Mat {
        &self.rep
    }

    pub fn canonical(&self) -> bool {
        self.canonical
    }

    pub fn n(&self) -> usize {
        self.rep.nrows()
    }

    /// Equality up to a flag distance.
    pub fn approx_eq(&self, other: &Flag, tol: f64) -> bool {
        flag_distance(self, other) <= tol
    }
}

impl Serialize for Flag {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FlagJson {
            rep: crate::io::MatrixJson::from_mat(&self.rep),
            canonical: self.canonical,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Flag {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = FlagJson::deserialize(d)?;
        let m = j.rep.to_mat().map_err(serde::de::Error::custom)?;
        Flag::from_frame(m).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct FlagJson {
    rep: crate::io::MatrixJson,
    #[serde(default = "yes")]
    canonical: bool,
}

fn yes() -> bool {
    true
}

pub fn flag_of(g: &GroupElement) -> Flag {
    flag_of_matrix(g.matrix()).expect("determinant-one matrix has a KAN decomposition")
}

/// Flag spanned by the columns of an invertible matrix with positive det.
pub fn flag_of_matrix(m: &Mat) -> Result<Flag> {
    Ok(Flag::from_frame_unchecked(kan(m)?.k))
}

pub fn act(g: &GroupElement, xi: &Flag) -> Flag {
    act_matrix(g.matrix(), xi)
}

pub(crate) fn act_matrix(m: &Mat, xi: &Flag) -> Flag {
    Flag::from_frame_unchecked(orthonormal_frame(&(m * &xi.rep)))
}

/// Frobenius chordal distance between representatives, minimized over the
/// sign group. Per column the best sign is the sign of the inner product;
/// if that violates the parity constraint the cheapest column is flipped.
pub fn flag_distance(xi: &Flag, eta: &Flag) -> f64 {
    let n = xi.n();
    let mut total = 0.0;
    let mut negatives = 0;
    let mut cheapest = f64::INFINITY;
    for j in 0..n {
        let a = xi.rep.column(j);
        let b = eta.rep.column(j);
        let c = a.dot(&b);
        // |a − sb|² summed directly; 2 − 2|c| would cancel for close flags
        total += if c < 0.0 { (a + b).norm_squared() } else { (a - b).norm_squared() };
        if c < 0.0 {
            negatives += 1;
        }
        cheapest = cheapest.min(c.abs());
    }
    if negatives % 2 == 1 {
        total += 4.0 * cheapest;
    }
    total.sqrt()
}

/// `k_ι · rep(ξ̌)ᵀ · rep(ξ)`; its leading minors vanish exactly on the
/// complement of the cell opposite ξ̌.
pub fn comparison_matrix(xi: &Flag, xi_check: &Flag) -> Mat {
    k_iota(xi.n()) * xi_check.rep.transpose() * &xi.rep
}

/// Minors Δ_1..Δ_{n−1}; Δ_n = 1 carries no information.
pub(crate) fn proper_minors(c: &Mat) -> Vec<f64> {
    let n = c.nrows();
    (1..n)
        .map(|k| c.view((0, 0), (k, k)).into_owned().determinant())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transversality {
    pub transverse: bool,
    /// smallest absolute leading minor of the comparison matrix
    pub margin: f64,
}

pub fn transversality(xi: &Flag, xi_check: &Flag, cfg: &Config) -> Transversality {
    let margin = proper_minors(&comparison_matrix(xi, xi_check))
        .into_iter()
        .fold(f64::INFINITY, |m, d| m.min(d.abs()));
    Transversality {
        transverse: margin >= cfg.tol_minor,
        margin,
    }
}

pub fn is_transverse(xi: &Flag, xi_check: &Flag) -> bool {
    transversality(xi, xi_check, &Config::default()).transverse
}

/// Guaranteed lower bound on d(ξ, ∂𝖻(ξ̌)): the k-th minor is √k-Lipschitz
/// for the chordal distance, so min_k |Δ_k|/√k cannot reach zero sooner.
pub fn cell_margin_lower_bound(xi: &Flag, xi_check: &Flag) -> f64 {
    proper_minors(&comparison_matrix(xi, xi_check))
        .into_iter()
        .enumerate()
        .map(|(k, d)| d.abs() / ((k + 1) as f64).sqrt())
        .fold(f64::INFINITY, f64::min)
}

pub const DEFAULT_MESH: usize = 64;

const RAY_STEP: f64 = 0.04;

/// Unit directions in so(n). Any prefix of the list is the list for a
/// smaller mesh, so refining the mesh can only lower the margin.
pub fn mesh_directions(n: usize, count: usize) -> Vec<Mat> {
    if n == 2 {
        let mut x = Mat::zeros(2, 2);
        x[(0, 1)] = -std::f64::consts::FRAC_1_SQRT_2;
        x[(1, 0)] = std::f64::consts::FRAC_1_SQRT_2;
        return vec![x.clone(), -x];
    }
    let mut rng = sampling::rng(0x6d65_7368 + n as u64);
    let mut dirs = Vec::with_capacity(count + 1);
    while dirs.len() < count {
        let x = sampling::random_skew(&mut rng, n);
        dirs.push(x.clone());
        dirs.push(-x);
    }
    dirs.truncate(count);
    dirs
}

/// Estimate of d(ξ, ∂𝖻(ξ̌)) with the default mesh.
pub fn cell_margin(xi: &Flag, xi_check: &Flag) -> Result<f64> {
    cell_margin_with_mesh(xi, xi_check, DEFAULT_MESH)
}

/// Follows geodesics t ↦ rep(ξ)·exp(tX) for each mesh direction X until a
/// leading minor changes sign, locates the crossing by bisection and
/// returns the smallest distance from ξ to a crossing. Every crossing is a
/// genuine boundary point, so the value approaches the true margin from
/// above as the mesh is refined.
pub fn cell_margin_with_mesh(xi: &Flag, xi_check: &Flag, mesh: usize) -> Result<f64> {
    if xi.n() != xi_check.n() {
        return Err(Error::InvalidInput("flags of different dimension".into()));
    }
    let cfg = Config::default();
    if !transversality(xi, xi_check, &cfg).transverse {
        return Ok(0.0);
    }
    let n = xi.n();
    let p = k_iota(n) * xi_check.rep.transpose();
    let mut best = (2.0 * n as f64).sqrt();
    for x in mesh_directions(n, mesh.max(1)) {
        if let Some(hit) = ray_hit(&p, &xi.rep, &x) {
            best = best.min(flag_distance(xi, &hit));
        }
    }
    Ok(best)
}

/// First boundary crossing along rep(ξ)·exp(tX), if any.
pub fn boundary_hit(xi: &Flag, xi_check: &Flag, x: &Mat) -> Option<Flag> {
    let p = k_iota(xi.n()) * xi_check.rep.transpose();
    ray_hit(&p, &xi.rep, x)
}

fn ray_hit(p: &Mat, k0: &Mat, x: &Mat) -> Option<Flag> {
    let n = k0.nrows();
    let t_max = std::f64::consts::PI * (n as f64).sqrt();
    let step = (x * RAY_STEP).exp();
    let mut k = k0.clone();
    let mut prev = proper_minors(&(p * &k));
    let mut t = 0.0;
    while t < t_max {
        let k_next = &k * &step;
        let t_next = t + RAY_STEP;
        let cur = proper_minors(&(p * &k_next));
        let mut root: Option<f64> = None;
        for j in 0..cur.len() {
            if cur[j] == 0.0 || cur[j].signum() != prev[j].signum() {
                let r = bisect_minor(p, k0, x, j, t, t_next);
                root = Some(root.map_or(r, |q: f64| q.min(r)));
            }
        }
        if let Some(r) = root {
            return Some(Flag::from_frame_unchecked(k0 * (x * r).exp()));
        }
        k = k_next;
        prev = cur;
        t = t_next;
    }
    None
}

/// Root of the j-th minor along the ray inside a sign-change bracket,
/// by the Illinois variant of regula falsi.
fn bisect_minor(p: &Mat, k0: &Mat, x: &Mat, j: usize, lo: f64, hi: f64) -> f64 {
    let f = |t: f64| {
        let c = p * k0 * (x * t).exp();
        c.view((0, 0), (j + 1, j + 1)).into_owned().determinant()
    };
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fb == 0.0 {
        return b;
    }
    let mut side = 0;
    let mut prev = f64::NAN;
    for _ in 0..100 {
        let c = (a * fb - b * fa) / (fb - fa);
        let fc = f(c);
        if fc == 0.0 || (c - prev).abs() < 1e-14 {
            return c;
        }
        prev = c;
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if (b - a).abs() < 1e-13 {
            break;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_iota_is_special_orthogonal() {
        for n in 2..6 {
            let k = k_iota(n);
            assert!((k.determinant() - 1.0).abs() < 1e-15);
            assert_eq!(Flag::opposite(n).rep(), &k);
        }
    }

    #[test]
    fn standard_and_opposite_are_transverse() {
        for n in 2..5 {
            assert!(is_transverse(&Flag::standard(n), &Flag::opposite(n)));
            assert!(!is_transverse(&Flag::standard(n), &Flag::standard(n)));
        }
    }

    #[test]
    fn sl2_max_distance() {
        let d = flag_distance(&Flag::standard(2), &Flag::opposite(2));
        assert!((d - 2.0).abs() < 1e-15);
    }

    #[test]
    fn boundary_point_has_zero_margin() {
        // e_2 lies in the plane spanned by e_2, e_1 of the opposite flag
        let xi = Flag::permutation(&[1, 0, 2]);
        assert_eq!(cell_margin(&xi, &Flag::opposite(3)).unwrap(), 0.0);
        assert_eq!(cell_margin(&Flag::standard(3), &Flag::standard(3)).unwrap(), 0.0);
    }

    #[test]
    fn sl2_margin_is_distance_to_the_opposite_line() {
        let xi = Flag::standard(2);
        let xc = Flag::opposite(2);
        let m = cell_margin(&xi, &xc).unwrap();
        assert!((m - flag_distance(&xi, &xc)).abs() < 1e-9);
    }
}
