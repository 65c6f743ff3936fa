//! Iwasawa, Cartan, Bruhat and Jordan decompositions of SL(n).

use crate::config::Config;
use crate::error::{Error, Result};
use crate::group::{AMElement, CartanVector, GroupElement, Mat, SignVector};

/// `g = k · exp(diag a) · u` with `k` in SO(n) and `u` unipotent triangular.
#[derive(Debug, Clone, PartialEq)]
pub struct IwasawaTriple {
    pub k: Mat,
    pub a: CartanVector,
    pub u: Mat,
}

impl IwasawaTriple {
    pub fn reconstruct(&self) -> Mat {
        &self.k * exp_diag(&self.a) * &self.u
    }
}

/// `g = k1 · exp(diag a) · k2` with `a` non-increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct CartanTriple {
    pub k1: Mat,
    pub a: CartanVector,
    pub k2: Mat,
}

impl CartanTriple {
    pub fn reconstruct(&self) -> Mat {
        &self.k1 * exp_diag(&self.a) * &self.k2
    }
}

/// `g = u_minus · diag(x) · u_plus`.
#[derive(Debug, Clone, PartialEq)]
pub struct BruhatTriple {
    pub u_minus: Mat,
    pub x: AMElement,
    pub u_plus: Mat,
}

impl BruhatTriple {
    pub fn reconstruct(&self) -> Mat {
        &self.u_minus * self.x.to_matrix() * &self.u_plus
    }
}

pub fn exp_diag(a: &CartanVector) -> Mat {
    let n = a.n();
    Mat::from_fn(n, n, |i, j| if i == j { a.coords()[i].exp() } else { 0.0 })
}

/// ‖a − b‖_F / ‖b‖_F.
pub fn relative_error(a: &Mat, b: &Mat) -> f64 {
    (a - b).norm() / b.norm()
}

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

pub fn iwasawa_kan(g: &GroupElement) -> Result<IwasawaTriple> {
    kan(g.matrix())
}

fn signed_qr(m: &Mat) -> (Mat, Mat) {
    let n = m.nrows();
    let qr = m.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for i in 0..n {
        if r[(i, i)] < 0.0 {
            q.column_mut(i).neg_mut();
            r.row_mut(i).neg_mut();
        }
    }
    (q, r)
}

/// The K-part of KAN without any conditioning check. For flags spanned by
/// the columns of m, which stay meaningful far beyond the range where the
/// A and N parts are accurate.
pub(crate) fn orthonormal_frame(m: &Mat) -> Mat {
    signed_qr(m).0
}

/// KAN of any matrix with positive determinant.
pub fn kan(m: &Mat) -> Result<IwasawaTriple> {
    let n = m.nrows();
    let (q, mut r) = signed_qr(m);
    // powers of loxodromic elements legitimately have diagonal entries far
    // below ε·‖m‖, so only numerically zero pivots are rejected
    let floor = f64::EPSILON * f64::EPSILON * m.norm();
    if (0..n).any(|i| !(r[(i, i)] > floor)) {
        return Err(Error::NonInvertible);
    }
    let d: Vec<f64> = (0..n).map(|i| r[(i, i)]).collect();
    let a = CartanVector::centered(d.iter().map(|x| x.ln()).collect());
    for i in 0..n {
        let di = d[i];
        r.row_mut(i).scale_mut(1.0 / di);
        r[(i, i)] = 1.0;
    }
    Ok(IwasawaTriple { k: q, a, u: r })
}

pub fn iwasawa_kan_minus(g: &GroupElement) -> Result<IwasawaTriple> {
    kan_minus(g.matrix())
}

/// KAN⁻ by Gram–Schmidt run from the last column to the first, with one
/// round of re-orthogonalization.
pub fn kan_minus(m: &Mat) -> Result<IwasawaTriple> {
    let n = m.nrows();
    let mut k = Mat::zeros(n, n);
    // lower-triangular factor L with m = k L
    let mut l = Mat::zeros(n, n);
    let floor = f64::EPSILON * m.norm();
    for j in (0..n).rev() {
        let mut v = m.column(j).into_owned();
        for _pass in 0..2 {
            for i in j + 1..n {
                let c = k.column(i).dot(&v);
                v.axpy(-c, &k.column(i), 1.0);
                l[(i, j)] += c;
            }
        }
        let nv = v.norm();
        if nv <= floor {
            return Err(Error::NonInvertible);
        }
        l[(j, j)] = nv;
        k.set_column(j, &(v / nv));
    }
    if k.determinant() < 0.0 {
        return Err(Error::InvalidInput("KAN- needs a positive determinant".into()));
    }
    let d: Vec<f64> = (0..n).map(|i| l[(i, i)]).collect();
    let a = CartanVector::centered(d.iter().map(|x| x.ln()).collect());
    for i in 0..n {
        // L = diag(d) u⁻, so row i is divided by d_i
        let di = d[i];
        l.row_mut(i).scale_mut(1.0 / di);
        l[(i, i)] = 1.0;
    }
    Ok(IwasawaTriple { k, a, u: l })
}

pub fn cartan_kak(g: &GroupElement) -> Result<CartanTriple> {
    kak(g.matrix())
}

pub fn kak(m: &Mat) -> Result<CartanTriple> {
    let n = m.nrows();
    let svd = m
        .clone()
        .try_svd(true, true, f64::EPSILON, 10_000)
        .ok_or(Error::NonInvertible)?;
    let mut u = svd.u.ok_or(Error::NonInvertible)?;
    let mut vt = svd.v_t.ok_or(Error::NonInvertible)?;
    let s = svd.singular_values;
    // try_svd sorts, but keep the ordering explicit
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
    let u_sorted = Mat::from_fn(n, n, |i, j| u[(i, order[j])]);
    let vt_sorted = Mat::from_fn(n, n, |i, j| vt[(order[i], j)]);
    u = u_sorted;
    vt = vt_sorted;
    if s.iter().any(|x| *x <= 0.0) {
        return Err(Error::NonInvertible);
    }
    if u.determinant() < 0.0 {
        u.column_mut(n - 1).neg_mut();
        vt.row_mut(n - 1).neg_mut();
    }
    let a = CartanVector::centered(order.iter().map(|&i| s[i].ln()).collect());
    Ok(CartanTriple { k1: u, a, k2: vt })
}

/// Leading principal minors Δ_1..Δ_n.
pub fn leading_minors(m: &Mat) -> Vec<f64> {
    let n = m.nrows();
    (1..=n)
        .map(|k| m.view((0, 0), (k, k)).into_owned().determinant())
        .collect()
}

pub fn bruhat_lu(g: &GroupElement, cfg: &Config) -> Result<BruhatTriple> {
    bruhat(g.matrix(), cfg)
}

/// Doolittle LU without pivoting. The pivots are ratios of consecutive
/// leading minors.
pub fn bruhat(m: &Mat, cfg: &Config) -> Result<BruhatTriple> {
    let n = m.nrows();
    let scale = max_abs(m);
    let mut w = m.clone();
    let mut minor = 1.0f64;
    let mut pivots = Vec::with_capacity(n);
    for k in 0..n {
        let p = w[(k, k)];
        minor *= p;
        if !(minor.abs() >= cfg.tol_minor * scale.powi(k as i32 + 1)) {
            return Err(Error::NotInBigCell {
                index: k + 1,
                minor,
            });
        }
        pivots.push(p);
        for i in k + 1..n {
            let f = w[(i, k)] / p;
            w[(i, k)] = f;
            for j in k + 1..n {
                let t = w[(k, j)];
                w[(i, j)] -= f * t;
            }
        }
    }
    let mut u_minus = Mat::identity(n, n);
    let mut u_plus = Mat::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            if i > j {
                u_minus[(i, j)] = w[(i, j)];
            } else if i < j {
                u_plus[(i, j)] = w[(i, j)] / pivots[i];
            }
        }
    }
    let x = AMElement::from_diagonal(&pivots)?;
    Ok(BruhatTriple { u_minus, x, u_plus })
}

/// k-subsets of 0..n in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Matrix of the k-th exterior power in the lexicographic basis of
/// k-subsets.
pub fn compound(m: &Mat, k: usize) -> Mat {
    let n = m.nrows();
    let sets = subsets(n, k);
    let c = sets.len();
    let mut sub = Mat::zeros(k, k);
    Mat::from_fn(c, c, |i, j| {
        for (a, &r) in sets[i].iter().enumerate() {
            for (b, &s) in sets[j].iter().enumerate() {
                sub[(a, b)] = m[(r, s)];
            }
        }
        sub.determinant()
    })
}

/// Exterior powers ∧¹..∧ⁿ⁻¹ of a matrix, each kept at unit max-entry with
/// the log of the removed scale stored separately. Products of these stay
/// accurate for long words, where forming the product matrix first would
/// lose the small singular directions.
#[derive(Debug, Clone)]
pub struct ExteriorPowers {
    mats: Vec<Mat>,
    log_scale: Vec<f64>,
}

/// Spectral data of one exterior power.
#[derive(Debug, Clone, Copy)]
struct TopEigen {
    log_modulus: f64,
    /// sign of the top eigenvalue when it is real and dominant
    sign: f64,
    /// 1 − |μ₂|/|μ₁|
    rel_gap: f64,
}

impl ExteriorPowers {
    pub fn of(m: &Mat) -> Self {
        let n = m.nrows();
        let mut mats = Vec::with_capacity(n - 1);
        let mut log_scale = Vec::with_capacity(n - 1);
        let s0 = max_abs(m);
        let mn = m / s0;
        for k in 1..n {
            let c = compound(&mn, k);
            let s = max_abs(&c);
            mats.push(c / s);
            log_scale.push(k as f64 * s0.ln() + s.ln());
        }
        ExteriorPowers { mats, log_scale }
    }

    pub fn identity(n: usize) -> Self {
        let mats = (1..n)
            .map(|k| {
                let c = subsets(n, k).len();
                Mat::identity(c, c)
            })
            .collect();
        ExteriorPowers {
            mats,
            log_scale: vec![0.0; n - 1],
        }
    }

    pub fn n(&self) -> usize {
        self.mats.len() + 1
    }

    pub fn mul(&self, other: &ExteriorPowers) -> ExteriorPowers {
        let mut mats = Vec::with_capacity(self.mats.len());
        let mut log_scale = Vec::with_capacity(self.mats.len());
        for k in 0..self.mats.len() {
            let p = &self.mats[k] * &other.mats[k];
            let s = max_abs(&p);
            mats.push(p / s);
            log_scale.push(self.log_scale[k] + other.log_scale[k] + s.ln());
        }
        ExteriorPowers { mats, log_scale }
    }

    /// pᵗʰ power by repeated squaring.
    pub fn pow(&self, mut p: u32) -> ExteriorPowers {
        let mut acc = ExteriorPowers::identity(self.n());
        let mut base = self.clone();
        while p > 0 {
            if p & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            p >>= 1;
        }
        acc
    }

    /// Leading principal minors Δ_1..Δ_{n−1} of the underlying matrix as
    /// (log |Δ_k|, sign Δ_k).
    pub fn leading_minors(&self) -> Vec<(f64, f64)> {
        self.mats
            .iter()
            .zip(&self.log_scale)
            .map(|(m, s)| (m[(0, 0)].abs().ln() + s, m[(0, 0)].signum()))
            .collect()
    }

    fn top(&self, k: usize) -> TopEigen {
        let ev = self.mats[k].complex_eigenvalues();
        let mut best = 0usize;
        for i in 1..ev.len() {
            if ev[i].norm() > ev[best].norm() {
                best = i;
            }
        }
        let top = ev[best];
        let m1 = top.norm();
        let mut m2 = 0.0f64;
        for i in 0..ev.len() {
            if i != best {
                m2 = m2.max(ev[i].norm());
            }
        }
        let rel_gap = if m1 > 0.0 { 1.0 - m2 / m1 } else { 0.0 };
        TopEigen {
            log_modulus: m1.ln() + self.log_scale[k],
            sign: if top.re < 0.0 { -1.0 } else { 1.0 },
            rel_gap,
        }
    }

    /// Jordan projection: s_k = log ρ(∧ᵏ g) and λ_k = s_k − s_{k−1}.
    pub fn jordan(&self) -> CartanVector {
        let n = self.n();
        let s: Vec<f64> = (0..n - 1).map(|k| self.top(k).log_modulus).collect();
        let mut lam = Vec::with_capacity(n);
        let mut prev = 0.0;
        for &sk in &s {
            lam.push(sk - prev);
            prev = sk;
        }
        lam.push(-prev);
        CartanVector::centered(lam)
    }

    /// Smallest relative gap between the two top eigenvalue moduli over all
    /// exterior powers. Positive exactly for loxodromic elements.
    pub fn min_rel_gap(&self) -> f64 {
        (0..self.mats.len())
            .map(|k| self.top(k).rel_gap)
            .fold(f64::INFINITY, f64::min)
    }

    /// Jordan projection together with the relative gap, sharing the
    /// eigenvalue computations.
    pub fn spectrum(&self) -> (CartanVector, f64, Vec<f64>) {
        let n = self.n();
        let tops: Vec<TopEigen> = (0..n - 1).map(|k| self.top(k)).collect();
        let mut lam = Vec::with_capacity(n);
        let mut prev = 0.0;
        let mut gap = f64::INFINITY;
        let mut signs = Vec::with_capacity(n);
        let mut prev_sign = 1.0;
        for t in &tops {
            lam.push(t.log_modulus - prev);
            prev = t.log_modulus;
            gap = gap.min(t.rel_gap);
            signs.push(t.sign * prev_sign);
            prev_sign = t.sign;
        }
        lam.push(-prev);
        signs.push(prev_sign);
        (CartanVector::centered(lam), gap, signs)
    }

    /// Signs of the eigenvalues ordered by decreasing modulus. Meaningful for
    /// loxodromic elements only.
    pub fn signs(&self) -> Option<SignVector> {
        let (_, gap, s) = self.spectrum();
        if gap <= 0.0 {
            return None;
        }
        SignVector::round(&s, 0.5)
    }
}

pub fn jordan_projection(g: &GroupElement) -> CartanVector {
    ExteriorPowers::of(g.matrix()).jordan()
}

/// Signs of the real eigenvalues of a loxodromic element, by decreasing
/// modulus. `None` when g is not loxodromic.
pub fn jordan_signs(g: &GroupElement) -> Option<SignVector> {
    ExteriorPowers::of(g.matrix()).signs()
}
