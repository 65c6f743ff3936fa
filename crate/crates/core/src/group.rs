//! Elements of SL(n), of its Cartan subspace and of the finite group M.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;

/// A matrix of determinant one.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    m: Mat,
}

impl GroupElement {
    /// Validate with the default tolerances.
    pub fn new(m: Mat) -> Result<Self> {
        Self::new_with(m, &Config::default())
    }

    pub fn new_with(m: Mat, cfg: &Config) -> Result<Self> {
        let n = m.nrows();
        if n < 2 || m.ncols() != n {
            return Err(Error::InvalidInput(format!(
                "expected a square matrix of size >= 2, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        let det = m.determinant();
        if (det - 1.0).abs() > cfg.tol_det {
            return Err(Error::InvalidInput(format!("determinant is {det}, expected 1")));
        }
        Ok(GroupElement { m })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("rows must form a square matrix".into()));
        }
        Self::new(Mat::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Rescale an invertible matrix to determinant one. A negative determinant
    /// is fixed by negating the last column first.
    pub fn projected(mut m: Mat) -> Result<Self> {
        let n = m.nrows();
        if n < 2 || m.ncols() != n || m.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("cannot project to SL(n)".into()));
        }
        let mut det = m.determinant();
        if det == 0.0 || !det.is_finite() {
            return Err(Error::NonInvertible);
        }
        if det < 0.0 {
            m.column_mut(n - 1).neg_mut();
            det = -det;
        }
        m /= det.powf(1.0 / n as f64);
        Ok(GroupElement { m })
    }

    /// Wrap a matrix already known to lie in SL(n) up to rounding.
    pub(crate) fn from_matrix_unchecked(m: Mat) -> Self {
        GroupElement { m }
    }

    pub fn identity(n: usize) -> Self {
        GroupElement { m: Mat::identity(n, n) }
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &Mat {
        &self.m
    }

    pub fn into_matrix(self) -> Mat {
        self.m
    }

    pub fn mul(&self, other: &GroupElement) -> GroupElement {
        GroupElement { m: &self.m * &other.m }
    }

    pub fn inverse(&self) -> GroupElement {
        let inv = self
            .m
            .clone()
            .try_inverse()
            .expect("determinant-one matrix is invertible");
        GroupElement { m: inv }
    }

    pub fn pow(&self, p: u32) -> GroupElement {
        let mut acc = Mat::identity(self.n(), self.n());
        let mut base = self.m.clone();
        let mut e = p;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        GroupElement { m: acc }
    }

    pub fn conjugate_by(&self, h: &GroupElement) -> GroupElement {
        h.mul(self).mul(&h.inverse())
    }
}

impl std::ops::Mul for &GroupElement {
    type Output = GroupElement;
    fn mul(self, rhs: &GroupElement) -> GroupElement {
        GroupElement::mul(self, rhs)
    }
}

/// A point of the Cartan subspace: a real vector with zero sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CartanVector(Vec<f64>);

impl CartanVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidInput("Cartan vector needs length >= 2".into()));
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("Cartan vector has non-finite entries".into()));
        }
        let s: f64 = coords.iter().sum();
        let scale = coords.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        if s.abs() > 1e-10 * scale {
            return Err(Error::InvalidInput(format!("Cartan vector sums to {s}")));
        }
        Ok(CartanVector(coords))
    }

    /// Subtract the mean so the coordinates sum to zero.
    pub fn centered(mut coords: Vec<f64>) -> Self {
        let mean = coords.iter().sum::<f64>() / coords.len() as f64;
        for c in &mut coords {
            *c -= mean;
        }
        CartanVector(coords)
    }

    pub fn zero(n: usize) -> Self {
        CartanVector(vec![0.0; n])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    /// Non-increasing coordinates (closed positive chamber).
    pub fn is_chamber_plus(&self, tol: f64) -> bool {
        self.0.windows(2).all(|w| w[0] >= w[1] - tol)
    }

    /// Smallest consecutive gap; positive on the open chamber.
    pub fn gap(&self) -> f64 {
        self.0
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_chamber_plus_plus(&self) -> bool {
        self.gap() > 0.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn add(&self, other: &CartanVector) -> CartanVector {
        CartanVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &CartanVector) -> CartanVector {
        CartanVector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, t: f64) -> CartanVector {
        CartanVector(self.0.iter().map(|a| a * t).collect())
    }

    pub fn dot(&self, other: &CartanVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn distance(&self, other: &CartanVector) -> f64 {
        self.sub(other).norm()
    }

    pub fn normalized(&self) -> CartanVector {
        let n = self.norm();
        if n == 0.0 {
            self.clone()
        } else {
            self.scale(1.0 / n)
        }
    }
}

/// Diagonal signs with product +1, an element of M.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SignVector(Vec<i8>);

impl SignVector {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.len() < 2 || signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidInput("signs must be +1 or -1, length >= 2".into()));
        }
        if signs.iter().filter(|&&s| s < 0).count() % 2 == 1 {
            return Err(Error::InvalidInput("product of signs must be +1".into()));
        }
        Ok(SignVector(signs))
    }

    pub fn identity(n: usize) -> Self {
        SignVector(vec![1; n])
    }

    pub fn signs(&self) -> &[i8] {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&s| s == 1)
    }

    pub fn mul(&self, other: &SignVector) -> SignVector {
        SignVector(self.0.iter().zip(&other.0).map(|(a, b)| a * b).collect())
    }

    /// Bit i is set when sign i is negative. The last coordinate is
    /// determined by the others, so it is dropped.
    pub fn to_bits(&self) -> u64 {
        let mut b = 0u64;
        for (i, &s) in self.0[..self.0.len() - 1].iter().enumerate() {
            if s < 0 {
                b |= 1 << i;
            }
        }
        b
    }

    pub fn from_bits(bits: u64, n: usize) -> SignVector {
        let mut v: Vec<i8> = (0..n - 1)
            .map(|i| if bits >> i & 1 == 1 { -1 } else { 1 })
            .collect();
        let neg = v.iter().filter(|&&s| s < 0).count();
        v.push(if neg % 2 == 0 { 1 } else { -1 });
        SignVector(v)
    }

    /// Nearest sign vector to a vector of approximate signs; `None` when some
    /// entry is not close to ±1 or the parity is wrong.
    pub fn round(values: &[f64], tol: f64) -> Option<SignVector> {
        let mut v = Vec::with_capacity(values.len());
        for &x in values {
            if (x - 1.0).abs() <= tol {
                v.push(1);
            } else if (x + 1.0).abs() <= tol {
                v.push(-1);
            } else {
                return None;
            }
        }
        SignVector::new(v).ok()
    }

    pub fn to_matrix(&self) -> Mat {
        Mat::from_diagonal(&nalgebra::DVector::from_iterator(
            self.0.len(),
            self.0.iter().map(|&s| s as f64),
        ))
    }

    /// All 2^{n-1} elements of M.
    pub fn all(n: usize) -> Vec<SignVector> {
        (0..1u64 << (n - 1)).map(|b| SignVector::from_bits(b, n)).collect()
    }
}

/// An element of the abelian group AM of signed positive diagonal matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AMElement {
    pub a: CartanVector,
    pub m: SignVector,
}

impl AMElement {
    pub fn new(a: CartanVector, m: SignVector) -> Result<Self> {
        if a.n() != m.n() {
            return Err(Error::InvalidInput("dimension mismatch in AM element".into()));
        }
        Ok(AMElement { a, m })
    }

    pub fn identity(n: usize) -> Self {
        AMElement {
            a: CartanVector::zero(n),
            m: SignVector::identity(n),
        }
    }

    pub fn from_a(a: CartanVector) -> Self {
        let n = a.n();
        AMElement { a, m: SignVector::identity(n) }
    }

    pub fn from_m(m: SignVector) -> Self {
        let n = m.n();
        AMElement { a: CartanVector::zero(n), m }
    }

    /// Read off the AM part of a diagonal with nonzero entries. The log
    /// moduli are re-centered, which absorbs a determinant drift of rounding
    /// size. The sign parity must be even.
    pub fn from_diagonal(d: &[f64]) -> Result<Self> {
        if d.iter().any(|x| *x == 0.0 || !x.is_finite()) {
            return Err(Error::NonInvertible);
        }
        let m = SignVector::new(d.iter().map(|x| if *x < 0.0 { -1 } else { 1 }).collect())?;
        let a = CartanVector::centered(d.iter().map(|x| x.abs().ln()).collect());
        Ok(AMElement { a, m })
    }

    pub fn n(&self) -> usize {
        self.a.n()
    }

    pub fn mul(&self, other: &AMElement) -> AMElement {
        AMElement {
            a: self.a.add(&other.a),
            m: self.m.mul(&other.m),
        }
    }

    pub fn inverse(&self) -> AMElement {
        AMElement {
            a: self.a.scale(-1.0),
            m: self.m.clone(),
        }
    }

    pub fn pow(&self, p: i64) -> AMElement {
        AMElement {
            a: self.a.scale(p as f64),
            m: if p % 2 == 0 {
                SignVector::identity(self.n())
            } else {
                self.m.clone()
            },
        }
    }

    pub fn to_matrix(&self) -> Mat {
        let n = self.n();
        Mat::from_fn(n, n, |i, j| {
            if i == j {
                self.m.0[i] as f64 * self.a.0[i].exp()
            } else {
                0.0
            }
        })
    }

    /// Distance used for identities in AM: Euclidean on the A-part, infinite
    /// when the M-parts differ.
    pub fn distance(&self, other: &AMElement) -> f64 {
        if self.m != other.m {
            f64::INFINITY
        } else {
            self.a.distance(&other.a)
        }
    }
}
