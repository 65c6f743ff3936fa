//! Seeded random elements. Everything here is deterministic given the rng.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::flag::Flag;
use crate::group::{CartanVector, GroupElement, Mat};
use crate::linalg::kan;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Mat {
    Mat::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Gaussian entries rescaled to determinant one.
pub fn random_sl<R: Rng + ?Sized>(rng: &mut R, n: usize) -> GroupElement {
    loop {
        if let Ok(g) = GroupElement::projected(gaussian_matrix(rng, n)) {
            return g;
        }
    }
}

/// Haar-distributed element of SO(n). QR of a Gaussian matrix is Haar on
/// O(n); negating a column of the input when det < 0 keeps it Haar on SO(n).
pub fn haar_so<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Mat {
    loop {
        let mut m = gaussian_matrix(rng, n);
        if m.determinant() < 0.0 {
            m.column_mut(0).neg_mut();
        }
        if let Ok(t) = kan(&m) {
            return t.k;
        }
    }
}

pub fn haar_flag<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Flag {
    Flag::from_frame_unchecked(haar_so(rng, n))
}

/// Unit lower-triangular matrix with Gaussian entries of the given scale.
pub fn random_lower_unipotent<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> Mat {
    Mat::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else if i > j {
            scale * rng.sample::<f64, _>(StandardNormal)
        } else {
            0.0
        }
    })
}

pub fn random_upper_unipotent<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> Mat {
    random_lower_unipotent(rng, n, scale).transpose()
}

pub fn random_cartan<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> CartanVector {
    CartanVector::centered((0..n).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect())
}

/// Unit vector in so(n) (Frobenius norm 1).
pub fn random_skew<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Mat {
    let mut x = Mat::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v: f64 = rng.sample(StandardNormal);
            x[(i, j)] = v;
            x[(j, i)] = -v;
        }
    }
    let nx = x.norm();
    x / nx
}
