use serde::{Deserialize, Serialize};

/// Numerical tolerances shared by every operation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    /// Relative tolerance on det = 1 for user supplied matrices.
    pub tol_det: f64,
    /// Leading-minor threshold for the big Bruhat cell, relative to the
    /// largest entry raised to the minor's order.
    pub tol_minor: f64,
    /// Reconstruction tolerance for decompositions.
    pub tol_recon: f64,
    /// Tolerance for algebraic identities between cocycles.
    pub tol_id: f64,
    /// Relative separation of eigenvalue moduli required for loxodromy.
    pub tol_lox: f64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            tol_det: 1e-9,
            tol_minor: 1e-10,
            tol_recon: 1e-9,
            tol_id: 1e-8,
            tol_lox: 1e-6,
        }
    }
}
