//! Numerical tolerances shared by all modules.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Tolerances {
    /// Endpoint and equality checks on map values.
    pub equality: f64,
    /// Sup-norm residual accepted by branch refits.
    pub fit_residual: f64,
    /// Bisection width for periodic points.
    pub root: f64,
    /// Values of `f^m(x) - x` smaller than this count as tangencies.
    pub tangency: f64,
    /// Grid used by monotonicity and distortion checks.
    pub check_grid: usize,
    /// Grid used when scanning for periodic points.
    pub scan_grid: usize,
    /// Default Chebyshev degree for refits; doubled on residual failure.
    pub fit_degree: usize,
    pub max_fit_degree: usize,
    /// Residual target of complex Newton in inverse branches.
    pub newton_residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            equality: 1e-12,
            fit_residual: 1e-10,
            root: 1e-13,
            tangency: 1e-10,
            check_grid: 2048,
            scan_grid: 4096,
            fit_degree: 40,
            max_fit_degree: 320,
            newton_residual: 1e-11,
        }
    }
}
