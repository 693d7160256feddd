//! Chebyshev series on `[0, T]`.
//!
//! A [`BranchRep`] stores `η(t) = Σ a_k T_k(2t/T - 1)`. Evaluation uses
//! Clenshaw's recurrence, which works unchanged for complex `t`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchRep {
    pub domain_len: f64,
    pub coeffs: Vec<f64>,
}

impl BranchRep {
    pub fn new(domain_len: f64, coeffs: Vec<f64>) -> Result<Self> {
        if !(domain_len.is_finite() && domain_len > 0.0) {
            return Err(Error::InvalidMap(format!("domain length {domain_len} must be positive")));
        }
        if coeffs.len() < 2 {
            return Err(Error::InvalidMap("a branch needs at least two coefficients".into()));
        }
        if coeffs.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidMap("non-finite Chebyshev coefficient".into()));
        }
        Ok(BranchRep { domain_len, coeffs })
    }

    /// Affine branch with `η(0) = y0` and `η(T) = y1`.
    pub fn affine(domain_len: f64, y0: f64, y1: f64) -> Result<Self> {
        Self::new(domain_len, vec![0.5 * (y0 + y1), 0.5 * (y1 - y0)])
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    fn unit(&self, t: f64) -> f64 {
        2.0 * t / self.domain_len - 1.0
    }

    pub fn eval(&self, t: f64) -> f64 {
        clenshaw(&self.coeffs, self.unit(t))
    }

    pub fn eval_complex(&self, t: Complex64) -> Complex64 {
        let s = t * (2.0 / self.domain_len) - 1.0;
        clenshaw_complex(&self.coeffs, s)
    }

    /// Series of `dη/dt`.
    pub fn derivative(&self) -> BranchRep {
        let c = &self.coeffs;
        let n = c.len();
        let mut d = vec![0.0; n.max(2) - 1];
        if n >= 2 {
            let mut next = 0.0; // d[k+1]
            let mut next2 = 0.0; // d[k+2]
            for k in (1..n).rev() {
                let dk = next2 + 2.0 * k as f64 * c[k];
                d[k - 1] = dk;
                next2 = next;
                next = dk;
            }
            d[0] *= 0.5;
        }
        let scale = 2.0 / self.domain_len;
        for x in &mut d {
            *x *= scale;
        }
        if d.len() < 2 {
            d.push(0.0);
        }
        BranchRep {
            domain_len: self.domain_len,
            coeffs: d,
        }
    }

    /// Sup of `|η|` over a uniform grid of `n + 1` points.
    pub fn sup_on_grid(&self, n: usize) -> f64 {
        (0..=n)
            .map(|i| self.eval(self.domain_len * i as f64 / n as f64).abs())
            .fold(0.0, f64::max)
    }

    /// Solves `η(t) = y` on `[0, T]` for monotone `η`. Returns `None` when `y`
    /// is outside the image.
    pub fn inverse_real(&self, y: f64) -> Option<f64> {
        let (a, b) = (self.eval(0.0), self.eval(self.domain_len));
        let increasing = b > a;
        let (lo_v, hi_v) = if increasing { (a, b) } else { (b, a) };
        if y < lo_v || y > hi_v {
            return None;
        }
        let (mut lo, mut hi) = (0.0, self.domain_len);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let below = self.eval(mid) < y;
            if below == increasing {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }
}

pub fn clenshaw(c: &[f64], s: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &a in c.iter().skip(1).rev() {
        let b0 = 2.0 * s * b1 - b2 + a;
        b2 = b1;
        b1 = b0;
    }
    s * b1 - b2 + c[0]
}

pub fn clenshaw_complex(c: &[f64], s: Complex64) -> Complex64 {
    let zero = Complex64::new(0.0, 0.0);
    let (mut b1, mut b2) = (zero, zero);
    for &a in c.iter().skip(1).rev() {
        let b0 = s * b1 * 2.0 - b2 + a;
        b2 = b1;
        b1 = b0;
    }
    s * b1 - b2 + c[0]
}

/// First-kind Chebyshev nodes of `[0, T]`, in increasing order.
pub fn chebyshev_nodes(n: usize, domain_len: f64) -> Vec<f64> {
    (0..n)
        .map(|j| {
            let s = -((2 * j + 1) as f64 * PI / (2 * n) as f64).cos();
            0.5 * domain_len * (s + 1.0)
        })
        .collect()
}

/// Least-squares fit of a degree-`degree` series to `(t, y)` samples on
/// `[0, T]`. Fails when the sup residual over the samples exceeds `tol`.
pub fn fit_branch(samples: &[(f64, f64)], domain_len: f64, degree: usize, tol: f64) -> Result<BranchRep> {
    let n = degree + 1;
    if samples.len() < n {
        return Err(Error::Domain(format!(
            "{} samples cannot determine a degree-{degree} fit",
            samples.len()
        )));
    }
    let mut a = DMatrix::<f64>::zeros(samples.len(), n);
    let mut y = DVector::<f64>::zeros(samples.len());
    for (i, &(t, v)) in samples.iter().enumerate() {
        let s = 2.0 * t / domain_len - 1.0;
        let (mut tkm1, mut tk) = (1.0, s);
        a[(i, 0)] = 1.0;
        if n > 1 {
            a[(i, 1)] = s;
        }
        for k in 2..n {
            let next = 2.0 * s * tk - tkm1;
            a[(i, k)] = next;
            tkm1 = tk;
            tk = next;
        }
        y[i] = v;
    }
    let coeffs = a
        .svd(true, true)
        .solve(&y, 1e-14)
        .map_err(|e| Error::Numeric(format!("least squares: {e}")))?;
    let rep = BranchRep::new(domain_len, coeffs.iter().copied().collect())?;
    let residual = samples
        .iter()
        .map(|&(t, v)| (rep.eval(t) - v).abs())
        .fold(0.0, f64::max);
    if !(residual <= tol) {
        return Err(Error::Fit {
            residual,
            tolerance: tol,
            degree,
        });
    }
    Ok(rep)
}

/// Interpolates `g` at the `degree + 1` Chebyshev nodes of `[0, T]` and returns
/// the series with its sup error measured at the nodes of twice the size.
pub fn interpolate<F>(g: F, domain_len: f64, degree: usize) -> Result<(BranchRep, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let n = degree + 1;
    let nodes = chebyshev_nodes(n, domain_len);
    let values = nodes.iter().map(|&t| g(t)).collect::<Result<Vec<_>>>()?;
    // Nodes are increasing, i.e. angle index reversed: s_j = cos(θ_{n-1-j}).
    let mut coeffs = vec![0.0; n];
    for (k, ck) in coeffs.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, v) in values.iter().enumerate() {
            let theta = (2 * (n - 1 - j) + 1) as f64 * PI / (2 * n) as f64;
            acc += v * (k as f64 * theta).cos();
        }
        *ck = 2.0 * acc / n as f64;
    }
    coeffs[0] *= 0.5;
    let rep = BranchRep::new(domain_len, coeffs)?;
    let mut residual: f64 = 0.0;
    for t in chebyshev_nodes(2 * n, domain_len) {
        residual = residual.max((rep.eval(t) - g(t)?).abs());
    }
    Ok((rep, residual))
}

/// [`interpolate`] with degree doubling until the residual meets `tol`.
pub fn interpolate_adaptive<F>(g: F, domain_len: f64, degree: usize, max_degree: usize, tol: f64) -> Result<BranchRep>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut d = degree;
    loop {
        let (rep, residual) = interpolate(&g, domain_len, d)?;
        if residual <= tol {
            return Ok(trim(rep, 1e-17));
        }
        if d * 2 > max_degree {
            return Err(Error::Fit {
                residual,
                tolerance: tol,
                degree: d,
            });
        }
        d *= 2;
    }
}

/// Drops trailing coefficients below `eps` relative to the largest one.
pub fn trim(mut rep: BranchRep, eps: f64) -> BranchRep {
    let scale = rep.coeffs.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    while rep.coeffs.len() > 2 && rep.coeffs.last().unwrap().abs() <= eps * scale {
        rep.coeffs.pop();
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_reproduces_polynomial() {
        let g = |t: f64| Ok(1.0 + 2.0 * t - 3.0 * t * t * t);
        let (rep, res) = interpolate(g, 2.0, 5).unwrap();
        assert!(res < 1e-13);
        assert!((rep.eval(1.3) - g(1.3).unwrap()).abs() < 1e-13);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let (rep, _) = interpolate(|t: f64| Ok((1.5 * t).sin() + t * t), 0.7, 20).unwrap();
        let d = rep.derivative();
        for &t in &[0.0f64, 0.1, 0.35, 0.69] {
            let exact = 1.5 * (1.5 * t).cos() + 2.0 * t;
            assert!((d.eval(t) - exact).abs() < 1e-11, "t={t}");
        }
    }

    #[test]
    fn least_squares_matches_interpolation() {
        let f = |t: f64| (0.3 * t).exp();
        let samples: Vec<_> = (0..100).map(|i| {
            let t = i as f64 / 99.0;
            (t, f(t))
        }).collect();
        let rep = fit_branch(&samples, 1.0, 15, 1e-12).unwrap();
        assert!((rep.eval(0.123) - f(0.123)).abs() < 1e-13);
        assert!(fit_branch(&samples, 1.0, 1, 1e-12).is_err());
    }

    #[test]
    fn complex_eval_agrees_on_real_axis_and_conjugates() {
        let rep = BranchRep::new(0.5, vec![0.3, -0.2, 0.05, 0.01]).unwrap();
        let z = Complex64::new(0.2, 0.13);
        assert_eq!(rep.eval_complex(z.conj()), rep.eval_complex(z).conj());
        assert!((rep.eval_complex(Complex64::new(0.2, 0.0)).re - rep.eval(0.2)).abs() < 1e-15);
    }

    #[test]
    fn real_inverse() {
        let rep = BranchRep::affine(0.25, 0.75, 0.0).unwrap();
        let t = rep.inverse_real(0.3).unwrap();
        assert!((rep.eval(t) - 0.3).abs() < 1e-14);
        assert!(rep.inverse_real(0.8).is_none());
    }
}
