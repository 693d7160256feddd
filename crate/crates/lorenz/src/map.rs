//! Lorenz maps `f_±(x) = η_±(|x - c|^α)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chebyshev::BranchRep;
use crate::config::Tolerances;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Minus,
    Plus,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Minus => Side::Plus,
            Side::Plus => Side::Minus,
        }
    }

    pub fn both() -> [Side; 2] {
        [Side::Minus, Side::Plus]
    }

    pub fn sign(self) -> f64 {
        match self {
            Side::Minus => -1.0,
            Side::Plus => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Nontriviality {
    Nontrivial,
    /// `u >= c >= v` with an equality: trivial, but on the boundary.
    WeaklyNontrivial,
    Trivial,
}

impl Nontriviality {
    pub fn is_trivial(self) -> bool {
        self != Nontriviality::Nontrivial
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealBoundsReport {
    /// `min(c, 1 - c)`.
    pub delta: f64,
    /// `sup |η''/η'|` over both branches.
    pub big_delta: f64,
    /// `max(sup |η'|, 1 / inf |η'|)`.
    pub k1: f64,
    /// `sup |η''|`.
    pub k2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct RawMap {
    alpha: f64,
    c: f64,
    eta_minus: BranchRep,
    eta_plus: BranchRep,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMap", into = "RawMap")]
pub struct LorenzMap {
    alpha: f64,
    c: f64,
    eta_minus: BranchRep,
    eta_plus: BranchRep,
    d_minus: BranchRep,
    d_plus: BranchRep,
}

impl TryFrom<RawMap> for LorenzMap {
    type Error = Error;
    fn try_from(r: RawMap) -> Result<Self> {
        LorenzMap::new(r.alpha, r.c, r.eta_minus, r.eta_plus)
    }
}

impl From<LorenzMap> for RawMap {
    fn from(m: LorenzMap) -> Self {
        RawMap {
            alpha: m.alpha,
            c: m.c,
            eta_minus: m.eta_minus,
            eta_plus: m.eta_plus,
        }
    }
}

impl LorenzMap {
    /// Builds and validates a map. `η_-` is decreasing on `[0, c^α]` with
    /// `η_-(c^α) = 0`; `η_+` is increasing on `[0, (1-c)^α]` with
    /// `η_+((1-c)^α) = 1`; both take values in `[0, 1]`.
    pub fn new(alpha: f64, c: f64, eta_minus: BranchRep, eta_plus: BranchRep) -> Result<Self> {
        Self::with_tolerances(alpha, c, eta_minus, eta_plus, &Tolerances::default())
    }

    pub fn with_tolerances(
        alpha: f64,
        c: f64,
        eta_minus: BranchRep,
        eta_plus: BranchRep,
        tol: &Tolerances,
    ) -> Result<Self> {
        if !(alpha > 1.0 && alpha.is_finite()) {
            return Err(Error::InvalidMap(format!("alpha = {alpha} must exceed 1")));
        }
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::InvalidMap(format!("c = {c} must lie in (0, 1)")));
        }
        let tm = c.powf(alpha);
        let tp = (1.0 - c).powf(alpha);
        for (name, got, want) in [("eta_minus", eta_minus.domain_len, tm), ("eta_plus", eta_plus.domain_len, tp)] {
            if (got - want).abs() > tol.equality * want.max(1.0) {
                return Err(Error::InvalidMap(format!("{name} domain length {got} differs from {want}")));
            }
        }
        let d_minus = eta_minus.derivative();
        let d_plus = eta_plus.derivative();
        let map = LorenzMap {
            alpha,
            c,
            eta_minus,
            eta_plus,
            d_minus,
            d_plus,
        };
        let f0 = map.eta_minus.eval(map.eta_minus.domain_len);
        let f1 = map.eta_plus.eval(map.eta_plus.domain_len);
        if f0.abs() > tol.equality {
            return Err(Error::InvalidMap(format!("f_-(0) = {f0:e}, expected 0")));
        }
        if (f1 - 1.0).abs() > tol.equality {
            return Err(Error::InvalidMap(format!("f_+(1) = {f1}, expected 1")));
        }
        let (u, v) = (map.u(), map.v());
        if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidMap(format!("critical values ({u}, {v}) outside [0, 1]")));
        }
        let n = tol.check_grid;
        for side in Side::both() {
            let (d, len) = (map.eta_derivative(side), map.eta(side).domain_len);
            for i in 0..=n {
                let g = d.eval(len * i as f64 / n as f64) * side.sign();
                if !(g > 0.0) {
                    return Err(Error::InvalidMap(format!("{side:?} branch is not strictly increasing")));
                }
            }
        }
        Ok(map)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn eta(&self, side: Side) -> &BranchRep {
        match side {
            Side::Minus => &self.eta_minus,
            Side::Plus => &self.eta_plus,
        }
    }

    pub fn eta_derivative(&self, side: Side) -> &BranchRep {
        match side {
            Side::Minus => &self.d_minus,
            Side::Plus => &self.d_plus,
        }
    }

    /// `f_-(c) = η_-(0)`.
    pub fn u(&self) -> f64 {
        self.eta_minus.eval(0.0)
    }

    /// `f_+(c) = η_+(0)`.
    pub fn v(&self) -> f64 {
        self.eta_plus.eval(0.0)
    }

    pub fn critical_value(&self, side: Side) -> f64 {
        self.eta(side).eval(0.0)
    }

    pub fn side_of(&self, x: f64) -> Side {
        if x < self.c {
            Side::Minus
        } else {
            Side::Plus
        }
    }

    /// `|x - c|^α`, with points on the wrong side of `c` clamped to `c`.
    pub fn t_of(&self, side: Side, x: f64) -> f64 {
        let d = match side {
            Side::Minus => self.c - x,
            Side::Plus => x - self.c,
        };
        d.max(0.0).powf(self.alpha)
    }

    /// One branch at `x`; `x = c` gives the one-sided limit.
    pub fn branch(&self, side: Side, x: f64) -> f64 {
        self.eta(side).eval(self.t_of(side, x))
    }

    /// `f(x)` for `x ∈ [0, 1] \ {c}`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) || x == self.c {
            return Err(Error::Domain(format!("f is not defined at {x}")));
        }
        Ok(self.branch(self.side_of(x), x))
    }

    pub fn branch_derivative(&self, side: Side, x: f64) -> f64 {
        let d = match side {
            Side::Minus => self.c - x,
            Side::Plus => x - self.c,
        }
        .max(0.0);
        let t = d.powf(self.alpha);
        self.eta_derivative(side).eval(t) * self.alpha * d.powf(self.alpha - 1.0) * side.sign()
    }

    fn complex_base(&self, side: Side, z: Complex64) -> Result<Complex64> {
        let w = match side {
            Side::Minus => self.c - z,
            Side::Plus => z - self.c,
        };
        if w.im == 0.0 && w.re < 0.0 {
            return Err(Error::Domain(format!("{z} lies on the branch cut of f_{side:?}")));
        }
        Ok(w)
    }

    /// Holomorphic extension of a branch; the power uses the principal branch
    /// of `(c - z)^α` or `(z - c)^α`.
    pub fn eval_complex(&self, side: Side, z: Complex64) -> Result<Complex64> {
        let w = self.complex_base(side, z)?;
        Ok(self.eta(side).eval_complex(cpow(w, self.alpha)))
    }

    /// Value and complex derivative of a branch.
    pub fn eval_complex_with_derivative(&self, side: Side, z: Complex64) -> Result<(Complex64, Complex64)> {
        let w = self.complex_base(side, z)?;
        if w == Complex64::new(0.0, 0.0) {
            return Ok((Complex64::new(self.critical_value(side), 0.0), Complex64::new(0.0, 0.0)));
        }
        let wa1 = cpow(w, self.alpha - 1.0);
        let t = wa1 * w;
        let value = self.eta(side).eval_complex(t);
        let d = self.eta_derivative(side).eval_complex(t) * wa1 * (self.alpha * side.sign());
        Ok((value, d))
    }

    pub fn classify(&self) -> Nontriviality {
        classify_values(self.u(), self.v(), self.c, Tolerances::default().equality)
    }

    pub fn is_nontrivial(&self) -> bool {
        self.classify() == Nontriviality::Nontrivial
    }

    pub fn real_bounds_report(&self) -> RealBoundsReport {
        let n = Tolerances::default().check_grid;
        let (mut big_delta, mut sup_d, mut inf_d, mut k2) = (0.0f64, 0.0f64, f64::INFINITY, 0.0f64);
        for side in Side::both() {
            let d1 = self.eta_derivative(side);
            let d2 = d1.derivative();
            let len = self.eta(side).domain_len;
            for i in 0..=n {
                let t = len * i as f64 / n as f64;
                let (a, b) = (d1.eval(t).abs(), d2.eval(t).abs());
                sup_d = sup_d.max(a);
                inf_d = inf_d.min(a);
                k2 = k2.max(b);
                big_delta = big_delta.max(b / a);
            }
        }
        RealBoundsReport {
            delta: self.c.min(1.0 - self.c),
            big_delta,
            k1: sup_d.max(1.0 / inf_d),
            k2,
        }
    }

    /// Uniform distance on the grid `x_i = (i + 1/2)/n`.
    pub fn c0_distance(&self, other: &LorenzMap, n: usize) -> f64 {
        (0..n)
            .map(|i| {
                let x = (i as f64 + 0.5) / n as f64;
                (self.branch(self.side_of(x), x) - other.branch(other.side_of(x), x)).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// `w^p` on the principal branch, written out so that conjugate inputs give
/// exactly conjugate outputs.
pub fn cpow(w: Complex64, p: f64) -> Complex64 {
    if w.re == 0.0 && w.im == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let r = w.norm().powf(p);
    let th = w.im.atan2(w.re) * p;
    Complex64::new(r * th.cos(), r * th.sin())
}

pub fn classify_values(u: f64, v: f64, c: f64, tol: f64) -> Nontriviality {
    if u > c + tol && v < c - tol {
        Nontriviality::Nontrivial
    } else if u >= c - tol && v <= c + tol {
        Nontriviality::WeaklyNontrivial
    } else {
        Nontriviality::Trivial
    }
}

/// `f_-(x) = u (1 - ((c - x)/c)^α)`, `f_+(x) = v + (1 - v)((x - c)/(1 - c))^α`.
pub fn standard_family(u: f64, v: f64, c: f64, alpha: f64) -> Result<LorenzMap> {
    if !(u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0) {
        return Err(Error::Domain(format!("critical values ({u}, {v}) must lie in (0, 1)")));
    }
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::Domain(format!("c = {c} must lie in (0, 1)")));
    }
    let em = BranchRep::affine(c.powf(alpha), u, 0.0)?;
    let ep = BranchRep::affine((1.0 - c).powf(alpha), v, 1.0)?;
    LorenzMap::new(alpha, c, em, ep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_family_values() {
        let f = standard_family(0.75, 0.25, 0.5, 2.0).unwrap();
        assert!((f.eval(0.25).unwrap() - 0.75 * 0.75).abs() < 1e-15);
        assert!((f.eval(0.75).unwrap() - (0.25 + 0.75 * 0.25)).abs() < 1e-15);
        assert!(f.eval(0.5).is_err());
        assert_eq!(f.classify(), Nontriviality::Nontrivial);
        assert!((f.branch_derivative(Side::Minus, 0.25) - 0.75 * 2.0 * 0.5 / 0.5).abs() < 1e-14);
    }

    #[test]
    fn classification_boundaries() {
        let f = standard_family(0.5, 0.5, 0.5, 2.0).unwrap();
        assert_eq!(f.classify(), Nontriviality::WeaklyNontrivial);
        assert!(f.classify().is_trivial());
        let g = standard_family(0.3, 0.7, 0.5, 2.0).unwrap();
        assert_eq!(g.classify(), Nontriviality::Trivial);
    }

    #[test]
    fn branch_cut_rejected() {
        let f = standard_family(0.75, 0.25, 0.5, 2.5).unwrap();
        assert!(f.eval_complex(Side::Minus, Complex64::new(0.7, 0.0)).is_err());
        assert!(f.eval_complex(Side::Plus, Complex64::new(0.3, 0.0)).is_err());
        let z = Complex64::new(0.3, 0.0);
        assert!((f.eval_complex(Side::Minus, z).unwrap().re - f.eval(0.3).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn complex_derivative_matches_difference_quotient() {
        let f = standard_family(0.8, 0.15, 0.45, 2.3).unwrap();
        let z = Complex64::new(0.2, 0.1);
        let h = Complex64::new(1e-6, 0.0);
        let (_, d) = f.eval_complex_with_derivative(Side::Minus, z).unwrap();
        let fd = (f.eval_complex(Side::Minus, z + h).unwrap() - f.eval_complex(Side::Minus, z - h).unwrap()) / (h * 2.0);
        assert!((d - fd).norm() < 1e-8);
    }

    #[test]
    fn invalid_maps_rejected() {
        let em = BranchRep::affine(0.25, 0.8, 0.1).unwrap();
        let ep = BranchRep::affine(0.25, 0.2, 1.0).unwrap();
        assert!(LorenzMap::new(2.0, 0.5, em, ep).is_err());
        assert!(standard_family(1.2, 0.1, 0.5, 2.0).is_err());
    }

    #[test]
    fn real_bounds_standard_family() {
        let r = standard_family(0.75, 0.25, 0.5, 2.0).unwrap().real_bounds_report();
        assert_eq!(r.delta, 0.5);
        assert!((r.k1 - 3.0).abs() < 1e-12);
        assert!(r.big_delta < 1e-10 && r.k2 < 1e-10);
    }
}
