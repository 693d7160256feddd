//! Hyperbolic neighborhoods of real intervals and related planar geometry.
//!
//! `D_t(J)` is the set of points from which `J = (x1, x2)` is seen under an
//! angle of at least `2 arctan t`, together with `J` itself. For `t = 1` it
//! is the disk with diameter `J`; in general it is the union of two
//! symmetric disk caps bounded by circular arcs through the endpoints of `J`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::{Error, Interval, Result};

/// Angle in `[0, π]` under which `J` is seen from `z`.
pub fn view_angle(j: &Interval, z: Complex64) -> f64 {
    let a = z - j.lo;
    let b = z - j.hi;
    if z.im == 0.0 {
        return if j.contains(z.re) { PI } else { 0.0 };
    }
    // arg((z - x2)/(z - x1)), computed without the division.
    let num = b * a.conj();
    num.im.atan2(num.re).abs()
}

/// `t` with `z ∈ ∂D_t(J)`; infinite on `J`.
pub fn t_parameter(j: &Interval, z: Complex64) -> f64 {
    let ang = view_angle(j, z);
    if ang >= PI {
        f64::INFINITY
    } else {
        (0.5 * ang).tan()
    }
}

pub fn in_dt(j: &Interval, t: f64, z: Complex64) -> bool {
    dt_margin(j, t, z) >= 0.0
}

/// Angular slack `view_angle - 2 arctan t` (positive inside).
pub fn dt_margin(j: &Interval, t: f64, z: Complex64) -> f64 {
    view_angle(j, z) - 2.0 * t.atan()
}

/// Center height and radius of the upper boundary arc of `D_t(J)`.
pub fn dt_circle(j: &Interval, t: f64) -> (Complex64, f64) {
    let half = 0.5 * j.len();
    let th = 2.0 * t.atan();
    let h = half / th.tan();
    (Complex64::new(j.mid(), h), half / th.sin())
}

/// `n` samples of each of the two boundary arcs of `D_t(J)`, upper arc from
/// right to left, then lower arc from left to right; endpoints included once.
pub fn dt_boundary(j: &Interval, t: f64, n: usize) -> Vec<Complex64> {
    let (center, r) = dt_circle(j, t);
    let phi_r = (-center.im / r).clamp(-1.0, 1.0).asin();
    let phi_l = PI - phi_r;
    let mut upper: Vec<Complex64> = (0..n)
        .map(|i| {
            let phi = phi_r + (phi_l - phi_r) * i as f64 / (n - 1) as f64;
            center + Complex64::from_polar(r, phi)
        })
        .collect();
    upper[0] = Complex64::new(j.hi, 0.0);
    upper[n - 1] = Complex64::new(j.lo, 0.0);
    let mut lower: Vec<Complex64> = upper[1..n - 1].iter().rev().map(|z| z.conj()).collect();
    let mut out = upper;
    out.append(&mut lower);
    out
}

/// `|J| max(1, 1/t)`.
pub fn dt_diameter(j: &Interval, t: f64) -> f64 {
    j.len() * (1.0f64).max(1.0 / t)
}

/// `t̃ = (t² - a²) / (t (1 + a²))` for `0 < a < t`, `a < 1`.
pub fn tilde_t(t: f64, a: f64) -> Result<f64> {
    if !(a > 0.0 && a < t && a < 1.0) {
        return Err(Error::Domain(format!("need 0 < a < t and a < 1, got t = {t}, a = {a}")));
    }
    Ok((t * t - a * a) / (t * (1.0 + a * a)))
}

/// `F(z) = (a² + 1) z / (z² + 1)`.
pub fn f_map(a: f64, z: Complex64) -> Result<Complex64> {
    let den = z * z + 1.0;
    if den.norm() < 1e-300 {
        return Err(Error::Domain(format!("F has a pole at {z}")));
    }
    Ok(z * (a * a + 1.0) / den)
}

/// `t_{k+1} = (t_k² - |I_k|²/4) / (t_k (1 + |I_k|²/4))`. Fails when some
/// `t_k <= |I_k| / 2`; zero lengths leave `t` unchanged.
pub fn compose_t_sequence(t1: f64, lengths: &[f64]) -> Result<Vec<f64>> {
    if !(t1 > 0.0 && t1 < 1.0) {
        return Err(Error::Domain(format!("t1 = {t1} must lie in (0, 1)")));
    }
    let mut ts = Vec::with_capacity(lengths.len() + 1);
    ts.push(t1);
    let mut t = t1;
    for (k, &l) in lengths.iter().enumerate() {
        if !(l >= 0.0) {
            return Err(Error::Domain(format!("interval length {l} at index {k} is negative")));
        }
        let a = 0.5 * l;
        if !(t > a) {
            return Err(Error::Recursion {
                index: k,
                t,
                half_length: a,
            });
        }
        if a > 0.0 {
            t = (t * t - a * a) / (t * (1.0 + a * a));
        }
        ts.push(t);
    }
    Ok(ts)
}

/// `t1 ∏ (1 - (|I_k|/2)^{1+δ})`.
pub fn product_lower_bound(t1: f64, lengths: &[f64], delta: f64) -> f64 {
    lengths.iter().fold(t1, |acc, &l| acc * (1.0 - (0.5 * l).powf(1.0 + delta)))
}

/// `cot(π / (2α))`, the largest admissible `σ`.
pub fn sigma_max(alpha: f64) -> f64 {
    1.0 / (PI / (2.0 * alpha)).tan()
}

pub fn default_sigma(alpha: f64) -> f64 {
    0.9 * sigma_max(alpha)
}

/// Principal `z^{1/α}`.
pub fn phi_alpha(alpha: f64, z: Complex64) -> Complex64 {
    crate::map::cpow(z, 1.0 / alpha)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootInclusionReport {
    pub holds: bool,
    /// Largest `t̃ <= σ` for which the sampled image lies in
    /// `D_σ((0, c)) ∪ D_t̃((c, 1))`.
    pub t_tilde: f64,
    /// Smallest angular slack at `t̃ / 2`.
    pub margin: f64,
    pub samples: usize,
}

/// Boundary of `D_t((-a, 1)) \ (-a, 0]`: both arcs and both sides of the slit.
fn slit_region_boundary(a: f64, t: f64, n: usize) -> Vec<Complex64> {
    let mut pts = dt_boundary(&Interval::new(-a, 1.0), t, n);
    for i in 0..n {
        let x = -a * (i as f64 + 0.5) / n as f64;
        pts.push(Complex64::new(x, 1e-300));
        pts.push(Complex64::new(x, -1e-300));
    }
    pts
}

/// Checks `evaluator(D_t((-a, 1)) \ (-a, 0]) ⊂ D_σ((0, c)) ∪ D_t̃((c, 1))
/// ⊂ D_t̃((0, 1))` on boundary samples, with `t̃` searched.
pub fn root_inclusion_check<F>(a: f64, t: f64, c: f64, sigma: f64, evaluator: F, samples: usize) -> Result<RootInclusionReport>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    if !(a > 0.0 && t > 0.0 && (0.0..1.0).contains(&c) && sigma > 0.0) {
        return Err(Error::Domain("need a, t, σ > 0 and 0 <= c < 1".into()));
    }
    let left = Interval::new(0.0, c);
    let right = Interval::new(c, 1.0);
    let mut n = samples;
    loop {
        let imgs = slit_region_boundary(a, t, n)
            .into_iter()
            .map(&evaluator)
            .collect::<Result<Vec<_>>>()?;
        let in_left = |w: &Complex64| c > 0.0 && dt_margin(&left, sigma, *w) >= 0.0;
        let t_max = imgs
            .iter()
            .filter(|w| !in_left(w))
            .map(|w| t_parameter(&right, *w))
            .fold(f64::INFINITY, f64::min)
            .min(sigma);
        let witness = 0.5 * t_max;
        let margin = imgs
            .iter()
            .map(|w| {
                let ml = if c > 0.0 { dt_margin(&left, sigma, *w) } else { f64::NEG_INFINITY };
                ml.max(dt_margin(&right, witness, *w))
            })
            .fold(f64::INFINITY, f64::min);
        if margin < 1e-8 && n < 16 * samples {
            n *= 2;
            continue;
        }
        return Ok(RootInclusionReport {
            holds: t_max > 0.0 && margin > 0.0,
            t_tilde: t_max,
            margin,
            samples: imgs.len(),
        });
    }
}

/// `D_σ((a, d)) ∪ D_t((d, e)) ∪ D_σ((e, b))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Flower {
    pub a: f64,
    pub d: f64,
    pub e: f64,
    pub b: f64,
    pub t: f64,
    pub sigma: f64,
}

impl Flower {
    pub fn new(a: f64, d: f64, e: f64, b: f64, t: f64, sigma: f64) -> Result<Self> {
        if !(a < d && d < e && e < b && t > 0.0 && sigma > 0.0) {
            return Err(Error::Domain(format!("invalid flower a={a} d={d} e={e} b={b} t={t} σ={sigma}")));
        }
        Ok(Flower { a, d, e, b, t, sigma })
    }

    /// Flower of `I = (a, b)` with side petals of length `k |I|`.
    pub fn symmetric(i: &Interval, k: f64, t: f64, sigma: f64) -> Result<Self> {
        Self::new(i.lo, i.lo + k * i.len(), i.hi - k * i.len(), i.hi, t, sigma)
    }

    pub fn petals(&self) -> [(Interval, f64); 3] {
        [
            (Interval::new(self.a, self.d), self.sigma),
            (Interval::new(self.d, self.e), self.t),
            (Interval::new(self.e, self.b), self.sigma),
        ]
    }

    pub fn contains(&self, z: Complex64) -> bool {
        self.petals().iter().any(|(j, t)| in_dt(j, *t, z))
    }

    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    /// `K` with both side petals at least `K |I|` long.
    pub fn k_bound(&self) -> f64 {
        ((self.d - self.a) / self.len()).min((self.b - self.e) / self.len())
    }

    pub fn is_k_bounded(&self, k: f64) -> bool {
        self.k_bound() >= k - 1e-12
    }

    /// `(K1, K2)` relative fractions of the petal at the critical end `c`
    /// (which must be `a` or `b`) and of the other side petal.
    pub fn critical_bounds(&self, c: f64) -> Option<(f64, f64)> {
        let (l, r) = ((self.d - self.a) / self.len(), (self.b - self.e) / self.len());
        if (c - self.a).abs() <= 1e-12 {
            Some((l, r))
        } else if (c - self.b).abs() <= 1e-12 {
            Some((r, l))
        } else {
            None
        }
    }

    pub fn is_k1k2_bounded(&self, c: f64, k1: f64, k2: f64) -> bool {
        matches!(self.critical_bounds(c), Some((x, y)) if x >= k1 - 1e-12 && y >= k2 - 1e-12)
    }

    /// Boundary samples of the flower (points of each petal boundary not
    /// strictly inside another petal).
    pub fn boundary(&self, n: usize) -> Vec<Complex64> {
        let petals = self.petals();
        let mut out = Vec::new();
        for (i, (j, t)) in petals.iter().enumerate() {
            for z in dt_boundary(j, *t, n) {
                let inside_other = petals
                    .iter()
                    .enumerate()
                    .any(|(k, (jj, tt))| k != i && dt_margin(jj, *tt, z) > 1e-12);
                if !inside_other {
                    out.push(z);
                }
            }
        }
        out
    }

    /// For `J ⊂ I`: smallest `t̂` such that every sampled point of
    /// `F \ D_σ(I)` lies in `D_t̂(J)`, and `b = diam D_t̂(J) / |I|`.
    pub fn diameter_bound(&self, j: &Interval, n: usize) -> (f64, f64) {
        let i = Interval::new(self.a, self.b);
        let mut pts: Vec<Complex64> = self
            .boundary(n)
            .into_iter()
            .filter(|z| dt_margin(&i, self.sigma, *z) <= 0.0)
            .collect();
        // The real endpoints of `I` are not limit points of `F \ D_σ(I)`: the
        // side petals are tangent to `∂D_σ(I)` there and lie inside it.
        pts.extend(dt_boundary(&i, self.sigma, n).into_iter().filter(|z| z.im != 0.0 && self.contains(*z)));
        let t_hat = pts.iter().map(|z| t_parameter(j, *z)).fold(f64::INFINITY, f64::min);
        (t_hat, dt_diameter(j, t_hat) / i.len())
    }
}

/// Inner compact set for [`modulus_lower_bound`].
#[derive(Clone, Debug, PartialEq)]
pub enum InnerSet {
    Points(Vec<Complex64>),
    Disk { center: Complex64, radius: f64 },
}

impl InnerSet {
    fn max_distance(&self, z0: Complex64) -> f64 {
        match self {
            InnerSet::Points(p) => p.iter().map(|w| (w - z0).norm()).fold(0.0, f64::max),
            InnerSet::Disk { center, radius } => (center - z0).norm() + radius,
        }
    }

    fn probe_points(&self) -> Vec<Complex64> {
        match self {
            InnerSet::Points(p) => p.clone(),
            InnerSet::Disk { center, radius } => (0..64)
                .map(|k| center + Complex64::from_polar(*radius, 2.0 * PI * k as f64 / 64.0))
                .collect(),
        }
    }

    fn bbox(&self) -> (f64, f64, f64, f64) {
        let pts = self.probe_points();
        let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in pts {
            b = (b.0.min(p.re), b.1.max(p.re), b.2.min(p.im), b.3.max(p.im));
        }
        b
    }

    fn centroid(&self) -> Complex64 {
        match self {
            InnerSet::Disk { center, .. } => *center,
            InnerSet::Points(p) => p.iter().sum::<Complex64>() / p.len() as f64,
        }
    }
}

/// Outer domain for [`modulus_lower_bound`].
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    Disk { center: Complex64, radius: f64 },
    /// Interior of a closed polygon minus real slits.
    Polygon { vertices: Vec<Complex64>, slits: Vec<Interval> },
}

fn segment_distance(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let l2 = d.norm_sqr();
    if l2 == 0.0 {
        return (z - a).norm();
    }
    let s = (((z - a) * d.conj()).re / l2).clamp(0.0, 1.0);
    (z - (a + d * s)).norm()
}

impl Region {
    pub fn contains(&self, z: Complex64) -> bool {
        match self {
            Region::Disk { center, radius } => (z - center).norm() < *radius,
            Region::Polygon { vertices, slits } => {
                if z.im == 0.0 && slits.iter().any(|s| s.contains(z.re)) {
                    return false;
                }
                let mut inside = false;
                let n = vertices.len();
                for i in 0..n {
                    let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                    if (a.im > z.im) != (b.im > z.im) {
                        let x = a.re + (z.im - a.im) * (b.re - a.re) / (b.im - a.im);
                        if z.re < x {
                            inside = !inside;
                        }
                    }
                }
                inside
            }
        }
    }

    /// Distance from an interior point to the complement.
    pub fn boundary_distance(&self, z: Complex64) -> f64 {
        match self {
            Region::Disk { center, radius } => radius - (z - center).norm(),
            Region::Polygon { vertices, slits } => {
                let n = vertices.len();
                let mut d = (0..n)
                    .map(|i| segment_distance(z, vertices[i], vertices[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min);
                for s in slits {
                    d = d.min(segment_distance(z, Complex64::new(s.lo, 0.0), Complex64::new(s.hi, 0.0)));
                }
                d
            }
        }
    }

    /// `D_t(J)` as a polygon with `n` vertices per arc.
    pub fn from_dt(j: &Interval, t: f64, n: usize) -> Region {
        Region::Polygon {
            vertices: dt_boundary(j, t, n),
            slits: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusBound {
    /// `log(r2 / r1) / (2π)` for the best round annulus found, or 0.
    pub bound: f64,
    pub center: Complex64,
    pub r_inner: f64,
    pub r_outer: f64,
}

/// Lower bound for `mod(outer \ inner)` from the largest round annulus
/// `{r1 < |z - z0| < r2}` separating `inner` from the complement of `outer`,
/// with `z0` optimized over a grid followed by pattern search.
pub fn modulus_lower_bound(inner: &InnerSet, outer: &Region) -> Result<ModulusBound> {
    let (bx0, bx1, by0, by1) = inner.bbox();
    let slack = 1e-12 * (1.0 + (bx1 - bx0).max(by1 - by0));
    for p in inner.probe_points() {
        if !outer.contains(p) && outer.boundary_distance(p).abs() > slack {
            return Err(Error::Domain(format!("inner point {p} is outside the outer region")));
        }
    }
    let score = |z0: Complex64| -> (f64, f64, f64) {
        if !outer.contains(z0) {
            return (f64::NEG_INFINITY, 0.0, 0.0);
        }
        let r1 = inner.max_distance(z0);
        let r2 = outer.boundary_distance(z0);
        ((r2 / r1).ln() / (2.0 * PI), r1, r2)
    };
    let (x0, x1, y0, y1) = inner.bbox();
    let mut cands = vec![inner.centroid(), Complex64::new(0.5 * (x0 + x1), 0.5 * (y0 + y1))];
    let g = 24;
    for i in 0..=g {
        for k in 0..=g {
            cands.push(Complex64::new(
                x0 + (x1 - x0) * i as f64 / g as f64,
                y0 + (y1 - y0) * k as f64 / g as f64,
            ));
        }
    }
    let mut best = cands
        .iter()
        .map(|&z| (score(z), z))
        .max_by(|a, b| a.0 .0.partial_cmp(&b.0 .0).unwrap())
        .unwrap();
    let mut h = 0.25 * (x1 - x0).max(y1 - y0).max(1e-12);
    while h > 1e-6 * (x1 - x0).max(y1 - y0).max(1e-12) {
        let mut improved = false;
        for d in [Complex64::new(h, 0.0), Complex64::new(-h, 0.0), Complex64::new(0.0, h), Complex64::new(0.0, -h)] {
            let z = best.1 + d;
            let s = score(z);
            if s.0 > best.0 .0 {
                best = (s, z);
                improved = true;
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    let ((m, r1, r2), z0) = best;
    Ok(ModulusBound {
        bound: if m > 0.0 { m } else { 0.0 },
        center: z0,
        r_inner: r1,
        r_outer: r2,
    })
}
