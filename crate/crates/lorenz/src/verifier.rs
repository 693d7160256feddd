//! Inverse branches of first-return maps in the complex plane, and
//! certificates for power-like extensions of renormalizations.
//!
//! Every branch `f_±` is increasing on its real interval, so an inverse branch
//! of a word maps the upper half-plane into itself. Continuations are done in
//! the closed upper half-plane and mirrored, which keeps every intermediate
//! iterate off the branch cuts of the power maps and makes real symmetry
//! exact.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chebyshev::BranchRep;
use crate::domains::{dt_boundary, dt_diameter, modulus_lower_bound, t_parameter, Flower, InnerSet, ModulusBound, Region};
use crate::engine::{apply_word, Prerenormalization};
use crate::machinery::level_intervals;
use crate::map::{LorenzMap, Side};
use crate::{Error, Interval, Result};

const FINAL_RESIDUAL: f64 = 1e-11;
const STEP_RESIDUAL: f64 = 1e-12;
const MIN_STEP: f64 = 1e-6;
const FIRST_STEP: f64 = 1.0 / 64.0;
const MAX_STEP: f64 = 0.25;
/// Intermediate iterates may dip below the real axis by this much.
const IM_SLACK: f64 = 1e-13;
/// Largest Bernstein parameter reported for fast-decaying series.
pub const RHO_MAX: f64 = 64.0;
/// Vertices per boundary arc of pulled-back regions.
pub const REGION_VERTICES: usize = 4096;

/// `word(z)`, its derivative, and the smallest imaginary part among the
/// iterates `z, f(z), ...` before the last letter.
pub fn eval_word_complex(map: &LorenzMap, word: &[Side], z: Complex64) -> Result<(Complex64, Complex64, f64)> {
    let mut y = z;
    let mut d = Complex64::new(1.0, 0.0);
    let mut min_im = f64::INFINITY;
    for &s in word {
        min_im = min_im.min(y.im);
        let (v, dv) = map.eval_complex_with_derivative(s, y)?;
        y = v;
        d *= dv;
    }
    Ok((y, d, min_im))
}

/// Path-following Newton for `g(z) = w` along the polyline `waypoints`,
/// starting from the known solution `z0` of `g(z0) = waypoints[0]`.
fn continue_inverse<G>(g: G, z0: Complex64, waypoints: &[Complex64]) -> Result<Complex64>
where
    G: Fn(Complex64) -> Result<(Complex64, Complex64)>,
{
    let w = *waypoints.last().unwrap();
    let scale = 1.0 + waypoints.iter().fold(0.0f64, |m, p| m.max(p.norm()));
    let newton = |mut z: Complex64, target: Complex64, tol: f64| -> Option<Complex64> {
        for _ in 0..20 {
            let (v, d) = g(z).ok()?;
            let r = v - target;
            if r.norm() <= tol * scale {
                return Some(z);
            }
            if !(d.norm() > 0.0) {
                return None;
            }
            z -= r / d;
        }
        let (v, _) = g(z).ok()?;
        ((v - target).norm() <= tol * scale).then_some(z)
    };
    let mut z = z0;
    for (leg, pair) in waypoints.windows(2).enumerate() {
        let (a, b) = (pair[0], pair[1]);
        let (mut s, mut h) = (0.0f64, FIRST_STEP);
        while s < 1.0 {
            let s1 = (s + h).min(1.0);
            let target = a + (b - a) * s1;
            let step = g(z).ok().and_then(|(v, d)| {
                let pred = z + (target - v) / d;
                newton(pred, target, STEP_RESIDUAL)
            });
            match step {
                Some(zn) => {
                    z = zn;
                    s = s1;
                    h = (2.0 * h).min(MAX_STEP);
                }
                None => {
                    h *= 0.5;
                    if h < MIN_STEP {
                        return Err(Error::Continuation {
                            s: (leg as f64 + s) / (waypoints.len() - 1) as f64,
                            reason: format!("Newton failed near z = {z} while following {a} -> {b}"),
                        });
                    }
                }
            }
        }
    }
    let (v, _) = g(z)?;
    if (v - w).norm() > FINAL_RESIDUAL {
        return Err(Error::Continuation {
            s: 1.0,
            reason: format!("final residual {:.3e} above {FINAL_RESIDUAL:.0e}", (v - w).norm()),
        });
    }
    Ok(z)
}

/// Continuation of the inverse of `word` along the straight path from
/// `word(seed)` to `w`. `seed` must be a real point at which `word` is a local
/// diffeomorphism.
pub fn inverse_branch(map: &LorenzMap, word: &[Side], w: Complex64, seed: f64) -> Result<Complex64> {
    let w0 = Complex64::new(apply_word(map, word, seed), 0.0);
    inverse_branch_along(map, word, &[w0, w], seed)
}

/// As [`inverse_branch`], along the polyline `word(seed), path[1], ...`.
/// Paths with a point below the real axis are handled by mirroring, so
/// they must not cross it.
pub fn inverse_branch_along(map: &LorenzMap, word: &[Side], path: &[Complex64], seed: f64) -> Result<Complex64> {
    if path.iter().any(|p| p.im < 0.0) {
        let mirrored: Vec<Complex64> = path.iter().map(|p| p.conj()).collect();
        return inverse_branch_along(map, word, &mirrored, seed).map(|z| z.conj());
    }
    let g = |z: Complex64| -> Result<(Complex64, Complex64)> {
        let (v, d, min_im) = eval_word_complex(map, word, z)?;
        if min_im < -IM_SLACK {
            return Err(Error::Domain(format!("iterate left the upper half-plane at {z}")));
        }
        Ok((v, d))
    };
    continue_inverse(g, Complex64::new(seed, 0.0), path)
}

/// Real preimage of `y` under `word` restricted to `domain`, where `word`
/// is increasing.
pub fn real_preimage(map: &LorenzMap, word: &[Side], domain: Interval, y: f64) -> Option<f64> {
    let (a, b) = (apply_word(map, word, domain.lo), apply_word(map, word, domain.hi));
    if !(a <= y && y <= b) {
        return None;
    }
    let (mut lo, mut hi) = (domain.lo, domain.hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if apply_word(map, word, mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Inverse of `word: domain -> ℝ` at `w`, seeded from the real point whose
/// image is the projection of `w` kept away from the ends of the image, and
/// continued through the half-plane of `w`.
pub fn pull_back(map: &LorenzMap, word: &[Side], domain: Interval, w: Complex64) -> Result<Complex64> {
    let img = Interval::new(apply_word(map, word, domain.lo), apply_word(map, word, domain.hi));
    if w.im == 0.0 {
        return real_preimage(map, word, domain, w.re)
            .map(|x| Complex64::new(x, 0.0))
            .ok_or_else(|| Error::Domain(format!("{} is outside the branch image {img:?}", w.re)));
    }
    let margin = 0.02 * img.len();
    let y0 = w.re.clamp(img.lo + margin, img.hi - margin);
    let seed = real_preimage(map, word, domain, y0)
        .ok_or_else(|| Error::Numeric(format!("no real seed for {y0} in {domain:?}")))?;
    // Climb before moving sideways: critical values of the word are real.
    let h = w.im.abs().max(0.25 * img.len()).copysign(w.im);
    let w0 = Complex64::new(apply_word(map, word, seed), 0.0);
    let path = [w0, Complex64::new(w0.re, h), Complex64::new(w.re, h), w];
    inverse_branch_along(map, word, &path, seed)
}

/// `L_k` with `L_0 = [0, 1]`.
fn big_l(pre: &Prerenormalization, k: usize) -> Result<Interval> {
    if k == 0 {
        Ok(Interval::new(0.0, 1.0))
    } else {
        Ok(level_intervals(pre, k)?.l_union())
    }
}

fn check_levels(pre: &Prerenormalization, n: usize, m: usize) -> Result<()> {
    if n == 0 || n > pre.depth() || m == 0 || m > n {
        return Err(Error::Domain(format!(
            "need 1 <= m <= n <= {}, got n = {n}, m = {m}",
            pre.depth()
        )));
    }
    Ok(())
}

/// Points of `D_σ(J)` in the open upper half-plane: the boundary arc, a row
/// just above `J`, and the arcs of `D_t(J)` for `t = 2σ, 4σ, ..., 64σ`.
pub fn sample_upper(j: &Interval, sigma: f64, count: usize) -> Vec<Complex64> {
    let n_arc = (count / 4).max(3);
    let n_row = (count / 4).max(1);
    let curves = 6;
    let n_int = ((count - count.min(n_arc + n_row)) / curves).max(3);
    let eps = 1e-6 * j.len();
    let mut out: Vec<Complex64> = dt_boundary(j, sigma, n_arc + 2)[1..=n_arc].to_vec();
    out.extend((0..n_row).map(|i| Complex64::new(j.lo + j.len() * (i as f64 + 0.5) / n_row as f64, eps)));
    for k in 1..=curves {
        let t = sigma * 2f64.powi(k as i32);
        out.extend_from_slice(&dt_boundary(j, t, n_int + 2)[1..=n_int]);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InverseSample {
    pub side: Side,
    pub z: Complex64,
    pub preimage: Complex64,
    /// `|preimage - c|`.
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MainInequalityReport {
    pub n: usize,
    pub m: usize,
    pub sigma: f64,
    /// Upper half-plane samples; the lower half is their mirror image.
    pub samples: Vec<InverseSample>,
    /// `|L_{n-m}|^{1/α} |C_{n±}|^{(α-1)/α}` for `-` and `+`.
    pub rhs_scale: [f64; 2],
    pub sup_distance: [f64; 2],
    pub empirical_b1: f64,
    pub attempted: usize,
    pub failures: usize,
    pub success_rate: f64,
    /// A few continuation failures, for diagnostics.
    pub failure_examples: Vec<String>,
}

/// Pulls `D_σ(L_{n-m}) \ ℝ` back by both branches of `pR^n f` and compares
/// the distance of the preimages to `c` with `|L_{n-m}|^{1/α} |C_{n±}|^{(α-1)/α}`.
pub fn verify_main_inequality(pre: &Prerenormalization, n: usize, m: usize, sample_count: usize, sigma: f64) -> Result<MainInequalityReport> {
    check_levels(pre, n, m)?;
    let map = &pre.base;
    let (alpha, c) = (map.alpha(), map.c());
    let li = level_intervals(pre, n)?;
    let target = big_l(pre, n - m)?;
    let pts = sample_upper(&target, sigma, sample_count);
    let mut samples = Vec::new();
    let mut failures = Vec::new();
    let mut rhs_scale = [0.0; 2];
    let mut sup_distance = [0.0f64; 2];
    for (i, side) in Side::both().into_iter().enumerate() {
        let word = pre.level(n).word(side);
        let domain = li.l(side);
        rhs_scale[i] = target.len().powf(1.0 / alpha) * li.c_half(side).len().powf((alpha - 1.0) / alpha);
        let res: Vec<(Complex64, Result<Complex64>)> = pts.par_iter().map(|&z| (z, pull_back(map, word, domain, z))).collect();
        for (z, r) in res {
            match r {
                Ok(p) => {
                    let distance = (p - c).norm();
                    sup_distance[i] = sup_distance[i].max(distance);
                    samples.push(InverseSample {
                        side,
                        z,
                        preimage: p,
                        distance,
                    });
                }
                Err(e) => failures.push(format!("{side:?} at {z}: {e}")),
            }
        }
    }
    let attempted = 2 * pts.len();
    let empirical_b1 = (sup_distance[0] / rhs_scale[0]).max(sup_distance[1] / rhs_scale[1]);
    let n_fail = failures.len();
    failures.truncate(5);
    Ok(MainInequalityReport {
        n,
        m,
        sigma,
        samples,
        rhs_scale,
        sup_distance,
        empirical_b1,
        attempted,
        failures: n_fail,
        success_rate: (attempted - n_fail) as f64 / attempted as f64,
        failure_examples: failures,
    })
}

/// Widest flower on `l` (side petals `K |l|`, `K` from a fixed grid) whose
/// middle petal parameter `t̃` still contains every point outside the side
/// petals. Returns `None` when no `t̃ > 0` works.
pub fn enclosing_flower(points: &[Complex64], l: &Interval, sigma: f64) -> Option<Flower> {
    let mut best: Option<Flower> = None;
    for k in [0.02, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3] {
        let probe = Flower::symmetric(l, k, 1.0, sigma).ok()?;
        let [left, mid, right] = probe.petals();
        let t = points
            .iter()
            .filter(|z| !(crate::domains::in_dt(&left.0, sigma, **z) || crate::domains::in_dt(&right.0, sigma, **z)))
            .map(|z| t_parameter(&mid.0, *z))
            .fold(f64::INFINITY, f64::min)
            .min(1e6);
        if t > 0.0 && best.is_none_or(|b| t > b.t) {
            best = Flower::symmetric(l, k, t, sigma).ok();
        }
    }
    best
}

/// Bernstein-ellipse parameter from the geometric decay of the Chebyshev
/// coefficients, capped at [`RHO_MAX`].
pub fn bernstein_rho(rep: &BranchRep) -> f64 {
    let amax = rep.coeffs.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let pts: Vec<(f64, f64)> = rep
        .coeffs
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, a)| a.abs() > 1e-14 * amax)
        .map(|(k, a)| (k as f64, a.abs().ln()))
        .collect();
    if pts.len() < 3 {
        return RHO_MAX;
    }
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (mx, my) = (sx / n, sy / n);
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + (p.0 - mx) * (p.1 - my), b + (p.0 - mx).powi(2)));
    let slope = sxy / sxx;
    (-slope).exp().clamp(1.0, RHO_MAX)
}

/// Level of `t` in the ellipse family with foci `0, T`.
fn ellipse_level(t: Complex64, domain_len: f64) -> f64 {
    let s = t * (2.0 / domain_len) - 1.0;
    let r = (s - 1.0).sqrt() * (s + 1.0).sqrt();
    (s + r).norm().max((s - r).norm())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LrReport {
    pub r: f64,
    pub holds: bool,
    /// Bernstein parameters of `η_-` and `η_+`.
    pub rho: [f64; 2],
    /// Largest ellipse level reached by a preimage, divided by the usable level.
    pub worst_level: [f64; 2],
    pub failures: Vec<String>,
}

/// Checks that `η_±^{-1}` continues analytically, inside the region where
/// the Chebyshev series is trusted, over the `r`-neighborhood of the branch
/// image and over the disk of radius `r` about the critical value.
pub fn check_l_r_membership(map: &LorenzMap, r: f64) -> Result<LrReport> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("radius must be positive, got {r}")));
    }
    let mut rho = [0.0; 2];
    let mut worst = [0.0; 2];
    let mut failures = Vec::new();
    for (i, side) in Side::both().into_iter().enumerate() {
        let eta = map.eta(side);
        let d_eta = map.eta_derivative(side);
        let big_t = eta.domain_len;
        rho[i] = bernstein_rho(eta);
        let usable = 1.0 + 0.9 * (rho[i] - 1.0);
        let (y0, y1) = (eta.eval(0.0), eta.eval(big_t));
        let (lo, hi) = (y0.min(y1), y0.max(y1));
        let cv = map.critical_value(side);
        let n = 128;
        let mut ws: Vec<Complex64> = Vec::new();
        // Upper half of the stadium around [lo, hi], then the upper half circle about cv.
        for k in 0..=n {
            let th = std::f64::consts::PI * k as f64 / n as f64;
            ws.push(Complex64::new(hi, 0.0) + Complex64::from_polar(r, 0.5 * th));
            ws.push(Complex64::new(lo, 0.0) + Complex64::from_polar(r, std::f64::consts::FRAC_PI_2 + 0.5 * th));
            ws.push(Complex64::new(lo + (hi - lo) * k as f64 / n as f64, r));
            ws.push(Complex64::new(cv, 0.0) + Complex64::from_polar(r, th));
        }
        let g = |t: Complex64| -> Result<(Complex64, Complex64)> { Ok((eta.eval_complex(t), d_eta.eval_complex(t))) };
        for w in ws {
            let y = w.re.clamp(lo, hi);
            let seed = eta.inverse_real(y).unwrap_or(0.0);
            let w0 = Complex64::new(eta.eval(seed), 0.0);
            match continue_inverse(g, Complex64::new(seed, 0.0), &[w0, w]) {
                Ok(t) => {
                    let lvl = ellipse_level(t, big_t) / usable;
                    worst[i] = f64::max(worst[i], lvl);
                }
                Err(e) => {
                    worst[i] = f64::INFINITY;
                    if failures.len() < 5 {
                        failures.push(format!("{side:?} at {w}: {e}"));
                    }
                }
            }
        }
    }
    Ok(LrReport {
        r,
        holds: worst[0] < 1.0 && worst[1] < 1.0,
        rho,
        worst_level: worst,
        failures,
    })
}

/// Largest `r <= r_cap` (to a relative 1e-3) passing [`check_l_r_membership`], or 0.
pub fn l_r_radius(map: &LorenzMap, r_cap: f64) -> f64 {
    let ok = |r: f64| check_l_r_membership(map, r).map(|rep| rep.holds).unwrap_or(false);
    if ok(r_cap) {
        return r_cap;
    }
    let (mut lo, mut hi) = (0.0, r_cap);
    while hi - lo > 1e-3 * r_cap {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PullbackRegion {
    pub side: Side,
    /// Closed boundary polygon in the rescaled coordinates.
    pub boundary: Vec<Complex64>,
    /// `U_± ⊂ f_±(U_±)` certified by a round annulus of this modulus.
    pub modulus: ModulusBound,
    /// No self-intersections among the sampled boundary edges.
    pub simple: bool,
    /// A flower on `L_n±` (original coordinates) containing the pullback.
    pub flower: Option<Flower>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLikeExtension {
    pub n: usize,
    pub m: usize,
    pub sigma: f64,
    /// `L_{n-m}`, so that `D = A(D_σ(L_{n-m}))` with `A` taking `C_n` to `[0, 1]`.
    pub d_interval: Interval,
    pub u_minus: PullbackRegion,
    pub u_plus: PullbackRegion,
    pub diam_d: f64,
    pub c_rescaled: f64,
    pub l_r_radius: f64,
    pub nu_certified: f64,
}

/// `true` when no two non-adjacent edges of the closed polygon cross.
pub fn is_simple_polygon(vertices: &[Complex64]) -> bool {
    let n = vertices.len();
    let cross = |a: Complex64, b: Complex64, c: Complex64| (b - a).re * (c - a).im - (b - a).im * (c - a).re;
    for i in 0..n {
        let (p1, p2) = (vertices[i], vertices[(i + 1) % n]);
        for j in i + 2..n {
            if (j + 1) % n == i {
                continue;
            }
            let (q1, q2) = (vertices[j], vertices[(j + 1) % n]);
            let d1 = cross(q1, q2, p1);
            let d2 = cross(q1, q2, p2);
            let d3 = cross(p1, p2, q1);
            let d4 = cross(p1, p2, q2);
            if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
                return false;
            }
        }
    }
    true
}

/// `(ζ - 1) / (ζ + 1)` with `ζ = sqrt((z - a) / (b - z))`: maps
/// `ℂ \ ((-∞, a] ∪ [b, ∞))` conformally onto the unit disk, with
/// `(a + b) / 2 ↦ 0`.
pub fn slit_disk_map(a: f64, b: f64, z: Complex64) -> Complex64 {
    let zeta = crate::map::cpow((z - a) / (b - z), 0.5);
    (zeta - 1.0) / (zeta + 1.0)
}

/// Closed boundary of `D_σ(J) \ ([J.lo, a] ∪ [b, J.hi])`, each slit traversed
/// on both banks, with samples clustered at the slit tips.
pub fn slit_domain_boundary(j: &Interval, sigma: f64, a: f64, b: f64, n: usize) -> Vec<Complex64> {
    let eps = 1e-13 * j.len();
    let arc = dt_boundary(j, sigma, n);
    let mut upper: Vec<Complex64> = arc[..n].to_vec();
    upper[0] = Complex64::new(j.hi, eps);
    upper[n - 1] = Complex64::new(j.lo, eps);
    let k = n / 4;
    let bank = |from: f64, tip: f64, im: f64, to_tip: bool| -> Vec<Complex64> {
        (1..k)
            .map(|i| {
                let s = if to_tip { 1.0 - i as f64 / k as f64 } else { i as f64 / k as f64 };
                Complex64::new(tip + (from - tip) * s * s, im)
            })
            .collect()
    };
    let mut out = upper.clone();
    if a > j.lo {
        out.extend(bank(j.lo, a, eps, true));
        out.extend(bank(j.lo, a, -eps, false));
    }
    out.extend(upper.iter().rev().map(|z| z.conj()));
    if b < j.hi {
        out.extend(bank(j.hi, b, -eps, true));
        out.extend(bank(j.hi, b, eps, false));
    }
    out
}

fn pullback_region(pre: &Prerenormalization, n: usize, side: Side, target: &Interval, sigma: f64, rescale: impl Fn(Complex64) -> Complex64) -> Result<PullbackRegion> {
    let map = &pre.base;
    let li = level_intervals(pre, n)?;
    let word = pre.level(n).word(side);
    let domain = li.l(side);
    let img = li.image(side);
    if !target.contains_interval(&img, 1e-12) {
        return Err(Error::Certification {
            condition: "branch image inside D".into(),
            detail: format!("{side:?} image {img:?} not inside {target:?}"),
        });
    }
    let eps = 1e-9 * target.len();
    let nv = REGION_VERTICES;
    let row = |a: f64, b: f64, k: usize| -> Vec<Complex64> {
        (0..k).map(|i| Complex64::new(a + (b - a) * i as f64 / (k - 1).max(1) as f64, eps)).collect()
    };
    let nr = (nv / 4).max(2);
    let mut path = row(img.hi, target.hi, nr);
    path.extend(dt_boundary(target, sigma, nv)[1..nv - 1].iter().copied());
    path.extend(row(target.lo, img.lo, nr));
    let pulled = path
        .par_iter()
        .map(|&w| pull_back(map, word, domain, w))
        .collect::<Result<Vec<_>>>()?;
    let mut boundary: Vec<Complex64> = pulled.iter().map(|&z| rescale(z)).collect();
    let lower: Vec<Complex64> = boundary.iter().rev().map(|z| z.conj()).collect();
    boundary.extend(lower);

    // The modulus is measured after uniformizing the two slits of
    // f_±(U_±) = (D \ ℝ) ∪ image, where round annuli fit much better.
    let (a, b) = (rescale(Complex64::new(img.lo, 0.0)).re, rescale(Complex64::new(img.hi, 0.0)).re);
    let j = Interval::new(rescale(Complex64::new(target.lo, 0.0)).re, rescale(Complex64::new(target.hi, 0.0)).re);
    let outer = Region::Polygon {
        vertices: slit_domain_boundary(&j, sigma, a, b, nv)
            .into_iter()
            .map(|z| slit_disk_map(a, b, z))
            .collect(),
        slits: Vec::new(),
    };
    let inner: Vec<Complex64> = boundary.iter().map(|&z| slit_disk_map(a, b, z)).collect();
    let modulus = match modulus_lower_bound(&InnerSet::Points(inner), &outer) {
        Ok(m) => m,
        Err(_) => ModulusBound {
            bound: 0.0,
            center: Complex64::new(0.0, 0.0),
            r_inner: 0.0,
            r_outer: 0.0,
        },
    };
    let stride = (boundary.len() / 1024).max(1);
    let coarse: Vec<Complex64> = boundary.iter().step_by(stride).copied().collect();
    Ok(PullbackRegion {
        side,
        simple: is_simple_polygon(&coarse),
        flower: enclosing_flower(&pulled, &domain, sigma),
        boundary,
        modulus,
    })
}

/// Builds `D = A(D_σ(L_{n-m}))` and `U_± = A((pR^n f_±)^{-1}(D_σ(L_{n-m}) \ ℝ) ∪ L_n±)`
/// with `A` the affine map taking `C_n` to `[0, 1]`, and certifies the
/// largest `ν` for which the extension of `R^n f` satisfies
/// `mod(U_±, f_±(U_±)) >= ν`, `diam D <= 1/ν`, `c ∈ [ν, 1 - ν]` and the
/// `r = ν` analyticity condition.
pub fn power_like_extension(pre: &Prerenormalization, n: usize, m: usize, sigma: f64) -> Result<PowerLikeExtension> {
    check_levels(pre, n, m)?;
    let big_c = pre.level(n).c_interval();
    let target = big_l(pre, n - m)?;
    let rescale = |z: Complex64| (z - big_c.lo) / big_c.len();
    let u_minus = pullback_region(pre, n, Side::Minus, &target, sigma, rescale)?;
    let u_plus = pullback_region(pre, n, Side::Plus, &target, sigma, rescale)?;
    let diam_d = dt_diameter(&target, sigma) / big_c.len();
    let c_rescaled = (pre.base.c() - big_c.lo) / big_c.len();
    let l_r = l_r_radius(pre.renormalization(n), 0.5);
    let conditions = [
        ("modulus of U_- in f_-(U_-)", u_minus.modulus.bound),
        ("modulus of U_+ in f_+(U_+)", u_plus.modulus.bound),
        ("diameter of D", 1.0 / diam_d),
        ("critical point away from 0", c_rescaled),
        ("critical point away from 1", 1.0 - c_rescaled),
        ("analyticity radius", l_r),
    ];
    let (name, nu) = conditions
        .iter()
        .copied()
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap();
    if !(nu > 0.0) {
        return Err(Error::Certification {
            condition: name.into(),
            detail: format!("no positive ν (value {nu})"),
        });
    }
    Ok(PowerLikeExtension {
        n,
        m,
        sigma,
        d_interval: target,
        u_minus,
        u_plus,
        diam_d,
        c_rescaled,
        l_r_radius: l_r,
        nu_certified: nu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::standard_family;

    #[test]
    fn single_plus_branch_matches_closed_form() {
        let (u, v, c) = (0.8, 0.2, 0.45);
        let f = standard_family(u, v, c, 2.0).unwrap();
        let w = Complex64::new(0.6, 0.3);
        let z = pull_back(&f, &[Side::Plus], Interval::new(c, 1.0), w).unwrap();
        let exact = c + (1.0 - c) * ((w - v) / (1.0 - v)).sqrt();
        assert!((z - exact).norm() < 1e-11, "{z} vs {exact}");
    }

    #[test]
    fn conjugate_symmetry_is_exact() {
        let f = standard_family(0.85, 0.15, 0.5, 2.0).unwrap();
        let word = [Side::Minus, Side::Plus];
        let dom = Interval::new(0.2, 0.45);
        let w = Complex64::new(apply_word(&f, &word, 0.3), 0.05);
        let a = pull_back(&f, &word, dom, w).unwrap();
        let b = pull_back(&f, &word, dom, w.conj()).unwrap();
        assert_eq!(a.conj(), b);
        let (val, _, _) = eval_word_complex(&f, &word, a).unwrap();
        assert!((val - w).norm() <= 1e-11);
    }

    #[test]
    fn real_target_uses_real_preimage() {
        let f = standard_family(0.85, 0.15, 0.5, 2.0).unwrap();
        let dom = Interval::new(0.0, 0.5);
        let z = pull_back(&f, &[Side::Minus], dom, Complex64::new(0.4, 0.0)).unwrap();
        assert_eq!(z.im, 0.0);
        assert!((f.branch(Side::Minus, z.re) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn lr_radius_of_affine_family_is_capped_only_by_geometry() {
        let f = standard_family(0.8, 0.2, 0.5, 2.0).unwrap();
        assert_eq!(bernstein_rho(f.eta(Side::Minus)), RHO_MAX);
        assert!(check_l_r_membership(&f, 0.3).unwrap().holds);
        assert!(check_l_r_membership(&f, 0.0).is_err());
    }

    #[test]
    fn slow_decay_fails_membership() {
        let coeffs: Vec<f64> = (0..30).map(|k| if k == 0 { 0.5 } else { -0.4 * 0.5f64.powi(k) }).collect();
        let rep = BranchRep::new(0.25, coeffs).unwrap();
        assert!((bernstein_rho(&rep) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn simple_polygon_detection() {
        let sq: Vec<Complex64> = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)].iter().map(|&(x, y)| Complex64::new(x, y)).collect();
        assert!(is_simple_polygon(&sq));
        let bow: Vec<Complex64> = [(0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (0.0, 1.0)].iter().map(|&(x, y)| Complex64::new(x, y)).collect();
        assert!(!is_simple_polygon(&bow));
    }
}
