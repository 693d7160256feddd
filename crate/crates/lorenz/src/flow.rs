//! Renormalization orbits `f, Rf, R^2 f, ...` and fixed points of `R`.
//!
//! The fixed-point search splits a map into its critical values `(u, v)` and
//! a normalized shape `(c, h_-, h_+)` with `η_-(sT) = u (1 - h_-(s))` and
//! `η_+(sT) = v + (1 - v) h_+(s)`. `R` is strongly expanding in the
//! critical-value directions, so each step re-solves `(u, v)` by Newton to
//! make them invariant and only damps the shape. A last projection picks
//! `(u, v)` so that `R^K f` keeps the same critical values, which removes the
//! unstable component to the accuracy the later iterates need.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chebyshev::BranchRep;
use crate::combinatorics::LorenzPermutation;
use crate::engine::{find_renormalization, renormalize};
use crate::map::{standard_family, LorenzMap, RealBoundsReport};
use crate::{Error, Result};

pub const C0_GRID: usize = 512;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlowLevel {
    pub level: usize,
    pub map: LorenzMap,
    /// `θ` of this level's renormalization; `None` at the last level.
    pub theta: Option<LorenzPermutation>,
    pub bounds: RealBoundsReport,
    /// `|C|` of this level's renormalization interval.
    pub c_length: Option<f64>,
    /// Uniform distance to the previous level on the 512-grid.
    pub c0_distance: Option<f64>,
    /// Running `min δ` and `max Δ` up to this level.
    pub delta_envelope: f64,
    pub big_delta_envelope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum StopReason {
    Completed,
    NotRenormalizable { level: usize },
    Trivial { level: usize },
    FilterRejected { level: usize, theta: LorenzPermutation },
    NumericFailure { level: usize, message: String },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlowRecord {
    pub levels: Vec<FlowLevel>,
    pub stop: StopReason,
}

/// Up to `n` renormalizations of `map`, stopping early when a level is not
/// renormalizable or its combinatorics falls outside `filter`.
pub fn iterate(map: &LorenzMap, n: usize, filter: Option<&[LorenzPermutation]>, max_time: usize) -> FlowRecord {
    let mut levels: Vec<FlowLevel> = Vec::new();
    let mut cur = map.clone();
    let mut stop = StopReason::Completed;
    for k in 0..=n {
        let bounds = cur.real_bounds_report();
        let (de, be) = match levels.last() {
            Some(l) => (l.delta_envelope.min(bounds.delta), l.big_delta_envelope.max(bounds.big_delta)),
            None => (bounds.delta, bounds.big_delta),
        };
        let c0 = levels.last().map(|l| l.map.c0_distance(&cur, C0_GRID));
        let mut level = FlowLevel {
            level: k,
            map: cur.clone(),
            theta: None,
            bounds,
            c_length: None,
            c0_distance: c0,
            delta_envelope: de,
            big_delta_envelope: be,
        };
        if k == n {
            levels.push(level);
            break;
        }
        let step = match find_renormalization(&cur, max_time) {
            Ok(Some(s)) => s,
            Ok(None) => {
                stop = StopReason::NotRenormalizable { level: k };
                levels.push(level);
                break;
            }
            Err(Error::Trivial(_)) => {
                stop = StopReason::Trivial { level: k };
                levels.push(level);
                break;
            }
            Err(e) => {
                stop = StopReason::NumericFailure {
                    level: k,
                    message: e.to_string(),
                };
                levels.push(level);
                break;
            }
        };
        level.theta = Some(step.theta.clone());
        level.c_length = Some(step.c_interval.len());
        if let Some(f) = filter {
            if !f.contains(&step.theta) {
                stop = StopReason::FilterRejected {
                    level: k,
                    theta: step.theta.clone(),
                };
                levels.push(level);
                break;
            }
        }
        levels.push(level);
        match renormalize(&cur, &step) {
            Ok(r) => cur = r,
            Err(e) => {
                stop = StopReason::NumericFailure {
                    level: k,
                    message: e.to_string(),
                };
                break;
            }
        }
    }
    FlowRecord { levels, stop }
}

/// Critical-value-free part of a map.
#[derive(Clone, Debug, PartialEq)]
pub struct Shape {
    pub alpha: f64,
    pub c: f64,
    pub h_minus: Vec<f64>,
    pub h_plus: Vec<f64>,
}

impl Shape {
    pub fn of(map: &LorenzMap) -> Shape {
        let (u, v) = (map.u(), map.v());
        let mut h_minus: Vec<f64> = map.eta(crate::Side::Minus).coeffs.iter().map(|a| -a / u).collect();
        h_minus[0] += 1.0;
        let mut h_plus: Vec<f64> = map.eta(crate::Side::Plus).coeffs.iter().map(|a| a / (1.0 - v)).collect();
        h_plus[0] -= v / (1.0 - v);
        Shape {
            alpha: map.alpha(),
            c: map.c(),
            h_minus,
            h_plus,
        }
    }

    pub fn with_uv(&self, u: f64, v: f64) -> Result<LorenzMap> {
        let mut em: Vec<f64> = self.h_minus.iter().map(|h| -u * h).collect();
        em[0] += u;
        let mut ep: Vec<f64> = self.h_plus.iter().map(|h| (1.0 - v) * h).collect();
        ep[0] += v;
        let tm = self.c.powf(self.alpha);
        let tp = (1.0 - self.c).powf(self.alpha);
        LorenzMap::new(self.alpha, self.c, BranchRep::new(tm, em)?, BranchRep::new(tp, ep)?)
    }

    fn blend(&self, other: &Shape, w: f64) -> Shape {
        let mix = |a: &[f64], b: &[f64]| -> Vec<f64> {
            let n = a.len().max(b.len());
            (0..n)
                .map(|i| (1.0 - w) * a.get(i).copied().unwrap_or(0.0) + w * b.get(i).copied().unwrap_or(0.0))
                .collect()
        };
        Shape {
            alpha: self.alpha,
            c: (1.0 - w) * self.c + w * other.c,
            h_minus: mix(&self.h_minus, &other.h_minus),
            h_plus: mix(&self.h_plus, &other.h_plus),
        }
    }
}

/// `R f` restricted to the target combinatorics.
fn renorm_with_theta(map: &LorenzMap, theta: &LorenzPermutation) -> Result<LorenzMap> {
    let max_time = theta.m_minus().max(theta.m_plus());
    let step = find_renormalization(map, max_time)?
        .ok_or_else(|| Error::Numeric("map left the renormalizable locus".into()))?;
    if &step.theta != theta {
        return Err(Error::Numeric(format!("combinatorics changed to {:?}", step.theta)));
    }
    renormalize(map, &step)
}

fn renorm_iter(map: &LorenzMap, theta: &LorenzPermutation, k: usize) -> Result<LorenzMap> {
    let mut m = map.clone();
    for _ in 0..k {
        m = renorm_with_theta(&m, theta)?;
    }
    Ok(m)
}

/// Newton for `(u, v)` with `crit(R^k with_uv(u, v)) = target(u, v)`.
fn solve_uv<T>(shape: &Shape, theta: &LorenzPermutation, k: usize, start: (f64, f64), target: T) -> Result<(f64, f64)>
where
    T: Fn(f64, f64) -> (f64, f64),
{
    let resid = |u: f64, v: f64| -> Result<(f64, f64)> {
        let r = renorm_iter(&shape.with_uv(u, v)?, theta, k)?;
        let (tu, tv) = target(u, v);
        Ok((r.u() - tu, r.v() - tv))
    };
    let (mut u, mut v) = start;
    let mut f = resid(u, v)?;
    for _ in 0..30 {
        let norm = f.0.abs().max(f.1.abs());
        if norm < 1e-13 {
            break;
        }
        let h = 1e-7;
        let fu = resid(u + h, v)?;
        let fv = resid(u, v + h)?;
        let (a, b, c, d) = ((fu.0 - f.0) / h, (fv.0 - f.0) / h, (fu.1 - f.1) / h, (fv.1 - f.1) / h);
        let det = a * d - b * c;
        if !det.is_normal() {
            return Err(Error::Numeric("singular Jacobian in critical-value solve".into()));
        }
        let du = (d * f.0 - b * f.1) / det;
        let dv = (a * f.1 - c * f.0) / det;
        // Backtrack until the residual decreases.
        let mut lam = 1.0;
        loop {
            let (un, vn) = (u - lam * du, v - lam * dv);
            if let Ok(fnew) = resid(un, vn) {
                if fnew.0.abs().max(fnew.1.abs()) < norm {
                    u = un;
                    v = vn;
                    f = fnew;
                    break;
                }
            }
            lam *= 0.5;
            if lam < 1e-4 {
                return Ok((u, v));
            }
        }
    }
    Ok((u, v))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FixedPoint {
    pub map: LorenzMap,
    pub theta: LorenzPermutation,
    /// `sup |f - Rf|` on the 512-grid.
    pub residual: f64,
    pub iterations: usize,
    /// Residual after each damped step.
    pub trace: Vec<f64>,
}

/// Options of [`fixed_point_search`].
#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub budget: usize,
    /// Stop damping once the residual is below this.
    pub inner_tol: f64,
    /// Power of `R` used by the final projection.
    pub projection_power: usize,
    pub damping: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            budget: 60,
            inner_tol: 1e-9,
            projection_power: 5,
            damping: 0.5,
        }
    }
}

/// Standard-family seed at `c = 1/2` whose combinatorics is `theta` and whose
/// critical values move least under `R`.
fn seed(theta: &LorenzPermutation, alpha: f64) -> Result<(f64, f64)> {
    let n = 40;
    let pts: Vec<(f64, f64)> = (1..n)
        .flat_map(|i| (1..n).map(move |j| (0.5 + 0.5 * i as f64 / n as f64, 0.5 * j as f64 / n as f64)))
        .collect();
    let best = pts
        .par_iter()
        .filter_map(|&(u, v)| {
            let f = standard_family(u, v, 0.5, alpha).ok()?;
            let r = renorm_with_theta(&f, theta).ok()?;
            Some(((r.u() - u).hypot(r.v() - v), u, v))
        })
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    best.map(|(_, u, v)| (u, v))
        .ok_or_else(|| Error::Domain(format!("no standard-family map with combinatorics {theta:?}")))
}

/// Searches a fixed point of `R` with combinatorics `theta`.
pub fn fixed_point_search(theta: &LorenzPermutation, alpha: f64, opts: &SearchOptions) -> Result<FixedPoint> {
    let (u0, v0) = seed(theta, alpha)?;
    let mut shape = Shape::of(&standard_family(u0, v0, 0.5, alpha)?);
    let mut uv = solve_uv(&shape, theta, 1, (u0, v0), |u, v| (u, v))?;
    let mut trace = Vec::new();
    let mut growth = 0;
    let mut iterations = 0;
    while iterations < opts.budget {
        iterations += 1;
        uv = solve_uv(&shape, theta, 1, uv, |u, v| (u, v))?;
        let f = shape.with_uv(uv.0, uv.1)?;
        let r = renorm_with_theta(&f, theta)?;
        let res = f.c0_distance(&r, C0_GRID);
        if let Some(&prev) = trace.last() {
            growth = if res > prev { growth + 1 } else { 0 };
        }
        trace.push(res);
        if growth >= 10 {
            return Err(Error::Divergence(format!("residual grew for 10 consecutive steps: {trace:?}")));
        }
        if res < opts.inner_tol {
            break;
        }
        shape = shape.blend(&Shape::of(&r), opts.damping);
    }
    let target = uv;
    let uv = solve_uv(&shape, theta, opts.projection_power, uv, move |_, _| target)?;
    let map = shape.with_uv(uv.0, uv.1)?;
    let residual = map.c0_distance(&renorm_with_theta(&map, theta)?, C0_GRID);
    Ok(FixedPoint {
        map,
        theta: theta.clone(),
        residual,
        iterations,
        trace,
    })
}

/// `sup |R^k f - R^{k+1} f|` for `k = 0..steps`.
pub fn stability_trace(map: &LorenzMap, theta: &LorenzPermutation, steps: usize) -> Result<Vec<f64>> {
    let mut cur = map.clone();
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        let next = renorm_with_theta(&cur, theta)?;
        out.push(cur.c0_distance(&next, C0_GRID));
        cur = next;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_round_trip() {
        let f = standard_family(0.8, 0.15, 0.45, 2.0).unwrap();
        let s = Shape::of(&f);
        let g = s.with_uv(0.8, 0.15).unwrap();
        assert!(f.c0_distance(&g, 512) < 1e-15);
        assert!((s.h_minus[0] - 0.5).abs() < 1e-15 && (s.h_plus[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn flow_stops_on_trivial_map() {
        let f = standard_family(0.4, 0.6, 0.5, 2.0).unwrap();
        let rec = iterate(&f, 3, None, 8);
        assert_eq!(rec.stop, StopReason::Trivial { level: 0 });
        assert_eq!(rec.levels.len(), 1);
    }

    #[test]
    fn flow_envelopes_are_monotone() {
        let f = standard_family(0.8125, 0.1875, 0.5, 2.0).unwrap();
        let rec = iterate(&f, 3, None, 8);
        for w in rec.levels.windows(2) {
            assert!(w[1].delta_envelope <= w[0].delta_envelope);
            assert!(w[1].big_delta_envelope >= w[0].big_delta_envelope);
        }
    }
}
