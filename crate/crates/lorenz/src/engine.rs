//! First-return renormalization.
//!
//! `find_renormalization` locates the maximal renormalization interval
//! `C = [p, q]` with the smallest total return time, `renormalize` rescales the
//! first-return map to `[0, 1]` and refits its branches, and `prerenormalize`
//! iterates both while keeping everything in the original coordinates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chebyshev::{interpolate_adaptive, BranchRep};
use crate::combinatorics::{extract_permutation, LorenzPermutation};
use crate::config::Tolerances;
use crate::map::{LorenzMap, Nontriviality, Side};
use crate::{Error, Interval, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenormalizationStep {
    pub m_minus: usize,
    pub m_plus: usize,
    #[serde(rename = "C")]
    pub c_interval: Interval,
    /// `f^k(C_-)` for `k = 1..=m_minus`; the last entry is the return into `C`.
    pub orbit_minus: Vec<Interval>,
    pub orbit_plus: Vec<Interval>,
    pub theta: LorenzPermutation,
}

impl RenormalizationStep {
    pub fn m(&self, side: Side) -> usize {
        match side {
            Side::Minus => self.m_minus,
            Side::Plus => self.m_plus,
        }
    }

    pub fn orbit(&self, side: Side) -> &[Interval] {
        match side {
            Side::Minus => &self.orbit_minus,
            Side::Plus => &self.orbit_plus,
        }
    }

    /// `C_-` or `C_+` for critical point `c`.
    pub fn half(&self, side: Side, c: f64) -> Interval {
        match side {
            Side::Minus => Interval::new(self.c_interval.lo, c),
            Side::Plus => Interval::new(c, self.c_interval.hi),
        }
    }

    /// Branch sequence followed by `C_±` until its return.
    pub fn word(&self, side: Side) -> Vec<Side> {
        let mid = self.c_interval.mid();
        let orbit = self.orbit(side);
        std::iter::once(side)
            .chain(orbit[..orbit.len() - 1].iter().map(|iv| if iv.mid() < mid { Side::Minus } else { Side::Plus }))
            .collect()
    }

    /// True when the return image only reaches `c` within `tol`.
    pub fn is_weak_return(&self, c: f64, tol: f64) -> bool {
        let rm = self.orbit_minus.last().unwrap().hi;
        let rp = self.orbit_plus.last().unwrap().lo;
        (rm - c).abs() <= tol || (rp - c).abs() <= tol
    }
}

/// Applies the branches of `word` in order.
pub fn apply_word(map: &LorenzMap, word: &[Side], x: f64) -> f64 {
    word.iter().fold(x, |y, &s| map.branch(s, y))
}

/// Derivative of [`apply_word`] by the chain rule.
pub fn apply_word_derivative(map: &LorenzMap, word: &[Side], x: f64) -> (f64, f64) {
    let (mut y, mut d) = (x, 1.0);
    for &s in word {
        d *= map.branch_derivative(s, y);
        y = map.branch(s, y);
    }
    (y, d)
}

/// Images `f^k(J)` for `k = 1..=steps` of an interval on one side of `c`.
/// Letters come from `word` when given, otherwise from the position of each
/// image, which must then avoid `c` by more than `tol`.
pub fn interval_orbit(map: &LorenzMap, start: Interval, word: Option<&[Side]>, steps: usize, tol: f64) -> Result<Vec<Interval>> {
    let c = map.c();
    let mut cur = start;
    let mut out = Vec::with_capacity(steps);
    for k in 0..steps {
        let side = match word {
            Some(w) => w[k],
            None => {
                if cur.hi <= c + tol {
                    Side::Minus
                } else if cur.lo >= c - tol {
                    Side::Plus
                } else {
                    return Err(Error::Orbit(format!("image {k} = [{}, {}] contains c", cur.lo, cur.hi)));
                }
            }
        };
        cur = Interval::new(map.branch(side, cur.lo), map.branch(side, cur.hi));
        out.push(cur);
    }
    Ok(out)
}

struct Periodic {
    period: usize,
    x: f64,
}

/// Fixed points of `f^k`, `2 <= k <= max_time`, inside `(lo, hi)` (one side of `c`).
fn periodic_points(map: &LorenzMap, lo: f64, hi: f64, max_time: usize, tol: &Tolerances) -> Vec<Periodic> {
    let n = tol.scan_grid;
    let xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let mut pts = xs.clone();
    let mut masks = vec![0u64; xs.len()];
    let mut out = Vec::new();
    for k in 1..=max_time {
        for (i, y) in pts.iter_mut().enumerate() {
            let s = map.side_of(*y);
            if s == Side::Plus {
                masks[i] |= 1 << (k - 1);
            }
            *y = map.branch(s, *y);
        }
        if k < 2 {
            continue;
        }
        let g: Vec<f64> = pts.iter().zip(&xs).map(|(y, x)| y - x).collect();
        for i in 1..xs.len() - 1 {
            if g[i] == 0.0 {
                out.push(Periodic { period: k, x: xs[i] });
            }
        }
        for i in 0..xs.len() - 1 {
            if masks[i] != masks[i + 1] || !(g[i] * g[i + 1] < 0.0) {
                continue;
            }
            let word: Vec<Side> = (0..k).map(|j| if masks[i] >> j & 1 == 1 { Side::Plus } else { Side::Minus }).collect();
            let (mut a, mut b) = (xs[i], xs[i + 1]);
            let neg_left = g[i] < 0.0;
            while b - a > tol.root {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                let gm = apply_word(map, &word, m) - m;
                if (gm < 0.0) == neg_left {
                    a = m;
                } else {
                    b = m;
                }
            }
            let x = 0.5 * (a + b);
            // Jumps across a discontinuity of f^k also change sign; keep true roots only.
            if (apply_word(map, &word, x) - x).abs() < 1e-9 {
                out.push(Periodic { period: k, x });
            }
        }
    }
    out
}

fn classify_or_err(map: &LorenzMap) -> Result<()> {
    match map.classify() {
        Nontriviality::Nontrivial => Ok(()),
        k => Err(Error::Trivial(format!(
            "{k:?}: u = {}, v = {}, c = {}",
            map.u(),
            map.v(),
            map.c()
        ))),
    }
}

/// Finds the renormalization with the smallest `m_- + m_+ <= 2 max_time`
/// (each return time at most `max_time`), maximal `|C|` among those.
/// Returns `None` when the map is not renormalizable within that range.
pub fn find_renormalization(map: &LorenzMap, max_time: usize) -> Result<Option<RenormalizationStep>> {
    find_renormalization_with(map, max_time, &Tolerances::default())
}

pub fn find_renormalization_with(map: &LorenzMap, max_time: usize, tol: &Tolerances) -> Result<Option<RenormalizationStep>> {
    classify_or_err(map)?;
    if max_time < 2 {
        return Ok(None);
    }
    if max_time > 63 {
        return Err(Error::Domain(format!("max_time = {max_time} exceeds 63")));
    }
    let (c, u, v) = (map.c(), map.u(), map.v());
    let ps = periodic_points(map, v, c, max_time, tol);
    let qs = periodic_points(map, c, u, max_time, tol);
    for sum in 4..=2 * max_time {
        let mut cands: Vec<(f64, f64, usize, usize)> = Vec::new();
        for p in &ps {
            for q in &qs {
                if p.period + q.period == sum {
                    cands.push((p.x, q.x, p.period, q.period));
                }
            }
        }
        cands.sort_by(|a, b| (b.1 - b.0).partial_cmp(&(a.1 - a.0)).unwrap());
        for (p, q, mm, mp) in cands {
            if let Some(step) = validate(map, p, q, mm, mp, tol) {
                return Ok(Some(step));
            }
        }
    }
    Ok(None)
}

fn validate(map: &LorenzMap, p: f64, q: f64, mm: usize, mp: usize, tol: &Tolerances) -> Option<RenormalizationStep> {
    let (c, u, v) = (map.c(), map.u(), map.v());
    if !(v < p && p < c && c < q && q < u) {
        return None;
    }
    let ctol = tol.tangency;
    let big_c = Interval::new(p, q);
    let mut orbits = Vec::with_capacity(2);
    for (side, m) in [(Side::Minus, mm), (Side::Plus, mp)] {
        let half = match side {
            Side::Minus => Interval::new(p, c),
            Side::Plus => Interval::new(c, q),
        };
        let orbit = interval_orbit(map, half, None, m, tol.equality).ok()?;
        for iv in &orbit[..m - 1] {
            if !(iv.hi <= p + ctol || iv.lo >= q - ctol) {
                return None;
            }
        }
        let ret = orbit[m - 1];
        let ok = match side {
            Side::Minus => (ret.lo - p).abs() <= ctol && ret.hi >= c - ctol && ret.hi <= q + ctol,
            Side::Plus => (ret.hi - q).abs() <= ctol && ret.lo <= c + ctol && ret.lo >= p - ctol,
        };
        if !ok {
            return None;
        }
        orbits.push((side, half, orbit));
    }
    for (side, half, orbit) in &orbits {
        let mid = big_c.mid();
        let word: Vec<Side> = std::iter::once(*side)
            .chain(orbit[..orbit.len() - 1].iter().map(|iv| if iv.mid() < mid { Side::Minus } else { Side::Plus }))
            .collect();
        if !no_interior_fixed_points(map, &word, *half, tol) {
            return None;
        }
    }
    let (_, hm, om) = &orbits[0];
    let (_, hp, op) = &orbits[1];
    let theta_minus = extract_permutation(&std::iter::once(*hm).chain(om[..mm - 1].iter().copied()).collect::<Vec<_>>()).ok()?;
    let theta_plus = extract_permutation(&std::iter::once(*hp).chain(op[..mp - 1].iter().copied()).collect::<Vec<_>>()).ok()?;
    Some(RenormalizationStep {
        m_minus: mm,
        m_plus: mp,
        c_interval: big_c,
        orbit_minus: om.clone(),
        orbit_plus: op.clone(),
        theta: LorenzPermutation::new(theta_minus, theta_plus).ok()?,
    })
}

fn no_interior_fixed_points(map: &LorenzMap, word: &[Side], half: Interval, tol: &Tolerances) -> bool {
    let n = tol.scan_grid;
    let mut sign = 0.0;
    for i in 1..n {
        let x = half.lo + half.len() * i as f64 / n as f64;
        let g = apply_word(map, word, x) - x;
        if g.abs() <= tol.tangency {
            return false;
        }
        if sign == 0.0 {
            sign = g.signum();
        } else if g.signum() != sign {
            return false;
        }
    }
    true
}

/// Rescaled first-return map `A ∘ f^{m_±} ∘ A^{-1}` with `A(C) = [0, 1]`.
pub fn renormalize(map: &LorenzMap, step: &RenormalizationStep) -> Result<LorenzMap> {
    renormalize_with(map, step, &Tolerances::default())
}

pub fn renormalize_with(map: &LorenzMap, step: &RenormalizationStep, tol: &Tolerances) -> Result<LorenzMap> {
    let (p, q) = (step.c_interval.lo, step.c_interval.hi);
    let w = q - p;
    let alpha = map.alpha();
    let c_new = (map.c() - p) / w;
    let wa = w.powf(alpha);
    let mut branches = Vec::with_capacity(2);
    for side in Side::both() {
        let word = step.word(side);
        let len = match side {
            Side::Minus => c_new.powf(alpha),
            Side::Plus => (1.0 - c_new).powf(alpha),
        };
        // |x - c| = w t'^{1/α} in the old coordinates, so the old t is w^α t'.
        let g = |t: f64| -> Result<f64> {
            let y0 = map.eta(side).eval(wa * t);
            Ok((apply_word(map, &word[1..], y0) - p) / w)
        };
        let mut rep = interpolate_adaptive(g, len, tol.fit_degree, tol.max_fit_degree, tol.fit_residual)?;
        let target = match side {
            Side::Minus => 0.0,
            Side::Plus => 1.0,
        };
        pin_right_end(&mut rep, target);
        branches.push(rep);
    }
    let plus = branches.pop().unwrap();
    let minus = branches.pop().unwrap();
    LorenzMap::with_tolerances(alpha, c_new, minus, plus, tol)
}

/// Adds a multiple of `(1 + s)/2` so the value at `t = T` becomes `target`
/// while the value at `t = 0` is unchanged.
fn pin_right_end(rep: &mut BranchRep, target: f64) {
    let e = rep.eval(rep.domain_len) - target;
    rep.coeffs[0] -= 0.5 * e;
    rep.coeffs[1] -= 0.5 * e;
}

/// One level of a prerenormalization, in both local and original coordinates.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Level {
    /// `R^{k-1} f`.
    pub map: LorenzMap,
    /// Step of `R^{k-1} f` in its own coordinates.
    pub local: RenormalizationStep,
    /// Original coordinate of a point `y` of `R^{k-1} f` is `offset + scale * y`.
    pub offset: f64,
    pub scale: f64,
    /// `C_k` and the `f`-orbits of `C_k±` up to their first return, original coordinates.
    pub step: RenormalizationStep,
    /// Branch words of `pR^k f_-` and `pR^k f_+` as compositions of `f_±`.
    pub word_minus: Vec<Side>,
    pub word_plus: Vec<Side>,
}

impl Level {
    pub fn word(&self, side: Side) -> &[Side] {
        match side {
            Side::Minus => &self.word_minus,
            Side::Plus => &self.word_plus,
        }
    }

    pub fn c_interval(&self) -> Interval {
        self.step.c_interval
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Prerenormalization {
    pub base: LorenzMap,
    /// `levels[k - 1]` describes `C_k`.
    pub levels: Vec<Level>,
    /// `R^n f`.
    pub renormalized: LorenzMap,
}

impl Prerenormalization {
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, k: usize) -> &Level {
        &self.levels[k - 1]
    }

    /// `R^k f` for `0 <= k <= depth`.
    pub fn renormalization(&self, k: usize) -> &LorenzMap {
        if k == 0 {
            &self.base
        } else if k == self.depth() {
            &self.renormalized
        } else {
            &self.levels[k].map
        }
    }

    pub fn thetas(&self) -> Vec<LorenzPermutation> {
        self.levels.iter().map(|l| l.local.theta.clone()).collect()
    }
}

/// Renormalizes `n` times. Fails with [`Error::Depth`] when some `R^k f`,
/// `k < n`, has no renormalization with return times up to `max_time`.
pub fn prerenormalize(map: &LorenzMap, n: usize, max_time: usize) -> Result<Prerenormalization> {
    let tol = Tolerances::default();
    let mut levels: Vec<Level> = Vec::with_capacity(n);
    let mut cur = map.clone();
    let (mut offset, mut scale) = (0.0, 1.0);
    let mut words = [vec![Side::Minus], vec![Side::Plus]];
    for k in 0..n {
        let local = match find_renormalization_with(&cur, max_time, &tol) {
            Ok(Some(s)) => s,
            Ok(None) | Err(Error::Trivial(_)) => {
                return Err(Error::Depth {
                    achieved: k,
                    requested: n,
                })
            }
            Err(e) => return Err(e),
        };
        let expand = |side: Side| -> Vec<Side> {
            local
                .word(side)
                .iter()
                .flat_map(|&l| words[(l == Side::Plus) as usize].iter().copied())
                .collect()
        };
        let new_words = [expand(Side::Minus), expand(Side::Plus)];
        let mut big_c = local.c_interval.unscale(offset, scale);
        big_c.lo = polish_periodic(map, &new_words[0], big_c.lo);
        big_c.hi = polish_periodic(map, &new_words[1], big_c.hi);
        let c = map.c();
        let mut orbits = Vec::with_capacity(2);
        let mut thetas = Vec::with_capacity(2);
        for side in Side::both() {
            let w = &new_words[(side == Side::Plus) as usize];
            let half = match side {
                Side::Minus => Interval::new(big_c.lo, c),
                Side::Plus => Interval::new(c, big_c.hi),
            };
            let orbit = interval_orbit(map, half, Some(w), w.len(), tol.equality)?;
            let ivs: Vec<Interval> = std::iter::once(half).chain(orbit[..w.len() - 1].iter().copied()).collect();
            thetas.push(extract_permutation(&ivs)?);
            orbits.push(orbit);
        }
        let theta_plus = thetas.pop().unwrap();
        let theta_minus = thetas.pop().unwrap();
        let orbit_plus = orbits.pop().unwrap();
        let orbit_minus = orbits.pop().unwrap();
        let step = RenormalizationStep {
            m_minus: new_words[0].len(),
            m_plus: new_words[1].len(),
            c_interval: big_c,
            orbit_minus,
            orbit_plus,
            theta: LorenzPermutation::new(theta_minus, theta_plus)?,
        };
        let next = renormalize_with(&cur, &local, &tol)?;
        levels.push(Level {
            map: cur,
            local: local.clone(),
            offset,
            scale,
            step,
            word_minus: new_words[0].clone(),
            word_plus: new_words[1].clone(),
        });
        offset += scale * local.c_interval.lo;
        scale *= local.c_interval.len();
        words = new_words;
        cur = next;
    }
    Ok(Prerenormalization {
        base: map.clone(),
        levels,
        renormalized: cur,
    })
}

/// Newton refinement of a repelling periodic point; keeps `x0` if Newton
/// does not improve the residual.
fn polish_periodic(map: &LorenzMap, word: &[Side], x0: f64) -> f64 {
    let mut x = x0;
    let mut res = (apply_word(map, word, x) - x).abs();
    for _ in 0..8 {
        let (y, d) = apply_word_derivative(map, word, x);
        if !(d - 1.0).is_normal() {
            break;
        }
        let xn = x - (y - x) / (d - 1.0);
        let rn = (apply_word(map, word, xn) - xn).abs();
        if !(rn < res) {
            break;
        }
        x = xn;
        res = rn;
    }
    x
}

/// `R f`, or `None` when `f` is not renormalizable with return times up to `max_time`.
pub fn renormalization_operator(map: &LorenzMap, max_time: usize) -> Result<Option<(RenormalizationStep, LorenzMap)>> {
    match find_renormalization(map, max_time)? {
        Some(step) => {
            let r = renormalize(map, &step)?;
            Ok(Some((step, r)))
        }
        None => Ok(None),
    }
}

/// Renormalizability class of each point of a parameter grid; see
/// [`find_renormalization`].
pub fn scan_standard_family(us: &[f64], vs: &[f64], c: f64, alpha: f64, max_time: usize) -> Vec<(f64, f64, Option<RenormalizationStep>)> {
    let pts: Vec<(f64, f64)> = us.iter().flat_map(|&u| vs.iter().map(move |&v| (u, v))).collect();
    pts.par_iter()
        .map(|&(u, v)| {
            let step = crate::map::standard_family(u, v, c, alpha)
                .ok()
                .and_then(|m| find_renormalization(&m, max_time).ok().flatten());
            (u, v, step)
        })
        .collect()
}
