//! Nested interval families attached to a prerenormalization.
//!
//! At level `n`, `L_n±` is the maximal interval containing `C_n±` on which
//! the first-return branch `pR^n f_±` (a fixed composition of `f_±`) is a
//! homeomorphism. `S_n±` is the interval of the `pR^{n-1} f`-orbit of `C_n±`
//! on the far side of `c` closest to `c`, and `Q_n±` is the hull of `S_n±`
//! and `pR^n f_±(L_n±)`. Orbits `O_n±` and their thickenings by `Q_n±` cover
//! `(0, 1)` with bounded multiplicity.

use serde::{Deserialize, Serialize};

use crate::engine::{apply_word, Prerenormalization};
use crate::map::{LorenzMap, Side};
use crate::{Error, Interval, Result};

const BISECT_TOL: f64 = 1e-13;
const CONTAIN_TOL: f64 = 1e-12;
/// Members sharing an endpoint with a `Q`-orbit interval up to rounding of
/// the pulled-back endpoints are not in its interior.
const INTERIOR_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelIntervals {
    pub level: usize,
    pub c_interval: Interval,
    pub c_minus: Interval,
    pub c_plus: Interval,
    /// Closures of the open intervals `L_n±`.
    pub l_minus: Interval,
    pub l_plus: Interval,
    /// `pR^n f_±(L_n±)`.
    pub image_minus: Interval,
    pub image_plus: Interval,
    /// Component of `image \ L` with `c` on its boundary, and the other one.
    pub a_minus: Interval,
    pub b_minus: Interval,
    pub a_plus: Interval,
    pub b_plus: Interval,
    pub s_minus: Interval,
    pub s_plus: Interval,
    pub q_minus: Interval,
    pub q_plus: Interval,
}

impl LevelIntervals {
    pub fn l(&self, side: Side) -> Interval {
        match side {
            Side::Minus => self.l_minus,
            Side::Plus => self.l_plus,
        }
    }

    pub fn c_half(&self, side: Side) -> Interval {
        match side {
            Side::Minus => self.c_minus,
            Side::Plus => self.c_plus,
        }
    }

    pub fn image(&self, side: Side) -> Interval {
        match side {
            Side::Minus => self.image_minus,
            Side::Plus => self.image_plus,
        }
    }

    pub fn q(&self, side: Side) -> Interval {
        match side {
            Side::Minus => self.q_minus,
            Side::Plus => self.q_plus,
        }
    }

    /// `L_n = L_n- ∪ {c} ∪ L_n+`.
    pub fn l_union(&self) -> Interval {
        Interval::new(self.l_minus.lo, self.l_plus.hi)
    }

    pub fn as_named(&self) -> Vec<(&'static str, Interval)> {
        vec![
            ("C", self.c_interval),
            ("C_minus", self.c_minus),
            ("C_plus", self.c_plus),
            ("L_minus", self.l_minus),
            ("L_plus", self.l_plus),
            ("image_minus", self.image_minus),
            ("image_plus", self.image_plus),
            ("A_minus", self.a_minus),
            ("B_minus", self.b_minus),
            ("A_plus", self.a_plus),
            ("B_plus", self.b_plus),
            ("S_minus", self.s_minus),
            ("S_plus", self.s_plus),
            ("Q_minus", self.q_minus),
            ("Q_plus", self.q_plus),
        ]
    }
}

fn check_level(pre: &Prerenormalization, n: usize) -> Result<()> {
    if n == 0 || n > pre.depth() {
        return Err(Error::Domain(format!("level {n} outside 1..={}", pre.depth())));
    }
    Ok(())
}

/// Every intermediate image of `x` under `word` stays strictly on the side
/// of `c` given by the next letter.
fn follows_word(map: &LorenzMap, word: &[Side], x: f64) -> bool {
    let c = map.c();
    let mut y = x;
    for (j, &s) in word.iter().enumerate() {
        if j > 0 {
            let ok = match s {
                Side::Minus => y < c,
                Side::Plus => y > c,
            };
            if !ok {
                return false;
            }
        }
        y = map.branch(s, y);
    }
    true
}

/// Far endpoint of `L_n±`: bisection between the far end of `C_n±` and the
/// end of the branch domain.
fn homeomorphy_end(map: &LorenzMap, word: &[Side], start: f64, limit: f64) -> f64 {
    if follows_word(map, word, limit) {
        return limit;
    }
    let (mut good, mut bad) = (start, limit);
    while (bad - good).abs() > BISECT_TOL {
        let mid = 0.5 * (good + bad);
        if mid == good || mid == bad {
            break;
        }
        if follows_word(map, word, mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    good
}

/// Orbit of `J ⊂ C_level` under `pR^{level-1} f` up to (not including) its
/// first return to `C_level`, as `f`-images lying in `C_{level-1}`. The
/// starting interval `J` itself is included when `include_start`.
fn orbit_before_return(pre: &Prerenormalization, start: Interval, word: &[Side], level: usize, include_start: bool) -> Vec<Interval> {
    let map = &pre.base;
    let outer = if level <= 1 { Interval::new(0.0, 1.0) } else { pre.level(level - 1).c_interval() };
    let inner = pre.level(level).c_interval();
    let mut out = Vec::new();
    if include_start {
        out.push(start);
    }
    let mut cur = start;
    for &s in word {
        cur = Interval::new(map.branch(s, cur.lo), map.branch(s, cur.hi));
        if inner.contains_interval(&cur, CONTAIN_TOL) {
            break;
        }
        if outer.contains_interval(&cur, CONTAIN_TOL) {
            out.push(cur);
        }
    }
    out
}

/// Intervals at level `n`. Needs `n <= depth`; `S_n±` uses the orbit of
/// `C_n±` under `pR^{n-1} f`.
pub fn level_intervals(pre: &Prerenormalization, n: usize) -> Result<LevelIntervals> {
    check_level(pre, n)?;
    let map = &pre.base;
    let c = map.c();
    let lev = pre.level(n);
    let big_c = lev.c_interval();
    let c_minus = Interval::new(big_c.lo, c);
    let c_plus = Interval::new(c, big_c.hi);
    let wm = lev.word(Side::Minus);
    let wp = lev.word(Side::Plus);
    let l_lo = homeomorphy_end(map, wm, big_c.lo, 0.0);
    let l_hi = homeomorphy_end(map, wp, big_c.hi, 1.0);
    let l_minus = Interval::new(l_lo, c);
    let l_plus = Interval::new(c, l_hi);
    let image_minus = Interval::new(apply_word(map, wm, l_lo), apply_word(map, wm, c));
    let image_plus = Interval::new(apply_word(map, wp, c), apply_word(map, wp, l_hi));
    let a_minus = Interval::new(c, image_minus.hi);
    let b_minus = Interval::new(image_minus.lo, l_lo);
    let a_plus = Interval::new(image_plus.lo, c);
    let b_plus = Interval::new(l_hi, image_plus.hi);

    let orbit_m = orbit_before_return(pre, c_minus, wm, n, false);
    let orbit_p = orbit_before_return(pre, c_plus, wp, n, false);
    let s_minus = orbit_m
        .iter()
        .filter(|iv| iv.lo >= c - CONTAIN_TOL)
        .min_by(|a, b| a.lo.partial_cmp(&b.lo).unwrap())
        .copied()
        .ok_or_else(|| Error::Orbit(format!("no orbit interval of C_{n}- right of c")))?;
    let s_plus = orbit_p
        .iter()
        .filter(|iv| iv.hi <= c + CONTAIN_TOL)
        .max_by(|a, b| a.hi.partial_cmp(&b.hi).unwrap())
        .copied()
        .ok_or_else(|| Error::Orbit(format!("no orbit interval of C_{n}+ left of c")))?;
    Ok(LevelIntervals {
        level: n,
        c_interval: big_c,
        c_minus,
        c_plus,
        l_minus,
        l_plus,
        image_minus,
        image_plus,
        a_minus,
        b_minus,
        a_plus,
        b_plus,
        s_minus,
        s_plus,
        q_minus: s_minus.hull(&image_minus),
        q_plus: s_plus.hull(&image_plus),
    })
}

/// Result of one structural check: `holds` and the smallest slack seen
/// (negative when violated).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub level: usize,
    pub holds: bool,
    pub min_margin: f64,
    pub failures: Vec<String>,
}

impl CheckReport {
    fn new(level: usize) -> Self {
        CheckReport {
            level,
            holds: true,
            min_margin: f64::INFINITY,
            failures: Vec::new(),
        }
    }

    fn margin(&mut self, what: &str, m: f64) {
        self.min_margin = self.min_margin.min(m);
        if !(m > 0.0) {
            self.holds = false;
            self.failures.push(format!("{what}: margin {m:e}"));
        }
    }

    fn require(&mut self, what: &str, ok: bool) {
        if !ok {
            self.holds = false;
            self.failures.push(what.to_string());
        }
    }
}

fn any_inside(ivs: &[Interval], target: &Interval) -> bool {
    ivs.iter().any(|iv| target.contains_interval(iv, CONTAIN_TOL))
}

/// For an `(n+1)`-times renormalizable map: `L_n± ⋐ pR^n f_±(L_n±)`,
/// `C_{n+1,∓} ⊂ A_n±`, and `B_n±` contains an interval of the
/// `pR^{n-1} f`-orbit of `C_{n+1,∓}` before its return to `C_n`.
pub fn check_image_collars(pre: &Prerenormalization, n: usize) -> Result<CheckReport> {
    check_level(pre, n + 1)?;
    let li = level_intervals(pre, n)?;
    let next = pre.level(n + 1);
    let c = pre.base.c();
    let mut r = CheckReport::new(n);
    r.margin("L_n- inside its image (left)", li.l_minus.lo - li.image_minus.lo);
    r.margin("L_n- inside its image (at c)", li.image_minus.hi - c);
    r.margin("L_n+ inside its image (at c)", c - li.image_plus.lo);
    r.margin("L_n+ inside its image (right)", li.image_plus.hi - li.l_plus.hi);
    r.margin("C_{n+1}+ inside A_n-", li.a_minus.hi - next.c_interval().hi);
    r.margin("C_{n+1}- inside A_n+", next.c_interval().lo - li.a_plus.lo);
    let c1m = Interval::new(next.c_interval().lo, c);
    let c1p = Interval::new(c, next.c_interval().hi);
    let om = orbit_before_return(pre, c1m, next.word(Side::Minus), n, false);
    let op = orbit_before_return(pre, c1p, next.word(Side::Plus), n, false);
    r.require("B_n+ holds an orbit interval of C_{n+1}-", any_inside(&om, &li.b_plus));
    r.require("B_n- holds an orbit interval of C_{n+1}+", any_inside(&op, &li.b_minus));
    Ok(r)
}

/// `L_n- ∪ C_n+ ⋐ Q_n-`, `L_n+ ∪ C_n- ⋐ Q_n+`, and each component of
/// `Q_n± \ (L_n± ∪ C_n∓)` holds an interval of the `pR^{n-1} f`-orbits of
/// `C_{n+1,∓}` or `C_n±`.
pub fn check_q_neighborhoods(pre: &Prerenormalization, n: usize) -> Result<CheckReport> {
    check_level(pre, n + 1)?;
    let li = level_intervals(pre, n)?;
    let lev = pre.level(n);
    let next = pre.level(n + 1);
    let c = pre.base.c();
    let mut r = CheckReport::new(n);
    let core_m = Interval::new(li.l_minus.lo, li.c_plus.hi);
    let core_p = Interval::new(li.c_minus.lo, li.l_plus.hi);
    r.margin("Q_n- left collar", core_m.lo - li.q_minus.lo);
    r.margin("Q_n- right collar", li.q_minus.hi - core_m.hi);
    r.margin("Q_n+ left collar", core_p.lo - li.q_plus.lo);
    r.margin("Q_n+ right collar", li.q_plus.hi - core_p.hi);
    let c1m = Interval::new(next.c_interval().lo, c);
    let c1p = Interval::new(c, next.c_interval().hi);
    let mut cands_m = orbit_before_return(pre, c1p, next.word(Side::Plus), n, true);
    cands_m.extend(orbit_before_return(pre, li.c_minus, lev.word(Side::Minus), n, true));
    let mut cands_p = orbit_before_return(pre, c1m, next.word(Side::Minus), n, true);
    cands_p.extend(orbit_before_return(pre, li.c_plus, lev.word(Side::Plus), n, true));
    for (name, q, core, cands) in [("Q_n-", li.q_minus, core_m, &cands_m), ("Q_n+", li.q_plus, core_p, &cands_p)] {
        let left = Interval::new(q.lo, core.lo);
        let right = Interval::new(core.hi, q.hi);
        r.require(&format!("{name} left component holds an orbit interval"), any_inside(cands, &left));
        r.require(&format!("{name} right component holds an orbit interval"), any_inside(cands, &right));
    }
    Ok(r)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelOrbits {
    pub level: usize,
    /// `f^j(C_n±)`, `j = 1..=m`.
    pub o_minus: Vec<Interval>,
    pub o_plus: Vec<Interval>,
    /// `f^{j-1}(f ∘ (pR^n f)^{-1}(Q_n±))`, `j = 1..=m`; the last one is `Q_n±`.
    pub q_minus: Vec<Interval>,
    pub q_plus: Vec<Interval>,
}

impl LevelOrbits {
    pub fn o(&self, side: Side) -> &[Interval] {
        match side {
            Side::Minus => &self.o_minus,
            Side::Plus => &self.o_plus,
        }
    }

    pub fn q(&self, side: Side) -> &[Interval] {
        match side {
            Side::Minus => &self.q_minus,
            Side::Plus => &self.q_plus,
        }
    }
}

fn inverse_branch_real(map: &LorenzMap, side: Side, y: f64) -> Result<f64> {
    let t = map
        .eta(side)
        .inverse_real(y)
        .ok_or_else(|| Error::Domain(format!("{y} is outside the image of f_{side:?}")))?;
    let d = t.powf(1.0 / map.alpha());
    Ok(map.c() + side.sign() * d)
}

pub fn compute_orbits(pre: &Prerenormalization, n: usize) -> Result<LevelOrbits> {
    let li = level_intervals(pre, n)?;
    let map = &pre.base;
    let lev = pre.level(n);
    let mut qs = Vec::with_capacity(2);
    for side in Side::both() {
        let w = lev.word(side);
        let q = li.q(side);
        let (mut a, mut b) = (q.lo, q.hi);
        for &s in w[1..].iter().rev() {
            a = inverse_branch_real(map, s, a)?;
            b = inverse_branch_real(map, s, b)?;
        }
        let mut cur = Interval::new(a, b);
        let mut orbit = vec![cur];
        for &s in &w[1..] {
            cur = Interval::new(map.branch(s, cur.lo), map.branch(s, cur.hi));
            orbit.push(cur);
        }
        // Forward images of the pulled-back endpoints reproduce Q up to rounding.
        *orbit.last_mut().unwrap() = q;
        qs.push(orbit);
    }
    let q_plus = qs.pop().unwrap();
    let q_minus = qs.pop().unwrap();
    Ok(LevelOrbits {
        level: n,
        o_minus: lev.step.orbit_minus.clone(),
        o_plus: lev.step.orbit_plus.clone(),
        q_minus,
        q_plus,
    })
}

/// Largest number of open intervals containing one of `samples` evenly
/// spaced points of `(0, 1)`.
pub fn overlap_count(intervals: &[Interval], samples: usize) -> usize {
    let mut events: Vec<(f64, i32)> = Vec::with_capacity(2 * intervals.len());
    for iv in intervals {
        events.push((iv.lo, 1));
        events.push((iv.hi, -1));
    }
    events.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut best = 0usize;
    let mut depth = 0i32;
    let mut e = 0;
    for i in 0..samples {
        let x = (i as f64 + 0.5) / samples as f64;
        // Open intervals: an interval counts at x when lo < x < hi.
        while e < events.len() && events[e].0 < x {
            depth += events[e].1;
            e += 1;
        }
        let mut d = depth;
        let mut k = e;
        while k < events.len() && events[k].0 == x {
            if events[k].1 < 0 {
                d -= 1;
            }
            k += 1;
        }
        best = best.max(d.max(0) as usize);
    }
    best
}

/// Each `Q`-orbit member has its own `O`-member and no other one in its
/// interior, and the `Q`-orbit of each side covers points at most three times.
pub fn check_orbit_covering(orbits: &LevelOrbits, samples: usize) -> CheckReport {
    let mut r = CheckReport::new(orbits.level);
    for side in Side::both() {
        let (o, q) = (orbits.o(side), orbits.q(side));
        for (j, qj) in q.iter().enumerate() {
            let inside: Vec<usize> = o
                .iter()
                .enumerate()
                .filter(|(_, oi)| oi.lo > qj.lo + INTERIOR_TOL && oi.hi < qj.hi - INTERIOR_TOL)
                .map(|(i, _)| i)
                .collect();
            if inside != [j] {
                r.require(&format!("{side:?} Q-orbit member {j} contains O-members {inside:?}"), false);
            }
        }
        let k = overlap_count(q, samples);
        r.min_margin = r.min_margin.min(3.0 - k as f64 + 1.0);
        r.require(&format!("{side:?} Q-orbit multiplicity {k} exceeds 3"), k <= 3);
    }
    r
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LengthStatistics {
    pub levels: Vec<usize>,
    /// Largest `|O|` member per level (both sides).
    pub max_o: Vec<f64>,
    pub max_q: Vec<f64>,
    /// `exp` of the least-squares slope of `log max_o` against the level.
    pub o_decay_rate: f64,
    pub q_decay_rate: f64,
}

fn decay_rate(levels: &[usize], values: &[f64]) -> f64 {
    let n = levels.len() as f64;
    let xs: Vec<f64> = levels.iter().map(|&l| l as f64).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    (sxy / sxx).exp()
}

pub fn length_statistics(pre: &Prerenormalization, levels: &[usize]) -> Result<LengthStatistics> {
    let mut max_o = Vec::new();
    let mut max_q = Vec::new();
    for &n in levels {
        let orb = compute_orbits(pre, n)?;
        let longest = |v: &[Interval], w: &[Interval]| v.iter().chain(w).map(|i| i.len()).fold(0.0, f64::max);
        max_o.push(longest(&orb.o_minus, &orb.o_plus));
        max_q.push(longest(&orb.q_minus, &orb.q_plus));
    }
    Ok(LengthStatistics {
        levels: levels.to_vec(),
        o_decay_rate: decay_rate(levels, &max_o),
        q_decay_rate: decay_rate(levels, &max_q),
        max_o,
        max_q,
    })
}

/// Ratios `|I| / |J|` for `I` in the orbits of `C_1±` and `C_2±` before
/// their first return to `C_1`, `C_2`, and `J ∈ {[0, c], [c, 1]}` the branch
/// domain containing `I`. Returns `(min, max)`.
pub fn collar_ratios(pre: &Prerenormalization) -> Result<(f64, f64)> {
    check_level(pre, 2)?;
    let c = pre.base.c();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for k in 1..=2 {
        let lev = pre.level(k);
        for side in Side::both() {
            let half = lev.step.half(side, c);
            let orbit = lev.step.orbit(side);
            for iv in std::iter::once(&half).chain(orbit[..orbit.len() - 1].iter()) {
                let j = if iv.hi <= c + CONTAIN_TOL { c } else { 1.0 - c };
                let r = iv.len() / j;
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlap_of_nested_and_disjoint() {
        let ivs = [Interval::new(0.1, 0.5), Interval::new(0.2, 0.3), Interval::new(0.25, 0.4), Interval::new(0.6, 0.7)];
        assert_eq!(overlap_count(&ivs, 100_000), 3);
        assert_eq!(overlap_count(&ivs[3..], 1000), 1);
        assert_eq!(overlap_count(&[], 10), 0);
    }

    #[test]
    fn decay_of_exact_geometric_sequence() {
        let r = decay_rate(&[1, 2, 3, 4], &[0.5, 0.25, 0.125, 0.0625]);
        assert!((r - 0.5).abs() < 1e-12);
    }
}
