//! Realizability of Lorenz permutations by piecewise-linear Lorenz maps.
//!
//! For each admissible interleaving of the orbit intervals of `C_-` and `C_+`
//! we lay the intervals out on an integer grid, join them by a piecewise-linear
//! Lorenz map with rational breakpoints, and then recompute the
//! renormalization of that map in exact arithmetic (same selection rule as
//! [`crate::engine::find_renormalization`]).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::LorenzPermutation;
use crate::map::Side;

type Q = BigRational;

/// Largest return time the oracle attempts.
pub const MAX_RETURN_TIME: usize = 8;
const ARRANGEMENT_BUDGET: usize = 4096;
const PIECE_BUDGET: usize = 200_000;
/// Heights of the gap bends relative to the chord, tried in turn.
const BENDS: [(i64, i64); 4] = [(3, 4), (2, 3), (5, 7), (7, 11)];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlWitness {
    pub c: f64,
    /// Breakpoints `(x, f(x))` of `f_-` on `[0, c]` and of `f_+` on `[c, 1]`.
    pub minus: Vec<(f64, f64)>,
    pub plus: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Realizability {
    Realized(PlWitness),
    NotRealized,
    Inconclusive(String),
}

impl Realizability {
    pub fn is_realized(&self) -> bool {
        matches!(self, Realizability::Realized(_))
    }
}

fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

fn to_f64(x: &Q) -> f64 {
    x.numer().to_f64().unwrap() / x.denom().to_f64().unwrap()
}

#[derive(Clone, Debug)]
struct Pl {
    c: Q,
    minus: Vec<(Q, Q)>,
    plus: Vec<(Q, Q)>,
}

#[derive(Clone, Debug)]
struct Piece {
    lo: Q,
    hi: Q,
    a: Q,
    b: Q,
}

struct BudgetExceeded;

impl Pl {
    fn branch(&self, s: Side) -> &[(Q, Q)] {
        match s {
            Side::Minus => &self.minus,
            Side::Plus => &self.plus,
        }
    }

    fn segment(&self, s: Side, lo: &Q, hi: &Q) -> (Q, Q) {
        let bp = self.branch(s);
        let j = bp
            .windows(2)
            .position(|w| &w[0].0 <= lo && hi <= &w[1].0)
            .expect("piece must lie in one segment");
        let (x0, y0) = &bp[j];
        let (x1, y1) = &bp[j + 1];
        let slope = (y1 - y0) / (x1 - x0);
        let icpt = y0 - &slope * x0;
        (slope, icpt)
    }

    fn eval(&self, s: Side, x: &Q) -> Q {
        let (a, b) = self.segment(s, x, x);
        a * x + b
    }

    fn side_of_interval(&self, lo: &Q, hi: &Q) -> Option<Side> {
        if hi <= &self.c {
            Some(Side::Minus)
        } else if lo >= &self.c {
            Some(Side::Plus)
        } else {
            None
        }
    }

    fn breakpoints(&self) -> Vec<Q> {
        let mut v: Vec<Q> = self.minus.iter().chain(self.plus.iter()).map(|(x, _)| x.clone()).collect();
        v.sort();
        v.dedup();
        v
    }

    fn u(&self) -> Q {
        self.minus.last().unwrap().1.clone()
    }

    fn v(&self) -> Q {
        self.plus[0].1.clone()
    }

    /// Pieces of `f^k` on `[lo, hi]` for `k = 1..=steps`, split so that each
    /// is affine and continuous.
    fn iterate_pieces(&self, lo: Q, hi: Q, steps: usize, budget: &mut usize) -> Result<Vec<Vec<Piece>>, BudgetExceeded> {
        let bps = self.breakpoints();
        let mut cur = vec![Piece {
            lo,
            hi,
            a: Q::one(),
            b: Q::zero(),
        }];
        let mut out = Vec::with_capacity(steps);
        for _ in 0..steps {
            let mut next = Vec::new();
            for pc in &cur {
                let ylo = &pc.a * &pc.lo + &pc.b;
                let yhi = &pc.a * &pc.hi + &pc.b;
                let mut cuts: Vec<(Q, Q)> = vec![(pc.lo.clone(), ylo.clone())];
                for beta in bps.iter().filter(|b| *b > &ylo && *b < &yhi) {
                    cuts.push(((beta - &pc.b) / &pc.a, beta.clone()));
                }
                cuts.push((pc.hi.clone(), yhi.clone()));
                for w in cuts.windows(2) {
                    let (x0, y0) = &w[0];
                    let (x1, y1) = &w[1];
                    let side = self.side_of_interval(y0, y1).expect("split at c");
                    let (s, t) = self.segment(side, y0, y1);
                    next.push(Piece {
                        lo: x0.clone(),
                        hi: x1.clone(),
                        a: &s * &pc.a,
                        b: &s * &pc.b + t,
                    });
                }
            }
            if next.len() > *budget {
                return Err(BudgetExceeded);
            }
            *budget -= next.len();
            out.push(next.clone());
            cur = next;
        }
        Ok(out)
    }

    /// `(period, x)` for fixed points of `f^k`, `2 <= k <= max_time`, in `[lo, hi]`.
    fn periodic_points(&self, lo: Q, hi: Q, max_time: usize, budget: &mut usize) -> Result<Vec<(usize, Q)>, String> {
        let pieces = self
            .iterate_pieces(lo.clone(), hi.clone(), max_time, budget)
            .map_err(|_| "piece budget exceeded".to_string())?;
        let mut out: Vec<(usize, Q)> = Vec::new();
        for (k, ps) in pieces.iter().enumerate().skip(1) {
            for pc in ps {
                if pc.a.is_one() {
                    if pc.b.is_zero() {
                        return Err("f^k is the identity on a piece".into());
                    }
                    continue;
                }
                let x = &pc.b / (Q::one() - &pc.a);
                if x > lo && x < hi && x >= pc.lo && x <= pc.hi && !out.iter().any(|(kk, y)| *kk == k + 1 && *y == x) {
                    out.push((k + 1, x));
                }
            }
        }
        Ok(out)
    }

    fn orbit(&self, lo: Q, hi: Q, steps: usize) -> Option<Vec<(Q, Q)>> {
        let (mut a, mut b) = (lo, hi);
        let mut out = Vec::with_capacity(steps);
        for _ in 0..steps {
            let s = self.side_of_interval(&a, &b)?;
            a = self.eval(s, &a);
            b = self.eval(s, &b);
            out.push((a.clone(), b.clone()));
        }
        Some(out)
    }

    /// Exact version of the engine's candidate validation. Returns `θ`.
    fn validate(&self, p: &Q, qq: &Q, mm: usize, mp: usize, budget: &mut usize) -> Result<Option<LorenzPermutation>, String> {
        let c = &self.c;
        if !(&self.v() < p && p < c && c < qq && qq < &self.u()) {
            return Ok(None);
        }
        let mut thetas = Vec::new();
        for (side, m) in [(Side::Minus, mm), (Side::Plus, mp)] {
            let (lo, hi) = match side {
                Side::Minus => (p.clone(), c.clone()),
                Side::Plus => (c.clone(), qq.clone()),
            };
            let Some(orb) = self.orbit(lo.clone(), hi.clone(), m) else {
                return Ok(None);
            };
            if !orb[..m - 1].iter().all(|(a, b)| b <= p || a >= qq) {
                return Ok(None);
            }
            let (ra, rb) = &orb[m - 1];
            let ok = match side {
                Side::Minus => ra == p && rb >= c && rb <= qq,
                Side::Plus => rb == qq && ra <= c && ra >= p,
            };
            if !ok {
                return Ok(None);
            }
            let pieces = self
                .iterate_pieces(lo.clone(), hi.clone(), m, budget)
                .map_err(|_| "piece budget exceeded".to_string())?;
            // f^m - id must keep one strict sign on the open half.
            let mut sign = 0i8;
            for pc in pieces.last().unwrap() {
                for x in [&pc.lo, &pc.hi] {
                    let g = &pc.a * x + &pc.b - x;
                    let s = if g.is_zero() { 0 } else if g > Q::zero() { 1 } else { -1 };
                    let interior = x > &lo && x < &hi;
                    if interior && s == 0 {
                        return Ok(None);
                    }
                    if s != 0 {
                        if sign == 0 {
                            sign = s;
                        } else if sign != s {
                            return Ok(None);
                        }
                    }
                }
            }
            let mut ivs = vec![(lo, hi)];
            ivs.extend(orb[..m - 1].iter().cloned());
            let mut idx: Vec<usize> = (0..m).collect();
            idx.sort_by(|&i, &j| ivs[i].0.cmp(&ivs[j].0));
            let mut rank = vec![0; m];
            for (r, &i) in idx.iter().enumerate() {
                rank[i] = r;
            }
            thetas.push(rank);
        }
        let tp = thetas.pop().unwrap();
        let tm = thetas.pop().unwrap();
        Ok(LorenzPermutation::new(tm, tp).ok())
    }

    /// Combinatorics of the renormalization the engine would select.
    fn renormalization_theta(&self, max_time: usize) -> Result<Option<LorenzPermutation>, String> {
        let mut budget = PIECE_BUDGET;
        let ps = self.periodic_points(self.v(), self.c.clone(), max_time, &mut budget)?;
        let qs = self.periodic_points(self.c.clone(), self.u(), max_time, &mut budget)?;
        for sum in 4..=2 * max_time {
            let mut cands: Vec<(&Q, &Q, usize, usize)> = Vec::new();
            for (kp, p) in &ps {
                for (kq, qq) in &qs {
                    if kp + kq == sum {
                        cands.push((p, qq, *kp, *kq));
                    }
                }
            }
            cands.sort_by_key(|b| std::cmp::Reverse(b.1 - b.0));
            for (p, qq, mm, mp) in cands {
                if let Some(t) = self.validate(p, qq, mm, mp, &mut budget)? {
                    return Ok(Some(t));
                }
            }
        }
        Ok(None)
    }

    fn witness(&self) -> PlWitness {
        let conv = |v: &[(Q, Q)]| v.iter().map(|(x, y)| (to_f64(x), to_f64(y))).collect();
        PlWitness {
            c: to_f64(&self.c),
            minus: conv(&self.minus),
            plus: conv(&self.plus),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Item {
    M(usize),
    P(usize),
}

/// All merges of `a` and `b` preserving the order inside each, in which every
/// item with a partner is immediately followed by it.
fn interleavings(a: &[Item], b: &[Item], partner: &dyn Fn(Item) -> Option<Item>, limit: usize) -> Vec<Vec<Item>> {
    struct Ctx<'a> {
        partner: &'a dyn Fn(Item) -> Option<Item>,
        paired: Vec<Item>,
        limit: usize,
        out: Vec<Vec<Item>>,
    }
    fn rec(a: &[Item], b: &[Item], cur: &mut Vec<Item>, ctx: &mut Ctx) {
        if ctx.out.len() >= ctx.limit {
            return;
        }
        let want = cur.last().and_then(|&it| (ctx.partner)(it));
        if a.is_empty() && b.is_empty() {
            if want.is_none() {
                ctx.out.push(cur.clone());
            }
            return;
        }
        for (from_a, list) in [(true, a), (false, b)] {
            let Some((&h, t)) = list.split_first() else {
                continue;
            };
            let allowed = match want {
                Some(w) => h == w,
                None => !ctx.paired.contains(&h),
            };
            if !allowed {
                continue;
            }
            cur.push(h);
            if from_a {
                rec(t, b, cur, ctx);
            } else {
                rec(a, t, cur, ctx);
            }
            cur.pop();
        }
    }
    let paired: Vec<Item> = a.iter().chain(b).filter_map(|&it| partner(it)).collect();
    let mut ctx = Ctx {
        partner,
        paired,
        limit,
        out: Vec::new(),
    };
    rec(a, b, &mut Vec::new(), &mut ctx);
    ctx.out
}

/// Inserts a breakpoint in the middle of every gap segment, placed above the
/// chord. Gap cycles then compose to maps strictly above the identity inside
/// the gap, so no iterate is the identity on a piece.
fn bend_gaps(anchors: Vec<(Q, Q, bool)>, bend: &Q) -> Vec<(Q, Q)> {
    let mut out = Vec::with_capacity(2 * anchors.len());
    for w in anchors.windows(2) {
        let (x0, y0, gap) = &w[0];
        out.push((x0.clone(), y0.clone()));
        if *gap {
            let (x1, y1, _) = &w[1];
            let xm = (x0 + x1) / q(2);
            let ym = y0 + (y1 - y0) * bend;
            out.push((xm, ym));
        }
    }
    let (x, y, _) = anchors.last().unwrap();
    out.push((x.clone(), y.clone()));
    out
}

/// Builds the piecewise-linear candidate for one layout, or `None` when the
/// layout forces a non-monotone branch.
///
/// Orbit intervals are disjoint within each orbit. Across the two orbits,
/// `f^{m_- - j}(C_-)` and `f^{m_+ - j}(C_+)` overlap for `j = 1..=shared`
/// (the returns overlap around `c` and are pulled back by the same branch);
/// such pairs are laid out as one block with the minus interval on the left.
fn build(
    theta: &LorenzPermutation,
    left: &[Item],
    right: &[Item],
    partner: &dyn Fn(Item) -> Option<Item>,
    full_return: bool,
    bend: &Q,
) -> Option<Pl> {
    let (mm, mp) = (theta.m_minus(), theta.m_plus());
    let mut pos: Vec<(Item, i64)> = Vec::new();
    let mut x = 1i64;
    let place = |items: &[Item], x: &mut i64, pos: &mut Vec<(Item, i64)>| {
        let mut i = 0;
        while i < items.len() {
            pos.push((items[i], *x));
            if partner(items[i]).is_some() {
                pos.push((items[i + 1], *x + 1));
                *x += 4;
                i += 2;
            } else {
                *x += 3;
                i += 1;
            }
        }
    };
    place(left, &mut x, &mut pos);
    let p_units = x;
    pos.push((Item::M(0), x));
    // `C_±` are wider than the other slots so that the first return expands.
    pos.push((Item::P(0), x + 3));
    let c_units = x + 3;
    let q_units = x + 6;
    x += 7;
    place(right, &mut x, &mut pos);
    let total = q(x);
    let at = |u: i64| q(u) / &total;
    let unit = |it: Item| pos.iter().find(|(j, _)| *j == it).unwrap().1;
    let width = |it: Item| if matches!(it, Item::M(0) | Item::P(0)) { 3 } else { 2 };
    let (p, c, qq) = (at(p_units), at(c_units), at(q_units));
    let r_minus = if full_return { qq.clone() } else { at(c_units + 1) };
    let r_plus = if full_return { p.clone() } else { at(c_units - 1) };
    let image = |it: Item| -> (Q, Q) {
        let next = match it {
            Item::M(k) if k + 1 < mm => Item::M(k + 1),
            Item::M(_) => return (p.clone(), r_minus.clone()),
            Item::P(k) if k + 1 < mp => Item::P(k + 1),
            Item::P(_) => return (r_plus.clone(), qq.clone()),
        };
        let u = unit(next);
        (at(u), at(u + width(next)))
    };
    // Anchors `(x, f(x))` of one branch, block by block; `gap` marks the
    // segment to the next block.
    let anchors = |items: &[Item]| -> Vec<(Q, Q, bool)> {
        let mut pts: Vec<(i64, Q, bool)> = Vec::new();
        for &it in items {
            let u = unit(it);
            let (fa, fb) = image(it);
            pts.push((u, fa, false));
            pts.push((u + width(it), fb, true));
        }
        pts.sort_by_key(|(u, _, _)| *u);
        // A segment is a gap unless some orbit interval covers it.
        let n = pts.len();
        for i in 0..n {
            let covered = i + 1 < n && items.iter().any(|&it| unit(it) <= pts[i].0 && pts[i + 1].0 <= unit(it) + width(it));
            pts[i].2 = !covered;
        }
        pts.into_iter().map(|(u, y, g)| (at(u), y, g)).collect()
    };
    let mut minus = vec![(Q::zero(), Q::zero(), true)];
    let left_c: Vec<Item> = left.iter().copied().chain(std::iter::once(Item::M(0))).collect();
    minus.extend(anchors(&left_c));
    minus.last_mut().unwrap().2 = false;
    let right_c: Vec<Item> = std::iter::once(Item::P(0)).chain(right.iter().copied()).collect();
    let mut plus = anchors(&right_c);
    plus.push((Q::one(), Q::one(), false));
    let minus = bend_gaps(minus, bend);
    let plus = bend_gaps(plus, bend);
    let increasing = |bp: &[(Q, Q)]| bp.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1);
    if !increasing(&minus) || !increasing(&plus) {
        return None;
    }
    Some(Pl { c, minus, plus })
}

/// Decides whether some Lorenz map has first renormalization combinatorics
/// `theta`. Return times above [`MAX_RETURN_TIME`] give `Inconclusive`.
pub fn is_lorenz_permutation(theta: &LorenzPermutation) -> Realizability {
    let (tm, tp) = (&theta.theta_minus, &theta.theta_plus);
    let (mm, mp) = (tm.len(), tp.len());
    if mm < 2 || mp < 2 || tm[1] < tm[0] || tp[1] > tp[0] {
        return Realizability::NotRealized;
    }
    if mm > MAX_RETURN_TIME || mp > MAX_RETURN_TIME {
        return Realizability::Inconclusive(format!("return times ({mm}, {mp}) exceed {MAX_RETURN_TIME}"));
    }
    let by_rank = |t: &[usize], mk: fn(usize) -> Item, left: bool| -> Vec<Item> {
        let mut ks: Vec<usize> = (1..t.len()).filter(|&k| (t[k] < t[0]) == left).collect();
        ks.sort_by_key(|&k| t[k]);
        ks.into_iter().map(mk).collect()
    };
    let lm = by_rank(tm, Item::M, true);
    let lp = by_rank(tp, Item::P, true);
    let rm = by_rank(tm, Item::M, false);
    let rp = by_rank(tp, Item::P, false);
    // Overlapping pairs: common suffix of the two itineraries before the return.
    let (side_m, side_p) = theta.left_of_c();
    let mut shared = 0;
    while shared + 1 < mm && shared + 1 < mp && side_m[mm - 1 - shared] == side_p[mp - 1 - shared] {
        shared += 1;
    }
    let partner = move |it: Item| match it {
        Item::M(k) if k >= mm - shared => Some(Item::P(k + mp - mm)),
        _ => None,
    };
    let lefts = interleavings(&lm, &lp, &partner, ARRANGEMENT_BUDGET);
    let rights = interleavings(&rm, &rp, &partner, ARRANGEMENT_BUDGET);
    if lefts.len() * rights.len() > ARRANGEMENT_BUDGET {
        return Realizability::Inconclusive("too many interval arrangements".into());
    }
    let max_time = mm + mp - 2;
    let mut any_layout = false;
    let mut last_issue = String::from("no candidate matched");
    for left in &lefts {
        for right in &rights {
            for full in [false, true] {
                if full && shared > 0 {
                    continue;
                }
                for &(a, b) in &BENDS {
                    let Some(pl) = build(theta, left, right, &partner, full, &(q(a) / q(b))) else {
                        break;
                    };
                    any_layout = true;
                    match pl.renormalization_theta(max_time) {
                        Ok(Some(t)) if &t == theta => return Realizability::Realized(pl.witness()),
                        Ok(_) => break,
                        // A continuum of periodic points: retry with another bend.
                        Err(e) => last_issue = e,
                    }
                }
            }
        }
    }
    if any_layout {
        Realizability::Inconclusive(last_issue)
    } else {
        Realizability::NotRealized
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perm(a: &[usize], b: &[usize]) -> LorenzPermutation {
        LorenzPermutation::new(a.to_vec(), b.to_vec()).unwrap()
    }

    #[test]
    fn simplest_class_is_realized() {
        match is_lorenz_permutation(&perm(&[0, 1], &[1, 0])) {
            Realizability::Realized(w) => {
                assert!(w.c > 0.0 && w.c < 1.0);
                assert_eq!(w.minus[0], (0.0, 0.0));
                assert_eq!(*w.plus.last().unwrap(), (1.0, 1.0));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn order_reversing_class_is_not_realized() {
        assert_eq!(is_lorenz_permutation(&perm(&[0, 1], &[2, 1, 0])), Realizability::NotRealized);
    }

    #[test]
    fn trivial_first_step_is_not_realized() {
        assert_eq!(is_lorenz_permutation(&perm(&[1, 0], &[1, 0])), Realizability::NotRealized);
    }

    #[test]
    fn long_return_times_are_inconclusive() {
        let t: Vec<usize> = (0..9).collect();
        let mut s: Vec<usize> = (0..9).rev().collect();
        s.swap(0, 0);
        assert!(matches!(is_lorenz_permutation(&perm(&t, &s)), Realizability::Inconclusive(_)));
    }

    #[test]
    fn exact_engine_reads_back_the_layout() {
        let theta = perm(&[0, 2, 1], &[1, 0]);
        let r = is_lorenz_permutation(&theta);
        assert!(r.is_realized(), "{r:?}");
    }
}
