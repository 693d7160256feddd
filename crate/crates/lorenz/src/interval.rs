use serde::{Deserialize, Serialize};

/// Closed real interval `[lo, hi]`, serialized as a two-element array.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl From<[f64; 2]> for Interval {
    fn from(v: [f64; 2]) -> Self {
        Interval { lo: v[0], hi: v[1] }
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

impl Interval {
    /// Interval spanned by two points in either order.
    pub fn new(a: f64, b: f64) -> Self {
        if a <= b {
            Interval { lo: a, hi: b }
        } else {
            Interval { lo: b, hi: a }
        }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_open(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    /// `other ⊂ self` up to `tol`.
    pub fn contains_interval(&self, other: &Interval, tol: f64) -> bool {
        other.lo >= self.lo - tol && other.hi <= self.hi + tol
    }

    /// Interiors intersect by more than `tol`.
    pub fn overlaps(&self, other: &Interval, tol: f64) -> bool {
        self.lo.max(other.lo) < self.hi.min(other.hi) - tol
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// Image under `x -> (x - offset) / scale` with `scale > 0`.
    pub fn rescale(&self, offset: f64, scale: f64) -> Interval {
        Interval {
            lo: (self.lo - offset) / scale,
            hi: (self.hi - offset) / scale,
        }
    }

    /// Image under `y -> offset + scale * y`.
    pub fn unscale(&self, offset: f64, scale: f64) -> Interval {
        Interval {
            lo: offset + scale * self.lo,
            hi: offset + scale * self.hi,
        }
    }
}

/// True when the two components of `outer \ inner` both have length at least
/// `tau * |outer|`.
pub fn scaled_neighborhood_check(inner: &Interval, outer: &Interval, tau: f64) -> crate::Result<bool> {
    if !outer.contains_interval(inner, 0.0) {
        return Err(crate::Error::Domain(format!(
            "[{}, {}] is not contained in [{}, {}]",
            inner.lo, inner.hi, outer.lo, outer.hi
        )));
    }
    let need = tau * outer.len();
    Ok(inner.lo - outer.lo >= need && outer.hi - inner.hi >= need)
}
