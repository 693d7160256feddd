//! Lorenz permutations.
//!
//! `θ_±(k)` is the left-to-right rank of `f^k(C_±)` among the intervals
//! `C_±, f(C_±), ..., f^{m_± - 1}(C_±)` (time index to spatial rank).

mod realize;

use serde::{Deserialize, Serialize};

use crate::engine::prerenormalize;
use crate::map::LorenzMap;
use crate::{Error, Interval, Result};

pub use realize::{is_lorenz_permutation, PlWitness, Realizability};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LorenzPermutation {
    pub theta_minus: Vec<usize>,
    pub theta_plus: Vec<usize>,
}

impl LorenzPermutation {
    pub fn new(theta_minus: Vec<usize>, theta_plus: Vec<usize>) -> Result<Self> {
        for (name, t) in [("theta_minus", &theta_minus), ("theta_plus", &theta_plus)] {
            if !is_permutation(t) {
                return Err(Error::Domain(format!("{name} = {t:?} is not a permutation of 0..{}", t.len())));
            }
        }
        Ok(LorenzPermutation {
            theta_minus,
            theta_plus,
        })
    }

    pub fn m_minus(&self) -> usize {
        self.theta_minus.len()
    }

    pub fn m_plus(&self) -> usize {
        self.theta_plus.len()
    }

    /// Time indices `k > 0` whose interval lies left of `C`, for each orbit.
    /// `f^k(C_±)` is left of `C` exactly when its rank is below that of `C_±`.
    pub fn left_of_c(&self) -> (Vec<bool>, Vec<bool>) {
        let side = |t: &[usize]| t.iter().map(|&r| r < t[0]).collect::<Vec<_>>();
        (side(&self.theta_minus), side(&self.theta_plus))
    }
}

fn is_permutation(t: &[usize]) -> bool {
    let mut seen = vec![false; t.len()];
    for &x in t {
        if x >= t.len() || seen[x] {
            return false;
        }
        seen[x] = true;
    }
    !t.is_empty()
}

/// Left-to-right rank of each interval. Fails when two interiors overlap.
pub fn extract_permutation(orbit: &[Interval]) -> Result<Vec<usize>> {
    let mut idx: Vec<usize> = (0..orbit.len()).collect();
    idx.sort_by(|&a, &b| orbit[a].lo.partial_cmp(&orbit[b].lo).unwrap().then(orbit[a].hi.partial_cmp(&orbit[b].hi).unwrap()));
    for w in idx.windows(2) {
        let (a, b) = (&orbit[w[0]], &orbit[w[1]]);
        if a.overlaps(b, 1e-14) {
            return Err(Error::Orbit(format!(
                "intervals {} = [{}, {}] and {} = [{}, {}] overlap",
                w[0], a.lo, a.hi, w[1], b.lo, b.hi
            )));
        }
    }
    let mut rank = vec![0; orbit.len()];
    for (r, &i) in idx.iter().enumerate() {
        rank[i] = r;
    }
    Ok(rank)
}

/// `ρ(f) = (θ(f), θ(Rf), ..., θ(R^{n-1} f))`.
pub fn rho(map: &LorenzMap, n: usize, max_time: usize) -> Result<Vec<LorenzPermutation>> {
    Ok(prerenormalize(map, n, max_time)?.thetas())
}

/// `f ∈ S_Θ^n`: `n` times renormalizable with every `θ(R^k f)` in `thetas`.
pub fn in_s_theta(map: &LorenzMap, n: usize, thetas: &[LorenzPermutation], max_time: usize) -> Result<bool> {
    match rho(map, n, max_time) {
        Ok(seq) => Ok(seq.iter().all(|t| thetas.contains(t))),
        Err(Error::Depth { .. }) => Ok(false),
        Err(e) => Err(e),
    }
}
