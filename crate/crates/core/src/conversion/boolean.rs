//! Linear-inequality Boolean units `B_{S1,S2}` and the brute-force
//! quantifier checks used as evaluation oracles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{AffineUnit, ReluNetwork};
use crate::sign::{sgn, Sign};

/// Largest `|P| + |N|` the quantifier oracles will enumerate.
pub const MAX_ENUMERATION_UNITS: usize = 20;

/// Subsets of `P` and `N` as bitmasks; bit `k` selects unit `k` in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BooleanUnitIndex {
    pub s1: u64,
    pub s2: u64,
}

impl BooleanUnitIndex {
    pub fn new(s1: u64, s2: u64) -> Self {
        Self { s1, s2 }
    }

    pub fn validate(&self, n1: usize, n2: usize) -> Result<()> {
        let fits = |mask: u64, n: usize| n >= 64 || mask >> n == 0;
        if fits(self.s1, n1) && fits(self.s2, n2) {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange(format!(
                "subset masks ({:#b}, {:#b}) exceed |P|={n1}, |N|={n2}",
                self.s1, self.s2
            )))
        }
    }
}

pub(crate) fn members(mask: u64, n: usize) -> impl Iterator<Item = usize> {
    (0..n).filter(move |k| mask >> k & 1 == 1)
}

/// The threshold unit whose sign is `B_{S1,S2}(x)`:
/// `w0 + sum_{S1} a_k(x) - sum_{S2} a_k(x) >= 0`.
pub fn boolean_unit(net: &ReluNetwork, idx: BooleanUnitIndex) -> Result<AffineUnit> {
    idx.validate(net.n1(), net.n2())?;
    let mut weights = vec![0.0; net.dim()];
    let mut bias = net.w0();
    for k in members(idx.s1, net.n1()) {
        let u = &net.positive()[k];
        weights.iter_mut().zip(u.weights()).for_each(|(w, v)| *w += v);
        bias += u.bias();
    }
    for k in members(idx.s2, net.n2()) {
        let u = &net.negative()[k];
        weights.iter_mut().zip(u.weights()).for_each(|(w, v)| *w -= v);
        bias -= u.bias();
    }
    AffineUnit::new(weights, bias)
}

struct Enumeration {
    w0: f64,
    pos: Vec<f64>,
    neg: Vec<f64>,
}

impl Enumeration {
    fn new(net: &ReluNetwork, x: &[f64]) -> Result<Self> {
        if x.len() != net.dim() {
            return Err(Error::DimensionMismatch { expected: net.dim(), got: x.len() });
        }
        if net.num_units() > MAX_ENUMERATION_UNITS {
            return Err(Error::SizeGuard(format!(
                "quantifier enumeration over {} units exceeds {MAX_ENUMERATION_UNITS}",
                net.num_units()
            )));
        }
        Ok(Self {
            w0: net.w0(),
            pos: net.positive().iter().map(|u| u.apply(x)).collect(),
            neg: net.negative().iter().map(|u| u.apply(x)).collect(),
        })
    }

    fn holds(&self, s1: u64, s2: u64) -> Result<bool> {
        let gain: f64 = members(s1, self.pos.len()).map(|k| self.pos[k]).sum();
        let loss: f64 = members(s2, self.neg.len()).map(|k| self.neg[k]).sum();
        Ok(sgn(self.w0 + gain - loss)?.is_pos())
    }

    fn p_subsets(&self) -> std::ops::Range<u64> {
        0..1u64 << self.pos.len()
    }

    fn n_subsets(&self) -> std::ops::Range<u64> {
        0..1u64 << self.neg.len()
    }
}

/// Exists `S1` in `P` such that for every `S2` in `N` the inequality holds.
pub fn check_condition2(net: &ReluNetwork, x: &[f64]) -> Result<Sign> {
    let e = Enumeration::new(net, x)?;
    for s1 in e.p_subsets() {
        let mut all = true;
        for s2 in e.n_subsets() {
            if !e.holds(s1, s2)? {
                all = false;
                break;
            }
        }
        if all {
            return Ok(Sign::Pos);
        }
    }
    Ok(Sign::Neg)
}

/// For every `S2` in `N` there exists `S1` in `P` such that the inequality holds.
pub fn check_condition3(net: &ReluNetwork, x: &[f64]) -> Result<Sign> {
    let e = Enumeration::new(net, x)?;
    for s2 in e.n_subsets() {
        let mut any = false;
        for s1 in e.p_subsets() {
            if e.holds(s1, s2)? {
                any = true;
                break;
            }
        }
        if !any {
            return Ok(Sign::Neg);
        }
    }
    Ok(Sign::Pos)
}
