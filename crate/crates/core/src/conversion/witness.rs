//! Tightness constructions: the all-positive rectifier network whose decision
//! polytope needs every one of its `2^n - 1` faces, the interior witness point
//! for each face, and the threshold network that no smaller rectifier network matches.

use crate::error::{Error, Result};
use crate::network::{AffineUnit, ReluNetwork, ThresholdNetwork};

/// `sgn(-1 + R(x_1) + ... + R(x_n))` in `d >= n` dimensions.
pub fn make_theorem2_network(n: usize, d: usize) -> Result<ReluNetwork> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    if d < n {
        return Err(Error::InvalidArgument(format!("dimension {d} is smaller than n = {n}")));
    }
    let units = (0..n).map(|i| AffineUnit::axis(d, i, 0.0)).collect::<Result<_>>()?;
    ReluNetwork::new(d, units, vec![], -1.0)
}

/// A point where `-1 + sum_{i in S} x_i > 0` and the same sum over every other
/// non-empty subset is negative. `subset` is a bitmask over the first `n` coordinates.
pub fn make_theorem2_witness(n: usize, d: usize, subset: u64) -> Result<Vec<f64>> {
    if subset == 0 {
        return Err(Error::InvalidArgument("witness subset must be non-empty".into()));
    }
    if d < n {
        return Err(Error::InvalidArgument(format!("dimension {d} is smaller than n = {n}")));
    }
    if n < 64 && subset >> n != 0 {
        return Err(Error::IndexOutOfRange(format!("subset {subset:#b} exceeds n = {n}")));
    }
    let s = subset.count_ones() as f64;
    let (inside, outside) = if s > 1.0 {
        // Midpoint of (1/s, 1/(s-1)) inside; twice the bound -1/(s-1) outside.
        ((1.0 / s + 1.0 / (s - 1.0)) / 2.0, -2.0 / (s - 1.0))
    } else {
        (2.0, -3.0)
    };
    let mut x = vec![0.0; d];
    for (i, xi) in x.iter_mut().enumerate().take(n) {
        *xi = if subset >> i & 1 == 1 { inside } else { outside };
    }
    Ok(x)
}

/// `sum_{i in S} x_i - 1` for the subset bitmask `S`.
pub fn theorem2_subset_unit(n: usize, d: usize, subset: u64) -> Result<AffineUnit> {
    if d < n || (n < 64 && subset >> n != 0) {
        return Err(Error::IndexOutOfRange(format!("subset {subset:#b} with n = {n}, d = {d}")));
    }
    let w = (0..d).map(|i| if i < n && subset >> i & 1 == 1 { 1.0 } else { 0.0 }).collect();
    AffineUnit::new(w, -1.0)
}

/// Disjunction of the `2^n - 1` subset hyperplanes, optionally leaving one out.
///
/// With every hyperplane present it equals [`make_theorem2_network`].
pub fn make_theorem2_disjunction(n: usize, d: usize, skip: Option<u64>) -> Result<ThresholdNetwork> {
    if !(1..=20).contains(&n) {
        return Err(Error::SizeGuard(format!("n = {n} must be in 1..=20")));
    }
    let units = (1..1u64 << n)
        .filter(|&s| Some(s) != skip)
        .map(|s| theorem2_subset_unit(n, d, s))
        .collect::<Result<Vec<_>>>()?;
    if units.is_empty() {
        return Err(Error::InvalidArgument("no hyperplanes left".into()));
    }
    ThresholdNetwork::disjunction(d, &units)
}

/// `sgn(n - 1 + sgn(x_1) + ... + sgn(x_n))`: positive iff some `x_i >= 0`.
pub fn make_lemma4_network(n: usize, d: usize) -> Result<ThresholdNetwork> {
    if n <= 1 {
        return Err(Error::InvalidArgument(format!("n must exceed 1, got {n}")));
    }
    if d < n {
        return Err(Error::InvalidArgument(format!("dimension {d} is smaller than n = {n}")));
    }
    let units: Vec<AffineUnit> = (0..n).map(|i| AffineUnit::axis(d, i, 0.0)).collect::<Result<_>>()?;
    ThresholdNetwork::two_layer(d, &units, vec![1.0; n], n as f64 - 1.0)
}
